"""Long-term power loading from second-order channel statistics.

The average received SNR is approximated by
``theta^T Q theta / (theta^T W theta + 1)`` where ``Q`` collects
``|Re E{h_i h_j^*}|`` weighted by ``rho_ij`` and ``W`` the average relay noise
gains.  :func:`optimize_loading` maximises it over ``theta_bar <= theta <= 1``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .channel import ChannelStats
from .optim import DEFAULT_EPSILON, bisection_max_snr
from .sigmodel import PowerProfile, amplification, rho_matrix

__all__ = [
    "LoadingScheme",
    "LoadingMatrices",
    "build_scalar_matrices",
    "build_alamouti_matrices",
    "optimize_loading",
    "DEFAULT_THETA_BAR",
]

DEFAULT_THETA_BAR = 0.1


class LoadingScheme(str, enum.Enum):
    SCALAR = "Scalar"
    ALAMOUTI_PAIRS = "AlamoutiPairs"


@dataclass(frozen=True)
class LoadingMatrices:
    Q: np.ndarray
    W: np.ndarray
    scheme: LoadingScheme

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        W = np.asarray(self.W, dtype=float)
        if Q.shape != W.shape or Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError("Q and W must be square matrices of the same size")
        if np.any(Q < 0) or not np.allclose(Q, Q.T):
            raise ValueError("Q must be symmetric and entrywise nonnegative")
        if np.any(W != np.diag(np.diag(W))) or np.any(np.diag(W) < 0):
            raise ValueError("W must be diagonal and nonnegative")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "W", W)

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    def ratio(self, theta) -> float:
        theta = np.asarray(theta, dtype=float)
        return float(theta @ self.Q @ theta / (theta @ self.W @ theta + 1.0))


def _h_moment(stats: ChannelStats, conj_f: np.ndarray) -> np.ndarray:
    """``E{h_i h_j^*}`` where ``h_i = f_i g_i`` or ``f_i^* g_i`` when ``conj_f[i]``."""
    mu_f = np.where(conj_f, np.conj(stats.mu_f), stats.mu_f)
    Ef = np.outer(mu_f, np.conj(mu_f)) + np.diag(stats.var_f)
    Eg = np.outer(stats.mu_g, np.conj(stats.mu_g)) + np.diag(stats.var_g)
    return Ef * Eg


def build_scalar_matrices(stats: ChannelStats, profile: PowerProfile) -> LoadingMatrices:
    """``Q_ij = rho_ij |Re{E f_i f_j^* E g_i g_j^*}|`` and ``W = diag(m_gi P_i / (m_fi P_0 + 1))``."""
    E = _h_moment(stats, np.zeros(stats.num_relays, bool))
    Q = rho_matrix(profile, stats) * np.abs(np.real(E))
    W = np.diag(stats.m_g * amplification(profile, stats) ** 2)
    return LoadingMatrices(0.5 * (Q + Q.T), W, LoadingScheme.SCALAR)


def build_alamouti_matrices(stats: ChannelStats, profile: PowerProfile) -> LoadingMatrices:
    """``K x K`` loading matrices for relay pairs sharing one ``b_k theta_k``.

    Odd relays (1, 3, ...) see ``h = f g`` and even relays ``h = f^* g``;
    ``rho`` uses the block length ``T = 2``.
    """
    R = stats.num_relays
    if R % 2:
        raise ValueError("the paired scheme needs an even number of relays")
    conj_f = np.arange(R) % 2 == 1
    rho = rho_matrix(profile.with_T(2), stats)
    E = rho * _h_moment(stats, conj_f)
    odd, even = E[0::2, 0::2], E[1::2, 1::2]
    Q = np.abs(np.real(odd + even))
    w = stats.m_g * amplification(profile, stats) ** 2
    W = np.diag(w[0::2] + w[1::2])
    return LoadingMatrices(0.5 * (Q + Q.T), W, LoadingScheme.ALAMOUTI_PAIRS)


def optimize_loading(mats: LoadingMatrices, theta_bar=DEFAULT_THETA_BAR, epsilon: float = DEFAULT_EPSILON,
                     rng=None) -> np.ndarray:
    """Loading vector in ``[theta_bar, 1]^n`` maximising the approximate average SNR."""
    tb = np.asarray(theta_bar, dtype=float)
    if np.any(tb < 0) or np.any(tb > 1):
        raise ValueError("theta_bar must lie in [0, 1]")
    theta, _ = bisection_max_snr(mats.Q, mats.W, tb, epsilon, rng=rng)
    return theta
