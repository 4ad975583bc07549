"""Equivalent baseband model of the amplify-and-forward relay network.

Relay ``i`` forwards ``sqrt(P_i / (m_fi P_0 + 1)) * b_i * theta_i * (A_i r_i + B_i r_i^*)``
so that, after both hops, the destination sees ``x = S (p * h) + w``.
Receiver and relay noise have unit variance throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization, ChannelStats

__all__ = [
    "PowerProfile",
    "FeedbackState",
    "amplification",
    "rho",
    "rho_matrix",
    "per_relay",
    "power_vector",
    "weighted_channel",
    "noise_power",
    "signal_power",
    "signal_power_decomposed",
    "simulate_two_hop",
]

NOISE_VAR = 1.0


@dataclass(frozen=True)
class PowerProfile:
    """Power budget ``P_i = lambda_i * P_total`` for source (0) and relays (1..R)."""

    P_total: float
    lam: np.ndarray
    T: int = 1
    noise_var: float = NOISE_VAR

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.lam, dtype=float))
        if lam.ndim != 1 or lam.size < 2:
            raise ValueError("lam needs one entry for the source and at least one relay")
        if np.any(lam < 0) or abs(lam.sum() - 1.0) > 1e-12:
            raise ValueError("lam must be nonnegative and sum to one")
        if self.P_total <= 0:
            raise ValueError("P_total must be positive")
        if self.T not in (1, 2):
            raise ValueError("block length T must be 1 or 2")
        if self.noise_var != NOISE_VAR:
            raise ValueError("the model is normalised to unit noise variance")
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)

    @classmethod
    def equal(cls, P_total: float, num_relays: int, T: int = 1) -> "PowerProfile":
        """``P_0 = P_1 = ... = P_R = P / (R + 1)``."""
        return cls(P_total, np.full(num_relays + 1, 1.0 / (num_relays + 1)), T)

    @classmethod
    def dstc_optimal(cls, P_total: float, num_relays: int, T: int = 1) -> "PowerProfile":
        """``P_0 = P / 2`` and ``P_i = P / (2R)``."""
        lam = np.concatenate([[0.5], np.full(num_relays, 0.5 / num_relays)])
        return cls(P_total, lam, T)

    @property
    def P(self) -> np.ndarray:
        """Per-node powers ``[P_0, P_1, ..., P_R]``."""
        return self.lam * self.P_total

    @property
    def P0(self) -> float:
        return float(self.lam[0] * self.P_total)

    @property
    def num_relays(self) -> int:
        return self.lam.size - 1

    def with_power(self, P_total: float) -> "PowerProfile":
        return PowerProfile(P_total, self.lam, self.T)

    def with_T(self, T: int) -> "PowerProfile":
        return PowerProfile(self.P_total, self.lam, T)


@dataclass(frozen=True)
class FeedbackState:
    """Feedback bits ``b`` and long-term loading ``theta`` applied at the relays.

    ``b`` may carry leading batch axes (one row per channel realization);
    ``theta`` is a single long-term vector. For the Alamouti scheme both have
    one entry per relay pair.
    """

    b: np.ndarray
    theta: np.ndarray | None = None
    theta_bar: float = 0.0

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float)
        if b.ndim == 0 or not np.all(np.abs(b) == 1.0):
            raise ValueError("b entries must be +1 or -1")
        theta = np.ones(b.shape[-1]) if self.theta is None else np.atleast_1d(np.asarray(self.theta, dtype=float))
        if theta.shape != (b.shape[-1],):
            raise ValueError("theta must have one entry per feedback coefficient")
        if not 0.0 <= self.theta_bar <= 1.0:
            raise ValueError("theta_bar must lie in [0, 1]")
        if np.any(theta < self.theta_bar - 1e-12) or np.any(theta > 1.0 + 1e-12):
            raise ValueError("theta must lie in [theta_bar, 1]")
        b.setflags(write=False)
        theta.setflags(write=False)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "theta", theta)

    @classmethod
    def ones(cls, n: int) -> "FeedbackState":
        return cls(np.ones(n))


def amplification(profile: PowerProfile, stats: ChannelStats) -> np.ndarray:
    """Statistical relay gain ``sqrt(P_i / (m_fi P_0 + 1))`` for each relay."""
    _check_sizes(profile, stats)
    return np.sqrt(profile.P[1:] / (stats.m_f * profile.P0 + 1.0))


def _rho_factors(profile: PowerProfile, stats: ChannelStats) -> np.ndarray:
    # index 0 carries a unit factor so that rho(i, 0) is the single-factor extension
    return np.concatenate([[1.0], np.sqrt(profile.T * profile.P0) * amplification(profile, stats)])


def rho(i: int, j: int, profile: PowerProfile, stats: ChannelStats) -> float:
    """``rho_{i,j}`` for relay indices ``0 <= i, j <= R`` (1-based relays)."""
    R = stats.num_relays
    if not (0 <= i <= R and 0 <= j <= R):
        raise IndexError(f"relay indices must lie in [0, {R}], got ({i}, {j})")
    c = _rho_factors(profile, stats)
    return float(c[i] * c[j])


def rho_matrix(profile: PowerProfile, stats: ChannelStats) -> np.ndarray:
    """The ``R x R`` matrix of ``rho_{i,j}``, ``i, j = 1..R``."""
    c = _rho_factors(profile, stats)[1:]
    return np.outer(c, c)


def per_relay(v, num_relays: int) -> np.ndarray:
    """Expand a per-pair vector (length ``R/2``) to one entry per relay."""
    v = np.asarray(v)
    if v.shape[-1] == num_relays:
        return v
    if 2 * v.shape[-1] == num_relays:
        return np.repeat(v, 2, axis=-1)
    raise ValueError(f"expected {num_relays} or {num_relays // 2} entries, got {v.shape[-1]}")


def _check_sizes(profile, stats, real=None):
    if profile.num_relays != stats.num_relays:
        raise ValueError("profile and stats disagree on the number of relays")
    if real is not None and real.num_relays != stats.num_relays:
        raise ValueError("realization and stats disagree on the number of relays")


def power_vector(state: FeedbackState, profile: PowerProfile, stats: ChannelStats) -> np.ndarray:
    """``p_i = sqrt(P_0 P_i T / (m_fi P_0 + 1)) b_i theta_i``."""
    R = stats.num_relays
    b = per_relay(state.b, R)
    th = per_relay(state.theta, R)
    return _rho_factors(profile, stats)[1:] * b * th


def weighted_channel(real: ChannelRealization, profile: PowerProfile, stats: ChannelStats) -> np.ndarray:
    """``bar_h_i = rho_{i,0} f_i g_i`` so that ``P_s = |bar_h^H b|^2`` at ``theta = 1``."""
    _check_sizes(profile, stats, real)
    return _rho_factors(profile, stats)[1:] * real.h


def noise_power(real: ChannelRealization, state: FeedbackState, profile: PowerProfile, stats: ChannelStats):
    """Equivalent noise power ``1 + sum_i theta_i^2 P_i / (m_fi P_0 + 1) |g_i|^2``."""
    _check_sizes(profile, stats, real)
    th = per_relay(state.theta, stats.num_relays)
    a2 = amplification(profile, stats) ** 2
    return 1.0 + np.sum(th**2 * a2 * np.abs(real.g) ** 2, axis=-1)


def signal_power(real: ChannelRealization, state: FeedbackState, profile: PowerProfile, stats: ChannelStats):
    """``|sum_i p_i h_i|^2`` for the ``T = 1`` scheme."""
    p = power_vector(state, profile, stats)
    return np.abs(np.sum(p * real.h, axis=-1)) ** 2


def signal_power_decomposed(real: ChannelRealization, state: FeedbackState, profile: PowerProfile, stats: ChannelStats):
    """Split the received signal power into ``(gamma, beta)``.

    ``gamma`` collects the ``b``-independent diagonal terms and ``beta`` the
    cross terms ``sum_{i != j} rho_ij theta_i theta_j b_i b_j Re{h_i h_j^*}``.
    """
    _check_sizes(profile, stats, real)
    R = stats.num_relays
    th = per_relay(state.theta, R)
    b = per_relay(state.b, R)
    c = _rho_factors(profile, stats)[1:]
    z = c * th * real.h  # b-free weighted channel
    gamma = np.sum(np.abs(z) ** 2, axis=-1)
    zb = z * b
    total = np.abs(np.sum(zb, axis=-1)) ** 2
    # cross terms computed directly to avoid cancellation in total - gamma
    G = np.real(zb[..., :, None] * np.conj(zb[..., None, :]))
    beta = np.sum(G, axis=(-2, -1)) - np.trace(G, axis1=-2, axis2=-1)
    return gamma, beta


def simulate_two_hop(
    symbols,
    real: ChannelRealization,
    state: FeedbackState,
    profile: PowerProfile,
    stats: ChannelStats,
    rng: np.random.Generator | None = None,
    relay_maps=None,
    noiseless: bool = False,
):
    """Pass transmit blocks through both hops and return the received block.

    Parameters
    ----------
    symbols : complex array (..., T)
        Source blocks with ``E{s^H s} = 1``.
    real : ChannelRealization
        ``f`` and ``g`` of shape ``(..., R)`` broadcastable against ``symbols``.
    state : FeedbackState
    relay_maps : (matrices, conjugate) or None
        ``matrices`` is ``(R, T, T)`` and ``conjugate`` a boolean ``(R,)``:
        relay ``i`` forwards ``matrices[i] @ r_i`` or ``matrices[i] @ r_i^*``.
        ``None`` means identity without conjugation.
    noiseless : bool
        Drop relay and receiver noise.

    Returns
    -------
    complex array (..., T)
    """
    _check_sizes(profile, stats, real)
    s = np.asarray(symbols, dtype=complex)
    T = profile.T
    if s.shape[-1] != T:
        raise ValueError(f"symbol blocks must have length T={T}")
    R = stats.num_relays
    f = real.f[..., :, None]
    g = real.g
    lead = np.broadcast_shapes(s.shape[:-1], real.f.shape[:-1])

    r = np.sqrt(profile.P0 * T) * f * s[..., None, :]
    if not noiseless:
        if rng is None:
            raise ValueError("rng is required unless noiseless=True")
        r = r + _unit_noise(rng, lead + (R, T))
    if relay_maps is not None:
        mats, conj = relay_maps
        mats = np.asarray(mats, dtype=complex)
        conj = np.asarray(conj, dtype=bool)
        if mats.shape != (R, T, T) or conj.shape != (R,):
            raise ValueError("relay_maps must be ((R, T, T), (R,))")
        r = np.where(conj[:, None], np.conj(r), r)
        r = np.einsum("rts,...rs->...rt", mats, r)

    gain = amplification(profile, stats) * per_relay(state.b, R) * per_relay(state.theta, R)
    x = np.sum((gain * g)[..., :, None] * r, axis=-2)
    if not noiseless:
        x = x + _unit_noise(rng, x.shape)
    return x


def _unit_noise(rng, shape):
    z = rng.standard_normal(tuple(shape) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)
