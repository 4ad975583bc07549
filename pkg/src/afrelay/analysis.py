"""Error-rate bounds and diagnostics of the average-signal-power approximation.

``chernoff_ser_mc`` averages the Chernoff bound ``(c1/2) exp(-c2 SNR / 2)``
over channel draws, with the feedback bits chosen exactly as in the simulated
scheme.  ``closed_form_bound`` evaluates the large-``P`` expression whose
exponent exhibits the diversity order ``R``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .channel import ChannelRealization, ChannelStats, draw_realization
from .powerload import build_scalar_matrices
from .schemes import BitAlgorithm, Scheme, post_detection_snr, select_bits
from .sigmodel import PowerProfile, weighted_channel
from . import feedback

__all__ = [
    "QPSK_C1",
    "QPSK_C2",
    "BoundParams",
    "BoundEstimate",
    "q_series",
    "bound_params",
    "chernoff_ser_mc",
    "conditional_ber_mc",
    "closed_form_bound",
    "exp_ps_diagnostic",
]

# SER <= 2 Q(sqrt(SNR)) for unit-energy QPSK
QPSK_C1 = 2.0
QPSK_C2 = 1.0


def q_series(phi: float, rtol: float = 1e-12) -> float:
    """``sum_{k >= 1} phi^k / (k! k)``, summed until the next term is below ``rtol`` of the total."""
    if phi < 0:
        raise ValueError("phi must be nonnegative")
    if phi == 0:
        return 0.0
    total, term, k = 0.0, 1.0, 0
    while True:
        k += 1
        term *= phi / k  # phi^k / k!
        inc = term / k
        total += inc
        if k > phi and inc <= rtol * total:
            return total


@dataclass(frozen=True)
class BoundParams:
    c1: float
    c2: float
    a_bar: np.ndarray
    q: np.ndarray
    phi_g: np.ndarray
    alpha: float
    kappa: float
    R: int
    lam: np.ndarray


def bound_params(stats: ChannelStats, lam, P: float, c1: float = QPSK_C1, c2: float = QPSK_C2) -> BoundParams:
    """Constants of the large-``P`` bound for power fractions ``lam`` and total power ``P``."""
    if c1 <= 0 or c2 <= 0:
        raise ValueError("c1 and c2 must be positive")
    lam = np.asarray(lam, dtype=float)
    R = stats.num_relays
    if lam.shape != (R + 1,):
        raise ValueError("lam needs R + 1 entries")
    l0, li = lam[0], lam[1:]
    denom = stats.m_f * l0 + 1.0 / P
    alpha = float(np.max(li * stats.m_g / denom))
    a_bar = c2 * stats.var_f * l0 * li / (2.0 * denom * (1.0 + R * alpha))
    phi_g = stats.phi_g
    q = a_bar * stats.var_g + np.array([q_series(p) for p in phi_g])
    kappa = float(c1 / 2.0 * np.prod(np.exp(-phi_g) / (a_bar * stats.var_g)))
    return BoundParams(c1, c2, a_bar, q, phi_g, alpha, kappa, R, lam)


def closed_form_bound(stats: ChannelStats, profile: PowerProfile, P: float | None = None,
                      c1: float = QPSK_C1, c2: float = QPSK_C2) -> float:
    """``kappa (P^{-R (1 - log log P / log P)} + prod(q) P^{-R})``.

    ``P`` defaults to ``profile.P_total``; it must exceed ``e``.
    """
    P = profile.P_total if P is None else float(P)
    if P <= math.e:
        raise ValueError("closed-form bound needs P > e")
    bp = bound_params(stats, profile.lam, P, c1, c2)
    R = bp.R
    logP = math.log(P)
    first = -R * logP + R * math.log(logP)  # log of P^{-R(1 - loglogP/logP)}
    second = float(np.sum(np.log(bp.q))) - R * logP if np.all(bp.q > 0) else -np.inf
    return bp.kappa * (math.exp(first) + math.exp(second))


@dataclass(frozen=True)
class BoundEstimate:
    value: float
    stderr: float
    trials: int


def _mixture_weights(x, mu, var, scales):
    """Per-draw mixture-over-true density ratio of the coefficients in ``x`` (last axis)."""
    a = np.abs(x - mu) ** 2 / var
    r = np.mean(np.exp(-a[..., None] * (1.0 / scales - 1.0)) / scales, axis=-1)
    return np.prod(r, axis=-1)


def _channel_average(fn, stats, profile, trials, rng, scheme, bit_algorithm, theta, drop_cross_terms,
                     batch_size, select_kwargs, variance_scales=None) -> BoundEstimate:
    """Mean and standard error of ``fn(snr)`` over channel draws with the scheme's bit policy.

    With ``variance_scales`` the scattered part of each coefficient is drawn
    with its variance multiplied by one of the scales, picked uniformly and
    independently per coefficient.  Draws are reweighted by the ratio of the
    true density to this mixture, so deep fades are sampled often and the
    weights stay bounded when the scales include 1.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    scales = None
    if variance_scales is not None:
        scales = np.asarray(variance_scales, dtype=float).ravel()
        if scales.size == 0 or np.any(scales <= 0) or np.any(scales > 1):
            raise ValueError("variance_scales must be nonempty and lie in (0, 1]")
    scheme = Scheme(scheme)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < trials:
        n = min(batch_size, trials - done)
        real = draw_realization(stats, rng, size=n)
        if scales is not None:
            shape = real.f.shape
            sf = np.sqrt(scales[rng.integers(0, scales.size, shape)])
            sg = np.sqrt(scales[rng.integers(0, scales.size, shape)])
            real = ChannelRealization(stats.mu_f + sf * (real.f - stats.mu_f),
                                      stats.mu_g + sg * (real.g - stats.mu_g))
        if scheme in (Scheme.BRS, Scheme.DIFF_BRS):
            b = None
        else:
            kw = dict(select_kwargs)
            if BitAlgorithm(bit_algorithm) is BitAlgorithm.SEQUENTIAL_TRAINING:
                kw.setdefault("noisy_training", False)
            b = select_bits(scheme, bit_algorithm, real, profile, stats, theta, rng, **kw)
        snr = post_detection_snr(scheme, real, b, profile, stats, theta, drop_cross_terms=drop_cross_terms)
        v = fn(snr)
        if scales is not None:
            v = v / (_mixture_weights(real.f, stats.mu_f, stats.var_f, scales)
                     * _mixture_weights(real.g, stats.mu_g, stats.var_g, scales))
        total += float(v.sum())
        total_sq += float((v**2).sum())
        done += n
    mean = total / done
    var = max(total_sq / done - mean**2, 0.0)
    return BoundEstimate(mean, math.sqrt(var / done), done)


def chernoff_ser_mc(stats: ChannelStats, profile: PowerProfile, trials: int, rng, scheme="ScalarFeedback",
                    bit_algorithm="SDR", theta=None, c1: float = QPSK_C1, c2: float = QPSK_C2,
                    drop_cross_terms: bool = False, batch_size: int = 4096, **select_kwargs) -> BoundEstimate:
    """Monte Carlo estimate of ``(c1/2) E{exp(-c2 P_s / (2 P_w))}``.

    Feedback bits are chosen per draw with ``bit_algorithm`` under ``scheme``;
    ``drop_cross_terms`` gives the ``beta = 0`` variant. Training-based
    selection uses noiseless comparisons here.
    """
    return _channel_average(lambda snr: 0.5 * c1 * np.exp(-0.5 * c2 * snr), stats, profile, trials, rng,
                            scheme, bit_algorithm, theta, drop_cross_terms, batch_size, select_kwargs)


def conditional_ber_mc(stats: ChannelStats, profile: PowerProfile, trials: int, rng, scheme="ScalarFeedback",
                       bit_algorithm="SDR", theta=None, batch_size: int = 100_000,
                       variance_scales=None, **select_kwargs) -> BoundEstimate:
    """Coherent Gray-QPSK bit error rate averaged over channel draws.

    Given the channel, each bit is in error with probability
    ``Q(sqrt(SNR))`` exactly, so averaging this over draws estimates the same
    BER as counting simulated errors, with far less variance at high SNR.
    Only coherent schemes (scalar, paired, relay selection) apply.
    ``variance_scales`` (e.g. ``(1, 0.1, 0.01, 0.001)``) switches on
    importance sampling toward deep fades, which keeps the relative error
    small at high SNR where plain draws almost never hit an error event.
    """
    if Scheme(scheme) in (Scheme.DIFF_SCALAR, Scheme.DIFF_ALAMOUTI, Scheme.DIFF_BRS):
        raise ValueError("conditional BER applies to coherent schemes only")
    return _channel_average(lambda snr: 0.5 * erfc(np.sqrt(snr / 2.0)), stats, profile, trials, rng,
                            scheme, bit_algorithm, theta, False, batch_size, select_kwargs, variance_scales)


def exp_ps_diagnostic(stats: ChannelStats, profile: PowerProfile, trials: int, rng, method: str = "SDR"):
    """Monte Carlo average of ``P_s`` with per-draw optimised bits against ``1^T Q 1`` at ``theta = 1``.

    Returns
    -------
    exact_mc : float
    approx : float
    """
    prof = profile.with_T(1)
    real = draw_realization(stats, rng, size=trials)
    z = weighted_channel(real, prof, stats)
    if method == "SDR":
        res = feedback.select_sdr(z, rng)
    elif method == "FullSearch":
        res = feedback.select_full_search(z)
    elif method == "Greedy":
        res = feedback.select_greedy(z)
    else:
        raise ValueError(f"unknown method {method!r}")
    exact = float(np.mean(res.objective))
    approx = float(np.sum(build_scalar_matrices(stats, prof).Q))
    return exact, approx
