"""Transmission schemes and their per-realization bit selection.

Shared by the Monte Carlo harness and the analytical bounds so that a bound
always certifies the exact policy that was simulated.
"""

from __future__ import annotations

import enum

import numpy as np

from . import feedback
from .channel import ChannelRealization, ChannelStats
from .coding import alamouti_channel_vector, alamouti_equivalent, train_bits_sequential
from .sigmodel import (
    FeedbackState,
    PowerProfile,
    amplification,
    noise_power,
    per_relay,
    power_vector,
)

__all__ = [
    "Scheme",
    "BitAlgorithm",
    "uses_pairs",
    "is_differential",
    "scheme_profile",
    "selection_input",
    "select_bits",
    "flip_feedback",
    "brs_select",
    "post_detection_snr",
]


class Scheme(str, enum.Enum):
    SCALAR_FEEDBACK = "ScalarFeedback"
    ALAMOUTI_PAIRS = "AlamoutiPairs"
    DIFF_SCALAR = "DiffScalar"
    DIFF_ALAMOUTI = "DiffAlamouti"
    BRS = "BRS"
    DIFF_BRS = "DiffBRS"


class BitAlgorithm(str, enum.Enum):
    FULL_SEARCH = "FullSearch"
    SDR = "SDR"
    GREEDY = "Greedy"
    SEQUENTIAL_TRAINING = "SequentialTraining"


def uses_pairs(scheme) -> bool:
    return Scheme(scheme) in (Scheme.ALAMOUTI_PAIRS, Scheme.DIFF_ALAMOUTI)


def is_differential(scheme) -> bool:
    return Scheme(scheme) in (Scheme.DIFF_SCALAR, Scheme.DIFF_ALAMOUTI, Scheme.DIFF_BRS)


def scheme_profile(scheme, profile: PowerProfile) -> PowerProfile:
    """Profile with the block length the scheme transmits with."""
    return profile.with_T(2 if uses_pairs(scheme) else 1)


def selection_input(scheme, real: ChannelRealization, profile: PowerProfile, stats: ChannelStats,
                    theta=None, weighting: str = "weighted"):
    """Per-relay complex gains the selectors align.

    ``weighting="weighted"`` uses ``rho_{i,0} theta_i h_i`` so unequal relay
    powers are honoured; ``"raw"`` uses the bare channel ``h``.
    """
    pairs = uses_pairs(scheme)
    h = alamouti_channel_vector(real) if pairs else real.h
    if weighting == "raw":
        return h
    if weighting != "weighted":
        raise ValueError(f"unknown weighting {weighting!r}")
    R = stats.num_relays
    n = R // 2 if pairs else R
    th = np.ones(n) if theta is None else np.asarray(theta, float)
    st = FeedbackState(np.ones(n), th)
    return power_vector(st, scheme_profile(scheme, profile), stats) * h


def select_bits(scheme, algorithm, real: ChannelRealization, profile: PowerProfile, stats: ChannelStats,
                theta=None, rng=None, weighting: str = "weighted", noisy_training: bool = True,
                randomization_rounds: int = 200):
    """Feedback bits for every realization in ``real``: ``(..., R)`` or ``(..., K)`` for pairs."""
    scheme, algorithm = Scheme(scheme), BitAlgorithm(algorithm)
    pairs = uses_pairs(scheme)
    if algorithm is BitAlgorithm.SEQUENTIAL_TRAINING:
        b, _ = train_bits_sequential("AlamoutiPairs" if pairs else "Scalar", real,
                                     scheme_profile(scheme, profile), stats, rng, noiseless=not noisy_training)
        return b
    z = selection_input(scheme, real, profile, stats, theta, weighting)
    if pairs:
        F = feedback.pair_matrix(z)
        if algorithm is BitAlgorithm.FULL_SEARCH:
            return feedback.select_pairs_full_search(F).b
        if algorithm is BitAlgorithm.SDR:
            return feedback.select_pairs_sdr(F, rng, randomization_rounds).b
        return feedback.select_pairs_greedy(z).b
    if algorithm is BitAlgorithm.FULL_SEARCH:
        return feedback.select_full_search(z).b
    if algorithm is BitAlgorithm.SDR:
        return feedback.select_sdr(z, rng, randomization_rounds).b
    return feedback.select_greedy(z).b


def flip_feedback(b, prob: float, rng):
    """Flip every fed-back coefficient independently with probability ``prob``.

    The first coefficient is fixed to ``+1`` by convention and never sent.
    """
    b = np.array(b, dtype=float, copy=True)
    if prob <= 0 or b.shape[-1] < 2:
        return b
    flips = rng.uniform(size=b[..., 1:].shape) < prob
    b[..., 1:] = np.where(flips, -b[..., 1:], b[..., 1:])
    return b


def brs_select(real: ChannelRealization, profile: PowerProfile, stats: ChannelStats):
    """Best relay: ``argmax_i |f_i g_i|^2 P_i / (1 + m_fi P_0 + |g_i|^2 P_i)`` (0-based)."""
    P = profile.P[1:]
    g2 = np.abs(real.g) ** 2
    metric = np.abs(real.h) ** 2 * P / (1.0 + stats.m_f * profile.P0 + g2 * P)
    return np.argmax(metric, axis=-1)


def post_detection_snr(scheme, real: ChannelRealization, b, profile: PowerProfile, stats: ChannelStats,
                       theta=None, relay=None, drop_cross_terms: bool = False):
    """Per-symbol SNR after coherent combining, ``P_s / P_w``.

    For the paired scheme the matched-filter output gives
    ``(gamma_a + beta_a) / (2 P_w)``; for relay selection only ``relay``
    (0-based, per realization) transmits. ``drop_cross_terms`` evaluates the
    ``beta = 0`` variant.
    """
    scheme = Scheme(scheme)
    R = stats.num_relays
    if scheme in (Scheme.BRS, Scheme.DIFF_BRS):
        if relay is None:
            relay = brs_select(real, profile, stats)
        a2 = amplification(profile, stats) ** 2
        i = np.asarray(relay)[..., None]
        h2 = np.take_along_axis(np.abs(real.h) ** 2, i, -1)[..., 0]
        g2 = np.take_along_axis(np.abs(real.g) ** 2, i, -1)[..., 0]
        a2i = a2[np.asarray(relay)]
        return profile.P0 * a2i * h2 / (1.0 + a2i * g2)

    pairs = uses_pairs(scheme)
    n = R // 2 if pairs else R
    th = np.ones(n) if theta is None else np.asarray(theta, float)
    state = FeedbackState(b, th)
    Pw = noise_power(real, state, profile, stats)
    if pairs:
        eq = alamouti_equivalent(real, state, scheme_profile(scheme, profile), stats)
        Ps = eq.gamma_a if drop_cross_terms else eq.gain
        return Ps / (2.0 * Pw)
    prof = scheme_profile(scheme, profile)
    z = power_vector(FeedbackState(np.ones(b.shape), th), prof, stats) * real.h
    if drop_cross_terms:
        Ps = np.sum(np.abs(z) ** 2, axis=-1)
    else:
        Ps = np.abs(np.sum(per_relay(b, R) * z, axis=-1)) ** 2
    return Ps / Pw
