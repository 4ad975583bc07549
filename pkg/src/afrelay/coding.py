"""Distributed Alamouti coding over relay pairs and differential transmission.

Relay ``2k-1`` forwards its received block unchanged and relay ``2k`` forwards
``[[0, -1], [1, 0]] r^*``, so every pair emulates the Alamouti code.  After
conjugating the second received sample the destination sees
``x_breve = H s_breve + w_breve`` with ``H^H H`` a scaled identity.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, ChannelStats
from .sigmodel import FeedbackState, PowerProfile, power_vector, rho_matrix, simulate_two_hop

__all__ = [
    "QPSK",
    "qpsk_modulate",
    "qpsk_demodulate",
    "nearest_index",
    "DecodeError",
    "AlamoutiEquivalentChannel",
    "alamouti_relay_maps",
    "alamouti_channel_vector",
    "alamouti_equivalent",
    "alamouti_ml_decode",
    "alamouti_joint_ml_decode",
    "diff_encode",
    "diff_decode",
    "diff_alamouti_matrix",
    "diff_alamouti_encode",
    "diff_alamouti_decode",
    "diff_alamouti_decode_joint",
    "TrainingScheme",
    "train_bits_sequential",
]

# Gray-mapped QPSK: index 2*b0 + b1, in-phase carries b0 and quadrature b1
QPSK = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2)
ALAMOUTI_EVEN_MAP = np.array([[0.0, -1.0], [1.0, 0.0]])


class DecodeError(ValueError):
    """Raised when the equivalent channel carries no energy."""


def qpsk_modulate(bits):
    """Map bit pairs ``(..., 2n)`` to unit-energy QPSK symbols ``(..., n)``."""
    bits = np.asarray(bits)
    b = bits.reshape(bits.shape[:-1] + (-1, 2))
    return ((1 - 2 * b[..., 0]) + 1j * (1 - 2 * b[..., 1])) / np.sqrt(2)


def qpsk_demodulate(symbols):
    """Hard decisions on QPSK symbols; returns bits ``(..., 2n)``."""
    z = np.asarray(symbols)
    bits = np.stack([np.real(z) < 0, np.imag(z) < 0], axis=-1).astype(np.int8)
    return bits.reshape(z.shape[:-1] + (-1,))


def nearest_index(z, constellation=QPSK):
    """Index of the nearest constellation point for every entry of ``z``."""
    z = np.asarray(z)
    return np.argmin(np.abs(z[..., None] - constellation) ** 2, axis=-1)


@dataclass(frozen=True)
class AlamoutiEquivalentChannel:
    H: np.ndarray
    gamma_a: np.ndarray
    beta_a: np.ndarray

    @property
    def gain(self):
        """``gamma_a + beta_a`` so that ``H^H H = gain * I``."""
        return self.gamma_a + self.beta_a


def alamouti_relay_maps(num_relays: int):
    """Relay processing ``(matrices, conjugate)`` for :func:`afrelay.sigmodel.simulate_two_hop`."""
    if num_relays % 2:
        raise ValueError("the paired scheme needs an even number of relays")
    mats = np.tile(np.eye(2), (num_relays, 1, 1))
    mats[1::2] = ALAMOUTI_EVEN_MAP
    conj = np.arange(num_relays) % 2 == 1
    return mats, conj


def alamouti_channel_vector(real: ChannelRealization) -> np.ndarray:
    """``[f_1 g_1, f_2^* g_2, ..., f_2K^* g_2K]``."""
    if real.num_relays % 2:
        raise ValueError("the paired scheme needs an even number of relays")
    f = np.array(real.f, copy=True)
    f[..., 1::2] = np.conj(f[..., 1::2])
    return f * real.g


def _require_pairs(profile, stats):
    if stats.num_relays % 2:
        raise ValueError("the paired scheme needs an even number of relays")
    if profile.T != 2:
        raise ValueError("the paired scheme uses block length T = 2")


def alamouti_equivalent(real: ChannelRealization, state: FeedbackState, profile: PowerProfile,
                        stats: ChannelStats) -> AlamoutiEquivalentChannel:
    """Equivalent ``2 x 2`` channel ``H = sum_k H_k`` with its ``gamma_a`` and ``beta_a``."""
    _require_pairs(profile, stats)
    h = alamouti_channel_vector(real)
    ph = power_vector(state, profile, stats) * h
    a = np.sum(ph[..., 0::2], axis=-1)
    c = np.sum(ph[..., 1::2], axis=-1)
    H = np.stack([np.stack([a, -c], axis=-1), np.stack([np.conj(c), np.conj(a)], axis=-1)], axis=-2)
    gamma = np.sum(np.abs(ph) ** 2, axis=-1)

    rho = rho_matrix(profile, stats)
    bt = state.b * state.theta  # per pair
    terms = (rho[0::2, 0::2] * h[..., 0::2, None] * np.conj(h[..., None, 0::2])
             + rho[1::2, 1::2] * h[..., 1::2, None] * np.conj(h[..., None, 1::2]))
    M = np.real(terms) * bt[..., :, None] * bt[..., None, :]
    beta = np.sum(M, axis=(-2, -1)) - np.trace(M, axis1=-2, axis2=-1)
    return AlamoutiEquivalentChannel(H, gamma, beta)


def _breve(x):
    x = np.asarray(x, dtype=complex)
    return np.stack([x[..., 0], np.conj(x[..., 1])], axis=-1)


def alamouti_ml_decode(x, H, constellation=QPSK, scale: float = 1 / np.sqrt(2)):
    """Symbol-by-symbol ML decoding of one Alamouti block.

    ``x`` is the received block ``(..., 2)`` before conjugation and
    ``scale`` the amplitude applied to each transmitted symbol. Returns the
    indices ``(..., 2)`` of the decided constellation points.
    """
    H = np.asarray(H, dtype=complex)
    gain = np.real(np.sum(np.abs(H[..., :, 0]) ** 2, axis=-1))
    if np.any(gain <= 0):
        raise DecodeError("equivalent channel is zero")
    z = np.einsum("...ji,...j->...i", np.conj(H), _breve(x)) / (gain[..., None] * scale)
    z = np.stack([z[..., 0], np.conj(z[..., 1])], axis=-1)
    return nearest_index(z, constellation)


def alamouti_joint_ml_decode(x, H, constellation=QPSK, scale: float = 1 / np.sqrt(2)):
    """Exhaustive ML over all symbol pairs, ``argmin ||x_breve - H s_breve||``."""
    M = len(constellation)
    i1, i2 = np.meshgrid(np.arange(M), np.arange(M), indexing="ij")
    i1, i2 = i1.ravel(), i2.ravel()
    sb = scale * np.stack([constellation[i1], np.conj(constellation[i2])], axis=-1)  # (M^2, 2)
    pred = np.einsum("...ij,kj->...ki", H, sb)
    d = np.sum(np.abs(_breve(x)[..., None, :] - pred) ** 2, axis=-1)
    k = np.argmin(d, axis=-1)
    return np.stack([i1[k], i2[k]], axis=-1)


def diff_encode(symbols):
    """``u_l = u_{l-1} s_l`` with ``u_0 = 1``; output has one extra leading sample."""
    s = np.asarray(symbols, dtype=complex)
    u0 = np.ones(s.shape[:-1] + (1,), dtype=complex)
    return np.concatenate([u0, np.cumprod(s, axis=-1)], axis=-1)


def diff_decode(x, constellation=QPSK):
    """Indices maximising ``Re{x_{l-1} x_l^* s}``; ``x`` holds ``L + 1`` received samples."""
    x = np.asarray(x, dtype=complex)
    d = x[..., :-1] * np.conj(x[..., 1:])
    return np.argmax(np.real(d[..., None] * constellation), axis=-1)


def diff_alamouti_matrix(s1, s2):
    """``(1/sqrt 2) [[s1, -s2^*], [s2, s1^*]]``."""
    s1, s2 = np.asarray(s1, complex), np.asarray(s2, complex)
    S = np.stack([np.stack([s1, -np.conj(s2)], -1), np.stack([s2, np.conj(s1)], -1)], -2)
    return S / np.sqrt(2)


def diff_alamouti_encode(symbols):
    """Blocks ``u_l = S_l u_{l-1}`` with ``u_0 = [1, 0]``.

    ``symbols`` has shape ``(..., 2L)``; the result ``(..., L + 1, 2)`` starts
    with the reference block ``u_0``.
    """
    s = np.asarray(symbols, dtype=complex)
    if s.shape[-1] % 2:
        raise ValueError("differential Alamouti encoding takes symbol pairs")
    L = s.shape[-1] // 2
    S = diff_alamouti_matrix(s[..., 0::2], s[..., 1::2])  # (..., L, 2, 2)
    u = np.zeros(s.shape[:-1] + (L + 1, 2), dtype=complex)
    u[..., 0, 0] = 1.0
    for l in range(L):
        u[..., l + 1, :] = np.einsum("...ij,...j->...i", S[..., l, :, :], u[..., l, :])
    return u


def diff_alamouti_decode(x, constellation=QPSK):
    """Separable decoding of ``Re tr(x_{l-1} x_l^H S_l)``; returns indices ``(..., 2L)``."""
    x = np.asarray(x, dtype=complex)
    a, b = x[..., :-1, 0], x[..., :-1, 1]
    c, d = x[..., 1:, 0], x[..., 1:, 1]
    m1 = np.conj(c) * a + d * np.conj(b)
    m2 = np.conj(d) * a - c * np.conj(b)
    i1 = np.argmax(np.real(m1[..., None] * constellation), axis=-1)
    i2 = np.argmax(np.real(m2[..., None] * constellation), axis=-1)
    out = np.stack([i1, i2], axis=-1)
    return out.reshape(out.shape[:-2] + (-1,))


def diff_alamouti_decode_joint(x, constellation=QPSK):
    """Exhaustive maximisation of ``Re tr(x_{l-1} x_l^H S)`` over all symbol pairs."""
    x = np.asarray(x, dtype=complex)
    M = len(constellation)
    i1, i2 = np.meshgrid(np.arange(M), np.arange(M), indexing="ij")
    i1, i2 = i1.ravel(), i2.ravel()
    S = diff_alamouti_matrix(constellation[i1], constellation[i2])  # (M^2, 2, 2)
    prev, cur = x[..., :-1, :], x[..., 1:, :]
    # tr(x_{l-1} x_l^H S) = x_l^H S x_{l-1}
    metric = np.real(np.einsum("...i,kij,...j->...k", np.conj(cur), S, prev))
    k = np.argmax(metric, axis=-1)
    out = np.stack([i1[k], i2[k]], axis=-1)
    return out.reshape(out.shape[:-2] + (-1,))


class TrainingScheme(str, enum.Enum):
    SCALAR = "Scalar"
    ALAMOUTI_PAIRS = "AlamoutiPairs"


def train_bits_sequential(scheme, real: ChannelRealization, profile: PowerProfile, stats: ChannelStats,
                          rng=None, noiseless: bool = False):
    """Greedy bit training by received-power comparison, without CSI at the receiver.

    All coefficients start at ``+1``; coefficient ``j = 2, 3, ...`` is tried at
    ``-1`` and kept there only if the received power of the reference
    transmission grows (strictly for single relays, non-strictly for pairs).

    Returns
    -------
    b : array (..., R) or (..., K)
    slots : int
        Auxiliary time slots spent: ``2R`` for single relays, ``3K + 1`` for pairs.
    """
    scheme = TrainingScheme(scheme)
    R = stats.num_relays
    lead = real.f.shape[:-1]
    if scheme is TrainingScheme.SCALAR:
        if profile.T != 1:
            raise ValueError("single-relay training uses T = 1")
        n, u0, maps, slots = R, np.ones(lead + (1,), complex), None, 2 * R
    else:
        _require_pairs(profile, stats)
        u0 = np.zeros(lead + (2,), complex)
        u0[..., 0] = 1.0
        n, maps, slots = R // 2, alamouti_relay_maps(R), 3 * (R // 2) + 1

    def receive(b):
        st = FeedbackState(b)
        return simulate_two_hop(u0, real, st, profile, stats, rng, relay_maps=maps, noiseless=noiseless)

    b = np.ones(lead + (n,))
    prev = np.sum(np.abs(receive(b)) ** 2, axis=-1)
    for j in range(1, n):
        trial = b.copy()
        trial[..., j] = -1.0
        power = np.sum(np.abs(receive(trial)) ** 2, axis=-1)
        keep = power > prev if scheme is TrainingScheme.SCALAR else power >= prev
        b = np.where(keep[..., None], trial, b)
        prev = np.where(keep, power, prev)
    return b, slots
