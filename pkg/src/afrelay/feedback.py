"""Selection of the one-bit feedback coefficients ``b``.

Every selector works on a single instance or on a batch (leading axes) and
returns ``b`` normalised so that its first entry is ``+1``; the received power
only depends on ``b`` up to a global sign.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np

from .optim import DEFAULT_ROUNDS, DiagOneSdp, sign, solve_diag_one_sdp

__all__ = [
    "BitMethod",
    "BitSelectionResult",
    "cross_term",
    "select_full_search",
    "select_greedy",
    "select_sdr",
    "select_pairs_greedy",
    "select_pairs_sdr",
    "select_pairs_full_search",
    "pair_matrix",
]

MAX_FULL_SEARCH = 24


class BitMethod(str, enum.Enum):
    FULL_SEARCH = "FullSearch"
    SDR = "SDR"
    GREEDY = "Greedy"


@dataclass(frozen=True)
class BitSelectionResult:
    b: np.ndarray
    beta: np.ndarray
    objective: np.ndarray
    method: BitMethod


def cross_term(z, b):
    """``sum_{i != j} b_i b_j Re{z_i z_j^*}`` for vectors ``z`` (``..., R``)."""
    G = np.real(z[..., :, None] * np.conj(z[..., None, :]))
    bb = b[..., :, None] * b[..., None, :]
    M = G * bb
    return np.sum(M, axis=(-2, -1)) - np.trace(M, axis1=-2, axis2=-1)


def _gram(Z):
    """``Re{Z^H Z}`` for ``Z`` of shape ``(..., m, n)``."""
    return np.real(np.swapaxes(np.conj(Z), -1, -2) @ Z)


def _gram_problem(Z):
    """:class:`DiagOneSdp` for ``Re{Z^H Z}`` with its rank-``2m`` real factor."""
    L = np.concatenate([np.real(Z), np.imag(Z)], axis=-2)
    return DiagOneSdp.from_factor(np.swapaxes(L, -1, -2))


def _result(b, z, method):
    """Bundle ``b`` with objective ``|sum b z|^2`` and cross term for vectors ``z``."""
    obj = np.abs(np.sum(b * z, axis=-1)) ** 2
    return BitSelectionResult(b, cross_term(z, b), obj, method)


def _sweep_search(h):
    """Exact ``max_b |sum_i b_i h_i|`` by sweeping the phase of the sum.

    For a fixed direction ``phi`` the best signs are ``sign(Re{h e^{-i phi}})``;
    they only change at the ``2R`` angles where some ``h_i`` is orthogonal to
    ``phi``, so probing one direction inside each arc covers every candidate.
    """
    R = h.shape[-1]
    ang = np.angle(h)
    crit = np.sort(np.mod(np.concatenate([ang + np.pi / 2, ang - np.pi / 2], axis=-1), 2 * np.pi), axis=-1)
    nxt = np.concatenate([crit[..., 1:], crit[..., :1] + 2 * np.pi], axis=-1)
    mid = 0.5 * (crit + nxt)  # (..., 2R)
    cand = sign(np.real(h[..., None, :] * np.exp(-1j * mid)[..., :, None]))  # (..., 2R, R)
    val = np.abs(np.sum(cand * h[..., None, :], axis=-1))
    best = np.take_along_axis(cand, np.argmax(val, axis=-1)[..., None, None], axis=-2)[..., 0, :]
    return best


def _sign_patterns(n):
    tails = np.array(list(itertools.product([1.0, -1.0], repeat=n - 1)))
    return np.hstack([np.ones((tails.shape[0], 1)), tails])


def _enumerate_search(Z):
    """Exhaustive ``argmax_b sum_k |(Z b)_k|^2`` with ``b_1 = +1`` (``Z`` is ``(..., m, n)``)."""
    Z = np.asarray(Z, dtype=complex)
    m, n = Z.shape[-2:]
    if n == 1:
        return np.ones(Z.shape[:-2] + (1,))
    B = _sign_patterns(n)
    lead = Z.shape[:-2]
    Zf = Z.reshape((-1, m, n))
    out = np.empty((Zf.shape[0], n))
    chunk = max(1, 4_000_000 // (B.shape[0] * m))
    for s in range(0, Zf.shape[0], chunk):
        ZB = Zf[s:s + chunk] @ B.T  # (c, m, patterns)
        vals = np.sum(ZB.real**2 + ZB.imag**2, axis=1)
        out[s:s + chunk] = B[np.argmax(vals, axis=1)]
    return out.reshape(lead + (n,))


def select_full_search(bar_h, method: str = "auto") -> BitSelectionResult:
    """Exact maximiser of ``|bar_h^H b|^2`` over ``b in {-1, 1}^R``.

    ``method="enumerate"`` checks all ``2^(R-1)`` sign patterns;
    ``method="sweep"`` uses the phase sweep, which is exact because the
    objective has real rank two. ``"auto"`` enumerates up to ``R = 10``.
    """
    bar_h = np.asarray(bar_h, dtype=complex)
    R = bar_h.shape[-1]
    if R > MAX_FULL_SEARCH:
        raise ValueError(f"full search supports at most {MAX_FULL_SEARCH} relays, got {R}")
    if method == "auto":
        method = "enumerate" if R <= 10 else "sweep"
    if method == "enumerate":
        b = _enumerate_search(bar_h[..., None, :])
    elif method == "sweep":
        b = _sweep_search(bar_h)
        b = b * b[..., :1]
    else:
        raise ValueError(f"unknown full-search method {method!r}")
    return _result(b, bar_h, BitMethod.FULL_SEARCH)


def select_greedy(h_eff) -> BitSelectionResult:
    """Sequential sign alignment: ``b_i = sign(Re{h_i^* tau_{i-1}})``, ``tau_i = tau_{i-1} + b_i h_i``."""
    h = np.asarray(h_eff, dtype=complex)
    R = h.shape[-1]
    b = np.ones(h.shape)
    tau = h[..., 0].copy()
    for i in range(1, R):
        b[..., i] = sign(np.real(np.conj(h[..., i]) * tau))
        tau = tau + b[..., i] * h[..., i]
    return _result(b, h, BitMethod.GREEDY)


def select_sdr(bar_h, rng=None, randomization_rounds: int = DEFAULT_ROUNDS) -> BitSelectionResult:
    """Bits from the semidefinite relaxation of ``max b^T Re{bar_h bar_h^H} b``."""
    bar_h = np.asarray(bar_h, dtype=complex)
    if bar_h.shape[-1] == 1:
        return _result(np.ones(bar_h.shape), bar_h, BitMethod.SDR)
    sol = solve_diag_one_sdp(_gram_problem(bar_h[..., None, :]), randomization_rounds, rng)
    return _result(sol.b, bar_h, BitMethod.SDR)


def pair_matrix(h) -> np.ndarray:
    """Arrange ``[h_1, h_2, ..., h_2K]`` as the ``2 x K`` matrix with pair ``k`` in column ``k``."""
    h = np.asarray(h, dtype=complex)
    if h.shape[-1] % 2:
        raise ValueError("the paired scheme needs an even number of relays")
    K = h.shape[-1] // 2
    return np.swapaxes(h.reshape(h.shape[:-1] + (K, 2)), -1, -2)


def _pair_result(b, F, method):
    Qa = _gram(F)
    obj = np.einsum("...i,...ij,...j->...", b, Qa, b)
    bb = b[..., :, None] * b[..., None, :]
    M = Qa * bb
    beta = np.sum(M, axis=(-2, -1)) - np.trace(M, axis1=-2, axis2=-1)
    return BitSelectionResult(b, beta, obj, method)


def select_pairs_greedy(h) -> BitSelectionResult:
    """Greedy selection for relay pairs with a two-entry accumulator.

    ``h`` holds ``2K`` entries ordered pair by pair (even relays already
    conjugated); ``b`` has one entry per pair.
    """
    F = pair_matrix(h)
    K = F.shape[-1]
    b = np.ones(F.shape[:-2] + (K,))
    tau = F[..., :, 0].copy()
    for k in range(1, K):
        col = F[..., :, k]
        b[..., k] = sign(np.real(np.sum(np.conj(col) * tau, axis=-1)))
        tau = tau + b[..., k, None] * col
    return _pair_result(b, F, BitMethod.GREEDY)


def select_pairs_sdr(F, rng=None, randomization_rounds: int = DEFAULT_ROUNDS) -> BitSelectionResult:
    """SDR selection for relay pairs from the ``2 x K`` matrix ``F``; objective ``b^T Re{F^H F} b``."""
    F = np.asarray(F, dtype=complex)
    if F.shape[-2] != 2:
        raise ValueError("F must have two rows")
    K = F.shape[-1]
    if K == 1:
        return _pair_result(np.ones(F.shape[:-2] + (1,)), F, BitMethod.SDR)
    sol = solve_diag_one_sdp(_gram_problem(F), randomization_rounds, rng)
    return _pair_result(sol.b, F, BitMethod.SDR)


def select_pairs_full_search(F) -> BitSelectionResult:
    """Exhaustive selection for relay pairs."""
    F = np.asarray(F, dtype=complex)
    K = F.shape[-1]
    if K > MAX_FULL_SEARCH:
        raise ValueError(f"full search supports at most {MAX_FULL_SEARCH} pairs, got {K}")
    return _pair_result(_enumerate_search(F), F, BitMethod.FULL_SEARCH)
