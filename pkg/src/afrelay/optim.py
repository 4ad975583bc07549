"""Optimization engines: diag-one SDP relaxation, SDP feasibility, bisection, generalized eigenvectors.

The relaxed semidefinite programs are solved through a low-rank factorization
``B = V V^T`` with block-coordinate ascent over the rows of ``V``.  Every row
update has a closed form, so the solvers need nothing beyond numpy and run
batched over a leading axis of independent instances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._kernels import mixing_factored as _mixing_factored_jit
from ._kernels import randomize_factored as _randomize_factored_jit

__all__ = [
    "DiagOneSdp",
    "SdpSolution",
    "FeasibilityProblem",
    "solve_diag_one_sdp",
    "check_feasibility",
    "bisection_max_snr",
    "aggregate_power_loading",
    "snr_ratio",
    "sign",
    "one_flip_polish",
]

RANK_ONE_TOL = 1e-8
DEFAULT_ROUNDS = 200
DEFAULT_EPSILON = 1e-4


def sign(x):
    """Elementwise sign with ``sign(0) = +1``."""
    return np.where(np.asarray(x) >= 0, 1.0, -1.0)


def _factor_rank(n: int) -> int:
    return min(n, int(np.ceil(np.sqrt(2.0 * n))) + 1)


def _check_symmetric(Q, name="Q"):
    Q = np.asarray(Q, dtype=float)
    if Q.ndim < 2 or Q.shape[-1] != Q.shape[-2]:
        raise ValueError(f"{name} must be square")
    scale = max(1.0, float(np.max(np.abs(Q)))) if Q.size else 1.0
    if not np.allclose(Q, np.swapaxes(Q, -1, -2), atol=1e-10 * scale, rtol=0):
        raise ValueError(f"{name} must be symmetric")
    return 0.5 * (Q + np.swapaxes(Q, -1, -2))


@dataclass(frozen=True)
class DiagOneSdp:
    """``max b^T Qbar b`` over ``b in {-1, 1}^n`` and its relaxation.

    ``factor``, when given, is a real ``L`` of shape ``(..., n, m)`` with
    ``Qbar = L L^T``; low-rank factors make the solver much cheaper.
    """

    Qbar: np.ndarray
    factor: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "Qbar", _check_symmetric(self.Qbar, "Qbar"))
        if self.factor is not None:
            L = np.asarray(self.factor, dtype=float)
            if L.shape[:-1] != self.Qbar.shape[:-1]:
                raise ValueError("factor must have shape (..., n, m)")
            object.__setattr__(self, "factor", L)

    @classmethod
    def from_factor(cls, L) -> "DiagOneSdp":
        L = np.asarray(L, dtype=float)
        return cls(L @ np.swapaxes(L, -1, -2), L)

    @property
    def n(self) -> int:
        return self.Qbar.shape[-1]


@dataclass(frozen=True)
class SdpSolution:
    """Output of :func:`solve_diag_one_sdp` (arrays carry the batch axes)."""

    b: np.ndarray
    objective: np.ndarray
    relaxed_value: np.ndarray
    upper_bound: np.ndarray
    rank_one: np.ndarray


def _quad(Q, b):
    return np.einsum("...i,...ij,...j->...", b, Q, b)


def _trace_qvv(Q, V):
    """``tr(Q V V^T)`` per batch entry."""
    return np.sum(np.matmul(Q, V) * V, axis=(-2, -1))


def _mixing_ascent(Q, V, max_sweeps=500, tol=1e-9):
    """Coordinate ascent on ``tr(Q V V^T)`` with unit-norm rows of ``V``."""
    n = Q.shape[-1]
    active = np.arange(Q.shape[0])
    prev = _trace_qvv(Q, V)
    for _ in range(max_sweeps):
        Qa, Va = Q[active], V[active]
        for i in range(n):
            c = np.matmul(Qa[:, i:i + 1, :], Va)[:, 0, :] - Qa[:, i, i, None] * Va[:, i, :]
            nc = np.linalg.norm(c, axis=-1, keepdims=True)
            ok = nc[:, 0] > 0
            Va[ok, i, :] = c[ok] / nc[ok]
        V[active] = Va
        cur = _trace_qvv(Qa, Va)
        done = np.abs(cur - prev[active]) <= tol * np.maximum(1.0, np.abs(cur))
        prev[active] = cur
        active = active[~done]
        if active.size == 0:
            break
    return V


def _mixing_ascent_factored(L, V, max_sweeps=500, tol=1e-9):
    """:func:`_mixing_ascent` for ``Q = L L^T``, keeping ``S = L^T V`` up to date."""
    if _mixing_factored_jit is not None:
        V = np.ascontiguousarray(V, dtype=float)
        return _mixing_factored_jit(np.ascontiguousarray(L, dtype=float), V, max_sweeps, tol)
    n, m = L.shape[-2], L.shape[-1]
    # row-major working layout: Lt (n, m, N), Vt (n, N, k), St (m, N, k)
    Lt = np.ascontiguousarray(np.transpose(L, (1, 2, 0)))
    Vt = np.ascontiguousarray(np.transpose(V, (1, 0, 2)))
    d = np.sum(Lt**2, axis=1)  # (n, N)
    St = np.einsum("imN,iNk->mNk", Lt, Vt)
    active = np.arange(L.shape[0])
    prev = np.sum(St**2, axis=(0, 2))
    for _ in range(max_sweeps):
        La, Va, Sa, da = Lt[:, :, active], Vt[:, active], St[:, active], d[:, active]
        for i in range(n):
            li = La[i]
            vi = Va[i]
            c = -da[i, :, None] * vi
            for j in range(m):
                c += li[j, :, None] * Sa[j]
            nc = np.sqrt(np.einsum("Nk,Nk->N", c, c))[:, None]
            new = np.where(nc > 0, c / np.where(nc > 0, nc, 1.0), vi)
            delta = new - vi
            for j in range(m):
                Sa[j] += li[j, :, None] * delta
            Va[i] = new
        Vt[:, active] = Va
        St[:, active] = Sa
        cur = np.sum(Sa**2, axis=(0, 2))
        done = np.abs(cur - prev[active]) <= tol * np.maximum(1.0, np.abs(cur))
        prev[active] = cur
        active = active[~done]
        if active.size == 0:
            break
    V[...] = np.transpose(Vt, (1, 0, 2))
    return V


def one_flip_polish(Q, b, max_passes=None):
    """Sequential single-coordinate flips until none increases ``b^T Q b``.

    At a fixed point ``b_i sum_{j != i} Q_ij b_j >= 0`` for every ``i``, so the
    off-diagonal part of ``b^T Q b`` is nonnegative.
    """
    b = np.array(b, dtype=float, copy=True)
    n = Q.shape[-1]
    max_passes = 4 * n + 4 if max_passes is None else max_passes
    for _ in range(max_passes):
        changed = False
        for i in range(n):
            cross = np.einsum("nj,nj->n", Q[:, i, :], b) - Q[:, i, i] * b[:, i]
            flip = b[:, i] * cross < 0
            if flip.any():
                b[flip, i] = -b[flip, i]
                changed = True
        if not changed:
            break
    return b


def _shifted_dual(Q, y):
    n = Q.shape[-1]
    Dm = -Q.copy()
    Dm[:, np.arange(n), np.arange(n)] += y
    lam_min = np.linalg.eigvalsh(Dm)[:, 0] if Q.shape[0] else np.zeros(0)
    return y.sum(axis=1) + n * np.maximum(0.0, -lam_min)


def solve_diag_one_sdp(problem, randomization_rounds: int = DEFAULT_ROUNDS, rng=None, rank: int | None = None):
    """Approximately solve ``max b^T Qbar b, b in {-1, 1}^n`` by semidefinite relaxation.

    The relaxation ``max tr(B Qbar), B >= 0, diag(B) = 1`` is solved in
    factorized form. A rank-one solution yields ``b`` directly from its
    principal eigenvector; otherwise ``b = sign(xi)`` with ``xi ~ N(0, B)`` is
    drawn ``randomization_rounds`` times and the best candidate kept. A final
    round of single flips polishes the result until no flip helps.

    Parameters
    ----------
    problem : DiagOneSdp or array (..., n, n)
    randomization_rounds : int
    rng : numpy Generator
    rank : int, optional
        Column count of the factor; defaults to ``ceil(sqrt(2n)) + 1``.

    Returns
    -------
    SdpSolution
        ``b`` has ``b[..., 0] = +1``. ``upper_bound`` is a certified upper
        bound on the relaxation optimum obtained from a feasible dual point.
    """
    if not isinstance(problem, DiagOneSdp):
        problem = DiagOneSdp(problem)
    Q = problem.Qbar
    L = problem.factor
    if rng is None:
        rng = np.random.default_rng(0)
    batch_shape = Q.shape[:-2]
    n = Q.shape[-1]
    if n < 1:
        raise ValueError("problem dimension must be >= 1")
    Q = Q.reshape((-1, n, n))
    N = Q.shape[0]
    k = rank or _factor_rank(n)

    V = rng.standard_normal((N, n, k))
    V /= np.linalg.norm(V, axis=-1, keepdims=True)
    if L is not None:
        L = L.reshape((N, n, -1))
        V = _mixing_ascent_factored(L, V)
    else:
        V = _mixing_ascent(Q, V)
    B = V @ np.swapaxes(V, -1, -2)
    relaxed = np.einsum("nij,nij->n", Q, B)

    # dual certificate: y_i = <(Q V)_i, v_i>, shifted until Diag(y) - Q is PSD
    if L is not None:
        QV = L @ (np.swapaxes(L, -1, -2) @ V)
        y = np.sum(QV * V, axis=-1)
        upper = np.empty(N)
        pos = np.all(y > 0, axis=1)
        # Diag(mu y) - L L^T >= 0 once mu >= lambda_max(L^T Diag(y)^-1 L)
        G = np.swapaxes(L[pos], -1, -2) @ (L[pos] / y[pos, :, None])
        mu = np.linalg.eigvalsh(G)[:, -1]
        upper[pos] = y[pos].sum(axis=1) * np.maximum(mu, 1.0)
        upper[~pos] = _shifted_dual(Q[~pos], y[~pos])
    else:
        y = np.einsum("nij,njk,nik->ni", Q, V, V)
        upper = _shifted_dual(Q, y)

    # B = V V^T shares its nonzero spectrum with the small k x k matrix V^T V
    evals, U = np.linalg.eigh(np.swapaxes(V, -1, -2) @ V)
    rank_one = evals[:, -1] / np.maximum(evals.sum(axis=1), 1e-300) > 1.0 - RANK_ONE_TOL
    best_b = sign(V @ U[:, :, -1:])[:, :, 0]
    best_obj = _quad(Q, best_b)

    # rounded points that already meet the certified bound cannot be improved
    certified = best_obj >= np.maximum(upper, relaxed) * (1.0 - 1e-12)
    todo = np.flatnonzero(~rank_one & ~certified)
    if todo.size and randomization_rounds > 0:
        chunk = max(1, 4_000_000 // (n * randomization_rounds))
        for start in range(0, todo.size, chunk):
            idx = todo[start:start + chunk]
            z = rng.standard_normal((idx.size, k, randomization_rounds))
            if L is not None and _randomize_factored_jit is not None:
                bb, bo = _randomize_factored_jit(np.ascontiguousarray(V[idx]), np.ascontiguousarray(L[idx]), z,
                                                 best_b[idx], best_obj[idx])
                best_b[idx], best_obj[idx] = bb, bo
                continue
            cand = sign(V[idx] @ z)  # (m, n, rounds)
            if L is not None:
                obj = np.sum(np.matmul(np.swapaxes(L[idx], -1, -2), cand) ** 2, axis=1)
            else:
                obj = np.sum(np.matmul(Q[idx], cand) * cand, axis=1)
            j = np.argmax(obj, axis=1)
            cb = cand[np.arange(idx.size), :, j]
            cobj = obj[np.arange(idx.size), j]
            better = cobj > best_obj[idx]
            best_b[idx[better]] = cb[better]
            best_obj[idx[better]] = cobj[better]

    best_b = one_flip_polish(Q, best_b)
    best_b = best_b * best_b[:, :1]
    best_obj = _quad(Q, best_b)
    upper = np.maximum(upper, relaxed)

    shape = batch_shape
    return SdpSolution(
        b=best_b.reshape(shape + (n,)),
        objective=best_obj.reshape(shape),
        relaxed_value=relaxed.reshape(shape),
        upper_bound=upper.reshape(shape),
        rank_one=rank_one.reshape(shape),
    )


@dataclass(frozen=True)
class FeasibilityProblem:
    """Find ``Theta >= 0`` with ``tr(Theta (Q - t W)) >= t`` and a box on ``diag(Theta)``."""

    Q: np.ndarray
    W: np.ndarray
    t: float
    lower_bounds: np.ndarray
    upper_bounds: np.ndarray | None = None

    def __post_init__(self):
        Q = _check_symmetric(self.Q)
        W = np.asarray(self.W, dtype=float)
        n = Q.shape[-1]
        if W.shape != (n, n) or np.any(W != np.diag(np.diag(W))) or np.any(np.diag(W) < 0):
            raise ValueError("W must be an n x n nonnegative diagonal matrix")
        lo = np.broadcast_to(np.asarray(self.lower_bounds, dtype=float), (n,)).copy()
        hi = np.ones(n) if self.upper_bounds is None else np.broadcast_to(
            np.asarray(self.upper_bounds, dtype=float), (n,)).copy()
        if np.any(lo < 0) or np.any(lo > hi) or np.any(hi > 1):
            raise ValueError("need 0 <= lower_bounds <= upper_bounds <= 1")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "lower_bounds", lo)
        object.__setattr__(self, "upper_bounds", hi)


def _box_ascent(M, V, lo, hi, max_sweeps=1000, tol=1e-12):
    """Coordinate ascent on ``tr(M V V^T)`` with row norms confined to ``[lo, hi]``."""
    n = M.shape[0]
    prev = np.einsum("ij,ik,jk->", M, V, V)
    for _ in range(max_sweeps):
        for i in range(n):
            c = M[i] @ V - M[i, i] * V[i]
            nc = np.linalg.norm(c)
            u = c / nc if nc > 0 else V[i] / max(np.linalg.norm(V[i]), 1e-300)
            if M[i, i] >= 0:
                r = hi[i]
            else:
                r = np.clip(nc / -M[i, i], lo[i], hi[i])
            V[i] = r * u
        cur = np.einsum("ij,ik,jk->", M, V, V)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            break
        prev = cur
    return V


def _max_box_trace(M, lo, hi, V0=None, rng=None):
    n = M.shape[0]
    k = _factor_rank(n)
    if V0 is None:
        rng = np.random.default_rng(0) if rng is None else rng
        V0 = np.zeros((n, k))
        V0[:, 0] = 1.0
        V0 += 1e-3 * rng.standard_normal((n, k))
        V0 *= (hi / np.linalg.norm(V0, axis=1))[:, None]
    V = _box_ascent(M, V0.copy(), np.sqrt(lo), np.sqrt(hi))
    return float(np.einsum("ij,ik,jk->", M, V, V)), V


def check_feasibility(problem: FeasibilityProblem, rng=None, V0=None):
    """Decide feasibility of one bisection step.

    Maximizes ``tr(Theta (Q - t W))`` over PSD ``Theta`` with
    ``lower_bounds <= diag(Theta) <= upper_bounds`` and compares with ``t``.

    Returns
    -------
    feasible : bool
    Theta : array or None
        The maximizing ``Theta`` when feasible.
    """
    feasible, Theta, _ = _check_feasibility(problem, rng=rng, V0=V0)
    return feasible, (Theta if feasible else None)


def _check_feasibility(problem, rng=None, V0=None):
    M = problem.Q - problem.t * problem.W
    value, V = _max_box_trace(M, problem.lower_bounds, problem.upper_bounds, V0=V0, rng=rng)
    return value >= problem.t, V @ V.T, V


def snr_ratio(theta, Q, W):
    """``theta^T Q theta / (theta^T W theta + 1)`` (batched over leading axes)."""
    theta = np.asarray(theta, dtype=float)
    return _quad(Q, theta) / (_quad(W, theta) + 1.0)


def bisection_max_snr(Q, W, theta_bar, epsilon: float = DEFAULT_EPSILON, rng=None,
                      randomization_rounds: int = DEFAULT_ROUNDS, return_history: bool = False):
    """Maximize ``theta^T Q theta / (theta^T W theta + 1)`` over ``theta_bar <= theta <= 1``.

    Bisection on the level ``t`` with a semidefinite feasibility test at each
    midpoint, starting from ``[0, 1^T Q 1]``. ``theta`` is read off the last
    feasible ``Theta``; candidates from its principal eigenvector, its
    diagonal and Gaussian randomization are clipped into the box and the one
    with the best true ratio is returned.

    Returns
    -------
    theta : array (n,)
    t_opt : float
        Last feasible level.
    history : list of (t, feasible), only if ``return_history``.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    Q = _check_symmetric(Q)
    n = Q.shape[0]
    W = np.asarray(W, dtype=float)
    tb = np.broadcast_to(np.asarray(theta_bar, dtype=float), (n,)).copy()
    if np.any(tb < 0) or np.any(tb > 1):
        raise ValueError("theta_bar must lie in [0, 1]")
    rng = np.random.default_rng(0) if rng is None else rng

    lo2 = tb**2
    t_low, t_up = 0.0, float(np.sum(Q))
    Theta = np.diag(lo2)
    V = None
    history = []
    while t_up - t_low >= epsilon:
        t = 0.5 * (t_low + t_up)
        prob = FeasibilityProblem(Q, W, t, lo2)
        ok, Th, Vt = _check_feasibility(prob, rng=rng, V0=V)
        history.append((t, bool(ok)))
        if ok:
            t_low, Theta, V = t, Th, Vt
        else:
            t_up = t

    cands = [np.ones(n), np.sqrt(np.clip(np.diag(Theta), 0, None))]
    w, U = np.linalg.eigh(Theta)
    cands.append(np.sqrt(max(w[-1], 0.0)) * np.abs(U[:, -1]))
    if w[-1] / max(w.sum(), 1e-300) <= 1.0 - RANK_ONE_TOL and randomization_rounds > 0:
        L = U * np.sqrt(np.clip(w, 0, None))
        xi = L @ rng.standard_normal((n, randomization_rounds))
        cands.extend(np.abs(xi).T)
    C = np.clip(np.array(cands), tb, 1.0)
    ratios = snr_ratio(C, Q, W)
    theta = C[int(np.argmax(ratios))]
    if return_history:
        return theta, t_low, history
    return theta, t_low


def aggregate_power_loading(Q, W, R: int):
    """Principal generalized eigenvector of ``(Q, W + I/R)`` scaled to ``theta^T theta = R``.

    Ties in the top eigenvalue are broken by projecting the all-ones vector
    onto the top eigenspace; the global sign makes the components sum to a
    nonnegative value.
    """
    Q = _check_symmetric(Q)
    n = Q.shape[0]
    Bm = np.asarray(W, dtype=float) + np.eye(n) / R
    w, U = scipy.linalg.eigh(Q, Bm)  # U^T Bm U = I
    top = np.flatnonzero(w >= w[-1] - 1e-10 * max(1.0, abs(w[-1])))
    Ut = U[:, top]
    theta = Ut @ (Ut.T @ Bm @ np.ones(n))
    if np.linalg.norm(theta) < 1e-12:
        theta = U[:, -1]
    theta = theta * np.sqrt(R / (theta @ theta))
    s = theta.sum()
    if s < 0 or (s == 0 and theta[np.flatnonzero(theta)[0]] < 0):
        theta = -theta
    return theta
