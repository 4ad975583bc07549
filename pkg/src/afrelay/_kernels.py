"""Compiled inner loops for the factored mixing method.

Falls back to ``None`` when numba is unavailable so callers can use their
numpy path instead.
"""

from __future__ import annotations

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None


def _mixing_factored_py(L, V, max_sweeps, tol):
    N, n, m = L.shape
    k = V.shape[2]
    S = np.zeros((m, k))
    c = np.zeros(k)
    for t in range(N):
        S[:] = 0.0
        for i in range(n):
            for j in range(m):
                for q in range(k):
                    S[j, q] += L[t, i, j] * V[t, i, q]
        prev = 0.0
        for j in range(m):
            for q in range(k):
                prev += S[j, q] ** 2
        for _ in range(max_sweeps):
            for i in range(n):
                di = 0.0
                for j in range(m):
                    di += L[t, i, j] ** 2
                nrm = 0.0
                for q in range(k):
                    acc = -di * V[t, i, q]
                    for j in range(m):
                        acc += L[t, i, j] * S[j, q]
                    c[q] = acc
                    nrm += acc * acc
                if nrm > 0.0:
                    nrm = np.sqrt(nrm)
                    for q in range(k):
                        nv = c[q] / nrm
                        dv = nv - V[t, i, q]
                        for j in range(m):
                            S[j, q] += L[t, i, j] * dv
                        V[t, i, q] = nv
            cur = 0.0
            for j in range(m):
                for q in range(k):
                    cur += S[j, q] ** 2
            if abs(cur - prev) <= tol * max(1.0, abs(cur)):
                break
            prev = cur
    return V


mixing_factored = numba.njit(cache=True, nogil=True)(_mixing_factored_py) if numba is not None else None


def _randomize_factored_py(V, L, Z, best_b, best_obj):
    N, n, k = V.shape
    m = L.shape[2]
    rounds = Z.shape[2]
    b = np.empty(n)
    s = np.empty(m)
    for t in range(N):
        for r in range(rounds):
            for j in range(m):
                s[j] = 0.0
            for i in range(n):
                x = 0.0
                for q in range(k):
                    x += V[t, i, q] * Z[t, q, r]
                b[i] = 1.0 if x >= 0.0 else -1.0
                for j in range(m):
                    s[j] += L[t, i, j] * b[i]
            obj = 0.0
            for j in range(m):
                obj += s[j] * s[j]
            if obj > best_obj[t]:
                best_obj[t] = obj
                for i in range(n):
                    best_b[t, i] = b[i]
    return best_b, best_obj


randomize_factored = (numba.njit(cache=True, nogil=True)(_randomize_factored_py)
                      if numba is not None else None)
