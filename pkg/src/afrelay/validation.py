"""Fast self-checks of the model invariants, used by ``afrelay validate``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelStats, draw_realization, make_rng
from .coding import (
    alamouti_equivalent,
    diff_alamouti_decode,
    diff_alamouti_encode,
    diff_decode,
    diff_encode,
    QPSK,
)
from .feedback import pair_matrix, select_full_search, select_greedy, select_pairs_greedy, select_pairs_sdr, select_sdr
from .harness import ExperimentConfig, run_experiment
from .optim import DiagOneSdp, solve_diag_one_sdp
from .powerload import build_scalar_matrices, optimize_loading
from .sigmodel import FeedbackState, PowerProfile, signal_power, signal_power_decomposed, weighted_channel
from .coding import alamouti_channel_vector

__all__ = ["CheckResult", "run_invariant_suite"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _cross_terms_nonnegative(seed):
    worst = np.inf
    for R in (2, 4, 8, 16):
        stats = ChannelStats.rayleigh(R)
        prof = PowerProfile.equal(100.0, R)
        real = draw_realization(stats, make_rng(seed, 10, R), size=500)
        z = weighted_channel(real, prof, stats)
        for res in (select_sdr(z, make_rng(seed, 11, R)), select_greedy(z)):
            worst = min(worst, float(res.beta.min()))
        if R <= 10:
            worst = min(worst, float(select_full_search(z).beta.min()))
        zp = alamouti_channel_vector(real) * np.sqrt(prof.with_T(2).P[1:])
        for res in (select_pairs_sdr(pair_matrix(zp), make_rng(seed, 12, R)), select_pairs_greedy(zp)):
            worst = min(worst, float(res.beta.min()))
    return worst >= -1e-10, f"min cross term {worst:.3g}"


def _decomposition(seed):
    R = 6
    stats = ChannelStats.rayleigh(R)
    prof = PowerProfile.equal(50.0, R)
    real = draw_realization(stats, make_rng(seed, 20), size=200)
    rng = make_rng(seed, 21)
    st = FeedbackState(np.where(rng.uniform(size=(200, R)) < 0.5, -1.0, 1.0), rng.uniform(0.1, 1, R))
    g, b = signal_power_decomposed(real, st, prof, stats)
    err = float(np.max(np.abs(g + b - signal_power(real, st, prof, stats))))
    return err < 1e-9 * max(1.0, float(np.max(g))), f"max |gamma + beta - P_s| {err:.3g}"


def _sdr_bound(seed):
    rng = make_rng(seed, 30)
    z = (rng.standard_normal((200, 9)) + 1j * rng.standard_normal((200, 9))) / np.sqrt(2)
    Q = np.real(z[:, :, None] * np.conj(z[:, None, :]))
    sol = solve_diag_one_sdp(DiagOneSdp(Q), rng=make_rng(seed, 31))
    opt = select_full_search(z).objective
    ok = np.all(sol.objective <= opt * (1 + 1e-9)) and np.all(opt <= sol.upper_bound * (1 + 1e-6))
    ratio = float(np.min(sol.objective / opt))
    return bool(ok), f"worst SDR / optimum {ratio:.4f}"


def _alamouti_orthogonality(seed):
    R = 6
    stats = ChannelStats.rayleigh(R)
    prof = PowerProfile.equal(30.0, R).with_T(2)
    real = draw_realization(stats, make_rng(seed, 40), size=1000)
    rng = make_rng(seed, 41)
    st = FeedbackState(np.where(rng.uniform(size=(1000, R // 2)) < 0.5, -1.0, 1.0))
    eq = alamouti_equivalent(real, st, prof, stats)
    HH = np.conj(np.swapaxes(eq.H, -1, -2)) @ eq.H
    err = float(np.max(np.abs(HH - eq.gain[:, None, None] * np.eye(2))) / np.max(eq.gain))
    return err < 1e-10, f"relative deviation {err:.3g}"


def _differential_roundtrip(seed):
    idx = make_rng(seed, 50).integers(0, 4, size=(500, 8))
    ok1 = np.array_equal(diff_decode(diff_encode(QPSK[idx])), idx)
    ok2 = np.array_equal(diff_alamouti_decode(diff_alamouti_encode(QPSK[idx])), idx)
    return ok1 and ok2, "noiseless recovery" + ("" if ok1 and ok2 else " failed")


def _loading_box(seed):
    stats = ChannelStats(np.full(3, 0.5 + 0.5j), np.full(3, 0.5), np.full(3, 0.5 + 0.5j), np.full(3, 0.5))
    mats = build_scalar_matrices(stats, PowerProfile.equal(100.0, 3))
    theta = optimize_loading(mats, 0.1, rng=make_rng(seed, 60))
    ok = bool(np.all(theta >= 0.1) and np.all(theta <= 1))
    return ok, "theta " + np.array2string(theta, precision=3)


def _determinism(seed):
    cfg = ExperimentConfig(R=2, snr_grid=(5.0,), max_trials=400, batch_size=200, seed=seed)
    a = run_experiment(cfg).to_csv()
    b = run_experiment(cfg).to_csv()
    return a == b, "identical CSV" if a == b else "CSV differs between runs"


_CHECKS = [
    ("cross terms nonnegative", _cross_terms_nonnegative),
    ("signal power decomposition", _decomposition),
    ("SDR below optimum and relaxation bound", _sdr_bound),
    ("Alamouti orthogonality", _alamouti_orthogonality),
    ("differential round trip", _differential_roundtrip),
    ("loading respects box", _loading_box),
    ("determinism", _determinism),
]


def run_invariant_suite(seed: int = 2024):
    out = []
    for name, fn in _CHECKS:
        try:
            ok, detail = fn(seed)
        except Exception as exc:  # a crash is a failed check, reported like the others
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail))
    return out
