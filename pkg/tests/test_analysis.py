import math

import numpy as np
import pytest
from scipy.special import expi

from afrelay.analysis import (
    bound_params,
    chernoff_ser_mc,
    closed_form_bound,
    conditional_ber_mc,
    exp_ps_diagnostic,
    q_series,
)
from afrelay.channel import ChannelStats, make_rng
from afrelay.harness import ExperimentConfig, run_point
from afrelay.powerload import build_scalar_matrices
from afrelay.sigmodel import PowerProfile


def test_q_series_values():
    assert q_series(0.0) == 0.0
    for phi in (0.5, 1.0, 4.0, 20.0):
        assert q_series(phi) == pytest.approx(expi(phi) - np.log(phi) - np.euler_gamma, rel=1e-10)
    with pytest.raises(ValueError):
        q_series(-1.0)


def test_q_series_partial_sums_bounded():
    for phi in (0.3, 2.0, 10.0):
        assert q_series(phi) <= math.exp(phi) * phi


def test_rayleigh_q_is_abar_var():
    stats = ChannelStats([0, 0], [1.0, 2.0], [0, 0], [0.5, 3.0])
    bp = bound_params(stats, [0.5, 0.25, 0.25], 100.0)
    np.testing.assert_allclose(bp.q, bp.a_bar * stats.var_g)
    assert bp.kappa > 0 and bp.alpha >= 0


def test_bound_params_validation():
    stats = ChannelStats.rayleigh(2)
    with pytest.raises(ValueError):
        bound_params(stats, [0.5, 0.5], 10.0)
    with pytest.raises(ValueError):
        bound_params(stats, [0.5, 0.25, 0.25], 10.0, c1=0)


@pytest.mark.parametrize("R", [1, 2, 4])
def test_closed_form_monotone_and_slope(R):
    stats = ChannelStats.rayleigh(R)
    prof = PowerProfile.dstc_optimal(1.0, R)
    P = np.logspace(math.log10(math.e**2) + 0.01, 8, 60)
    vals = np.array([closed_form_bound(stats, prof, p) for p in P])
    assert np.all(np.diff(vals) < 0)
    slope = (math.log(closed_form_bound(stats, prof, 1e6)) - math.log(closed_form_bound(stats, prof, 1e3))) / (
        math.log(1e6) - math.log(1e3))
    assert abs(slope + R) <= 0.15 * R


def test_closed_form_guard():
    with pytest.raises(ValueError):
        closed_form_bound(ChannelStats.rayleigh(2), PowerProfile.equal(2.0, 2))


def test_chernoff_small_power_limit():
    stats = ChannelStats.rayleigh(3)
    est = chernoff_ser_mc(stats, PowerProfile.equal(1e-9, 3), 2000, make_rng(1))
    assert est.value == pytest.approx(1.0, rel=1e-6)


def test_chernoff_drop_cross_terms_is_larger():
    stats = ChannelStats.rayleigh(4)
    prof = PowerProfile.equal(100.0, 4)
    full = chernoff_ser_mc(stats, prof, 20_000, make_rng(2))
    gamma_only = chernoff_ser_mc(stats, prof, 20_000, make_rng(2), drop_cross_terms=True)
    assert gamma_only.value > full.value
    with pytest.raises(ValueError):
        chernoff_ser_mc(stats, prof, 0, make_rng(2))


def test_conditional_ber_matches_simulation():
    cfg = ExperimentConfig(scheme="ScalarFeedback", bit_algorithm="Greedy", R=2, power_split="Equal",
                           snr_grid=(15.0,), target_errors=3000, seed=3)
    sim = run_point(cfg, 15.0)
    est = conditional_ber_mc(ChannelStats.rayleigh(2), PowerProfile.equal(10**1.5, 2), 400_000, make_rng(4),
                             bit_algorithm="Greedy")
    assert est.value == pytest.approx(sim.ber, rel=0.1)
    with pytest.raises(ValueError):
        conditional_ber_mc(ChannelStats.rayleigh(2), PowerProfile.equal(10.0, 2), 10, make_rng(4),
                           scheme="DiffScalar")


def test_importance_sampled_ber_is_unbiased():
    stats, prof = ChannelStats.rayleigh(3), PowerProfile.equal(10**2.0, 3)
    plain = conditional_ber_mc(stats, prof, 400_000, make_rng(11), bit_algorithm="Greedy")
    tilted = conditional_ber_mc(stats, prof, 100_000, make_rng(12), bit_algorithm="Greedy",
                                variance_scales=(1.0, 0.1, 0.01))
    assert abs(tilted.value - plain.value) <= 3 * math.hypot(tilted.stderr, plain.stderr)
    # Rician links: only the scattered part is tilted
    ric = ChannelStats([0.8, 0.5j, 0.3], [0.36, 0.75, 0.91], [0.6j, 0.2, 0.7], [0.64, 0.96, 0.51])
    plain = conditional_ber_mc(ric, prof, 400_000, make_rng(13), bit_algorithm="Greedy")
    tilted = conditional_ber_mc(ric, prof, 100_000, make_rng(14), bit_algorithm="Greedy",
                                variance_scales=(1.0, 0.1, 0.01))
    assert abs(tilted.value - plain.value) <= 3 * math.hypot(tilted.stderr, plain.stderr)
    with pytest.raises(ValueError):
        conditional_ber_mc(stats, prof, 10, make_rng(4), variance_scales=(1.0, 2.0))


def test_bound_dominates_ser():
    cfg = ExperimentConfig(scheme="ScalarFeedback", bit_algorithm="SDR", R=3, power_split="Equal",
                           snr_grid=(10.0,), target_errors=1000, seed=5)
    sim = run_point(cfg, 10.0)
    est = chernoff_ser_mc(ChannelStats.rayleigh(3), PowerProfile.equal(10.0, 3), 50_000, make_rng(6))
    assert sim.ser <= est.value + 3 * math.hypot(sim.ser_stderr, est.stderr)


def test_exp_ps_single_relay_exact():
    stats = ChannelStats([0.4 + 0.3j], [0.75], [0.2j], [1.5])
    prof = PowerProfile.equal(40.0, 1)
    exact, approx = exp_ps_diagnostic(stats, prof, 400_000, make_rng(7))
    assert exact == pytest.approx(approx, rel=0.01)


def test_exp_ps_approx_at_least_gamma_term():
    stats = ChannelStats.rayleigh(4)
    prof = PowerProfile.equal(100.0, 4)
    exact, approx = exp_ps_diagnostic(stats, prof, 20_000, make_rng(8), method="FullSearch")
    Q = build_scalar_matrices(stats, prof).Q
    assert approx >= np.trace(Q) - 1e-12
    assert exact >= approx
    with pytest.raises(ValueError):
        exp_ps_diagnostic(stats, prof, 10, make_rng(8), method="Nope")
