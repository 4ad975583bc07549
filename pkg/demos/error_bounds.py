#######################################################################
# simulated error rates against the Chernoff and large-power bounds
#######################################################################
#
# For QPSK the symbol error rate is at most 2 Q(sqrt(SNR)) <= exp(-SNR/2).
# Averaging this over channel draws (with the same bit policy as the
# simulation) gives the Chernoff estimate; the closed form bounds it again
# for large power and shows the diversity order R.

import math

from afrelay.analysis import chernoff_ser_mc, closed_form_bound
from afrelay.channel import ChannelStats, make_rng
from afrelay.harness import ExperimentConfig, run_point
from afrelay.sigmodel import PowerProfile

R = 3
stats = ChannelStats.rayleigh(R)
cfg = ExperimentConfig(R=R, bit_algorithm="SDR", power_split="Equal", target_errors=300, seed=6)

print(" snr_db   simulated SER   Chernoff (+-1 SE)       closed form")
for snr in (5.0, 10.0, 15.0, 20.0, 25.0):
    prof = PowerProfile.equal(10 ** (snr / 10), R)
    pt = run_point(cfg, snr)
    est = chernoff_ser_mc(stats, prof, 50_000, make_rng(7, int(snr)))
    closed = closed_form_bound(stats, prof) if prof.P_total > math.e else float("nan")
    print(f"{snr:7.1f}   {pt.ser:13.3e}   {est.value:9.3e} +- {est.stderr:8.1e}   {closed:11.3e}")

print("\nclosed-form slope against log10 P (tends to -R as P grows):")
prof = PowerProfile.equal(1.0, R)
for lo, hi in ((1e3, 1e4), (1e5, 1e6), (1e8, 1e9)):
    s = math.log10(closed_form_bound(stats, prof, hi) / closed_form_bound(stats, prof, lo))
    print(f"  P in [{lo:.0e}, {hi:.0e}]: {s:.2f}")
