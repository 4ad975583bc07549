#######################################################################
# long-term power loading for relays scattered between source and sink
#######################################################################
#
# Relays are dropped uniformly in a disk of radius 0.5 halfway between a
# source and a destination 2 units apart (path-loss exponent 3). The loading
# theta_i in [0.1, 1] depends only on channel statistics and maximizes the
# approximate average SNR theta^T Q theta / (theta^T W theta + 1).

import numpy as np

from afrelay.channel import draw_realization, make_rng, place_relays_geometry
from afrelay.feedback import select_full_search
from afrelay.powerload import build_scalar_matrices, optimize_loading
from afrelay.sigmodel import PowerProfile, noise_power, FeedbackState, weighted_channel

R = 4
P = 10 ** 2.0  # 20 dB

for los in (True, False):
    stats = place_relays_geometry(R, rng=make_rng(4), los=los)
    prof = PowerProfile.equal(P, R)
    mats = build_scalar_matrices(stats, prof)
    theta = optimize_loading(mats, theta_bar=0.1)

    print(f"\n{'LOS' if los else 'NLOS'} relays")
    print("  m_f      ", np.round(stats.m_f, 3))
    print("  m_g      ", np.round(stats.m_g, 3))
    print("  theta    ", np.round(theta, 3))

    # exact average SNR with per-draw optimal bits, against the approximation
    real = draw_realization(stats, make_rng(5), size=50_000)
    for label, th in (("theta = 1", np.ones(R)), ("loaded", theta)):
        z = weighted_channel(real, prof, stats) * th
        ps = select_full_search(z).objective
        pw = noise_power(real, FeedbackState(np.ones(R), th), prof, stats)
        print(f"  {label:10s} approx SNR {mats.ratio(th):8.2f}   "
              f"E{{P_s}}/E{{P_w}} {ps.mean() / pw.mean():8.2f}   E{{P_s/P_w}} {np.mean(ps / pw):8.2f}")
