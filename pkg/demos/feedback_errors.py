#######################################################################
# how erroneous feedback bits hurt single-relay vs paired feedback
#######################################################################
#
# Every fed-back bit is flipped with probability Pe. With single relays one
# wrong sign among four relays costs diversity; with relay pairs the paired
# code keeps its orthogonal structure and only one bit is at risk.

from afrelay.harness import ExperimentConfig, run_experiment

base = ExperimentConfig(R=4, power_split="DstcOptimal", bit_algorithm="SDR", snr_grid=(10.0, 15.0, 20.0, 25.0),
                        target_errors=200, seed=5, batch_size=10_000)

rows = {}
for scheme in ("ScalarFeedback", "AlamoutiPairs", "BRS"):
    for pe in (0.0, 0.01):
        rows[f"{scheme} Pe={pe:g}"] = run_experiment(base.replace(scheme=scheme, feedback_error_prob=pe))

print(f"{'':26s}" + "".join(f"{s:>10.0f} dB" for s in base.snr_grid))
for name, curve in rows.items():
    print(f"{name:26s}" + "".join(f"{b:13.2e}" for b in curve.ber))
