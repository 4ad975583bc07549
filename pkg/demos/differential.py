#######################################################################
# differential transmission with trained feedback bits
#######################################################################
#
# Without channel knowledge at the receiver the bits are found by trying one
# sign flip per training slot and keeping it if the received power grows.
# Data then goes out differentially and is detected from consecutive samples.
# Block error rates are measured on blocks of four symbols.

from afrelay.harness import ExperimentConfig, run_experiment

base = ExperimentConfig(R=4, power_split="Equal", bit_algorithm="SequentialTraining", block_symbols=4,
                        snr_grid=(10.0, 15.0, 20.0, 25.0), target_errors=200, seed=3, batch_size=10_000)

schemes = {"single relays": "DiffScalar", "relay pairs": "DiffAlamouti", "best relay": "DiffBRS"}
curves = {k: run_experiment(base.replace(scheme=v)) for k, v in schemes.items()}

print("snr_db  " + "  ".join(f"{k:>13s}" for k in curves))
for i, snr in enumerate(base.snr_grid):
    print(f"{snr:6.1f}  " + "  ".join(f"{c.bler[i]:13.2e}" for c in curves.values()))
