#!/usr/bin/env python3
"""Run a reduced Monte Carlo sweep and aggregate it into plot-ready cells.

The same flow is available from the command line:

    fdiab run --out results.csv --trials 20
    fdiab figures --results results.csv --out cells.csv --fig fig4a
"""

from dataclasses import replace

from fdiab import ExperimentConfig, aggregate_figure, run_experiment

cfg = replace(
    ExperimentConfig(),
    subcarriers=64, num_taps=32,
    snr_db_grid=(0.0, 15.0),
    sigma_e_grid=(0.0, 0.05, 0.2, 0.7),
    trials=10,
    master_seed=3,
)
cfg.validate()

print(f"running {cfg.trials} trials of {cfg.experiments} at reduced scale...")
result = run_experiment(cfg)
print(f"{len(result.rows)} sample rows\n")

print("backhaul comparison at 15 dB (mean +- std over trials):")
for cell in aggregate_figure(result.rows, "fig4a"):
    if cell["snr_db"] == 15.0 and cell["ps_kind"] in ("ideal", "passive"):
        print(f"  {cell['scheme']:>16} {cell['duplex']:>15} {cell['ps_kind']:>8}"
              f"  {cell['se_mean']:6.1f} +- {cell['se_std']:.1f}")

print("\ncancellation ability versus receive chains per subarray:")
for cell in aggregate_figure(result.rows, "fig6"):
    print(f"  {cell['scheme']:>18} {cell['duplex']:>15} L={cell['L']}"
          f"  {cell['se_mean']:6.1f}")
