"""A scaled-down Monte Carlo study: a handful of replicates per estimator,
reporting average accuracy and parameter counts side by side.

The full-size study (hundreds of replicates, dimensions up to six, samples
up to 10,000 units) follows the same code path; scale the knobs up and add
workers if you have the cores and the patience."""

import tempfile
from pathlib import Path

from sparserc import McConfig, RefineOptions, run_experiment, two_normal_mixture
from sparserc.simulate import write_table_csv

config = McConfig(
    dgp=two_normal_mixture(2),
    n_units=1000,
    replicates=5,
    seed=2024,
    sg_levels=(2, 3),
    asg_levels=(2,),
    fkrb_q=(3, 7),
    refine=RefineOptions(steps=8, selection="cv_mse", k_folds=5),
    workers=2,
)
report = run_experiment(config)

print(f"{config.replicates} replicates, N={config.n_units}, "
      f"D={config.dgp.dim}, {report.eval_points} evaluation points\n")
print(f"{'estimator':>10} {'setting':>8} {'mean params':>12} {'rmise':>8} {'failures':>9}")
for run in report.runs:
    print(f"{run.kind:>10} {run.setting:>8} {run.mean_parameters:>12.1f} "
          f"{run.rmise:>8.4f} {run.n_failed:>9}")

out = Path(tempfile.gettempdir()) / "sparserc_table.csv"
write_table_csv(report, out)
print(f"\nsummary table written to {out}")
print(out.read_text())
