"""A small reproducible sweep: detectors x SNR grid -> CSV.

Trial seeds are ``base_seed + trial_index``, so the output is a pure
function of the configuration: rerunning, reordering, or changing the
thread count cannot change a single count.  The CSV feeds the plotting
frontend; see frontend/README.md.
"""

import sys

from ldsaud import ExperimentConfig, run_sweep, wilson_interval

cfg = ExperimentConfig(
    detectors=("cover-mpa", "mpa", "tl-mpa", "omp-mpa", "amp-mpa"),
    lambdas=(0.1,),
    snr_grid=(2.0, 6.0, 10.0),
    trials=2000,
    seed=424242,
    out_path="demo_sweep.csv",
)

results = run_sweep(cfg, out_path=cfg.out_path, progress=True)

print(f"\n{'detector':12s} {'snr':>5s} {'pm':>10s} {'pf':>10s} {'ser':>10s}   95% interval of pm")
for row in results.rows:
    lo, hi = wilson_interval(row.miss_count, 8 * row.trials)
    print(f"{row.detector:12s} {row.snr_db:5.1f} {row.pm:10.2e} {row.pf:10.2e} "
          f"{row.ser:10.2e}   [{lo:.2e}, {hi:.2e}]")

print(f"\nwrote {cfg.out_path}", file=sys.stderr)
