"""Small-sample estimator comparison: a 1% hourly failure rate observed for 50 hours.

Runs 200 replications and prints mean width, inapplicable count and final coverage
for each estimator at a few checkpoints.
"""

from credalcfr.cfr import load_fixture
from credalcfr.oltsim import SimulationConfig, compare_traces, run_replications

config = SimulationConfig.from_dict(load_fixture("sim_small_sample.json"))
traces = run_replications(config, range(1, 201))
summary = compare_traces(r for t in traces for r in t.rows)

hours = ["1", "3", "10", "25", "50"]
print("estimator".ljust(28) + "".join(f"w@{h}".rjust(10) for h in hours) + "  final coverage")
for key, s in summary.items():
    widths = "".join(("-" if s["mean_width"][h] is None else f"{s['mean_width'][h]:.4f}").rjust(10) for h in hours)
    print(s["estimator"].ljust(28) + widths + f"  {s['final_coverage']:.3f}")
print()
for key, s in summary.items():
    print(f"{s['estimator']:28s} bounds>1: {s['bounds_above_1']:5d}  bounds<0: {s['bounds_below_0']:5d}  "
          f"first applicable in every run: {s['first_applicable_checkpoint']}")
