"""Does anything in the texture track the order in which images were taken?

Two "treated" groups drift (a blur ramp over the series) while a control
group stays put. Link discovery is run on each group's own rows and on the
pooled table, where progress runs 1..60 across all groups.

Run:  python3 demos/progress_links.py [outdir]
"""

import sys

from ilsc import ExperimentConfig, run_experiment
from ilsc.io import write_experiment

ramp = {"count": 20, "pupil_radius": 0.2, "blur_sigma_ramp": [0.0, 2.0]}
cfg = ExperimentConfig.from_dict(
    {
        "groups": [
            {"name": "S", "params": ramp},
            {"name": "A", "params": ramp},
            {"name": "EM", "params": {"count": 20, "pupil_radius": 0.2}},
        ],
        "seed": 0,
    }
)
result = run_experiment(cfg)

for name, report in result.group_links.items():
    linked = ", ".join(f"{a} ({s:.2f} bits)" for a, s, _ in report.incident_edges)
    print(f"{name:>3}: {linked or 'no link to progress'}")
print(f"pooled: {', '.join(result.links.linked) or 'no link to progress'}")

for c in result.comparisons:
    print(f"{c.name}: accuracy {c.report.accuracy:.2f}")

if len(sys.argv) > 1:
    for path in write_experiment(result, sys.argv[1]):
        print("wrote", path)
