"""Same square annulus, two metrics: the geodesic kernel cannot jump the walls.

    python demos/channel_metric.py [out_dir]

Writes snapshot heatmaps (PGM) for both runs and prints the classification.
"""
import sys
from pathlib import Path

from nonloc_front import scenarios as scn

out = Path(sys.argv[1] if len(sys.argv) > 1 else "channel-demo")
for name in ("fig-square-annulus-geo", "fig-square-annulus-euclid"):
    res = scn.run_scenario(scn.load_scenario(builtin=name), out / name)
    b = res.report["blocking"]
    print(f"{name:28s} {b['classification']:9s} pocket min = {b['min_pocket']:.4f}")
