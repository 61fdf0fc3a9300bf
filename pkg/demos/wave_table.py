"""Speed and tail rates of the planar wave for a few values of theta.

    python demos/wave_table.py
"""
import numpy as np

from nonloc_front import kernel as kn
from nonloc_front import wave1d as wv
from nonloc_front.nonlinearity import Bistable

J1 = kn.marginal(kn.normalize("gaussian", 1.0, 2), step=0.025)
print(f"{'theta':>6} {'c':>11} {'lambda':>9} {'mu':>9} {'A0':>8} {'A1':>8} {'residual':>9}")
for theta in np.arange(0.1, 0.5, 0.05):
    f = Bistable.cubic(float(theta))
    p = wv.solve_profile(J1, f)
    r = wv.characteristic_roots(J1, p.c, f)
    t = wv.tail_constants(p, r)
    print(f"{theta:6.2f} {p.c:11.7f} {r.lam:9.5f} {r.mu:9.5f} {t.A0:8.4f} {t.A1:8.4f} {p.residual:9.2e}")
