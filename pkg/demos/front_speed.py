"""Track the 0.5 level set of an obstacle-free front and compare with the wave speed.

    python demos/front_speed.py
"""
from nonloc_front import analysis as an
from nonloc_front import scenarios as scn

res = scn.run_scenario(scn.load_scenario(builtin="planar-speed"))
track = next(t for t in res.tracks if t.level == 0.5)
for t, pos in zip(track.times[::5], track.positions[::5]):
    print(f"t = {t:6.1f}  front at x1 = {pos.mean():8.3f}")
sp = res.report["speed"]
est = an.mean_speed(track, t_min=100.0)
print(f"mean speed {est.c_est:.6f} (r2 = {est.r2:.7f}); continuum wave {sp['c_wave']:.6f}; "
      f"lattice wave {sp['c_lattice']:.6f}")
