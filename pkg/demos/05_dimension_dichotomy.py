"""Search (eps, d) for the largest ratio in one and two dimensions.

A coarse log-grid scan feeds Nelder-Mead. With the same box and budget the
interval stays under 3 while the disk blows past it.
"""

from ratio_lab import FamilySpec, maximize_ratio

box = dict(eps_bounds=(1e-3, 0.5), d_bounds=(1e-4, 10.0), budget=200)
for n in (1, 2):
    res = maximize_ratio(FamilySpec(n, **box), threads=4)
    best = res.best_params
    print(f"n = {n}: best ratio {res.best_ratio:.5f} at eps = {best['eps']:.2e}, d = {best['d']:.3e} "
          f"({len(res.trace)} solves, {res.failures} failed)")
