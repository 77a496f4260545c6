"""Executable checks of the sub/super-solution argument and the scaling laws.

Each check returns a :class:`VerificationReport`. These are falsification
harnesses evaluated on finite grids, not certificates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .construction import (
    ConstructionParams,
    in_parameter_triangle,
    make_resource_profile,
    sub_solution_laplacian,
    sub_solution_value,
    super_solution_value,
    triangle_slacks,
    triangle_vertices,
)
from .grid import RadialGrid, build_grid, default_grid
from .optimizer import sweep_ratio
from .solver import (
    SteadySolution,
    energy_identity_residual,
    march_to_steady,
    solve_construction,
)

__all__ = [
    "VerificationReport",
    "ScalingFit",
    "check_grid",
    "check_sub_inequality",
    "check_super_inequality",
    "check_sandwich",
    "sandwich_margins",
    "check_growth_order",
    "scaling_fit",
    "check_scaling",
    "check_one_dim_ceiling",
    "check_energy_identity",
    "check_gas",
    "triangle_lattice_scan",
]

SUB_TOL = 1e-12
SUPER_TOL = 1e-12
SANDWICH_TOL = 1e-6
GROWTH_TOL_1D = 0.10
IDENTITY_TOL = 1e-2
GAS_TOL = 1e-6


@dataclass
class VerificationReport:
    check_name: str
    passed: bool
    worst_value: float
    worst_location: dict
    threshold: float = math.nan
    details: list = field(default_factory=list)
    note: str = ""

    def summary(self) -> str:
        loc = ", ".join(f"{k}={v:.6g}" for k, v in self.worst_location.items())
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag} {self.check_name}: worst={self.worst_value:.6g} at {loc or '-'}"

    def to_dict(self) -> dict:
        return {
            "check_name": self.check_name,
            "passed": bool(self.passed),
            "worst_value": float(self.worst_value),
            "worst_location": {k: float(v) for k, v in self.worst_location.items()},
            "threshold": float(self.threshold),
            "details": self.details,
            "note": self.note,
        }


def check_grid(n: int, eps: float, nodes: int = 2000) -> RadialGrid:
    """``nodes``-point mesh with a node at ``eps``, used by the pointwise checks."""
    inner = max(8, nodes // 4)
    return build_grid(n, make_resource_profile(n, eps), inner, nodes - 1 - inner)


def _radii(grid):
    return grid.nodes if isinstance(grid, RadialGrid) else np.asarray(grid, dtype=float)


def check_sub_inequality(params: ConstructionParams, grid=None) -> VerificationReport:
    """Closed-form residual ``d (v'' + (n-1) v'/r) + v (m - v)`` of the sub-solution.

    Uses the exact derivatives; the node at ``r = eps`` is skipped. Passes iff
    the minimum is ``>= -1e-12 c2 / eps**(2n)``.
    """
    n, eps = params.n, params.eps
    r = _radii(grid if grid is not None else check_grid(n, eps))
    r = r[r != eps]
    lap = sub_solution_laplacian(params, r)
    v = sub_solution_value(params, r)
    m = np.where(r <= eps, eps ** (-n), 0.0)
    resid = params.d * lap + v * (m - v)
    scale = params.c2 / eps ** (2 * n)
    k = int(np.argmin(resid))
    worst = resid[k] / scale
    return VerificationReport(
        "sub_inequality",
        bool(worst >= -SUB_TOL),
        float(worst),
        {"r": float(r[k]), "eps": eps},
        -SUB_TOL,
        note="worst value is min residual / (c2 eps^-2n)",
    )


def check_super_inequality(params: ConstructionParams, grid=None) -> VerificationReport:
    """The constant ``eps**-n`` gives residual 0 on ``[0, eps]`` and ``-eps**-2n`` outside."""
    n, eps = params.n, params.eps
    r = _radii(grid if grid is not None else check_grid(n, eps))
    top = super_solution_value(params)
    m = np.where(r <= eps, eps ** (-n), 0.0)
    resid = params.d * 0.0 + top * (m - top)
    k = int(np.argmax(resid))
    outside = resid[r > eps]
    return VerificationReport(
        "super_inequality",
        bool(resid[k] <= SUPER_TOL * eps ** (-2 * n)),
        float(resid[k]),
        {"r": float(r[k]), "eps": eps},
        SUPER_TOL * eps ** (-2 * n),
        details=[{"outside_value": float(outside.max()) if outside.size else math.nan}],
    )


def sandwich_margins(u, lower, upper, tol: float) -> tuple:
    """Returns ``(passed, worst_margin, index)`` for ``lower - tol <= u <= upper + tol``."""
    u = np.asarray(u, dtype=float)
    lo = u - np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float) - u
    margin = np.minimum(lo, hi) * np.ones_like(u)
    k = int(np.argmin(margin))
    return bool(margin[k] >= -tol), float(margin[k]), k


def check_sandwich(sol: SteadySolution, params: ConstructionParams) -> VerificationReport:
    """Nodewise ``sub <= u <= eps**-n`` with slack ``1e-6 eps**-n``."""
    top = super_solution_value(params)
    tol = SANDWICH_TOL * top
    lower = sub_solution_value(params, sol.r)
    passed, worst, k = sandwich_margins(sol.u, lower, top, tol)
    return VerificationReport(
        "sandwich",
        passed,
        worst,
        {"r": float(sol.r[k]), "eps": params.eps},
        -tol,
        details=[
            {"min_lower_margin": float(np.min(sol.u - lower)), "min_upper_margin": float(np.min(top - sol.u))}
        ],
    )


def check_growth_order(n: int, solutions, params: Optional[ConstructionParams] = None) -> VerificationReport:
    """Centre value scaling along a decreasing-``eps`` sequence.

    ``n = 1``: ``sqrt(eps) u(0)`` must end within 10% of 3/2 and approach it
    monotonically. ``n >= 2``: ``eps**n u(0)`` must stay in ``[c2, 1]``.
    """
    if len(solutions) < 3:
        raise ValueError("need at least 3 solutions")
    eps_of = lambda s: s.profile.interior_breakpoints[0]
    sols = sorted(solutions, key=eps_of, reverse=True)
    eps = np.array([eps_of(s) for s in sols])
    centre = np.array([s.u[0] for s in sols])
    if n == 1:
        scaled = np.sqrt(eps) * centre
        dev = np.abs(scaled - 1.5) / 1.5
        shrinking = bool(np.all(np.diff(dev) < 0))
        passed = bool(dev[-1] <= GROWTH_TOL_1D and shrinking)
        return VerificationReport(
            "growth_order",
            passed,
            float(dev[-1]),
            {"eps": float(eps[-1])},
            GROWTH_TOL_1D,
            details=[{"eps": float(e), "sqrt_eps_u0": float(v), "rel_dev": float(x)} for e, v, x in zip(eps, scaled, dev)],
            note="10% band and monotone approach are engineering tolerances",
        )
    scaled = eps**n * centre
    lo_margin = scaled - params.c2
    hi_margin = 1.0 - scaled
    margin = np.minimum(lo_margin, hi_margin)
    k = int(np.argmin(margin))
    return VerificationReport(
        "growth_order",
        bool(margin[k] >= -SANDWICH_TOL),
        float(margin[k]),
        {"eps": float(eps[k])},
        -SANDWICH_TOL,
        details=[{"eps": float(e), "eps_n_u0": float(v)} for e, v in zip(eps, scaled)],
    )


@dataclass
class ScalingFit:
    """Least-squares line ``ratio ~ slope |log eps| + intercept``."""

    points: list
    slope: float
    intercept: float
    r_squared: float
    lower_bounds: list = field(default_factory=list)
    eps: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @classmethod
    def from_points(cls, x, y, **extra) -> "ScalingFit":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if len(x) < 3:
            raise ValueError("need at least 3 points")
        slope, intercept = np.polyfit(x, y, 1)
        pred = slope * x + intercept
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        r2 = 1.0 - float(np.sum((y - pred) ** 2)) / ss_tot if ss_tot > 0 else 1.0
        pts = [(float(a), float(b)) for a, b in zip(x, y)]
        return cls(pts, float(slope), float(intercept), r2, **extra)


def scaling_fit(n: int, eps_list, params: ConstructionParams, refine: int = 1, threads: int = 1) -> ScalingFit:
    """Solve with ``d = c1 / eps**(n-2)`` at each ``eps`` and fit ratio against ``|log eps|``."""
    if n < 2:
        raise ValueError("scaling fit needs n >= 2")
    eps_list = sorted(set(eps_list), reverse=True)
    if len(eps_list) < 4 or eps_list[0] / eps_list[-1] < 10:
        raise ValueError("need >= 4 values of eps spanning at least one decade")
    rows = sweep_ratio(n, eps_list, "paper", params, refine=refine, threads=threads)
    ok = [r for r in rows if r.ok]
    if len(ok) < 4:
        raise RuntimeError(f"only {len(ok)} converged solves; need 4")
    return ScalingFit.from_points(
        [r.log_eps_abs for r in ok],
        [r.ratio for r in ok],
        lower_bounds=[r.lower_bound for r in ok],
        eps=[r.eps for r in ok],
        failures=[(r.eps, r.error) for r in rows if not r.ok],
    )


def check_scaling(fit: ScalingFit, n: int, c2: float) -> VerificationReport:
    """Slope at least 95% of ``c2 n / e`` and every ratio above its lower bound."""
    target = 0.95 * c2 * n / math.e
    gaps = [y - lb for (_, y), lb in zip(fit.points, fit.lower_bounds)]
    k = int(np.argmin(gaps))
    return VerificationReport(
        "scaling",
        bool(fit.slope >= target and gaps[k] >= 0),
        float(min(fit.slope - target, gaps[k])),
        {"eps": float(fit.eps[k])},
        0.0,
        details=[
            {"slope": fit.slope, "slope_target": target, "intercept": fit.intercept, "r_squared": fit.r_squared},
            *({"eps": e, "ratio": y, "lower_bound": lb} for e, (_, y), lb in zip(fit.eps, fit.points, fit.lower_bounds)),
        ],
    )


def check_one_dim_ceiling(eps_list, refine: int = 1, threads: int = 1) -> VerificationReport:
    """Ratios of the ``sqrt(eps)`` family stay below 3 and rise as ``eps`` falls."""
    eps_list = sorted(set(eps_list), reverse=True)
    if len(eps_list) < 3:
        raise ValueError("need at least 3 values of eps")
    rows = sweep_ratio(1, eps_list, "sqrt", refine=refine, threads=threads)
    bad = [r for r in rows if not r.ok]
    if bad:
        raise RuntimeError(f"solve failed at eps={bad[0].eps}: {bad[0].error}")
    ratios = np.array([r.ratio for r in rows])
    increasing = bool(np.all(np.diff(ratios) > 0))
    k = int(np.argmax(ratios))
    return VerificationReport(
        "one_dim_ceiling",
        bool(np.all(ratios < 3.0) and increasing),
        float(ratios[k]),
        {"eps": rows[k].eps},
        3.0,
        details=[{"eps": r.eps, "d": r.d, "ratio": r.ratio} for r in rows],
    )


def check_energy_identity(params: ConstructionParams, grid: Optional[RadialGrid] = None) -> VerificationReport:
    """Identity defect below 1e-2 and shrinking at order >= 1 under 2x refinement."""
    grid = grid or default_grid(params.n, params.profile, params.d)
    coarse = energy_identity_residual(solve_construction(params, grid))
    fine = energy_identity_residual(solve_construction(params, grid.refine(2)))
    order = math.log2(coarse / fine) if fine > 0 else math.inf
    return VerificationReport(
        "energy_identity",
        bool(coarse < IDENTITY_TOL and order >= 1.0),
        float(coarse),
        {"eps": params.eps},
        IDENTITY_TOL,
        details=[{"coarse": coarse, "fine": fine, "observed_order": order}],
    )


def check_gas(params: ConstructionParams, initial_states=None, grid: Optional[RadialGrid] = None) -> VerificationReport:
    """Time-marched states from distinct positive starts agree with each other and with Newton."""
    grid = grid or default_grid(params.n, params.profile, params.d)
    newton = solve_construction(params, grid)
    if initial_states is None:
        top = params.profile.sup
        r = grid.nodes
        initial_states = [
            np.full(grid.size, 0.01),
            np.full(grid.size, top),
            1.0 + 0.5 * top * np.exp(-(r / max(params.eps, 0.05)) ** 2),
        ]
    finals = [
        march_to_steady(
            params.n, params.d, params.profile, grid, u0,
            dt=1e-3 / params.profile.sup, t_end=1e5, tol=1e-12, dt_max=1.0, growth=1.05,
        )
        for u0 in initial_states
    ]
    scale = np.max(np.abs(newton.u))
    diffs = [float(np.max(np.abs(f.u - newton.u)) / scale) for f in finals]
    for i in range(len(finals)):
        for j in range(i + 1, len(finals)):
            diffs.append(float(np.max(np.abs(finals[i].u - finals[j].u)) / scale))
    worst = max(diffs)
    return VerificationReport(
        "gas",
        bool(worst <= GAS_TOL and all(f.converged for f in finals)),
        worst,
        {"eps": params.eps},
        GAS_TOL,
        details=[{"steps": f.iterations, "converged": f.converged} for f in finals],
    )


def triangle_lattice_scan(n: int, eps: float, size: int = 20, nodes: int = 400) -> list:
    """Sub-inequality verdicts on a ``size x size`` lattice over the triangle's bounding box.

    Each record carries the analytic verdict, the grid verdict, and whether the
    point lies within one lattice spacing of the triangle boundary.
    """
    verts = triangle_vertices(n)
    c1_max = max(v.c1 for v in verts)
    c2_max = max(v.c2 for v in verts)
    h1, h2 = c1_max / size, c2_max / size
    grid = check_grid(n, eps, nodes)
    out = []
    for i in range(1, size + 1):
        for j in range(1, size + 1):
            c1, c2 = i * h1, j * h2
            s1, s2 = triangle_slacks(n, c1, c2)
            # distance to each constraint line, compared with the lattice diagonal
            d1 = abs(s1) / math.hypot(2 * n * (n - 1), 1.0)
            d2 = abs(s2) / math.hypot(2 * n, 1.0 / math.e)
            near = min(d1, d2) <= math.hypot(h1, h2)
            rep = check_sub_inequality(ConstructionParams(n, eps, c1, c2), grid)
            out.append({
                "c1": c1, "c2": c2,
                "in_triangle": in_parameter_triangle(n, c1, c2),
                "near_boundary": near,
                "passed": rep.passed,
            })
    return out
