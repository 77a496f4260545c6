"""Ratio sweeps and derivative-free maximisation over ``(eps, d)``."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .construction import (
    ConstructionParams,
    diffusion_rate,
    interior_triangle_point,
    make_resource_profile,
    ratio_lower_bound,
)
from .grid import default_grid
from .solver import SolveOptions, SolverError, ratio, solve_steady

__all__ = [
    "SweepRow",
    "sweep_ratio",
    "FamilySpec",
    "Evaluation",
    "OptimizationResult",
    "maximize_ratio",
    "evaluate_ratio",
]

FAILURE_FRACTION = 0.2
SCAN_FRACTION = 0.4


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def evaluate_ratio(n: int, eps: float, d: float, refine: int = 1, params: Optional[ConstructionParams] = None):
    """One full solve on the concentration profile; returns ``(ratio, solution)``."""
    m = make_resource_profile(n, eps)
    grid = default_grid(n, m, d, refine=refine)
    if params is not None and n >= 2:
        opts = SolveOptions(initial_guess="sub-solution", params=params.with_eps(eps))
    else:
        opts = SolveOptions()
    sol = solve_steady(n, d, m, grid, opts)
    return ratio(sol, m), sol


@dataclass
class SweepRow:
    eps: float
    d: float
    ratio: float = math.nan
    lower_bound: float = math.nan
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def log_eps_abs(self) -> float:
        return -math.log(self.eps)


def _rule_d(n, eps, d_rule, params, d_value):
    if d_rule == "paper":
        if n == 1:
            return math.sqrt(eps)
        return diffusion_rate(n, eps, params.c1)
    if d_rule == "sqrt":
        return math.sqrt(eps)
    if d_rule == "fixed":
        if d_value is None or not d_value > 0:
            raise ValueError("d_rule='fixed' needs a positive d_value")
        return float(d_value)
    raise ValueError(f"unknown d_rule {d_rule!r}")


def sweep_ratio(
    n: int,
    eps_list,
    d_rule: str = "paper",
    params: Optional[ConstructionParams] = None,
    d_value: Optional[float] = None,
    refine: int = 1,
    threads: int = 1,
) -> list:
    """One solve per ``eps`` with ``d`` from ``d_rule``; rows sorted by descending ``eps``.

    ``d_rule`` is ``"paper"`` (``c1 / eps**(n-2)``, or ``sqrt(eps)`` when
    ``n == 1``), ``"sqrt"`` or ``"fixed"`` (uses ``d_value``). A failed solve is
    recorded in its row instead of raising.
    """
    eps_sorted = sorted({float(e) for e in eps_list}, reverse=True)
    if not eps_sorted:
        raise ValueError("eps_list is empty")
    if n >= 2 and params is None:
        c = interior_triangle_point(n, 0.9)
        params = ConstructionParams(n, eps_sorted[0], c.c1, c.c2)

    def run(eps):
        d = _rule_d(n, eps, d_rule, params, d_value)
        row = SweepRow(eps, d)
        if n >= 2:
            row.lower_bound = ratio_lower_bound(n, eps, params.c2)
        try:
            row.ratio, _ = evaluate_ratio(n, eps, d, refine, params)
        except SolverError as exc:
            row.error = f"{type(exc).__name__}: {exc}"
        return row

    return _map(run, eps_sorted, threads)


@dataclass(frozen=True)
class FamilySpec:
    """Search box for the ratio maximisation.

    ``family="free-d"`` searches ``(log10 eps, log10 d)``;
    ``family="paper-construction"`` searches ``log10 eps`` only, with ``d`` tied
    to ``eps`` by the construction (``sqrt(eps)`` for ``n = 1``,
    ``c1 / eps**(n-2)`` otherwise).
    """

    n: int
    family: str = "free-d"
    eps_bounds: tuple = (1e-3, 0.5)
    d_bounds: tuple = (1e-3, 1.0)
    budget: int = 200
    c1: Optional[float] = None
    c2: Optional[float] = None
    refine: int = 1

    def __post_init__(self):
        if self.family not in ("free-d", "paper-construction"):
            raise ValueError(f"unknown family {self.family!r}")
        lo, hi = self.eps_bounds
        if not (0 < lo < hi < 1):
            raise ValueError("eps bounds must satisfy 0 < lo < hi < 1")
        if self.family == "free-d":
            dlo, dhi = self.d_bounds
            if not (0 < dlo < dhi):
                raise ValueError("d bounds must satisfy 0 < lo < hi")
        if self.budget < 10:
            raise ValueError("budget must be >= 10")

    @property
    def dim(self) -> int:
        return 2 if self.family == "free-d" else 1

    def log_bounds(self) -> list:
        out = [(math.log10(self.eps_bounds[0]), math.log10(self.eps_bounds[1]))]
        if self.family == "free-d":
            out.append((math.log10(self.d_bounds[0]), math.log10(self.d_bounds[1])))
        return out

    def construction(self) -> Optional[ConstructionParams]:
        if self.n == 1:
            return None
        c = interior_triangle_point(self.n, 0.9)
        c1 = self.c1 if self.c1 is not None else c.c1
        c2 = self.c2 if self.c2 is not None else c.c2
        return ConstructionParams(self.n, self.eps_bounds[1], c1, c2)


@dataclass(frozen=True)
class Evaluation:
    eps: float
    d: float
    ratio: float
    phase: str
    error: Optional[str] = None


@dataclass
class OptimizationResult:
    best_params: dict
    best_ratio: float
    trace: list = field(default_factory=list)
    exhausted_budget: bool = False
    failures: int = 0

    @property
    def failed(self) -> bool:
        return self.failures > FAILURE_FRACTION * max(len(self.trace), 1)


class _BudgetSpent(Exception):
    pass


def _scan_points(bounds, per_axis):
    axes = [np.linspace(lo, hi, per_axis) for lo, hi in bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1), [ax[1] - ax[0] for ax in axes]


def maximize_ratio(spec: FamilySpec, threads: int = 1) -> OptimizationResult:
    """Coarse log-grid scan, then Nelder-Mead from the best scan point.

    Every evaluation is a full steady solve; the result is deterministic for a
    given ``spec`` (fixed scan order, fixed initial simplex). Stops early with
    a partial result if more than 20% of the budget fails to solve.
    """
    params = spec.construction()
    bounds = spec.log_bounds()
    budget = spec.budget
    trace: list = []
    failures = 0

    def decode(x):
        eps = 10.0 ** float(np.clip(x[0], *bounds[0]))
        if spec.family == "free-d":
            d = 10.0 ** float(np.clip(x[1], *bounds[1]))
        elif spec.n == 1:
            d = math.sqrt(eps)
        else:
            d = diffusion_rate(spec.n, eps, params.c1)
        return eps, d

    def solve_point(x):
        eps, d = decode(x)
        try:
            value, _ = evaluate_ratio(spec.n, eps, d, spec.refine, params)
            return eps, d, value, None
        except SolverError as exc:
            return eps, d, math.nan, f"{type(exc).__name__}: {exc}"

    def record(res, phase):
        nonlocal failures
        eps, d, value, err = res
        trace.append(Evaluation(eps, d, value, phase, err))
        if err is not None:
            failures += 1

    def too_many_failures():
        return failures > FAILURE_FRACTION * budget

    per_axis = max(2, int(math.floor((SCAN_FRACTION * budget) ** (1.0 / spec.dim))))
    points, spacing = _scan_points(bounds, per_axis)
    for res in _map(solve_point, list(points), threads):
        record(res, "scan")
    aborted = too_many_failures()

    def objective(x):
        if len(trace) >= budget or too_many_failures():
            raise _BudgetSpent
        res = solve_point(x)
        record(res, "nelder-mead")
        return -res[2] if res[3] is None else 0.0

    ok = [i for i, e in enumerate(trace) if e.error is None]
    if ok and not aborted and len(trace) < budget:
        best = max(ok, key=lambda i: trace[i].ratio)
        x0 = points[best]
        simplex = [x0]
        for k, h in enumerate(spacing):
            vertex = x0.copy()
            step = 0.5 * h
            vertex[k] = x0[k] + step if x0[k] + step <= bounds[k][1] else x0[k] - step
            simplex.append(vertex)
        try:
            minimize(
                objective,
                x0,
                method="Nelder-Mead",
                bounds=bounds,
                options={
                    "initial_simplex": np.array(simplex),
                    "maxfev": budget - len(trace),
                    "xatol": 1e-4,
                    "fatol": 1e-9,
                },
            )
        except _BudgetSpent:
            pass

    good = [e for e in trace if e.error is None]
    if good:
        top = max(good, key=lambda e: e.ratio)
        best_params, best_ratio = {"eps": top.eps, "d": top.d}, top.ratio
    else:
        best_params, best_ratio = {}, math.nan
    return OptimizationResult(
        best_params=best_params,
        best_ratio=best_ratio,
        trace=trace,
        exhausted_budget=len(trace) >= budget or too_many_failures(),
        failures=failures,
    )
