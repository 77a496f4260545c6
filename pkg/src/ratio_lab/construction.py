"""Closed-form pieces of the concentration construction.

Everything here is a pure function of its arguments: the concentrated
resource profile ``m_eps``, the diffusion-rate rule ``d_eps``, the constant
super-solution, the two-branch sub-solution with its first and second
derivatives, the admissible ``(c1, c2)`` triangle, and the exact L1 norms
that turn the sandwich into a lower bound for the population/resource ratio.

Radii are always measured in the unit ball, ``r in [0, 1]``. For ``n = 1`` the
domain is the interval ``(0, 1)`` with unit length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "DomainError",
    "ConstructionParams",
    "ResourceProfile",
    "TrianglePoint",
    "make_resource_profile",
    "diffusion_rate",
    "super_solution_value",
    "sub_solution_value",
    "sub_solution_derivatives",
    "sub_solution_laplacian",
    "in_parameter_triangle",
    "triangle_slacks",
    "triangle_vertices",
    "interior_triangle_point",
    "sub_solution_l1_norm",
    "ratio_lower_bound",
    "gamma_half_integer",
    "sphere_area",
    "ball_volume",
]

E = math.e
SLACK_ROUNDOFF = 8 * np.finfo(float).eps


class DomainError(ValueError):
    """An argument lies outside the domain where a formula is defined."""


def _check_dim(n, minimum=1):
    if int(n) != n or n < minimum:
        raise DomainError(f"dimension must be an integer >= {minimum}, got {n!r}")


def _check_eps(eps):
    if not (0.0 < eps < 1.0):
        raise DomainError("eps must be in (0,1)")


@dataclass(frozen=True)
class ConstructionParams:
    """The ``(n, eps, c1, c2)`` bundle that fixes one member of the family.

    ``c1`` and ``c2`` are ignored when ``n == 1``. Membership of ``(c1, c2)``
    in the admissible triangle is *not* enforced here; ask
    :func:`in_parameter_triangle`.
    """

    n: int
    eps: float
    c1: float = 0.0
    c2: float = 0.0

    def __post_init__(self):
        _check_dim(self.n)
        _check_eps(self.eps)
        if self.n >= 2 and (self.c1 <= 0 or self.c2 <= 0):
            raise DomainError("c1 and c2 must be positive for n >= 2")

    @property
    def d(self) -> float:
        return diffusion_rate(self.n, self.eps, self.c1)

    @property
    def profile(self) -> "ResourceProfile":
        return make_resource_profile(self.n, self.eps)

    def with_eps(self, eps: float) -> "ConstructionParams":
        return ConstructionParams(self.n, eps, self.c1, self.c2)


@dataclass(frozen=True)
class ResourceProfile:
    """Piecewise-constant radial resource ``m(r)``.

    ``values[k]`` is the level on ``[breakpoints[k], breakpoints[k+1]]``. At an
    interior breakpoint the left (inner) value wins, matching the closed ball
    convention of the concentration profile.
    """

    breakpoints: tuple
    values: tuple

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        if len(bp) < 2 or bp[0] != 0.0 or bp[-1] != 1.0:
            raise DomainError("breakpoints must start at 0 and end at 1")
        if any(b <= a for a, b in zip(bp, bp[1:])):
            raise DomainError("breakpoints must be strictly increasing")
        if len(vals) != len(bp) - 1:
            raise DomainError("need exactly one value per interval")
        if any(v < 0 or not math.isfinite(v) for v in vals):
            raise DomainError("resource levels must be finite and nonnegative")
        if max(vals) <= 0:
            raise DomainError("resource profile must be positive somewhere")

    @classmethod
    def constant(cls, level: float) -> "ResourceProfile":
        return cls((0.0, 1.0), (level,))

    @property
    def sup(self) -> float:
        return max(self.values)

    @property
    def interior_breakpoints(self) -> tuple:
        return self.breakpoints[1:-1]

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        idx = np.searchsorted(self.breakpoints, r, side="left") - 1
        idx = np.clip(idx, 0, len(self.values) - 1)
        out = np.asarray(self.values)[idx]
        return out if out.ndim else float(out)

    def shell_integral(self, n: int, a: float, b: float) -> float:
        """``int_a^b m(r) r^(n-1) dr`` computed exactly."""
        total = 0.0
        for lo, hi, v in zip(self.breakpoints, self.breakpoints[1:], self.values):
            lo_, hi_ = max(lo, a), min(hi, b)
            if hi_ > lo_ and v:
                total += v * (hi_**n - lo_**n) / n
        return total

    def l1_norm(self, n: int) -> float:
        """Exact ``||m||_{L1}`` over the unit ball (unit interval for n = 1)."""
        return sphere_area(n) * self.shell_integral(n, 0.0, 1.0)


@dataclass(frozen=True)
class TrianglePoint:
    c1: float
    c2: float

    def __post_init__(self):
        if not (math.isfinite(self.c1) and math.isfinite(self.c2)):
            raise DomainError("triangle coordinates must be finite")
        if self.c1 < 0 or self.c2 < 0:
            raise DomainError("triangle coordinates must be nonnegative")

    def __iter__(self):
        return iter((self.c1, self.c2))


def make_resource_profile(n: int, eps: float) -> ResourceProfile:
    """Total mass ``|B_1^n|`` packed at density ``eps**-n`` into ``[0, eps]``."""
    _check_dim(n)
    _check_eps(eps)
    return ResourceProfile((0.0, eps, 1.0), (eps ** (-n), 0.0))


def diffusion_rate(n: int, eps: float, c1: Optional[float] = None) -> float:
    """``sqrt(eps)`` in one dimension, ``c1 / eps**(n-2)`` otherwise."""
    _check_dim(n)
    _check_eps(eps)
    if n == 1:
        return math.sqrt(eps)
    if c1 is None or not c1 > 0:
        raise DomainError("c1 must be positive for n >= 2")
    return c1 / eps ** (n - 2)


def super_solution_value(params: ConstructionParams) -> float:
    _check_dim(params.n, 2)
    return params.eps ** (-params.n)


def _radii(r):
    arr = np.asarray(r, dtype=float)
    if np.any((arr < 0) | (arr > 1)) or np.any(np.isnan(arr)):
        raise DomainError("r must lie in [0,1]")
    return arr


def sub_solution_value(params: ConstructionParams, r):
    """Two-branch sub-solution; Gaussian-like core inside ``eps``, ``r**-n`` tail outside."""
    _check_dim(params.n, 2)
    n, eps, c2 = params.n, params.eps, params.c2
    arr = _radii(r)
    inner = arr <= eps
    s = np.where(inner, arr / eps, 1.0) ** n
    # outer branch evaluated on a safe radius so r = 0 never divides
    safe = np.where(inner, 1.0, arr)
    out = np.where(inner, c2 * eps ** (-n) * np.exp(-s), c2 / (E * safe**n))
    return out if out.ndim else float(out)


def _branch_mask(params, arr, side):
    eps = params.eps
    at_eps = arr == eps
    if side is None:
        if np.any(at_eps):
            raise DomainError(
                "second derivative jumps at r = eps; pass side='inner' or side='outer'"
            )
        return arr < eps
    if side not in ("inner", "outer"):
        raise DomainError("side must be 'inner' or 'outer'")
    return (arr < eps) | (at_eps & (side == "inner"))


def sub_solution_derivatives(params: ConstructionParams, r, side: Optional[str] = None):
    """Return ``(v, v', v'')`` of the sub-solution at ``r``.

    Raises :class:`DomainError` at ``r == eps`` unless ``side`` selects the
    inner or outer branch.
    """
    _check_dim(params.n, 2)
    n, eps, c2 = params.n, params.eps, params.c2
    arr = _radii(r)
    inner = _branch_mask(params, arr, side)
    x = np.where(inner, arr, eps)
    y = np.where(inner, 1.0, arr)
    g = np.exp(-((x / eps) ** n))
    v_in = c2 * eps ** (-n) * g
    dv_in = -c2 * n * x ** (n - 1) * eps ** (-2 * n) * g
    d2v_in = (
        c2 * n * (n - 1) * x ** (n - 2) * eps ** (-2 * n)
        * (n * x**n / ((n - 1) * eps**n) - 1.0)
        * g
    )
    v_out = c2 / (E * y**n)
    dv_out = -c2 * n / (E * y ** (n + 1))
    d2v_out = c2 * n * (n + 1) / (E * y ** (n + 2))
    trip = (
        np.where(inner, v_in, v_out),
        np.where(inner, dv_in, dv_out),
        np.where(inner, d2v_in, d2v_out),
    )
    if trip[0].ndim == 0:
        return tuple(float(t) for t in trip)
    return trip


def sub_solution_laplacian(params: ConstructionParams, r, side: Optional[str] = None):
    """Radial Laplacian ``v'' + (n-1) v'/r`` of the sub-solution.

    The inner branch is written in a form without the ``1/r`` factor so the
    value at ``r = 0`` is exact.
    """
    _check_dim(params.n, 2)
    n, eps, c2 = params.n, params.eps, params.c2
    arr = _radii(r)
    inner = _branch_mask(params, arr, side)
    x = np.where(inner, arr, eps)
    y = np.where(inner, 1.0, arr)
    g = np.exp(-((x / eps) ** n))
    lap_in = c2 * n * x ** (n - 2) * eps ** (-2 * n) * (n * x**n / eps**n - 2.0 * (n - 1)) * g
    lap_out = 2.0 * c2 * n / (E * y ** (n + 2))
    out = np.where(inner, lap_in, lap_out)
    return out if out.ndim else float(out)


def triangle_slacks(n: int, c1: float, c2: float) -> tuple:
    """Left-hand sides of the two admissibility inequalities (both must be >= 0)."""
    _check_dim(n, 2)
    return 1.0 - 2.0 * c1 * n * (n - 1) - c2, 2.0 * c1 * n - c2 / E


def in_parameter_triangle(n: int, c1: float, c2: float) -> bool:
    """Both inequalities hold, up to a few ulps so the computed vertices count as members."""
    if not (c1 > 0 and c2 > 0):
        return False
    first, second = triangle_slacks(n, c1, c2)
    return bool(first >= -SLACK_ROUNDOFF and second >= -SLACK_ROUNDOFF)


def triangle_vertices(n: int) -> tuple:
    _check_dim(n, 2)
    return (
        TrianglePoint(0.0, 0.0),
        TrianglePoint(1.0 / (2 * n * (E + n - 1)), E / (E + n - 1)),
        TrianglePoint(1.0 / (2 * n * (n - 1)), 0.0),
    )


def interior_triangle_point(n: int, shrink: float = 0.9) -> TrianglePoint:
    """A canonical strictly interior ``(c1, c2)``.

    ``shrink = 1`` gives the centroid. Smaller values slide the point along the
    open segment from the centroid toward the apex vertex (the one with the
    largest ``c2``), which raises the ratio lower bound while staying inside.
    """
    _check_dim(n, 2)
    if not (0.0 < shrink <= 1.0):
        raise DomainError("shrink must be in (0, 1]")
    verts = triangle_vertices(n)
    cx = sum(v.c1 for v in verts) / 3.0
    cy = sum(v.c2 for v in verts) / 3.0
    apex = verts[1]
    t = 1.0 - shrink
    return TrianglePoint(cx + t * (apex.c1 - cx), cy + t * (apex.c2 - cy))


def sub_solution_l1_norm(n: int, eps: float, c2: float) -> float:
    _check_dim(n, 2)
    _check_eps(eps)
    if not c2 > 0:
        raise DomainError("c2 must be positive")
    return c2 * sphere_area(n) * ((1.0 - 1.0 / E) / n - math.log(eps) / E)


def ratio_lower_bound(n: int, eps: float, c2: float) -> float:
    """``c2 (1 - 1/e + (n/e) |log eps|)`` with the natural logarithm."""
    _check_dim(n, 2)
    _check_eps(eps)
    if not c2 > 0:
        raise DomainError("c2 must be positive")
    return c2 * (1.0 - 1.0 / E - n * math.log(eps) / E)


def gamma_half_integer(k2: int) -> float:
    """``Gamma(k2 / 2)`` for a positive integer ``k2`` via ``Gamma(x+1) = x Gamma(x)``."""
    if int(k2) != k2 or k2 < 1:
        raise DomainError("argument must be a positive integer (twice the Gamma argument)")
    if k2 % 2 == 0:
        x, val = 1.0, 1.0
    else:
        x, val = 0.5, math.sqrt(math.pi)
    while x < k2 / 2.0:
        val *= x
        x += 1.0
    return val


def sphere_area(n: int) -> float:
    """Surface area ``A_n`` of the unit sphere in R^n; 1 for the unit interval."""
    _check_dim(n)
    if n == 1:
        return 1.0
    return 2.0 * math.pi ** (n / 2.0) / gamma_half_integer(n)


def ball_volume(n: int) -> float:
    """``|B_1^n| = A_n / n``; 1 for the unit interval."""
    return sphere_area(n) / n
