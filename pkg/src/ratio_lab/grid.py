"""Radial meshes on [0, 1] aligned with resource breakpoints."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .construction import DomainError, ResourceProfile, sphere_area

__all__ = ["GridError", "RadialGrid", "build_grid", "default_grid", "inner_cell_rule"]

MIN_CELLS = 8
MAX_INNER = 4096


class GridError(DomainError):
    """Breakpoints cannot be placed on the mesh without collapsing a cell."""


def _moment_weights(n, nodes):
    """Exact ``int phi_i(r) r^(n-1) dr`` for piecewise-linear hats ``phi_i``.

    Gauss-Legendre with ``n//2 + 1`` points integrates the degree-``n``
    integrand exactly and avoids the cancellation of the closed form.
    """
    x, w = np.polynomial.legendre.leggauss(n // 2 + 1)
    a, b = nodes[:-1], nodes[1:]
    h = b - a
    t = 0.5 * (x[None, :] + 1.0)  # map [-1, 1] -> [0, 1]
    r = a[:, None] + h[:, None] * t
    wt = 0.5 * w[None, :] * h[:, None] * r ** (n - 1)
    left = (wt * (1.0 - t)).sum(axis=1)
    right = (wt * t).sum(axis=1)
    out = np.zeros_like(nodes)
    out[:-1] += left
    out[1:] += right
    return out


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Nodes ``0 = r_0 < ... < r_N = 1`` plus quadrature and control-volume data.

    ``weights`` integrate ``A_n int f(r) r^(n-1) dr`` for piecewise-linear ``f``
    (trapezoid per cell against the exact radial measure). ``volumes`` are the
    dual-cell measures ``int r^(n-1) dr`` over ``[r_{i-1/2}, r_{i+1/2}]`` used by
    the finite-volume operator; ``face_coef[i]`` couples nodes ``i`` and ``i+1``.
    """

    n: int
    nodes: np.ndarray
    weights: np.ndarray = field(repr=False)
    volumes: np.ndarray = field(repr=False)
    faces: np.ndarray = field(repr=False)
    face_coef: np.ndarray = field(repr=False)

    @classmethod
    def from_nodes(cls, n: int, nodes) -> "RadialGrid":
        nodes = np.array(nodes, dtype=float)
        if nodes[0] != 0.0 or nodes[-1] != 1.0:
            raise GridError("nodes must start at 0 and end at 1")
        h = np.diff(nodes)
        if np.any(h <= 0):
            raise GridError("nodes must be strictly increasing")
        if len(nodes) < 17:
            raise GridError("need at least 16 cells")
        faces = np.concatenate(([0.0], 0.5 * (nodes[:-1] + nodes[1:]), [1.0]))
        volumes = (faces[1:] ** n - faces[:-1] ** n) / n
        face_coef = faces[1:-1] ** (n - 1) / h
        weights = sphere_area(n) * _moment_weights(n, nodes)
        for arr in (nodes, weights, volumes, faces, face_coef):
            arr.setflags(write=False)
        return cls(n, nodes, weights, volumes, faces, face_coef)

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.nodes)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def index_of(self, r: float) -> int:
        hits = np.flatnonzero(self.nodes == r)
        if len(hits) == 0:
            raise GridError(f"no node at r = {r!r}")
        return int(hits[0])

    def cell_average(self, profile: ResourceProfile) -> np.ndarray:
        """Dual-cell average of ``m``; at a breakpoint node this blends both sides."""
        vals = [
            profile.shell_integral(self.n, a, b)
            for a, b in zip(self.faces[:-1], self.faces[1:])
        ]
        return np.asarray(vals) / self.volumes

    def refine(self, factor: int = 2) -> "RadialGrid":
        """Split every cell into ``factor`` equal pieces (old nodes are kept)."""
        h = self.widths
        pieces = [self.nodes[:-1] + h * k / factor for k in range(factor)]
        fine = np.empty(len(h) * factor + 1)
        fine[:-1] = np.stack(pieces, axis=1).ravel()
        fine[-1] = 1.0
        return RadialGrid.from_nodes(self.n, fine)


def _graded(a, b, h0, cells):
    """``cells`` geometric widths on ``[a, b]`` starting at ``h0`` (uniform if that over-fills)."""
    length = b - a
    if h0 * cells >= length:
        return np.linspace(a, b, cells + 1)
    target = math.log(length / h0)

    def f(q):
        lq = math.log(q)
        return math.log(math.expm1(cells * lq) / math.expm1(lq)) - target

    q_hi = (length / h0) ** (1.0 / (cells - 1))
    q = brentq(f, 1.0 + 1e-12, q_hi, xtol=1e-15, rtol=1e-14)
    widths = h0 * q ** np.arange(cells)
    out = a + np.concatenate(([0.0], np.cumsum(widths)))
    out[-1] = b
    return out


def build_grid(n: int, profile: ResourceProfile, inner_points: int = 64, outer_points: int = 192) -> RadialGrid:
    """Uniform cells on ``[0, eps]``, geometrically graded cells on ``[eps, 1]``.

    ``eps`` is the first interior breakpoint of ``profile``; the first outer cell
    has the same width as the last inner one. Any further breakpoints are
    snapped onto their nearest node. Without interior breakpoints the mesh is
    uniform with ``inner_points + outer_points`` cells.
    """
    if inner_points < MIN_CELLS or outer_points < MIN_CELLS:
        raise GridError(f"cell counts must be >= {MIN_CELLS}")
    bps = profile.interior_breakpoints
    if not bps:
        return RadialGrid.from_nodes(n, np.linspace(0.0, 1.0, inner_points + outer_points + 1))
    eps = bps[0]
    inner = np.linspace(0.0, eps, inner_points + 1)
    outer = _graded(eps, 1.0, eps / inner_points, outer_points)
    nodes = np.concatenate((inner, outer[1:]))
    nodes[inner_points] = eps
    for b in bps[1:]:
        j = int(np.argmin(np.abs(nodes - b)))
        if j in (0, len(nodes) - 1) or j == inner_points:
            raise GridError(f"breakpoint {b} collides with a fixed node")
        left, right = nodes[j - 1], nodes[j + 1]
        h_min = 0.25 * min(nodes[j] - left, right - nodes[j])
        if not (left + h_min < b < right - h_min):
            raise GridError(f"snapping breakpoint {b} would collapse a cell")
        nodes[j] = b
    return RadialGrid.from_nodes(n, nodes)


def inner_cell_rule(eps: float) -> int:
    return max(64, 16 * math.ceil(math.log10(1.0 / eps)))


def default_grid(n: int, profile: ResourceProfile, d: float | None = None, refine: int = 1) -> RadialGrid:
    """Mesh sized from the concentration radius and, when ``d`` is known, the layer width.

    Inner cells follow ``max(64, 16 ceil(log10(1/eps)))``; additionally the inner
    width is kept below a quarter of the reaction-diffusion length
    ``sqrt(d / sup m)`` (capped at ``MAX_INNER`` cells).
    """
    bps = profile.interior_breakpoints
    if not bps:
        return build_grid(n, profile, 64 * refine, 192 * refine)
    eps = bps[0]
    inner = inner_cell_rule(eps)
    outer = 192 + 32 * math.ceil(math.log10(1.0 / eps))
    if d is not None:
        layer = math.sqrt(d / profile.sup)
        inner = max(inner, min(MAX_INNER, math.ceil(4.0 * eps / layer)))
    return build_grid(n, profile, inner * refine, outer * refine)
