"""Positive steady state of ``d Lap u + u (m - u) = 0`` with no-flux boundary, radial form.

The operator is discretised in conservative (vertex-centred finite-volume)
form on a :class:`~ratio_lab.grid.RadialGrid`::

    (L u)_i = [a_{i+1/2} (u_{i+1} - u_i) - a_{i-1/2} (u_i - u_{i-1})] / V_i

with ``a = s**(n-1) / h`` at the cell midpoints ``s`` and ``V_i`` the dual-cell
measure. At ``r = 0`` this is exactly the ghost-node closure ``n u''(0)`` with
``u'(0) = 0``; at ``r = 1`` the flux through the boundary is zero. The resource
term uses the dual-cell average of ``m`` so a jump sitting on a node is split
between its two sides instead of smeared.

Residuals are measured as a componentwise backward error: node ``i`` is
compared with ``(d |L| |u| + u (m + u))_i``, the size of its terms before any
cancellation, so the round-off floor is a few machine epsilons on every mesh.
A single
global scale such as ``(sup m)**2`` lets the low-density tail, or a
near-extinct iterate, pass as converged while the core dominates the norm.

Newton started from a discrete super-solution (the constant ``sup m`` is one)
decreases monotonically onto the positive root because ``u (m - u)`` is
concave in ``u``; that is the default start for arbitrary profiles.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import solve_banded

from .construction import (
    ConstructionParams,
    ResourceProfile,
    ball_volume,
    sub_solution_value,
)
from .grid import RadialGrid, default_grid

__all__ = [
    "SolverError",
    "NonConvergence",
    "NonPositiveIterate",
    "StepFailure",
    "SolveOptions",
    "SteadySolution",
    "diffusion_matrix",
    "discrete_residual",
    "solve_steady",
    "march_to_steady",
    "solve_construction",
    "l1_norm",
    "ratio",
    "energy_identity_residual",
    "nodal_derivative",
    "effective_tolerance",
    "relative_residual",
]

log = logging.getLogger(__name__)

MAX_HALVINGS = 30
FALLBACK_STEPS = 200
MAX_FALLBACKS = 3
POLISH_STEPS = 6
POLISH_STEP_TOL = 1e-14
GUESSES = ("super-solution", "flat-average", "sub-solution", "supplied")


class SolverError(RuntimeError):
    pass


class NonConvergence(SolverError):
    def __init__(self, msg, u=None, residual=None, iterations=0):
        super().__init__(msg)
        self.u = u
        self.residual = residual
        self.iterations = iterations


class NonPositiveIterate(SolverError):
    def __init__(self, msg, u=None):
        super().__init__(msg)
        self.u = u


class StepFailure(SolverError):
    def __init__(self, msg, u=None, t=None):
        super().__init__(msg)
        self.u = u
        self.t = t


@dataclass(frozen=True)
class SolveOptions:
    """Newton controls.

    ``initial_guess`` is one of ``"super-solution"`` (constant ``sup m``),
    ``"flat-average"``, ``"sub-solution"`` (needs ``params``; the sub-solution
    lifted to the flat average and clipped to the super-solution) or
    ``"supplied"`` (needs ``guess``).
    """

    tol: float = 1e-10
    max_newton: int = 100
    damping: float = 0.5
    initial_guess: str = "super-solution"
    guess: Optional[np.ndarray] = None
    params: Optional[ConstructionParams] = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_newton < 1:
            raise ValueError("max_newton must be >= 1")
        if not 0 < self.damping < 1:
            raise ValueError("damping must be in (0, 1)")
        if self.initial_guess not in GUESSES:
            raise ValueError(f"unknown initial_guess {self.initial_guess!r}")
        if self.initial_guess == "supplied" and self.guess is None:
            raise ValueError("initial_guess='supplied' needs guess")
        if self.initial_guess == "sub-solution" and self.params is None:
            raise ValueError("initial_guess='sub-solution' needs params")


@dataclass(frozen=True, eq=False)
class SteadySolution:
    grid: RadialGrid
    u: np.ndarray
    d: float
    residual_inf: float
    iterations: int
    converged: bool
    profile: Optional[ResourceProfile] = field(default=None, repr=False)
    tol: float = np.nan

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def n(self) -> int:
        return self.grid.n


def _check_grid(n, grid):
    if grid.n != n:
        raise ValueError(f"grid built for n={grid.n}, solve requested for n={n}")


def diffusion_matrix(grid: RadialGrid) -> np.ndarray:
    """Banded ``(1, 1)`` storage of the discrete radial Laplacian ``L``."""
    a, V = grid.face_coef, grid.volumes
    ab = np.zeros((3, grid.size))
    ab[0, 1:] = a / V[:-1]          # super-diagonal: row i, column i+1
    ab[2, :-1] = a / V[1:]          # sub-diagonal: row i+1, column i
    diag = np.zeros(grid.size)
    diag[:-1] -= a
    diag[1:] -= a
    ab[1] = diag / V
    return ab


def _apply_laplacian(grid, u):
    flux = grid.face_coef * np.diff(u)
    div = np.zeros_like(u)
    div[:-1] += flux
    div[1:] -= flux
    return div / grid.volumes


def discrete_residual(n: int, d: float, m: ResourceProfile, grid: RadialGrid, u, m_nodes=None) -> np.ndarray:
    """``d (L u)_i + u_i (m_i - u_i)`` at every node, ``m_i`` the dual-cell average."""
    _check_grid(n, grid)
    u = np.asarray(u, dtype=float)
    if m_nodes is None:
        m_nodes = grid.cell_average(m)
    return d * _apply_laplacian(grid, u) + u * (m_nodes - u)


def effective_tolerance(tol):
    """``tol`` raised to the round-off floor of the relative residual."""
    return max(tol, 256.0 * np.finfo(float).eps)


def _residual_and_size(grid, d, m_nodes, u):
    flux = grid.face_coef * np.diff(u)
    div = np.zeros_like(u)
    div[:-1] += flux
    div[1:] -= flux
    # |L| |u|: operator entries and operands taken before any cancellation
    a = grid.face_coef
    au = np.abs(u)
    mag = np.zeros_like(u)
    mag[:-1] += a * (au[1:] + au[:-1])
    mag[1:] += a * (au[:-1] + au[1:])
    V = grid.volumes
    R = d * div / V + u * (m_nodes - u)
    size = d * mag / V + au * (m_nodes + au)
    return R, size


def relative_residual(grid, d, m_nodes, u) -> float:
    """Componentwise backward error ``max_i |R_i| / (d |L| |u| + u (m + u))_i``."""
    R, size = _residual_and_size(grid, d, m_nodes, u)
    return float(np.max(np.abs(R) / size))


def _polish(u, R, rn, d, lap, m_nodes, res):
    """Extra full Newton steps while the relative correction keeps shrinking.

    A small backward error does not bound the forward error of this
    ill-conditioned system, and quadratic convergence makes these steps cheap.
    """
    prev, extra = np.inf, 0
    for _ in range(POLISH_STEPS):
        J = d * lap
        J[1] += m_nodes - 2.0 * u
        delta = solve_banded((1, 1), J, -R)
        step = float(np.max(np.abs(delta) / u))
        trial = u + delta
        if step >= prev or not np.all(trial > 0):
            break
        Rt, size = res(trial)
        rt = float(np.max(np.abs(Rt) / size))
        u, R, rn, prev, extra = trial, Rt, max(rt, 0.0), step, extra + 1
        if step <= POLISH_STEP_TOL:
            break
    return u, R, rn, extra


def _initial_guess(n, m, grid, opts):
    if opts.initial_guess == "supplied":
        u0 = np.array(opts.guess, dtype=float)
        if u0.shape != grid.nodes.shape:
            raise ValueError("supplied guess has wrong shape")
        return u0
    if opts.initial_guess == "super-solution":
        return np.full(grid.size, m.sup)
    flat = m.l1_norm(n) / ball_volume(n)
    if opts.initial_guess == "flat-average":
        return np.full(grid.size, flat)
    p = opts.params
    top = p.eps ** (-p.n)
    return np.minimum(np.maximum(sub_solution_value(p, grid.nodes), flat), top)


def solve_steady(
    n: int,
    d: float,
    m: ResourceProfile,
    grid: Optional[RadialGrid] = None,
    opts: Optional[SolveOptions] = None,
) -> SteadySolution:
    """Damped Newton with tridiagonal solves.

    A step is halved until the iterate stays positive and the residual max-norm
    drops. If 30 halvings do not get there, 200 semi-implicit time steps are
    taken from the current iterate and Newton restarts.
    """
    if not d > 0:
        raise ValueError("d must be positive")
    opts = opts or SolveOptions()
    grid = grid or default_grid(n, m, d)
    _check_grid(n, grid)
    m_nodes = grid.cell_average(m)
    lap = diffusion_matrix(grid)

    def res(v):
        return _residual_and_size(grid, d, m_nodes, v)

    tol = effective_tolerance(opts.tol)
    u = _initial_guess(n, m, grid, opts)
    if np.any(u <= 0):
        raise NonPositiveIterate("initial guess must be positive", u)
    R, size = res(u)
    rn = float(np.max(np.abs(R) / size))
    fallbacks = 0
    for it in range(1, opts.max_newton + 1):
        if rn <= tol:
            u, R, rn, extra = _polish(u, R, rn, d, lap, m_nodes, res)
            return SteadySolution(grid, u, d, rn, it - 1 + extra, True, m, tol)
        J = d * lap
        J[1] += m_nodes - 2.0 * u
        delta = solve_banded((1, 1), J, -R)
        lam, accepted, saw_positive = 1.0, False, False
        for _ in range(MAX_HALVINGS):
            trial = u + lam * delta
            if np.all(trial > 0):
                saw_positive = True
                Rt, size_t = res(trial)
                rt = float(np.max(np.abs(Rt) / size_t))
                # a full step that keeps a super-solution is on the monotone branch
                keeps_super = lam == 1.0 and np.all(Rt <= tol * size_t)
                if rt < rn or keeps_super:
                    u, R, rn, accepted = trial, Rt, rt, True
                    break
            lam *= opts.damping
        if accepted:
            continue
        fallbacks += 1
        if fallbacks > MAX_FALLBACKS:
            break
        log.debug("newton stalled at iteration %d (residual %.3e); marching", it, rn)
        try:
            marched = march_to_steady(
                n, d, m, grid, u, dt=1.0 / m.sup, t_end=np.inf,
                max_steps=FALLBACK_STEPS, tol=tol,
            )
        except StepFailure as exc:
            if not saw_positive:
                raise NonPositiveIterate("positivity could not be restored", u) from exc
            raise
        u = marched.u
        R, size = res(u)
        rn = float(np.max(np.abs(R) / size))
    if rn <= tol:
        return SteadySolution(grid, u, d, rn, opts.max_newton, True, m, tol)
    raise NonConvergence(
        f"Newton did not reach tol {tol:g} (residual {rn:.3e})",
        u=u, residual=rn, iterations=opts.max_newton,
    )


def march_to_steady(
    n: int,
    d: float,
    m: ResourceProfile,
    grid: RadialGrid,
    u0,
    dt: float,
    t_end: float,
    tol: float = 1e-10,
    dt_max: Optional[float] = None,
    growth: float = 1.0,
    max_steps: Optional[int] = None,
) -> SteadySolution:
    """Semi-implicit time stepping of ``u_t = d Lap u + u (m - u)``.

    Each step solves ``(I/dt - d L - diag(m - u_k)) u_{k+1} = u_k / dt``. The
    step is capped at ``1 / max(sup m, max u_k)``, the stability limit of the
    lagged reaction term. ``dt`` may grow geometrically by ``growth`` up to
    ``dt_max``. Stops when ``|u_{k+1} - u_k| / dt`` is below ``tol`` relative to
    the term sizes of each node's equation.
    """
    _check_grid(n, grid)
    if not dt > 0:
        raise ValueError("dt must be positive")
    u = np.array(u0, dtype=float)
    if u.ndim == 0:
        u = np.full(grid.size, float(u))
    if np.any(u <= 0):
        raise ValueError("u0 must be positive")
    m_nodes = grid.cell_average(m)
    lap = diffusion_matrix(grid)
    dt_max = dt if dt_max is None else dt_max
    t, step, rate, converged = 0.0, 0, np.inf, False
    h = dt
    while t < t_end and (max_steps is None or step < max_steps):
        k = min(h, 1.0 / max(m.sup, float(np.max(u))), t_end - t)
        A = -d * lap
        A[1] += 1.0 / k - (m_nodes - u)
        new = solve_banded((1, 1), A, u / k)
        step += 1
        if not np.all(np.isfinite(new)):
            raise StepFailure(f"non-finite iterate at t={t:.4g}", u, t)
        if np.any(new <= 0):
            raise StepFailure(f"non-positive iterate at t={t:.4g}", u, t)
        _, size = _residual_and_size(grid, d, m_nodes, new)
        rate = float(np.max(np.abs(new - u) / k / size))
        u, t = new, t + k
        if rate <= tol:
            converged = True
            break
        h = min(h * growth, dt_max)
    return SteadySolution(grid, u, d, relative_residual(grid, d, m_nodes, u), step, converged, m, tol)


def solve_construction(params: ConstructionParams, grid: Optional[RadialGrid] = None, opts: Optional[SolveOptions] = None, d: Optional[float] = None) -> SteadySolution:
    """Solve the concentration problem for ``params`` with its own diffusion rule (or ``d``)."""
    m = params.profile
    d = params.d if d is None else d
    grid = grid or default_grid(params.n, m, d)
    if opts is None:
        opts = SolveOptions(initial_guess="sub-solution" if params.n >= 2 else "super-solution", params=params)
    return solve_steady(params.n, d, m, grid, opts)


def l1_norm(sol: SteadySolution) -> float:
    return sol.grid.integrate(sol.u)


def ratio(sol: SteadySolution, m: Optional[ResourceProfile] = None) -> float:
    """Total population over total resource, ``||u||_1 / ||m||_1``."""
    m = m or sol.profile
    if m is None:
        raise ValueError("resource profile required")
    return l1_norm(sol) / m.l1_norm(sol.n)


def nodal_derivative(grid: RadialGrid, u) -> np.ndarray:
    """Second-order centred ``u'`` on the nonuniform mesh, zero at both ends (symmetry / no flux)."""
    du = np.gradient(np.asarray(u, dtype=float), grid.nodes, edge_order=2)
    du[0] = 0.0
    du[-1] = 0.0
    return du


def energy_identity_residual(sol: SteadySolution, m: Optional[ResourceProfile] = None, d: Optional[float] = None) -> float:
    """Defect of ``||u||_1 - ||m||_1 = d int (u'/u)^2``, relative to ``||m||_1``."""
    m = m or sol.profile
    d = sol.d if d is None else d
    mass = m.l1_norm(sol.n)
    du = nodal_derivative(sol.grid, sol.u)
    dissipation = d * sol.grid.integrate((du / sol.u) ** 2)
    return abs((l1_norm(sol) - mass) - dissipation) / mass
