"""Finite-difference solver for the trajectory density's Fokker-Planck equation.

The stochastic dynamics induces the 2D advection-diffusion equation

    d(rho)/dt = -d(ux rho)/dx - d(uy rho)/dy
                + (1/4) (rho_xx - 2 rho_xy + rho_yy)

with ux = Im(d ln psi / dz), uy = -Re(d ln psi / dz), and the singular rank-one
diffusion tensor [[1/4, -1/4], [-1/4, 1/4]] that follows from the
anticorrelated coordinate noise.  The march is explicit forward-time
centered-space in conservative form, with the standard 4-corner stencil for
the cross derivative and rho = 0 Dirichlet edges.

The grid is cell-centered, so no point sits exactly on the coefficient
singularity at the origin.  Negative undershoot from the cross stencil is
clipped to zero after each step and reported as a quality diagnostic: a large
clipped fraction means the node vortices of the drift are under-resolved and
the field cannot be trusted (seen for n = 3 on coarse grids).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InstabilityDetected, ZeroMass
from .stats import EmpiricalDensity
from .wavefield import Eigenstate, ModelSpec, eigenstate_log_derivative_masked
from .hermite import hermite_log_abs

#: diffusion coefficients along each axis; the cross coefficient is -1/4
D_XX = 0.25
D_YY = 0.25

#: one-step growth factor that triggers InstabilityDetected
MAX_STEP_GROWTH = 10.0


@dataclass(frozen=True)
class FpGrid:
    """Cell-centered square grid on [-L, L]^2.

    nx, ny count interior cells; centers sit at -L + (i + 1/2) h, so the
    coefficient singularity at the origin is on the grid only if both counts
    are odd, which the constructor rejects.  dt_pde must satisfy the explicit
    diffusion bound dt <= h^2 / (2 (D_XX + D_YY)); the default takes half of
    it.
    """

    L: float = 5.0
    nx: int = 200
    ny: int = 200
    dt_pde: float | None = None

    def __post_init__(self):
        if self.L <= 0 or self.nx < 3 or self.ny < 3:
            raise ValueError("grid needs L > 0 and at least 3 cells per axis")
        if self.nx % 2 == 1 and self.ny % 2 == 1:
            raise ValueError("odd nx and ny would place a cell center at the origin")
        bound = self.stability_bound
        if self.dt_pde is None:
            object.__setattr__(self, "dt_pde", 0.5 * bound)
        elif not 0 < self.dt_pde <= bound:
            raise ValueError(f"dt_pde must be in (0, {bound:g}] for stability")

    @property
    def hx(self) -> float:
        return 2.0 * self.L / self.nx

    @property
    def hy(self) -> float:
        return 2.0 * self.L / self.ny

    @property
    def stability_bound(self) -> float:
        h2 = min(self.hx, self.hy) ** 2
        return h2 / (2.0 * (D_XX + D_YY))

    @property
    def x_centers(self) -> np.ndarray:
        return -self.L + (np.arange(self.nx) + 0.5) * self.hx

    @property
    def y_centers(self) -> np.ndarray:
        return -self.L + (np.arange(self.ny) + 0.5) * self.hy

    @property
    def x_edges(self) -> np.ndarray:
        return -self.L + np.arange(self.nx + 1) * self.hx

    def meshgrid(self):
        """(X, Y) with rows indexed by y and columns by x."""
        return np.meshgrid(self.x_centers, self.y_centers)


@dataclass(frozen=True)
class FpSolution:
    """Density field rho(t, x, y) over cell centers, rho[j, i] at (x_i, y_j)."""

    grid: FpGrid
    t: float
    rho: np.ndarray
    total_mass: float
    initial_mass: float = 0.0
    clipped_mass: float = 0.0
    steps: int = 0

    @property
    def mass_change(self) -> float:
        """Relative mass drift since t = 0 (clipping makes it either sign)."""
        if self.initial_mass == 0.0:
            return 0.0
        return self.total_mass / self.initial_mass - 1.0


def drift_field(model: ModelSpec, grid: FpGrid, drift_cap: float = 10.0,
                dt_ref: float = 0.01):
    """Drift components (u_x, u_y) at every cell center, magnitude-capped.

    u_x = Im(d ln psi/dz) and u_y = -Re(d ln psi/dz).  The cap reuses the
    trajectory integrator's rule: displacement drift_cap*sqrt(dt) at time step
    dt_ref means speed drift_cap/sqrt(dt_ref), so both solvers treat the same
    regularized problem.
    """
    if not isinstance(model, Eigenstate):
        raise TypeError("drift_field supports eigenstate models only")
    x, y = grid.meshgrid()
    g, near = eigenstate_log_derivative_masked(model.n, x + 1j * y)
    ux = np.where(near, 0.0, np.imag(g))
    uy = np.where(near, 0.0, -np.real(g))
    speed = np.hypot(ux, uy)
    cap = drift_cap / math.sqrt(dt_ref)
    scale = np.where(speed > cap, cap / np.where(speed == 0.0, 1.0, speed), 1.0)
    return ux * scale, uy * scale


def fp_initial(n: int, grid: FpGrid) -> np.ndarray:
    """Initial density |H_n(x+iy)|^2 exp(-x^2-y^2) / (2^n n! sqrt(pi)).

    For n = 1 this is exactly (2/sqrt(pi)) (x^2+y^2) exp(-x^2-y^2).  The
    normalization follows the eigenfunction convention; the field's plane
    integral is not 1 (recorded as a diagnostic, and immaterial for the
    affine-invariant comparisons downstream).
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    x, y = grid.meshgrid()
    log_norm = n * math.log(2.0) + math.lgamma(n + 1) + 0.5 * math.log(math.pi)
    log_h = hermite_log_abs(n, x + 1j * y)
    with np.errstate(over="ignore"):
        return np.exp(2.0 * log_h - x * x - y * y - log_norm)


def fp_step(solution: FpSolution, drift) -> FpSolution:
    """One explicit conservative FTCS update of the density field.

    Central differences throughout, 4-corner stencil for the cross
    derivative, zero-density ghost cells beyond all four edges.  Negative
    undershoot is clipped to zero and accumulated into clipped_mass.
    """
    grid = solution.grid
    hx, hy, dt = grid.hx, grid.hy, grid.dt_pde
    rho = solution.rho
    ux, uy = drift

    p = np.pad(rho, 1)
    fx = np.pad(ux * rho, 1)
    fy = np.pad(uy * rho, 1)
    div_x = (fx[1:-1, 2:] - fx[1:-1, :-2]) / (2.0 * hx)
    div_y = (fy[2:, 1:-1] - fy[:-2, 1:-1]) / (2.0 * hy)
    lap_x = (p[1:-1, 2:] - 2.0 * rho + p[1:-1, :-2]) / (hx * hx)
    lap_y = (p[2:, 1:-1] - 2.0 * rho + p[:-2, 1:-1]) / (hy * hy)
    cross = (p[2:, 2:] - p[2:, :-2] - p[:-2, 2:] + p[:-2, :-2]) / (4.0 * hx * hy)

    new = rho + dt * (-div_x - div_y + D_XX * lap_x - 0.5 * cross + D_YY * lap_y)

    peak = float(np.max(np.abs(new)))
    prev_peak = max(float(np.max(np.abs(rho))), 1e-300)
    if peak > MAX_STEP_GROWTH * prev_peak:
        raise InstabilityDetected(
            f"field grew {peak / prev_peak:.1f}x in one step at t={solution.t:g}"
        )

    negative = new < 0.0
    clipped = float(-np.sum(new[negative]) * hx * hy)
    new[negative] = 0.0
    return replace(
        solution,
        t=solution.t + dt,
        rho=new,
        total_mass=float(np.sum(new) * hx * hy),
        clipped_mass=solution.clipped_mass + clipped,
        steps=solution.steps + 1,
    )


def fp_solve(model: ModelSpec, grid: FpGrid, t_final: float,
             drift_cap: float = 10.0, dt_ref: float = 0.01) -> FpSolution:
    """March the initial eigenstate density to t_final.

    Returns the solution with mass and clipping diagnostics.  Callers should
    reject fields whose clipped_mass is a sizable fraction of the initial
    mass; that signals an under-resolved grid rather than a usable solution.
    """
    if not isinstance(model, Eigenstate):
        raise TypeError("fp_solve supports eigenstate models only")
    if t_final < 0:
        raise ValueError("t_final must be >= 0")
    rho0 = fp_initial(model.n, grid)
    mass0 = float(np.sum(rho0) * grid.hx * grid.hy)
    solution = FpSolution(grid=grid, t=0.0, rho=rho0, total_mass=mass0, initial_mass=mass0)
    n_steps = int(round(t_final / grid.dt_pde))
    if n_steps == 0:
        return solution
    drift = drift_field(model, grid, drift_cap=drift_cap, dt_ref=dt_ref)
    for _ in range(n_steps):
        solution = fp_step(solution, drift)
    return solution


def fp_marginal_x(solution: FpSolution) -> EmpiricalDensity:
    """x-marginal P(x_i) = sum_j rho[j, i] hy, renormalized to integrate to 1.

    Returned as an EmpiricalDensity on the grid's x-edges so it can feed the
    same Pearson machinery as the trajectory histograms (sample_count 0 marks
    it as an analytic density, not a sample estimate).
    """
    grid = solution.grid
    marginal = solution.rho.sum(axis=0) * grid.hy
    total = float(marginal.sum() * grid.hx)
    if total <= 0.0:
        raise ZeroMass("the field holds no mass")
    return EmpiricalDensity(
        bin_edges=grid.x_edges,
        densities=marginal / total,
        sample_count=0,
    )


def marginal_reference(solution: FpSolution):
    """The x-marginal as a callable reference (linear interpolation)."""
    marginal = fp_marginal_x(solution)
    centers = marginal.bin_centers
    values = marginal.densities

    def at(x):
        return np.interp(x, centers, values)

    at.__name__ = f"fp_marginal(t={solution.t:g})"
    return at


def sample_initial_points(n: int, count: int, seed: int,
                          half_width: float | None = None) -> np.ndarray:
    """Rejection-sample launch points from the fp_initial density.

    Gives the trajectory ensemble the same initial distribution the PDE
    evolves, which is what makes the two solvers directly comparable.
    Deterministic for a given seed.
    """
    if half_width is None:
        half_width = math.sqrt(2.0 * n + 1.0) + 2.5
    probe = np.linspace(-half_width, half_width, 401)
    px, py = np.meshgrid(probe, probe)
    log_norm = n * math.log(2.0) + math.lgamma(n + 1) + 0.5 * math.log(math.pi)

    def dens(x, y):
        return np.exp(2.0 * hermite_log_abs(n, x + 1j * y) - x * x - y * y - log_norm)

    fmax = float(dens(px, py).max()) * 1.25
    rng = np.random.Generator(np.random.PCG64(seed))
    out = np.empty(count, dtype=complex)
    got = 0
    while got < count:
        m = 3 * (count - got) + 1000
        x = rng.uniform(-half_width, half_width, m)
        y = rng.uniform(-half_width, half_width, m)
        u = rng.uniform(0.0, fmax, m)
        accept = u < dens(x, y)
        take = min(int(accept.sum()), count - got)
        picked = x[accept][:take] + 1j * y[accept][:take]
        out[got:got + take] = picked
        got += take
    return out
