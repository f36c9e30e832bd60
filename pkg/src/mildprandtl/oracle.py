"""Independent finite-difference reference solvers and trajectory comparison.

These solvers exist to cross-check the mild-solution path and deliberately
share none of its numerics: x-derivatives are centered differences on the
periodic grid (never spectral), wall-normal integrals are trapezoidal,
and time stepping is semi-implicit Euler -- implicit in the wall-normal
diffusion (a tridiagonal solve per step), explicit in advection and
pressure.  Two formulations are provided: the physical system with its
Robin wall condition, and the gauged system with a Neumann wall flux.
Agreement of the two after gauge mapping is itself a strong check of the
transformation chain the mild solver is built on.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from .errors import (CompatibilityError, ConfigurationError, DomainError,
                     InstabilityError)
from .fields import Field2D, Gauge, Trajectory, make_grid
from .prandtl import EulerTrace

BLOWUP_GUARD = 1e6


@dataclass(frozen=True)
class FDConfig:
    """Resolution knobs of the finite-difference oracle, independent of the
    mild solver's configuration.  robin_ghost picks the ghost-node closure
    of the wall condition: "second_order" eliminates a centered ghost
    value, "first_order" imposes the one-sided flux algebraically."""

    NY: int = 257
    L: float = 15.0
    dt: float = 2e-4
    robin_ghost: str = "second_order"

    def __post_init__(self):
        if self.NY < 8:
            raise ConfigurationError(f"NY={self.NY} too small for the FD stencils")
        if self.L <= 0 or self.dt <= 0:
            raise ConfigurationError("L and dt must be positive")
        if self.robin_ghost not in ("first_order", "second_order"):
            raise ConfigurationError(
                f"unknown ghost closure {self.robin_ghost!r}")


# ---------------------------------------------------------------------------
# small FD helpers (independent of the fields-module operators)
# ---------------------------------------------------------------------------

def _dx_centered(vals: np.ndarray, dx: float) -> np.ndarray:
    return (np.roll(vals, -1, axis=0) - np.roll(vals, 1, axis=0)) / (2 * dx)


def _dy_centered(vals: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(vals)
    out[:, 1:-1] = (vals[:, 2:] - vals[:, :-2]) / (2 * h)
    out[:, 0] = (-3 * vals[:, 0] + 4 * vals[:, 1] - vals[:, 2]) / (2 * h)
    out[:, -1] = (3 * vals[:, -1] - 4 * vals[:, -2] + vals[:, -3]) / (2 * h)
    return out


def _cumtrapz_y(vals: np.ndarray, h: float) -> np.ndarray:
    out = np.zeros_like(vals)
    np.cumsum((vals[:, 1:] + vals[:, :-1]) * (h / 2), axis=1, out=out[:, 1:])
    return out


def _resample_to(vals: np.ndarray, y_src: np.ndarray,
                 y_tgt: np.ndarray) -> np.ndarray:
    if len(y_src) == len(y_tgt) and np.array_equal(y_src, y_tgt):
        return vals
    return CubicSpline(y_src, vals, axis=1)(y_tgt)


def _steps_for(T: float, dt: float) -> int:
    n = int(round(T / dt))
    if n < 1 or abs(n * dt - T) > 1e-9:
        raise ConfigurationError(
            f"T={T} is not a whole number of dt={dt} steps")
    return n


def _check_blowup(vals: np.ndarray, what: str) -> None:
    peak = float(np.max(np.abs(vals)))
    if not np.isfinite(peak) or peak > BLOWUP_GUARD:
        raise InstabilityError(f"{what} reached sup {peak:.3g}; FD scheme "
                               "blew up")


def _check_cfl(speed_x: float, speed_y: float, dx: float, h: float,
               dt: float, stats: dict | None) -> None:
    cfl = float(dt * (speed_x / dx + speed_y / h))
    if stats is not None:
        stats["cfl_max"] = max(stats.get("cfl_max", 0.0), cfl)
    if cfl > 1.0:
        raise ConfigurationError(
            f"explicit advection CFL number {cfl:.3f} exceeds 1; reduce dt")


def _diffusion_bands(NY: int, h: float, dt: float) -> np.ndarray:
    """Banded form of I - dt d_YY with interior rows filled; boundary rows
    are adjusted by the callers."""
    ab = np.zeros((3, NY))
    r = dt / (h * h)
    ab[0, 2:] = -r          # upper diagonal (columns 2..)
    ab[1, 1:-1] = 1 + 2 * r  # main diagonal, interior
    ab[2, :-2] = -r          # lower diagonal
    return ab


# ---------------------------------------------------------------------------
# physical (Robin) formulation
# ---------------------------------------------------------------------------

def fd_solve_robin(u0P: Field2D, Utrace: EulerTrace, cfg: FDConfig,
                   T: float, *, store_every: int = 1,
                   stats: dict | None = None) -> Trajectory:
    """March the physical system with a Robin wall and far field matched to
    the Euler trace.  Diffusion is implicit; advection, pressure, and the
    vertical velocity (recomputed each step from incompressibility) are
    explicit."""
    if u0P.gauge is not Gauge.PHYSICAL:
        raise DomainError("fd_solve_robin expects PHYSICAL input")
    Nx = u0P.grid.Nx
    grid = make_grid(Nx, cfg.NY, cfg.L, scheme="uniform")
    y = grid.y_nodes
    h = y[1] - y[0]
    dx = 2 * np.pi / Nx
    u = _resample_to(u0P.values, u0P.grid.y_nodes, y).copy()

    flux0 = (-3 * u[:, 0] + 4 * u[:, 1] - u[:, 2]) / (2 * h)
    gap = float(np.max(np.abs(u[:, 0] - flux0)))
    if gap > 1e-3 * (1.0 + np.abs(u).max()):
        raise CompatibilityError(
            f"(u - dY u) at the wall is {gap:.3e}; datum violates the "
            "Robin condition")

    n = _steps_for(T, cfg.dt)
    ab = _diffusion_bands(cfg.NY, h, cfg.dt)
    r = cfg.dt / (h * h)
    if cfg.robin_ghost == "second_order":
        # ghost u_{-1} = u_1 - 2h u_0 folded into the row-0 stencil
        ab[1, 0] = 1 + r * (2 + 2 * h)
        ab[0, 1] = -2 * r
    else:
        # algebraic one-sided flux row: (1+h) u_0 - u_1 = 0
        ab[1, 0] = 1 + h
        ab[0, 1] = -1.0
    ab[1, -1] = 1.0  # Dirichlet far field
    ab[2, -2] = 0.0

    times = [0.0]
    snaps = [Field2D(grid, u.copy(), Gauge.PHYSICAL, 0.0)]
    for step in range(1, n + 1):
        t = step * cfg.dt
        _check_blowup(u, "physical velocity")
        ux = _dx_centered(u, dx)
        v = -_cumtrapz_y(ux, h)
        _check_cfl(float(np.abs(u).max()), float(np.abs(v).max()),
                   dx, h, cfg.dt, stats)
        rhs = u - cfg.dt * (u * ux + v * _dy_centered(u, h)
                            + Utrace.px(grid.x, t - cfg.dt)[:, None])
        if cfg.robin_ghost == "first_order":
            rhs[:, 0] = 0.0
        rhs[:, -1] = Utrace.U(grid.x, t)
        u = solve_banded((1, 1), ab, rhs.T).T
        if step % store_every == 0 or step == n:
            times.append(t)
            snaps.append(Field2D(grid, u.copy(), Gauge.PHYSICAL, t))
    return Trajectory(tuple(times), tuple(snaps))


# ---------------------------------------------------------------------------
# gauged (Neumann) formulation
# ---------------------------------------------------------------------------

def fd_solve_gauged(u0: Field2D, Utrace: EulerTrace, cfg: FDConfig,
                    T: float, *, store_every: int = 1,
                    stats: dict | None = None) -> Trajectory:
    """March the gauged system with an inhomogeneous Neumann wall flux.

    The nonlinear source is evaluated with centered finite differences in
    both directions and a trapezoidal vertical integral, keeping this code
    path disjoint from the mild solver's spectral/quadrature operators."""
    if u0.gauge is not Gauge.GAUGED:
        raise DomainError("fd_solve_gauged expects GAUGED input")
    Nx = u0.grid.Nx
    grid = make_grid(Nx, cfg.NY, cfg.L, scheme="uniform")
    y = grid.y_nodes
    h = y[1] - y[0]
    dx = 2 * np.pi / Nx
    u = _resample_to(u0.values, u0.grid.y_nodes, y).copy()

    flux0 = (-3 * u[:, 0] + 4 * u[:, 1] - u[:, 2]) / (2 * h)
    gap = float(np.max(np.abs(flux0 - Utrace.U(grid.x, 0.0))))
    if gap > 1e-3 * (1.0 + np.abs(u).max()):
        raise CompatibilityError(
            f"dY u0 at the wall misses U(x,0) by {gap:.3e}")

    n = _steps_for(T, cfg.dt)
    ab = _diffusion_bands(cfg.NY, h, cfg.dt)
    r = cfg.dt / (h * h)
    if cfg.robin_ghost == "second_order":
        ab[1, 0] = 1 + 2 * r
        ab[0, 1] = -2 * r
    else:
        ab[1, 0] = 1.0
        ab[0, 1] = -1.0
    ab[1, -1] = 1.0  # gauged field is pinned to zero at the top
    ab[2, -2] = 0.0

    ey = np.exp(y)[None, :]
    times = [0.0]
    snaps = [Field2D(grid, u.copy(), Gauge.GAUGED, 0.0)]
    for step in range(1, n + 1):
        t = step * cfg.dt
        t_prev = t - cfg.dt
        ey_u = ey * u
        _check_blowup(ey_u, "gauged velocity (exponentially weighted)")
        U = Utrace.U(grid.x, t_prev)[:, None]
        Ux = Utrace.dUdx(grid.x, t_prev)[:, None]
        ux = _dx_centered(u, dx)
        uy = _dy_centered(u, h)
        bracket = _cumtrapz_y(ey * ux, h) + y[None, :] * Ux
        K = (-(ey_u * ux + u * Ux + U * ux) + u + bracket * (uy + u))
        _check_cfl(float((np.abs(ey_u) + np.abs(U)).max()),
                   float(np.abs(bracket).max() + 2.0), dx, h, cfg.dt, stats)
        rhs = u + cfg.dt * (K + 2.0 * uy)
        Unew = Utrace.U(grid.x, t)
        if cfg.robin_ghost == "second_order":
            rhs[:, 0] -= (2 * cfg.dt / h) * Unew
        else:
            rhs[:, 0] = -h * Unew
        rhs[:, -1] = 0.0
        u = solve_banded((1, 1), ab, rhs.T).T
        if step % store_every == 0 or step == n:
            times.append(t)
            snaps.append(Field2D(grid, u.copy(), Gauge.GAUGED, t))
    return Trajectory(tuple(times), tuple(snaps))


# ---------------------------------------------------------------------------
# trajectory comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CompareReport:
    """Per-snapshot and global error metrics between two trajectories,
    evaluated at the first trajectory's times inside the overlap after
    resampling both onto the finer grid."""

    times: tuple[float, ...]
    abs_linf: tuple[float, ...]
    rel_linf: tuple[float, ...]
    abs_l2: tuple[float, ...]
    rel_l2: tuple[float, ...]
    global_abs_linf: float
    global_rel_linf: float
    global_abs_l2: float
    global_rel_l2: float

    def as_dict(self) -> dict:
        return {
            "times": list(self.times),
            "abs_linf": list(self.abs_linf),
            "rel_linf": list(self.rel_linf),
            "abs_l2": list(self.abs_l2),
            "rel_l2": list(self.rel_l2),
            "global_abs_linf": self.global_abs_linf,
            "global_rel_linf": self.global_rel_linf,
            "global_abs_l2": self.global_abs_l2,
            "global_rel_l2": self.global_rel_l2,
        }


def _resample_x(vals: np.ndarray, Nx_tgt: int) -> np.ndarray:
    Nx = vals.shape[0]
    if Nx == Nx_tgt:
        return vals
    hat = np.fft.rfft(vals, axis=0) / Nx
    out = np.zeros((Nx_tgt // 2 + 1, vals.shape[1]), dtype=complex)
    keep = min(hat.shape[0], out.shape[0])
    out[:keep] = hat[:keep]
    return np.fft.irfft(out * Nx_tgt, n=Nx_tgt, axis=0)


def _at_time(traj: Trajectory, t: float) -> np.ndarray:
    times = np.asarray(traj.times, dtype=float)
    j = int(np.searchsorted(times, t))
    if j < len(times) and abs(times[j] - t) <= 1e-12:
        return traj.snapshots[j].values
    lo, hi = j - 1, j
    w = (t - times[lo]) / (times[hi] - times[lo])
    return ((1 - w) * traj.snapshots[lo].values
            + w * traj.snapshots[hi].values)


def compare(a: Trajectory, b: Trajectory) -> CompareReport:
    """Errors between two trajectories: linear interpolation in time,
    cubic in Y, spectral in x, onto the finer of the two grids."""
    ga = a.snapshots[0].grid
    gb = b.snapshots[0].grid
    if abs(ga.L - gb.L) > 1e-12:
        raise DomainError("trajectories live on different domain heights")
    t_lo = max(a.times[0], b.times[0])
    t_hi = min(a.times[-1], b.times[-1])
    if t_hi < t_lo:
        raise DomainError("trajectories cover disjoint time ranges")
    fine = ga if (gb.NY, gb.Nx) <= (ga.NY, ga.Nx) else gb

    eval_times = [float(t) for t in a.times if t_lo <= t <= t_hi]
    al, rl, a2, r2 = [], [], [], []
    for t in eval_times:
        A = _resample_to(_resample_x(_at_time(a, t), fine.Nx),
                         ga.y_nodes, fine.y_nodes)
        B = _resample_to(_resample_x(_at_time(b, t), fine.Nx),
                         gb.y_nodes, fine.y_nodes)
        diff = A - B
        scale_inf = max(float(np.abs(A).max()), float(np.abs(B).max()))
        scale_l2 = max(float(np.sqrt(np.mean(A * A))),
                       float(np.sqrt(np.mean(B * B))))
        ai = float(np.abs(diff).max())
        a2i = float(np.sqrt(np.mean(diff * diff)))
        al.append(ai)
        rl.append(ai / scale_inf if scale_inf > 0 else 0.0)
        a2.append(a2i)
        r2.append(a2i / scale_l2 if scale_l2 > 0 else 0.0)
    return CompareReport(
        times=tuple(eval_times),
        abs_linf=tuple(al), rel_linf=tuple(rl),
        abs_l2=tuple(a2), rel_l2=tuple(r2),
        global_abs_linf=max(al), global_rel_linf=max(rl),
        global_abs_l2=max(a2), global_rel_l2=max(r2),
    )
