"""Half-line heat potentials with a Neumann wall.

Three solution operators for the heat equation on Y in (0, infinity),
discretized on the truncated grid [0, L]:

* ``apply_E1`` -- propagates initial data by the even-reflection kernel
  E(Y - Y', t) + E(Y + Y', t); its output has zero wall flux for any datum.
* ``apply_E2`` -- single-layer potential producing a prescribed wall flux
  phi(x, t); evaluated through the reduced single integral
  -2 * integral_0^t E(Y, t-s) phi(s) ds (the flux of the kernel integrates
  out exactly), with the one-sided jump relation d/dY E2phi -> phi at Y=0+.
* ``apply_E3`` -- Duhamel source potential with the reflected kernel; the
  companion ``apply_E3_dY`` applies E3 to dY of a history either literally
  (``direct``) or by moving the derivative onto the kernel plus a wall term
  (``by_parts``).

Singular time integrals use the substitution s = t - sigma^2 on a geometric
panel cascade; spatial convolutions use the similarity variable
eta = (Y' - Y)/sqrt(4t) with 4-point interpolation of nodal data, so accuracy
is uniform as t -> 0.  Histories between snapshots are taken piecewise linear
in time, which turns E3 into cached per-lag matrix actions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ..errors import CompatibilityError, DomainError
from ..fields import Field2D, Gauge, Grid, Trajectory, ddy
from ._panels import lag_panels, sigma_cascade, similarity_rows

try:  # compiled quadrature core, with a NumPy fallback
    from . import _corecy as _core

    COMPILED = True
except ImportError:
    from . import _corenp as _core

    COMPILED = False

__all__ = [
    "COMPILED",
    "KernelWorkspace",
    "apply_E1",
    "apply_E2",
    "apply_E3",
    "apply_E3_dY",
    "eval_E",
    "eval_H",
]

_SQRT_PI = np.sqrt(np.pi)


# ---------------------------------------------------------------------------
# pointwise kernels
# ---------------------------------------------------------------------------

def eval_E(Y, t: float):
    """Half-line heat kernel E(Y, t) = (4 pi t)^{-1/2} exp(-Y^2/(4t))."""
    if t <= 0:
        raise DomainError(f"heat kernel needs t > 0, got {t}")
    Y = np.asarray(Y, dtype=float)
    out = np.exp(-(Y * Y) / (4.0 * t)) / np.sqrt(4.0 * np.pi * t)
    return float(out) if out.ndim == 0 else out


def eval_H(Y, t: float):
    """Flux kernel H(Y, t) = (Y/t) E(Y, t) = -2 dE/dY."""
    if t <= 0:
        raise DomainError(f"flux kernel needs t > 0, got {t}")
    Y = np.asarray(Y, dtype=float)
    out = (Y / t) * np.exp(-(Y * Y) / (4.0 * t)) / np.sqrt(4.0 * np.pi * t)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# workspace: cached quadrature tables
# ---------------------------------------------------------------------------

class LagEntry(NamedTuple):
    """Matrices turning piecewise-linear history values on one lag interval
    [lo, hi] into their Duhamel contribution: ``older @ P.T + newer @ R.T``.

    P/R integrate the even-reflection kernel, Pt/Rt its (negated) Y'
    derivative, bP/bR the wall term -2 E(Y, l)."""

    P: np.ndarray
    R: np.ndarray
    Pt: np.ndarray
    Rt: np.ndarray
    bP: np.ndarray
    bR: np.ndarray


def _similarity_matrix(grid: Grid, s: float, kind: int) -> np.ndarray:
    """Dense matrix S with (S f)_m ~ (1/sqrt(pi)) * integral of
    w(eta) f(|Y_m + s eta|) d eta, for w = e^{-eta^2} (kind 0) or
    eta e^{-eta^2} sgn(Y_m + s eta) (kind 1)."""
    rows, eta, we = similarity_rows(grid.y_nodes, grid.L, s)
    z = grid.y_nodes[rows] + s * eta
    pts = np.minimum(np.abs(z), grid.L)
    g = np.exp(-eta * eta) / _SQRT_PI
    if kind == 0:
        coeffs = we * g
    else:
        coeffs = we * g * eta * np.sign(z)
    return _core.scatter_lagrange4(grid.NY, grid.y_nodes, rows, pts, coeffs)


def _similarity_pair(grid: Grid, s: float, row_idx: np.ndarray | None = None):
    """Both kinds of similarity matrix from one set of quadrature tables.

    ``row_idx`` restricts assembly to a subset of output rows; the other
    rows of the returned matrices are zero."""
    rows, eta, we = similarity_rows(grid.y_nodes, grid.L, s, row_idx)
    z = grid.y_nodes[rows] + s * eta
    pts = np.minimum(np.abs(z), grid.L)
    g = we * np.exp(-eta * eta) / _SQRT_PI
    S0 = _core.scatter_lagrange4(grid.NY, grid.y_nodes, rows, pts, g)
    S1 = _core.scatter_lagrange4(grid.NY, grid.y_nodes, rows, pts,
                                 g * eta * np.sign(z))
    return S0, S1


@dataclass(eq=False)
class KernelWorkspace:
    """Per-grid cache of quadrature tables for the three potentials.

    ``reflect_tab`` maps a lag interval (as rounded floats) to its
    :class:`LagEntry`; ``sim_tab`` caches E1 similarity matrices per time.
    On uniform time grids the lag intervals repeat, so one chunk's worth of
    entries serves every evaluation time, Picard iterate, and chunk.
    """

    grid: Grid
    time_nodes: np.ndarray | None = None
    reflect_tab: dict = field(default_factory=dict)
    sim_tab: dict = field(default_factory=dict)

    def sing_quad(self, t: float):
        """Product-integration rule for integral_0^t g(s) (t-s)^{-1/2} ds
        as sum w_q g(t - sigma_q^2); exact (1e-12) for g = 1."""
        sig, w = sigma_cascade(np.sqrt(t), self._sigma_min())
        return sig, 2.0 * w

    def _sigma_min(self) -> float:
        return float(self.grid.y_nodes[1]) / 6.0

    def sim_matrix(self, t: float) -> np.ndarray:
        s = float(np.sqrt(4.0 * t))
        key = f"{s:.14g}"
        S = self.sim_tab.get(key)
        if S is None:
            S = _similarity_matrix(self.grid, s, kind=0)
            self.sim_tab[key] = S
        return S

    def lag_entry(self, lo: float, hi: float) -> LagEntry:
        lo = max(float(lo), 0.0)
        hi = float(hi)
        if hi <= lo:
            raise DomainError(f"empty lag interval [{lo}, {hi}]")
        key = (f"{lo:.12g}", f"{hi:.12g}")
        ent = self.reflect_tab.get(key)
        if ent is None:
            ent = self._build_entry(lo, hi)
            self.reflect_tab[key] = ent
        return ent

    # -- assembly ----------------------------------------------------------

    def _build_entry(self, lo: float, hi: float) -> LagEntry:
        y = self.grid.y_nodes
        wq = self.grid.y_weights
        if lo <= 1e-12 * max(hi, 1.0):
            lo = 0.0
            Q0, Q1, Qt0, Qt1, b0, b1 = self._build_singular(hi)
        else:
            nodes, wts = lag_panels(lo, hi)
            Q0, Q1 = _core.lag_kernel_mats(y, wq, nodes, wts, 0)
            Qt0, Qt1 = _core.lag_kernel_mats(y, wq, nodes, wts, 1)
            # Nodal quadrature in Y' cannot resolve the image kernel's
            # sqrt(4 l) wall layer for rows near Y = 0, and aliases the
            # difference kernel wherever the local spacing exceeds about
            # half the kernel width; rebuild those rows in the similarity
            # variable, where both are exact.
            h = np.diff(y)
            hloc = np.maximum(np.concatenate([h[:1], h]),
                              np.concatenate([h, h[-1:]]))
            idx = np.nonzero((y < 8.0 * np.sqrt(4.0 * hi))
                             | (hloc > 0.57 * np.sqrt(4.0 * lo)))[0]
            if idx.size:
                for mat in (Q0, Q1, Qt0, Qt1):
                    mat[idx] = 0.0
                for ell, wl in zip(nodes, wts):
                    sig = np.sqrt(ell)
                    S0, S1 = _similarity_pair(self.grid, 2.0 * sig, idx)
                    Q0[idx] += wl * S0[idx]
                    Q1[idx] += (wl * ell) * S0[idx]
                    Qt0[idx] += (wl / sig) * S1[idx]
                    Qt1[idx] += (wl * sig) * S1[idx]
            E = np.exp(-np.square(y[:, None]) / (4.0 * nodes[None, :]))
            E /= np.sqrt(4.0 * np.pi * nodes[None, :])
            b0 = -2.0 * (E @ wts)
            b1 = -2.0 * (E @ (wts * nodes))
        dlt = hi - lo
        return LagEntry(
            P=(hi * Q0 - Q1) / dlt, R=(Q1 - lo * Q0) / dlt,
            Pt=(hi * Qt0 - Qt1) / dlt, Rt=(Qt1 - lo * Qt0) / dlt,
            bP=(hi * b0 - b1) / dlt, bR=(b1 - lo * b0) / dlt,
        )

    def _build_singular(self, delta: float):
        """Lag interval touching l = 0: the kernel's delta-limit is handled
        by assembling in the similarity variable under the s = t - sigma^2
        substitution (no product quadrature across the near-singularity)."""
        grid = self.grid
        ny = grid.NY
        sig, w = sigma_cascade(np.sqrt(delta), self._sigma_min())
        Q0 = np.zeros((ny, ny))
        Q1 = np.zeros((ny, ny))
        Qt0 = np.zeros((ny, ny))
        Qt1 = np.zeros((ny, ny))
        for sq, wq in zip(sig, w):
            S0, S1 = _similarity_pair(grid, 2.0 * sq)
            Q0 += (2.0 * sq * wq) * S0
            Q1 += (2.0 * sq ** 3 * wq) * S0
            Qt0 += (2.0 * wq) * S1
            Qt1 += (2.0 * wq * sq * sq) * S1
        W = np.exp(-np.square(grid.y_nodes[:, None]) / (4.0 * np.square(sig[None, :])))
        b0 = -(2.0 / _SQRT_PI) * (W @ w)
        b1 = -(2.0 / _SQRT_PI) * (W @ (w * sig * sig))
        return Q0, Q1, Qt0, Qt1, b0, b1


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

def apply_E1(u0: Field2D, t: float, ws: KernelWorkspace | None = None) -> Field2D:
    """Propagate ``u0`` by the Neumann (even-reflection) heat semigroup."""
    if t <= 0:
        raise DomainError(f"apply_E1 needs t > 0, got {t}")
    if ws is None:
        ws = KernelWorkspace(u0.grid)
    elif ws.grid is not u0.grid:
        raise DomainError("workspace grid differs from field grid")
    S = ws.sim_matrix(t)
    return u0.with_values(u0.values @ S.T, time=t)


def _phi_at(phi, s_vals: np.ndarray, Nx: int) -> np.ndarray:
    """Evaluate a wall time-series at arbitrary times -> (len(s_vals), Nx).

    ``phi`` is either a callable s -> scalar or (Nx,), or a pair
    (times, values) sampled on time nodes (linearly interpolated, clamped).
    """
    if callable(phi):
        out = np.empty((len(s_vals), Nx))
        for q, s in enumerate(s_vals):
            out[q] = np.broadcast_to(np.asarray(phi(float(s)), dtype=float), (Nx,))
        return out
    times, vals = phi
    times = np.asarray(times, dtype=float)
    vals = np.asarray(vals, dtype=float)
    if vals.ndim == 1:
        vals = np.broadcast_to(vals[:, None], (len(times), Nx))
    if len(times) == 1:
        return np.broadcast_to(vals[0], (len(s_vals), Nx)).copy()
    idx = np.clip(np.searchsorted(times, s_vals) - 1, 0, len(times) - 2)
    th = (s_vals - times[idx]) / (times[idx + 1] - times[idx])
    th = np.clip(th, 0.0, 1.0)[:, None]
    return (1.0 - th) * vals[idx] + th * vals[idx + 1]


def apply_E2(phi, t: float, ws: KernelWorkspace,
             compat_tol: float = 1e-8) -> Field2D:
    """Single-layer potential with wall flux ``phi``; needs phi(0) = 0.

    The reduced single-integral form is used; the wall flux of the output is
    the one-sided limit Y -> 0+ (a jump relation), never the symmetric
    derivative at Y = 0, which vanishes identically.
    """
    grid = ws.grid
    if t < 0:
        raise DomainError(f"apply_E2 needs t >= 0, got {t}")
    phi0 = _phi_at(phi, np.zeros(1), grid.Nx)[0]
    if np.max(np.abs(phi0)) > compat_tol:
        raise CompatibilityError(
            f"phi(0) = {np.max(np.abs(phi0)):.3e} violates the zero-flux "
            f"compatibility at t = 0 (tol {compat_tol:.1e})"
        )
    if t == 0:
        return Field2D.zeros(grid, Gauge.GAUGED, 0.0)
    sig, w = ws.sing_quad(t)
    PH = _phi_at(phi, t - sig * sig, grid.Nx)
    W = np.exp(-np.square(grid.y_nodes[None, :]) / (4.0 * np.square(sig[:, None])))
    vals = -(1.0 / _SQRT_PI) * np.einsum("qx,q,qn->xn", PH, w, W)
    return Field2D(grid, vals, Gauge.GAUGED, t)


def _locate(times: np.ndarray, t: float) -> int:
    j = int(np.searchsorted(times, t - 1e-12))
    if j >= len(times) or abs(times[j] - t) > 1e-10 * max(1.0, abs(t)):
        raise DomainError(f"t = {t} is not a history node (nodes up to {times[-1]})")
    return j


def _duhamel(traj: Trajectory, t: float, ws: KernelWorkspace,
             derivative_kernel: bool, wall_term: bool) -> Field2D:
    if ws.grid is not traj.grid:
        raise DomainError("workspace grid differs from trajectory grid")
    j = _locate(traj.times, t)
    acc = ws.grid.zeros()
    for i in range(j):
        lo = t - traj.times[i + 1]
        hi = t - traj.times[i]
        ent = ws.lag_entry(lo, hi)
        P, R = (ent.Pt, ent.Rt) if derivative_kernel else (ent.P, ent.R)
        vi = traj.snapshots[i].values
        vn = traj.snapshots[i + 1].values
        acc += vi @ P.T + vn @ R.T
        if wall_term:
            acc += np.outer(vi[:, 0], ent.bP) + np.outer(vn[:, 0], ent.bR)
    return Field2D(ws.grid, acc, traj.gauge, t)


def apply_E3(source: Trajectory, t: float, ws: KernelWorkspace) -> Field2D:
    """Duhamel integral of a source history with the reflected kernel."""
    return _duhamel(source, t, ws, derivative_kernel=False, wall_term=False)


def apply_E3_dY(u_hist: Trajectory, t: float, ws: KernelWorkspace,
                path: str = "by_parts") -> Field2D:
    """E3 applied to the Y-derivative of a history.

    ``direct`` differentiates the snapshots; ``by_parts`` moves the
    derivative onto the kernel (sign flip on the reflected image) plus the
    wall contribution -2 integral E(Y, t-s) u(x, 0, s) ds.
    """
    if path == "direct":
        dsnaps = tuple(ddy(s) for s in u_hist.snapshots)
        dtraj = Trajectory(u_hist.times, dsnaps)
        return _duhamel(dtraj, t, ws, derivative_kernel=False, wall_term=False)
    if path == "by_parts":
        return _duhamel(u_hist, t, ws, derivative_kernel=True, wall_term=True)
    raise DomainError(f"unknown path {path!r}")
