"""Discretization substrate: grids, spectral x-derivatives, finite-difference
Y-derivatives, cumulative Y-quadrature, and the field/trajectory containers
used by every other module.

Conventions
-----------
* x lives on the periodic interval [0, 2pi) with Nx equispaced nodes; Nx is a
  power of two so spectral transforms and 2/3-rule dealiasing are exact.
* Y lives on [0, L]; fields in the decayed gauges must be negligible at Y = L.
* ``values`` arrays are shaped (Nx, NY), x varying along the first axis.
* All operations are pure: they return new fields and never mutate inputs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DecayViolationError, DomainError

DEFAULT_FAR_FIELD_TOL = 1e-8

#: node-density ratio of the stretched map (spacing at Y=L over spacing at Y=0)
STRETCH_RATIO = 20.0


class Gauge(enum.Enum):
    """Which representation a field's values are in.

    PHYSICAL is the wall-frame tangential velocity, TILDE has the far-field
    trace subtracted, GAUGED additionally carries the e^{-Y} weight that turns
    the Robin wall condition into a Neumann one.
    """

    PHYSICAL = "physical"
    TILDE = "tilde"
    GAUGED = "gauged"


# ---------------------------------------------------------------------------
# finite-difference weights (Fornberg's recurrence, arbitrary nodes)
# ---------------------------------------------------------------------------

def _fornberg(m: int, x0: float, x: np.ndarray) -> np.ndarray:
    """Weights of the order-``m`` derivative at ``x0`` from samples at ``x``."""
    n = len(x)
    c = np.zeros((n, m + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = x[0] - x0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


def _stencil_tables(y: np.ndarray, m: int, width: int = 5):
    """Per-row start indices and weights for an order-``m`` derivative."""
    ny = len(y)
    half = width // 2
    starts = np.clip(np.arange(ny) - half, 0, ny - width)
    w = np.empty((ny, width))
    for i in range(ny):
        s = starts[i]
        w[i] = _fornberg(m, y[i], y[s : s + width])
    return starts, w


# ---------------------------------------------------------------------------
# cumulative quadrature (per-interval integrals of 6-point interpolants)
# ---------------------------------------------------------------------------

def _cumulative_weights(y: np.ndarray) -> np.ndarray:
    """Lower-triangular-ish matrix C with (C f)_i = integral of f over [0, Y_i].

    Each interval integral uses the degree-5 interpolant through the six
    nearest nodes, so the composite rule is exact for quintics and converges
    at sixth order on smooth data.
    """
    ny = len(y)
    stencil = min(6, ny)
    gx, gw = np.polynomial.legendre.leggauss(4)  # exact through degree 7
    rows = np.zeros((ny, ny))
    for m in range(ny - 1):
        a, b = y[m], y[m + 1]
        lo = min(max(m - 2, 0), ny - stencil)
        nodes = y[lo : lo + stencil]
        pts = 0.5 * (b - a) * gx + 0.5 * (a + b)
        wts = 0.5 * (b - a) * gw
        for j in range(stencil):
            basis = np.ones_like(pts)
            for r in range(stencil):
                if r != j:
                    basis *= (pts - nodes[r]) / (nodes[j] - nodes[r])
            rows[m + 1, lo + j] = basis @ wts
    return np.cumsum(rows, axis=0)


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Grid:
    """Tensor grid for the periodized half-space strip [0, 2pi) x [0, L].

    Attributes
    ----------
    Nx, NY : int
        Point counts in x (periodic, power of two) and Y.
    L : float
        Truncation height of the Y axis.
    scheme : str
        ``"uniform"`` or ``"stretched"`` (nodes clustered near the wall).
    y_nodes, y_weights : ndarray
        Strictly increasing nodes on [0, L] and quadrature weights for
        ``integral_0^L``.
    """

    Nx: int
    NY: int
    L: float
    scheme: str
    y_nodes: np.ndarray
    y_weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", 2.0 * np.pi * np.arange(self.Nx) / self.Nx)
        # integer wavenumbers of the real FFT, 0..Nx/2
        object.__setattr__(self, "k", np.arange(self.Nx // 2 + 1, dtype=float))
        object.__setattr__(self, "dealias_mask", self.k <= self.Nx / 3.0)
        object.__setattr__(self, "_cumw", _cumulative_weights(self.y_nodes))
        s1, w1 = _stencil_tables(self.y_nodes, 1)
        s2, w2 = _stencil_tables(self.y_nodes, 2)
        object.__setattr__(self, "_d1_starts", s1)
        object.__setattr__(self, "_d1_weights", w1)
        object.__setattr__(self, "_d2_starts", s2)
        object.__setattr__(self, "_d2_weights", w2)
        idx1 = s1[:, None] + np.arange(w1.shape[1])[None, :]
        idx2 = s2[:, None] + np.arange(w2.shape[1])[None, :]
        object.__setattr__(self, "_d1_idx", idx1)
        object.__setattr__(self, "_d2_idx", idx2)

    def zeros(self) -> np.ndarray:
        return np.zeros((self.Nx, self.NY))

    def mesh(self):
        """Broadcastable (x, Y) coordinate arrays shaped (Nx, 1) and (1, NY)."""
        return self.x[:, None], self.y_nodes[None, :]


def make_grid(Nx: int, NY: int, L: float, scheme: str = "uniform") -> Grid:
    """Build a grid; ``stretched`` clusters nodes near Y=0 with density
    ratio :data:`STRETCH_RATIO` via the smooth map L(e^{a s}-1)/(e^a-1)."""
    if Nx < 8 or Nx & (Nx - 1) != 0:
        raise ConfigurationError(f"Nx must be a power of two >= 8, got {Nx}")
    if NY < 16:
        raise ConfigurationError(f"NY must be >= 16, got {NY}")
    if not (L > 0):
        raise ConfigurationError(f"L must be positive, got {L}")
    s = np.linspace(0.0, 1.0, NY)
    if scheme == "uniform":
        y = L * s
    elif scheme == "stretched":
        a = np.log(STRETCH_RATIO)
        y = L * np.expm1(a * s) / np.expm1(a)
    else:
        raise ConfigurationError(f"unknown grid scheme {scheme!r}")
    y[0] = 0.0
    y[-1] = L
    grid = Grid(Nx=Nx, NY=NY, L=float(L), scheme=scheme, y_nodes=y,
                y_weights=None)  # weights filled below from the cumulative rule
    object.__setattr__(grid, "y_weights", grid._cumw[-1].copy())
    return grid


# ---------------------------------------------------------------------------
# fields and trajectories
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Field2D:
    """A scalar field sampled on a :class:`Grid` at one time instant."""

    grid: Grid
    values: np.ndarray
    gauge: Gauge
    time: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.Nx, self.grid.NY):
            raise DomainError(
                f"values shape {v.shape} != grid shape {(self.grid.Nx, self.grid.NY)}"
            )
        if not np.all(np.isfinite(v)):
            raise DomainError("field contains non-finite values")
        object.__setattr__(self, "values", v)

    def with_values(self, values: np.ndarray, gauge: Gauge | None = None,
                    time: float | None = None) -> "Field2D":
        return Field2D(self.grid, values,
                       self.gauge if gauge is None else gauge,
                       self.time if time is None else float(time))

    @staticmethod
    def zeros(grid: Grid, gauge: Gauge = Gauge.GAUGED, time: float = 0.0) -> "Field2D":
        return Field2D(grid, grid.zeros(), gauge, time)


def check_far_field(f: Field2D, tol: float = DEFAULT_FAR_FIELD_TOL) -> float:
    """Enforce the decay invariant of the decayed gauges at Y = L.

    Returns the measured mismatch; raises :class:`DecayViolationError` when a
    TILDE/GAUGED field exceeds ``tol`` at the truncation height.
    """
    mismatch = float(np.max(np.abs(f.values[:, -1])))
    if f.gauge in (Gauge.TILDE, Gauge.GAUGED) and mismatch > tol:
        raise DecayViolationError(
            f"|values(:, L)| = {mismatch:.3e} exceeds far-field tolerance {tol:.1e}"
        )
    return mismatch


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-ordered snapshots of one field on a shared grid and gauge."""

    times: np.ndarray
    snapshots: tuple

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        snaps = tuple(self.snapshots)
        if len(t) != len(snaps) or len(snaps) == 0:
            raise DomainError("times and snapshots must align and be non-empty")
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise DomainError("times must be strictly increasing")
        g0, gauge0 = snaps[0].grid, snaps[0].gauge
        for s in snaps[1:]:
            if s.grid is not g0 or s.gauge is not gauge0:
                raise DomainError("all snapshots must share grid and gauge")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "snapshots", snaps)

    @property
    def grid(self) -> Grid:
        return self.snapshots[0].grid

    @property
    def gauge(self) -> Gauge:
        return self.snapshots[0].gauge

    def values3d(self) -> np.ndarray:
        """Stack snapshot values into shape (len(times), Nx, NY)."""
        return np.stack([s.values for s in self.snapshots])

    @staticmethod
    def from_values(grid: Grid, times, arr, gauge: Gauge) -> "Trajectory":
        times = np.asarray(times, dtype=float)
        snaps = tuple(Field2D(grid, arr[i], gauge, times[i]) for i in range(len(times)))
        return Trajectory(times, snaps)


# ---------------------------------------------------------------------------
# derivative / quadrature operations
# ---------------------------------------------------------------------------

def ddx(f: Field2D) -> Field2D:
    """Spectral x-derivative (exact on resolved modes; Nyquist mode dropped)."""
    fh = np.fft.rfft(f.values, axis=0)
    fh *= 1j * f.grid.k[:, None]
    fh[-1] = 0.0  # the Nyquist cosine has no representable derivative
    return f.with_values(np.fft.irfft(fh, n=f.grid.Nx, axis=0))


def dealias(values: np.ndarray, grid: Grid) -> np.ndarray:
    """2/3-rule dealiasing: zero Fourier modes with k > Nx/3."""
    vh = np.fft.rfft(values, axis=0)
    vh[~grid.dealias_mask] = 0.0
    return np.fft.irfft(vh, n=grid.Nx, axis=0)


def _apply_stencil(values: np.ndarray, idx: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.einsum("xis,is->xi", values[:, idx], w)


def ddy(f: Field2D) -> Field2D:
    """First Y-derivative: five-point finite differences (one-sided at the
    edges), fourth order on uniform grids and at least third order otherwise."""
    if f.grid.NY < 5:
        raise DomainError("ddy needs NY >= 5")
    return f.with_values(_apply_stencil(f.values, f.grid._d1_idx, f.grid._d1_weights))


def d2dy2(f: Field2D) -> Field2D:
    """Second Y-derivative on the same five-point stencils as :func:`ddy`."""
    if f.grid.NY < 5:
        raise DomainError("d2dy2 needs NY >= 5")
    return f.with_values(_apply_stencil(f.values, f.grid._d2_idx, f.grid._d2_weights))


def cumint_y(f: Field2D, weight: str = "one") -> Field2D:
    """Cumulative quadrature g(x, Y) = integral_0^Y w(Y') f(x, Y') dY'.

    ``weight`` selects w = 1 (``"one"``) or w = e^{Y'} (``"expY"``); the rule
    is the grid's sixth-order cumulative scheme, so g(x, 0) = 0 exactly and
    g(x, L) with weight one matches the full ``y_weights`` quadrature.
    """
    if weight == "one":
        vals = f.values
    elif weight == "expY":
        vals = f.values * np.exp(f.grid.y_nodes)[None, :]
    else:
        raise DomainError(f"unknown cumint weight {weight!r}")
    return f.with_values(vals @ f.grid._cumw.T)


# ---------------------------------------------------------------------------
# CSV serialization
# ---------------------------------------------------------------------------

_CSV_HEADER = "x,Y,value,time,gauge"


def _field_rows(f: Field2D):
    ts = format(f.time, ".17g")
    gs = f.gauge.name
    x, y, v = f.grid.x, f.grid.y_nodes, f.values
    for ix in range(f.grid.Nx):
        xs = format(x[ix], ".17g")
        for iy in range(f.grid.NY):
            yield f"{xs},{format(y[iy], '.17g')},{format(v[ix, iy], '.17g')},{ts},{gs}"


def write_field_csv(f: Field2D, path) -> None:
    """Serialize one field, row-major over (x, Y), 17 significant digits."""
    Path(path).write_text(_CSV_HEADER + "\n" + "\n".join(_field_rows(f)) + "\n")


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Serialize a trajectory as stacked per-snapshot blocks."""
    lines = [_CSV_HEADER]
    for snap in traj.snapshots:
        lines.extend(_field_rows(snap))
    Path(path).write_text("\n".join(lines) + "\n")


def read_trajectory_csv(path, grid: Grid | None = None) -> Trajectory:
    """Inverse of :func:`write_trajectory_csv`.

    When ``grid`` is omitted, one is rebuilt from the stored coordinates (the
    node set determines the scheme only up to reconstruction, so the rebuilt
    grid carries scheme ``"uniform"``/``"stretched"`` by closest match).
    """
    text = Path(path).read_text().strip().split("\n")
    if text[0] != _CSV_HEADER:
        raise DomainError(f"bad CSV header {text[0]!r}")
    xs, ys, vs, ts, gs = [], [], [], [], []
    for line in text[1:]:
        x, y, v, t, g = line.split(",")
        xs.append(float(x))
        ys.append(float(y))
        vs.append(float(v))
        ts.append(float(t))
        gs.append(g)
    xs, ys, vs, ts = map(np.asarray, (xs, ys, vs, ts))
    times, starts = np.unique(ts, return_index=True)
    times = times[np.argsort(starts)]  # preserve file order
    gauge = Gauge[gs[0]]
    y0 = ys[ts == times[0]]
    x0 = xs[ts == times[0]]
    ny = len(np.unique(y0))
    nx = len(x0) // ny
    if grid is None:
        yn = y0[:ny].copy()
        uniform = np.allclose(np.diff(yn), yn[1] - yn[0], rtol=1e-12, atol=1e-12)
        grid = Grid(Nx=nx, NY=ny, L=float(yn[-1]),
                    scheme="uniform" if uniform else "stretched",
                    y_nodes=yn, y_weights=None)
        object.__setattr__(grid, "y_weights", grid._cumw[-1].copy())
    snaps, tlist = [], []
    for t in times:
        sel = ts == t
        snaps.append(Field2D(grid, vs[sel].reshape(nx, ny), gauge, float(t)))
        tlist.append(float(t))
    return Trajectory(np.asarray(tlist), tuple(snaps))


def read_field_csv(path, grid: Grid | None = None) -> Field2D:
    """Read a single-snapshot CSV written by :func:`write_field_csv`."""
    traj = read_trajectory_csv(path, grid)
    if len(traj.snapshots) != 1:
        raise DomainError("expected a single-snapshot CSV")
    return traj.snapshots[0]
