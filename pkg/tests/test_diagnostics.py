"""Norm proxies, radius/decay estimators, and operator-bound probes.

Derived references:
  - discrete L2 of cos(kx) over a periodic grid is sqrt(pi) exactly for
    0 < k < Nx/2 (the half-sum identity of the trapezoid rule);
  - 1/(1.25 - cos x) = (2/(z - 1/z)) sum z^{-|k|} e^{ikx} with z the larger
    root of z + 1/z = 2.5, i.e. z = 2, so its strip radius is log 2;
  - a single mode k=1 makes the derivative probe exactly
    (rho - rho') e^{-(rho - rho')}.
"""
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mildprandtl.diagnostics import (analyticity_radius_x, decay_rate_y,
                                     probe_cauchy_x, probe_operator_bound,
                                     weighted_norm)
from mildprandtl.errors import ConfigurationError, DomainError
from mildprandtl.fields import Field2D, Gauge, Trajectory, make_grid


@pytest.fixture(scope="module")
def xgrid():
    """x-resolved grid for spectral diagnostics."""
    return make_grid(64, 256, 15.0, scheme="uniform")


def _field(grid, vals):
    return Field2D(grid, np.broadcast_to(vals, (grid.Nx, grid.NY)).copy(),
                   Gauge.GAUGED, 0.0)


def _cos_decay(grid):
    X, Y = grid.x[:, None], grid.y_nodes[None, :]
    return _field(grid, np.exp(-Y) * np.cos(X))


# ---------------------------------------------------------------------------
# weighted norm
# ---------------------------------------------------------------------------


def test_norm_zero_field(xgrid):
    rep = weighted_norm(_field(xgrid, np.zeros((1, 1))), 2, 1.0)
    assert rep.weighted_sup == 0.0
    assert all(v == 0.0 for v in rep.per_term.values())


def test_norm_unweighted_single_mode(xgrid):
    rep = weighted_norm(_cos_decay(xgrid), 0, 0.0)
    assert rep.weighted_sup == pytest.approx(np.sqrt(np.pi), abs=1e-12)
    assert set(rep.per_term) == {(0, 0)}


def test_norm_weight_cancels_decay(xgrid):
    # e^{Y} weight against e^{-Y} decay is flat: the sup equals sqrt(pi)
    # at every height
    rep = weighted_norm(_cos_decay(xgrid), 0, 1.0)
    assert rep.weighted_sup == pytest.approx(np.sqrt(np.pi), abs=1e-10)


def test_norm_first_order_terms(xgrid):
    # x- and Y-derivatives of e^{-Y} cos x each contribute sqrt(pi)
    rep = weighted_norm(_cos_decay(xgrid), 1, 0.0)
    assert set(rep.per_term) == {(0, 0), (0, 1), (1, 0)}
    assert rep.weighted_sup == pytest.approx(3 * np.sqrt(np.pi), abs=1e-4)


def test_norm_term_structure_l3(xgrid):
    rep = weighted_norm(_cos_decay(xgrid), 3, 0.0)
    want = {(a1, a2) for a1 in range(3) for a2 in range(4 - a1)}
    assert set(rep.per_term) == want
    assert all(rep.weighted_sup >= v for v in rep.per_term.values())


def test_norm_rejects_bad_derivative_count(xgrid):
    f = _cos_decay(xgrid)
    with pytest.raises(ConfigurationError):
        weighted_norm(f, 4, 0.0)
    with pytest.raises(ConfigurationError):
        weighted_norm(f, -1, 0.0)


def test_norm_report_serializes(xgrid):
    rep = weighted_norm(_cos_decay(xgrid), 1, 0.5)
    blob = json.dumps(rep.as_dict())
    back = json.loads(blob)
    assert back["l"] == 1 and back["mu"] == 0.5
    assert "0,1" in back["per_term"]


@settings(max_examples=20, deadline=None)
@given(mu1=st.floats(0.0, 2.0), dmu=st.floats(0.0, 2.0),
       coeffs=st.lists(st.floats(-1.0, 1.0), min_size=1, max_size=3))
def test_norm_monotone_in_weight(mu1, dmu, coeffs):
    grid = make_grid(16, 64, 12.0, scheme="uniform")
    X, Y = grid.x[:, None], grid.y_nodes[None, :]
    vals = sum(c * np.cos((k + 1) * X) * np.exp(-(k + 1) * Y / 2)
               for k, c in enumerate(coeffs)) + np.zeros((16, 64))
    f = Field2D(grid, vals, Gauge.GAUGED, 0.0)
    lo = weighted_norm(f, 1, mu1).weighted_sup
    hi = weighted_norm(f, 1, mu1 + dmu).weighted_sup
    assert lo <= hi * (1 + 1e-12)


# ---------------------------------------------------------------------------
# analyticity radius
# ---------------------------------------------------------------------------


def _synth_radius(grid, rho, scale=1.0):
    X, Y = grid.x[:, None], grid.y_nodes[None, :]
    vals = sum(np.exp(-rho * k) * np.cos(k * X) for k in range(1, 22))
    return Field2D(grid, scale * vals * np.exp(-Y), Gauge.GAUGED, 0.0)


def test_radius_band_limited_flags(xgrid):
    assert analyticity_radius_x(_cos_decay(xgrid)) is None


def test_radius_synthesized(xgrid):
    rho = analyticity_radius_x(_synth_radius(xgrid, 0.7))
    assert rho == pytest.approx(0.7, abs=0.05)


def test_radius_poisson_kernel(xgrid):
    X, Y = xgrid.x[:, None], xgrid.y_nodes[None, :]
    f = Field2D(xgrid, np.exp(-Y) / (1.25 - np.cos(X)), Gauge.GAUGED, 0.0)
    rho = analyticity_radius_x(f)
    assert rho == pytest.approx(np.log(2.0), abs=0.05)


def test_radius_needs_resolved_band():
    grid = make_grid(8, 32, 10.0, scheme="uniform")
    with pytest.raises(DomainError):
        analyticity_radius_x(_field(grid, np.ones((1, 1))))


@settings(max_examples=20, deadline=None)
@given(scale=st.floats(1e-3, 1e3))
def test_radius_scale_invariant(scale):
    grid = make_grid(32, 48, 10.0, scheme="uniform")
    base = analyticity_radius_x(_synth_radius(grid, 0.5))
    scaled = analyticity_radius_x(_synth_radius(grid, 0.5, scale=scale))
    assert abs(base - scaled) <= 1e-6


# ---------------------------------------------------------------------------
# Y-decay rate
# ---------------------------------------------------------------------------


def test_decay_pure_exponential(xgrid):
    Y = xgrid.y_nodes[None, :]
    mu = decay_rate_y(_field(xgrid, np.exp(-2.0 * Y)))
    assert mu == pytest.approx(2.0, abs=0.01)


def test_decay_with_algebraic_prefactor():
    # (1+Y) e^{-Y} approaches slope 1 from below; the far window on a tall
    # grid gets within 5%
    grid = make_grid(16, 512, 40.0, scheme="uniform")
    Y = grid.y_nodes[None, :]
    mu = decay_rate_y(_field(grid, (1.0 + Y) * np.exp(-Y)))
    assert mu == pytest.approx(1.0, abs=0.05)


def test_decay_constant_flags(xgrid):
    assert decay_rate_y(_field(xgrid, np.ones((1, 1)))) is None


def test_decay_growing_flags(xgrid):
    Y = xgrid.y_nodes[None, :]
    assert decay_rate_y(_field(xgrid, np.exp(0.2 * Y))) is None


def test_decay_fully_decayed_flags(xgrid):
    # nothing above the floor in the fit window
    Y = xgrid.y_nodes[None, :]
    assert decay_rate_y(_field(xgrid, 1e-14 * np.exp(-Y))) is None


# ---------------------------------------------------------------------------
# Cauchy-estimate probe
# ---------------------------------------------------------------------------


def test_cauchy_single_mode_exact(xgrid):
    d = 0.25
    ratio = probe_cauchy_x(_cos_decay(xgrid), 0.5, 0.25)
    assert ratio == pytest.approx(d * np.exp(-d), abs=1e-12)


def test_cauchy_constant_is_zero(xgrid):
    assert probe_cauchy_x(_field(xgrid, np.ones((1, 1))), 0.5, 0.2) == 0.0


def test_cauchy_synthesized_bounded(xgrid):
    ratio = probe_cauchy_x(_synth_radius(xgrid, 0.7), 0.6, 0.3)
    assert 0.0 < ratio <= 1.5


def test_cauchy_requires_ordered_radii(xgrid):
    with pytest.raises(DomainError):
        probe_cauchy_x(_cos_decay(xgrid), 0.3, 0.3)


def test_cauchy_rejects_radius_beyond_estimate(xgrid):
    with pytest.raises(DomainError):
        probe_cauchy_x(_synth_radius(xgrid, 0.7), 0.9, 0.3)


# ---------------------------------------------------------------------------
# operator-bound probes
# ---------------------------------------------------------------------------


def test_probe_unknown_operator(uws):
    with pytest.raises(ConfigurationError):
        probe_operator_bound("E4", [], ws=uws)


def test_probe_E1_gaussian_family(ugrid, uws):
    Y = ugrid.y_nodes[None, :]
    data = [Field2D(ugrid,
                    np.exp(-Y * Y / (4.0 * s)) * np.ones((ugrid.Nx, 1)),
                    Gauge.GAUGED, 0.0)
            for s in (0.5, 1.0, 2.0)]
    samples = [(u, t) for u in data for t in (0.01, 0.1, 1.0)]
    rep = probe_operator_bound("E1", samples, l=0, mu=0.0, ws=uws)
    assert not rep.rejected
    assert len(rep.per_sample) == 9
    assert rep.constant <= 2.0


def test_probe_E1_rejects_wall_flux(ugrid, uws):
    Y = ugrid.y_nodes[None, :]
    bad = Field2D(ugrid, Y * np.exp(-Y) * np.ones((ugrid.Nx, 1)),
                  Gauge.GAUGED, 0.0)
    rep = probe_operator_bound("E1", [(bad, 0.1)], ws=uws)
    assert rep.per_sample == ()
    assert rep.rejected and "flux" in rep.rejected[0][1]
    assert np.isnan(rep.constant)


def test_probe_E3_unit_source_saturates(ugrid, uws):
    times = tuple(np.linspace(0.0, 0.1, 11))
    snaps = tuple(Field2D(ugrid, np.ones((ugrid.Nx, ugrid.NY)),
                          Gauge.GAUGED, t) for t in times)
    rep = probe_operator_bound("E3", [(Trajectory(times, snaps), 0.1)],
                               l=0, mu=0.0, ws=uws)
    assert rep.constant == pytest.approx(1.0, abs=1e-10)


def test_probe_E3_dY_bounded_by_singular_integral(ugrid, uws):
    times = tuple(np.linspace(0.0, 0.1, 11))
    X, Y = ugrid.x[:, None], ugrid.y_nodes[None, :]
    prof = np.exp(-Y) * (1.0 + np.cos(X))
    snaps = tuple(Field2D(ugrid, prof, Gauge.GAUGED, t) for t in times)
    rep = probe_operator_bound("E3_dY", [(Trajectory(times, snaps), 0.1)],
                               ws=uws)
    assert np.isfinite(rep.constant)
    assert rep.constant <= 2.0


def test_probe_E3_rejects_short_history(ugrid, uws):
    times = (0.02, 0.05)
    snaps = tuple(Field2D(ugrid, np.ones((ugrid.Nx, ugrid.NY)),
                          Gauge.GAUGED, t) for t in times)
    rep = probe_operator_bound("E3", [(Trajectory(times, snaps), 0.1)],
                               ws=uws)
    assert rep.rejected and "cover" in rep.rejected[0][1]


def test_probe_E2_linear_flux(uws):
    rep = probe_operator_bound(
        "E2", [(lambda s: np.full(uws.grid.Nx, s), 0.1)], ws=uws)
    assert np.isfinite(rep.constant) and rep.constant > 0


def test_probe_E2_needs_workspace():
    with pytest.raises(ConfigurationError):
        probe_operator_bound("E2", [(lambda s: s, 0.1)])


def test_probe_E2_rejects_incompatible_flux(uws):
    rep = probe_operator_bound(
        "E2", [(lambda s: np.full(uws.grid.Nx, 1.0 + s), 0.1)], ws=uws)
    assert rep.rejected and "vanish" in rep.rejected[0][1]


def test_probe_zero_sample_rejected(ugrid, uws):
    zero = Field2D(ugrid, np.zeros((ugrid.Nx, ugrid.NY)), Gauge.GAUGED, 0.0)
    rep = probe_operator_bound("E1", [(zero, 0.1)], ws=uws)
    assert rep.rejected and "zero" in rep.rejected[0][1]


def test_probe_report_serializes(ugrid, uws):
    Y = ugrid.y_nodes[None, :]
    u = Field2D(ugrid, np.exp(-Y * Y / 4.0) * np.ones((ugrid.Nx, 1)),
                Gauge.GAUGED, 0.0)
    rep = probe_operator_bound("E1", [(u, 0.1)], l=0, mu=1.0, ws=uws)
    back = json.loads(json.dumps(rep.as_dict()))
    assert back["op"] == "E1" and back["mu"] == 1.0
    assert len(back["per_sample"]) == 1
