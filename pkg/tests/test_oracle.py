"""Finite-difference reference solvers and the trajectory comparator.

The Robin-compatible closed-form data used here:
  - uP = c (1 + 2Y) e^{-Y} satisfies (u - dY u)|_0 = 0 exactly;
  - uP = c (1 - e^{-Y}/2) does too and tends to c, pairing with the gauged
    datum u = -(c/2) e^{-2Y} under the gauge chain (subtract the trace,
    then weight by e^{-Y}).
"""
import numpy as np
import pytest

from mildprandtl.errors import (CompatibilityError, ConfigurationError,
                                DomainError, InstabilityError)
from mildprandtl.fields import Field2D, Gauge, Trajectory, make_grid
from mildprandtl.oracle import (FDConfig, compare, fd_solve_gauged,
                                fd_solve_robin)
from mildprandtl.prandtl import EulerTrace, from_tilde, from_u


def _ugrid(Nx, NY, L=15.0):
    return make_grid(Nx, NY, L, scheme="uniform")


def _shear_physical(grid, c):
    Y = grid.y_nodes[None, :]
    vals = c * (1 - np.exp(-Y) / 2) * np.ones((grid.Nx, 1))
    return Field2D(grid, vals, Gauge.PHYSICAL, 0.0)


def _shear_gauged(grid, c):
    Y = grid.y_nodes[None, :]
    vals = -(c / 2) * np.exp(-2 * Y) * np.ones((grid.Nx, 1))
    return Field2D(grid, vals, Gauge.GAUGED, 0.0)


def _robin_bump(grid, c):
    Y = grid.y_nodes[None, :]
    vals = c * (1 + 2 * Y) * np.exp(-Y) * np.ones((grid.Nx, 1))
    return Field2D(grid, vals, Gauge.PHYSICAL, 0.0)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("kwargs", [
    dict(NY=4),
    dict(dt=0.0),
    dict(L=-1.0),
    dict(robin_ghost="third_order"),
])
def test_fdconfig_rejects_bad_values(kwargs):
    with pytest.raises(ConfigurationError):
        FDConfig(**kwargs)


def test_steps_must_tile_horizon():
    grid = _ugrid(8, 257)
    u0 = _shear_physical(grid, 0.1)
    with pytest.raises(ConfigurationError):
        fd_solve_robin(u0, EulerTrace.constant(0.1), FDConfig(dt=3e-4), 0.1)


# ---------------------------------------------------------------------------
# trivial and guard behavior
# ---------------------------------------------------------------------------


def test_robin_zero_scenario_stays_zero():
    grid = _ugrid(8, 129)
    u0 = Field2D(grid, np.zeros((8, 129)), Gauge.PHYSICAL, 0.0)
    traj = fd_solve_robin(u0, EulerTrace.constant(0.0),
                          FDConfig(NY=129, dt=1e-3), 0.01)
    assert max(np.abs(s.values).max() for s in traj.snapshots) == 0.0


def test_gauged_zero_scenario_stays_zero():
    grid = _ugrid(8, 129)
    u0 = Field2D(grid, np.zeros((8, 129)), Gauge.GAUGED, 0.0)
    traj = fd_solve_gauged(u0, EulerTrace.constant(0.0),
                           FDConfig(NY=129, dt=1e-3), 0.01)
    assert max(np.abs(s.values).max() for s in traj.snapshots) == 0.0


def test_solvers_check_gauge():
    grid = _ugrid(8, 129)
    cfg = FDConfig(NY=129, dt=1e-3)
    tr = EulerTrace.constant(0.1)
    with pytest.raises(DomainError):
        fd_solve_robin(_shear_gauged(grid, 0.1), tr, cfg, 0.01)
    with pytest.raises(DomainError):
        fd_solve_gauged(_shear_physical(grid, 0.1), tr, cfg, 0.01)


def test_solvers_check_compatibility():
    grid = _ugrid(8, 257)
    tr = EulerTrace.constant(0.1)
    cfg = FDConfig(dt=1e-3)
    # constant physical datum: (u - dY u)|_0 = 0.1, not 0
    flat = Field2D(grid, np.full((8, 257), 0.1), Gauge.PHYSICAL, 0.0)
    with pytest.raises(CompatibilityError):
        fd_solve_robin(flat, tr, cfg, 0.01)
    zeros = Field2D(grid, np.zeros((8, 257)), Gauge.GAUGED, 0.0)
    with pytest.raises(CompatibilityError):
        fd_solve_gauged(zeros, tr, cfg, 0.01)


def test_cfl_violation_is_configuration_error():
    grid = _ugrid(8, 257)
    tr = EulerTrace.constant(5e5)
    with pytest.raises(ConfigurationError):
        fd_solve_robin(_shear_physical(grid, 5e5), tr, FDConfig(dt=1e-3),
                       0.01)


def test_blowup_is_instability_error():
    grid = _ugrid(8, 257)
    tr = EulerTrace.constant(2e6)
    with pytest.raises(InstabilityError):
        fd_solve_robin(_shear_physical(grid, 2e6), tr, FDConfig(dt=1e-3),
                       0.01)


def test_cfl_is_recorded():
    grid = _ugrid(8, 129)
    stats = {}
    fd_solve_robin(_shear_physical(grid, 0.1), EulerTrace.constant(0.1),
                   FDConfig(NY=129, dt=1e-3), 0.01, stats=stats)
    assert isinstance(stats["cfl_max"], float)
    assert 0.0 < stats["cfl_max"] < 1.0


def test_store_every_thins_output():
    grid = _ugrid(8, 129)
    traj = fd_solve_robin(_shear_physical(grid, 0.1),
                          EulerTrace.constant(0.1),
                          FDConfig(NY=129, dt=1e-3), 0.01, store_every=5)
    assert len(traj.times) == 3  # t = 0, 0.005, 0.01
    assert traj.times[-1] == pytest.approx(0.01)


# ---------------------------------------------------------------------------
# physics checks
# ---------------------------------------------------------------------------


def test_robin_steady_relaxation_is_monotone():
    # with a zero trace, diffusion with the homogeneous Robin wall can only
    # dissipate the sup norm
    grid = _ugrid(8, 257)
    traj = fd_solve_robin(_robin_bump(grid, 0.1), EulerTrace.constant(0.0),
                          FDConfig(dt=5e-4), 0.05, store_every=10)
    sups = [np.abs(s.values).max() for s in traj.snapshots]
    assert all(b <= a + 1e-12 for a, b in zip(sups, sups[1:]))
    assert sups[-1] < sups[0]


def test_cross_formulation_equivalence():
    # the same scenario through the physical-Robin and gauged-Neumann
    # formulations, mapped back through the gauge chain
    c = 0.1
    tr = EulerTrace.constant(c)
    grid = _ugrid(8, 257)
    cfg = FDConfig(dt=2e-4)
    robin = fd_solve_robin(_shear_physical(grid, c), tr, cfg, 0.1,
                           store_every=100)
    gauged = fd_solve_gauged(_shear_gauged(grid, c), tr, cfg, 0.1,
                             store_every=100)
    mapped = Trajectory(gauged.times,
                        tuple(from_tilde(from_u(s), tr)
                              for s in gauged.snapshots))
    rep = compare(robin, mapped)
    assert rep.global_rel_linf <= 1e-3


def test_ghost_closures_agree_to_first_order():
    c = 0.1
    tr = EulerTrace.constant(c)
    grid = _ugrid(8, 257)
    second = fd_solve_robin(_shear_physical(grid, c), tr,
                            FDConfig(dt=5e-4), 0.05, store_every=100)
    first = fd_solve_robin(_shear_physical(grid, c), tr,
                           FDConfig(dt=5e-4, robin_ghost="first_order"),
                           0.05, store_every=100)
    rep = compare(second, first)
    assert 0.0 < rep.global_rel_linf <= 5e-2


def test_self_convergence_order_in_dt():
    # successive-difference order for the semi-implicit splitting
    c = 0.1
    tr = EulerTrace.constant(c)
    grid = _ugrid(8, 257)
    sols = [fd_solve_robin(_shear_physical(grid, c), tr,
                           FDConfig(dt=dt), 0.1, store_every=10 ** 6)
            for dt in (8e-4, 4e-4, 2e-4)]
    d1 = compare(sols[0], sols[1]).abs_linf[-1]
    d2 = compare(sols[1], sols[2]).abs_linf[-1]
    assert np.log2(d1 / d2) >= 0.9


def test_self_convergence_order_in_dy():
    c = 0.1
    tr = EulerTrace.constant(c)
    sols = []
    for NY in (65, 129, 257):
        grid = _ugrid(8, NY)
        sols.append(fd_solve_robin(_shear_physical(grid, c), tr,
                                   FDConfig(NY=NY, dt=5e-5), 0.1,
                                   store_every=10 ** 6))
    d1 = compare(sols[1], sols[0]).abs_linf[-1]
    d2 = compare(sols[2], sols[1]).abs_linf[-1]
    assert np.log2(d1 / d2) >= 1.8


def test_initial_data_resampled_from_stretched_grid():
    # the same analytic datum fed from a stretched grid and from the FD
    # grid itself must give the same evolution
    c = 0.1
    tr = EulerTrace.constant(c)
    cfg = FDConfig(dt=1e-3)
    native = fd_solve_gauged(_shear_gauged(_ugrid(8, 257), c), tr, cfg,
                             0.02, store_every=20)
    stretched = make_grid(8, 128, 15.0, scheme="stretched")
    foreign = fd_solve_gauged(_shear_gauged(stretched, c), tr, cfg,
                              0.02, store_every=20)
    assert compare(native, foreign).global_abs_linf <= 1e-5


# ---------------------------------------------------------------------------
# comparator
# ---------------------------------------------------------------------------


def _const_traj(grid, times, value):
    snaps = tuple(Field2D(grid, np.full((grid.Nx, grid.NY), value),
                          Gauge.PHYSICAL, t) for t in times)
    return Trajectory(tuple(times), snaps)


def test_compare_identical_trajectories_is_zero():
    grid = _ugrid(8, 65)
    traj = _const_traj(grid, (0.0, 0.05, 0.1), 0.3)
    rep = compare(traj, traj)
    assert rep.global_abs_linf == 0.0
    assert rep.global_rel_l2 == 0.0


def test_compare_constant_shift_is_exact():
    grid = _ugrid(8, 65)
    a = _const_traj(grid, (0.0, 0.05, 0.1), 0.0)
    b = _const_traj(grid, (0.0, 0.05, 0.1), 1e-5)
    rep = compare(a, b)
    assert rep.global_abs_linf == 1e-5


def test_compare_disjoint_times_raises():
    grid = _ugrid(8, 65)
    a = _const_traj(grid, (0.0, 0.05), 0.1)
    b = _const_traj(grid, (0.2, 0.3), 0.1)
    with pytest.raises(DomainError):
        compare(a, b)


def test_compare_different_heights_raises():
    a = _const_traj(_ugrid(8, 65), (0.0, 0.05), 0.1)
    b = _const_traj(_ugrid(8, 65, L=20.0), (0.0, 0.05), 0.1)
    with pytest.raises(DomainError):
        compare(a, b)


def test_compare_interpolates_between_times():
    # linear-in-t interpolation of the second trajectory
    grid = _ugrid(8, 65)
    a = _const_traj(grid, (0.05,), 0.5)
    b_snaps = (Field2D(grid, np.zeros((8, 65)), Gauge.PHYSICAL, 0.0),
               Field2D(grid, np.ones((8, 65)), Gauge.PHYSICAL, 0.1))
    b = Trajectory((0.0, 0.1), b_snaps)
    rep = compare(a, b)
    assert rep.global_abs_linf == pytest.approx(0.0, abs=1e-14)


def test_compare_report_serializes():
    import json
    grid = _ugrid(8, 65)
    traj = _const_traj(grid, (0.0, 0.1), 0.2)
    blob = json.loads(json.dumps(compare(traj, traj).as_dict()))
    assert blob["global_abs_linf"] == 0.0
    assert len(blob["times"]) == 2
