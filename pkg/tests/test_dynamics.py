import math

import numpy as np
import pytest

from toric_regions.dynamics import (
    AlternatingStrategy,
    ExtremeRayStrategy,
    FieldStrategy,
    MassActionSystem,
    RandomInConeStrategy,
    StrictStrategy,
    Trajectory,
    _reversible,
    builtin_strategies,
    complex_balance_residual,
    embedded_system_for_target,
    field_stiffness,
    integrate,
    integrate_to_point,
    mass_action_field,
    omega_limit_estimate,
    reach_witness,
)
from toric_regions.errors import MonomialOverflow, StepCollapse
from toric_regions.fan_geometry import Fan, LogPoint, PosPoint, r_count
from toric_regions.region_construction import construct_region
from toric_regions.tdi_rhs import rhs_bruteforce

WORKED_FAN = Fan([(-1, 1), (1, 2), (2, 1)])
DELTA = 3.0


@pytest.fixture(scope="module")
def region():
    return construct_region(WORKED_FAN, DELTA)


@pytest.fixture(scope="module")
def nm_system(region):
    return embedded_system_for_target(WORKED_FAN, DELTA, "point_NM",
                                      provenance=region.start_max)


def simple_exchange():
    # Y <-> X with both rates 1: vertices (0,1) and (1,0).
    return MassActionSystem(tuple(_reversible((0.0, 1.0), (1.0, 0.0), 1.0, 1.0)),
                            1.0, "exchange")


class TestMassActionField:
    def test_exchange_field(self):
        assert mass_action_field(simple_exchange(), PosPoint(2.0, 3.0)) == \
            pytest.approx((1.0, -1.0))

    def test_vanishes_on_diagonal(self):
        for v in (0.5, 1.0, 7.3):
            fx, fy = mass_action_field(simple_exchange(), PosPoint(v, v))
            assert fx == 0.0 and fy == 0.0

    def test_nm_system_vanishes_at_anchor(self, region, nm_system):
        fx, fy = mass_action_field(nm_system, region.start_max.log)
        scale = math.exp(region.start_max.log.X)
        assert math.hypot(fx, fy) <= 1e-10 * scale

    def test_overflow_cap(self):
        with pytest.raises(MonomialOverflow):
            mass_action_field(simple_exchange(), LogPoint(0.0, 700.0))

    def test_reversibility_enforced(self):
        from toric_regions.dynamics import Reaction
        with pytest.raises(ValueError):
            MassActionSystem((Reaction((0.0, 1.0), (1.0, 0.0), 1.0, 0.0),), 1.0)


class TestComplexBalance:
    def test_symmetric_at_diagonal(self):
        assert complex_balance_residual(simple_exchange(), PosPoint(4.0, 4.0)) == 0.0

    def test_nm_system_balanced_at_anchor(self, region, nm_system):
        assert complex_balance_residual(nm_system, region.start_max.log) <= 1e-12

    def test_generic_point_unbalanced(self, nm_system):
        assert complex_balance_residual(nm_system, PosPoint(2.0, 5.0)) > 1e-3

    def test_origin_system_balanced_at_unit(self):
        sys11 = embedded_system_for_target(WORKED_FAN, DELTA, "origin_11")
        assert complex_balance_residual(sys11, PosPoint(1.0, 1.0)) == 0.0


class TestEmbedding:
    """The tagged fields must take values inside the inclusion cone."""

    @pytest.mark.parametrize("target", ["origin_11", "point_NM"])
    def test_field_in_cone_everywhere(self, region, target):
        prov = region.start_max if target == "point_NM" else None
        system = embedded_system_for_target(WORKED_FAN, DELTA, target, provenance=prov)
        rng = np.random.default_rng(11)
        worst = 0.0
        for X, Y in rng.uniform(-12.0, 12.0, size=(800, 2)):
            pt = LogPoint(float(X), float(Y))
            v = mass_action_field(system, pt)
            worst = max(worst, rhs_bruteforce(pt, WORKED_FAN, DELTA, tol=-1e-9).violation(v))
        assert worst <= 1e-9


class TestIntegrate:
    def test_constant_velocity_single_step(self):
        class Constant:
            name = "constant"

            def __call__(self, point, rhs, t):
                return (1.0, 0.0)

        traj = integrate(Constant(), PosPoint(1.0, 1.0), WORKED_FAN, DELTA,
                         t_end=0.5, dt=0.5, max_log_step=10.0)
        end = traj.points[-1].exp()
        assert end.x == pytest.approx(1.5, rel=1e-4)
        assert end.y == pytest.approx(1.0, rel=1e-12)

    def test_times_strictly_increase(self):
        sys11 = embedded_system_for_target(WORKED_FAN, DELTA, "origin_11")
        traj = integrate(FieldStrategy(sys11), LogPoint(2.0, -1.0), WORKED_FAN,
                         DELTA, t_end=0.2, dt=1e-2)
        assert all(b > a for a, b in zip(traj.times, traj.times[1:]))

    def test_invalid_strategy_collapses(self):
        class Outward:
            name = "outward"

            def __call__(self, point, rhs, t):
                return (1.0, 1.0)

        # Far up the diagonal the cone is {v . (1,1) <= 0}: (1,1) violates.
        with pytest.raises(StepCollapse):
            integrate(Outward(), LogPoint(10.0, 10.0), Fan([(1, 1), (-1, 1)]),
                      1.0, t_end=1.0, dt=1e-2)

    def test_convergence_origin_system(self):
        sys11 = embedded_system_for_target(WORKED_FAN, DELTA, "origin_11")
        traj = integrate_to_point(sys11, PosPoint(math.exp(3.0), math.exp(-2.0)),
                                  WORKED_FAN, DELTA, LogPoint(0.0, 0.0), t_end=200.0)
        assert traj.termination == "stopped"
        end = traj.points[-1]
        assert max(abs(end.X), abs(end.Y)) <= 1e-6
        assert traj.worst_violation <= 1e-9

    def test_convergence_nm_system(self, region, nm_system):
        target = region.start_max.log
        traj = integrate_to_point(nm_system, LogPoint(-8.0, 8.0), WORKED_FAN,
                                  DELTA, target, t_end=200.0)
        assert traj.termination == "stopped"
        end = traj.points[-1]
        assert max(abs(end.X - target.X), abs(end.Y - target.Y)) <= 1e-6
        assert traj.worst_violation <= 1e-9


class TestStrategies:
    def test_strict_wrapper_floor(self):
        class Feeble:
            name = "feeble"

            def __call__(self, point, rhs, t):
                rays = rhs.extreme_rays()
                u = rays[0] if rays else (1.0, 0.0)
                return (u[0] * 1e-9, u[1] * 1e-9)

        strict = StrictStrategy(Feeble(), rho=1e-3)
        pt = LogPoint(10.0, 0.0)
        rhs = rhs_bruteforce(pt, WORKED_FAN, DELTA)
        v = strict(pt, rhs, 0.0)
        assert math.hypot(*v) >= 1e-3

    def test_extreme_rays_stay_in_cone(self):
        rng = np.random.default_rng(3)
        left = ExtremeRayStrategy("left")
        right = ExtremeRayStrategy("right")
        for X, Y in rng.uniform(-10, 10, size=(200, 2)):
            pt = LogPoint(float(X), float(Y))
            rhs = rhs_bruteforce(pt, WORKED_FAN, DELTA, tol=-1e-9)
            for strat in (left, right):
                assert rhs.violation(strat(pt, rhs, 0.0)) <= 1e-9

    def test_random_in_cone_stays_in_cone(self):
        rng = np.random.default_rng(4)
        strat = RandomInConeStrategy(seed=5)
        for X, Y in rng.uniform(-10, 10, size=(200, 2)):
            pt = LogPoint(float(X), float(Y))
            rhs = rhs_bruteforce(pt, WORKED_FAN, DELTA, tol=-1e-9)
            assert rhs.violation(strat(pt, rhs, 0.0)) <= 1e-9

    def test_registry_names(self):
        reg = builtin_strategies(WORKED_FAN, DELTA)
        assert set(reg) == {"origin_11", "extreme_left", "extreme_right",
                            "alternating", "random_in_cone"}


class TestOmegaLimit:
    @staticmethod
    def _mk(points):
        n = len(points)
        return Trajectory(list(range(n)), points, [(0.0, 0.0)] * n,
                          [""] * n, "synthetic", "t_end")

    def test_constant_trajectory(self):
        pts = [LogPoint(1.0, 2.0)] * 150
        centers = omega_limit_estimate(self._mk(pts))
        assert len(centers) == 1
        assert (centers[0].X, centers[0].Y) == (1.0, 2.0)

    def test_periodic_log_circle(self):
        pts = [LogPoint(math.cos(2 * math.pi * k / 200), math.sin(2 * math.pi * k / 200))
               for k in range(600)]
        centers = omega_limit_estimate(self._mk(pts), tail_fraction=0.5)
        # Every circle point is within the sampling gap of some center.
        gap = 2 * math.pi / 200 + 1e-3
        for p in pts[-200:]:
            assert min(math.hypot(p.X - c.X, p.Y - c.Y) for c in centers) <= gap
        for c in centers:
            assert math.hypot(c.X, c.Y) == pytest.approx(1.0, abs=1e-9)

    def test_converging_trajectory(self):
        sys11 = embedded_system_for_target(WORKED_FAN, DELTA, "origin_11")
        traj = integrate_to_point(sys11, LogPoint(3.0, -2.0), WORKED_FAN, DELTA,
                                  LogPoint(0.0, 0.0), t_end=200.0, rel_tol=1e-6)
        centers = omega_limit_estimate(traj, tail_fraction=0.05)
        assert len(centers) == 1
        assert math.hypot(centers[0].X, centers[0].Y) <= 1e-3


class TestReachWitness:
    def test_target_is_unit_point(self, region):
        traj = reach_witness(LogPoint(2.0, 1.0), PosPoint(1.0, 1.0), WORKED_FAN,
                             DELTA, region)
        assert len(traj.legs) == 1
        assert traj.worst_violation <= 1e-9

    def test_full_plane_target(self, region):
        target = LogPoint(-1.5, -1.0)
        assert r_count(target, WORKED_FAN, DELTA) >= 2
        traj = reach_witness(PosPoint(1.0, 1.0), target, WORKED_FAN, DELTA, region)
        kinds = [leg.kind for leg in traj.legs]
        assert kinds == ["flow", "logline"]
        end = traj.points[-1]
        assert max(abs(end.X - target.X), abs(end.Y - target.Y)) <= 1e-6

    def test_strip_target(self, region):
        target = LogPoint(4.0, 8.3)  # inside the steep strip only
        assert r_count(target, WORKED_FAN, DELTA) == 1
        traj = reach_witness(PosPoint(1.0, 1.0), target, WORKED_FAN, DELTA, region)
        assert traj.worst_violation <= 1e-9
        end = traj.points[-1]
        assert max(abs(end.X - target.X), abs(end.Y - target.Y)) <= 1e-6

    def test_gap_target(self, region):
        target = LogPoint(5.5, -1.0)
        assert r_count(target, WORKED_FAN, DELTA) == 0
        traj = reach_witness(PosPoint(1.0, 1.0), target, WORKED_FAN, DELTA, region)
        assert traj.worst_violation <= 1e-9
        end = traj.points[-1]
        assert max(abs(end.X - target.X), abs(end.Y - target.Y)) <= 1e-6
