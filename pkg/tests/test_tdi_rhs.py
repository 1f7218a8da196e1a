import math

import numpy as np
import pytest

from toric_regions.errors import AmbiguousClassification, NotASubfan
from toric_regions.fan_geometry import Fan, LogPoint, PosPoint, r_count
from toric_regions.tdi_rhs import (
    ConeRHS,
    rhs_bruteforce,
    rhs_classified,
    rhs_equal,
    rhs_subfan_subset,
)

SQRT2 = math.sqrt(2.0)

CROSS_FAN = Fan([(1, 1), (-1, 1)])
WORKED_FAN = Fan([(-1, 1), (1, 2), (2, 1)])


class TestBruteforce:
    def test_origin_is_full_plane(self):
        assert rhs_bruteforce(PosPoint(1.0, 1.0), CROSS_FAN, 1.0).kind == "full_plane"
        assert rhs_bruteforce(LogPoint(0.0, 0.0), WORKED_FAN, 3.0).kind == "full_plane"

    def test_far_diagonal_is_halfplane(self):
        rhs = rhs_bruteforce(LogPoint(10.0, 10.0), CROSS_FAN, 1.0)
        assert rhs.kind == "half_plane"
        assert rhs.normal == pytest.approx((1 / SQRT2, 1 / SQRT2), abs=1e-12)
        assert rhs.contains((-1.0, 0.3))
        assert not rhs.contains((1.0, 1.0))

    def test_far_right_is_proper_cone(self):
        rhs = rhs_bruteforce(LogPoint(10.0, 0.0), CROSS_FAN, 1.0)
        assert rhs.kind == "proper_cone"
        # Polar of the sector spanned by (1,-1) and (1,1).
        rays = rhs.cone.rays
        expect = [(-1 / SQRT2, 1 / SQRT2), (-1 / SQRT2, -1 / SQRT2)]
        for u, e in zip(rays, expect):
            assert u == pytest.approx(e, abs=1e-9)
        assert rhs.contains((-1.0, 0.0))
        assert not rhs.contains((0.0, 1.0))

    def test_single_generator_outside_strip(self):
        fan = Fan([(1, 1)])
        rhs = rhs_bruteforce(LogPoint(10.0, 0.0), fan, 1.0)
        # Only one half-plane sector within delta: polar is a single ray.
        assert rhs.kind == "proper_cone"
        assert rhs.cone.kind == "ray"
        assert rhs.cone.rays[0] == pytest.approx((-1 / SQRT2, 1 / SQRT2), abs=1e-9)

    def test_single_generator_inside_strip(self):
        fan = Fan([(1, 1)])
        rhs = rhs_bruteforce(LogPoint(5.0, 5.0), fan, 1.0)
        assert rhs.kind == "line"
        assert rhs.contains((1.0, -1.0)) and rhs.contains((-1.0, 1.0))
        assert not rhs.contains((1.0, 1.0))


class TestClassified:
    def test_matches_bruteforce_on_examples(self):
        for pt in (LogPoint(0.0, 0.0), LogPoint(10.0, 10.0), LogPoint(10.0, 0.0)):
            a = rhs_bruteforce(pt, CROSS_FAN, 1.0)
            b = rhs_classified(pt, CROSS_FAN, 1.0)
            assert rhs_equal(a, b, tol=1e-9), (pt, a, b)

    def test_single_generator_r1_is_halfplane(self):
        fan = Fan([(1, 1)])
        rhs = rhs_classified(PosPoint(1.0, 1.0), fan, 2.0)
        assert rhs.kind == "half_plane"

    def test_boundary_point_is_ambiguous(self):
        # Outer boundary of the strip of (1,1) at delta = 1: sigma = sqrt(2).
        with pytest.raises(AmbiguousClassification):
            rhs_classified(LogPoint(0.0, SQRT2), CROSS_FAN, 1.0)

    def test_halfplane_slope_is_attracting_slope(self):
        # Inside the strip of (1,2) only: boundary of the half plane must
        # have slope -q/p = -2, i.e. normal parallel to (q, p) = (2, 1).
        pt = LogPoint(8.0, 4.2)
        assert r_count(pt, WORKED_FAN, 3.0) == 1
        rhs = rhs_classified(pt, WORKED_FAN, 3.0)
        assert rhs.kind == "half_plane"
        n = rhs.normal
        assert n == pytest.approx((2 / math.sqrt(5), 1 / math.sqrt(5)), abs=1e-12)


def random_fans(rng, count, min_b=2, max_b=6):
    pool = [(p, q) for p in range(-4, 5) for q in range(0, 5)
            if (p, q) != (0, 0) and not (q == 0 and p <= 0) and math.gcd(abs(p), abs(q)) == 1]
    fans = []
    while len(fans) < count:
        b = int(rng.integers(min_b, max_b + 1))
        idx = rng.choice(len(pool), size=b, replace=False)
        try:
            fans.append(Fan([pool[i] for i in idx]))
        except Exception:
            continue
    return fans


def agreement_run(fan, delta, n_points, rng, tol=1e-9):
    """Count agreement between the two evaluation paths at random log points."""
    span = 5.0 * delta
    pts = rng.uniform(-span, span, size=(n_points, 2))
    checked = mismatches = 0
    for X, Y in pts:
        pt = LogPoint(float(X), float(Y))
        try:
            fast = rhs_classified(pt, fan, delta)
        except AmbiguousClassification:
            continue
        checked += 1
        slow = rhs_bruteforce(pt, fan, delta)
        if not rhs_equal(slow, fast, tol=tol):
            mismatches += 1
    return checked, mismatches


class TestOracleEquivalence:
    def test_worked_fan(self):
        rng = np.random.default_rng(0)
        checked, mismatches = agreement_run(WORKED_FAN, 3.0, 2000, rng)
        assert checked > 1500
        assert mismatches == 0

    def test_random_fans(self):
        rng = np.random.default_rng(1)
        for fan in random_fans(rng, 6):
            delta = float(rng.uniform(1.0, 6.0))
            checked, mismatches = agreement_run(fan, delta, 500, rng)
            assert mismatches == 0, (fan, delta)

    def test_full_plane_iff_r_ge_2(self):
        rng = np.random.default_rng(2)
        fan = WORKED_FAN
        for X, Y in rng.uniform(-15, 15, size=(500, 2)):
            pt = LogPoint(float(X), float(Y))
            try:
                rhs = rhs_classified(pt, fan, 3.0)
            except AmbiguousClassification:
                continue
            assert (rhs.kind == "full_plane") == (r_count(pt, fan, 3.0) >= 2)


class TestSubfanMonotonicity:
    def test_reflexive(self):
        rng = np.random.default_rng(3)
        for X, Y in rng.uniform(-10, 10, size=(50, 2)):
            assert rhs_subfan_subset(LogPoint(float(X), float(Y)), CROSS_FAN, CROSS_FAN, 1.0)

    def test_single_strip_subfan(self):
        rng = np.random.default_rng(4)
        sub = Fan([(1, 1)])
        for X, Y in rng.uniform(-20, 20, size=(1000, 2)):
            assert rhs_subfan_subset(LogPoint(float(X), float(Y)), CROSS_FAN, sub, 1.0)

    def test_worked_fan_subfans(self):
        rng = np.random.default_rng(5)
        subs = [Fan([(-1, 1)]), Fan([(1, 2)]), Fan([(2, 1)]),
                Fan([(-1, 1), (1, 2)]), Fan([(-1, 1), (2, 1)]), Fan([(1, 2), (2, 1)])]
        pts = rng.uniform(-15, 15, size=(200, 2))
        for sub in subs:
            for X, Y in pts:
                assert rhs_subfan_subset(LogPoint(float(X), float(Y)), WORKED_FAN, sub, 3.0)

    def test_not_a_subfan(self):
        with pytest.raises(NotASubfan):
            rhs_subfan_subset(LogPoint(0.0, 0.0), CROSS_FAN, Fan([(1, 3)]), 1.0)
