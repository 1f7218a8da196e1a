"""Solutions of the inclusion: embedded mass-action fields, pluggable
velocity-selection strategies, log-space integration, and reachability
witnesses.

Velocities are x-space vectors constrained by the inclusion cone; the
integrator steps the log coordinates (X' = x'/x componentwise) so positivity
is automatic and points of order e^(c*delta) stay representable.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AmbiguousClassification,
    MonomialOverflow,
    StepCollapse,
    WitnessFailed,
)
from .fan_geometry import (
    Fan,
    LogPoint,
    along_coordinate,
    as_log,
    r_count,
    strip_coordinate,
)
from .region_construction import (
    IntersectionPoint,
    RegionBoundary,
    Segment,
    _curve_cross_on_line,
    _sign,
    region_contains,
)
from .tdi_rhs import ConeRHS, rhs_bruteforce, rhs_classified


def _rhs_fast(point: LogPoint, fan: Fan, delta: float) -> ConeRHS:
    try:
        return rhs_classified(point, fan, delta)
    except AmbiguousClassification:
        return rhs_bruteforce(point, fan, delta)


# ---------------------------------------------------------------------------
# Mass-action systems


@dataclass(frozen=True)
class Reaction:
    """One directed reaction: vertex source -> vertex target at a fixed rate."""

    source: tuple[float, float]
    target: tuple[float, float]
    rate: float
    log_rate: float


@dataclass(frozen=True)
class MassActionSystem:
    """A reversible power-law reaction system with piecewise-constant rates.

    Every edge's reverse must be present and all rates must lie in the
    declared band [eps, 1/eps].
    """

    reactions: tuple[Reaction, ...]
    eps: float
    label: str = ""

    def __post_init__(self):
        pairs = {(r.source, r.target) for r in self.reactions}
        for r in self.reactions:
            if (r.target, r.source) not in pairs:
                raise ValueError(f"reaction {r.source}->{r.target} has no reverse")
            if not (self.eps - 1e-15 <= r.rate <= 1.0 / self.eps + 1e-15):
                raise ValueError(f"rate {r.rate} outside [{self.eps}, {1/self.eps}]")


def _reversible(source, target, k_fwd: float, k_bwd: float) -> list[Reaction]:
    return [
        Reaction(source, target, k_fwd, math.log(k_fwd)),
        Reaction(target, source, k_bwd, math.log(k_bwd)),
    ]


def mass_action_field(system: MassActionSystem, point, t: float = 0.0,
                      log_cap: float = 600.0) -> tuple[float, float]:
    """Sum over edges of k * x^source * (target - source), in x-space."""
    pt = as_log(point)
    fx = fy = 0.0
    for r in system.reactions:
        e = r.log_rate + r.source[0] * pt.X + r.source[1] * pt.Y
        if abs(e) > log_cap:
            raise MonomialOverflow(f"monomial exponent {e:.1f} beyond cap {log_cap}")
        m = math.exp(e)
        fx += m * (r.target[0] - r.source[0])
        fy += m * (r.target[1] - r.source[1])
    return (fx, fy)


def field_stiffness(system: MassActionSystem, point, log_cap: float = 600.0) -> float:
    """Bound on the log-space Jacobian row sum of the embedded field.

    Used to keep explicit steps inside the stability region; the reversible
    pair systems are exponentially stiff near their balanced manifolds.
    """
    pt = as_log(point)
    lx = ly = 0.0
    fx = fy = 0.0
    for r in system.reactions:
        e = r.log_rate + r.source[0] * pt.X + r.source[1] * pt.Y
        if abs(e) > log_cap:
            raise MonomialOverflow(f"monomial exponent {e:.1f} beyond cap {log_cap}")
        m = math.exp(e)
        wy = abs(r.source[0]) + abs(r.source[1])
        dx = r.target[0] - r.source[0]
        dy = r.target[1] - r.source[1]
        fx += m * dx
        fy += m * dy
        lx += m * abs(dx) * wy
        ly += m * abs(dy) * wy
    gx = math.exp(-pt.X)
    gy = math.exp(-pt.Y)
    return max(lx * gx, ly * gy) + max(abs(fx) * gx, abs(fy) * gy)


def complex_balance_residual(system: MassActionSystem, point) -> float:
    """max over vertices of |inflow - outflow| / (inflow + outflow)."""
    pt = as_log(point)
    inflow: dict = {}
    outflow: dict = {}
    for r in system.reactions:
        m = math.exp(r.log_rate + r.source[0] * pt.X + r.source[1] * pt.Y)
        outflow[r.source] = outflow.get(r.source, 0.0) + m
        inflow[r.target] = inflow.get(r.target, 0.0) + m
    worst = 0.0
    for v in set(inflow) | set(outflow):
        fin = inflow.get(v, 0.0)
        fout = outflow.get(v, 0.0)
        tot = fin + fout
        if tot > 0.0:
            worst = max(worst, abs(fin - fout) / tot)
    return worst


def embedded_system_for_target(fan: Fan, delta: float, target: str,
                               provenance: IntersectionPoint | None = None) -> MassActionSystem:
    """Reversible network q*Y <-> p*X per generator pair, rates placed so the
    complex-balanced equilibrium sits at the requested target.

    'origin_11' uses every generator with all rates 1; 'point_NM' uses the
    two generators of the provenance intersection point with the backward
    rates e^(s_i * delta_i), which puts the equilibrium on that point.
    Negative p is encoded directly as a power-law complex (p, 0).
    """
    reactions: list[Reaction] = []
    if target == "origin_11":
        for g in fan.generators:
            reactions += _reversible((0.0, float(g.q)), (float(g.p), 0.0), 1.0, 1.0)
        eps = 1.0
        label = "embedded_origin_11"
    elif target == "point_NM":
        if provenance is None:
            raise ValueError("point_NM target needs the intersection-point provenance")
        rates = []
        for idx, s in ((provenance.i, provenance.si), (provenance.j, provenance.sj)):
            g = fan.generators[idx]
            k_bwd = math.exp(s * delta * g.norm)
            reactions += _reversible((0.0, float(g.q)), (float(g.p), 0.0), 1.0, k_bwd)
            rates.append(k_bwd)
        eps = min(1.0, *(min(k, 1.0 / k) for k in rates))
        label = "embedded_point_NM"
    else:
        raise ValueError(f"unknown target {target!r}")
    return MassActionSystem(tuple(reactions), eps, label)


# ---------------------------------------------------------------------------
# Selection strategies


def _log_unit(point: LogPoint, v: tuple[float, float]) -> tuple[float, float]:
    """Rescale an x-space velocity to unit log-space speed (cones allow it)."""
    gx = v[0] * math.exp(-point.X)
    gy = v[1] * math.exp(-point.Y)
    n = math.hypot(gx, gy)
    if n == 0.0:
        return (0.0, 0.0)
    return (v[0] / n, v[1] / n)


class FieldStrategy:
    """Follow a fixed embedded mass-action field."""

    def __init__(self, system: MassActionSystem):
        self.system = system
        self.name = system.label or "field"

    def __call__(self, point: LogPoint, rhs: ConeRHS, t: float) -> tuple[float, float]:
        return mass_action_field(self.system, point, t)

    def stability_scale(self, point: LogPoint, t: float) -> float:
        return field_stiffness(self.system, point)


class TimeRescaledField:
    """Embedded field rescaled toward unit log speed.

    Positive rescaling keeps every velocity inside the inclusion cone, so
    this traces the same path as the raw field in bounded trajectory time
    even where the rates make the raw field exponentially slow.
    """

    def __init__(self, system: MassActionSystem):
        self.system = system
        self.name = (system.label or "field") + "_rescaled"

    def _speed(self, point: LogPoint, v) -> float:
        return math.hypot(v[0] * math.exp(-point.X), v[1] * math.exp(-point.Y))

    def __call__(self, point: LogPoint, rhs: ConeRHS, t: float) -> tuple[float, float]:
        v = mass_action_field(self.system, point, t)
        c = 1.0 / (1.0 + self._speed(point, v))
        return (v[0] * c, v[1] * c)

    def stability_scale(self, point: LogPoint, t: float) -> float:
        v = mass_action_field(self.system, point, t)
        return field_stiffness(self.system, point) / (1.0 + self._speed(point, v))


class ExtremeRayStrategy:
    """Always pick one extreme ray of the cone (unit log speed).

    In full-plane zones there is no constraint; a fixed fallback direction
    keeps the trajectory moving deterministically.
    """

    def __init__(self, side: str, fallback_angle: float | None = None):
        if side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        self.side = side
        self.name = f"extreme_{side}"
        a = fallback_angle if fallback_angle is not None else (2.5 if side == "left" else -2.5)
        self._fallback = (math.cos(a), math.sin(a))

    def pick(self, rhs: ConeRHS) -> tuple[float, float]:
        rays = rhs.extreme_rays()
        if not rays:
            return self._fallback
        return rays[-1 if self.side == "left" else 0]

    def __call__(self, point: LogPoint, rhs: ConeRHS, t: float) -> tuple[float, float]:
        return _log_unit(point, self.pick(rhs))


class AlternatingStrategy:
    """Switch between the two extreme rays on a fixed time period."""

    def __init__(self, period: float = 0.5):
        self.period = period
        self.name = "alternating"
        self._left = ExtremeRayStrategy("left")
        self._right = ExtremeRayStrategy("right")

    def __call__(self, point: LogPoint, rhs: ConeRHS, t: float) -> tuple[float, float]:
        pick = self._left if int(t / self.period) % 2 == 0 else self._right
        return pick(point, rhs, t)


class RandomInConeStrategy:
    """Seeded random direction strictly inside the cone (unit log speed)."""

    def __init__(self, seed: int = 0):
        self.rng = np.random.default_rng(seed)
        self.name = f"random_in_cone_{seed}"

    def __call__(self, point: LogPoint, rhs: ConeRHS, t: float) -> tuple[float, float]:
        u = float(self.rng.uniform(0.05, 0.95))
        if rhs.kind == "full_plane":
            a = float(self.rng.uniform(0.0, 2.0 * math.pi))
        elif rhs.kind == "half_plane":
            base = math.atan2(rhs.normal[1], rhs.normal[0])
            a = base + math.pi / 2.0 + u * math.pi
        elif rhs.kind == "line":
            d = rhs.direction
            a = math.atan2(d[1], d[0]) + (0.0 if u < 0.5 else math.pi)
        else:
            angles = [math.atan2(r[1], r[0]) for r in rhs.cone.rays]
            if len(angles) == 1:
                a = angles[0]
            else:
                width = (angles[1] - angles[0]) % (2.0 * math.pi)
                a = angles[0] + u * width
        return _log_unit(point, (math.cos(a), math.sin(a)))


class StrictStrategy:
    """Wrapper enforcing a minimum x-space speed whenever the cone is proper."""

    def __init__(self, inner, rho: float = 1e-3):
        self.inner = inner
        self.rho = rho
        self.name = f"strict_{inner.name}"

    def __call__(self, point: LogPoint, rhs: ConeRHS, t: float) -> tuple[float, float]:
        v = self.inner(point, rhs, t)
        if rhs.kind == "full_plane":
            return v
        n = math.hypot(v[0], v[1])
        if 0.0 < n < self.rho:
            scale = self.rho / n
            return (v[0] * scale, v[1] * scale)
        return v


def builtin_strategies(fan: Fan, delta: float, seed: int = 0) -> dict:
    """The shipped strategy registry, keyed by name."""
    return {
        "origin_11": FieldStrategy(embedded_system_for_target(fan, delta, "origin_11")),
        "extreme_left": StrictStrategy(ExtremeRayStrategy("left")),
        "extreme_right": StrictStrategy(ExtremeRayStrategy("right")),
        "alternating": StrictStrategy(AlternatingStrategy()),
        "random_in_cone": StrictStrategy(RandomInConeStrategy(seed)),
    }


# ---------------------------------------------------------------------------
# Integration


@dataclass
class Trajectory:
    """Time-stamped log-space samples with the velocities that produced them."""

    times: list[float]
    points: list[LogPoint]
    velocities: list[tuple[float, float]]
    cone_tags: list[str]
    strategy: str
    termination: str
    worst_violation: float = 0.0
    legs: list = field(default_factory=list)

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("trajectory times must strictly increase")


def integrate(strategy, start, fan: Fan, delta: float, t_end: float,
              dt: float = 1e-2, max_log_step: float = 0.25,
              validate: bool = True, tol: float = 1e-9,
              stop_when=None, record_every: int = 1) -> Trajectory:
    """Explicit 4th-order stepping of the selection in log coordinates.

    The step is capped so no single update moves more than max_log_step in
    log space (the fields are exponentially stiff far from equilibrium) and
    halved when a stage fails, down to dt/1024; the strategy's velocity at
    every accepted step start is checked against the brute-force cone.
    """
    pt = as_log(start)
    t = 0.0
    times = [t]
    points = [pt]
    velocities = []
    tags = []
    worst = 0.0
    termination = "t_end"

    def log_vel(p: LogPoint, tt: float) -> tuple[tuple[float, float], tuple[float, float], str]:
        rhs = _rhs_fast(p, fan, delta)
        v = strategy(p, rhs, tt)
        return (v[0] * math.exp(-p.X), v[1] * math.exp(-p.Y)), v, rhs.tag

    steps = 0
    max_steps = int(math.ceil(t_end / dt)) * 64 + 16
    while t < t_end and steps < max_steps:
        if stop_when is not None and stop_when(pt, t):
            termination = "stopped"
            break
        steps += 1
        f1, v0, tag = log_vel(pt, t)
        if validate:
            violation = rhs_bruteforce(pt, fan, delta, tol=-1e-9).violation(v0)
            worst = max(worst, violation)
            if violation > tol:
                # Halving cannot fix the start velocity, so this is exactly
                # the fails-at-minimum-step condition.
                raise StepCollapse(
                    f"velocity violates the cone by {violation:.3e} at t={t:.4g}"
                )
        speed = math.hypot(f1[0], f1[1])
        if speed == 0.0:
            termination = "stalled"
            break
        h = min(dt, t_end - t, max_log_step / speed)
        scale_fn = getattr(strategy, "stability_scale", None)
        if scale_fn is not None:
            stiff = scale_fn(pt, t)
            if stiff > 0.0:
                h = min(h, 1.5 / stiff)
        h_min = dt / 1024.0
        while True:
            try:
                f2, _, _ = log_vel(LogPoint(pt.X + 0.5 * h * f1[0], pt.Y + 0.5 * h * f1[1]), t + 0.5 * h)
                f3, _, _ = log_vel(LogPoint(pt.X + 0.5 * h * f2[0], pt.Y + 0.5 * h * f2[1]), t + 0.5 * h)
                f4, _, _ = log_vel(LogPoint(pt.X + h * f3[0], pt.Y + h * f3[1]), t + h)
                dX = h / 6.0 * (f1[0] + 2.0 * f2[0] + 2.0 * f3[0] + f4[0])
                dY = h / 6.0 * (f1[1] + 2.0 * f2[1] + 2.0 * f3[1] + f4[1])
                if not (math.isfinite(dX) and math.isfinite(dY)):
                    raise MonomialOverflow("nonfinite step")
                if max(abs(dX), abs(dY)) > 4.0 * max_log_step:
                    raise MonomialOverflow("step too large")
                break
            except (MonomialOverflow, OverflowError):
                h *= 0.5
                if h < h_min:
                    raise StepCollapse(
                        f"step below {h_min} without passing at t={t:.4g}"
                    )
        pt = LogPoint(pt.X + dX, pt.Y + dY)
        t += h
        if steps % record_every == 0 or t >= t_end:
            times.append(t)
            points.append(pt)
            velocities.append(v0)
            tags.append(tag)
        if stop_when is not None and stop_when(pt, t):
            termination = "stopped"
            break
    if steps >= max_steps and termination == "t_end" and t < t_end:
        termination = "max_steps"
    while len(velocities) < len(times):
        velocities.append((0.0, 0.0))
        tags.append("")
    return Trajectory(times, points, velocities, tags, getattr(strategy, "name", "custom"),
                      termination, worst)


def integrate_to_point(system: MassActionSystem, start, fan: Fan, delta: float,
                       target: LogPoint, t_end: float = 200.0, dt: float = 1e-3,
                       rel_tol: float = 1e-6, validate: bool = True,
                       rescale: bool = False) -> Trajectory:
    """Integrate an embedded field until within rel_tol (log space) of target."""
    strat = TimeRescaledField(system) if rescale else FieldStrategy(system)

    def close(p: LogPoint, t: float) -> bool:
        return max(abs(p.X - target.X), abs(p.Y - target.Y)) <= rel_tol * 0.5

    traj = integrate(strat, start, fan, delta, t_end, dt=dt, validate=validate,
                     stop_when=close)
    return traj


def omega_limit_estimate(trajectory: Trajectory, tail_fraction: float = 0.25,
                         radius: float = 1e-3) -> list[LogPoint]:
    """Greedy cluster centers of the trajectory tail (log-space radius)."""
    n = len(trajectory.points)
    if n < 100:
        raise ValueError("need at least 100 trajectory samples")
    tail = trajectory.points[int(n * (1.0 - tail_fraction)):]
    centers: list[LogPoint] = []
    for p in tail:
        for c in centers:
            if math.hypot(p.X - c.X, p.Y - c.Y) <= radius:
                break
        else:
            centers.append(p)
    return centers


# ---------------------------------------------------------------------------
# Reachability witnesses


@dataclass
class WitnessLeg:
    kind: str            # 'flow', 'xline' or 'logline'
    description: str
    points: list[LogPoint]
    velocities: list[tuple[float, float]]


def _validate_leg(leg: WitnessLeg, fan: Fan, delta: float, tol: float = 1e-9) -> float:
    worst = 0.0
    for p, v in zip(leg.points, leg.velocities):
        worst = max(worst, rhs_bruteforce(p, fan, delta, tol=-1e-9).violation(v))
    if worst > tol:
        raise WitnessFailed(leg.description, f"worst violation {worst:.3e}")
    return worst


def _logline_leg(a: LogPoint, b: LogPoint, desc: str, step: float = 0.05) -> WitnessLeg:
    """Straight path in log space; x-space velocity is (dX*x, dY*y)."""
    dX, dY = b.X - a.X, b.Y - a.Y
    length = math.hypot(dX, dY)
    n = max(2, int(math.ceil(length / step)))
    pts, vels = [], []
    for k in range(n + 1):
        u = k / n
        p = LogPoint(a.X + u * dX, a.Y + u * dY)
        pts.append(p)
        vels.append((dX * math.exp(p.X), dY * math.exp(p.Y)))
    return WitnessLeg("logline", desc, pts, vels)


def _xline_leg(a: LogPoint, direction: tuple[float, float], x_end: LogPoint,
               desc: str, step: float = 0.05) -> WitnessLeg:
    """Straight x-space path from a toward x_end along an exact direction.

    The direction (not endpoint differences) is used for the velocities so
    exactly cone-parallel walks validate exactly.
    """
    ax, ay = math.exp(a.X), math.exp(a.Y)
    bx, by = math.exp(x_end.X), math.exp(x_end.Y)
    pts, vels = [], []
    # Parametrize by the dominant log axis for even coverage.
    if abs(x_end.X - a.X) >= abs(x_end.Y - a.Y):
        n = max(2, int(math.ceil(abs(x_end.X - a.X) / step)))
        for k in range(n + 1):
            X = a.X + (x_end.X - a.X) * k / n
            x = math.exp(X)
            y = ay + (by - ay) * (x - ax) / (bx - ax) if bx != ax else ay
            if y <= 0.0:
                continue
            pts.append(LogPoint(X, math.log(y)))
            vels.append(direction)
    else:
        n = max(2, int(math.ceil(abs(x_end.Y - a.Y) / step)))
        for k in range(n + 1):
            Y = a.Y + (x_end.Y - a.Y) * k / n
            y = math.exp(Y)
            x = ax + (bx - ax) * (y - ay) / (by - ay) if by != ay else ax
            if x <= 0.0:
                continue
            pts.append(LogPoint(math.log(x), Y))
            vels.append(direction)
    return WitnessLeg("xline", desc, pts, vels)


def _segment_direction(seg: Segment, fan: Fan) -> tuple[float, float]:
    """Unit x-space direction of a boundary segment, oriented start -> end."""
    g = fan.generators[seg.region_index]
    if seg.slope is None:
        d = (0.0, 1.0)
    else:
        n = math.hypot(g.p, g.q)
        d = (g.p / n, -g.q / n) if g.p != 0 or g.q != 0 else (1.0, 0.0)
        if seg.slope == 0 and g.q == 0:
            d = (1.0, 0.0)
    # Orient toward the segment end (compare x-space displacement sign).
    to_end = (math.exp(seg.end.X) - math.exp(seg.start.X),
              math.exp(seg.end.Y) - math.exp(seg.start.Y))
    if d[0] * to_end[0] + d[1] * to_end[1] < 0.0:
        d = (-d[0], -d[1])
    return d


def _walk_chain(boundary: RegionBoundary, chain: str) -> list[Segment]:
    """Boundary segments walkable in construction order from a start anchor."""
    return [s for s in boundary.polylines[chain]]


def _sigma_match_point(seg: Segment, fan: Fan, delta: float, sigma: float) -> LogPoint:
    """Point on a crossing segment where the crossed strip coordinate is sigma."""
    g = fan.generators[seg.region_index]
    if seg.slope is None:
        return LogPoint(seg.start.X, (g.p * seg.start.X + sigma) / g.q)
    if g.q == 0:
        return LogPoint(-sigma / g.p, seg.start.Y)
    s0 = g.q * seg.start.Y - g.p * seg.start.X
    dx = _sign(s0 - sigma) * _sign(g.p) if g.p != 0 else 1
    return _curve_cross_on_line(seg.start, float(seg.slope), g, sigma, dx)


def reach_witness(from_point, to_point, fan: Fan, delta: float,
                  region: RegionBoundary, tol: float = 1e-9,
                  arrive_tol: float = 1e-6, t_flow: float = 400.0) -> Trajectory:
    """Piecewise trajectory witnessing reachability inside the region.

    Leg 1 rides the all-rates-one embedded field to (1,1).  Leg 2 dispatches
    on r(target): full-plane targets get a straight log-space run; strip
    targets route via the matching start point, walk the boundary to the
    segment crossing the strip, and slide along the strip; gap targets walk
    to a corner anchor and decompose the remaining displacement into the
    gap cone's extreme rays.  Every leg is velocity-validated.
    """
    src = as_log(from_point)
    dst = as_log(to_point)
    if region_contains(region, src) == "outside" or region_contains(region, dst) == "outside":
        raise WitnessFailed("precondition", "both endpoints must lie in the region")

    legs: list[WitnessLeg] = []
    origin = LogPoint(0.0, 0.0)
    sys11 = embedded_system_for_target(fan, delta, "origin_11")
    flow1 = integrate_to_point(sys11, src, fan, delta, origin, t_end=t_flow,
                               rel_tol=arrive_tol, rescale=True)
    if flow1.termination != "stopped":
        raise WitnessFailed("leg1_flow", f"did not converge ({flow1.termination})")
    legs.append(WitnessLeg("flow", "embedded flow to (1,1)",
                           flow1.points, flow1.velocities))
    cur = flow1.points[-1]

    r_dst = r_count(dst, fan, delta)
    if max(abs(dst.X - cur.X), abs(dst.Y - cur.Y)) <= arrive_tol:
        pass  # target was (1,1): single leg
    elif r_dst >= 2:
        legs.append(_logline_leg(cur, dst, "full-plane straight run"))
        cur = dst
    else:
        legs_mid, cur = _route_via_boundary(cur, dst, r_dst, fan, delta, region,
                                            arrive_tol, t_flow)
        legs.extend(legs_mid)

    if max(abs(dst.X - cur.X), abs(dst.Y - cur.Y)) > arrive_tol:
        raise WitnessFailed("arrival", f"ended {max(abs(dst.X-cur.X), abs(dst.Y-cur.Y)):.2e} from target")

    worst = 0.0
    for leg in legs:
        if leg.kind != "flow":  # flow legs were validated by the integrator
            worst = max(worst, _validate_leg(leg, fan, delta, tol))

    times = [0.0]
    points = [src]
    vels = [(0.0, 0.0)]
    for leg in legs:
        for p, v in zip(leg.points, leg.velocities):
            times.append(times[-1] + 1.0)
            points.append(p)
            vels.append(v)
    return Trajectory(times, points, vels, [""] * len(times), "reach_witness",
                      "arrived", worst, legs=legs)


def _start_anchor_for(chain: str) -> str:
    return "NM" if chain in ("I1", "I4") else "nm"


def _find_crossing_chain(region: RegionBoundary, gen_index: int, arm: int):
    for chain in ("I1", "I4", "I2", "I3"):
        for k, seg in enumerate(region.polylines[chain]):
            if seg.crossing and seg.region_index == gen_index and seg.arm_sign == arm:
                return chain, k
    return None, None


def _route_via_boundary(cur: LogPoint, dst: LogPoint, r_dst: int, fan: Fan,
                        delta: float, region: RegionBoundary,
                        arrive_tol: float, t_flow: float):
    """Legs from (1,1) to a strip (r=1) or gap (r=0) target."""
    legs: list[WitnessLeg] = []
    regions = fan.regions(delta)

    if r_dst == 1:
        target_region = next(
            r for r in regions
            if abs(strip_coordinate(dst, r)) < r.delta_i - 1e-9
        )
        arm = _sign(along_coordinate(dst, target_region.gen))
        chain, k = _find_crossing_chain(region, target_region.index, arm)
        if chain is None:
            chain, k = _find_crossing_chain(region, target_region.index, -arm)
        if chain is None:
            raise WitnessFailed("route", f"no crossing segment for strip {target_region.index}")
        anchor_name = _start_anchor_for(chain)
        legs.append(_flow_leg_to_anchor(cur, anchor_name, fan, delta, region,
                                        arrive_tol, t_flow))
        cur = legs[-1].points[-1]
        # Walk the chain up to the crossing segment, then into it.
        for seg in region.polylines[chain][:k]:
            leg = _xline_leg(cur, _segment_direction(seg, fan), seg.end,
                             f"walk {chain} segment")
            legs.append(leg)
            cur = leg.points[-1]
        seg = region.polylines[chain][k]
        sigma_t = strip_coordinate(dst, target_region)
        match = _sigma_match_point(seg, fan, delta, sigma_t)
        leg = _xline_leg(cur, _segment_direction(seg, fan), match,
                         "walk into the strip")
        legs.append(leg)
        cur = leg.points[-1]
        leg = _logline_leg(cur, dst, "slide along the strip")
        legs.append(leg)
        return legs, dst

    # r = 0: gap target; find the flanking sector by position angle.
    from .fan_geometry import _arm_table, _wrap

    arms = _arm_table(fan)
    phi = _wrap(math.atan2(dst.Y, dst.X))
    k = len(arms) - 1
    for i, (a, _, _) in enumerate(arms):
        if phi >= a:
            k = i
        else:
            break
    flank = (arms[k], arms[(k + 1) % len(arms)])
    rays = rhs_bruteforce(dst, fan, delta).extreme_rays()
    if len(rays) != 2:
        raise WitnessFailed("route", "gap target has no proper cone")

    candidates = []
    for chain in ("I1", "I4", "I2", "I3"):
        segs = region.polylines[chain]
        for k2, seg in enumerate(segs):
            for (_, gi, arm) in flank:
                if seg.crossing and seg.region_index == gi and seg.arm_sign == arm:
                    candidates.append((chain, k2))
    seen = set()
    candidates = [c for c in candidates if not (c in seen or seen.add(c))]
    last_err: Exception | None = None
    for chain, k2 in candidates:
        for order in ((0, 1), (1, 0)):
            try:
                legs_try: list[WitnessLeg] = []
                anchor_name = _start_anchor_for(chain)
                legs_try.append(_flow_leg_to_anchor(cur, anchor_name, fan, delta,
                                                    region, arrive_tol, t_flow))
                c = legs_try[-1].points[-1]
                for seg in region.polylines[chain][:k2]:
                    leg = _xline_leg(c, _segment_direction(seg, fan), seg.end,
                                     f"walk {chain} segment")
                    legs_try.append(leg)
                    c = leg.points[-1]
                seg = region.polylines[chain][k2]
                corner = seg.start
                leg = _xline_leg(c, _segment_direction(seg, fan), corner,
                                 "walk to the gap corner") if k2 >= 0 else None
                # corner equals the previous segment's end; only walk if needed
                if max(abs(c.X - corner.X), abs(c.Y - corner.Y)) > 1e-12:
                    legs_try.append(leg)
                    c = leg.points[-1]
                mids = _ray_decomposition(c, dst, rays, order)
                for a, b, ray in mids:
                    leg = _xline_leg(a, ray, b, "gap cone ray")
                    legs_try.append(leg)
                    c = leg.points[-1]
                if max(abs(c.X - dst.X), abs(c.Y - dst.Y)) > arrive_tol:
                    raise WitnessFailed("gap arrival", "decomposition drifted")
                for leg in legs_try:
                    if leg.kind != "flow":
                        _validate_leg(leg, fan, delta)
                return legs_try, dst
            except (WitnessFailed, ValueError, ZeroDivisionError) as exc:
                last_err = exc
                continue
    raise WitnessFailed("route", f"no valid gap route: {last_err}")


def _flow_leg_to_anchor(cur: LogPoint, anchor_name: str, fan: Fan, delta: float,
                        region: RegionBoundary, arrive_tol: float,
                        t_flow: float) -> WitnessLeg:
    """Hop from near (1,1) to (N,M) or (n,m) through the full-plane zone.

    The log-straight segment from the origin to a pairwise intersection
    point stays strictly inside both of that point's strips (its strip
    coordinates scale linearly), so the inclusion value along the hop is
    the whole plane and any velocity is admissible.
    """
    ip = region.start_max if anchor_name == "NM" else region.start_min
    return _logline_leg(cur, ip.log, f"full-plane hop to {anchor_name}")


def _ray_decomposition(a: LogPoint, b: LogPoint, rays, order):
    """Split the x-space displacement a->b into two cone-ray moves."""
    ax, ay = math.exp(a.X), math.exp(a.Y)
    bx, by = math.exp(b.X), math.exp(b.Y)
    r1 = rays[order[0]]
    r2 = rays[order[1]]
    det = r1[0] * r2[1] - r1[1] * r2[0]
    if abs(det) < 1e-300:
        raise ValueError("degenerate ray pair")
    dx, dy = bx - ax, by - ay
    alpha = (dx * r2[1] - dy * r2[0]) / det
    beta = (r1[0] * dy - r1[1] * dx) / det
    if alpha < -1e-12 or beta < -1e-12:
        raise ValueError("target not in the gap cone from this corner")
    mid = (ax + alpha * r1[0], ay + alpha * r1[1])
    if mid[0] <= 0.0 or mid[1] <= 0.0:
        raise ValueError("intermediate point leaves the quadrant")
    mid_lp = LogPoint(math.log(mid[0]), math.log(mid[1]))
    out = []
    if alpha > 1e-12:
        out.append((a, mid_lp, r1))
    if beta > 1e-12:
        out.append((mid_lp, b, r2))
    return out
