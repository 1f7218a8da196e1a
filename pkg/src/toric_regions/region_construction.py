"""Construction of the minimal invariant region and its boundary loop.

The boundary is assembled from straight x-space segments that cross the
uncertainty strips along their attracting directions, plus arcs of the
bounding power curves y^q = h x^p that close the loop.  Anchor points keep
their delta-independent exponents so start-point selection stays exact in
the large-delta asymptotics.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    ArcsDontMeet,
    ConstructionFailed,
    DeltaTooSmall,
    NoCrossing,
    OutOfBand,
    ParallelGenerators,
    UnsupportedFan,
)
from .fan_geometry import (
    STRIP_TOL,
    Fan,
    LineGenerator,
    LogPoint,
    PosPoint,
    UncertaintyRegion,
    _arm_table,
    _wrap,
    along_coordinate,
    as_log,
    r_count,
    strip_coordinate,
)
from .tdi_rhs import rhs_bruteforce

TWO_PI = 2.0 * math.pi


def _sign(x: float) -> int:
    return 1 if x >= 0.0 else -1


# ---------------------------------------------------------------------------
# Step 1: intersection points of the strip boundary curves


@dataclass(frozen=True)
class IntersectionPoint:
    """Closed-form intersection of two strip boundary curves.

    Log coordinates are (cx * delta, cy * delta); the unit-delta exponents
    cx, cy are what Step 2 compares, so the selection is stable in delta.
    """

    i: int
    j: int
    si: int
    sj: int
    cx: float
    cy: float
    delta: float

    @property
    def log(self) -> LogPoint:
        return LogPoint(self.cx * self.delta, self.cy * self.delta)

    @property
    def key(self) -> tuple[int, int, int, int]:
        """Deterministic provenance order: + signs sort before - signs."""
        return (self.i, self.j, 0 if self.si > 0 else 1, 0 if self.sj > 0 else 1)


def intersection_points(fan: Fan, delta: float) -> tuple[IntersectionPoint, ...]:
    """All 4 * C(b, 2) pairwise curve intersections (the set S^uc)."""
    gens = fan.generators
    points = []
    for i in range(len(gens)):
        for j in range(i + 1, len(gens)):
            gi, gj = gens[i], gens[j]
            det = gi.p * gj.q - gj.p * gi.q
            if det == 0:
                raise ParallelGenerators(f"{gi} and {gj}")
            wi, wj = gi.norm, gj.norm
            for si in (1, -1):
                for sj in (1, -1):
                    cx = (gi.q * wj * sj - gj.q * wi * si) / det
                    cy = (gi.p * wj * sj - gj.p * wi * si) / det
                    points.append(IntersectionPoint(i, j, si, sj, cx, cy, delta))
    return tuple(points)


def _lookup_point(points, ia: int, sa: int, ib: int, sb: int) -> IntersectionPoint:
    if ia > ib:
        ia, sa, ib, sb = ib, sb, ia, sa
    for pt in points:
        if (pt.i, pt.j, pt.si, pt.sj) == (ia, ib, sa, sb):
            return pt
    raise KeyError(f"no intersection point for ({ia},{sa})x({ib},{sb})")


# ---------------------------------------------------------------------------
# Step 2: start points


_EXP_TOL = 1e-9  # tolerance on unit-delta exponents when ranking coordinates


def choose_start_points(points, mode: str = "standard"):
    """Pick ((N,M), (n,m)) from S^uc.

    (N,M) maximizes the larger coordinate; on an x/y tie the point whose
    maximum is the y coordinate wins, then proximity to the diagonal, then
    provenance order.  (n,m) minimizes the larger coordinate (the smaller
    one in the all-negative special case), never coincides with (N,M), and
    breaks ties the same way.
    """
    if not points:
        raise ValueError("empty intersection set")
    xmax = max(p.cx for p in points)
    ymax = max(p.cy for p in points)
    if ymax >= xmax - _EXP_TOL:
        cands = [p for p in points if p.cy >= ymax - _EXP_TOL]
    else:
        cands = [p for p in points if p.cx >= xmax - _EXP_TOL]
    cands.sort(key=lambda p: (abs(p.cx - p.cy), p.key))
    nm = cands[0]

    rest = [p for p in points if p is not nm] or [nm]
    if mode == "all_negative":
        score = lambda p: min(p.cx, p.cy)
    else:
        score = lambda p: max(p.cx, p.cy)
    best = min(score(p) for p in rest)
    cands = [p for p in rest if score(p) <= best + _EXP_TOL]
    cands.sort(key=lambda p: (abs(p.cx - p.cy), p.key))
    return nm, cands[0]


# ---------------------------------------------------------------------------
# Slope classes and stop indices


@dataclass(frozen=True)
class SlopeClasses:
    """Index sets S1 (negative), S2 (0 < slope < 1), S3 (slope >= 1) and the
    four stop indices of the polyline construction."""

    s1: tuple[int, ...]
    s2: tuple[int, ...]
    s3: tuple[int, ...]
    i1: int
    i2: int
    i3: int
    i4: int
    mode: str


def compute_slope_classes(fan: Fan) -> SlopeClasses:
    """Classify generators and resolve the construction mode.

    Modes: 'standard' (at least one generator in each of S1, S2, S3, axis
    generators allowed on top), 'all_positive', 'all_negative'.  Anything
    else is rejected.
    """
    s1, s2, s3, axis = [], [], [], []
    for idx, g in enumerate(fan.generators):
        if g.is_axis:
            axis.append(idx)
        elif g.p < 0:
            s1.append(idx)
        elif g.q > g.p:
            s2.append(idx)
        else:
            s3.append(idx)
    non_axis = s1 + s2 + s3
    if fan.b < 2 or not non_axis:
        raise UnsupportedFan(f"fan {fan} has too few usable generators")
    if s1 and s2 and s3:
        mode = "standard"
        i1, i4 = max(s1), min(s1)  # angular order: max theta / min theta
        i2, i3 = min(s2), max(s3)
    elif (s2 or s3) and not s1 and not axis:
        mode = "all_positive"
        pos = sorted(s2 + s3)
        i2 = i4 = pos[0]
        i1 = i3 = pos[-1]
    elif s1 and not (s2 or s3) and not axis:
        mode = "all_negative"
        i2 = i4 = min(s1)
        i1 = i3 = max(s1)
    else:
        raise UnsupportedFan(
            f"fan {fan} has slope classes S1={s1} S2={s2} S3={s3} axis={axis}; "
            "needs all three classes or a pure-sign special case"
        )
    return SlopeClasses(tuple(s1), tuple(s2), tuple(s3), i1, i2, i3, i4, mode)


# ---------------------------------------------------------------------------
# Boundary pieces


@dataclass(frozen=True)
class Segment:
    """Straight x-space piece; slope None means vertical (x constant)."""

    start: LogPoint
    end: LogPoint
    slope: Fraction | None
    region_index: int
    arm_sign: int
    end_sign: int = 0       # sign of the curve the piece terminates on
    crossing: bool = True   # False for closure extensions / joins
    kind: str = "segment"

    def reversed(self) -> "Segment":
        return Segment(self.end, self.start, self.slope, self.region_index,
                       self.arm_sign, self.end_sign, self.crossing)

    def normal(self, fan: Fan) -> tuple[float, float]:
        """Constant outward x-space unit normal."""
        g = fan.generators[self.region_index]
        n = g.norm
        return (self.arm_sign * g.q / n, self.arm_sign * g.p / n)

    def point_at(self, u: float) -> LogPoint:
        """Point at fraction u of the dominant log-axis span."""
        dX = self.end.X - self.start.X
        dY = self.end.Y - self.start.Y
        if self.slope is None:
            return LogPoint(self.start.X, self.start.Y + u * dY)
        s = float(self.slope)
        if abs(dX) >= abs(dY):
            X = self.start.X + u * dX
            return LogPoint(X, _line_y_log(self.start, s, X))
        Y = self.start.Y + u * dY
        return LogPoint(_line_x_log(self.start, s, Y), Y)

    def log_length(self) -> float:
        return abs(self.end.X - self.start.X) + abs(self.end.Y - self.start.Y)


@dataclass(frozen=True)
class Arc:
    """Piece of the curve y^q = exp(h_sign * delta_i) * x^p.

    In log space this is a straight line q*Y - p*X = h_sign * delta_i.
    """

    gen_index: int
    h_sign: int
    start: LogPoint
    end: LogPoint
    kind: str = "arc"

    def reversed(self) -> "Arc":
        return Arc(self.gen_index, self.h_sign, self.end, self.start)

    def normal_at(self, fan: Fan, pt: LogPoint) -> tuple[float, float]:
        """Outward x-space unit normal at a point of the arc."""
        g = fan.generators[self.gen_index]
        nx = -g.p * math.exp(-pt.X)
        ny = g.q * math.exp(-pt.Y)
        n = math.hypot(nx, ny)
        return (self.h_sign * nx / n, self.h_sign * ny / n)

    def point_at(self, u: float) -> LogPoint:
        return LogPoint(self.start.X + u * (self.end.X - self.start.X),
                        self.start.Y + u * (self.end.Y - self.start.Y))

    def log_length(self) -> float:
        return abs(self.end.X - self.start.X) + abs(self.end.Y - self.start.Y)


def _line_y_log(anchor: LogPoint, s: float, X: float) -> float:
    """Log of y along the x-space line through anchor with slope s, at log-x X."""
    # y = y0 + s*(x - x0) = y0 * (1 + s*e^(X0-Y0)*(e^(X-X0) - 1))
    z = s * math.exp(anchor.X - anchor.Y) * math.expm1(X - anchor.X)
    return anchor.Y + math.log1p(z)


def _line_x_log(anchor: LogPoint, s: float, Y: float) -> float:
    """Log of x along the same line, at log-y Y (s must be nonzero)."""
    z = math.exp(anchor.Y - anchor.X) * math.expm1(Y - anchor.Y) / s
    return anchor.X + math.log1p(z)


# ---------------------------------------------------------------------------
# Segment / curve crossings


def _axis_search(anchor: LogPoint, s: float, q: int, p: int, log_h: float,
                 axis: str, d: int, max_span: float) -> tuple[float, float, float]:
    """Bracket the sign change of g = q*Y - p*X - log_h along one log axis
    of the x-space line through anchor with slope s.

    Returns (t_lo, t_hi, g(t_lo)); raises NoCrossing if the ray exits the
    positive quadrant or exceeds max_span first.
    """
    if axis == "X":
        t0 = anchor.X
        limit = None
        if s != 0.0:
            z = -math.exp(anchor.Y - anchor.X) / s  # expm1(X - X0) where y = 0
            if (d > 0 and s < 0.0) or (d < 0 and s > 0.0 and z > -1.0):
                limit = anchor.X + math.log1p(z)

        def g(t: float) -> float:
            return q * _line_y_log(anchor, s, t) - p * t - log_h
    else:
        t0 = anchor.Y
        z = -s * math.exp(anchor.X - anchor.Y)  # expm1(Y - Y0) where x = 0
        limit = None
        if (d > 0 and s < 0.0) or (d < 0 and s > 0.0 and z > -1.0):
            limit = anchor.Y + math.log1p(z)

        def g(t: float) -> float:
            return q * t - p * _line_x_log(anchor, s, t) - log_h

    lo, glo = t0, g(t0)
    if glo == 0.0:
        # Start lies exactly on the curve: the degenerate root at the start
        # never counts, so step past it before bracketing.
        bump = 1e-9 * (1.0 + abs(t0))
        for _ in range(8):
            lo = t0 + d * bump
            glo = g(lo)
            if glo != 0.0:
                break
            bump *= 4.0
        else:
            raise NoCrossing("ray lies on the curve")
    step = 0.25
    for _ in range(200):
        if limit is not None:
            if abs(limit - lo) <= 1e-14 * (1.0 + abs(limit)):
                raise NoCrossing("ray exits the positive quadrant before the curve")
            t = lo + d * min(step, 0.5 * abs(limit - lo))
        else:
            t = lo + d * step
        if abs(t - t0) > max_span:
            raise NoCrossing(f"no crossing within {max_span} log units")
        gt = g(t)
        if gt == 0.0 or (glo > 0.0) != (gt > 0.0):
            return lo, t, glo
        lo, glo = t, gt
        step *= 2.0
    raise NoCrossing("no sign change found while bracketing")


def _axis_bisect(anchor: LogPoint, s: float, q: int, p: int, log_h: float,
                 axis: str, lo: float, hi: float, glo: float) -> float:
    if axis == "X":
        def g(t: float) -> float:
            return q * _line_y_log(anchor, s, t) - p * t - log_h
    else:
        def g(t: float) -> float:
            return q * t - p * _line_x_log(anchor, s, t) - log_h
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0.0:
            return mid
        if (gm > 0.0) == (glo > 0.0):
            lo, glo = mid, gm
        else:
            hi = mid
        if abs(hi - lo) <= 1e-14 * (1.0 + abs(mid)):
            break
    return 0.5 * (lo + hi)


def _curve_cross_on_line(anchor: LogPoint, s: float, gen: LineGenerator,
                         log_h: float, dx: int, max_span: float = 300.0) -> LogPoint:
    """Crossing of the x-space line through anchor (slope s) with the curve
    q*Y - p*X = log_h, searching in x direction dx.

    The search runs parametrized by log x and falls back to log y (the ray
    is monotone in both), because near the quadrant corners one of the two
    parametrizations degenerates; the final answer is polished on whichever
    axis leaves the smaller residual.
    """
    p, q = gen.p, gen.q
    axes = [("X", dx)]
    if s != 0.0:
        axes.append(("Y", dx * _sign(s)))
    err: Exception | None = None
    best: LogPoint | None = None
    best_res = math.inf
    for axis, d in axes:
        try:
            lo, hi, glo = _axis_search(anchor, s, q, p, log_h, axis, d, max_span)
        except NoCrossing as exc:
            err = exc
            continue
        t = _axis_bisect(anchor, s, q, p, log_h, axis, lo, hi, glo)
        if axis == "X":
            pt = LogPoint(t, _line_y_log(anchor, s, t))
        else:
            pt = LogPoint(_line_x_log(anchor, s, t), t)
        res = abs(q * pt.Y - p * pt.X - log_h)
        if res < best_res:
            best, best_res = pt, res
        if res <= 1e-11 * (1.0 + abs(log_h)):
            return pt
    if best is not None:
        return best
    raise err if err is not None else NoCrossing("no crossing found")


def segment_curve_intersection(start, slope: float, generator: LineGenerator,
                               h: float, direction: int | None = None,
                               max_span: float = 300.0) -> PosPoint:
    """First crossing of the ray from start (x-space slope) with y^q = h x^p.

    With direction None both orientations are tried (+x first); the starting
    point itself never counts as a crossing.  Raises NoCrossing if no sign
    change occurs before the ray leaves the positive quadrant or exceeds
    max_span log units.
    """
    anchor = as_log(start)
    log_h = math.log(h)
    dirs = (direction,) if direction in (1, -1) else (1, -1)
    last = None
    for dx in dirs:
        try:
            pt = _curve_cross_on_line(anchor, float(slope), generator, log_h, dx,
                                      max_span=max_span)
        except NoCrossing as exc:
            last = exc
            continue
        if abs(pt.X - anchor.X) + abs(pt.Y - anchor.Y) > 1e-11:
            return pt.exp()
        last = NoCrossing("only the degenerate crossing at the start point")
    raise last if last is not None else NoCrossing("no crossing found")


def _crossing_segment(cur: LogPoint, region: UncertaintyRegion,
                      arm_sign: int) -> Segment:
    """Segment from cur across the strip, ending on its far boundary curve."""
    g = region.gen
    sigma0 = strip_coordinate(cur, region)
    if abs(sigma0) < region.delta_i - STRIP_TOL:
        raise ConstructionFailed(
            "crossing", f"start point lies inside strip {region.index}"
        )
    target = -_sign(sigma0)
    log_h = target * region.delta_i
    slope = g.attracting_slope()
    if slope is None:
        # Horizontal generator: vertical segment, q*Y = log_h directly.
        end = LogPoint(cur.X, (g.p * cur.X + log_h) / g.q)
        return Segment(cur, end, None, region.index, arm_sign, target)
    if g.q == 0:
        # Vertical generator: horizontal segment, -p*X = log_h.
        end = LogPoint(-log_h / g.p, cur.Y)
        return Segment(cur, end, slope, region.index, arm_sign, target)
    dx = _sign(sigma0) * _sign(g.p)
    end = _curve_cross_on_line(cur, float(slope), g, log_h, dx)
    return Segment(cur, end, slope, region.index, arm_sign, target)


# ---------------------------------------------------------------------------
# Steps 3-4: polygonal lines


def build_polyline(start: LogPoint, phi: float, ccw: bool, stop_index: int,
                   fan: Fan, delta: float) -> list[Segment]:
    """Cross strips one arm at a time until the stop generator is crossed.

    The traversal follows the angular order of the 2b arm rays, counter-
    clockwise or clockwise from the start point's position angle.
    """
    arms = _arm_table(fan)
    n = len(arms)
    regions = fan.regions(delta)
    phi = _wrap(phi)
    if ccw:
        k = next((i for i, a in enumerate(arms) if a[0] > phi + 1e-12), 0)
    else:
        k = n - 1
        for i in range(n - 1, -1, -1):
            if arms[i][0] < phi - 1e-12:
                k = i
                break
    segments: list[Segment] = []
    cur = start
    for _ in range(n + 1):
        angle, gi, arm_sign = arms[k]
        seg = _crossing_segment(cur, regions[gi], arm_sign)
        segments.append(seg)
        cur = seg.end
        if gi == stop_index:
            return segments
        k = (k + 1) % n if ccw else (k - 1) % n
    raise ConstructionFailed("traversal", f"stop region {stop_index} never reached")


# ---------------------------------------------------------------------------
# Step 5: closures


def connect_arcs(term_a: LogPoint, ia: int, sa: int,
                 term_b: LogPoint, ib: int, sb: int,
                 fan: Fan, delta: float, points) -> tuple[list[Arc], IntersectionPoint]:
    """Connect two polyline terminals along their outer boundary curves.

    The arcs meet at the closed-form intersection of the two curves; if that
    point does not lie between the terminals along both curves, delta is too
    small for this fan.
    """
    ip = _lookup_point(points, ia, sa, ib, sb)
    meet = ip.log
    for term, gi in ((term_a, ia), (term_b, ib)):
        g = fan.generators[gi]
        ta = along_coordinate(term, g)
        tp = along_coordinate(meet, g)
        if _sign(ta) != _sign(tp) or abs(tp) > abs(ta) + 1e-9:
            raise ArcsDontMeet(
                f"curve intersection not between terminals on strip {gi}"
            )
    regions = fan.regions(delta)
    return (
        [Arc(ia, sa, term_a, meet), Arc(ib, sb, meet, term_b)],
        ip,
    )


def _extend_segment(seg: Segment, fan: Fan, coord: str, value: float) -> Segment:
    """Continue a crossing segment's x-space line until X (or Y) hits value."""
    s = float(seg.slope) if seg.slope is not None else None
    if coord == "X":
        if s is None:
            raise ConstructionFailed("closure", "cannot extend a vertical segment in X")
        end = LogPoint(value, _line_y_log(seg.start, s, value))
    else:
        if s is None:
            end = LogPoint(seg.start.X, value)
        elif s == 0.0:
            raise ConstructionFailed("closure", "cannot extend a horizontal segment in Y")
        else:
            end = LogPoint(_line_x_log(seg.start, s, value), value)
    return Segment(seg.end, end, seg.slope, seg.region_index, seg.arm_sign,
                   seg.end_sign, crossing=False)


def _close_side(term_a: LogPoint, ia: int, sa: int, seg_a: Segment,
                term_b: LogPoint, ib: int, sb: int, seg_b: Segment,
                fan: Fan, delta: float, points):
    """Close one side of the loop: two arcs, or an axis-parallel join when
    the closed-form meeting point falls inside an axis strip."""
    ip = _lookup_point(points, ia, sa, ib, sb)
    meet = ip.log
    regions = fan.regions(delta)
    axis_hits = [
        r for r in regions
        if r.gen.is_axis and abs(strip_coordinate(meet, r)) < r.delta_i - STRIP_TOL
    ]
    if not axis_hits:
        arcs, ip = connect_arcs(term_a, ia, sa, term_b, ib, sb, fan, delta, points)
        return list(arcs), ip, None
    if len(axis_hits) > 1:
        raise UnsupportedFan("closure point inside two axis strips")
    axisr = axis_hits[0]
    horizontal = axisr.gen.is_horizontal
    arm = _sign(along_coordinate(meet, axisr.gen))
    pieces: list = []
    if horizontal:
        ca, cb = term_a.X, term_b.X
    else:
        ca, cb = term_a.Y, term_b.Y
    extreme = min(ca, cb) if arm < 0 else max(ca, cb)
    coord = "X" if horizontal else "Y"
    if (arm < 0 and ca > extreme + 1e-12) or (arm > 0 and ca < extreme - 1e-12):
        ext = _extend_segment(seg_a, fan, coord, extreme)
        join_start = ext.end
        pieces.append(ext)
        join_end = term_b
        tail = None
    elif (arm < 0 and cb > extreme + 1e-12) or (arm > 0 and cb < extreme - 1e-12):
        ext = _extend_segment(seg_b, fan, coord, extreme)
        join_start = term_a
        join_end = ext.end
        tail = ext.reversed()
    else:
        join_start, join_end, tail = term_a, term_b, None
    # The join must span the axis strip completely.
    for endpoint in (join_start, join_end):
        if abs(strip_coordinate(endpoint, axisr)) < axisr.delta_i - 1e-9:
            raise ConstructionFailed(
                "closure", "axis-parallel join does not span the axis strip"
            )
    join = Segment(join_start, join_end, None if horizontal else Fraction(0),
                   axisr.index, arm, 0, crossing=False)
    pieces.append(join)
    if tail is not None:
        pieces.append(tail)
    return pieces, None, axisr.index


# ---------------------------------------------------------------------------
# The assembled boundary


@dataclass
class RegionBoundary:
    """Closed boundary loop with labeled anchors and construction records."""

    fan: Fan
    delta: float
    mode: str
    pieces: tuple
    anchors: dict
    polylines: dict
    classes: SlopeClasses
    points_uc: tuple
    start_max: IntersectionPoint
    start_min: IntersectionPoint
    axis_joins: tuple = ()
    report: dict | None = None

    @property
    def segments(self) -> list[Segment]:
        return [p for p in self.pieces if p.kind == "segment"]

    @property
    def arcs(self) -> list[Arc]:
        return [p for p in self.pieces if p.kind == "arc"]

    def crossing_segment(self, gen_index: int, arm_sign: int) -> Segment | None:
        for name in ("I1", "I2", "I3", "I4"):
            for seg in self.polylines[name]:
                if seg.crossing and seg.region_index == gen_index and seg.arm_sign == arm_sign:
                    return seg
        # Axis-parallel closure joins also cross their strip.
        for piece in self.pieces:
            if piece.kind == "segment" and piece.region_index == gen_index \
                    and piece.arm_sign == arm_sign:
                return piece
        return None

    def chords(self) -> dict[str, tuple[LogPoint, LogPoint]]:
        """The four chords l1..l4 from the start points to the terminals."""
        nm = self.start_max.log
        nm_low = self.start_min.log
        return {
            "l1": (nm, self.anchors["Aq"]),
            "l2": (nm_low, self.anchors["Cr"]),
            "l3": (nm_low, self.anchors["Ds"]),
            "l4": (nm, self.anchors["Bu"]),
        }

    def contains(self, point) -> str:
        return region_contains(self, point)


def construct_region(fan: Fan, delta: float, validate: bool = True,
                     validation_samples: int = 512) -> RegionBoundary:
    """Run the full construction, optionally followed by the single-delta
    validation battery (failures raise DeltaTooSmall naming the check)."""
    classes = compute_slope_classes(fan)
    if fan.b < 2:
        raise UnsupportedFan("construction needs at least two generators")
    points = intersection_points(fan, delta)
    start_max, start_min = choose_start_points(points, classes.mode)
    if start_max is start_min:
        raise UnsupportedFan("start points coincide; degenerate fan")

    phi_max = _wrap(math.atan2(start_max.cy, start_max.cx))
    phi_min = _wrap(math.atan2(start_min.cy, start_min.cx))
    try:
        i1_segs = build_polyline(start_max.log, phi_max, True, classes.i1, fan, delta)
        i4_segs = build_polyline(start_max.log, phi_max, False, classes.i4, fan, delta)
        i2_segs = build_polyline(start_min.log, phi_min, False, classes.i2, fan, delta)
        i3_segs = build_polyline(start_min.log, phi_min, True, classes.i3, fan, delta)

        side1, p12, join1 = _close_side(
            i1_segs[-1].end, classes.i1, i1_segs[-1].end_sign, i1_segs[-1],
            i2_segs[-1].end, classes.i2, i2_segs[-1].end_sign, i2_segs[-1],
            fan, delta, points,
        )
        side2, p34, join2 = _close_side(
            i3_segs[-1].end, classes.i3, i3_segs[-1].end_sign, i3_segs[-1],
            i4_segs[-1].end, classes.i4, i4_segs[-1].end_sign, i4_segs[-1],
            fan, delta, points,
        )
    except (ConstructionFailed, ArcsDontMeet, NoCrossing) as exc:
        raise DeltaTooSmall(type(exc).__name__, str(exc)) from exc

    pieces: list = []
    pieces.extend(i1_segs)
    pieces.extend(side1)
    pieces.extend(seg.reversed() for seg in reversed(i2_segs))
    pieces.extend(i3_segs)
    pieces.extend(side2)
    pieces.extend(seg.reversed() for seg in reversed(i4_segs))

    anchors = {
        "NM": start_max.log,
        "nm": start_min.log,
        "Aq": i1_segs[-1].end,
        "Bu": i4_segs[-1].end,
        "Cr": i2_segs[-1].end,
        "Ds": i3_segs[-1].end,
    }
    if p12 is not None:
        anchors["P_i1i2"] = p12.log
    if p34 is not None:
        anchors["P_i3i4"] = p34.log
    for name, segs in (("A", i1_segs), ("B", i4_segs), ("C", i2_segs), ("D", i3_segs)):
        for k, seg in enumerate(segs, start=1):
            anchors[f"{name}{k}"] = seg.end

    boundary = RegionBoundary(
        fan=fan,
        delta=delta,
        mode=classes.mode,
        pieces=tuple(pieces),
        anchors=anchors,
        polylines={"I1": i1_segs, "I2": i2_segs, "I3": i3_segs, "I4": i4_segs},
        classes=classes,
        points_uc=points,
        start_max=start_max,
        start_min=start_min,
        axis_joins=tuple(j for j in (join1, join2) if j is not None),
    )
    if validate:
        report = validate_region(boundary, samples=validation_samples)
        boundary.report = report
        bad = [name for name, res in report.items() if not res["passed"]]
        if bad:
            raise DeltaTooSmall(bad[0], str(report[bad[0]].get("detail", "")))
    return boundary


# ---------------------------------------------------------------------------
# Containment and sampling


def _segment_band_distance(seg: Segment, pt: LogPoint) -> float:
    """Approximate log-space distance from a point to a segment piece."""
    if seg.slope is None:
        lo, hi = sorted((seg.start.Y, seg.end.Y))
        d = abs(pt.X - seg.start.X)
        if pt.Y < lo:
            return math.hypot(d, lo - pt.Y)
        if pt.Y > hi:
            return math.hypot(d, pt.Y - hi)
        return d
    s = float(seg.slope)
    # Clamp to the parameter range on the dominant axis.
    if abs(seg.end.X - seg.start.X) >= abs(seg.end.Y - seg.start.Y):
        lo, hi = sorted((seg.start.X, seg.end.X))
        if not (lo - 1e-12 <= pt.X <= hi + 1e-12):
            return min(math.hypot(pt.X - a.X, pt.Y - a.Y) for a in (seg.start, seg.end))
    else:
        lo, hi = sorted((seg.start.Y, seg.end.Y))
        if not (lo - 1e-12 <= pt.Y <= hi + 1e-12):
            return min(math.hypot(pt.X - a.X, pt.Y - a.Y) for a in (seg.start, seg.end))
    # Residual of the x-space line equation, normalized by its log gradient.
    a = seg.start
    r = s * math.exp(a.X) * math.expm1(pt.X - a.X) - math.exp(a.Y) * math.expm1(pt.Y - a.Y)
    grad = math.hypot(s * math.exp(pt.X), math.exp(pt.Y))
    return abs(r) / grad if grad > 0.0 else 0.0


def _arc_band_distance(arc: Arc, fan: Fan, pt: LogPoint) -> float:
    """Exact log-space distance to an arc piece (a log-space segment)."""
    ax, ay = arc.start.X, arc.start.Y
    bx, by = arc.end.X, arc.end.Y
    dx, dy = bx - ax, by - ay
    l2 = dx * dx + dy * dy
    if l2 == 0.0:
        return math.hypot(pt.X - ax, pt.Y - ay)
    t = ((pt.X - ax) * dx + (pt.Y - ay) * dy) / l2
    t = min(1.0, max(0.0, t))
    return math.hypot(pt.X - (ax + t * dx), pt.Y - (ay + t * dy))


def _piece_band_distance(piece, fan: Fan, pt: LogPoint) -> float:
    if piece.kind == "segment":
        return _segment_band_distance(piece, pt)
    return _arc_band_distance(piece, fan, pt)


def _segment_ray_hit(seg: Segment, pt: LogPoint) -> bool:
    """Does the horizontal +X ray from pt cross this segment piece?

    Half-open convention: the lower Y endpoint is inclusive.
    """
    y0, y1 = seg.start.Y, seg.end.Y
    lo, hi = (y0, y1) if y0 <= y1 else (y1, y0)
    if not (lo <= pt.Y < hi):
        return False
    if seg.slope is None:
        return seg.start.X > pt.X
    s = float(seg.slope)
    if s == 0.0:
        return False
    a = seg.start
    z = math.exp(a.Y - a.X) * math.expm1(pt.Y - a.Y) / s
    if z <= -1.0:
        return False
    return a.X + math.log1p(z) > pt.X


def _arc_ray_hit(arc: Arc, fan: Fan, pt: LogPoint) -> bool:
    g = fan.generators[arc.gen_index]
    y0, y1 = arc.start.Y, arc.end.Y
    lo, hi = (y0, y1) if y0 <= y1 else (y1, y0)
    if g.p == 0:
        return False  # horizontal log-line, parallel to the ray
    if not (lo <= pt.Y < hi):
        return False
    c = g.q * arc.start.Y - g.p * arc.start.X
    x_at = (g.q * pt.Y - c) / g.p
    return x_at > pt.X


def region_contains(boundary: RegionBoundary, point,
                    band: float = 1e-9) -> str:
    """Classify a point as 'inside', 'boundary' or 'outside'.

    Boundary means within the given log-space band of some piece; otherwise
    ray casting along +X in log space decides.
    """
    pt = as_log(point)
    for piece in boundary.pieces:
        if _piece_band_distance(piece, boundary.fan, pt) <= band:
            return "boundary"
    crossings = 0
    for piece in boundary.pieces:
        if piece.kind == "segment":
            if _segment_ray_hit(piece, pt):
                crossings += 1
        else:
            if _arc_ray_hit(piece, boundary.fan, pt):
                crossings += 1
    return "inside" if crossings % 2 == 1 else "outside"


def sample_boundary(boundary: RegionBoundary, total: int,
                    min_per_piece: int = 4) -> list[tuple[LogPoint, object]]:
    """Deterministic interior samples of every piece, count ~ log length."""
    lengths = [max(p.log_length(), 1e-12) for p in boundary.pieces]
    whole = sum(lengths)
    out = []
    for piece, ln in zip(boundary.pieces, lengths):
        n = max(min_per_piece, int(round(total * ln / whole)))
        for k in range(n):
            u = (k + 0.5) / n
            out.append((piece.point_at(u), piece))
    return out


# ---------------------------------------------------------------------------
# Convex hull and the level function


def _monotone_chain(pts: list[tuple[float, float]]) -> list[tuple[float, float]]:
    pts = sorted(set(pts))
    if len(pts) <= 2:
        return pts

    def half(seq):
        chain = []
        for p in seq:
            while len(chain) >= 2:
                o, a = chain[-2], chain[-1]
                if (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0]) <= 0.0:
                    chain.pop()
                else:
                    break
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(reversed(pts))
    return lower[:-1] + upper[:-1]


def conv_hull(boundary: RegionBoundary, arc_samples: int = 256) -> list[tuple[float, float]]:
    """Convex hull of the boundary in x-space (CCW vertex list).

    Segments are straight in x-space so only their endpoints matter; arcs
    bulge toward the region but are sampled anyway for good measure.
    """
    pts = []
    for piece in boundary.pieces:
        for anchor in (piece.start, piece.end):
            pts.append((math.exp(anchor.X), math.exp(anchor.Y)))
        if piece.kind == "arc":
            for k in range(1, arc_samples):
                lp = piece.point_at(k / arc_samples)
                pts.append((math.exp(lp.X), math.exp(lp.Y)))
    return _monotone_chain(pts)


def hull_contains(hull: list[tuple[float, float]], point,
                  rel_tol: float = 1e-9) -> bool:
    """Point-in-convex-polygon with a relative tolerance on each edge."""
    pt = as_log(point)
    px, py = math.exp(pt.X), math.exp(pt.Y)
    m = len(hull)
    if m == 0:
        return False
    if m == 1:
        return math.isclose(px, hull[0][0], rel_tol=1e-9) and math.isclose(py, hull[0][1], rel_tol=1e-9)
    for k in range(m):
        ax, ay = hull[k]
        bx, by = hull[(k + 1) % m]
        ex, ey = bx - ax, by - ay
        dx, dy = px - ax, py - ay
        cross = ex * dy - ey * dx
        scale = math.hypot(ex, ey) * (math.hypot(dx, dy) + 1e-300)
        if cross < -rel_tol * scale:
            return False
    return True


class _HullCache:
    """Memoized hulls per (fan, delta), shared by level-set bisections."""

    def __init__(self):
        self._store: dict = {}

    def get(self, fan: Fan, delta: float):
        key = (fan, delta)
        if key not in self._store:
            boundary = construct_region(fan, delta, validate=False)
            self._store[key] = conv_hull(boundary)
        return self._store[key]


_shared_hulls = _HullCache()


def phi_level(point, fan: Fan, delta_lo: float, delta_hi: float,
              tol: float = 1e-9, cache: _HullCache | None = None) -> float:
    """The delta in [delta_lo, delta_hi] whose convex boundary carries the point.

    Monotone bisection on hull membership; OutOfBand if the point is outside
    the outer hull or strictly interior to the inner one.
    """
    cache = cache or _shared_hulls
    pt = as_log(point)
    if not hull_contains(cache.get(fan, delta_hi), pt):
        raise OutOfBand(f"point outside conv(P({delta_hi}))")
    if hull_contains(cache.get(fan, delta_lo), pt, rel_tol=-1e-9):
        raise OutOfBand(f"point strictly inside conv(P({delta_lo}))")
    lo, hi = delta_lo, delta_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if hull_contains(cache.get(fan, mid), pt):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Single-delta validation battery


def _loop_checks(boundary: RegionBoundary) -> tuple[dict, dict]:
    pieces = boundary.pieces
    worst = 0.0
    for k, piece in enumerate(pieces):
        nxt = pieces[(k + 1) % len(pieces)]
        gap = max(abs(piece.end.X - nxt.start.X), abs(piece.end.Y - nxt.start.Y))
        worst = max(worst, gap)
    closed = {"passed": worst <= 1e-9, "worst": worst, "detail": "max endpoint gap"}

    # Approximate simplicity test on dense polylines with bbox prefiltering.
    chains = []
    for piece in pieces:
        n = 32
        chains.append([piece.point_at(i / n) for i in range(n + 1)])
    bad = 0
    for a in range(len(pieces)):
        for b in range(a + 1, len(pieces)):
            adjacent = (b == a + 1) or (a == 0 and b == len(pieces) - 1)
            ca, cb = chains[a], chains[b]
            if _chains_cross(ca, cb, skip_endpoints=adjacent):
                bad += 1
    simple = {"passed": bad == 0, "worst": float(bad), "detail": "crossing piece pairs"}
    return closed, simple


def _chains_cross(ca, cb, skip_endpoints: bool) -> bool:
    min_ax = min(p.X for p in ca) - 1e-9
    max_ax = max(p.X for p in ca) + 1e-9
    min_ay = min(p.Y for p in ca) - 1e-9
    max_ay = max(p.Y for p in ca) + 1e-9
    if (max(p.X for p in cb) < min_ax or min(p.X for p in cb) > max_ax
            or max(p.Y for p in cb) < min_ay or min(p.Y for p in cb) > max_ay):
        return False
    # Strict-interior test: contact at shared anchors does not count.
    eps = 1e-9
    for i in range(len(ca) - 1):
        for j in range(len(cb) - 1):
            if _seg_intersect(ca[i], ca[i + 1], cb[j], cb[j + 1], eps):
                return True
    return False


def _seg_intersect(p1, p2, p3, p4, eps) -> bool:
    d1x, d1y = p2.X - p1.X, p2.Y - p1.Y
    d2x, d2y = p4.X - p3.X, p4.Y - p3.Y
    den = d1x * d2y - d1y * d2x
    if abs(den) < 1e-300:
        return False
    t = ((p3.X - p1.X) * d2y - (p3.Y - p1.Y) * d2x) / den
    u = ((p3.X - p1.X) * d1y - (p3.Y - p1.Y) * d1x) / den
    return eps < t < 1.0 - eps and eps < u < 1.0 - eps


def _slope_key(seg: Segment) -> Fraction:
    return seg.slope  # None never reaches the chain checks


def _chain_strictly_increasing(slopes: list[Fraction]) -> bool:
    return all(a < b for a, b in zip(slopes, slopes[1:]))


def _slope_chain_check(boundary: RegionBoundary) -> dict:
    """Slope monotonicity of the polyline chains (signs only in standard mode).

    Axis-strip crossings are axis-parallel and carry no finite slope; they
    are skipped when emitting slopes but still position the anchor B_p.
    """
    def slopes(segs) -> list[Fraction]:
        return [s.slope for s in segs if s.slope is not None]

    i1 = [s for s in boundary.polylines["I1"] if s.crossing]
    i2 = [s for s in boundary.polylines["I2"] if s.crossing]
    i3 = [s for s in boundary.polylines["I3"] if s.crossing]
    i4 = [s for s in boundary.polylines["I4"] if s.crossing]
    if not (i1 and i2 and i3 and i4):
        return {"passed": True, "worst": 0.0, "detail": "no comparable segments"}
    # B_p = the I4 anchor with the largest x coordinate.
    p_idx = max(range(len(i4)), key=lambda k: i4[k].end.X)
    chain1 = slopes(reversed(i4[: p_idx + 1])) + slopes(i1)
    chain2 = slopes(reversed(i2)) + slopes(i3)
    chain3 = slopes(reversed(i4[p_idx + 1:]))
    ok = (_chain_strictly_increasing(chain1)
          and _chain_strictly_increasing(chain2)
          and _chain_strictly_increasing(chain3))
    detail = ""
    if boundary.mode == "standard":
        if not all(s < 0 for s in chain2):
            ok, detail = False, "chain 2 has a nonnegative slope"
        if not all(s > 0 for s in chain3):
            ok, detail = False, "chain 3 has a nonpositive slope"
    return {"passed": ok, "worst": 0.0 if ok else 1.0, "detail": detail or "strict order"}


def _nagumo_check(boundary: RegionBoundary, samples) -> dict:
    fan = boundary.fan
    worst = -math.inf
    witness = None
    for pt, piece in samples:
        if piece.kind == "segment":
            n = piece.normal(fan)
        else:
            n = piece.normal_at(fan, pt)
        rhs = rhs_bruteforce(pt, fan, boundary.delta)
        for ray in rhs.extreme_rays():
            v = ray[0] * n[0] + ray[1] * n[1]
            if v > worst:
                worst = v
                witness = (pt.X, pt.Y)
    if worst == -math.inf:
        worst = 0.0
    return {"passed": worst <= 1e-9, "worst": worst, "witness": witness,
            "detail": "max extreme-ray outward component"}


def _r_le_1_check(boundary: RegionBoundary, samples) -> dict:
    worst = 0
    witness = None
    for pt, _ in samples:
        r = r_count(pt, boundary.fan, boundary.delta)
        if r > worst:
            worst = r
            witness = (pt.X, pt.Y)
    return {"passed": worst <= 1, "worst": float(worst), "witness": witness,
            "detail": "max r(x) on boundary"}


def _suc_check(boundary: RegionBoundary) -> dict:
    bad = 0
    witness = None
    for ip in boundary.points_uc:
        if region_contains(boundary, ip.log, band=1e-7) == "outside":
            bad += 1
            witness = (ip.log.X, ip.log.Y)
    return {"passed": bad == 0, "worst": float(bad), "witness": witness,
            "detail": "S^uc points outside the region"}


def _xspace_slope(a: LogPoint, b: LogPoint) -> float:
    return (math.exp(b.Y) - math.exp(a.Y)) / (math.exp(b.X) - math.exp(a.X))


def _cone_containment_check(boundary: RegionBoundary) -> dict:
    """Lemma-style cone checks at the two start points (standard mode)."""
    ch = boundary.chords()
    nm = boundary.start_max
    issues = []
    s2 = _xspace_slope(*ch["l2"])
    s3 = _xspace_slope(*ch["l3"])
    if not (s2 < 0.0 and s3 < 0.0):
        issues.append(f"l2/l3 slopes not negative: {s2:.3g}, {s3:.3g}")
    tie = abs(nm.cx - nm.cy) <= _EXP_TOL
    if nm.cy >= nm.cx - _EXP_TOL:
        s4 = _xspace_slope(*ch["l4"])
        if not (s4 < 0.0 and boundary.anchors["Aq"].X < nm.log.X):
            issues.append("vertical-ray case: slope(l4) >= 0 or x_q >= N")
    if tie or nm.cx > nm.cy - _EXP_TOL:
        s1 = _xspace_slope(*ch["l1"])
        if not (s1 < 0.0 and boundary.anchors["Bu"].Y < nm.log.Y):
            issues.append("horizontal-ray case: slope(l1) >= 0 or y_u >= M")
    return {"passed": not issues, "worst": float(len(issues)),
            "detail": "; ".join(issues) or "cones contain the stated rays"}


def _chords_inside_check(boundary: RegionBoundary) -> dict:
    bad = []
    for name, (a, b) in boundary.chords().items():
        ax, ay = math.exp(a.X), math.exp(a.Y)
        bx, by = math.exp(b.X), math.exp(b.Y)
        for u in (0.25, 0.5, 0.75):
            px, py = ax + u * (bx - ax), ay + u * (by - ay)
            if region_contains(boundary, PosPoint(px, py), band=1e-7) == "outside":
                bad.append((name, u))
    return {"passed": not bad, "worst": float(len(bad)),
            "detail": f"chord points outside: {bad}" if bad else "chords inside"}


def _arc_monotonicity_check(boundary: RegionBoundary, n: int = 64) -> dict:
    """Tangent slopes along every arc must vary strictly monotonically."""
    fan = boundary.fan
    bad = []
    for arc in boundary.arcs:
        g = fan.generators[arc.gen_index]
        if g.q == 0:
            continue  # vertical tangents throughout
        slopes = []
        for k in range(n + 1):
            pt = arc.point_at(k / n)
            slopes.append((g.p / g.q) * math.exp(pt.Y - pt.X))
        inc = all(a < b for a, b in zip(slopes, slopes[1:]))
        dec = all(a > b for a, b in zip(slopes, slopes[1:]))
        if not (inc or dec):
            bad.append(arc.gen_index)
    return {"passed": not bad, "worst": float(len(bad)),
            "detail": f"non-monotone arcs: {bad}" if bad else "tangent slopes monotone"}


def validate_region(boundary: RegionBoundary, samples: int = 512) -> dict:
    """Single-delta validation battery; returns {check: result} dicts."""
    report = {}
    closed, simple = _loop_checks(boundary)
    report["closed_loop"] = closed
    report["simple_loop"] = simple
    report["suc_in_region"] = _suc_check(boundary)
    pts = sample_boundary(boundary, samples)
    report["r_le_1"] = _r_le_1_check(boundary, pts)
    report["slope_chains"] = _slope_chain_check(boundary)
    report["nagumo"] = _nagumo_check(boundary, pts)
    origin = region_contains(boundary, LogPoint(0.0, 0.0))
    report["origin_interior"] = {
        "passed": origin == "inside", "worst": 0.0 if origin == "inside" else 1.0,
        "detail": f"(1,1) classified {origin}",
    }
    if boundary.mode == "standard":
        report["cone_containment"] = _cone_containment_check(boundary)
    report["chords_inside"] = _chords_inside_check(boundary)
    report["arc_tangent_monotonicity"] = _arc_monotonicity_check(boundary)
    return report
