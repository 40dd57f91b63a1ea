"""Analytic motion discriminator.

The point-of-interest track is normalized (duplicates collapsed, bounding
box moved to the origin and divided by its diagonal, resampled by arc
length) and every clause of a :class:`MotionAST` is scored against it with a
small deterministic rubric. Path steps are matched to temporal segments by a
dynamic program; grounding-only steps are scored on the whole path.

All distances below are in normalized units, i.e. fractions of the
bounding-box diagonal, which makes verdicts invariant to scale and
translation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .config import DEFAULT, Config
from .dsl import (
    Avoid,
    Curve,
    Detour,
    DistanceTrend,
    Flip,
    FollowPath,
    MotionAST,
    MoveOver,
    Oscillate,
    Progressive,
    Repeat,
    Rotate,
    Step,
    Straight,
    Translate,
    WristRotation,
    format_clause,
    is_grounding,
    parse_description,
)
from .errors import DegeneratePathError, InvalidArgumentError, UnknownObjectError
from .generators import UNIT, classify_direction
from .trajectory import Episode, Region, SceneObject, Trajectory, arc_lengths, dedupe_consecutive, resample_points

_POLYGON_SIDES = {"triangular": 3, "square": 4}
_FLEXIBLE = (Oscillate, Rotate, Repeat, Flip, Detour, FollowPath, Curve)
_MODULATION_OK = (Oscillate, Repeat, Rotate, Flip)


@dataclass(frozen=True)
class Segment:
    start: int
    end: int
    direction: str
    magnitude: float
    net: tuple[float, float]
    arc: float


@dataclass(frozen=True)
class Winding:
    total_turning: float
    revolution_count: int
    direction: str | None


@dataclass(frozen=True)
class GroundingEvent:
    min_distance: float
    distance_slope: float
    slope_sign: int
    entered_region: bool
    passing_side: str
    chord_crossed: bool


@dataclass(frozen=True)
class ClauseScore:
    clause: object
    score: float
    evidence: str

    def to_json(self) -> dict:
        try:
            text = format_clause(self.clause)
        except InvalidArgumentError:
            text = repr(self.clause)
        return {"clause": text, "score": round(self.score, 6), "evidence": self.evidence}


@dataclass(frozen=True)
class Verdict:
    label: int
    score: float
    clause_scores: tuple[ClauseScore, ...]

    def to_json(self) -> dict:
        return {"label": self.label, "score": round(self.score, 6),
                "clauses": [c.to_json() for c in self.clause_scores]}


def clamp01(x: float) -> float:
    return float(min(1.0, max(0.0, x)))


def cross(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def canonical_label(label: str) -> str:
    text = " ".join(label.lower().split())
    if text.startswith("the "):
        text = text[4:]
    return " ".join(w[:-1] if len(w) > 3 and w.endswith("s") and not w.endswith("ss") else w for w in text.split())


# --- low-level signal helpers ----------------------------------------------


def count_legs(values: np.ndarray, eps: float) -> tuple[int, list[float]]:
    """Monotone runs whose extent is at least ``eps`` (hysteresis turning points)."""
    legs, extents = 0, []
    direction = 0
    anchor = ext = float(values[0]) if len(values) else 0.0
    for v in map(float, values):
        if direction == 0:
            if abs(v - anchor) >= eps:
                direction = 1 if v > anchor else -1
                legs, ext = 1, v
        elif direction * (v - ext) > 0:
            ext = v
        elif abs(v - ext) >= eps:
            extents.append(abs(ext - anchor))
            anchor, ext = ext, v
            direction = -direction
            legs += 1
    if direction != 0:
        extents.append(abs(ext - anchor))
    return legs, extents


def count_lobes(residual: np.ndarray, eps: float) -> tuple[int, list[float]]:
    """Sign runs of ``residual`` that reach beyond ``±eps``."""
    runs, peaks = 0, []
    state = 0
    for r in map(float, residual):
        sign = 1 if r > eps else -1 if r < -eps else 0
        if sign and sign != state:
            runs += 1
            peaks.append(abs(r))
            state = sign
        elif sign and sign == state:
            peaks[-1] = max(peaks[-1], abs(r))
    return runs, peaks


def smooth(values: np.ndarray, window: int) -> np.ndarray:
    if window <= 1 or len(values) < window:
        return values
    kernel = np.ones(window) / window
    padded = np.pad(values, (window // 2, window - 1 - window // 2), mode="edge")
    return np.convolve(padded, kernel, mode="valid")


def turning_angles(xy: np.ndarray, closed: bool) -> np.ndarray:
    d = np.diff(xy, axis=0)
    d = d[np.hypot(d[:, 0], d[:, 1]) > 0]
    if len(d) < 2:
        return np.zeros(0)
    if closed:
        d = np.vstack([d, d[:1]])
    a, b = d[:-1], d[1:]
    ang = np.arctan2(cross(a, b), np.einsum("ij,ij->i", a, b))
    ang[np.abs(ang) >= math.pi - 1e-9] = 0.0
    return ang


def winding_of(xy: np.ndarray, tol: float = 1e-9) -> Winding:
    scale = float(np.ptp(xy, axis=0).max()) if len(xy) else 0.0
    closed = len(xy) > 2 and float(np.hypot(*(xy[-1] - xy[0]))) <= tol * max(scale, 1e-300)
    total = float(turning_angles(xy, closed).sum())
    revs = int(round(abs(total) / (2 * math.pi)))
    if abs(total) < 1e-9:
        return Winding(total, 0, None)
    return Winding(total, revs, "clockwise" if total > 0 else "counter-clockwise")


# --- normalized path view --------------------------------------------------


class PathView:
    """A normalized point sequence plus the context needed to score clauses."""

    def __init__(self, points: np.ndarray, total_arc: float, regions: dict, cfg: Config,
                 forward: str, segments: list[Segment] | None = None, scale: float = 1.0):
        self.points = points
        self.total_arc = total_arc
        self.regions = regions
        self.cfg = cfg
        self.forward = forward
        self.scale = scale
        self._segments = segments

    @cached_property
    def arc(self) -> float:
        return float(arc_lengths(self.points)[-1])

    @cached_property
    def cum_arc(self) -> np.ndarray:
        return arc_lengths(self.points)

    @cached_property
    def chord(self) -> np.ndarray:
        return self.points[-1] - self.points[0]

    @cached_property
    def chord_len(self) -> float:
        return float(np.hypot(*self.chord))

    @cached_property
    def segments(self) -> list[Segment]:
        if self._segments is None:
            self._segments = segment_points(self.points, self.cfg)
        return self._segments

    @cached_property
    def winding(self) -> Winding:
        return winding_of(self.points)

    @cached_property
    def sweep(self) -> Winding:
        """Signed angle swept around the centroid; far less noise-sensitive than turning."""
        rel = self.points - self.points.mean(axis=0)
        rel = rel[np.hypot(rel[:, 0], rel[:, 1]) > 1e-12]
        if len(rel) < 2:
            return Winding(0.0, 0, None)
        a, b = rel[:-1], rel[1:]
        ang = np.arctan2(cross(a, b), np.einsum("ij,ij->i", a, b))
        ang[np.abs(ang) >= math.pi - 1e-9] = 0.0
        total = float(ang.sum())
        if abs(total) < 1e-9:
            return Winding(total, 0, None)
        return Winding(total, int(round(abs(total) / (2 * math.pi))), "clockwise" if total > 0 else "counter-clockwise")

    def unit(self, direction: str) -> np.ndarray:
        if direction == "forward":
            direction = self.forward
        return np.asarray(UNIT[direction])

    def axis_vector(self, axis: str) -> np.ndarray:
        if axis == "vertical":
            return np.array([0.0, 1.0])
        if axis == "horizontal":
            return np.array([1.0, 0.0])
        centered = self.points - self.points.mean(axis=0)
        if axis == "diagonal":
            d1 = np.array([1.0, 1.0]) / math.sqrt(2)
            d2 = np.array([1.0, -1.0]) / math.sqrt(2)
            return d1 if np.var(centered @ d1) >= np.var(centered @ d2) else d2
        _, vecs = np.linalg.eigh(centered.T @ centered)
        return vecs[:, -1]

    def perpendicular_residual(self) -> np.ndarray:
        if self.chord_len == 0:
            return np.zeros(len(self.points))
        u = self.chord / self.chord_len
        r = cross(u, self.points - self.points[0])
        return smooth(r - r.mean(), self.cfg.smooth_window)

    def legs_along(self, vec: np.ndarray) -> tuple[int, list[float]]:
        return count_legs(smooth(self.points @ vec, self.cfg.smooth_window), self.cfg.eps_amp)

    def is_parallel(self, vec: np.ndarray) -> bool:
        if self.chord_len < 2 * self.cfg.eps_amp:
            return True
        c = abs(float(vec @ self.chord)) / (self.chord_len * float(np.hypot(*vec)))
        return c >= math.cos(math.radians(22.5))

    def modulation(self, axis: str | None = None) -> tuple[int, list[float], str]:
        """Full oscillation periods superimposed on the path's net motion."""
        vec = self.axis_vector(axis) if axis else None
        if axis == "back-and-forth" or (vec is not None and self.is_parallel(vec)):
            along = self.chord / self.chord_len if self.chord_len > 0 else vec
            legs, ext = self.legs_along(along)
            return legs // 2, ext, "parallel"
        lobes, peaks = count_lobes(self.perpendicular_residual(), self.cfg.eps_amp)
        return lobes // 2, peaks, "perpendicular"

    def unstated_cycles(self) -> int:
        perp, _ = count_lobes(self.perpendicular_residual(), self.cfg.eps_amp)
        if self.chord_len > 0:
            legs, _ = self.legs_along(self.chord / self.chord_len)
        else:
            legs = 0
        return max(perp // 2, legs // 2)

    def region(self, label: str) -> Region:
        key = canonical_label(label)
        if key not in self.regions:
            raise UnknownObjectError(f"object {label!r} is not in the scene")
        return self.regions[key]

    def event(self, label: str) -> GroundingEvent:
        return grounding_event(self.points, self.region(label), self.cfg, self.cum_arc)

    def sub(self, start: int, end: int, segments: list[Segment]) -> "PathView":
        shifted = [Segment(s.start - start, s.end - start, s.direction, s.magnitude, s.net, s.arc) for s in segments]
        return PathView(self.points[start:end + 1], self.total_arc, self.regions, self.cfg, self.forward,
                        shifted, self.scale)


def grounding_event(points: np.ndarray, region: Region, cfg: Config, cum_arc=None) -> GroundingEvent:
    dist = region.distance(points)
    entered = bool(region.contains(points).any())
    s = arc_lengths(points) if cum_arc is None else cum_arc
    if len(points) > 1 and float(np.ptp(s)) > 0:
        slope = float(np.polyfit(s, dist, 1)[0])
    else:
        slope = 0.0
    sign = 0 if abs(slope) < cfg.eps_slope else (1 if slope > 0 else -1)
    chord = points[-1] - points[0]
    closest = points[int(np.argmin(dist))]
    side_val = float(cross(chord, closest - region.centroid))
    side = "right" if side_val > 0 else "left" if side_val < 0 else "none"
    crossed = bool(np.hypot(*chord) > 0 and region.intersects_segment(points[0], points[-1]))
    return GroundingEvent(float(dist.min()), slope, sign, entered, side, crossed)


# --- preprocessing and segmentation ----------------------------------------


def _normalize(traj: Trajectory, scene, cfg: Config):
    raw = dedupe_consecutive(traj.poi_track.xy)
    if len(raw) < 2:
        raise DegeneratePathError("point-of-interest track has fewer than 2 distinct samples")
    lo = raw.min(axis=0)
    diag = float(np.hypot(*(raw.max(axis=0) - lo)))
    if diag <= 0:
        raise DegeneratePathError("point-of-interest track has zero extent")
    norm = (raw - lo) / diag
    regions = {}
    for obj in scene or ():
        regions[canonical_label(obj.label)] = obj.region.transformed(1.0 / diag, tuple(-lo / diag))
    return raw, norm, regions, diag


def segment_points(points: np.ndarray, cfg: Config) -> list[Segment]:
    """Split where the windowed heading turns by more than the threshold."""
    n = len(points)
    w = cfg.smooth_window
    d = np.diff(points, axis=0)
    cuts = []
    if n - 1 >= 2 * w:
        idx = np.arange(w, n - w)
        csum = np.vstack([np.zeros(2), np.cumsum(d, axis=0)])
        before = csum[idx] - csum[idx - w]
        after = csum[idx + w] - csum[idx]
        ang = np.degrees(np.abs(np.arctan2(cross(before, after), np.einsum("ij,ij->i", before, after))))
        hot = ang > cfg.turn_threshold_deg
        i = 0
        while i < len(idx):
            if not hot[i]:
                i += 1
                continue
            j = i
            while j + 1 < len(idx) and hot[j + 1]:
                j += 1
            if j - i + 1 >= cfg.turn_sustain:
                run = ang[i:j + 1]
                plateau = np.flatnonzero(run >= run.max() - 1e-9)
                cuts.append(int(idx[i + plateau[len(plateau) // 2]]))
            i = j + 1
    bounds = [0] + cuts + [n - 1]
    s = arc_lengths(points)
    total = s[-1]
    changed = True
    while changed and len(bounds) > 2:
        changed = False
        for k in range(len(bounds) - 1):
            if s[bounds[k + 1]] - s[bounds[k]] < cfg.min_segment_frac * total:
                del bounds[k if k > 0 else 1]
                changed = True
                break
    return [_make_segment(points, s, a, b) for a, b in zip(bounds[:-1], bounds[1:])]


def _make_segment(points, s, a, b) -> Segment:
    net = points[b] - points[a]
    mag = float(np.hypot(*net))
    direction = classify_direction(net) if mag > 0 else "none"
    return Segment(int(a), int(b), direction, mag, (float(net[0]), float(net[1])), float(s[b] - s[a]))


def _merge_oscillating(points: np.ndarray, segs: list[Segment]) -> list[Segment]:
    """Collapse runs of 3+ back-and-forth segments into one block."""
    if len(segs) < 3:
        return segs
    s = arc_lengths(points)

    def reverses(a: Segment, b: Segment) -> bool:
        na, nb = np.asarray(a.net), np.asarray(b.net)
        den = np.hypot(*na) * np.hypot(*nb)
        return den > 0 and float(na @ nb) / den < math.cos(math.radians(120))

    out, i = [], 0
    while i < len(segs):
        j = i
        while j + 1 < len(segs) and reverses(segs[j], segs[j + 1]):
            j += 1
        if j - i + 1 >= 3:
            out.append(_make_segment(points, s, segs[i].start, segs[j].end))
        else:
            out.extend(segs[i:j + 1])
        i = j + 1
    return out


def _forward(cfg: Config, heading: str | None) -> str:
    forward = heading or cfg.forward
    if forward not in UNIT:
        raise InvalidArgumentError(f"unknown heading {forward!r}")
    return forward


def build_view(traj: Trajectory, scene=(), cfg: Config = DEFAULT, heading: str | None = None) -> PathView:
    _, norm, regions, diag = _normalize(traj, scene, cfg)
    points = resample_points(norm, cfg.n_analysis)
    total = float(arc_lengths(points)[-1])
    return PathView(points, total, regions, cfg, _forward(cfg, heading), scale=diag)


# --- public feature operations ---------------------------------------------


def segment_primitives(traj: Trajectory, cfg: Config = DEFAULT) -> list[Segment]:
    view = build_view(traj, (), cfg)
    return _merge_oscillating(view.points, view.segments)


def count_oscillations(traj: Trajectory, axis: str | None = None, cfg: Config = DEFAULT) -> tuple[int, float]:
    """``(cycle_count, mean_amplitude)`` with the amplitude in trajectory units.

    Pure shaking along ``axis`` counts monotone legs; oscillation across the
    direction of travel counts full periods of the detrended residual.
    """
    view = build_view(traj, (), cfg)
    vec = view.axis_vector(axis) if axis else None
    if vec is not None and view.is_parallel(vec):
        legs, ext = view.legs_along(vec)
        amp = float(np.mean(ext)) * view.scale if ext else 0.0
        return legs, amp
    cycles, peaks, _ = view.modulation(None)
    amp = float(np.mean(peaks)) * view.scale if cycles else 0.0
    return cycles, amp


def winding(traj: Trajectory) -> Winding:
    """Total signed turning of the deduplicated raw samples.

    A closed path also counts the turn from its last heading back to its
    first, and exact reversals contribute nothing.
    """
    return winding_of(dedupe_consecutive(traj.poi_track.xy))


def grounding_events(traj: Trajectory, scene, cfg: Config = DEFAULT) -> dict[str, GroundingEvent]:
    view = build_view(traj, scene, cfg)
    return {obj.label: view.event(obj.label) for obj in scene}


class MotionFeatures:
    """Lazily computed feature bundle for one trajectory."""

    def __init__(self, view: PathView):
        self.view = view

    @classmethod
    def of(cls, traj: Trajectory, scene=(), cfg: Config = DEFAULT, heading: str | None = None) -> "MotionFeatures":
        return cls(build_view(traj, scene, cfg, heading))

    @cached_property
    def segments(self) -> list[Segment]:
        return _merge_oscillating(self.view.points, self.view.segments)

    @cached_property
    def oscillations(self) -> dict[str, tuple[int, float]]:
        out = {}
        for axis in ("horizontal", "vertical"):
            legs, ext = self.view.legs_along(self.view.axis_vector(axis))
            out[axis] = (legs, float(np.mean(ext)) if ext else 0.0)
        return out

    @cached_property
    def winding(self) -> Winding:
        return self.view.winding

    @cached_property
    def convexity(self) -> list[tuple[int, float]]:
        out = []
        for seg in self.view.segments:
            sub = self.view.sub(seg.start, seg.end, [seg])
            sign, conf = _bulge(sub)
            out.append((sign, conf))
        return out

    @cached_property
    def grounding_events(self) -> dict[str, GroundingEvent]:
        return {label: grounding_event(self.view.points, r, self.view.cfg) for label, r in self.view.regions.items()}


# --- clause rubrics --------------------------------------------------------


def _bulge(v: PathView) -> tuple[int, float]:
    """Sign (-1 left, +1 right) and confidence of the peak offset from the chord."""
    if v.chord_len == 0:
        return 0, 0.0
    u = v.chord / v.chord_len
    off = cross(u, v.points - v.points[0])
    peak = float(off[int(np.argmax(np.abs(off)))])
    conf = clamp01(abs(peak) / (v.cfg.curve_full_bulge * v.chord_len))
    return (-1 if peak < 0 else 1 if peak > 0 else 0), conf


def _direction_score(v: PathView, direction: str) -> tuple[float, str]:
    if v.chord_len <= 1e-9 * max(v.arc, 1.0):
        return 0.0, "no net displacement"
    cos = float(v.chord @ v.unit(direction)) / v.chord_len
    return clamp01(cos), f"net direction {classify_direction(v.chord)}, cos={cos:.3f}"


def _count_factor(found: int, wanted: int | None, decay: float, unstated_min: int = 2) -> float:
    if wanted is None:
        return 1.0 if found >= unstated_min else max(0.0, 1.0 - decay * (unstated_min - found))
    return max(0.0, 1.0 - decay * abs(found - wanted))


def _efficiency(v: PathView, step: Step) -> float:
    """Penalty for paths whose net displacement is small next to their length.

    Oscillation modifiers legitimately spend most of the arc sideways.
    """
    if v.arc == 0 or any(isinstance(m, Oscillate) for m in step.modifiers):
        return 1.0
    return clamp01(v.chord_len / v.arc / v.cfg.min_efficiency)


def _score_translate(v: PathView, c: Translate, step: Step) -> tuple[float, str]:
    score, ev = _direction_score(v, c.direction)
    eff = _efficiency(v, step)
    if eff < 1.0:
        score *= eff
        ev += f", displacement efficiency {eff * v.cfg.min_efficiency:.2f}"
    if c.short:
        frac = v.arc / v.total_arc if v.total_arc > 0 else 1.0
        lo = v.cfg.short_frac
        factor = 1.0 if frac <= lo else clamp01((2 * lo - frac) / lo)
        score *= factor
        ev += f", span fraction {frac:.2f}"
    return score, ev


def _score_curve(v: PathView, c: Curve, step: Step) -> tuple[float, str]:
    score, ev = _direction_score(v, c.direction)
    score *= _efficiency(v, step)
    sign, conf = _bulge(v)
    want = -1 if c.convexity == "convex" else 1
    if sign != want:
        return 0.0, ev + ", bulge on the wrong side"
    return score * conf, ev + f", bulge confidence {conf:.2f}"


def _roundness(v: PathView) -> float:
    r = np.hypot(*(v.points - v.points.mean(axis=0)).T)
    if r.mean() == 0:
        return 0.0
    return max(0.0, 1.0 - v.cfg.roundness_gain * float(r.std() / r.mean()))


def _score_rotate(v: PathView, c: Rotate, step: Step) -> tuple[float, str]:
    w = v.sweep
    if w.direction != c.turn:
        return 0.0, f"winding {w.direction or 'none'}, {w.total_turning:.2f} rad"
    decay = v.cfg.mismatch_decay
    if c.shape in _POLYGON_SIDES:
        k = len(v.segments)
        factor = max(0.0, 1.0 - decay * abs(k - _POLYGON_SIDES[c.shape] * c.count))
        return factor, f"{w.revolution_count} revolution(s), {k} side(s)"
    factor = max(0.0, 1.0 - decay * abs(w.revolution_count - c.count))
    progressive = any(isinstance(m, Progressive) and m.quantity == "radius" for m in step.modifiers)
    round_ = 1.0 if progressive else _roundness(v)
    return factor * round_, f"{w.revolution_count} revolution(s), roundness {round_:.2f}"


def _score_oscillate(v: PathView, c: Oscillate, step: Step) -> tuple[float, str]:
    decay = v.cfg.mismatch_decay
    if step.primary is c:
        vec = v.axis_vector(c.axis)
        legs, _ = v.legs_along(vec)
        centered = v.points - v.points.mean(axis=0)
        s_ax = float(np.std(centered @ vec))
        s_perp = float(np.std(cross(vec, centered)))
        dominance = clamp01((s_ax / (s_ax + s_perp) - 0.5) / 0.25) if s_ax + s_perp > 0 else 0.0
        count = _count_factor(legs, c.count, decay)
        if c.count is None and legs == 1:
            count = 0.5
        return count * dominance, f"{legs} leg(s) along {c.axis}, axis dominance {dominance:.2f}"
    cycles, _, mode = v.modulation(c.axis)
    return _count_factor(cycles, c.count, decay), f"{cycles} {mode} cycle(s)"


def _score_straight(v: PathView, c, step) -> tuple[float, str]:
    ratio = v.chord_len / v.arc if v.arc > 0 else 0.0
    lo, hi = v.cfg.straight_low, v.cfg.straight_high
    return clamp01((ratio - lo) / (hi - lo)), f"chord/arc {ratio:.3f}"


def _score_flip(v: PathView, c: Flip, step) -> tuple[float, str]:
    rel = v.points - v.points[0]
    reach = float(np.hypot(rel[:, 0], rel[:, 1]).max())
    if reach == 0:
        return 0.0, "no motion"
    excursion = float((rel @ v.unit(c.side)).max())
    score = clamp01(excursion / reach)
    if c.back:
        score *= clamp01(1.0 - float(np.hypot(*rel[-1])) / (0.5 * reach))
    return score, f"excursion {excursion:.2f} of reach {reach:.2f}"


def _score_progressive(v: PathView, c: Progressive, step) -> tuple[float, str]:
    sign = 1.0 if c.trend == "increasing" else -1.0
    if c.quantity == "radius":
        r = np.hypot(*(v.points - v.points.mean(axis=0)).T)
        slope = float(np.polyfit(v.cum_arc, r, 1)[0]) if v.arc > 0 else 0.0
        return clamp01(0.5 + sign * slope / (2 * v.cfg.eps_slope)), f"radius slope {slope:.4f}"
    strokes = _strokes(v, None)
    starts = [v.points[s.start][1] for s in strokes]
    if len(starts) < 2:
        return 0.0, "fewer than two strokes"
    # higher on screen means smaller y
    ups = [sign * (a - b) > 0 for a, b in zip(starts, starts[1:])]
    return float(np.mean(ups)), f"{sum(ups)}/{len(ups)} stroke starts move as stated"


def _strokes(v: PathView, direction: str | None) -> list[Segment]:
    segs = [s for s in v.segments if s.magnitude > 0]
    if not segs:
        return []
    if direction is None:
        ref = np.asarray(max(segs, key=lambda s: s.arc).net)
    else:
        ref = v.unit(direction)
    ref = ref / np.hypot(*ref)
    return [s for s in segs if float(np.asarray(s.net) @ ref) / s.magnitude >= -0.5]


def _score_repeat(v: PathView, c: Repeat, step) -> tuple[float, str]:
    segs = v.segments
    if c.strokes:
        segs = _strokes(v, c.body[0].direction if isinstance(c.body[0], Translate) else None)
    expanded = [Step(b) for b in c.body] * c.count
    if not segs:
        return 0.0, "no segments"
    matcher = _Matcher(v, segs, expanded)
    total, _ = matcher.solve()
    return total / len(expanded), f"{len(expanded)} repeated primitive(s) over {len(segs)} segment(s)"


def _score_wrist(v, c, step) -> tuple[float, str]:
    return 1.0, "wrist rotations are not observable in 2D; neutral"


def _score_move_over(v: PathView, c: MoveOver, step) -> tuple[float, str]:
    e = v.event(c.obj)
    if e.entered_region:
        return 1.0, f"enters {c.obj}"
    return clamp01(1.0 - e.min_distance / v.cfg.ground_margin), f"closest approach {e.min_distance:.3f}"


def _score_avoid(v: PathView, c: Avoid, step) -> tuple[float, str]:
    e = v.event(c.obj)
    return (0.0, f"enters {c.obj}") if e.entered_region else (1.0, f"stays outside {c.obj}")


def _score_detour(v: PathView, c: Detour, step) -> tuple[float, str]:
    if c.obj is None:
        if v.chord_len == 0:
            return 0.0, "no chord"
        off = cross(v.chord / v.chord_len, v.points - v.points[0])
        side = float(off.max()) if c.side == "right" else float(-off.min())
        return clamp01(side / 0.05), f"deviation {side:.3f} to the {c.side}"
    e = v.event(c.obj)
    ok = (not e.entered_region) and e.passing_side == c.side and e.chord_crossed
    ev = f"entered={e.entered_region}, side={e.passing_side}, chord blocked={e.chord_crossed}"
    return (1.0 if ok else 0.0), ev


def _score_distance(v: PathView, c: DistanceTrend, step) -> tuple[float, str]:
    e = v.event(c.obj)
    sign = 1.0 if c.trend == "farther" else -1.0
    return clamp01(0.5 + sign * e.distance_slope / (2 * v.cfg.eps_slope)), f"distance slope {e.distance_slope:.4f}"


def _score_follow(v: PathView, c: FollowPath, step) -> tuple[float, str]:
    d = v.region(c.obj).distance(v.points)
    frac = float(np.mean(d <= v.cfg.ground_margin))
    return clamp01(frac / 0.8), f"{frac:.2f} of samples on {c.obj}"


_RUBRICS = {
    Translate: _score_translate,
    Curve: _score_curve,
    Rotate: _score_rotate,
    Oscillate: _score_oscillate,
    Repeat: _score_repeat,
    Straight: _score_straight,
    Flip: _score_flip,
    Progressive: _score_progressive,
    WristRotation: _score_wrist,
    MoveOver: _score_move_over,
    Avoid: _score_avoid,
    Detour: _score_detour,
    DistanceTrend: _score_distance,
    FollowPath: _score_follow,
}


def _clause(v: PathView, clause, step: Step) -> tuple[float, str]:
    score, ev = _RUBRICS[type(clause)](v, clause, step)
    if isinstance(clause, (Translate, Curve)) and not any(isinstance(c, _MODULATION_OK) for c in step.clauses()):
        cycles = v.unstated_cycles()
        if cycles >= 2:
            return 0.0, ev + f", but {cycles} unstated oscillation cycle(s)"
    return score, ev


def check_clause(features: MotionFeatures, clause, step: Step | None = None) -> float:
    """Score one clause against a whole trajectory."""
    step = step or Step(clause)
    return _clause(features.view, clause, step)[0]


# --- step matching ---------------------------------------------------------


def _step_is_grounding(step: Step) -> bool:
    return all(is_grounding(c) for c in step.clauses())


def _geometric_mean(scores) -> float:
    scores = list(scores)
    if any(s <= 0 for s in scores):
        return 0.0
    return float(math.exp(sum(math.log(s) for s in scores) / len(scores)))


def score_step(view: PathView, step: Step, n_segments: int = 1) -> tuple[float, list[ClauseScore]]:
    results = []
    for c in step.clauses():
        s, ev = _clause(view, c, step)
        results.append(ClauseScore(c, s, ev))
    score = _geometric_mean(r.score for r in results)
    if n_segments > 1 and not any(isinstance(c, _FLEXIBLE) for c in step.clauses()):
        score *= view.cfg.surplus_penalty ** (n_segments - 1)
    return score, results


class _Matcher:
    """Assign each step a contiguous, possibly empty, run of segments."""

    def __init__(self, view: PathView, segments: list[Segment], steps: list[Step]):
        self.view, self.segs, self.steps = view, segments, steps
        self.cache: dict = {}

    def span(self, j: int, a: int, b: int):
        key = (j, a, b)
        if key not in self.cache:
            segs = self.segs[a:b + 1]
            sub = self.view.sub(segs[0].start, segs[-1].end, segs)
            self.cache[key] = score_step(sub, self.steps[j], b - a + 1)
        return self.cache[key]

    def solve(self) -> tuple[float, list]:
        m, k = len(self.segs), len(self.steps)
        neg = -math.inf
        best = [[neg] * (m + 1) for _ in range(k + 1)]
        back = [[None] * (m + 1) for _ in range(k + 1)]
        best[0][0] = 0.0
        for j in range(1, k + 1):
            for i in range(m + 1):
                if best[j - 1][i] > neg:
                    best[j][i], back[j][i] = best[j - 1][i], (i, None)
                for a in range(i):
                    if best[j - 1][a] == neg:
                        continue
                    total = best[j - 1][a] + self.span(j - 1, a, i - 1)[0]
                    if total > best[j][i] + 1e-12:
                        best[j][i], back[j][i] = total, (a, i - 1)
        spans = [None] * k
        i = m
        for j in range(k, 0, -1):
            a, last = back[j][i]
            spans[j - 1] = None if last is None else (a, last)
            i = a
        return best[k][m], spans


def _check_objects(ast: MotionAST, view: PathView) -> None:
    def walk(c):
        if isinstance(c, Repeat):
            for b in c.body:
                walk(b)
        obj = getattr(c, "obj", None)
        if obj is not None:
            view.region(obj)

    for c in ast.clauses():
        walk(c)


def discriminate(traj: Trajectory, scene, ast: MotionAST | str, cfg: Config = DEFAULT,
                 heading: str | None = None) -> Verdict:
    if isinstance(ast, str):
        ast = parse_description(ast)
    view = build_view(traj, scene, cfg, heading)
    _check_objects(ast, view)
    steps = list(ast.steps)
    path_idx = [j for j, s in enumerate(steps) if not _step_is_grounding(s)]
    per_step: dict[int, tuple[float, list]] = {}
    for j, step in enumerate(steps):
        if j not in path_idx:
            per_step[j] = score_step(view, step)
    if path_idx:
        segs = view.segments
        matcher = _Matcher(view, segs, [steps[j] for j in path_idx])
        _, spans = matcher.solve()
        for jj, (j, span) in enumerate(zip(path_idx, spans)):
            if span is None:
                per_step[j] = (0.0, [ClauseScore(c, 0.0, "no segment left for this step") for c in steps[j].clauses()])
            else:
                per_step[j] = matcher.span(jj, *span)
    score = float(np.mean([per_step[j][0] for j in range(len(steps))]))
    clauses = tuple(cs for j in range(len(steps)) for cs in per_step[j][1])
    return Verdict(int(score >= cfg.theta), score, clauses)


def discriminate_episode(ep: Episode, description: str | MotionAST | None = None, cfg: Config = DEFAULT) -> Verdict:
    return discriminate(ep.trajectory, ep.scene, description if description is not None else ep.motion_description,
                        cfg, ep.heading)


def predict_label(ep: Episode, description: str, cfg: Config = DEFAULT) -> int:
    """Binary prediction for a corpus pair; a description naming an absent object is rejected."""
    try:
        return discriminate_episode(ep, description, cfg).label
    except UnknownObjectError:
        return 0


def rank(trajectories, scene, ast: MotionAST | str, cfg: Config = DEFAULT,
         heading: str | None = None) -> list[tuple[int, float]]:
    trajectories = list(trajectories)
    if not trajectories:
        raise InvalidArgumentError("rank needs at least one trajectory")
    if isinstance(ast, str):
        ast = parse_description(ast)
    scored = [(i, discriminate(t, scene, ast, cfg, heading).score) for i, t in enumerate(trajectories)]
    return sorted(scored, key=lambda p: (-p[1], p[0]))
