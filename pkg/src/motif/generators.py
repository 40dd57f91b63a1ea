"""Parametric synthetic trajectories with their ground-truth motion ASTs.

All generators work in the unit square (image convention, ``y`` down) and
return ``(Trajectory, MotionAST)``. The shaking generators follow the
code-as-policies functions literally: legs are concatenated without
removing the shared junction sample, and ``time_dt`` is kept only as
metadata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .dsl import Curve, Detour, MotionAST, Oscillate, Rotate, Step, Translate
from .errors import DegeneratePathError, InfeasibleError, InvalidArgumentError
from .trajectory import Episode, Region, SceneObject, Trajectory

UNIT = {
    "up": (0.0, -1.0),
    "down": (0.0, 1.0),
    "left": (-1.0, 0.0),
    "right": (1.0, 0.0),
    "up-left": (-math.sqrt(0.5), -math.sqrt(0.5)),
    "up-right": (math.sqrt(0.5), -math.sqrt(0.5)),
    "down-left": (-math.sqrt(0.5), math.sqrt(0.5)),
    "down-right": (math.sqrt(0.5), math.sqrt(0.5)),
}

# counter-clockwise on screen starting from "right", in 45 degree sectors
_SECTORS = ("right", "up-right", "up", "up-left", "left", "down-left", "down", "down-right")


@dataclass(frozen=True)
class GeneratorParams:
    n: int = 20
    start: tuple[float, float] = (0.0, 0.5)
    end: tuple[float, float] = (0.5, 1.0)
    amplitude: float = 0.1
    frequency: int = 2
    radius: float = 0.2
    center: tuple[float, float] = (0.5, 0.5)
    turn: str = "clockwise"
    count: int = 1
    convexity: str = "convex"
    bulge: float = 0.1
    drift: float = 0.0
    drift_direction: str = "left"
    noise_sigma: float = 0.0
    seed: int = 0
    time_dt: float = 1.5
    extra: dict = field(default_factory=dict, compare=False)

    def validate(self) -> "GeneratorParams":
        if self.n < 2:
            raise InvalidArgumentError("n must be >= 2")
        if self.frequency < 1 or self.count < 1:
            raise InvalidArgumentError("frequency and count must be >= 1")
        if self.noise_sigma < 0:
            raise InvalidArgumentError("noise_sigma must be >= 0")
        for name in ("start", "end", "center"):
            x, y = getattr(self, name)
            if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
                raise InvalidArgumentError(f"{name} must lie in the unit square, got {(x, y)}")
        return self


def _params(params: GeneratorParams | None, overrides: dict) -> GeneratorParams:
    p = params or GeneratorParams()
    if overrides:
        p = replace(p, **overrides)
    return p.validate()


def classify_direction(vector) -> str:
    """Nearest of the eight compass directions for an image-space vector."""
    vx, vy = float(vector[0]), float(vector[1])
    if vx == 0.0 and vy == 0.0:
        raise DegeneratePathError("zero vector has no direction")
    angle = math.degrees(math.atan2(-vy, vx)) % 360.0
    return _SECTORS[int(((angle + 22.5) % 360.0) // 45.0)]


def perpendicular_axis(direction: str) -> str:
    if direction in ("left", "right"):
        return "vertical"
    if direction in ("up", "down", "forward"):
        return "horizontal"
    return "diagonal"


def add_noise(xy: np.ndarray, sigma: float, seed: int) -> np.ndarray:
    """Gaussian jitter on interior samples; endpoints stay exact."""
    xy = np.array(xy, dtype=float)
    if sigma > 0 and len(xy) > 2:
        rng = np.random.default_rng(seed)
        xy[1:-1] += rng.normal(0.0, sigma, size=(len(xy) - 2, 2))
    return xy


def _finish(xy, p: GeneratorParams, ast: MotionAST):
    return Trajectory.single(add_noise(xy, p.noise_sigma, p.seed)), ast


def gen_line(params: GeneratorParams | None = None, **overrides):
    p = _params(params, overrides)
    start, end = np.asarray(p.start, float), np.asarray(p.end, float)
    if np.array_equal(start, end):
        raise DegeneratePathError("line start equals end")
    s = np.linspace(0.0, 1.0, p.n)[:, None]
    xy = start + s * (end - start)
    xy[-1] = end
    return _finish(xy, p, MotionAST.of(Translate(classify_direction(end - start))))


def _shaking(p: GeneratorParams, axis: str):
    if p.amplitude <= 0:
        raise InvalidArgumentError("amplitude must be > 0")
    x0, y0 = p.start
    if axis == "vertical":
        leg = np.column_stack([np.full(p.n, x0), np.linspace(y0, y0 + p.amplitude, p.n)])
    else:
        leg = np.column_stack([np.linspace(x0, x0 + p.amplitude, p.n), np.full(p.n, y0)])
    xy = np.concatenate([leg[::-1] if i % 2 else leg for i in range(p.frequency)])
    if p.drift == 0:
        return _finish(xy, p, MotionAST.of(Oscillate(axis, p.frequency)))
    if p.frequency < 2:
        raise InvalidArgumentError("a drifting oscillation needs frequency >= 2")
    direction = p.drift_direction
    if direction not in UNIT:
        raise InvalidArgumentError(f"unknown drift direction {direction!r}")
    ramp = np.linspace(0.0, p.drift, len(xy))[:, None]
    xy = xy + ramp * np.asarray(UNIT[direction])
    return _finish(xy, p, MotionAST((Step(Translate(direction), (Oscillate(axis),)),)))


def gen_vertical_shaking(params: GeneratorParams | None = None, **overrides):
    """Legs of ``n`` samples from ``start`` to ``start + (0, amplitude)``, odd legs reversed."""
    return _shaking(_params(params, overrides), "vertical")


def gen_horizontal_shaking(params: GeneratorParams | None = None, **overrides):
    return _shaking(_params(params, overrides), "horizontal")


def gen_circle(params: GeneratorParams | None = None, **overrides):
    """``count`` revolutions with ``n`` samples each plus the closing sample."""
    p = _params(params, overrides)
    if p.radius <= 0:
        raise InvalidArgumentError("radius must be > 0")
    if p.turn not in ("clockwise", "counter-clockwise"):
        raise InvalidArgumentError(f"unknown turn direction {p.turn!r}")
    theta = np.linspace(0.0, 2.0 * math.pi * p.count, p.count * p.n + 1)
    sign = 1.0 if p.turn == "clockwise" else -1.0
    cx, cy = p.center
    xy = np.column_stack([cx + p.radius * np.cos(theta), cy + sign * p.radius * np.sin(theta)])
    return _finish(xy, p, MotionAST.of(Rotate(p.turn, p.count)))


def gen_arc(params: GeneratorParams | None = None, **overrides):
    """Parabolic arc whose midpoint sits ``bulge`` off the chord.

    Convex arcs bulge to the left of the directed chord as seen on screen.
    """
    p = _params(params, overrides)
    if p.bulge < 0:
        raise InvalidArgumentError("bulge must be >= 0")
    if p.convexity not in ("convex", "concave"):
        raise InvalidArgumentError(f"unknown convexity {p.convexity!r}")
    if p.bulge == 0:
        return gen_line(p)
    start, end = np.asarray(p.start, float), np.asarray(p.end, float)
    chord = end - start
    length = float(np.hypot(*chord))
    if length == 0:
        raise DegeneratePathError("arc start equals end")
    u = chord / length
    left = np.array([u[1], -u[0]])
    normal = left if p.convexity == "convex" else -left
    s = np.linspace(0.0, 1.0, p.n)[:, None]
    xy = start + s * chord + 4.0 * s * (1.0 - s) * p.bulge * normal
    xy[-1] = end
    return _finish(xy, p, MotionAST.of(Curve(classify_direction(chord), p.convexity)))


def gen_wave(params: GeneratorParams | None = None, **overrides):
    """Straight translation with ``frequency`` full sine periods across it."""
    p = _params(params, overrides)
    if p.amplitude <= 0:
        raise InvalidArgumentError("amplitude must be > 0")
    start, end = np.asarray(p.start, float), np.asarray(p.end, float)
    chord = end - start
    length = float(np.hypot(*chord))
    if length == 0:
        raise DegeneratePathError("wave start equals end")
    u = chord / length
    perp = np.array([-u[1], u[0]])
    s = np.linspace(0.0, 1.0, p.n)[:, None]
    xy = start + s * chord + p.amplitude * np.sin(2.0 * math.pi * p.frequency * s) * perp
    xy[-1] = end
    direction = classify_direction(chord)
    ast = MotionAST((Step(Translate(direction), (Oscillate(perpendicular_axis(direction), p.frequency),)),))
    return _finish(xy, p, ast)


def gen_composite(legs, params: GeneratorParams | None = None):
    """Chain ``(Trajectory, MotionAST)`` legs end to start and sequence their ASTs.

    Each leg is translated so it begins where the previous one ended; the
    junction sample appears twice, as with the shaking legs.
    """
    legs = list(legs)
    if not legs:
        raise InvalidArgumentError("composite needs at least one leg")
    pieces, steps = [], []
    cursor = None
    for traj, ast in legs:
        xy = traj.poi_track.xy
        if cursor is not None:
            xy = xy - xy[0] + cursor
        pieces.append(xy)
        cursor = xy[-1]
        steps.extend(ast.steps)
    xy = np.concatenate(pieces)
    traj = Trajectory.single(xy)
    if params is not None and params.noise_sigma > 0:
        traj = Trajectory.single(add_noise(xy, params.noise_sigma, params.seed))
    return traj, MotionAST(tuple(steps))


def detour_waypoints(start, end, obstacle: SceneObject, side: str, clearance: float) -> np.ndarray:
    start, end = np.asarray(start, float), np.asarray(end, float)
    chord = end - start
    length = float(np.hypot(*chord))
    if length == 0:
        raise DegeneratePathError("detour start equals end")
    if side not in ("left", "right"):
        raise InvalidArgumentError(f"side must be left or right, got {side!r}")
    region = obstacle.region
    if region.contains(np.array([start, end])).any():
        raise InfeasibleError("detour endpoint lies inside the obstacle")
    if not region.intersects_segment(start, end):
        raise InvalidArgumentError("obstacle does not block the straight chord")
    u = chord / length
    left = np.array([u[1], -u[0]])
    normal = left if side == "left" else -left
    rel = region.vertices - start
    along = rel @ u
    offset = float(np.max(rel @ normal)) + clearance
    a0 = max(0.0, float(along.min()) - clearance)
    a1 = min(length, float(along.max()) + clearance)
    pts = np.array([start, start + a0 * u + offset * normal, start + a1 * u + offset * normal, end])
    if (pts < 0).any() or (pts > 1).any():
        raise InfeasibleError("detour leaves the unit viewport")
    for p, q in zip(pts[:-1], pts[1:]):
        if region.intersects_segment(p, q):
            raise InfeasibleError("no clear detour around the obstacle")
    return pts


def gen_detour(params: GeneratorParams | None = None, obstacle: SceneObject | None = None,
               side: str = "right", clearance: float = 0.05, **overrides):
    """Three straight legs around ``obstacle``; ``3n - 2`` samples."""
    p = _params(params, overrides)
    if obstacle is None:
        raise InvalidArgumentError("gen_detour needs an obstacle")
    pts = detour_waypoints(p.start, p.end, obstacle, side, clearance)
    s = np.linspace(0.0, 1.0, p.n)[:, None]
    legs = [a + s * (b - a) for a, b in zip(pts[:-1], pts[1:])]
    xy = np.concatenate([legs[0]] + [leg[1:] for leg in legs[1:]])
    xy[-1] = pts[-1]
    direction = classify_direction(pts[-1] - pts[0])
    ast = MotionAST((Step(Translate(direction), (Detour(obstacle.label, side),)),))
    return _finish(xy, p, ast)


GENERATORS = {
    "line": gen_line,
    "vertical_shaking": gen_vertical_shaking,
    "horizontal_shaking": gen_horizontal_shaking,
    "circle": gen_circle,
    "arc": gen_arc,
    "wave": gen_wave,
    "detour": gen_detour,
}


# --- seeded corpora --------------------------------------------------------

CORPUS_KINDS = ("line", "vertical_shaking", "horizontal_shaking", "circle", "arc", "wave", "composite", "detour")


def _point(rng, lo=0.15, hi=0.85) -> tuple[float, float]:
    return (round(float(rng.uniform(lo, hi)), 3), round(float(rng.uniform(lo, hi)), 3))


def _chord(rng, min_len=0.3):
    while True:
        a, b = _point(rng), _point(rng)
        if math.dist(a, b) >= min_len:
            return a, b


def _draw(kind: str, rng, noise: float, seed: int):
    base = GeneratorParams(n=int(rng.integers(16, 41)), noise_sigma=noise, seed=seed)
    if kind == "line":
        a, b = _chord(rng)
        return gen_line(base, start=a, end=b), ()
    if kind in ("vertical_shaking", "horizontal_shaking"):
        drift = float(rng.choice([0.0, 0.0, 0.2]))
        freq = int(rng.choice([4, 6])) if drift else int(rng.integers(2, 7))
        direction = str(rng.choice(["left", "right"] if kind == "vertical_shaking" else ["up", "down"]))
        p = replace(base, start=_point(rng, 0.3, 0.6), amplitude=round(float(rng.uniform(0.1, 0.25)), 3),
                    frequency=freq, drift=drift, drift_direction=direction)
        return GENERATORS[kind](p), ()
    if kind == "circle":
        p = replace(base, n=int(rng.integers(24, 49)), center=_point(rng, 0.4, 0.6),
                    radius=round(float(rng.uniform(0.15, 0.3)), 3), count=int(rng.integers(1, 3)),
                    turn=str(rng.choice(["clockwise", "counter-clockwise"])))
        return gen_circle(p), ()
    if kind == "arc":
        a, b = _chord(rng, 0.4)
        bulge = round(float(rng.uniform(0.12, 0.25)) * math.dist(a, b), 4)
        return gen_arc(base, start=a, end=b, bulge=bulge, convexity=str(rng.choice(["convex", "concave"]))), ()
    if kind == "wave":
        direction = str(rng.choice(["left", "right", "up", "down"]))
        u = np.asarray(UNIT[direction])
        mid = np.array(_point(rng, 0.45, 0.55))
        length = float(rng.uniform(0.4, 0.6))
        start, end = mid - u * length / 2, mid + u * length / 2
        p = replace(base, n=int(rng.integers(60, 97)), start=tuple(start), end=tuple(end),
                    amplitude=round(float(rng.uniform(0.04, 0.08)), 3), frequency=int(rng.integers(2, 5)))
        return gen_wave(p), ()
    if kind == "composite":
        # perpendicular legs: opposite legs would be indistinguishable from shaking
        first = str(rng.choice(["up", "down", "left", "right"]))
        second = str(rng.choice(["left", "right"] if first in ("up", "down") else ["up", "down"]))
        legs = []
        for d in (first, second):
            u = np.asarray(UNIT[str(d)])
            legs.append(gen_line(base, start=(0.5, 0.5), end=tuple(0.5 + 0.25 * u)))
        return gen_composite(legs), ()
    if kind == "detour":
        direction = str(rng.choice(["left", "right", "up", "down"]))
        u = np.asarray(UNIT[direction])
        mid = np.array(_point(rng, 0.45, 0.55))
        start, end = mid - 0.35 * u, mid + 0.35 * u
        half = float(rng.uniform(0.05, 0.1))
        box = Region.box(mid[0] - half, mid[1] - half, mid[0] + half, mid[1] + half)
        label = str(rng.choice(["box", "cup", "manhole", "bowl"]))
        obstacle = SceneObject(label, box)
        side = str(rng.choice(["left", "right"]))
        return gen_detour(base, obstacle=obstacle, side=side, start=tuple(start), end=tuple(end)), (obstacle,)
    raise InvalidArgumentError(f"unknown corpus kind {kind!r}")


def synthetic_corpus(count: int, seed: int = 0, noise_sigma: float = 0.0, size: int = 480,
                     kinds=CORPUS_KINDS) -> list[Episode]:
    """``count`` seeded episodes cycling through ``kinds``, scaled to ``size`` pixels.

    Each episode's description is its generator's formatted ground-truth AST.
    """
    from .dsl import format_description

    rng = np.random.default_rng(seed)
    episodes = []
    for i in range(count):
        kind = kinds[i % len(kinds)]
        (traj, ast), scene = _draw(kind, rng, noise_sigma, seed * 100003 + i)
        scene = tuple(SceneObject(o.label, o.region.transformed(size)) for o in scene)
        episodes.append(Episode(f"syn{seed:03d}-{i:04d}", traj.transformed(size), f"generate a {kind} motion",
                                format_description(ast), scene, kind, image_size=(size, size)))
    return episodes
