"""Closed-loop refine/terminate search over the parameterized generators.

A proposer suggests a generator call, the discriminator judges it, and the
loop either terminates (score >= ``theta_loop``) or refines. The default
proposer first looks the primary clause up in a fixed family table, then
switches family on a kind mismatch, then runs coordinate descent over a
small parameter grid.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Iterator

import numpy as np

from .analyzer import Verdict, discriminate
from .config import DEFAULT, DIRECTIONS_8, Config
from .dsl import (
    Curve, Detour, MotionAST, MoveOver, Oscillate, Rotate, Step, Straight, Translate, format_description,
    parse_description,
)
from .errors import InvalidArgumentError, MotifError
from .generators import GENERATORS, UNIT, GeneratorParams, gen_composite
from .trajectory import SceneObject, Trajectory

FREQUENCIES = (1, 2, 3, 4, 5, 6)
AMPLITUDES = (0.05, 0.1, 0.15, 0.2)


@dataclass(frozen=True)
class PolicyCandidate:
    generator_name: str
    params: GeneratorParams
    turn: int
    obstacle: str | None = None
    side: str | None = None

    def __post_init__(self):
        if self.generator_name not in GENERATORS:
            raise InvalidArgumentError(f"unknown generator {self.generator_name!r}")

    def describe(self) -> str:
        p = self.params
        if self.generator_name.endswith("shaking"):
            text = f"{self.generator_name}({p.n}, {p.time_dt}, {p.start}, {p.amplitude}, {p.frequency})"
            if p.drift:
                text += f" + drift {p.drift} {p.drift_direction}"
            return text
        if self.generator_name == "circle":
            return f"circle(center={p.center}, radius={p.radius}, {p.turn}, count={p.count})"
        if self.generator_name == "detour":
            return f"detour({p.start} -> {p.end}, around {self.obstacle}, {self.side})"
        return f"{self.generator_name}({p.start} -> {p.end})"


@dataclass(frozen=True)
class Turn:
    candidate: PolicyCandidate
    verdict: Verdict


@dataclass(frozen=True)
class LoopTrace:
    turns: tuple[Turn, ...]
    terminated: bool
    reason: str

    def to_json_lines(self) -> list[dict]:
        rows = [{"turn": t.candidate.turn, "policy": t.candidate.describe(), "label": t.verdict.label,
                 "score": round(t.verdict.score, 6)} for t in self.turns]
        rows.append({"terminated": self.terminated, "reason": self.reason, "evaluations": len(self.turns)})
        return rows


def run_candidate(c: PolicyCandidate, scene=()) -> Trajectory:
    gen = GENERATORS[c.generator_name]
    if c.generator_name == "detour":
        obstacle = next(o for o in scene if o.label == c.obstacle)
        return gen(c.params, obstacle=obstacle, side=c.side)[0]
    return gen(c.params)[0]


# --- proposals -------------------------------------------------------------

_CENTER = np.array([0.5, 0.5])


def _span(direction: str, half: float = 0.3) -> tuple[tuple[float, float], tuple[float, float]]:
    u = np.asarray(UNIT[direction])
    a, b = _CENTER - half * u, _CENTER + half * u
    return tuple(map(float, a)), tuple(map(float, b))


def _through(centroid, direction: str, half: float):
    u = np.asarray(UNIT[direction])
    a, b = np.clip(centroid - half * u, 0, 1), np.clip(centroid + half * u, 0, 1)
    return tuple(map(float, a)), tuple(map(float, b))


def _axis_of(direction: str) -> str:
    return "horizontal" if direction in ("left", "right") else "vertical"


def first_guess(step: Step, forward: str) -> PolicyCandidate:
    """Fixed lookup on the primary clause alone."""
    c = step.primary
    if isinstance(c, Translate):
        d = forward if c.direction == "forward" else c.direction
        if any(isinstance(m, Oscillate) for m in step.modifiers):
            # the shaking function named after the direction of travel
            return PolicyCandidate(f"{_axis_of(d)}_shaking",
                                   GeneratorParams(n=2, time_dt=0.1, start=(0.1, 1.0), amplitude=0.15, frequency=2), 1)
        start, end = _span(d)
        return PolicyCandidate("line", GeneratorParams(n=20, start=start, end=end), 1)
    return desired(step, forward, 1)


def desired(step: Step, forward: str, turn: int, scene=()) -> PolicyCandidate:
    """The generator family whose own AST matches the whole step."""
    c = step.primary
    osc = next((m for m in step.modifiers if isinstance(m, Oscillate)), None)
    if isinstance(c, Translate):
        d = forward if c.direction == "forward" else c.direction
        around = next((m for m in step.modifiers if isinstance(m, Detour) and m.obj is not None), None)
        obj = next((o for o in scene if around is not None and o.label == around.obj), None)
        if obj is not None:
            start, end = _through(obj.region.centroid, d, 0.4)
            return PolicyCandidate("detour", GeneratorParams(n=10, start=start, end=end), turn, obj.label,
                                   around.side)
        if osc is not None and osc.axis == "diagonal":
            start, end = _span(d)
            return PolicyCandidate("wave", GeneratorParams(n=80, start=start, end=end, amplitude=0.1,
                                                           frequency=osc.count or 2), turn)
        if osc is not None:
            axis = osc.axis if osc.axis in ("horizontal", "vertical") else _axis_of(d)
            drift = 0.2
            u = np.asarray(UNIT[d])
            start = tuple(map(float, np.clip(_CENTER - 0.5 * drift * u, 0, 1)))
            freq = 2 * osc.count if osc.count else 4
            return PolicyCandidate(f"{axis}_shaking", GeneratorParams(
                n=2, time_dt=0.1, start=start, amplitude=0.1, frequency=freq, drift=drift, drift_direction=d), turn)
        start, end = _span(d)
        return PolicyCandidate("line", GeneratorParams(n=20, start=start, end=end), turn)
    if isinstance(c, Oscillate):
        axis = c.axis if c.axis in ("horizontal", "vertical") else "vertical"
        return PolicyCandidate(f"{axis}_shaking", GeneratorParams(n=10, start=(0.45, 0.45), amplitude=0.1,
                                                                  frequency=c.count or 2), turn)
    if isinstance(c, Rotate):
        return PolicyCandidate("circle", GeneratorParams(n=48, radius=0.3, turn=c.turn, count=c.count), turn)
    if isinstance(c, Curve):
        start, end = _span(forward if c.direction == "forward" else c.direction)
        return PolicyCandidate("arc", GeneratorParams(n=40, start=start, end=end, convexity=c.convexity, bulge=0.15), turn)
    if isinstance(c, Detour) and c.obj is not None:
        obj = next((o for o in scene if o.label == c.obj), None)
        if obj is not None:
            start, end = _through(obj.region.centroid, forward, 0.4)
            return PolicyCandidate("detour", GeneratorParams(n=10, start=start, end=end), turn, c.obj, c.side)
    if isinstance(c, MoveOver):
        obj = next((o for o in scene if o.label == c.obj), None)
        if obj is not None:
            start, end = _through(obj.region.centroid, forward, 0.3)
            return PolicyCandidate("line", GeneratorParams(n=20, start=start, end=end), turn)
    start, end = _span(forward)
    return PolicyCandidate("line", GeneratorParams(n=20, start=start, end=end), turn)


def _with_direction(c: PolicyCandidate, direction: str) -> PolicyCandidate:
    p = c.params
    if c.generator_name.endswith("shaking"):
        if not p.drift:
            return c
        return replace(c, params=replace(p, drift_direction=direction))
    if c.generator_name in ("line", "arc", "wave"):
        start, end = _span(direction)
        return replace(c, params=replace(p, start=start, end=end))
    return c


def grid_neighbours(c: PolicyCandidate) -> Iterator[tuple[str, list[PolicyCandidate]]]:
    """Coordinate-descent axes: frequency, amplitude, then direction."""
    p = c.params
    if c.generator_name.endswith("shaking") or c.generator_name == "wave":
        freqs = [f for f in FREQUENCIES if not (p.drift and f % 2)]
        yield "frequency", [replace(c, params=replace(p, frequency=f)) for f in freqs]
        yield "amplitude", [replace(c, params=replace(c.params, amplitude=a)) for a in AMPLITUDES]
    if c.generator_name == "circle":
        yield "count", [replace(c, params=replace(p, count=k)) for k in (1, 2, 3)]
        yield "turn", [replace(c, params=replace(p, turn=t)) for t in ("clockwise", "counter-clockwise")]
    yield "direction", [_with_direction(c, d) for d in DIRECTIONS_8]


Proposer = Callable[[Step, list], "PolicyCandidate | None"]


def refine(task: str, ast: MotionAST | str, scene=(), budget: int = 25, theta_loop: float | None = None,
           cfg: Config = DEFAULT, heading: str | None = None, proposer: Proposer | None = None) -> LoopTrace:
    """Propose, judge, and refine until accepted or out of budget.

    ``proposer(step, history)`` may override the built-in search: it gets the
    step being solved and the list of turns so far and returns the next
    candidate, or ``None`` to fall back to the built-in choice.
    """
    if isinstance(ast, str):
        ast = parse_description(ast)
    if not ast.steps:
        raise InvalidArgumentError("empty motion description")
    if budget < 1:
        raise InvalidArgumentError("budget must be >= 1")
    theta = cfg.theta_loop if theta_loop is None else theta_loop
    forward = heading or cfg.forward
    scene = tuple(scene)
    turns: list[Turn] = []
    seen: set = set()

    def judge(candidate: PolicyCandidate) -> Turn | None:
        key = (candidate.generator_name, candidate.params, candidate.obstacle, candidate.side)
        if key in seen:
            return None
        seen.add(key)
        try:
            traj = _realize(candidate, ast, scene, forward)
            verdict = discriminate(traj, scene, ast, cfg, heading)
        except MotifError:
            # infeasible parameters count as a rejected evaluation
            verdict = Verdict(0, 0.0, ())
        t = Turn(replace(candidate, turn=len(turns) + 1), verdict)
        turns.append(t)
        return t

    def done() -> LoopTrace | None:
        if turns and turns[-1].verdict.score >= theta:
            return LoopTrace(tuple(turns), True, "accepted")
        if len(turns) >= budget:
            return LoopTrace(tuple(turns), True, "budget-exhausted")
        return None

    step = ast.steps[0]
    queue = []
    if proposer is not None:
        queue.append(lambda: proposer(step, list(turns)))
    queue.append(lambda: first_guess(step, forward))
    first = next((c for c in (f() for f in queue) if c is not None))
    judge(first)
    if (res := done()) is not None:
        return res
    best = turns[-1]
    target = desired(step, forward, 2, scene)
    if proposer is not None:
        while True:
            c = proposer(step, list(turns))
            if c is None:
                break
            t = judge(c)
            if t is not None and t.verdict.score > best.verdict.score:
                best = t
            if (res := done()) is not None:
                return res
    if target.generator_name != best.candidate.generator_name or target.params.drift != best.candidate.params.drift:
        t = judge(target)
        if t is not None and t.verdict.score > best.verdict.score:
            best = t
        if (res := done()) is not None:
            return res
    improved = True
    while improved:
        improved = False
        for _, options in grid_neighbours(best.candidate):
            for c in options:
                t = judge(c)
                if t is None:
                    continue
                if t.verdict.score > best.verdict.score + 1e-12:
                    best, improved = t, True
                if (res := done()) is not None:
                    return res
    return LoopTrace(tuple(turns), True, "budget-exhausted" if len(turns) >= budget else "search-exhausted")


def _realize(candidate: PolicyCandidate, ast: MotionAST, scene, forward: str) -> Trajectory:
    """Trajectory for the first step's candidate; later steps use their desired family."""
    traj = run_candidate(candidate, scene)
    if len(ast.steps) == 1:
        return traj
    legs = [(traj, MotionAST((ast.steps[0],)))]
    for step in ast.steps[1:]:
        c = desired(step, forward, 0, scene)
        legs.append((run_candidate(c, scene), MotionAST((step,))))
    return gen_composite(legs)[0]


def describe_trace(trace: LoopTrace, ast: MotionAST) -> str:
    lines = [f"target: {format_description(ast)}"]
    for t in trace.turns:
        lines.append(f"turn {t.candidate.turn}: {t.candidate.describe()} -> {t.verdict.label} ({t.verdict.score:.3f})")
    lines.append(f"{trace.reason} after {len(trace.turns)} evaluation(s)")
    return "\n".join(lines)
