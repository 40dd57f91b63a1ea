import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from motif.analyzer import discriminate, winding
from motif.dsl import Curve, Detour, MotionAST, Oscillate, Rotate, Step, Translate
from motif.errors import DegeneratePathError, InfeasibleError, InvalidArgumentError
from motif.generators import (
    GENERATORS,
    GeneratorParams,
    classify_direction,
    gen_arc,
    gen_circle,
    gen_composite,
    gen_detour,
    gen_horizontal_shaking,
    gen_line,
    gen_vertical_shaking,
    gen_wave,
    synthetic_corpus,
)
from motif.trajectory import Region, SceneObject


def xy(result):
    return result[0].poi_track.xy


def test_line_default_three_samples():
    traj, ast = gen_line(n=3)
    assert xy((traj, ast)).tolist() == [[0, 0.5], [0.25, 0.75], [0.5, 1.0]]
    assert ast == MotionAST.of(Translate("down-right"))


def test_line_axis_and_diagonal():
    assert gen_line(start=(0, 0), end=(0, 1), n=7)[1] == MotionAST.of(Translate("down"))
    pts = xy(gen_line(start=(0, 0), end=(1, 1), n=5))
    assert np.array_equal(pts[:, 0], pts[:, 1])
    with pytest.raises(DegeneratePathError):
        gen_line(start=(0.3, 0.3), end=(0.3, 0.3))


def test_vertical_shaking_hand_traced():
    traj, ast = gen_vertical_shaking(start=(0, 0.5), amplitude=0.1, frequency=2, n=2)
    assert np.allclose(traj.poi_track.xy, [(0, 0.5), (0, 0.6), (0, 0.6), (0, 0.5)])
    assert ast == MotionAST.of(Oscillate("vertical", 2))


def test_vertical_shaking_single_leg_and_alternations():
    pts = xy(gen_vertical_shaking(frequency=1))
    assert np.all(np.diff(pts[:, 1]) > 0)
    dy = np.diff(xy(gen_vertical_shaking(frequency=4, n=6))[:, 1])
    signs = np.sign(dy[dy != 0])
    # four monotone legs, so three reversals between them
    assert int(np.sum(signs[1:] != signs[:-1])) == 3
    with pytest.raises(InvalidArgumentError):
        gen_vertical_shaking(amplitude=0)


def test_horizontal_shaking_refinement_example():
    traj, ast = gen_horizontal_shaking(n=2, start=(0.1, 1.0), amplitude=0.15, frequency=2)
    pts = traj.poi_track.xy
    assert np.all(pts[:, 1] == 1.0)
    assert np.allclose(pts[:, 0], [0.1, 0.25, 0.25, 0.1])
    assert ast == MotionAST.of(Oscillate("horizontal", 2))
    single = xy(gen_horizontal_shaking(frequency=1, n=2))
    assert single[0, 1] == single[1, 1] and single[0, 0] != single[1, 0]


def test_drifting_shaking_ast():
    _, ast = gen_vertical_shaking(frequency=4, drift=0.2, drift_direction="left", start=(0.6, 0.5))
    assert ast == MotionAST((Step(Translate("left"), (Oscillate("vertical"),)),))


def test_circle_closure_and_turning():
    traj, ast = gen_circle(radius=0.2, count=1, n=4, turn="clockwise")
    pts = traj.poi_track.xy
    assert len(pts) == 5
    assert np.allclose(pts[0], pts[-1], atol=1e-9)
    assert ast == MotionAST.of(Rotate("clockwise", 1))
    two = winding(gen_circle(count=2, n=16)[0])
    assert abs(two.total_turning) == pytest.approx(4 * math.pi, abs=1e-6)
    ccw = winding(gen_circle(turn="counter-clockwise", n=16)[0])
    cw = winding(gen_circle(turn="clockwise", n=16)[0])
    assert math.copysign(1, ccw.total_turning) == -math.copysign(1, cw.total_turning)
    with pytest.raises(InvalidArgumentError):
        gen_circle(radius=0)


def test_arc_convexity_convention():
    start, end = np.array([0.2, 0.8]), np.array([0.8, 0.8])
    traj, ast = gen_arc(start=tuple(start), end=tuple(end), bulge=0.1, convexity="convex", n=21)
    mid = traj.poi_track.xy[10]
    chord = end - start
    # screen-left of a rightward chord is up, i.e. smaller y
    assert chord[0] * (mid - start)[1] - chord[1] * (mid - start)[0] < 0
    assert mid[1] == pytest.approx(0.7)
    assert ast == MotionAST.of(Curve("right", "convex"))
    flat = gen_arc(start=(0.1, 0.1), end=(0.9, 0.5), bulge=0)
    line = gen_line(start=(0.1, 0.1), end=(0.9, 0.5))
    assert np.array_equal(xy(flat), xy(line)) and flat[1] == line[1]


def test_composite_down_then_left():
    down = gen_line(start=(0.5, 0.2), end=(0.5, 0.6), n=5)
    left = gen_line(start=(0.9, 0.9), end=(0.5, 0.9), n=5)
    traj, ast = gen_composite([down, left])
    assert ast == MotionAST.of(Translate("down"), Translate("left"))
    pts = traj.poi_track.xy
    assert len(pts) == 10
    assert pts[4].tolist() == pts[5].tolist() == [0.5, 0.6]
    assert np.allclose(pts[-1], [0.1, 0.6])


def test_detour_avoids_obstacle():
    manhole = SceneObject("manhole", Region.box(0.4, 0.4, 0.6, 0.6))
    traj, ast = gen_detour(start=(0.5, 0.9), end=(0.5, 0.1), obstacle=manhole, side="right", n=10)
    pts = traj.poi_track.xy
    assert len(pts) == 3 * 10 - 2
    assert not manhole.region.contains(pts).any()
    assert (pts[:, 0] >= 0.5).all() and pts[:, 0].max() > 0.6
    assert ast == MotionAST((Step(Translate("up"), (Detour("manhole", "right"),)),))
    wall = SceneObject("wall", Region.box(0.0, 0.4, 1.0, 0.6))
    with pytest.raises(InfeasibleError):
        gen_detour(start=(0.5, 0.9), end=(0.5, 0.1), obstacle=wall)


def test_params_validation():
    with pytest.raises(InvalidArgumentError):
        gen_line(n=1)
    with pytest.raises(InvalidArgumentError):
        gen_line(start=(1.5, 0))
    with pytest.raises(InvalidArgumentError):
        gen_line(noise_sigma=-1)


@pytest.mark.parametrize("name, kwargs, count", [
    ("line", dict(n=9), 9),
    ("vertical_shaking", dict(n=7, frequency=3), 21),
    ("horizontal_shaking", dict(n=5, frequency=2), 10),
    ("circle", dict(n=12, count=2), 25),
    ("arc", dict(n=15), 15),
    ("wave", dict(n=40, start=(0.1, 0.5), end=(0.9, 0.5)), 40),
])
def test_sample_count_contract(name, kwargs, count):
    assert len(GENERATORS[name](**kwargs)[0].poi_track) == count


@pytest.mark.parametrize("name", ["line", "vertical_shaking", "circle", "arc", "wave"])
def test_noise_is_seeded_and_spares_endpoints(name):
    kw = dict(noise_sigma=0.01, seed=7)
    if name == "wave":
        kw.update(start=(0.1, 0.5), end=(0.9, 0.5), n=60)
    a, b = xy(GENERATORS[name](**kw)), xy(GENERATORS[name](**kw))
    clean = xy(GENERATORS[name](**{**kw, "noise_sigma": 0.0}))
    assert a.tobytes() == b.tobytes()
    assert np.array_equal(a[[0, -1]], clean[[0, -1]])
    assert not np.array_equal(a, clean)
    other = xy(GENERATORS[name](**{**kw, "seed": 8}))
    assert not np.array_equal(a, other)


@pytest.mark.parametrize("vector, label", [
    ((1, 0), "right"), ((0, -1), "up"), ((-1, 1), "down-left"), ((1, -0.1), "right"), ((0.2, 1), "down"),
])
def test_classify_direction(vector, label):
    assert classify_direction(vector) == label


_points = st.tuples(st.floats(0.05, 0.95), st.floats(0.05, 0.95))


@settings(max_examples=60, deadline=None)
@given(_points, _points, st.integers(2, 60))
def test_line_closure_property(a, b, n):
    if math.dist(a, b) < 0.05:
        return
    traj, ast = gen_line(start=a, end=b, n=n)
    assert discriminate(traj, (), ast).label == 1


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.floats(0.05, 0.3), st.integers(2, 30), st.booleans())
def test_shaking_closure_property(freq, amp, n, vertical):
    gen = gen_vertical_shaking if vertical else gen_horizontal_shaking
    traj, ast = gen(GeneratorParams(n=n, frequency=freq, amplitude=amp, start=(0.4, 0.4)))
    assert discriminate(traj, (), ast).label == 1


@settings(max_examples=40, deadline=None)
@given(st.integers(8, 64), st.integers(1, 3), st.floats(0.05, 0.45), st.sampled_from(["clockwise", "counter-clockwise"]))
def test_circle_closure_property(n, count, radius, turn):
    traj, ast = gen_circle(n=n, count=count, radius=radius, turn=turn)
    assert discriminate(traj, (), ast).label == 1


@settings(max_examples=40, deadline=None)
@given(_points, _points, st.floats(0.1, 0.4), st.sampled_from(["convex", "concave"]), st.integers(9, 60))
def test_arc_closure_property(a, b, rel_bulge, convexity, n):
    chord = math.dist(a, b)
    if chord < 0.1:
        return
    traj, ast = gen_arc(start=a, end=b, bulge=rel_bulge * chord, convexity=convexity, n=n)
    assert discriminate(traj, (), ast).label == 1


def test_synthetic_corpus_deterministic_and_closed():
    a, b = synthetic_corpus(24, seed=3), synthetic_corpus(24, seed=3)
    assert a == b
    assert len({e.id for e in a}) == 24
    assert {e.category for e in a} == {"line", "vertical_shaking", "horizontal_shaking", "circle", "arc", "wave",
                                       "composite", "detour"}
    for ep in a:
        assert discriminate(ep.trajectory, ep.scene, ep.motion_description).label == 1, ep.motion_description
