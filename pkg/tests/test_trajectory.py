import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from motif.config import DEFAULT, load_config, parse_config_text
from motif.errors import ConfigError, DegeneratePathError, InvalidArgumentError
from motif.trajectory import (
    Episode,
    Frame,
    KeypointTrack,
    Region,
    SceneObject,
    Trajectory,
    arc_lengths,
    bounding_box,
    check_episode,
    dedupe_consecutive,
    episode_from_json,
    episode_to_json,
    load_corpus,
    load_episode,
    resample_arclength,
    resample_points,
    save_episode,
    validate_episode,
)


def _episode(**kw):
    base = dict(id="e1", trajectory=Trajectory.single([(0, 0), (10, 0), (10, 10)]),
                task_instruction="wipe table", motion_description="move to the right, then move downward")
    base.update(kw)
    return Episode(**base)


def test_arc_lengths_cumulative():
    s = arc_lengths(np.array([(0, 0), (3, 4), (3, 10)], float))
    assert s.tolist() == [0.0, 5.0, 11.0]


def test_resample_even_spacing_keeps_endpoints():
    xy = np.array([(0, 0), (4, 0), (4, 4)], float)
    out = resample_points(xy, 5)
    assert out[0].tolist() == [0, 0] and out[-1].tolist() == [4, 4]
    assert np.allclose(np.diff(arc_lengths(out)), 2.0)


def test_resample_tolerates_duplicates():
    xy = np.array([(0, 0), (1, 0), (1, 0), (2, 0)], float)
    out = resample_points(xy, 3)
    assert np.allclose(out, [(0, 0), (1, 0), (2, 0)])


def test_resample_rejects_zero_length():
    with pytest.raises(DegeneratePathError):
        resample_points(np.zeros((4, 2)), 5)
    with pytest.raises(InvalidArgumentError):
        resample_points(np.array([(0, 0), (1, 0)], float), 1)


def test_resample_arclength_spreads_time():
    tr = KeypointTrack.from_xy([(0, 0), (1, 0), (5, 0)], t0=10)
    out = resample_arclength(tr, 3)
    assert out.times.tolist() == [10.0, 11.0, 12.0]
    assert np.allclose(out.xy[:, 0], [0, 2.5, 5])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)), min_size=2, max_size=30),
       st.integers(2, 64))
def test_resample_length_preserved_on_polyline(pts, n):
    xy = np.array(pts, float)
    if arc_lengths(xy)[-1] < 1e-6:
        return
    out = resample_points(xy, n)
    assert len(out) == n
    assert arc_lengths(out)[-1] <= arc_lengths(xy)[-1] + 1e-6


def test_dedupe_consecutive():
    xy = [(0, 0), (0, 0), (1, 1), (1, 1), (0, 0)]
    assert dedupe_consecutive(xy).tolist() == [[0, 0], [1, 1], [0, 0]]


def test_bounding_box():
    tr = KeypointTrack.from_xy([(3, 4), (-1, 7), (2, 2)])
    assert bounding_box(tr) == (-1.0, 2.0, 3.0, 7.0)


def test_region_geometry():
    box = Region.box(2, 2, 0, 0)
    assert box.area == 4.0
    assert box.centroid.tolist() == [1.0, 1.0]
    inside = box.contains(np.array([(1, 1), (0, 1), (3, 3)], float))
    assert inside.tolist() == [True, False, False]
    assert box.intersects_segment(np.array([-1.0, 1.0]), np.array([3.0, 1.0]))
    assert not box.intersects_segment(np.array([-1.0, 3.0]), np.array([3.0, 3.0]))
    tri = Region.polygon([(0, 0), (4, 0), (0, 4)])
    assert tri.area == 8.0
    assert math.isclose(float(tri.distance(np.array([(4.0, 4.0)]))[0]), math.sqrt(8))


def test_transformed_trajectory_and_region():
    traj = Trajectory.single([(0, 0), (1, 2)]).transformed(10, (5, 5))
    assert traj.poi_track.xy.tolist() == [[5, 5], [15, 25]]
    assert Region.box(0, 0, 1, 1).transformed(2, (1, 0)).vertices.tolist() == [[1, 0], [3, 0], [3, 2], [1, 2]]


def test_validate_reports_every_problem():
    bad = Trajectory((KeypointTrack(0, ((0.0, 0, 0), (0.0, 1, 1))),
                      KeypointTrack(1, ((3.0, 0, 0),))), point_of_interest=7)
    ep = _episode(id="", trajectory=bad, task_instruction=" ",
                  scene=(SceneObject("x", Region.box(0, 0, 0, 1)),))
    codes = {v.code for v in validate_episode(ep)}
    assert {"empty-id", "empty-task-instruction", "missing-poi-track", "track-too-short",
            "time-not-increasing", "track-range-mismatch", "degenerate-region"} <= codes
    with pytest.raises(InvalidArgumentError):
        check_episode(ep)
    assert validate_episode(_episode()) == []


def test_frame_blank_is_read_only():
    f = Frame.blank(4, 3, (1, 2, 3))
    assert f.raster().shape == (3, 4, 3)
    with pytest.raises(ValueError):
        f.pixels[0, 0, 0] = 9


def test_episode_json_round_trip(tmp_path):
    ep = _episode(scene=(SceneObject("laptop", Region.box(1, 2, 3, 4)),
                         SceneObject("mat", Region.polygon([(0, 0), (2, 0), (1, 1)]))),
                  category="wipe", image_size=(32, 24), heading="left")
    path = tmp_path / "e1.json"
    save_episode(ep, path)
    back = load_episode(path)
    assert back == ep
    assert episode_from_json(json.loads(json.dumps(episode_to_json(ep)))) == ep


def test_episode_json_rejects_garbage(tmp_path):
    with pytest.raises(InvalidArgumentError):
        episode_from_json({"id": "x"})
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    with pytest.raises(InvalidArgumentError):
        load_episode(p)


def test_load_corpus_sorted_and_unique(tmp_path):
    for name in ("b", "a", "c"):
        save_episode(_episode(id=name), tmp_path / f"{name}.json")
    assert [e.id for e in load_corpus(tmp_path)] == ["a", "b", "c"]
    save_episode(_episode(id="a"), tmp_path / "dup.json")
    with pytest.raises(InvalidArgumentError):
        load_corpus(tmp_path)


def test_config_overrides(tmp_path, monkeypatch):
    cfg = parse_config_text("theta = 0.8  # stricter\nstart_color=1,2,3\n")
    assert cfg.theta == 0.8 and cfg.start_color == (1, 2, 3)
    assert cfg.n_neg == DEFAULT.n_neg
    with pytest.raises(ConfigError):
        parse_config_text("nonsense = 1")
    with pytest.raises(ConfigError):
        parse_config_text("theta = 2")
    p = tmp_path / "motif.cfg"
    p.write_text("n_neg = 3\n")
    monkeypatch.setenv("MOTIF_CONFIG", str(p))
    assert load_config().n_neg == 3
    monkeypatch.delenv("MOTIF_CONFIG")
    assert load_config() is DEFAULT
