import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from motif.dataset import (
    QUESTION,
    Sample,
    build_dataset,
    build_positive,
    emit_dataset,
    load_dataset,
    make_prompt,
    mine_negatives,
    split_corpus,
)
from motif.dsl import description_similarity
from motif.errors import CorpusTooSmallError, InvalidArgumentError, MissingArtifactError, MissingRasterError
from motif.generators import synthetic_corpus
from motif.trajectory import Frame


@pytest.fixture(scope="module")
def corpus():
    return synthetic_corpus(30, seed=5)


def test_prompt_template():
    p = make_prompt("brush hair", "move downward")
    assert p.splitlines() == ["Task instruction: brush hair", "Motion description: move downward", QUESTION]
    assert p.endswith("Express the answer as 1 or 0.")


def test_build_positive(tmp_path, corpus):
    img = tmp_path / "x.png"
    img.write_bytes(b"png")
    a, b = build_positive(corpus[0], img), build_positive(corpus[1], img)
    assert a.label == 1 and a.motion_description == corpus[0].motion_description
    assert a.episode_id != b.episode_id
    with pytest.raises(MissingArtifactError):
        build_positive(corpus[0], tmp_path / "missing.png")


def test_mining_example():
    pool = ["move upward and to the right", "make a circular motion clockwise", "move upward"]
    assert mine_negatives("move upward", pool, 1) == ["make a circular motion clockwise"]
    assert description_similarity("move upward", "make a circular motion clockwise", pool) == 0.0


def test_mining_forced_and_deterministic():
    pool = [f"make {k} circular motions clockwise" for k in range(2, 12)] + ["move upward"]
    got = mine_negatives("move upward", pool + pool, 10)
    assert sorted(got) == sorted(pool[:-1])
    assert got == mine_negatives("move upward", list(reversed(pool)), 10)
    with pytest.raises(CorpusTooSmallError, match="short by 1"):
        mine_negatives("move upward", pool, 11)


def test_mining_excludes_token_identical_descriptions():
    pool = ["move upward", "upward move", "make a circular motion clockwise"]
    assert mine_negatives("move upward", pool, 1) == ["make a circular motion clockwise"]
    with pytest.raises(CorpusTooSmallError):
        mine_negatives("move upward", pool, 2)


def test_ties_break_lexicographically():
    pool = ["make b", "make a", "move upward"]
    assert mine_negatives("move upward", pool, 2) == ["make a", "make b"]


def test_build_dataset_counts_and_bytes(tmp_path, corpus):
    out = tmp_path / "run1" / "data.jsonl"
    samples = build_dataset(corpus, out, n_neg=10)
    lines = out.read_text(encoding="utf-8").splitlines()
    assert len(lines) == len(samples) == 30 * 11
    by_ep = {}
    for s in samples:
        by_ep.setdefault(s.episode_id, []).append(s)
    own = {e.id: e.motion_description for e in corpus}
    for ep_id, group in by_ep.items():
        assert [s.label for s in group] == [1] + [0] * 10
        assert all(s.motion_description != own[ep_id] for s in group[1:])
        assert all(s.prompt.endswith(QUESTION) for s in group)
        assert (out.parent / group[0].image_path).is_file()
    meta = json.loads((tmp_path / "run1" / "data.jsonl.meta.json").read_text())
    assert meta["samples"] == 330 and "tfidf" in meta["similarity"]

    again = tmp_path / "run2" / "data.jsonl"
    build_dataset(list(reversed(corpus)), again, n_neg=10, jobs=3)
    assert again.read_bytes() == out.read_bytes()
    for s in samples[::11]:
        assert (again.parent / s.image_path).read_bytes() == (out.parent / s.image_path).read_bytes()


def test_jsonl_round_trip(tmp_path):
    samples = [Sample("e1", "images/e1.png", "t", "move upward", 1, make_prompt("t", "move upward"), "c"),
               Sample("e1", "images/e1.png", "t", "make ü", 0, make_prompt("t", "make ü"), "c")]
    path = emit_dataset(samples, tmp_path / "d.jsonl")
    assert load_dataset(path) == samples
    first = json.loads(path.read_text(encoding="utf-8").splitlines()[0])
    assert list(first) == ["episode_id", "image_path", "task_instruction", "motion_description", "label", "prompt",
                           "category"]


def test_build_dataset_errors(tmp_path, corpus):
    with pytest.raises(InvalidArgumentError):
        build_dataset([], tmp_path / "x.jsonl")
    with pytest.raises(CorpusTooSmallError):
        build_dataset(corpus[:3], tmp_path / "x.jsonl", n_neg=10)
    with pytest.raises(MissingRasterError):
        build_dataset(corpus, tmp_path / "x.jsonl", representation="storyboard")


def test_storyboard_dataset_uses_frames(tmp_path, corpus):
    from dataclasses import replace

    frames = tuple(Frame.blank(16, 12, (i * 20, 0, 0), i) for i in range(6))
    eps = [replace(e, frames=frames) for e in corpus[:12]]
    samples = build_dataset(eps, tmp_path / "sb.jsonl", n_neg=3, representation="storyboard")
    assert len(samples) == 12 * 4
    assert all(s.image_path.endswith("_storyboard.png") for s in samples)


def test_split_examples(corpus):
    train, val, test = split_corpus(corpus, (1, 0, 0), seed=1)
    assert len(train) == 30 and not val and not test
    assert split_corpus(corpus, (0.6, 0.2, 0.2), seed=9) == split_corpus(corpus, (0.6, 0.2, 0.2), seed=9)
    with pytest.raises(InvalidArgumentError):
        split_corpus(corpus, (0.5, 0.2, 0.2))
    with pytest.raises(InvalidArgumentError):
        split_corpus([], (1, 0, 0))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1000), st.sampled_from([(0.8, 0.1, 0.1), (0.5, 0.25, 0.25), (0.34, 0.33, 0.33)]))
def test_split_is_stratified_partition(seed, ratios):
    eps = synthetic_corpus(24, seed=2)
    parts = split_corpus(eps, ratios, seed)
    ids = [e.id for part in parts for e in part]
    assert sorted(ids) == sorted(e.id for e in eps)
    for cat in {e.category for e in eps}:
        n = sum(e.category == cat for e in eps)
        n_train = sum(e.category == cat for e in parts[0])
        assert n_train == round(ratios[0] * n)
