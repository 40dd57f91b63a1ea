"""Fine-tuning dataset construction: positives, mined negatives, JSONL, splits."""

from __future__ import annotations

import json
import os
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

from .config import DEFAULT, Config
from .dsl import TfidfIndex
from .errors import CorpusTooSmallError, InvalidArgumentError, MissingArtifactError, MissingRasterError
from .render import render_flow_overlay, render_keypoint_overlay, render_storyboard, save_png
from .trajectory import Episode, Frame, load_frames

QUESTION = "Is the agent following the motion description or not? Express the answer as 1 or 0."
SIMILARITY_BACKEND = "tfidf-cosine over lowercase word tokens (stands in for sentence-embedding similarity)"
REPRESENTATIONS = ("keypoint", "flow", "storyboard")


@dataclass(frozen=True)
class Sample:
    episode_id: str
    image_path: str
    task_instruction: str
    motion_description: str
    label: int
    prompt: str
    category: str = "uncategorized"

    def to_json_line(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=False)

    @classmethod
    def from_json(cls, data: dict) -> "Sample":
        return cls(**{k: data[k] for k in cls.__dataclass_fields__ if k in data})


def make_prompt(task_instruction: str, motion_description: str) -> str:
    return f"Task instruction: {task_instruction}\nMotion description: {motion_description}\n{QUESTION}"


def build_positive(ep: Episode, image_path, check_exists: bool = True) -> Sample:
    if check_exists and not Path(image_path).is_file():
        raise MissingArtifactError(f"rendered image not found: {image_path}")
    return Sample(ep.id, str(image_path), ep.task_instruction, ep.motion_description, 1,
                  make_prompt(ep.task_instruction, ep.motion_description), ep.category)


def build_negatives(ep: Episode, image_path, descriptions) -> list[Sample]:
    return [Sample(ep.id, str(image_path), ep.task_instruction, d, 0, make_prompt(ep.task_instruction, d), ep.category)
            for d in descriptions]


def mine_negatives(ep_or_description, corpus_descriptions, n_neg: int = 10,
                   index: TfidfIndex | None = None) -> list[str]:
    """The ``n_neg`` corpus descriptions least similar to the episode's own.

    Ties are broken lexicographically; anything identical in text or in
    TF-IDF vector to the query is excluded.
    """
    own = ep_or_description.motion_description if isinstance(ep_or_description, Episode) else ep_or_description
    pool = sorted(set(corpus_descriptions))
    index = index or TfidfIndex(pool)
    scored = []
    for d in pool:
        if d == own:
            continue
        sim = index.similarity(own, d)
        if sim >= 1.0 - 1e-12:
            continue
        scored.append((round(sim, 12), d))
    if len(scored) < n_neg:
        raise CorpusTooSmallError(
            f"need {n_neg} distinct negative descriptions, corpus offers {len(scored)} (short by {n_neg - len(scored)})")
    scored.sort()
    return [d for _, d in scored[:n_neg]]


def emit_dataset(samples, path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            for s in samples:
                fh.write(s.to_json_line() + "\n")
    except OSError as exc:
        raise MissingArtifactError(f"cannot write dataset {path}: {exc}") from None
    return path


def load_dataset(path) -> list[Sample]:
    path = Path(path)
    if not path.is_file():
        raise MissingArtifactError(f"dataset not found: {path}")
    with path.open(encoding="utf-8") as fh:
        return [Sample.from_json(json.loads(line)) for line in fh if line.strip()]


def split_corpus(episodes, ratios=(0.8, 0.1, 0.1), seed: int = 0):
    """Seeded shuffle partition, stratified by category."""
    episodes = list(episodes)
    if not episodes:
        raise InvalidArgumentError("cannot split an empty corpus")
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise InvalidArgumentError(f"ratios must be three non-negative numbers summing to 1, got {ratios}")
    by_cat: dict[str, list[Episode]] = {}
    for ep in sorted(episodes, key=lambda e: e.id):
        by_cat.setdefault(ep.category, []).append(ep)
    rng = random.Random(seed)
    train, val, test = [], [], []
    for cat in sorted(by_cat):
        group = by_cat[cat]
        rng.shuffle(group)
        n = len(group)
        n_train = min(n, round(ratios[0] * n))
        n_val = min(n - n_train, round(ratios[1] * n))
        train += group[:n_train]
        val += group[n_train:n_train + n_val]
        test += group[n_train + n_val:]
    key = lambda e: e.id  # noqa: E731
    return sorted(train, key=key), sorted(val, key=key), sorted(test, key=key)


def _base_frame(ep: Episode) -> Frame:
    frames = ep.frames or (load_frames(ep) if ep.frames_dir else ())
    if frames:
        return frames[-1]
    if ep.image_size:
        w, h = ep.image_size
    else:
        xy = ep.trajectory.poi_track.xy
        w, h = (int(v) + 16 for v in xy.max(axis=0))
    return Frame.blank(max(w, 1), max(h, 1))


def render_episode(ep: Episode, representation: str, out_path, cfg: Config = DEFAULT, n_frames: int = 4) -> Path:
    if representation == "keypoint":
        frame = render_keypoint_overlay(_base_frame(ep), ep.trajectory.poi_track, cfg)
    elif representation == "flow":
        frame = render_flow_overlay(_base_frame(ep), ep.trajectory.tracks, cfg)
    elif representation == "storyboard":
        frames = ep.frames or (load_frames(ep) if ep.frames_dir else ())
        if not frames:
            raise MissingRasterError(f"episode {ep.id} has no frames for a storyboard")
        frame = render_storyboard(frames, n_frames, cfg)
    else:
        raise InvalidArgumentError(f"unknown representation {representation!r}")
    return save_png(frame, out_path)


def build_dataset(episodes, out_path, n_neg: int | None = None, representation: str = "keypoint",
                  image_dir=None, cfg: Config = DEFAULT, jobs: int = 1) -> list[Sample]:
    """Render every episode, pair it with its own and mined descriptions, write JSONL.

    Image paths in the JSONL are relative to the output file's directory. A
    ``<out>.meta.json`` sidecar records the similarity backend.
    """
    n_neg = cfg.n_neg if n_neg is None else n_neg
    episodes = sorted(episodes, key=lambda e: e.id)
    if not episodes:
        raise InvalidArgumentError("corpus is empty")
    ids = [e.id for e in episodes]
    if len(set(ids)) != len(ids):
        raise InvalidArgumentError("episode ids must be unique")
    out_path = Path(out_path)
    image_dir = Path(image_dir) if image_dir is not None else out_path.parent / "images"
    image_dir.mkdir(parents=True, exist_ok=True)
    pool = sorted({e.motion_description for e in episodes})
    index = TfidfIndex(pool)

    def draw(ep):
        return render_episode(ep, representation, image_dir / f"{ep.id}_{representation}.png", cfg)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            images = list(executor.map(draw, episodes))
    else:
        images = [draw(ep) for ep in episodes]
    samples = []
    for ep, img in zip(episodes, images):
        build_positive(ep, img)
        ref = Path(os.path.relpath(img, out_path.parent)).as_posix()
        samples.append(build_positive(ep, ref, check_exists=False))
        samples.extend(build_negatives(ep, ref, mine_negatives(ep, pool, n_neg, index)))
    emit_dataset(samples, out_path)
    meta = {
        "similarity": SIMILARITY_BACKEND,
        "n_neg": n_neg,
        "representation": representation,
        "episodes": len(episodes),
        "samples": len(samples),
        "question": QUESTION,
    }
    Path(str(out_path) + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return samples

