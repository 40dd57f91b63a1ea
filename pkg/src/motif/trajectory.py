"""Core data model: frames, keypoint tracks, scenes and episodes.

Coordinates are image pixels with the origin at the top-left corner and
``y`` growing downward. Every type is a frozen dataclass; operations return
new objects.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DegeneratePathError, InvalidArgumentError, MotifError


@dataclass(frozen=True)
class Frame:
    index: int
    width: int
    height: int
    pixels: np.ndarray | None = field(default=None, compare=False, repr=False)

    def has_pixels(self) -> bool:
        return self.pixels is not None

    def raster(self) -> np.ndarray:
        """Pixels as an ``(height, width, 3)`` uint8 array."""
        return np.asarray(self.pixels, dtype=np.uint8).reshape(self.height, self.width, 3)

    @classmethod
    def from_array(cls, array: np.ndarray, index: int = 0) -> "Frame":
        array = np.ascontiguousarray(array, dtype=np.uint8)
        if array.ndim != 3 or array.shape[2] != 3:
            raise InvalidArgumentError("frame array must have shape (height, width, 3)")
        array.setflags(write=False)
        return cls(index=index, width=array.shape[1], height=array.shape[0], pixels=array)

    @classmethod
    def blank(cls, width: int, height: int, color=(0, 0, 0), index: int = 0) -> "Frame":
        array = np.empty((height, width, 3), dtype=np.uint8)
        array[:] = color
        return cls.from_array(array, index)


@dataclass(frozen=True)
class KeypointTrack:
    keypoint_id: int
    samples: tuple[tuple[float, float, float], ...]

    @classmethod
    def from_xy(cls, xy, keypoint_id: int = 0, t0: int = 0) -> "KeypointTrack":
        xy = np.asarray(xy, dtype=float)
        return cls(keypoint_id, tuple((float(t0 + i), float(x), float(y)) for i, (x, y) in enumerate(xy)))

    @property
    def xy(self) -> np.ndarray:
        return np.array([(x, y) for _, x, y in self.samples], dtype=float).reshape(-1, 2)

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _, _ in self.samples], dtype=float)

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class Trajectory:
    tracks: tuple[KeypointTrack, ...]
    point_of_interest: int = 0

    @classmethod
    def single(cls, xy, keypoint_id: int = 0) -> "Trajectory":
        return cls((KeypointTrack.from_xy(xy, keypoint_id),), keypoint_id)

    @property
    def poi_track(self) -> KeypointTrack:
        for track in self.tracks:
            if track.keypoint_id == self.point_of_interest:
                return track
        raise MotifError(f"point of interest {self.point_of_interest} has no track")

    def transformed(self, scale: float = 1.0, offset=(0.0, 0.0)) -> "Trajectory":
        ox, oy = offset
        tracks = tuple(
            KeypointTrack(tr.keypoint_id, tuple((t, x * scale + ox, y * scale + oy) for t, x, y in tr.samples))
            for tr in self.tracks
        )
        return Trajectory(tracks, self.point_of_interest)


@dataclass(frozen=True)
class Region:
    """Axis-aligned box or simple polygon, stored as polygon vertices."""

    kind: str
    points: tuple[tuple[float, float], ...]

    @classmethod
    def box(cls, x0: float, y0: float, x1: float, y1: float) -> "Region":
        x0, x1 = sorted((float(x0), float(x1)))
        y0, y1 = sorted((float(y0), float(y1)))
        return cls("box", ((x0, y0), (x1, y0), (x1, y1), (x0, y1)))

    @classmethod
    def polygon(cls, points) -> "Region":
        return cls("polygon", tuple((float(x), float(y)) for x, y in points))

    @property
    def vertices(self) -> np.ndarray:
        return np.array(self.points, dtype=float).reshape(-1, 2)

    @property
    def area(self) -> float:
        v = self.vertices
        if len(v) < 3:
            return 0.0
        x, y = v[:, 0], v[:, 1]
        return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))

    @property
    def centroid(self) -> np.ndarray:
        v = self.vertices
        if self.kind == "box":
            return v.mean(axis=0)
        x, y = v[:, 0], v[:, 1]
        cross = x * np.roll(y, -1) - np.roll(x, -1) * y
        a = cross.sum() / 2.0
        if abs(a) < 1e-15:
            return v.mean(axis=0)
        cx = ((x + np.roll(x, -1)) * cross).sum() / (6 * a)
        cy = ((y + np.roll(y, -1)) * cross).sum() / (6 * a)
        return np.array([cx, cy])

    def transformed(self, scale: float = 1.0, offset=(0.0, 0.0)) -> "Region":
        ox, oy = offset
        return Region(self.kind, tuple((x * scale + ox, y * scale + oy) for x, y in self.points))

    def contains(self, pts: np.ndarray) -> np.ndarray:
        """Strict interior test for an ``(n, 2)`` array."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        v = self.vertices
        if self.kind == "box":
            (x0, y0), (x1, y1) = v.min(axis=0), v.max(axis=0)
            return (pts[:, 0] > x0) & (pts[:, 0] < x1) & (pts[:, 1] > y0) & (pts[:, 1] < y1)
        inside = np.zeros(len(pts), dtype=bool)
        px, py = pts[:, 0], pts[:, 1]
        for (xa, ya), (xb, yb) in zip(v, np.roll(v, -1, axis=0)):
            crosses = (ya > py) != (yb > py)
            with np.errstate(divide="ignore", invalid="ignore"):
                x_at = xa + (py - ya) * (xb - xa) / (yb - ya)
            inside ^= crosses & (px < x_at)
        return inside & (self.distance(pts, signed_inside=False) > 0)

    def distance(self, pts: np.ndarray, signed_inside: bool = True) -> np.ndarray:
        """Distance from each point to the region boundary; 0 inside when ``signed_inside``."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        v = self.vertices
        best = np.full(len(pts), np.inf)
        for a, b in zip(v, np.roll(v, -1, axis=0)):
            ab = b - a
            denom = float(ab @ ab)
            t = np.clip(((pts - a) @ ab) / denom, 0.0, 1.0) if denom > 0 else np.zeros(len(pts))
            proj = a + t[:, None] * ab
            best = np.minimum(best, np.hypot(*(pts - proj).T))
        if signed_inside:
            best = np.where(self.contains(pts), 0.0, best)
        return best

    def intersects_segment(self, p: np.ndarray, q: np.ndarray) -> bool:
        p, q = np.asarray(p, float), np.asarray(q, float)
        if self.contains(np.vstack([p, q, (p + q) / 2])).any():
            return True
        v = self.vertices
        for a, b in zip(v, np.roll(v, -1, axis=0)):
            if _segments_cross(p, q, a, b):
                return True
        return False


def _cross2(u, v) -> float:
    return float(u[0] * v[1] - u[1] * v[0])


def _segments_cross(p, q, a, b) -> bool:
    d1 = _cross2(q - p, a - p)
    d2 = _cross2(q - p, b - p)
    d3 = _cross2(b - a, p - a)
    d4 = _cross2(b - a, q - a)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


@dataclass(frozen=True)
class SceneObject:
    label: str
    region: Region


@dataclass(frozen=True)
class Episode:
    id: str
    trajectory: Trajectory
    task_instruction: str
    motion_description: str
    scene: tuple[SceneObject, ...] = ()
    category: str = "uncategorized"
    frames: tuple[Frame, ...] | None = field(default=None, compare=False, repr=False)
    frames_dir: str | None = None
    image_size: tuple[int, int] | None = None
    heading: str | None = None


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


# --- geometry -------------------------------------------------------------


def arc_lengths(xy: np.ndarray) -> np.ndarray:
    """Cumulative arc length, starting at 0."""
    steps = np.hypot(*np.diff(xy, axis=0).T) if len(xy) > 1 else np.zeros(0)
    return np.concatenate([[0.0], np.cumsum(steps)])


def resample_points(xy: np.ndarray, n: int) -> np.ndarray:
    if n < 2:
        raise InvalidArgumentError(f"n must be >= 2, got {n}")
    xy = np.asarray(xy, dtype=float)
    s = arc_lengths(xy)
    total = s[-1]
    if len(xy) < 2 or total <= 0.0:
        raise DegeneratePathError("path has zero length")
    targets = np.linspace(0.0, total, n)
    # searchsorted on the strictly increasing part avoids zero-length pieces
    idx = np.clip(np.searchsorted(s, targets, side="right") - 1, 0, len(s) - 2)
    while True:
        piece = s[idx + 1] - s[idx]
        bad = (piece <= 0) & (idx < len(s) - 2)
        if not bad.any():
            break
        idx = np.where(bad, idx + 1, idx)
    piece = s[idx + 1] - s[idx]
    frac = np.divide(targets - s[idx], piece, out=np.zeros_like(targets), where=piece > 0)
    out = xy[idx] + np.clip(frac, 0.0, 1.0)[:, None] * (xy[idx + 1] - xy[idx])
    out[0], out[-1] = xy[0], xy[-1]
    return out


def resample_arclength(track: KeypointTrack, n: int) -> KeypointTrack:
    """Resample ``track`` to ``n`` points evenly spaced by arc length.

    Timestamps are spread evenly between the first and last sample time.
    """
    xy = resample_points(track.xy, n)
    times = np.linspace(track.samples[0][0], track.samples[-1][0], n)
    return KeypointTrack(track.keypoint_id, tuple((float(t), float(x), float(y)) for t, (x, y) in zip(times, xy)))


def bounding_box(track: KeypointTrack) -> tuple[float, float, float, float]:
    xy = track.xy
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])


def validate_episode(ep: Episode) -> list[Violation]:
    out: list[Violation] = []

    def add(code, msg):
        out.append(Violation(code, msg))

    if not ep.id:
        add("empty-id", "episode id is empty")
    if not ep.task_instruction.strip():
        add("empty-task-instruction", "task instruction is empty")
    if not ep.motion_description.strip():
        add("empty-motion-description", "motion description is empty")
    traj = ep.trajectory
    if not traj.tracks:
        add("no-tracks", "trajectory has no tracks")
    ids = [tr.keypoint_id for tr in traj.tracks]
    if len(set(ids)) != len(ids):
        add("duplicate-keypoint-id", "keypoint ids are not unique")
    if traj.tracks and traj.point_of_interest not in ids:
        add("missing-poi-track", f"point of interest {traj.point_of_interest} has no track")
    ranges = set()
    for tr in traj.tracks:
        if len(tr.samples) < 2:
            add("track-too-short", f"track {tr.keypoint_id} has {len(tr.samples)} sample(s)")
        ts = [s[0] for s in tr.samples]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            add("time-not-increasing", f"track {tr.keypoint_id} timestamps are not strictly increasing")
        if any(not (math.isfinite(x) and math.isfinite(y)) for _, x, y in tr.samples):
            add("non-finite-coordinate", f"track {tr.keypoint_id} has non-finite coordinates")
        if ts:
            ranges.add((ts[0], ts[-1]))
    if len(ranges) > 1:
        add("track-range-mismatch", "tracks do not share the same frame-index range")
    for obj in ep.scene:
        if not obj.label.strip():
            add("empty-object-label", "scene object label is empty")
        if obj.region.area <= 0:
            add("degenerate-region", f"region of {obj.label!r} has zero area")
    for frame in ep.frames or ():
        if frame.width < 1 or frame.height < 1:
            add("bad-frame-size", f"frame {frame.index} has non-positive size")
        elif frame.pixels is not None and np.asarray(frame.pixels).size != frame.width * frame.height * 3:
            add("bad-frame-raster", f"frame {frame.index} raster size does not match width*height*3")
    return out


def check_episode(ep: Episode) -> Episode:
    problems = validate_episode(ep)
    if problems:
        raise InvalidArgumentError("; ".join(f"{v.code}: {v.message}" for v in problems))
    return ep


# --- JSON -----------------------------------------------------------------


def region_to_json(region: Region) -> dict:
    if region.kind == "box":
        (x0, y0), (x1, y1) = region.vertices.min(axis=0), region.vertices.max(axis=0)
        return {"kind": "box", "x0": float(x0), "y0": float(y0), "x1": float(x1), "y1": float(y1)}
    return {"kind": "polygon", "points": [list(p) for p in region.points]}


def region_from_json(data: dict) -> Region:
    kind = data.get("kind", "box")
    if kind == "box":
        return Region.box(data["x0"], data["y0"], data["x1"], data["y1"])
    if kind == "polygon":
        return Region.polygon(data["points"])
    raise InvalidArgumentError(f"unknown region kind {kind!r}")


def episode_to_json(ep: Episode) -> dict:
    data = {
        "id": ep.id,
        "task_instruction": ep.task_instruction,
        "motion_description": ep.motion_description,
        "category": ep.category,
        "scene": [{"label": o.label, "region": region_to_json(o.region)} for o in ep.scene],
        "trajectory": {
            "point_of_interest": ep.trajectory.point_of_interest,
            "tracks": [
                {"keypoint_id": tr.keypoint_id, "samples": [list(s) for s in tr.samples]}
                for tr in ep.trajectory.tracks
            ],
        },
    }
    if ep.frames_dir is not None:
        data["frames_dir"] = ep.frames_dir
    if ep.image_size is not None:
        data["image_size"] = list(ep.image_size)
    if ep.heading is not None:
        data["heading"] = ep.heading
    return data


def episode_from_json(data: dict, base_dir: str | Path | None = None) -> Episode:
    try:
        traj = data["trajectory"]
        tracks = tuple(
            KeypointTrack(int(tr["keypoint_id"]), tuple((float(t), float(x), float(y)) for t, x, y in tr["samples"]))
            for tr in traj["tracks"]
        )
        frames_dir = data.get("frames_dir")
        if frames_dir is not None and base_dir is not None and not Path(frames_dir).is_absolute():
            frames_dir = str(Path(base_dir) / frames_dir)
        size = data.get("image_size")
        return Episode(
            id=str(data["id"]),
            trajectory=Trajectory(tracks, int(traj["point_of_interest"])),
            task_instruction=data["task_instruction"],
            motion_description=data["motion_description"],
            scene=tuple(SceneObject(o["label"], region_from_json(o["region"])) for o in data.get("scene", [])),
            category=data.get("category", "uncategorized"),
            frames_dir=frames_dir,
            image_size=tuple(size) if size else None,
            heading=data.get("heading"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"malformed episode JSON: {exc!r}") from None


def save_episode(ep: Episode, path: str | Path) -> None:
    Path(path).write_text(json.dumps(episode_to_json(ep), ensure_ascii=False) + "\n", encoding="utf-8")


def load_episode(path: str | Path) -> Episode:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidArgumentError(f"cannot read episode {path}: {exc}") from None
    return episode_from_json(data, base_dir=path.parent)


def load_corpus(directory: str | Path) -> list[Episode]:
    """Load every ``*.json`` episode in ``directory``, sorted by id."""
    directory = Path(directory)
    if not directory.is_dir():
        raise InvalidArgumentError(f"corpus directory not found: {directory}")
    episodes = [load_episode(p) for p in sorted(directory.glob("*.json"))]
    ids = [e.id for e in episodes]
    if len(set(ids)) != len(ids):
        raise InvalidArgumentError("episode ids are not unique within the corpus")
    return sorted(episodes, key=lambda e: e.id)


def load_frames(ep: Episode) -> tuple[Frame, ...]:
    """Return in-memory frames, or read ``frame_%06d.png`` files from ``frames_dir``."""
    if ep.frames is not None:
        return ep.frames
    if ep.frames_dir is None:
        return ()
    from PIL import Image

    frames = []
    for path in sorted(Path(ep.frames_dir).glob("frame_*.png")):
        index = int(path.stem.split("_")[-1])
        with Image.open(path) as img:
            frames.append(Frame.from_array(np.asarray(img.convert("RGB")), index))
    return tuple(frames)


def all_points(tracks: Iterable[KeypointTrack]) -> np.ndarray:
    arrays = [tr.xy for tr in tracks]
    return np.vstack(arrays) if arrays else np.zeros((0, 2))


def dedupe_consecutive(xy: Sequence, tol: float = 0.0) -> np.ndarray:
    xy = np.asarray(xy, dtype=float)
    if len(xy) == 0:
        return xy
    keep = [0]
    for i in range(1, len(xy)):
        if np.hypot(*(xy[i] - xy[keep[-1]])) > tol:
            keep.append(i)
    return xy[keep]
