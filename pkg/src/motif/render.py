"""Trajectory overlays and keyframe storyboards as deterministic PNG images.

Lines are integer Bresenham lines stamped with a disc brush, so rendering is
exact and repeatable. Colors along the keypoint overlay run from
``start_color`` to ``end_color``; the final sample gets a filled disc.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image

from .config import DEFAULT, DEFAULT_PALETTE, Config
from .errors import InvalidArgumentError, MissingRasterError
from .trajectory import Frame, KeypointTrack, dedupe_consecutive, resample_points

STORYBOARD_GRIDS = {2: (1, 2), 4: (2, 2), 9: (3, 3)}

# 5x7 bitmap digits, one string of five bits per row
_FONT = {
    "0": ("01110", "10001", "10011", "10101", "11001", "10001", "01110"),
    "1": ("00100", "01100", "00100", "00100", "00100", "00100", "01110"),
    "2": ("01110", "10001", "00001", "00010", "00100", "01000", "11111"),
    "3": ("11111", "00010", "00100", "00010", "00001", "10001", "01110"),
    "4": ("00010", "00110", "01010", "10010", "11111", "00010", "00010"),
    "5": ("11111", "10000", "11110", "00001", "00001", "10001", "01110"),
    "6": ("00110", "01000", "10000", "11110", "10001", "10001", "01110"),
    "7": ("11111", "00001", "00010", "00100", "01000", "01000", "01000"),
    "8": ("01110", "10001", "10001", "01110", "10001", "10001", "01110"),
    "9": ("01110", "10001", "10001", "01111", "00001", "00010", "01100"),
}
_LABEL_SCALE = 2
_LABEL_PAD = 2
LABEL_HEIGHT = 7 * _LABEL_SCALE + 2 * _LABEL_PAD


def round_half_up(x) -> np.ndarray:
    return np.floor(np.asarray(x, dtype=float) + 0.5).astype(np.int64)


def lerp_color(a, b, t: float) -> tuple[int, int, int]:
    a, b = np.asarray(a, float), np.asarray(b, float)
    return tuple(int(v) for v in round_half_up(a + (b - a) * t))


def gradient_colors(m: int, cfg: Config = DEFAULT) -> list[tuple[int, int, int]]:
    if m == 1:
        return [tuple(cfg.start_color)]
    return [lerp_color(cfg.start_color, cfg.end_color, i / (m - 1)) for i in range(m)]


def bresenham(x0: int, y0: int, x1: int, y1: int) -> np.ndarray:
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx, sy = (1 if x0 < x1 else -1), (1 if y0 < y1 else -1)
    err = dx + dy
    pts = []
    while True:
        pts.append((x0, y0))
        if x0 == x1 and y0 == y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy
    return np.array(pts, dtype=np.int64)


def disc_offsets(radius: float) -> np.ndarray:
    r = int(np.floor(radius))
    ys, xs = np.mgrid[-r:r + 1, -r:r + 1]
    keep = xs * xs + ys * ys <= radius * radius
    return np.column_stack([xs[keep], ys[keep]])


def _stamp(raster: np.ndarray, centers: np.ndarray, offsets: np.ndarray, color) -> None:
    h, w = raster.shape[:2]
    pts = (centers[:, None, :] + offsets[None, :, :]).reshape(-1, 2)
    ok = (pts[:, 0] >= 0) & (pts[:, 0] < w) & (pts[:, 1] >= 0) & (pts[:, 1] < h)
    pts = pts[ok]
    raster[pts[:, 1], pts[:, 0]] = color


def _require_pixels(frame: Frame) -> np.ndarray:
    if frame is None or not frame.has_pixels():
        raise MissingRasterError("frame has no pixel raster")
    return frame.raster().copy()


def overlay_points(track: KeypointTrack, cfg: Config = DEFAULT) -> np.ndarray:
    """Sample positions used for drawing, in pixels."""
    xy = dedupe_consecutive(track.xy)
    if len(xy) < 2:
        return xy
    if cfg.overlay_samples:
        xy = resample_points(xy, cfg.overlay_samples)
    return xy


def draw_polyline(raster: np.ndarray, xy: np.ndarray, colors, line_width: int) -> None:
    """Draw segment ``i`` of ``xy`` with ``colors[i]``.

    Segments are stamped last to first, so wherever brushes overlap the
    earlier segment wins and each sample shows the color of the segment
    leaving it.
    """
    brush = disc_offsets(line_width / 2.0)
    pts = round_half_up(xy)
    if len(pts) == 1:
        _stamp(raster, pts, brush, colors[0])
        return
    for i in range(len(pts) - 2, -1, -1):
        p, q = pts[i], pts[i + 1]
        _stamp(raster, bresenham(int(p[0]), int(p[1]), int(q[0]), int(q[1])), brush, colors[i])


def render_keypoint_overlay(base: Frame, track: KeypointTrack, cfg: Config = DEFAULT) -> Frame:
    raster = _require_pixels(base)
    xy = overlay_points(track, cfg)
    m = max(len(xy) - 1, 1)
    draw_polyline(raster, xy, gradient_colors(m, cfg), cfg.line_width)
    if cfg.endpoint_radius > 0:
        end = round_half_up(xy[-1])[None, :]
        _stamp(raster, end, disc_offsets(cfg.endpoint_radius), cfg.endpoint_color)
    return Frame.from_array(raster, base.index)


def render_flow_overlay(base: Frame, tracks, cfg: Config = DEFAULT, palette=DEFAULT_PALETTE) -> Frame:
    tracks = sorted(tracks, key=lambda tr: tr.keypoint_id)
    if not tracks:
        raise InvalidArgumentError("flow overlay needs at least one track")
    raster = _require_pixels(base)
    for tr in tracks:
        xy = overlay_points(tr, cfg)
        color = palette[tr.keypoint_id % len(palette)]
        draw_polyline(raster, xy, [color] * max(len(xy) - 1, 1), cfg.line_width)
    return Frame.from_array(raster, base.index)


# --- keyframes -------------------------------------------------------------


def frame_embedding(frame: Frame) -> np.ndarray:
    """16x16 box-filtered grayscale, flattened to 256 values in [0, 1]."""
    rgb = _require_pixels(frame).astype(np.float64)
    gray = (rgb @ np.array([0.299, 0.587, 0.114])) / 255.0
    small = Image.fromarray(gray.astype(np.float32)).resize((16, 16), Image.Resampling.BOX)
    return np.asarray(small, dtype=np.float64).reshape(-1)


def kmeans(points: np.ndarray, k: int, seed: int = 0, max_iter: int = 100, tol: float = 1e-6):
    """Lloyd's algorithm with k-means++ seeding; returns ``(centroids, labels)``."""
    rng = np.random.default_rng(seed)
    n = len(points)
    centroids = [points[int(rng.integers(n))]]
    for _ in range(1, k):
        d2 = np.min([((points - c) ** 2).sum(axis=1) for c in centroids], axis=0)
        total = d2.sum()
        if total <= 0:
            idx = int(np.flatnonzero(d2 >= 0)[0])
        else:
            idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centroids.append(points[idx])
    centroids = np.array(centroids, dtype=np.float64)
    labels = np.zeros(n, dtype=np.int64)
    for _ in range(max_iter):
        dist = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        labels = np.argmin(dist, axis=1)
        new = centroids.copy()
        for j in range(k):
            members = points[labels == j]
            if len(members):
                new[j] = members.mean(axis=0)
        shift = float(np.sqrt(((new - centroids) ** 2).sum(axis=1)).max())
        centroids = new
        if shift < tol:
            break
    dist = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    return centroids, np.argmin(dist, axis=1)


def select_keyframes(frames, n: int, seed: int = 0, cfg: Config = DEFAULT) -> list[int]:
    """Cluster frame embeddings into ``n`` groups and return one index per group.

    Identical frames share one embedding and are clustered once, represented
    by their lowest index. Missing clusters are filled with the lowest unused
    frame indices.
    """
    frames = list(frames)
    if n < 1 or n > len(frames):
        raise InvalidArgumentError(f"need 1 <= n <= {len(frames)}, got {n}")
    first_index: dict[bytes, int] = {}
    vectors = []
    for i, frame in enumerate(frames):
        emb = frame_embedding(frame)
        key = emb.tobytes()
        if key not in first_index:
            first_index[key] = i
            vectors.append(emb)
    owners = list(first_index.values())
    points = np.array(vectors)
    k = min(n, len(points))
    centroids, labels = kmeans(points, k, seed, cfg.kmeans_max_iter, cfg.kmeans_tol)
    chosen = set()
    for j in range(k):
        members = np.flatnonzero(labels == j)
        if not len(members):
            continue
        d = ((points[members] - centroids[j]) ** 2).sum(axis=1)
        best = min(members[d <= d.min()], key=lambda m: owners[m])
        chosen.add(owners[int(best)])
    for i in range(len(frames)):
        if len(chosen) >= n:
            break
        chosen.add(i)
    return sorted(chosen)


# --- storyboard ------------------------------------------------------------


def draw_label(raster: np.ndarray, text: str, x: int, y: int, color=(255, 255, 255)) -> None:
    s = _LABEL_SCALE
    for ch in text:
        glyph = _FONT.get(ch)
        if glyph is not None:
            for row, bits in enumerate(glyph):
                for col, bit in enumerate(bits):
                    if bit == "1":
                        raster[y + row * s:y + (row + 1) * s, x + col * s:x + (col + 1) * s] = color
        x += 6 * s


def _fit(raster: np.ndarray, width: int, height: int) -> np.ndarray:
    """Uniform nearest-neighbour scale into a black ``width x height`` cell."""
    h, w = raster.shape[:2]
    scale = min(width / w, height / h)
    nw, nh = max(1, int(w * scale)), max(1, int(h * scale))
    small = np.asarray(Image.fromarray(raster).resize((nw, nh), Image.Resampling.NEAREST))
    cell = np.zeros((height, width, 3), dtype=np.uint8)
    y0, x0 = (height - nh) // 2, (width - nw) // 2
    cell[y0:y0 + nh, x0:x0 + nw] = small
    return cell


def render_storyboard(frames, n: int, cfg: Config = DEFAULT, seed: int = 0) -> Frame:
    if n not in STORYBOARD_GRIDS:
        raise InvalidArgumentError(f"storyboard supports n in {sorted(STORYBOARD_GRIDS)}, got {n}")
    frames = list(frames)
    picks = select_keyframes(frames, n, seed, cfg)
    rows, cols = STORYBOARD_GRIDS[n]
    cw, ch = frames[0].width, frames[0].height
    cell_h = ch + LABEL_HEIGHT
    out = np.zeros((rows * cell_h, cols * cw, 3), dtype=np.uint8)
    for slot, idx in enumerate(picks):
        r, c = divmod(slot, cols)
        y, x = r * cell_h, c * cw
        draw_label(out, str(frames[idx].index), x + _LABEL_PAD, y + _LABEL_PAD)
        out[y + LABEL_HEIGHT:y + cell_h, x:x + cw] = _fit(frames[idx].raster(), cw, ch)
    return Frame.from_array(out)


# --- PNG -------------------------------------------------------------------


def png_bytes(frame: Frame) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(_require_pixels(frame)).save(buf, format="PNG", compress_level=6, optimize=False)
    return buf.getvalue()


def save_png(frame: Frame, path: str | Path) -> Path:
    path = Path(path)
    path.write_bytes(png_bytes(frame))
    return path


def load_png(path: str | Path, index: int = 0) -> Frame:
    with Image.open(path) as im:
        return Frame.from_array(np.asarray(im.convert("RGB")), index)
