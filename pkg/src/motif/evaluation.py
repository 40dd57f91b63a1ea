"""Precision/recall with exact rational arithmetic and per-category tables."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import InvalidArgumentError, MissingArtifactError


@dataclass(frozen=True)
class Confusion:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "Confusion") -> "Confusion":
        return Confusion(self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn)

    @property
    def precision(self) -> Fraction | None:
        den = self.tp + self.fp
        return Fraction(self.tp, den) if den else None

    @property
    def recall(self) -> Fraction | None:
        den = self.tp + self.fn
        return Fraction(self.tp, den) if den else None


@dataclass(frozen=True)
class Metrics:
    precision: Fraction | None
    recall: Fraction | None
    confusion: Confusion
    by_category: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        c = self.confusion
        return {
            "precision": as_decimal(self.precision),
            "recall": as_decimal(self.recall),
            "confusion": {"tp": c.tp, "fp": c.fp, "tn": c.tn, "fn": c.fn},
        }


def as_decimal(x: Fraction | None) -> float | None:
    return None if x is None else float(x)


def _check_binary(values, name):
    for v in values:
        if v not in (0, 1):
            raise InvalidArgumentError(f"{name} must be 0 or 1, got {v!r}")


def confusion(predictions, labels) -> Confusion:
    predictions, labels = list(predictions), list(labels)
    if len(predictions) != len(labels):
        raise InvalidArgumentError(f"length mismatch: {len(predictions)} predictions vs {len(labels)} labels")
    if not labels:
        raise InvalidArgumentError("nothing to evaluate")
    _check_binary(predictions, "predictions")
    _check_binary(labels, "labels")
    tp = sum(1 for p, y in zip(predictions, labels) if p == 1 and y == 1)
    fp = sum(1 for p, y in zip(predictions, labels) if p == 1 and y == 0)
    fn = sum(1 for p, y in zip(predictions, labels) if p == 0 and y == 1)
    return Confusion(tp, fp, len(labels) - tp - fp - fn, fn)


def evaluate(predictions, labels, categories=None) -> Metrics:
    """Precision = TP/(TP+FP), recall = TP/(TP+FN); ``None`` when undefined."""
    c = confusion(predictions, labels)
    by_cat = {}
    if categories is not None:
        categories = list(categories)
        if len(categories) != c.total:
            raise InvalidArgumentError("categories must align with labels")
        groups: dict[str, list[int]] = {}
        for i, cat in enumerate(categories):
            groups.setdefault(cat, []).append(i)
        preds, labs = list(predictions), list(labels)
        by_cat = {cat: confusion([preds[i] for i in idx], [labs[i] for i in idx]) for cat, idx in sorted(groups.items())}
    return Metrics(c.precision, c.recall, c, by_cat)


@dataclass(frozen=True)
class CategoryRow:
    category: str
    confusion: Confusion
    precision: Fraction | None
    recall: Fraction | None


@dataclass(frozen=True)
class CategoryReport:
    rows: tuple[CategoryRow, ...]
    average_precision: Fraction | None
    average_recall: Fraction | None
    overall: Metrics

    def to_json(self) -> dict:
        return {
            "categories": [
                {"category": r.category, "precision": as_decimal(r.precision), "recall": as_decimal(r.recall),
                 "n": r.confusion.total}
                for r in self.rows
            ],
            "average": {"precision": as_decimal(self.average_precision), "recall": as_decimal(self.average_recall)},
            "overall": self.overall.to_json(),
        }

    def format_table(self) -> str:
        def cell(x):
            return "null" if x is None else f"{float(x):.3f}"

        width = max([len("Average"), len("Category")] + [len(r.category) for r in self.rows])
        lines = [f"{'Category':<{width}}  Precision  Recall      N", "-" * (width + 26)]
        for r in self.rows:
            lines.append(f"{r.category:<{width}}  {cell(r.precision):>9}  {cell(r.recall):>6}  {r.confusion.total:>5}")
        lines.append("-" * (width + 26))
        lines.append(f"{'Average':<{width}}  {cell(self.average_precision):>9}  {cell(self.average_recall):>6}")
        return "\n".join(lines)


def _mean(values) -> Fraction | None:
    defined = [v for v in values if v is not None]
    return sum(defined, Fraction(0)) / len(defined) if defined else None


def category_report(samples, predictions) -> CategoryReport:
    """Per-category precision/recall; the average is an unweighted mean over categories."""
    samples, predictions = list(samples), list(predictions)
    metrics = evaluate(predictions, [s.label for s in samples], [s.category for s in samples])
    rows = tuple(CategoryRow(cat, c, c.precision, c.recall) for cat, c in metrics.by_category.items())
    return CategoryReport(rows, _mean(r.precision for r in rows), _mean(r.recall for r in rows), metrics)


def load_predictions(path) -> dict[tuple[str, str], int]:
    path = Path(path)
    if not path.is_file():
        raise MissingArtifactError(f"predictions not found: {path}")
    out = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                out[(str(row["episode_id"]), str(row["description"]))] = int(row["label"])
            except json.JSONDecodeError as exc:
                raise InvalidArgumentError(f"{path}:{lineno}: not JSON ({exc.msg})") from None
            except KeyError as exc:
                raise InvalidArgumentError(f"{path}:{lineno}: missing field {exc}") from None
    return out


def join_predictions(samples, predictions: dict[tuple[str, str], int]) -> list[int]:
    out = []
    for s in samples:
        key = (s.episode_id, s.motion_description)
        if key not in predictions:
            raise InvalidArgumentError(f"no prediction for episode {s.episode_id!r} / {s.motion_description!r}")
        out.append(predictions[key])
    return out
