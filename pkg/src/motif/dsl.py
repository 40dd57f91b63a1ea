"""Controlled motion-description language.

A description is a temporally ordered list of steps. Each step has one
primary clause and zero or more simultaneous modifiers::

    move downward and farther from the laptop, then move to the left
    ^primary      ^modifier                          ^second step

Clauses are path primitives (translate, curve, rotate, oscillate, repeat,
...) or grounding clauses that relate the motion to a named scene object.
Paraphrases are folded onto the canonical vocabulary by the synonym table in
``data/synonyms.txt`` before parsing.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Union

from .errors import InvalidArgumentError, ParseError

VERTICAL = ("up", "down")
HORIZONTAL = ("left", "right")
DIRECTIONS = ("up", "down", "left", "right", "up-left", "up-right", "down-left", "down-right", "forward")
AXES = ("horizontal", "vertical", "diagonal", "back-and-forth")
TURNS = ("clockwise", "counter-clockwise")
SHAPES = ("circular", "triangular", "square")
QUANTITIES = ("radius", "starting height")


# --- AST -----------------------------------------------------------------


@dataclass(frozen=True)
class Translate:
    direction: str
    short: bool = False


@dataclass(frozen=True)
class Curve:
    direction: str
    convexity: str


@dataclass(frozen=True)
class Rotate:
    turn: str
    count: int = 1
    shape: str = "circular"


@dataclass(frozen=True)
class Oscillate:
    axis: str
    count: int | None = None


@dataclass(frozen=True)
class Repeat:
    body: tuple
    count: int
    strokes: bool = False


@dataclass(frozen=True)
class Straight:
    pass


@dataclass(frozen=True)
class Flip:
    side: str
    back: bool = False


@dataclass(frozen=True)
class Progressive:
    quantity: str
    trend: str = "increasing"


@dataclass(frozen=True)
class WristRotation:
    pattern: str = "alternating"


@dataclass(frozen=True)
class MoveOver:
    obj: str


@dataclass(frozen=True)
class Detour:
    obj: str | None
    side: str


@dataclass(frozen=True)
class DistanceTrend:
    obj: str
    trend: str


@dataclass(frozen=True)
class FollowPath:
    obj: str


@dataclass(frozen=True)
class Avoid:
    obj: str


PathPrimitive = Union[Translate, Curve, Rotate, Oscillate, Repeat, Straight, Flip, Progressive, WristRotation]
GroundingClause = Union[MoveOver, Detour, DistanceTrend, FollowPath, Avoid]
Clause = Union[PathPrimitive, GroundingClause]
GROUNDING_TYPES = (MoveOver, Detour, DistanceTrend, FollowPath, Avoid)


@dataclass(frozen=True)
class Step:
    primary: Clause
    modifiers: tuple = ()

    def clauses(self) -> tuple:
        return (self.primary, *self.modifiers)


@dataclass(frozen=True)
class MotionAST:
    steps: tuple[Step, ...]

    def __post_init__(self):
        if not self.steps:
            raise InvalidArgumentError("a motion description needs at least one step")
        for step in self.steps:
            if any(isinstance(m, Repeat) for m in step.modifiers):
                raise InvalidArgumentError("a modifier cannot be a repeat")

    @classmethod
    def of(cls, *steps) -> "MotionAST":
        """Build from steps, where a bare clause becomes a step without modifiers."""
        return cls(tuple(s if isinstance(s, Step) else Step(s) for s in steps))

    def clauses(self) -> list:
        return [c for step in self.steps for c in step.clauses()]

    def then(self, other: "MotionAST") -> "MotionAST":
        return MotionAST(self.steps + other.steps)


def is_grounding(clause) -> bool:
    return isinstance(clause, GROUNDING_TYPES)


def combine_directions(vertical: str | None, horizontal: str | None) -> str:
    if vertical and horizontal:
        return f"{vertical}-{horizontal}"
    return vertical or horizontal


# --- synonym normalization -----------------------------------------------


@lru_cache(maxsize=1)
def synonym_table() -> tuple[tuple[str, str], ...]:
    text = resources.files("motif").joinpath("data/synonyms.txt").read_text(encoding="utf-8")
    pairs = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        phrase, canonical = (s.strip() for s in line.split("=>"))
        pairs.append((phrase.lower(), canonical.lower()))
    pairs.sort(key=lambda p: -len(p[0]))
    return tuple(pairs)


@lru_cache(maxsize=1)
def _synonym_regex():
    table = dict(synonym_table())
    alternation = "|".join(re.escape(p) for p, _ in synonym_table())
    return re.compile(rf"(?<![\w-])(?:{alternation})(?![\w-])"), table


def normalize(text: str) -> tuple[str, list[int]]:
    """Lowercase and apply synonyms; returns the text and a map to original offsets."""
    lowered = text.lower()
    regex, table = _synonym_regex()
    out: list[str] = []
    origin: list[int] = []
    pos = 0
    for m in regex.finditer(lowered):
        out.append(lowered[pos:m.start()])
        origin.extend(range(pos, m.start()))
        repl = table[m.group(0)]
        out.append(repl)
        origin.extend([m.start()] * len(repl))
        pos = m.end()
    out.append(lowered[pos:])
    origin.extend(range(pos, len(lowered)))
    origin.append(len(lowered))
    return "".join(out), origin


# --- parser ----------------------------------------------------------------

_TOKEN = re.compile(r"<[^>]*>|[a-z0-9]+(?:['-][a-z0-9]+)*|,|\S")
_NUMBERS = {
    "a": 1, "an": 1, "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
    "six": 6, "seven": 7, "eight": 8, "nine": 9, "ten": 10,
}
_STOP = {",", "then", "while", "and"}
_FINITE = {"move", "make", "flip", "completely", "follow", "avoid"}


class _Parser:
    def __init__(self, text: str):
        self.original = text
        self.text, self.origin = normalize(text)
        self.tokens = []
        for m in _TOKEN.finditer(self.text):
            self.tokens.append((m.group(0), m.start(), m.end()))
        if self.tokens and self.tokens[-1][0] == ".":
            self.tokens.pop()
        for tok, start, end in self.tokens:
            if not (tok == "," or tok[0].isalnum() or tok.startswith("<")):
                self.fail("unexpected character", start, end)
        self.pos = 0

    # token helpers
    def peek(self, k: int = 0) -> str | None:
        i = self.pos + k
        return self.tokens[i][0] if i < len(self.tokens) else None

    def at(self, *words: str) -> bool:
        return all(self.peek(i) == w for i, w in enumerate(words))

    def accept(self, *words: str) -> bool:
        if self.at(*words):
            self.pos += len(words)
            return True
        return False

    def expect(self, *words: str) -> None:
        if not self.accept(*words):
            self.fail(f"expected {' '.join(words)!r}")

    def fail(self, message: str, start: int | None = None, end: int | None = None):
        if start is None:
            if self.pos < len(self.tokens):
                _, start, end = self.tokens[self.pos]
            else:
                start = end = len(self.text)
        o_start, o_end = self.origin[start], self.origin[min(end, len(self.origin) - 1)]
        if o_end <= o_start:
            o_end = min(len(self.original), o_start + 1)
        snippet = self.original[o_start:o_end]
        raise ParseError(f"{message} at {snippet!r} (chars {o_start}-{o_end})", (o_start, o_end), snippet)

    def count(self) -> int | None:
        tok = self.peek()
        if tok is None:
            return None
        if tok.isdigit():
            self.pos += 1
            value = int(tok)
            if value < 1:
                self.fail("count must be >= 1", *self.tokens[self.pos - 1][1:])
            return value
        if tok in _NUMBERS:
            self.pos += 1
            return _NUMBERS[tok]
        return None

    def times(self) -> int | None:
        """Optional ``N times`` / ``once`` / ``twice`` postfix."""
        if self.accept("once"):
            return 1
        if self.accept("twice"):
            return 2
        save = self.pos
        n = self.count()
        if n is not None and self.accept("times") or n is not None and n == 1 and self.accept("time"):
            return n
        self.pos = save
        return None

    def object_label(self) -> str:
        self.accept("the")
        words = []
        while self.peek() is not None and self.peek() not in _STOP:
            if self.at("in", "a", "straight", "line"):
                break
            words.append(self.peek())
            self.pos += 1
        if not words:
            self.fail("expected an object name")
        return " ".join(words)

    # directions
    def single_direction(self) -> str | None:
        for words, d in (
            (("upward",), "up"), (("downward",), "down"), (("forward",), "forward"),
            (("to", "the", "left"), "left"), (("to", "the", "right"), "right"),
            (("up",), "up"), (("down",), "down"), (("left",), "left"), (("right",), "right"),
        ):
            if self.accept(*words):
                return d
        return None

    def direction(self) -> str | None:
        first = self.single_direction()
        if first is None:
            return None
        if first == "forward":
            return first
        save = self.pos
        if self.accept("and"):
            second = self.single_direction()
            pair = {first, second}
            vertical = next((d for d in pair if d in VERTICAL), None)
            horizontal = next((d for d in pair if d in HORIZONTAL), None)
            if second is not None and vertical and horizontal:
                return combine_directions(vertical, horizontal)
        self.pos = save
        return first

    def side(self) -> str:
        if self.accept("to", "the", "left") or self.accept("left"):
            return "left"
        if self.accept("to", "the", "right") or self.accept("right"):
            return "right"
        self.fail("expected 'to the left' or 'to the right'")

    def turn(self) -> str | None:
        for t in TURNS:
            if self.accept(t):
                return t
        return None

    # clause bodies shared by finite and gerund forms
    def after_move(self):
        """Body after ``move``/``moving``."""
        if self.accept("over"):
            return MoveOver(self.object_label())
        if self.accept("closer", "to"):
            return DistanceTrend(self.object_label(), "closer")
        if self.accept("farther", "from"):
            return DistanceTrend(self.object_label(), "farther")
        if self.accept("in", "a", "straight", "line"):
            return Straight()
        d = self.direction()
        if d is None:
            self.fail("expected a direction")
        if self.accept("following", "a"):
            conv = self.peek()
            if conv not in ("convex", "concave"):
                self.fail("expected 'convex' or 'concave'")
            self.pos += 1
            self.expect("curve")
            return Curve(d, conv)
        if self.accept("shortly"):
            return Translate(d, short=True)
        return Translate(d)

    def after_make(self):
        """Body after ``make``/``making``."""
        if self.accept("a", "detour"):
            side = self.side()
            obj = self.object_label() if self.accept("of") else None
            return Detour(obj, side)
        if self.accept("alternating", "rotations"):
            return WristRotation("alternating")
        save = self.pos
        n = self.count()
        shape = self.peek()
        if shape in SHAPES:
            self.pos += 1
            if not (self.accept("motion") or self.accept("motions")):
                self.fail("expected 'motion'")
            turn = self.turn()
            if turn is None:
                self.fail("expected 'clockwise' or 'counter-clockwise'")
            return Rotate(turn, n or 1, shape)
        turn = self.turn()
        if turn is not None and self.peek() in SHAPES:
            shape = self.peek()
            self.pos += 1
            if not (self.accept("motion") or self.accept("motions")):
                self.fail("expected 'motion'")
            return Rotate(turn, n or 1, shape)
        if self.peek() in ("stroke", "strokes"):
            self.pos += 1
            d = self.direction()
            if d is None:
                self.fail("expected a stroke direction")
            return Repeat((Translate(d),), n or 1, strokes=True)
        axis = self.peek()
        if axis in AXES:
            self.pos += 1
            if not (self.accept("oscillations") or self.accept("oscillation")):
                self.fail("expected 'oscillations'")
            times = self.times()
            return Oscillate(axis, times if times is not None else n)
        self.pos = save
        self.fail("unknown motion after 'make'")

    def after_flip(self):
        self.expect("the", "object")
        side = self.side()
        back = False
        if self.at("and", "flip", "it", "back") or self.at("and", "flipping", "it", "back"):
            self.pos += 4
            self.expect("to", "its", "initial", "state")
            back = True
        return Flip(side, back)

    def progressive(self):
        trend = self.peek()
        self.pos += 1
        self.accept("the")
        words = []
        while self.peek() is not None and self.peek() not in _STOP and self.peek() != "of":
            words.append(self.peek())
            self.pos += 1
        quantity = " ".join(words)
        if quantity not in QUANTITIES:
            self.fail(f"unknown quantity {quantity!r}")
        if self.accept("of"):
            self.accept("the") or self.accept("each")
            if not (self.accept("circle") or self.accept("stroke") or self.accept("strokes")):
                self.fail("expected 'circle' or 'stroke'")
        return Progressive(quantity, trend)

    def finite(self):
        if self.accept("move"):
            return self.after_move()
        if self.accept("make"):
            return self.after_make()
        if self.accept("completely", "flip") or self.accept("flip"):
            return self.after_flip()
        if self.accept("follow"):
            return FollowPath(self.object_label())
        if self.accept("avoid"):
            return Avoid(self.object_label())
        self.fail("expected a motion verb")

    def gerund(self):
        if self.accept("moving"):
            return self.after_move()
        if self.accept("making"):
            return self.after_make()
        if self.accept("completely", "flipping") or self.accept("flipping"):
            return self.after_flip()
        if self.accept("following"):
            return FollowPath(self.object_label())
        if self.accept("avoiding"):
            return Avoid(self.object_label())
        if self.peek() in ("increasing", "decreasing"):
            return self.progressive()
        if self.accept("alternating", "rotations"):
            return WristRotation("alternating")
        if self.accept("farther", "from"):
            return DistanceTrend(self.object_label(), "farther")
        if self.accept("closer", "to"):
            return DistanceTrend(self.object_label(), "closer")
        if self.accept("in", "a", "straight", "line"):
            return Straight()
        return None

    def starts_gerund(self) -> bool:
        tok = self.peek()
        return tok in ("moving", "making", "flipping", "following", "avoiding", "increasing", "decreasing",
                       "alternating", "farther", "closer") or self.at("completely", "flipping") \
            or self.at("in", "a", "straight", "line")

    # top level
    def parse(self) -> MotionAST:
        if not self.tokens:
            raise InvalidArgumentError("empty motion description")
        steps: list[list] = []  # [primary, modifiers, and_joined]

        def new_step(and_joined=False):
            steps.append([self.finite(), [], and_joined])
            self.postfix(steps[-1])

        def add_modifier():
            start = self.pos
            clause = self.gerund()
            if clause is None:
                self.fail("expected a modifier clause")
            if isinstance(clause, Repeat):
                self.pos = start
                self.fail("a modifier cannot repeat")
            steps[-1][1].append(clause)
            self.postfix(steps[-1], clause)

        new_step()
        while self.pos < len(self.tokens):
            if self.accept(","):
                if self.accept("and", "then") or self.accept("then"):
                    new_step()
                elif self.accept("repeating", "this", "sequence"):
                    self.wrap_repeat(steps)
                elif self.accept("while"):
                    add_modifier()
                elif self.peek() in _FINITE:
                    new_step()
                elif self.starts_gerund():
                    add_modifier()
                else:
                    self.fail("unexpected continuation")
            elif self.accept("then") or self.accept("and", "then"):
                new_step()
            elif self.accept("while"):
                add_modifier()
            elif self.at("and", "move") or self.at("and", "make") or self.at("and", "flip") \
                    or self.at("and", "completely"):
                self.pos += 1
                new_step(and_joined=True)
            elif self.accept("and"):
                if self.at("follow") or self.at("avoid"):
                    steps[-1][1].append(self.finite())
                    self.postfix(steps[-1], steps[-1][1][-1])
                else:
                    add_modifier()
            elif self.starts_gerund():
                add_modifier()
            else:
                self.fail("unexpected word")
        return MotionAST(tuple(Step(p, tuple(m)) for p, m, _ in steps))

    def postfix(self, step, clause=None):
        """Attach ``N times`` to the nearest preceding primitive."""
        target = clause if clause is not None else step[0]
        start = self.pos
        n = self.times()
        if n is None:
            return
        if isinstance(target, (Oscillate, Rotate, Repeat)):
            new = _with_count(target, n)
            if clause is None:
                step[0] = new
            else:
                step[1][-1] = new
        else:
            self.pos = start
            self.fail("a count needs an oscillation, rotation or repetition")

    def wrap_repeat(self, steps):
        n = self.times()
        if n is None:
            self.fail("expected 'N times'")
        chain = [steps.pop()]
        while chain[0][2] and steps:
            chain.insert(0, steps.pop())
        body = []
        for primary, modifiers, _ in chain:
            if modifiers or isinstance(primary, Repeat) or is_grounding(primary):
                self.fail("only plain path primitives can be repeated")
            body.append(primary)
        steps.append([Repeat(tuple(body), n), [], False])


def _with_count(clause, n):
    if isinstance(clause, Oscillate):
        return Oscillate(clause.axis, n)
    if isinstance(clause, Rotate):
        return Rotate(clause.turn, n, clause.shape)
    return Repeat(clause.body, n, clause.strokes)


def parse_description(text: str) -> MotionAST:
    if not isinstance(text, str) or not text.strip():
        raise InvalidArgumentError("motion description must be a non-empty string")
    return _Parser(text).parse()


# --- formatter -------------------------------------------------------------

_DIR_PHRASE = {
    "up": "upward", "down": "downward", "forward": "forward",
    "left": "to the left", "right": "to the right",
}


def direction_phrase(direction: str) -> str:
    if direction in _DIR_PHRASE:
        return _DIR_PHRASE[direction]
    vertical, horizontal = direction.split("-")
    return f"{_DIR_PHRASE[vertical]} and {_DIR_PHRASE[horizontal]}"


def _move_body(c) -> str:
    if isinstance(c, Translate):
        return direction_phrase(c.direction) + (" shortly" if c.short else "")
    if isinstance(c, Curve):
        return f"{direction_phrase(c.direction)} following a {c.convexity} curve"
    if isinstance(c, Straight):
        return "in a straight line"
    if isinstance(c, MoveOver):
        return f"over the {c.obj}"
    if isinstance(c, DistanceTrend):
        return f"closer to the {c.obj}" if c.trend == "closer" else f"farther from the {c.obj}"
    return None


def _make_body(c) -> str:
    if isinstance(c, Rotate):
        if c.count == 1:
            return f"a {c.shape} motion {c.turn}"
        return f"{c.count} {c.shape} motions {c.turn}"
    if isinstance(c, Oscillate):
        return f"{c.axis} oscillations" + (f" {c.count} times" if c.count is not None else "")
    if isinstance(c, Detour):
        return f"a detour to the {c.side}" + (f" of the {c.obj}" if c.obj else "")
    if isinstance(c, WristRotation):
        return f"{c.pattern} rotations"
    if isinstance(c, Repeat) and c.strokes:
        stroke = "a stroke" if c.count == 1 else f"{c.count} strokes"
        return f"{stroke} {direction_phrase(c.body[0].direction)}"
    return None


def _flip_body(c: Flip) -> str:
    text = f"the object to the {c.side}"
    return text + (" and flip it back to its initial state" if c.back else "")


def format_clause(c, gerund: bool = False) -> str:
    move, make = ("moving", "making") if gerund else ("move", "make")
    body = _move_body(c)
    if body is not None:
        return f"{move} {body}"
    body = _make_body(c)
    if body is not None:
        return f"{make} {body}"
    if isinstance(c, Flip):
        return ("completely flipping " if gerund else "completely flip ") + _flip_body(c)
    if isinstance(c, FollowPath):
        return f"{'following' if gerund else 'follow'} the {c.obj}"
    if isinstance(c, Avoid):
        return f"{'avoiding' if gerund else 'avoid'} the {c.obj}"
    if isinstance(c, Progressive):
        suffix = " of the circle" if c.quantity == "radius" else " of each stroke"
        return f"{c.trend} the {c.quantity}{suffix}"
    if isinstance(c, Repeat):
        if gerund:
            raise InvalidArgumentError("a repeat cannot be a modifier")
        return " and ".join(format_clause(b) for b in c.body) + f", repeating this sequence {c.count} times"
    raise InvalidArgumentError(f"cannot format clause {c!r}")


def format_step(step: Step) -> str:
    text = format_clause(step.primary)
    for i, m in enumerate(step.modifiers):
        text += (" while " if i == 0 else ", ") + format_clause(m, gerund=True)
    return text


def format_description(ast: MotionAST) -> str:
    return ", then ".join(format_step(s) for s in ast.steps)


# --- similarity ------------------------------------------------------------

_WORD = re.compile(r"[a-z0-9]+")


def word_tokens(text: str) -> list[str]:
    return _WORD.findall(text.lower())


class TfidfIndex:
    """Smoothed TF-IDF over a fixed document collection.

    idf(w) = ln((1 + N) / (1 + df(w))) + 1, so words outside the collection
    still get a finite weight. Built once and then shared read-only.
    """

    def __init__(self, documents):
        docs = [word_tokens(d) for d in documents]
        if not docs:
            raise InvalidArgumentError("TF-IDF needs at least one document")
        self.n_docs = len(docs)
        df: dict[str, int] = {}
        for toks in docs:
            for w in set(toks):
                df[w] = df.get(w, 0) + 1
        self.df = df
        self._cache: dict[str, dict[str, float]] = {}

    def idf(self, word: str) -> float:
        return math.log((1 + self.n_docs) / (1 + self.df.get(word, 0))) + 1.0

    def vector(self, text: str) -> dict[str, float]:
        vec = self._cache.get(text)
        if vec is None:
            counts = Counter(word_tokens(text))
            vec = {w: c * self.idf(w) for w, c in counts.items()}
            norm = math.sqrt(sum(v * v for v in vec.values()))
            vec = {w: v / norm for w, v in vec.items()} if norm > 0 else {}
            self._cache[text] = vec
        return vec

    def similarity(self, a: str, b: str) -> float:
        ta, tb = Counter(word_tokens(a)), Counter(word_tokens(b))
        if ta == tb and ta:
            return 1.0
        va, vb = self.vector(a), self.vector(b)
        # fixed summation order keeps the result exactly symmetric
        dot = math.fsum(va[w] * vb[w] for w in sorted(va.keys() & vb.keys()))
        return min(1.0, max(0.0, dot))


def description_similarity(a: str, b: str, corpus=None) -> float:
    """TF-IDF cosine of two descriptions; IDF comes from ``corpus`` or from ``[a, b]``."""
    if not a or not a.strip() or not b or not b.strip():
        raise InvalidArgumentError("descriptions must be non-empty")
    index = corpus if isinstance(corpus, TfidfIndex) else TfidfIndex(corpus if corpus is not None else [a, b])
    return index.similarity(a, b)
