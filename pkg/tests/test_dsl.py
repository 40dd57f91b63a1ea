import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from motif.dsl import (
    AXES,
    DIRECTIONS,
    TURNS,
    Avoid,
    Curve,
    Detour,
    DistanceTrend,
    Flip,
    FollowPath,
    MotionAST,
    MoveOver,
    Oscillate,
    Progressive,
    Repeat,
    Rotate,
    Step,
    Straight,
    TfidfIndex,
    Translate,
    WristRotation,
    description_similarity,
    format_description,
    parse_description,
    synonym_table,
)
from motif.errors import InvalidArgumentError, ParseError

from reference_descriptions import ALL

T = Translate


@pytest.mark.parametrize("text", ALL)
def test_every_reference_description_parses_and_round_trips(text):
    ast = parse_description(text)
    assert parse_description(format_description(ast)) == ast


@pytest.mark.parametrize("text, expected", [
    ("move downward, then move to the left", MotionAST.of(T("down"), T("left"))),
    ("move to the left while making vertical oscillations",
     MotionAST((Step(T("left"), (Oscillate("vertical"),)),))),
    ("make 2 circular motions counter-clockwise", MotionAST.of(Rotate("counter-clockwise", 2))),
    ("move downward and farther from the laptop, then move to the left",
     MotionAST((Step(T("down"), (DistanceTrend("laptop", "farther"),)), Step(T("left"))))),
    ("move up and down 4 times", MotionAST.of(Oscillate("vertical", 4))),
    ("Move Upward And To The Right.", MotionAST.of(T("up-right"))),
    ("make two circular motions clockwise", MotionAST.of(Rotate("clockwise", 2))),
    ("make a triangular motion clockwise", MotionAST.of(Rotate("clockwise", 1, "triangular"))),
    ("move downward and to the right following a concave curve", MotionAST.of(Curve("down-right", "concave"))),
    ("move to the right and move to the left, repeating this sequence 2 times",
     MotionAST.of(Repeat((T("right"), T("left")), 2))),
    ("move forward, making a detour to the right of the manhole",
     MotionAST((Step(T("forward"), (Detour("manhole", "right"),)),))),
    ("move forward in a straight line, moving over the manhole",
     MotionAST((Step(T("forward"), (Straight(), MoveOver("manhole"))),))),
    ("move downward, while making side-to-side movements",
     MotionAST((Step(T("down"), (Oscillate("horizontal"),)),))),
])
def test_parse_examples(text, expected):
    assert parse_description(text) == expected


@pytest.mark.parametrize("ast, text", [
    (MotionAST.of(T("up")), "move upward"),
    (MotionAST.of(Rotate("clockwise", 1)), "make a circular motion clockwise"),
    (MotionAST.of(T("down"), T("left")), "move downward, then move to the left"),
    (MotionAST((Step(T("left"), (Oscillate("vertical"),)),)), "move to the left while making vertical oscillations"),
])
def test_format_examples(ast, text):
    assert format_description(ast) == text


def test_synonyms_collapse_paraphrases():
    a = parse_description("move downward, while making side-to-side movements")
    b = parse_description("move downward while making horizontal oscillations")
    assert a == b
    assert parse_description("move in the shortest path") == parse_description("move in a straight line")
    assert len(synonym_table()) > 10


def test_parse_error_carries_span():
    text = "move upward, then wobble sideways"
    with pytest.raises(ParseError) as info:
        parse_description(text)
    start, end = info.value.span
    assert text[start:end] == info.value.text
    assert "wobble" in text[start:end + 8]
    assert info.value.code == "unparseable-token"


@pytest.mark.parametrize("text", ["", "   ", None])
def test_empty_input_is_invalid_argument(text):
    with pytest.raises(InvalidArgumentError):
        parse_description(text)


def test_ast_invariants():
    with pytest.raises(InvalidArgumentError):
        MotionAST(())
    with pytest.raises(InvalidArgumentError):
        MotionAST((Step(T("up"), (Repeat((T("up"),), 2),)),))


# --- round trip over generated ASTs -----------------------------------------

_objects = st.sampled_from(["laptop", "manhole", "long table", "cup", "<obstacle>"])
_counts = st.integers(1, 9)
_simple_dirs = st.sampled_from([d for d in DIRECTIONS])

_path = st.one_of(
    st.builds(T, _simple_dirs, st.booleans()),
    st.builds(Curve, _simple_dirs.filter(lambda d: d != "forward"), st.sampled_from(["convex", "concave"])),
    st.builds(Rotate, st.sampled_from(TURNS), _counts, st.sampled_from(["circular", "triangular", "square"])),
    st.builds(Oscillate, st.sampled_from(AXES), st.none() | _counts),
)
_modifier = st.one_of(
    st.builds(Oscillate, st.sampled_from(AXES), st.none() | _counts),
    st.builds(MoveOver, _objects),
    st.builds(Detour, _objects, st.sampled_from(["left", "right"])),
    st.builds(DistanceTrend, _objects, st.sampled_from(["closer", "farther"])),
    st.builds(FollowPath, _objects),
    st.builds(Avoid, _objects),
    st.just(Straight()),
    st.just(WristRotation()),
)
_grounding_primary = st.one_of(
    st.builds(Detour, _objects, st.sampled_from(["left", "right"])),
    st.builds(MoveOver, _objects),
    st.builds(DistanceTrend, _objects, st.sampled_from(["closer", "farther"])),
)
_step = st.builds(Step, _path | _grounding_primary, st.lists(_modifier, max_size=2).map(tuple))
_repeat_step = st.builds(
    lambda body, n: Step(Repeat(tuple(body), n)),
    st.lists(st.builds(T, st.sampled_from(["up", "down", "left", "right"])), min_size=1, max_size=3),
    st.integers(2, 5),
)
_asts = st.lists(_step, min_size=1, max_size=4).map(lambda s: MotionAST(tuple(s)))


@settings(max_examples=300, deadline=None)
@given(_asts)
def test_round_trip_generated(ast):
    assert parse_description(format_description(ast)) == ast


@settings(max_examples=50, deadline=None)
@given(_repeat_step)
def test_round_trip_repeat(step):
    ast = MotionAST((step,))
    assert parse_description(format_description(ast)) == ast


def test_extra_primitives_round_trip():
    for ast in (
        MotionAST.of(Flip("right", True)),
        MotionAST((Step(Rotate("clockwise"), (Progressive("radius"),)),)),
        MotionAST.of(Repeat((T("down"),), 5, strokes=True)),
        MotionAST((Step(Repeat((T("down"),), 5, strokes=True), (Progressive("starting height"),)),)),
    ):
        assert parse_description(format_description(ast)) == ast


# --- similarity ---------------------------------------------------------------


def test_similarity_matches_hand_tfidf():
    # two-document corpus: "move" and "upward" appear in both (idf 1), the
    # four extra words of the longer text in one (idf 1 + ln 1.5)
    sim = description_similarity("move upward", "move upward and to the right")
    assert sim == pytest.approx(0.4494364165239821, abs=1e-12)


def test_similarity_edge_cases():
    assert description_similarity("move upward", "move upward") == 1.0
    assert description_similarity("move upward", "make oscillations") == 0.0
    with pytest.raises(InvalidArgumentError):
        description_similarity("", "move upward")


_words = st.lists(st.sampled_from(["move", "upward", "left", "make", "circular", "the", "of", "oscillations"]),
                  min_size=1, max_size=8).map(" ".join)


@settings(max_examples=100, deadline=None)
@given(_words, _words, st.lists(_words, max_size=5))
def test_similarity_symmetric_and_bounded(a, b, extra):
    index = TfidfIndex([a, b, *extra])
    s = index.similarity(a, b)
    assert s == index.similarity(b, a)
    assert 0.0 <= s <= 1.0
    assert index.similarity(a, a) == 1.0
