import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from motif.dataset import Sample
from motif.errors import InvalidArgumentError, MissingArtifactError
from motif.evaluation import Confusion, category_report, confusion, evaluate, join_predictions, load_predictions

from confusion_fixtures import FIXTURES


def _frac(pair):
    return None if pair is None else Fraction(*pair)


@pytest.mark.parametrize("preds, labels, precision, recall", FIXTURES)
def test_hand_counted_fixtures(preds, labels, precision, recall):
    m = evaluate(preds, labels)
    assert m.precision == _frac(precision)
    assert m.recall == _frac(recall)
    assert m.confusion.total == len(labels)
    out = m.to_json()
    assert out["precision"] == (None if precision is None else precision[0] / precision[1])
    assert out["recall"] == (None if recall is None else recall[0] / recall[1])


def test_nulls_are_not_zero():
    out = evaluate([0, 0], [1, 0]).to_json()
    assert out["precision"] is None and out["recall"] == 0.0
    assert json.loads(json.dumps(out))["precision"] is None


def test_input_validation():
    with pytest.raises(InvalidArgumentError):
        evaluate([1, 0], [1])
    with pytest.raises(InvalidArgumentError):
        evaluate([], [])
    with pytest.raises(InvalidArgumentError):
        evaluate([2], [1])


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=40), st.randoms())
def test_permutation_invariant(pairs, rnd):
    preds, labels = zip(*pairs)
    shuffled = pairs[:]
    rnd.shuffle(shuffled)
    p2, l2 = zip(*shuffled)
    assert confusion(preds, labels) == confusion(p2, l2)
    c = confusion(preds, labels)
    assert c.tp + c.fp + c.tn + c.fn == len(pairs)


def _samples(cats_labels):
    return [Sample(f"e{i}", "img.png", "t", f"d{i}", y, "p", cat) for i, (cat, y) in enumerate(cats_labels)]


def test_single_category_report_equals_evaluate():
    preds, labels = FIXTURES[8][:2]
    samples = _samples([("wipe", y) for y in labels])
    report = category_report(samples, preds)
    m = evaluate(preds, labels)
    assert (report.average_precision, report.average_recall) == (m.precision, m.recall)


def test_identical_categories_average_equals_either():
    preds, labels = FIXTURES[0][:2]
    samples = _samples([("a", y) for y in labels] + [("b", y) for y in labels])
    report = category_report(samples, preds + preds)
    assert report.average_precision == Fraction(1, 3) and report.average_recall == 1


def test_two_category_hand_arithmetic():
    # a: tp=1 fp=1 fn=1 -> P 1/2, R 1/2 ; b: tp=3 fp=0 fn=1 -> P 1, R 3/4
    a = [(1, 1), (1, 0), (0, 1), (0, 0)]
    b = [(1, 1), (1, 1), (1, 1), (0, 1)]
    samples = _samples([("a", y) for _, y in a] + [("b", y) for _, y in b])
    report = category_report(samples, [p for p, _ in a + b])
    assert report.average_precision == Fraction(3, 4)
    assert report.average_recall == Fraction(5, 8)
    # overall pools counts instead: tp=4 fp=1 fn=2
    assert report.overall.precision == Fraction(4, 5) and report.overall.recall == Fraction(4, 6)


def test_undefined_categories_skipped_in_average():
    samples = _samples([("a", 1), ("a", 0), ("b", 0)])
    report = category_report(samples, [1, 0, 0])
    rows = {r.category: r for r in report.rows}
    assert rows["b"].precision is None and rows["b"].recall is None
    assert report.average_precision == 1 and report.average_recall == 1
    table = report.format_table()
    assert "null" in table and "Average" in table
    assert report.to_json()["categories"][1]["precision"] is None


def test_confusion_addition():
    assert Confusion(1, 2, 3, 4) + Confusion(1, 1, 1, 1) == Confusion(2, 3, 4, 5)


def test_predictions_file(tmp_path):
    path = tmp_path / "p.jsonl"
    path.write_text('{"episode_id": "e0", "description": "d0", "label": 1}\n\n'
                    '{"episode_id": "e1", "description": "d1", "label": 0}\n')
    preds = load_predictions(path)
    samples = _samples([("a", 1), ("a", 0)])
    assert join_predictions(samples, preds) == [1, 0]
    with pytest.raises(InvalidArgumentError):
        join_predictions(_samples([("a", 1)] * 3), preds)
    with pytest.raises(MissingArtifactError):
        load_predictions(tmp_path / "none.jsonl")
    path.write_text("{broken\n")
    with pytest.raises(InvalidArgumentError):
        load_predictions(path)
