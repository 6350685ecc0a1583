import json
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from turklvc.calibrate import (
    CONDITIONS,
    DiagnosticItem,
    SplitReport,
    candidate_thresholds,
    evaluate_split,
    import_predictions,
    load_diagnostic_set,
    parse_report_json,
    pct,
    pr_sweep,
    render_report,
    select_tau_max_f1,
    select_tau_precision_floor,
    write_predictions,
    write_sweep_csv,
)
from turklvc.errors import DataError

EXAMPLE_SCORES = [0.9, 0.7, 0.6, 0.2]
EXAMPLE_GOLD = [1, 0, 1, 0]


def brute_confusion(scores, gold, tau):
    tp = fp = fn = tn = 0
    for s, g in zip(scores, gold):
        p = 1 if s >= tau else 0
        if p and g:
            tp += 1
        elif p:
            fp += 1
        elif g:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


def brute_f1(tp, fp, fn):
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    return 2 * p * r / (p + r) if p + r else 0.0


def items_for(per=49):
    return [DiagnosticItem(f"{c}-{k}", "x", c) for c in CONDITIONS for k in range(per)]


def preds_with_correct(items, correct):
    """Mark the first ``correct[c]`` items of each condition as correct."""
    out, seen = {}, dict.fromkeys(CONDITIONS, 0)
    for it in items:
        ok = seen[it.condition] < correct[it.condition]
        seen[it.condition] += 1
        out[it.item_id] = it.gold if ok else 1 - it.gold
    return out


# --- sweep -----------------------------------------------------------------

def test_example_best_f1_region():
    # brute force on a fine grid: F1 = 0.8 exactly on (0.2, 0.6]
    grid = np.round(np.arange(0, 1.0001, 0.001), 3)
    f1 = {t: brute_f1(*brute_confusion(EXAMPLE_SCORES, EXAMPLE_GOLD, t)[:3]) for t in grid}
    best = max(f1.values())
    assert best == pytest.approx(0.8)
    region = [t for t, v in f1.items() if v == pytest.approx(best)]
    assert min(region) == pytest.approx(0.201) and max(region) == pytest.approx(0.6)
    points = pr_sweep(EXAMPLE_SCORES, EXAMPLE_GOLD)
    assert max(p.f1 for p in points) == pytest.approx(0.8)
    assert select_tau_max_f1(points) == 0.6


def test_candidate_set():
    assert candidate_thresholds(EXAMPLE_SCORES).tolist() == pytest.approx(
        [0.0, 0.2, 0.4, 0.6, 0.65, 0.7, 0.8, 0.9, 1.0])


def test_all_positive_gold():
    points = pr_sweep([0.1, 0.5, 0.9], [1, 1, 1])
    p0 = points[0]
    assert p0.tau == 0.0 and p0.fn == 0 and p0.recall == 1.0


def test_threshold_point_invariants():
    for p in pr_sweep(EXAMPLE_SCORES, EXAMPLE_GOLD):
        assert p.n == 4
        if p.tp + p.fp == 0:
            assert p.precision == 0.0
        if p.precision + p.recall == 0:
            assert p.f1 == 0.0
        else:
            assert p.f1 == pytest.approx(2 * p.precision * p.recall / (p.precision + p.recall))


def test_sweep_errors():
    with pytest.raises(DataError):
        pr_sweep([], [])
    with pytest.raises(DataError):
        pr_sweep([0.1, float("nan")], [0, 1])
    with pytest.raises(DataError):
        pr_sweep([0.1], [0, 1])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.sampled_from([0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0]) | st.floats(0, 1),
                          st.integers(0, 1)), min_size=1, max_size=12))
def test_sweep_matches_brute_force(pairs):
    scores = [s for s, _ in pairs]
    gold = [g for _, g in pairs]
    points = pr_sweep(scores, gold)
    distinct = sorted(set(scores))
    for s in distinct:
        match = [p for p in points if p.tau == s]
        assert len(match) == 1
        assert (match[0].tp, match[0].fp, match[0].fn, match[0].tn) == brute_confusion(scores, gold, s)
    for p in points:
        assert (p.tp, p.fp, p.fn, p.tn) == brute_confusion(scores, gold, p.tau)
    fps = [p.fp for p in points]
    fns = [p.fn for p in points]
    assert fps == sorted(fps, reverse=True) and fns == sorted(fns)


def test_sweep_covers_every_confusion_matrix():
    rng = random.Random(0)
    for _ in range(50):
        n = rng.randint(1, 10)
        scores = [rng.choice([0.1, 0.3, 0.5, 0.7, 0.9]) for _ in range(n)]
        gold = [rng.randint(0, 1) for _ in range(n)]
        grid = np.linspace(-0.05, 1.05, 221)
        achievable = {brute_confusion(scores, gold, t) for t in grid}
        swept = {(p.tp, p.fp, p.fn, p.tn) for p in pr_sweep(scores, gold)}
        assert achievable <= swept


def test_max_f1_plateau_takes_largest_tau():
    # tau in (0.2, 0.4] and (0.4, 0.6] give the same prediction set only through 0.4's gap
    points = pr_sweep([0.8, 0.6, 0.4, 0.2], [1, 1, 0, 0])
    tau = select_tau_max_f1(points)
    assert tau == 0.6
    assert {p.tau for p in points if p.f1 == 1.0} == {0.5, 0.6}


def test_floor_zero_gives_tau_zero():
    sel = select_tau_precision_floor(pr_sweep(EXAMPLE_SCORES, EXAMPLE_GOLD), 0.0)
    assert sel.tau == 0.0 and sel.met


def test_floor_one_isolates_clean_top():
    scores, gold = [0.9, 0.8, 0.7, 0.3], [1, 1, 0, 1]
    points = pr_sweep(scores, gold)
    # brute force over the candidate set: smallest tau whose predicted set is all positives
    cands = sorted({0.0, 1.0, *scores, *[(a + b) / 2 for a, b in zip(sorted(scores), sorted(scores)[1:])]})
    clean = [t for t in cands if brute_confusion(scores, gold, t)[0] > 0
             and brute_confusion(scores, gold, t)[1] == 0]
    sel = select_tau_precision_floor(points, 1.0)
    assert sel.met and sel.tau == pytest.approx(min(clean)) and sel.tau == pytest.approx(0.75)


def test_floor_exact_fraction_boundary():
    # precision exactly 4/5 must satisfy floor 0.8
    # (tau=0 gives 4/6, so the floor is first met once the 0.1 negative drops out)
    points = pr_sweep([0.9] * 5 + [0.1], [1, 1, 1, 1, 0, 0])
    sel = select_tau_precision_floor(points, 0.8)
    assert sel.met and sel.tau == pytest.approx(0.5)


def test_floor_unmet_flagged():
    points = pr_sweep([0.9, 0.5], [0, 1])
    sel = select_tau_precision_floor(points, 1.0)
    assert not sel.met and sel.tau == pytest.approx(0.5)  # max precision 1/2, largest tau
    points = pr_sweep([0.9, 0.8], [0, 0])
    sel = select_tau_precision_floor(points, 0.5)
    assert not sel.met
    assert sel.tau == 1.0  # every tau has precision 0; largest wins


def test_sweep_csv(tmp_path):
    points = pr_sweep(EXAMPLE_SCORES, EXAMPLE_GOLD)
    write_sweep_csv(points, tmp_path / "s.csv", "config_hash=x")
    rows = [ln for ln in (tmp_path / "s.csv").read_text().splitlines() if not ln.startswith("#")]
    assert len(rows) == len(points) + 1


# --- split reports ------------------------------------------------------------------

@pytest.mark.parametrize("correct, expected", [
    ((48, 37, 24), (98.0, 75.5, 49.0, 74.1, 13, 25, 64.9, 49.0)),
    ((49, 45, 5), (100.0, 91.8, 10.2, 67.3, 4, 44, 55.6, 10.2)),
    ((49, 43, 16), (100.0, 87.8, 32.7, 73.5, 6, 33, 72.7, 32.7)),
    ((49, 49, 49), (100.0, 100.0, 100.0, 100.0, 0, 0, 100.0, 100.0)),
])
def test_table_arithmetic(correct, expected):
    items = items_for()
    report = evaluate_split(preds_with_correct(items, dict(zip(CONDITIONS, correct))), items, "run")
    assert tuple(report.row()[2:]) == expected


@pytest.mark.parametrize("row", [
    # (Random, NLVC, LVC correct) and the printed row for every 49/49/49 row of the results table
    ((48, 37, 24), (98.0, 75.5, 49.0, 74.1, 13, 25, 64.9, 49.0)),
    ((48, 43, 16), (98.0, 87.8, 32.7, 72.8, 7, 33, 69.6, 32.7)),
    ((49, 47, 9), (100.0, 95.9, 18.4, 71.4, 2, 40, 81.8, 18.4)),
    ((48, 40, 33), (98.0, 81.6, 67.3, 82.3, 10, 16, 76.7, 67.3)),
    ((48, 40, 39), (98.0, 81.6, 79.6, 86.4, 10, 10, 79.6, 79.6)),
    ((49, 39, 31), (100.0, 79.6, 63.3, 81.0, 10, 18, 75.6, 63.3)),
    ((49, 40, 30), (100.0, 81.6, 61.2, 81.0, 9, 19, 76.9, 61.2)),
    ((48, 43, 33), (98.0, 87.8, 67.3, 84.4, 7, 16, 82.5, 67.3)),
    ((48, 41, 35), (98.0, 83.7, 71.4, 84.4, 9, 14, 79.5, 71.4)),
    ((49, 45, 7), (100.0, 91.8, 14.3, 68.7, 4, 42, 63.6, 14.3)),
    ((49, 43, 18), (100.0, 87.8, 36.7, 74.8, 6, 31, 75.0, 36.7)),
    ((49, 45, 5), (100.0, 91.8, 10.2, 67.3, 4, 44, 55.6, 10.2)),
])
def test_every_results_row(row):
    correct, printed = row
    assert tuple(SplitReport.from_counts(correct).row()[2:]) == printed


def test_half_up_rounding():
    assert pct(1, 8) == 12.5
    assert pct(1, 16) == 6.3      # 6.25 rounds up
    assert pct(1, 3) == 33.3
    assert pct(2, 3) == 66.7
    assert pct(0, 0) == 0.0


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 12), st.data())
def test_recall_equals_lvc_rate(per, data):
    items = items_for(per)
    preds = {it.item_id: data.draw(st.integers(0, 1)) for it in items}
    r = evaluate_split(preds, items)
    assert r.recall == r.rate("LVC")
    assert r.fp_pooled + r.fn_pooled + r.total_correct == r.total
    assert r.fp_pooled == r.wrong("Random") + r.wrong("NLVC")


def test_evaluate_split_coverage_errors():
    items = items_for(1)
    preds = {it.item_id: 0 for it in items}
    del preds["LVC-0"]
    with pytest.raises(DataError, match="LVC-0"):
        evaluate_split(preds, items)
    preds = {it.item_id: 0 for it in items}
    preds["ghost"] = 1
    with pytest.raises(DataError, match="ghost"):
        evaluate_split(preds, items)


# --- predictions file ---------------------------------------------------------------

def test_import_predictions(tmp_path):
    p = tmp_path / "p.tsv"
    p.write_text("item_id\tpred\na\t1\nb\t0\nc\t1\n")
    preds = import_predictions(p)
    assert len(preds) == 3 and dict(preds) == {"a": 1, "b": 0, "c": 1}
    assert preds.scores is None


def test_import_predictions_duplicate(tmp_path):
    p = tmp_path / "p.tsv"
    p.write_text("item_id\tpred\na\t1\na\t0\n")
    with pytest.raises(DataError, match="'a'"):
        import_predictions(p)


@pytest.mark.parametrize("body", ["a\t2\n", "a\n", "a\tyes\n"])
def test_import_predictions_bad_rows(tmp_path, body):
    p = tmp_path / "p.tsv"
    p.write_text("item_id\tpred\n" + body)
    with pytest.raises(DataError):
        import_predictions(p)


def test_import_predictions_with_scores(tmp_path):
    p = tmp_path / "p.tsv"
    write_predictions(p, {"a": 1, "b": 0}, {"a": 0.75, "b": 0.125})
    preds = import_predictions(p)
    assert preds.scores == {"a": 0.75, "b": 0.125}


# --- rendering -------------------------------------------------------------------------

def test_render_single_row():
    r = SplitReport.from_counts((48, 37, 24), run_label="Run 1", model="Lemma-only LR")
    lines = render_report([r]).splitlines()
    assert len(lines) == 3
    assert lines[0].split() == ["Model", "Setting", "Random", "NLVC", "LVC", "Overall",
                                "FP", "FN", "Prec", "Rec"]
    assert len(r.row()) == 10
    assert lines[2].split()[-8:] == ["98.0", "75.5", "49.0", "74.1", "13", "25", "64.9", "49.0"]


def test_render_order_and_json_agreement():
    a = SplitReport.from_counts((48, 37, 24), run_label="Run 1")
    b = SplitReport.from_counts((49, 45, 5), run_label="grammar")
    text = render_report([a, b])
    assert text.index("Run 1") < text.index("grammar")
    back = parse_report_json(render_report([a, b], "json"))
    assert back == [a, b]
    for r, line in zip(back, text.splitlines()[2:]):
        cols = line.split()
        assert int(cols[-4]) == r.fp_pooled and int(cols[-3]) == r.fn_pooled


def test_json_carries_counts():
    d = json.loads(render_report([SplitReport.from_counts((48, 37, 24))], "json"))[0]
    assert d["counts"]["LVC"] == {"n": 49, "correct": 24}
    assert d["fp_random"] == 1 and d["fp_nlvc"] == 12 and d["fp_pooled"] == 13


# --- diagnostic set file ---------------------------------------------------------------

def test_load_diagnostic_set(tmp_path):
    p = tmp_path / "d.jsonl"
    rows = [{"item_id": f"{c}{k}", "surface_text": "x", "condition": c, "lemma_text": "a b"}
            for c in CONDITIONS for k in range(2)]
    p.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    items = load_diagnostic_set(p, per_condition=2)
    assert [it.gold for it in items] == [0, 0, 0, 0, 1, 1]
    assert items[0].lemma_text == ("a", "b")
    with pytest.raises(DataError):
        load_diagnostic_set(p, per_condition=49)


def test_diagnostic_gold_must_match_condition(tmp_path):
    p = tmp_path / "d.jsonl"
    p.write_text(json.dumps({"item_id": "a", "surface_text": "x", "condition": "NLVC", "gold": 1}) + "\n")
    with pytest.raises(DataError):
        load_diagnostic_set(p)
