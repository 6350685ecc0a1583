"""Threshold calibration and split-wise diagnostic evaluation.

Predictions use the rule ``predict 1 iff score >= tau``. Percentages are
rounded half-up to one decimal from exact integer counts.
"""

from __future__ import annotations

import json
from collections.abc import Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import DataError

CONDITIONS = ("Random", "NLVC", "LVC")
TABLE_COLUMNS = ("Model", "Setting", "Random", "NLVC", "LVC", "Overall", "FP", "FN", "Prec", "Rec")


def pct(num, den):
    """``100 * num / den`` rounded half-up to one decimal; 0.0 when den is 0."""
    if den == 0:
        return 0.0
    tenths = (2000 * num + den) // (2 * den)
    return tenths / 10


# --- threshold sweep --------------------------------------------------------

@dataclass(frozen=True)
class ThresholdPoint:
    tau: float
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def n(self):
        return self.tp + self.fp + self.fn + self.tn

    @property
    def precision(self):
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self):
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self):
        # equals 2PR/(P+R) whenever P+R > 0
        den = 2 * self.tp + self.fp + self.fn
        return 2 * self.tp / den if self.tp else 0.0

    def exact_f1(self):
        return Fraction(2 * self.tp, 2 * self.tp + self.fp + self.fn) if self.tp else Fraction(0)

    def exact_precision(self):
        return Fraction(self.tp, self.tp + self.fp) if self.tp + self.fp else Fraction(0)

    def as_row(self):
        return {
            "tau": self.tau, "tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn,
            "precision": self.precision, "recall": self.recall, "f1": self.f1,
        }


def candidate_thresholds(scores):
    """0, 1, every distinct score and every midpoint between neighbours, ascending."""
    distinct = np.unique(np.asarray(scores, dtype=float))
    mids = (distinct[:-1] + distinct[1:]) / 2.0
    return np.unique(np.concatenate([[0.0, 1.0], distinct, mids]))


def pr_sweep(scores, gold):
    """Confusion counts at every candidate threshold, ascending in tau."""
    scores = np.asarray(scores, dtype=float)
    gold = np.asarray(gold)
    if scores.size == 0:
        raise DataError("cannot sweep an empty score list")
    if scores.shape != gold.shape:
        raise DataError("scores and gold labels differ in length")
    if not np.all(np.isfinite(scores)):
        raise DataError("scores must be finite")
    if not np.all((gold == 0) | (gold == 1)):
        raise DataError("gold labels must be 0 or 1")
    order = np.argsort(scores, kind="stable")
    s_sorted = scores[order]
    pos_sorted = gold[order].astype(np.int64)
    # positives strictly below position k
    cum_pos = np.concatenate([[0], np.cumsum(pos_sorted)])
    n_pos = int(cum_pos[-1])
    n = scores.size
    points = []
    for tau in candidate_thresholds(scores):
        k = int(np.searchsorted(s_sorted, tau, side="left"))  # first index with score >= tau
        below_pos = int(cum_pos[k])
        tp = n_pos - below_pos
        fp = (n - k) - tp
        fn = below_pos
        tn = k - below_pos
        points.append(ThresholdPoint(float(tau), tp, fp, fn, tn))
    return points


def select_tau_max_f1(points):
    """Largest tau among the F1 maximisers."""
    if not points:
        raise DataError("empty sweep")
    best = max(p.exact_f1() for p in points)
    return max(p.tau for p in points if p.exact_f1() == best)


class FloorSelection(NamedTuple):
    tau: float
    met: bool


def select_tau_precision_floor(points, floor=0.8):
    """Smallest tau with precision >= floor and tp > 0.

    When no point reaches the floor, the tau of maximal precision is
    returned (largest on ties) with ``met=False``.
    """
    if not points:
        raise DataError("empty sweep")
    if not 0 <= floor <= 1:
        raise ValueError("floor must lie in [0, 1]")
    target = Fraction(str(floor))
    ok = [p.tau for p in points if p.tp > 0 and p.exact_precision() >= target]
    if ok:
        return FloorSelection(min(ok), True)
    best = max(p.exact_precision() for p in points)
    return FloorSelection(max(p.tau for p in points if p.exact_precision() == best), False)


def write_sweep_csv(points, path, header_comment=None):
    lines = []
    if header_comment:
        lines.append(f"# {header_comment}")
    lines.append("tau,tp,fp,fn,tn,precision,recall,f1")
    for p in points:
        lines.append(f"{p.tau!r},{p.tp},{p.fp},{p.fn},{p.tn},"
                     f"{p.precision!r},{p.recall!r},{p.f1!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# --- diagnostic set ---------------------------------------------------------

@dataclass(frozen=True)
class DiagnosticItem:
    item_id: str
    surface_text: str
    condition: str
    lemma_text: tuple[str, ...] | None = None
    conllu_ref: str | None = None

    def __post_init__(self):
        if self.condition not in CONDITIONS:
            raise ValueError(f"condition must be one of {CONDITIONS}, got {self.condition!r}")

    @property
    def gold(self):
        return 1 if self.condition == "LVC" else 0


def load_diagnostic_set(path, per_condition=None):
    """Read diagnostic items from JSONL.

    ``per_condition`` (49 for the canonical set) enforces balanced
    conditions; ``None`` skips the check, for mocks.
    """
    items, seen = [], set()
    with open(path, encoding="utf-8") as fh:
        for no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                lt = obj.get("lemma_text")
                if isinstance(lt, str):
                    lt = lt.split()
                item = DiagnosticItem(
                    item_id=str(obj["item_id"]), surface_text=obj["surface_text"],
                    condition=obj["condition"],
                    lemma_text=tuple(lt) if lt is not None else None,
                    conllu_ref=obj.get("conllu_ref"),
                )
            except (KeyError, ValueError, TypeError) as exc:
                raise DataError(f"{path}:{no}: bad diagnostic item: {exc}") from None
            if "gold" in obj and int(obj["gold"]) != item.gold:
                raise DataError(f"{path}:{no}: gold label contradicts condition {item.condition}")
            if item.item_id in seen:
                raise DataError(f"{path}:{no}: duplicate item_id {item.item_id!r}")
            seen.add(item.item_id)
            items.append(item)
    if per_condition is not None:
        counts = {c: sum(1 for it in items if it.condition == c) for c in CONDITIONS}
        if any(v != per_condition for v in counts.values()):
            raise DataError(f"expected {per_condition} items per condition, found {counts}")
    return items


def write_diagnostic_set(items, path):
    with open(path, "w", encoding="utf-8") as fh:
        for it in items:
            obj = {"item_id": it.item_id, "surface_text": it.surface_text,
                   "condition": it.condition, "gold": it.gold}
            if it.lemma_text is not None:
                obj["lemma_text"] = list(it.lemma_text)
            if it.conllu_ref is not None:
                obj["conllu_ref"] = it.conllu_ref
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


# --- predictions ------------------------------------------------------------

class Predictions(Mapping):
    """``item_id -> {0,1}`` mapping with optional per-item scores."""

    def __init__(self, labels, scores=None):
        self._labels = dict(labels)
        self.scores = dict(scores) if scores else None

    def __getitem__(self, key):
        return self._labels[key]

    def __iter__(self):
        return iter(self._labels)

    def __len__(self):
        return len(self._labels)


def import_predictions(path):
    """Read a TSV with header ``item_id<TAB>pred[<TAB>score]``."""
    rows = [ln.rstrip("\r") for ln in Path(path).read_text(encoding="utf-8").splitlines()]
    rows = [ln for ln in rows if ln.strip() and not ln.startswith("#")]
    if not rows:
        raise DataError(f"{path}: empty predictions file")
    header = rows[0].split("\t")
    if header[:2] != ["item_id", "pred"] or len(header) > 3 or (len(header) == 3 and header[2] != "score"):
        raise DataError(f"{path}: header must be item_id, pred[, score]; got {header}")
    has_score = len(header) == 3
    labels, scores = {}, {}
    for no, line in enumerate(rows[1:], 2):
        cols = line.split("\t")
        if len(cols) != len(header):
            raise DataError(f"{path}: row {no} has {len(cols)} columns, expected {len(header)}")
        item_id, pred = cols[0], cols[1].strip()
        if pred not in ("0", "1"):
            raise DataError(f"{path}: row {no}: pred must be 0 or 1, got {pred!r}")
        if item_id in labels:
            raise DataError(f"{path}: duplicate item_id {item_id!r}")
        labels[item_id] = int(pred)
        if has_score:
            try:
                score = float(cols[2])
            except ValueError:
                raise DataError(f"{path}: row {no}: bad score {cols[2]!r}") from None
            if not np.isfinite(score):
                raise DataError(f"{path}: row {no}: score must be finite")
            scores[item_id] = score
    return Predictions(labels, scores if has_score else None)


def write_predictions(path, labels, scores=None, header_comment=None):
    lines = []
    if header_comment:
        lines.append(f"# {header_comment}")
    lines.append("item_id\tpred" + ("\tscore" if scores is not None else ""))
    for item_id, pred in labels.items():
        row = f"{item_id}\t{int(pred)}"
        if scores is not None:
            row += f"\t{scores[item_id]!r}"
        lines.append(row)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# --- split report -----------------------------------------------------------

@dataclass(frozen=True)
class SplitReport:
    """Per-condition counts; every percentage is derived from them."""

    n: dict
    correct: dict
    run_label: str = ""
    model: str = ""
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for c in CONDITIONS:
            if not 0 <= self.correct.get(c, 0) <= self.n.get(c, 0):
                raise ValueError(f"bad counts for {c}")

    def wrong(self, condition):
        return self.n[condition] - self.correct[condition]

    @property
    def total(self):
        return sum(self.n[c] for c in CONDITIONS)

    @property
    def total_correct(self):
        return sum(self.correct[c] for c in CONDITIONS)

    @property
    def fp_random(self):
        return self.wrong("Random")

    @property
    def fp_nlvc(self):
        return self.wrong("NLVC")

    @property
    def fp_pooled(self):
        return self.fp_random + self.fp_nlvc

    @property
    def fn_pooled(self):
        return self.wrong("LVC")

    @property
    def tp(self):
        return self.correct["LVC"]

    def rate(self, condition):
        return pct(self.correct[condition], self.n[condition])

    @property
    def overall(self):
        return pct(self.total_correct, self.total)

    @property
    def precision(self):
        return pct(self.tp, self.tp + self.fp_pooled)

    @property
    def recall(self):
        return pct(self.tp, self.tp + self.fn_pooled)

    def row(self):
        """Table values in display column order."""
        return [self.model, self.run_label, self.rate("Random"), self.rate("NLVC"),
                self.rate("LVC"), self.overall, self.fp_pooled, self.fn_pooled,
                self.precision, self.recall]

    def to_dict(self):
        return {
            "model": self.model,
            "run_label": self.run_label,
            "counts": {c: {"n": self.n[c], "correct": self.correct[c]} for c in CONDITIONS},
            "fp_pooled": self.fp_pooled,
            "fp_random": self.fp_random,
            "fp_nlvc": self.fp_nlvc,
            "fn_pooled": self.fn_pooled,
            "tp": self.tp,
            "percent": {
                "Random": self.rate("Random"), "NLVC": self.rate("NLVC"),
                "LVC": self.rate("LVC"), "Overall": self.overall,
                "Prec": self.precision, "Rec": self.recall,
            },
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d):
        counts = d["counts"]
        return cls(
            n={c: counts[c]["n"] for c in CONDITIONS},
            correct={c: counts[c]["correct"] for c in CONDITIONS},
            run_label=d.get("run_label", ""), model=d.get("model", ""),
            metadata=d.get("metadata", {}),
        )

    @classmethod
    def from_counts(cls, correct, n=49, run_label="", model=""):
        """Build from per-condition correct counts, e.g. ``(48, 37, 24)``."""
        ns = n if isinstance(n, dict) else {c: n for c in CONDITIONS}
        return cls(n=dict(ns), correct=dict(zip(CONDITIONS, correct)),
                   run_label=run_label, model=model)


def evaluate_split(preds, items, run_label="", model=""):
    """Score binary predictions against the diagnostic items' gold labels."""
    ids = {it.item_id for it in items}
    missing = sorted(ids - set(preds))
    extra = sorted(set(preds) - ids)
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"missing predictions for {missing}")
        if extra:
            parts.append(f"predictions for unknown items {extra}")
        raise DataError("; ".join(parts))
    n = dict.fromkeys(CONDITIONS, 0)
    correct = dict.fromkeys(CONDITIONS, 0)
    for it in items:
        p = int(preds[it.item_id])
        if p not in (0, 1):
            raise DataError(f"prediction for {it.item_id} is not binary: {p!r}")
        n[it.condition] += 1
        correct[it.condition] += int(p == it.gold)
    return SplitReport(n=n, correct=correct, run_label=run_label, model=model)


def _fmt(v):
    return f"{v:.1f}" if isinstance(v, float) else str(v)


def render_report(reports, fmt="text"):
    """Render reports as an aligned text table or as JSON, in input order."""
    reports = list(reports)
    if not reports:
        raise ValueError("nothing to render")
    if fmt == "json":
        return json.dumps([r.to_dict() for r in reports], indent=1, ensure_ascii=False) + "\n"
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    rows = [list(TABLE_COLUMNS)] + [[_fmt(v) for v in r.row()] for r in reports]
    widths = [max(len(row[i]) for row in rows) for i in range(len(TABLE_COLUMNS))]
    lines = []
    for k, row in enumerate(rows):
        cells = [cell.ljust(w) if i < 2 else cell.rjust(w)
                 for i, (cell, w) in enumerate(zip(row, widths))]
        lines.append("  ".join(cells).rstrip())
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def parse_report_json(text):
    data = json.loads(text)
    if isinstance(data, dict):
        data = [data]
    return [SplitReport.from_dict(d) for d in data]
