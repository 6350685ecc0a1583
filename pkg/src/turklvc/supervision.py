"""Weak LVC supervision mined from UD dependency arcs.

The workflow is extract -> export review sheet -> (humans fill in verdicts)
-> apply review -> assemble the labeled dataset. Sentences whose candidates
are all rejected by review are dropped, not relabeled negative.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError, ReviewError

logger = logging.getLogger(__name__)

EXPLICIT_LVC = "explicit_lvc"
NV_COMPOUND = "nv_compound"

SHEET_COLUMNS = (
    "treebank", "sent_id", "dep_id", "head_id",
    "dep_lemma", "head_lemma", "snippet", "verdict",
)


@dataclass(frozen=True)
class LvcCandidate:
    treebank: str
    sent_id: str
    dep_id: int
    head_id: int
    dep_lemma: str
    head_lemma: str
    relation: str
    snippet: str = ""

    def __post_init__(self):
        if self.dep_id == self.head_id:
            raise ValueError("candidate dependent and head coincide")
        if self.relation not in (EXPLICIT_LVC, NV_COMPOUND):
            raise ValueError(f"unknown relation {self.relation!r}")

    @property
    def key(self):
        return (self.treebank, self.sent_id, self.dep_id, self.head_id)

    @property
    def sentence_key(self):
        return (self.treebank, self.sent_id)


@dataclass(frozen=True)
class ReviewDecision:
    treebank: str
    sent_id: str
    dep_id: int
    head_id: int
    verdict: str
    annotator: str = ""

    def __post_init__(self):
        if self.verdict not in ("keep", "remove"):
            raise ValueError(f"verdict must be 'keep' or 'remove', got {self.verdict!r}")

    @property
    def key(self):
        return (self.treebank, self.sent_id, self.dep_id, self.head_id)


@dataclass(frozen=True)
class LabeledSentence:
    treebank: str
    sent_id: str
    surface_text: str
    lemmas: tuple[str, ...]
    label: int
    candidates: tuple[tuple, ...] = ()
    # Surface forms aligned with ``lemmas``; used when a lemma is missing.
    forms: tuple[str, ...] = ()

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")
        if (self.label == 1) != bool(self.candidates):
            raise ValueError(f"{self.key}: label must be 1 exactly when candidates exist")

    @property
    def key(self):
        return (self.treebank, self.sent_id)

    def to_json(self):
        return {
            "treebank": self.treebank,
            "sent_id": self.sent_id,
            "surface_text": self.surface_text,
            "lemmas": list(self.lemmas),
            "forms": list(self.forms),
            "label": self.label,
            "candidates": [list(c) for c in self.candidates],
        }

    @classmethod
    def from_json(cls, obj):
        return cls(
            treebank=obj["treebank"],
            sent_id=obj["sent_id"],
            surface_text=obj["surface_text"],
            lemmas=tuple(obj["lemmas"]),
            label=int(obj["label"]),
            candidates=tuple(tuple(c) for c in obj.get("candidates", ())),
            forms=tuple(obj.get("forms", ())),
        )


@dataclass(frozen=True)
class DatasetStats:
    total_sentences: int = 0
    candidate_sentences: int = 0
    removed_sentences: int = 0
    retained_sentences: int = 0
    positive_sentences: int = 0

    @classmethod
    def from_counts(cls, total, candidates, removed):
        """Derive retained/positive counts from the three observed totals."""
        if not 0 <= removed <= candidates <= total:
            raise ValueError("need 0 <= removed <= candidates <= total")
        return cls(
            total_sentences=total,
            candidate_sentences=candidates,
            removed_sentences=removed,
            retained_sentences=total - removed,
            positive_sentences=candidates - removed,
        )

    def check(self):
        """Raise if either accounting identity is violated."""
        if self.retained_sentences != self.total_sentences - self.removed_sentences:
            raise DataError("retained != total - removed")
        if self.positive_sentences != self.candidate_sentences - self.removed_sentences:
            raise DataError("positives != candidates - removed")
        return self

    def as_dict(self):
        return {
            "total_sentences": self.total_sentences,
            "candidate_sentences": self.candidate_sentences,
            "removed_sentences": self.removed_sentences,
            "retained_sentences": self.retained_sentences,
            "positive_sentences": self.positive_sentences,
        }


def _snippet(s):
    return " ".join(s.surface.split())


def extract_explicit_lvc(s, treebank=""):
    """One candidate per ``compound:lvc`` arc (exact, case-sensitive)."""
    out = []
    for tok in s.tokens:
        if tok.deprel != "compound:lvc":
            continue
        if tok.head == 0:
            logger.warning("%s/%s: compound:lvc token %d attached to root; skipped",
                           treebank, s.sent_id, tok.id)
            continue
        try:
            head = s.token(tok.head)
        except KeyError:
            logger.warning("%s/%s: compound:lvc token %d has dangling head %d; skipped",
                           treebank, s.sent_id, tok.id, tok.head)
            continue
        out.append(LvcCandidate(
            treebank=treebank, sent_id=s.sent_id, dep_id=tok.id, head_id=head.id,
            dep_lemma=tok.lemma, head_lemma=head.lemma,
            relation=EXPLICIT_LVC, snippet=_snippet(s),
        ))
    return out


def extract_nv_compound(s, treebank=""):
    """One candidate per plain ``compound`` arc from a NOUN to a VERB."""
    out = []
    for tok in s.tokens:
        if tok.deprel != "compound" or tok.upos != "NOUN" or tok.head == 0:
            continue
        try:
            head = s.token(tok.head)
        except KeyError:
            continue
        if head.upos != "VERB":
            continue
        out.append(LvcCandidate(
            treebank=treebank, sent_id=s.sent_id, dep_id=tok.id, head_id=head.id,
            dep_lemma=tok.lemma, head_lemma=head.lemma,
            relation=NV_COMPOUND, snippet=_snippet(s),
        ))
    return out


def has_explicit_lvc(tb):
    return any(t.deprel == "compound:lvc" for s in tb.sentences for t in s.tokens)


def extract_candidates(tb):
    """Apply the rule appropriate to ``tb``.

    Treebanks with at least one ``compound:lvc`` arc use only the explicit
    rule; all others fall back to noun-verb ``compound`` arcs.
    Returns ``(candidates, rule_name)``.
    """
    if has_explicit_lvc(tb):
        rule, extract = EXPLICIT_LVC, extract_explicit_lvc
    else:
        rule, extract = NV_COMPOUND, extract_nv_compound
    cands = []
    for s in tb.sentences:
        cands.extend(extract(s, tb.name))
    return cands, rule


def _clean(value):
    return " ".join(str(value).replace("\t", " ").split())


def dedupe_candidates(cands):
    """Drop repeated candidate keys (first occurrence wins) and sort by key."""
    seen = {}
    for c in cands:
        if c.key in seen:
            logger.warning("duplicate candidate %s dropped", c.key)
            continue
        seen[c.key] = c
    return sorted(seen.values(), key=lambda c: (c.treebank, c.sent_id, c.dep_id, c.head_id))


def export_review_sheet(cands, dest, header_comment=None):
    """Write the review TSV and return the number of data rows.

    Rows are deduplicated by candidate key and ordered by
    (treebank, sent_id, dep_id). The verdict column is left empty.
    """
    if not cands:
        raise DataError("no candidates to export")
    rows = dedupe_candidates(cands)
    lines = []
    if header_comment:
        lines.append(f"# {header_comment}")
    lines.append("\t".join(SHEET_COLUMNS))
    for c in rows:
        lines.append("\t".join([
            _clean(c.treebank), _clean(c.sent_id), str(c.dep_id), str(c.head_id),
            _clean(c.dep_lemma), _clean(c.head_lemma), _clean(c.snippet), "",
        ]))
    Path(dest).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return len(rows)


def read_review_sheet(path):
    """Parse a filled-in review sheet into decisions.

    Rows with an empty verdict produce no decision (the candidate is kept).
    An optional trailing ``annotator`` column is honoured.
    """
    decisions = []
    header = None
    for no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.rstrip("\r")
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if header is None:
            header = cols
            missing = [c for c in SHEET_COLUMNS if c not in header]
            if missing:
                raise ReviewError(f"{path}: review sheet lacks columns {missing}")
            continue
        cols += [""] * (len(header) - len(cols))
        row = dict(zip(header, cols))
        verdict = row["verdict"].strip().lower()
        if not verdict:
            continue
        if verdict not in ("keep", "remove"):
            raise ReviewError(f"{path}:{no}: verdict must be keep/remove, got {verdict!r}")
        try:
            decisions.append(ReviewDecision(
                treebank=row["treebank"], sent_id=row["sent_id"],
                dep_id=int(row["dep_id"]), head_id=int(row["head_id"]),
                verdict=verdict, annotator=row.get("annotator", "").strip(),
            ))
        except ValueError as exc:
            raise ReviewError(f"{path}:{no}: {exc}") from None
    if header is None:
        raise ReviewError(f"{path}: empty review sheet")
    return decisions


def apply_review(cands, decisions):
    """Split candidates by verdict.

    Returns ``(kept, removed_sentence_keys)`` where the second item holds the
    (treebank, sent_id) keys of sentences all of whose candidates were
    removed. Candidates without a decision are kept.
    """
    by_key = {c.key: c for c in cands}
    verdicts = {}
    unknown, conflicting = [], []
    for d in decisions:
        if d.key not in by_key:
            unknown.append(d.key)
            continue
        prev = verdicts.get(d.key)
        if prev is not None and prev != d.verdict:
            conflicting.append(d.key)
        verdicts[d.key] = d.verdict
    if unknown:
        raise ReviewError(f"decisions reference unknown candidates: {sorted(set(unknown))}")
    if conflicting:
        raise ReviewError(f"conflicting verdicts for candidates: {sorted(set(conflicting))}")

    kept = [c for c in by_key.values() if verdicts.get(c.key, "keep") == "keep"]
    candidate_sents = {c.sentence_key for c in by_key.values()}
    kept_sents = {c.sentence_key for c in kept}
    return kept, candidate_sents - kept_sents


def assemble_dataset(tbs, kept, removed_sentence_keys):
    """Label every retained sentence; return ``(dataset, stats)``."""
    removed = set(removed_sentence_keys)
    by_sentence = {}
    for c in kept:
        by_sentence.setdefault(c.sentence_key, []).append(c.key)
    overlap = removed & set(by_sentence)
    if overlap:
        raise DataError(f"sentences both kept and removed: {sorted(overlap)}")

    dataset = []
    total = n_removed = 0
    for tb in tbs:
        for s in tb.sentences:
            total += 1
            key = (tb.name, s.sent_id)
            if key in removed:
                n_removed += 1
                continue
            cand_keys = tuple(sorted(by_sentence.get(key, ())))
            dataset.append(LabeledSentence(
                treebank=tb.name, sent_id=s.sent_id, surface_text=s.surface,
                lemmas=tuple(t.lemma for t in s.tokens),
                forms=tuple(t.form for t in s.tokens),
                label=1 if cand_keys else 0, candidates=cand_keys,
            ))
    seen_pos = {ls.key for ls in dataset if ls.label}
    missing = set(by_sentence) - seen_pos
    if missing:
        raise DataError(f"kept candidates point at unknown sentences: {sorted(missing)}")
    if n_removed != len(removed):
        raise DataError("removed sentence keys point at unknown sentences")
    stats = DatasetStats.from_counts(total, len(seen_pos) + n_removed, n_removed)
    stats.check()
    if stats.retained_sentences != len(dataset):
        raise DataError("dataset size disagrees with accounting")
    return dataset, stats


def write_dataset(dataset, path, meta=None):
    """JSONL, one object per sentence; ``meta`` becomes a leading ``_meta`` line."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if meta:
            fh.write(json.dumps({"_meta": meta}, sort_keys=True) + "\n")
        for ls in dataset:
            fh.write(json.dumps(ls.to_json(), ensure_ascii=False, sort_keys=True) + "\n")


def read_dataset(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        for no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                if "_meta" in obj:
                    continue
                out.append(LabeledSentence.from_json(obj))
            except (KeyError, ValueError, TypeError) as exc:
                raise DataError(f"{path}:{no}: bad dataset row: {exc}") from None
    return out


@dataclass
class ExtractionSummary:
    """Per-treebank candidate counts and the rule that produced them."""

    per_treebank: dict = field(default_factory=dict)

    def add(self, tb, cands, rule):
        self.per_treebank[tb.name] = {
            "rule": rule,
            "sentences": len(tb.sentences),
            "candidates": len(cands),
            "candidate_sentences": len({c.sentence_key for c in cands}),
            "anomalous_sentences": len(tb.stats.anomalous_sentences),
            "empty_nodes": tb.stats.empty_nodes,
        }

    def as_dict(self):
        totals = {
            k: sum(v[k] for v in self.per_treebank.values())
            for k in ("sentences", "candidates", "candidate_sentences")
        }
        return {"treebanks": self.per_treebank, "totals": totals}


def mine_candidates(tbs):
    """Extract candidates from every treebank; returns ``(cands, summary)``."""
    summary = ExtractionSummary()
    cands = []
    for tb in tbs:
        found, rule = extract_candidates(tb)
        summary.add(tb, found, rule)
        cands.extend(found)
    return cands, summary
