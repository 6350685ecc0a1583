"""Restricted-input sentence representations.

Two feature spaces, both frozen on training data:

* lemma n-gram TF-IDF (smoothed idf, L2-normalised rows);
* grammar-only counts over UPOS tags, full DEPREL labels and FEATS pairs.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

from .errors import DataError

logger = logging.getLogger(__name__)

CASINGS = ("standard", "turkish")
WEIGHTING = "tf*(ln((1+N)/(1+df))+1), l2"
CHANNELS = ("UPOS", "DEPREL", "MORPH")


@dataclass(frozen=True, eq=False)
class SparseVector:
    dimension: int
    indices: np.ndarray
    values: np.ndarray
    space_id: str | None = None

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)
        if idx.shape != val.shape or idx.ndim != 1:
            raise ValueError("indices and values must be 1-D and of equal length")
        if idx.size:
            if idx[0] < 0 or idx[-1] >= self.dimension:
                raise ValueError("index out of range")
            if np.any(np.diff(idx) <= 0):
                raise ValueError("indices must be strictly increasing")
            if not np.all(np.isfinite(val)) or np.any(val == 0):
                raise ValueError("values must be finite and non-zero")

    @classmethod
    def from_dict(cls, dimension, entries, space_id=None):
        """Build from ``{index: value}``, dropping zeros."""
        items = sorted((i, v) for i, v in entries.items() if v != 0)
        return cls(dimension, [i for i, _ in items], [v for _, v in items], space_id)

    @property
    def entries(self):
        return list(zip(self.indices.tolist(), self.values.tolist()))

    @property
    def nnz(self):
        return int(self.indices.size)

    def norm(self):
        return float(np.sqrt(np.dot(self.values, self.values)))

    def to_dense(self):
        out = np.zeros(self.dimension)
        out[self.indices] = self.values
        return out

    def get(self, index, default=0.0):
        pos = np.searchsorted(self.indices, index)
        if pos < self.indices.size and self.indices[pos] == index:
            return float(self.values[pos])
        return default

    def __eq__(self, other):
        if not isinstance(other, SparseVector):
            return NotImplemented
        return (self.dimension == other.dimension
                and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.values, other.values))

    __hash__ = None


def stack(vectors, dimension=None):
    """Stack sparse vectors into a CSR matrix (rows in input order)."""
    if dimension is None:
        if not vectors:
            raise ValueError("cannot infer dimension of an empty batch")
        dimension = vectors[0].dimension
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    for i, v in enumerate(vectors):
        if v.dimension != dimension:
            raise ValueError(f"row {i} has dimension {v.dimension}, expected {dimension}")
        indptr[i + 1] = indptr[i] + v.nnz
    if vectors:
        indices = np.concatenate([v.indices for v in vectors])
        data = np.concatenate([v.values for v in vectors])
    else:
        indices = np.zeros(0, dtype=np.int64)
        data = np.zeros(0)
    return sparse.csr_matrix((data, indices, indptr), shape=(len(vectors), dimension))


def _hash_payload(payload):
    blob = json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


# --- lemma representation -------------------------------------------------

def lower(text, casing="standard"):
    """Lowercase with either plain Unicode rules or Turkish dotted/dotless I."""
    if casing == "turkish":
        return text.replace("I", "ı").replace("İ", "i").lower()
    if casing == "standard":
        return text.lower()
    raise ValueError(f"casing must be one of {CASINGS}, got {casing!r}")


def lemma_text(s, casing="standard"):
    """Lowercased lemma sequence of a Sentence or LabeledSentence.

    Missing lemmas (empty or ``_``) fall back to the surface form.
    """
    if hasattr(s, "tokens"):
        lemmas = [t.lemma for t in s.tokens]
        forms = [t.form for t in s.tokens]
        ident = s.sent_id
    else:
        lemmas = list(s.lemmas)
        forms = list(s.forms) or [""] * len(lemmas)
        ident = getattr(s, "sent_id", "?")
    out = []
    for i, (lemma, form) in enumerate(zip(lemmas, forms), 1):
        if lemma in ("", "_") and form != lemma:
            logger.info("sentence %s token %d: no lemma, using form %r", ident, i, form)
            lemma = form
        if lemma:
            out.append(lower(lemma, casing))
    return out


def ngrams(tokens, ngram_max=2):
    """Contiguous n-grams for n = 1..ngram_max, joined by single spaces."""
    out = []
    for n in range(1, ngram_max + 1):
        for i in range(len(tokens) - n + 1):
            out.append(" ".join(tokens[i:i + n]))
    return out


@dataclass(frozen=True)
class TfidfVocabulary:
    terms: tuple[str, ...]
    doc_freq: tuple[int, ...]
    corpus_size: int
    max_features: int = 5000
    ngram_max: int = 2
    casing: str = "standard"
    index: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if len(self.terms) != len(self.doc_freq):
            raise ValueError("terms and doc_freq differ in length")
        if len(self.terms) > self.max_features:
            raise ValueError("vocabulary exceeds max_features")
        if any(not 1 <= df <= self.corpus_size for df in self.doc_freq):
            raise ValueError("document frequencies must lie in [1, corpus_size]")
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.terms)})
        idf = np.log((1.0 + self.corpus_size) / (1.0 + np.asarray(self.doc_freq, dtype=float))) + 1.0
        idf.setflags(write=False)
        object.__setattr__(self, "_idf", idf)

    def __len__(self):
        return len(self.terms)

    @property
    def dimension(self):
        return len(self.terms)

    def idf(self, term):
        return float(self._idf[self.index[term]])

    def df(self, term):
        return self.doc_freq[self.index[term]]

    def to_dict(self):
        return {
            "kind": "lemma_tfidf",
            "terms": list(self.terms),
            "doc_freq": list(self.doc_freq),
            "corpus_size": self.corpus_size,
            "max_features": self.max_features,
            "ngram_max": self.ngram_max,
            "casing": self.casing,
            "weighting": WEIGHTING,
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("weighting", WEIGHTING) != WEIGHTING:
            raise DataError(f"unsupported weighting {d['weighting']!r}")
        return cls(
            terms=tuple(d["terms"]), doc_freq=tuple(d["doc_freq"]),
            corpus_size=d["corpus_size"], max_features=d["max_features"],
            ngram_max=d["ngram_max"], casing=d["casing"],
        )

    @property
    def space_id(self):
        return _hash_payload(self.to_dict())


def fit_tfidf(corpus, max_features=5000, ngram_max=2, casing="standard"):
    """Fit a vocabulary on already-normalised token lists.

    Keeps the ``max_features`` terms with the highest document frequency,
    ties broken by ascending term; the kept terms are stored sorted.
    ``casing`` is recorded only, so the same policy is applied at transform time.
    """
    if max_features < 1 or ngram_max < 1:
        raise ValueError("max_features and ngram_max must be >= 1")
    if casing not in CASINGS:
        raise ValueError(f"casing must be one of {CASINGS}")
    corpus = list(corpus)
    if not corpus or not any(len(doc) for doc in corpus):
        raise DataError("cannot fit TF-IDF on a corpus with no tokens")
    df = Counter()
    for doc in corpus:
        df.update(set(ngrams(list(doc), ngram_max)))
    ranked = sorted(df.items(), key=lambda kv: (-kv[1], kv[0]))[:max_features]
    ranked.sort(key=lambda kv: kv[0])
    return TfidfVocabulary(
        terms=tuple(t for t, _ in ranked),
        doc_freq=tuple(n for _, n in ranked),
        corpus_size=len(corpus),
        max_features=max_features,
        ngram_max=ngram_max,
        casing=casing,
    )


def tfidf_transform(doc, vocab):
    """Smoothed TF-IDF of one token list, L2-normalised; OOV terms are ignored."""
    counts = Counter(g for g in ngrams(list(doc), vocab.ngram_max) if g in vocab.index)
    if not counts:
        return SparseVector(vocab.dimension, [], [], vocab.space_id)
    idx = np.array(sorted(vocab.index[g] for g in counts), dtype=np.int64)
    tf = np.array([counts[vocab.terms[i]] for i in idx], dtype=float)
    w = tf * vocab._idf[idx]
    w /= math.sqrt(float(np.dot(w, w)))
    return SparseVector(vocab.dimension, idx, w, vocab.space_id)


# --- grammar representation -----------------------------------------------

def grammar_features(s):
    """Channel-tagged features of every syntactic word, with repetition."""
    out = []
    for t in s.tokens:
        out.append(("UPOS", t.upos))
        out.append(("DEPREL", t.deprel))
        out.extend(("MORPH", f) for f in t.feats)
    return out


@dataclass(frozen=True)
class GrammarInventory:
    features: tuple[tuple[str, str], ...]
    index: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {f: i for i, f in enumerate(self.features)})
        if len(self.index) != len(self.features):
            raise ValueError("duplicate grammar features")

    def __len__(self):
        return len(self.features)

    @property
    def dimension(self):
        return len(self.features)

    def names(self):
        return [f"{ch}:{v}" for ch, v in self.features]

    def to_dict(self):
        return {"kind": "grammar", "features": [list(f) for f in self.features]}

    @classmethod
    def from_dict(cls, d):
        return cls(features=tuple((ch, v) for ch, v in d["features"]))

    @property
    def space_id(self):
        return _hash_payload(self.to_dict())


def fit_grammar_inventory(train):
    """Distinct UPOS, DEPREL and FEATS pairs seen in ``train``.

    Ordered by channel (UPOS, DEPREL, MORPH) and then lexicographically.
    """
    seen = set()
    n = 0
    for s in train:
        n += 1
        seen.update(grammar_features(s))
    if n == 0:
        raise DataError("cannot fit a grammar inventory on no sentences")
    rank = {ch: i for i, ch in enumerate(CHANNELS)}
    return GrammarInventory(tuple(sorted(seen, key=lambda f: (rank[f[0]], f[1]))))


@dataclass
class CoverageReport:
    """Tally of evaluation-time features missing from the inventory."""

    seen: int = 0
    unseen: Counter = field(default_factory=Counter)

    @property
    def unseen_total(self):
        return sum(self.unseen.values())

    @property
    def coverage(self):
        total = self.seen + self.unseen_total
        return self.seen / total if total else 1.0

    def as_dict(self):
        return {
            "seen": self.seen,
            "unseen": self.unseen_total,
            "coverage": self.coverage,
            "unseen_features": {f"{ch}:{v}": n for (ch, v), n in sorted(self.unseen.items())},
        }


def grammar_vector(s, inv, coverage=None):
    """Per-sentence counts over the inventory; unseen features go to ``coverage``."""
    counts = Counter()
    for f in grammar_features(s):
        i = inv.index.get(f)
        if i is None:
            if coverage is not None:
                coverage.unseen[f] += 1
            continue
        counts[i] += 1
        if coverage is not None:
            coverage.seen += 1
    return SparseVector.from_dict(inv.dimension, {i: float(c) for i, c in counts.items()},
                                  inv.space_id)


# --- persistence ------------------------------------------------------------

def feature_space_to_dict(space):
    d = space.to_dict()
    d["space_id"] = space.space_id
    return d


def feature_space_from_dict(d):
    kind = d.get("kind")
    if kind == "lemma_tfidf":
        space = TfidfVocabulary.from_dict(d)
    elif kind == "grammar":
        space = GrammarInventory.from_dict(d)
    else:
        raise DataError(f"unknown feature space kind {kind!r}")
    if "space_id" in d and d["space_id"] != space.space_id:
        raise DataError("feature space file is corrupt: space_id mismatch")
    return space


def save_feature_space(space, path, extra=None):
    d = feature_space_to_dict(space)
    if extra:
        d.update(extra)
    Path(path).write_text(json.dumps(d, ensure_ascii=False, indent=1, sort_keys=True) + "\n",
                          encoding="utf-8")


def load_feature_space(path):
    return feature_space_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
