"""CoNLL-U reading, writing and the in-memory tree model.

Only basic UD trees are modelled. Empty nodes (``n.m`` ids) are counted and
dropped; DEPS and MISC are kept as opaque strings so files round-trip.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConlluError

logger = logging.getLogger(__name__)

__all__ = [
    "Token",
    "MultiwordRange",
    "Sentence",
    "Treebank",
    "ParseStats",
    "parse_conllu",
    "serialize_conllu",
    "syntactic_words",
    "read_conllu",
    "write_conllu",
    "read_treebanks",
]


@dataclass(frozen=True)
class Token:
    id: int
    form: str
    lemma: str
    upos: str
    feats: tuple[str, ...] = ()
    head: int = 0
    deprel: str = "_"
    xpos: str = "_"
    deps: str = "_"
    misc: str = "_"

    def __post_init__(self):
        if self.id < 1:
            raise ValueError(f"token id must be >= 1, got {self.id}")
        if self.head < 0:
            raise ValueError(f"head must be >= 0, got {self.head}")
        if self.head == self.id:
            raise ValueError(f"token {self.id} is its own head")
        for feat in self.feats:
            key, sep, value = feat.partition("=")
            if not sep or not key or not value or "=" in value:
                raise ValueError(f"malformed feature {feat!r} on token {self.id}")

    @property
    def feats_dict(self):
        return dict(f.split("=", 1) for f in self.feats)


@dataclass(frozen=True)
class MultiwordRange:
    start: int
    end: int
    form: str
    misc: str = "_"

    def __post_init__(self):
        if not 1 <= self.start < self.end:
            raise ValueError(f"bad range {self.start}-{self.end}")


@dataclass(frozen=True)
class Sentence:
    sent_id: str
    tokens: tuple[Token, ...]
    text: str | None = None
    ranges: tuple[MultiwordRange, ...] = ()
    comments: tuple[str, ...] = ()
    # Diagnostics from parsing; not part of the structure.
    flags: tuple[str, ...] = field(default=(), compare=False)
    empty_nodes: int = field(default=0, compare=False)

    def __len__(self):
        return len(self.tokens)

    @property
    def surface(self):
        """Original text if a ``# text`` comment exists, else space-joined forms."""
        if self.text is not None:
            return self.text
        return " ".join(t.form for t in self.tokens)

    def token(self, token_id):
        if 0 < token_id <= len(self.tokens) and self.tokens[token_id - 1].id == token_id:
            return self.tokens[token_id - 1]
        for tok in self.tokens:
            if tok.id == token_id:
                return tok
        raise KeyError(token_id)

    def validate(self):
        """Return a list of structural problems (empty when the tree is sound)."""
        problems = []
        ids = [t.id for t in self.tokens]
        if ids != list(range(1, len(ids) + 1)):
            problems.append("token ids are not 1..n consecutive")
        known = set(ids)
        for t in self.tokens:
            if t.head != 0 and t.head not in known:
                problems.append(f"token {t.id} has dangling head {t.head}")
        roots = sum(1 for t in self.tokens if t.head == 0)
        if self.tokens and roots != 1:
            problems.append(f"{roots} root tokens")
        return problems


@dataclass(frozen=True)
class ParseStats:
    sentences: int = 0
    tokens: int = 0
    ranges: int = 0
    empty_nodes: int = 0
    skipped_lines: int = 0
    anomalous_sentences: tuple[str, ...] = ()

    def as_dict(self):
        return {
            "sentences": self.sentences,
            "tokens": self.tokens,
            "ranges": self.ranges,
            "empty_nodes": self.empty_nodes,
            "skipped_lines": self.skipped_lines,
            "anomalous_sentences": list(self.anomalous_sentences),
        }


@dataclass(frozen=True)
class Treebank:
    name: str
    sentences: tuple[Sentence, ...]
    stats: ParseStats = field(default_factory=ParseStats, compare=False)

    def __post_init__(self):
        seen = set()
        for s in self.sentences:
            if s.sent_id in seen:
                raise ValueError(f"duplicate sent_id {s.sent_id!r} in {self.name}")
            seen.add(s.sent_id)

    def __len__(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)


def _split_blocks(text):
    """Yield (first_line_no, lines) per sentence block."""
    block, start = [], None
    for no, line in enumerate(text.splitlines(), 1):
        line = line.rstrip("\r")
        if line.strip() == "":
            if block:
                yield start, block
            block, start = [], None
            continue
        if start is None:
            start = no
        block.append((no, line))
    if block:
        yield start, block


def _parse_feats(raw, line_no, strict):
    if raw == "_" or raw == "":
        return ()
    out = []
    for feat in raw.split("|"):
        key, sep, value = feat.partition("=")
        if sep and key and value and "=" not in value:
            out.append(feat)
            continue
        if strict:
            raise ConlluError(f"malformed feature {feat!r}", line_no)
        logger.warning("line %d: dropping malformed feature %r", line_no, feat)
    return tuple(out)


class _Block:
    """Accumulates one sentence while its lines are read."""

    def __init__(self):
        self.comments = []
        self.tokens = []
        self.ranges = []
        self.empty = 0
        self.flags = []
        self.skipped = 0


def _parse_block(lines, strict, block_no, name):
    b = _Block()
    seen_ids = set()

    def fail(message, line_no):
        if strict:
            raise ConlluError(message, line_no)
        logger.warning("%s line %d: %s; line skipped", name or "<conllu>", line_no, message)
        b.skipped += 1
        b.flags.append(f"skipped line {line_no}: {message}")

    for line_no, line in lines:
        if line.startswith("#"):
            b.comments.append(line)
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            fail(f"expected 10 columns, found {len(cols)}", line_no)
            continue
        tid = cols[0]
        if "." in tid:
            b.empty += 1
            continue
        if "-" in tid:
            try:
                start, end = (int(x) for x in tid.split("-"))
                b.ranges.append(MultiwordRange(start, end, cols[1], cols[9]))
            except ValueError:
                fail(f"bad range id {tid!r}", line_no)
            continue
        try:
            idx = int(tid)
        except ValueError:
            fail(f"non-integer token id {tid!r}", line_no)
            continue
        if idx in seen_ids:
            fail(f"duplicate token id {idx}", line_no)
            continue
        try:
            head = int(cols[6])
        except ValueError:
            fail(f"non-integer head {cols[6]!r}", line_no)
            continue
        try:
            feats = _parse_feats(cols[5], line_no, strict)
            tok = Token(
                id=idx, form=cols[1], lemma=cols[2], upos=cols[3],
                feats=feats, head=head, deprel=cols[7],
                xpos=cols[4], deps=cols[8], misc=cols[9],
            )
        except ValueError as exc:
            fail(str(exc), line_no)
            continue
        seen_ids.add(idx)
        b.tokens.append(tok)

    sent_id = text = None
    for c in b.comments:
        body = c[1:].strip()
        key, sep, value = body.partition("=")
        if not sep:
            continue
        key = key.strip()
        if key == "sent_id" and sent_id is None:
            sent_id = value.strip()
        elif key == "text" and text is None:
            text = value.strip()
    if sent_id is None:
        sent_id = f"{name or 'sent'}-{block_no}"

    sent = Sentence(
        sent_id=sent_id, tokens=tuple(b.tokens), text=text,
        ranges=tuple(b.ranges), comments=tuple(b.comments),
        empty_nodes=b.empty,
    )
    problems = sent.validate()
    if problems:
        if strict:
            raise ConlluError(f"sentence {sent_id}: " + "; ".join(problems), lines[0][0])
        logger.warning("sentence %s kept with anomalies: %s", sent_id, "; ".join(problems))
    b.flags.extend(problems)
    if b.flags:
        sent = Sentence(
            sent_id=sent.sent_id, tokens=sent.tokens, text=sent.text,
            ranges=sent.ranges, comments=sent.comments,
            flags=tuple(b.flags), empty_nodes=b.empty,
        )
    return sent, b.skipped


def parse_conllu(text, strict=False, name=""):
    """Parse a CoNLL-U document into a :class:`Treebank`.

    In strict mode any malformed line or broken tree raises
    :class:`ConlluError`. In lenient mode bad token lines are skipped and
    logged, and sentences with tree anomalies (several roots, dangling
    heads) are kept but flagged and listed in ``Treebank.stats``.
    Blocks that contain only comments are ignored.
    """
    if text.startswith("\ufeff"):
        text = text[1:]
    sentences = []
    seen = set()
    n_tok = n_rng = n_empty = n_skip = 0
    anomalous = []
    for block_no, (first, lines) in enumerate(_split_blocks(text), 1):
        sent, skipped = _parse_block(lines, strict, block_no, name)
        n_skip += skipped
        n_empty += sent.empty_nodes
        if not sent.tokens:
            if any(not ln.startswith("#") for _, ln in lines):
                if strict:
                    raise ConlluError("sentence without tokens", first)
                logger.warning("line %d: block without valid tokens dropped", first)
            continue
        if sent.sent_id in seen:
            if strict:
                raise ConlluError(f"duplicate sent_id {sent.sent_id!r}", first)
            new_id = sent.sent_id
            k = 2
            while new_id in seen:
                new_id = f"{sent.sent_id}~{k}"
                k += 1
            logger.warning("duplicate sent_id %r renamed to %r", sent.sent_id, new_id)
            sent = Sentence(
                sent_id=new_id, tokens=sent.tokens, text=sent.text,
                ranges=sent.ranges, comments=sent.comments,
                flags=sent.flags + (f"renamed from duplicate id {sent.sent_id}",),
                empty_nodes=sent.empty_nodes,
            )
        seen.add(sent.sent_id)
        if sent.flags:
            anomalous.append(sent.sent_id)
        n_tok += len(sent.tokens)
        n_rng += len(sent.ranges)
        sentences.append(sent)
    if n_empty:
        logger.info("%s: skipped %d empty nodes", name or "<conllu>", n_empty)
    stats = ParseStats(
        sentences=len(sentences), tokens=n_tok, ranges=n_rng,
        empty_nodes=n_empty, skipped_lines=n_skip,
        anomalous_sentences=tuple(anomalous),
    )
    return Treebank(name=name, sentences=tuple(sentences), stats=stats)


def _token_line(t):
    feats = "|".join(t.feats) if t.feats else "_"
    cols = [str(t.id), t.form, t.lemma, t.upos, t.xpos, feats,
            str(t.head), t.deprel, t.deps, t.misc]
    return "\t".join(cols)


def serialize_conllu(tb):
    """Emit canonical CoNLL-U (LF line endings, trailing blank line per sentence)."""
    out = []
    for s in tb.sentences:
        out.extend(s.comments)
        ranges = {r.start: r for r in s.ranges}
        for t in s.tokens:
            r = ranges.pop(t.id, None)
            if r is not None:
                out.append("\t".join([f"{r.start}-{r.end}", r.form] + ["_"] * 7 + [r.misc]))
            out.append(_token_line(t))
        for r in ranges.values():
            # range whose first word was dropped in lenient mode
            out.append("\t".join([f"{r.start}-{r.end}", r.form] + ["_"] * 7 + [r.misc]))
        out.append("")
    return "\n".join(out) + ("\n" if out else "")


def syntactic_words(s):
    """Integer-id tokens of ``s`` in order; ranges and empty nodes never appear."""
    return list(s.tokens)


def read_conllu(path, strict=False, name=None):
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_conllu(text, strict=strict, name=name if name is not None else path.stem)


def write_conllu(tb, path):
    Path(path).write_text(serialize_conllu(tb), encoding="utf-8", newline="\n")


def read_treebanks(paths, strict=False):
    """Read files or directories of ``*.conllu`` files, sorted by path.

    A directory becomes one treebank named after the directory, with its
    files concatenated in sorted order; a file becomes a treebank named
    after its stem.
    """
    out = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            files = sorted(p.glob("*.conllu"))
            if not files:
                raise ConlluError(f"no .conllu files in {p}")
            text = "\n\n".join(f.read_text(encoding="utf-8") for f in files)
            out.append(parse_conllu(text, strict=strict, name=p.name))
        elif p.is_file():
            out.append(read_conllu(p, strict=strict))
        else:
            raise ConlluError(f"no such file or directory: {p}")
    return out
