import logging

import pytest

from turklvc.conllu import (
    MultiwordRange,
    Token,
    parse_conllu,
    serialize_conllu,
    syntactic_words,
)
from turklvc.errors import ConlluError

from conftest import raw_token_rows

ONE = "# sent_id = s1\n1\tgitti\tgit\tVERB\t_\t_\t0\troot\t_\t_\n"


def line(*cols):
    return "\t".join(str(c) for c in cols)


def test_minimal_document():
    tb = parse_conllu(ONE, strict=True)
    assert len(tb.sentences) == 1
    s = tb.sentences[0]
    assert s.sent_id == "s1"
    assert s.tokens == (Token(1, "gitti", "git", "VERB", (), 0, "root"),)


def test_range_line_stored_separately():
    doc = "\n".join([
        line("1", "Ben", "ben", "PRON", "_", "_", "3", "nsubj", "_", "_"),
        line("2", "eve", "ev", "NOUN", "_", "Case=Dat", "3", "obl", "_", "_"),
        line("3-4", "gittim", "_", "_", "_", "_", "_", "_", "_", "_"),
        line("3", "git", "git", "VERB", "_", "_", "0", "root", "_", "_"),
        line("4", "tim", "i", "AUX", "_", "_", "3", "cop", "_", "_"),
    ]) + "\n"
    s = parse_conllu(doc, strict=True).sentences[0]
    assert s.ranges == (MultiwordRange(3, 4, "gittim"),)
    assert [t.id for t in s.tokens] == [1, 2, 3, 4]


def test_fixture_shape(corpus, corpus_path):
    assert [s.sent_id for s in corpus] == ["fx-1", "fx-2", "fx-3", "fx-4", "fx-5"]
    assert corpus.stats.empty_nodes == 1
    assert corpus.stats.ranges == 1
    assert corpus.sentences[0].comments[0] == "# newdoc id = fx"
    assert corpus.sentences[1].text == "Ali karar verdi ve yardım etti."
    # FEATS "_" parses to an empty list
    assert corpus.sentences[4].tokens[2].feats == ()


def test_round_trip_fixture(corpus, corpus_path):
    again = parse_conllu(serialize_conllu(corpus), strict=True, name="fx")
    assert again == corpus
    # canonical output is a fixed point
    assert serialize_conllu(again) == serialize_conllu(corpus)


def test_round_trip_differs_only_by_empty_nodes(corpus_path, corpus):
    original = corpus_path.read_text(encoding="utf-8").splitlines()
    emitted = serialize_conllu(corpus).splitlines()
    dropped = [ln for ln in original if ln not in emitted]
    assert len(dropped) == 1 and dropped[0].startswith("2.1\t")


def test_serialize_empty_treebank():
    assert serialize_conllu(parse_conllu("")) == ""


def test_serialize_underscore_feats():
    out = serialize_conllu(parse_conllu(ONE))
    assert out.splitlines()[1].split("\t")[5] == "_"


def test_crlf_accepted_lf_emitted():
    tb = parse_conllu(ONE.replace("\n", "\r\n"), strict=True)
    assert tb == parse_conllu(ONE, strict=True)
    assert "\r" not in serialize_conllu(tb)


def test_syntactic_words_match_raw_count(corpus, corpus_path):
    text = corpus_path.read_text(encoding="utf-8")
    blocks = [b for b in text.split("\n\n") if b.strip()]
    assert len(blocks) == len(corpus.sentences)
    for block, s in zip(blocks, corpus):
        assert len(syntactic_words(s)) == len(raw_token_rows(block))


def test_syntactic_words_drop_empty_node(corpus):
    s = corpus.sentences[2]
    # hand count: 1, 2, 3, 4 (2.1 is an empty node)
    assert [t.id for t in syntactic_words(s)] == [1, 2, 3, 4]
    assert s.empty_nodes == 1


def test_syntactic_words_exclude_ranges(corpus):
    s = corpus.sentences[4]
    assert len(syntactic_words(s)) == 3
    assert all(isinstance(t, Token) for t in syntactic_words(s))


def test_heads_valid_in_strict_mode(corpus):
    for s in corpus:
        ids = {t.id for t in s.tokens}
        assert all(t.head == 0 or t.head in ids for t in s.tokens)


@pytest.mark.parametrize("bad", [
    line("1", "a", "a", "X", "_", "_", "0", "root", "_"),             # 9 columns
    line("1", "a", "a", "X", "_", "_", "zero", "root", "_", "_"),     # head not an int
    line("1", "a", "a", "X", "_", "Case", "0", "root", "_", "_"),     # feature without '='
])
def test_strict_rejects_malformed_lines(bad):
    with pytest.raises(ConlluError):
        parse_conllu(bad + "\n", strict=True)


def test_strict_rejects_duplicate_id():
    doc = ONE + line("1", "x", "x", "X", "_", "_", "1", "dep", "_", "_") + "\n"
    with pytest.raises(ConlluError, match="duplicate token id"):
        parse_conllu(doc, strict=True)


def test_lenient_skips_and_logs(caplog):
    doc = ONE + line("2", "x", "x", "X", "_", "_", "one", "dep", "_", "_") + "\n"
    with caplog.at_level(logging.WARNING):
        tb = parse_conllu(doc, strict=False)
    assert len(tb.sentences[0].tokens) == 1
    assert tb.stats.skipped_lines == 1
    assert "non-integer head" in caplog.text


def test_multiple_roots_flagged_lenient_rejected_strict():
    doc = "\n".join([
        line("1", "a", "a", "X", "_", "_", "0", "root", "_", "_"),
        line("2", "b", "b", "X", "_", "_", "0", "root", "_", "_"),
    ]) + "\n"
    with pytest.raises(ConlluError, match="2 root tokens"):
        parse_conllu(doc, strict=True)
    tb = parse_conllu(doc, strict=False)
    assert tb.stats.anomalous_sentences == (tb.sentences[0].sent_id,)
    assert "2 root tokens" in tb.sentences[0].flags


def test_dangling_head_rejected_strict():
    doc = line("1", "a", "a", "X", "_", "_", "0", "root", "_", "_") + "\n" + \
        line("2", "b", "b", "X", "_", "_", "7", "dep", "_", "_") + "\n"
    with pytest.raises(ConlluError, match="dangling head"):
        parse_conllu(doc, strict=True)


def test_duplicate_sent_id():
    with pytest.raises(ConlluError):
        parse_conllu(ONE + "\n" + ONE, strict=True)
    tb = parse_conllu(ONE + "\n" + ONE, strict=False)
    assert [s.sent_id for s in tb] == ["s1", "s1~2"]


def test_missing_sent_id_is_generated_stably():
    doc = line("1", "a", "a", "X", "_", "_", "0", "root", "_", "_") + "\n"
    tb = parse_conllu(doc, name="tb")
    assert tb.sentences[0].sent_id == "tb-1"
    assert parse_conllu(serialize_conllu(tb), name="tb") == tb


def test_token_invariants():
    with pytest.raises(ValueError):
        Token(0, "a", "a", "X")
    with pytest.raises(ValueError):
        Token(2, "a", "a", "X", head=2)
    with pytest.raises(ValueError):
        Token(1, "a", "a", "X", feats=("Case=",))
