"""Small synthetic Turkish-like treebanks and diagnostic sets.

Used by the tests and demos in place of the licensed UD treebanks. The
sentences are grammatical enough to exercise every extraction rule and
feature channel; they make no claim to linguistic realism.
"""

from __future__ import annotations

import random

from .calibrate import DiagnosticItem
from .conllu import Sentence, Token, Treebank

LVC_PAIRS = [
    ("karar", "ver", "karar verdi"), ("yardım", "et", "yardım etti"),
    ("söz", "ver", "söz verdi"), ("telefon", "et", "telefon etti"),
    ("dikkat", "et", "dikkat etti"), ("kabul", "et", "kabul etti"),
    ("öpücük", "ver", "öpücük verdi"), ("rol", "oyna", "rol oynadı"),
]
LITERAL_OBJECTS = ["kitap", "elma", "para", "çiçek", "mektup", "anahtar"]
SUBJECTS = [("Ali", "Ali", "PROPN"), ("Ayşe", "Ayşe", "PROPN"), ("öğretmen", "öğretmen", "NOUN"),
            ("çocuk", "çocuk", "NOUN"), ("İsmail", "İsmail", "PROPN")]
OTHER_VERBS = [("git", "gitti"), ("gel", "geldi"), ("uyu", "uyudu"), ("koş", "koştu"),
               ("otur", "oturdu")]
ADVERBS = [("dün", "dün"), ("bugün", "bugün"), ("hızla", "hızla")]

VERB_FEATS = ("Aspect=Perf", "Mood=Ind", "Number=Sing", "Person=3", "Polarity=Pos",
              "Tense=Past", "VerbForm=Fin")
NOUN_FEATS = ("Case=Nom", "Number=Sing", "Person=3")
ACC_FEATS = ("Case=Acc", "Number=Sing", "Person=3")


def _subject(rng, tid, head):
    form, lemma, upos = rng.choice(SUBJECTS)
    return Token(tid, form, lemma, upos, NOUN_FEATS, head, "nsubj")


def lvc_sentence(rng, sent_id, relation="compound:lvc"):
    noun, verb, phrase = rng.choice(LVC_PAIRS)
    nform, vform = phrase.split()
    toks = [
        _subject(rng, 1, 3),
        Token(2, nform, noun, "NOUN", NOUN_FEATS, 3, relation),
        Token(3, vform, verb, "VERB", VERB_FEATS, 0, "root"),
        Token(4, ".", ".", "PUNCT", (), 3, "punct"),
    ]
    return _sentence(sent_id, toks)


def literal_sentence(rng, sent_id):
    """Light verb used with an ordinary accusative object."""
    _, verb, phrase = rng.choice([p for p in LVC_PAIRS if p[1] == "ver"])
    obj = rng.choice(LITERAL_OBJECTS)
    toks = [
        _subject(rng, 1, 3),
        Token(2, obj + "ı", obj, "NOUN", ACC_FEATS, 3, "obj"),
        Token(3, phrase.split()[1], verb, "VERB", VERB_FEATS, 0, "root"),
        Token(4, ".", ".", "PUNCT", (), 3, "punct"),
    ]
    return _sentence(sent_id, toks)


def random_sentence(rng, sent_id):
    lemma, form = rng.choice(OTHER_VERBS)
    adv_form, adv_lemma = rng.choice(ADVERBS)
    toks = [
        _subject(rng, 1, 3),
        Token(2, adv_form, adv_lemma, "ADV", (), 3, "advmod"),
        Token(3, form, lemma, "VERB", VERB_FEATS, 0, "root"),
        Token(4, ".", ".", "PUNCT", (), 3, "punct"),
    ]
    return _sentence(sent_id, toks)


def adj_compound_sentence(rng, sent_id):
    """A ``compound`` arc with an ADJ dependent; never a candidate."""
    lemma, form = rng.choice(OTHER_VERBS)
    toks = [
        _subject(rng, 1, 3),
        Token(2, "hızlı", "hızlı", "ADJ", (), 3, "compound"),
        Token(3, form, lemma, "VERB", VERB_FEATS, 0, "root"),
        Token(4, ".", ".", "PUNCT", (), 3, "punct"),
    ]
    return _sentence(sent_id, toks)


def _sentence(sent_id, toks):
    text = " ".join(t.form for t in toks[:-1]) + "."
    return Sentence(sent_id=sent_id, tokens=tuple(toks), text=text,
                    comments=(f"# sent_id = {sent_id}", f"# text = {text}"))


def mock_treebank(n_sentences=30, seed=0, name="mock", explicit=True, positive_rate=0.3):
    """Treebank mixing LVC, literal, random and ADJ-compound sentences.

    ``explicit`` selects whether LVCs carry ``compound:lvc`` or plain
    ``compound`` arcs.
    """
    rng = random.Random(seed)
    relation = "compound:lvc" if explicit else "compound"
    sents = []
    for i in range(1, n_sentences + 1):
        sid = f"{name}-{i:04d}"
        r = rng.random()
        if r < positive_rate:
            sents.append(lvc_sentence(rng, sid, relation))
        elif r < positive_rate + (1 - positive_rate) / 3:
            sents.append(literal_sentence(rng, sid))
        elif r < positive_rate + 2 * (1 - positive_rate) / 3 or explicit:
            sents.append(random_sentence(rng, sid))
        else:
            sents.append(adj_compound_sentence(rng, sid))
    return Treebank(name=name, sentences=tuple(sents))


def mock_diagnostic_set(per_condition=3, seed=1):
    """Balanced items plus a companion treebank keyed by ``conllu_ref``."""
    rng = random.Random(seed)
    makers = {
        "Random": random_sentence,
        "NLVC": literal_sentence,
        "LVC": lvc_sentence,
    }
    items, sents = [], []
    for cond, make in makers.items():
        for k in range(1, per_condition + 1):
            item_id = f"{cond.lower()}-{k:02d}"
            s = make(rng, item_id)
            sents.append(s)
            items.append(DiagnosticItem(
                item_id=item_id, surface_text=s.text, condition=cond,
                lemma_text=tuple(t.lemma for t in s.tokens), conllu_ref=item_id,
            ))
    return items, Treebank(name="diagnostic", sentences=tuple(sents))
