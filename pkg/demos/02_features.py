"""
Lemma TF-IDF and grammar features
=================================

The two sentence representations side by side.
"""

import math

from turklvc.featurize import (
    CoverageReport, fit_grammar_inventory, fit_tfidf, grammar_vector, lemma_text,
    lower, tfidf_transform,
)
from turklvc.mock import mock_treebank

# idf is smoothed: ln((1 + N) / (1 + df)) + 1
corpus = [["al", "ver"], ["al", "al", "git"]]
vocab = fit_tfidf(corpus)
for term in vocab.terms:
    print(f"{term!r:10} df={vocab.df(term)} idf={vocab.idf(term):.6f}")
print("check:", vocab.idf("ver") == math.log(1.5) + 1)

x = tfidf_transform(["al", "ver"], vocab)
print({vocab.terms[i]: round(v, 6) for i, v in x.entries})
print("norm:", x.norm)

# Turkish casing keeps dotted and dotless i apart
print(lower("IŞIK İzmir", "standard"), "|", lower("IŞIK İzmir", "turkish"))

# lemma text of a mock sentence, unigrams and bigrams
tb = mock_treebank(40, seed=2)
print(lemma_text(tb.sentences[0]))

# grammar channels: UPOS, DEPREL and MORPH, fit on a training portion
train, held = tb.sentences[:30], tb.sentences[30:]
inv = fit_grammar_inventory(train)
print(len(inv.features), "grammar features, e.g.", inv.names()[:5])

cov = CoverageReport()
vecs = [grammar_vector(s, inv, cov) for s in held]
print("held-out coverage:", cov.as_dict()["coverage"])
print("first vector nnz:", vecs[0].nnz)
