"""
Training and threshold calibration
==================================

Fit the class-weighted logistic regression on mock data, then pick a
threshold from the held-out precision/recall sweep.
"""

import numpy as np

from turklvc.calibrate import pr_sweep, select_tau_max_f1, select_tau_precision_floor
from turklvc.featurize import fit_tfidf, lemma_text, tfidf_transform
from turklvc.logreg import (
    SplitSpec, class_weights, predict_proba_batch, stratified_split, train,
)
from turklvc.mock import mock_treebank
from turklvc.supervision import assemble_dataset, mine_candidates

tb = mock_treebank(200, seed=8, positive_rate=0.25)
cands, _ = mine_candidates([tb])
dataset, stats = assemble_dataset([tb], cands, set())
print(stats.as_dict())

# stratified 80/20 split, reproducible from the seed
tr, te = stratified_split(dataset, SplitSpec(0.8, seed=0))
print(len(tr), "train /", len(te), "held out")

vocab = fit_tfidf([lemma_text(ls) for ls in tr])
X_tr = [tfidf_transform(lemma_text(ls), vocab) for ls in tr]
y_tr = np.array([ls.label for ls in tr])

cw = class_weights(y_tr)
print("class weights:", cw)
model = train(X_tr, y_tr, lam=1.0, cw=cw, feature_space_id=vocab.space_id)
print(model.stop_reason, model.iterations, "iterations, |grad| =", model.grad_norm)

# the loss never goes up
print("monotone loss:", bool(np.all(np.diff(model.loss_history) <= 0)))

scores = predict_proba_batch(model, [tfidf_transform(lemma_text(ls), vocab) for ls in te])
gold = [ls.label for ls in te]
points = pr_sweep(scores, gold)
tau = select_tau_max_f1(points)
best = max(points, key=lambda p: p.f1)
print(f"max-F1 tau = {tau:.4f} (F1 {best.f1:.3f})")

sel = select_tau_precision_floor(points, 0.9)
print("precision >= 0.9:", sel)

# the tiny worked example: scores 0.9+ 0.7- 0.6+ 0.2-
pts = pr_sweep([0.9, 0.7, 0.6, 0.2], [1, 0, 1, 0])
for p in pts:
    print(p.as_row())
print("tau =", select_tau_max_f1(pts))
