"""
Split-wise diagnostic reports
=============================

Score predictions on a balanced Random / NLVC / LVC diagnostic set and
print the report table. The counts below are synthetic.
"""

from turklvc.calibrate import SplitReport, evaluate_split, render_report
from turklvc.mock import mock_diagnostic_set

# reports straight from per-condition correct counts over 49/49/49
rows = [
    SplitReport.from_counts((48, 37, 24), run_label="Run 1", model="Lemma-only LR"),
    SplitReport.from_counts((48, 43, 16), run_label="Run 2", model="Lemma-only LR"),
    SplitReport.from_counts((49, 47, 9), run_label="Run 3", model="Lemma-only LR"),
    SplitReport.from_counts((49, 45, 5), run_label="default", model="Grammar-only LR"),
]
print(render_report(rows))

# raising the threshold trades false positives for false negatives
for r in rows[:3]:
    print(r.run_label, "FP", r.fp_pooled, "FN", r.fn_pooled)

# on a mock set, with a predictor that says "LVC" for every even item
items, _ = mock_diagnostic_set(per_condition=3)
preds = {it.item_id: i % 2 for i, it in enumerate(items)}
rep = evaluate_split(preds, items, run_label="alternating", model="toy")
print(render_report([rep]))

# recall is the LVC success rate by construction
print(rep.recall == rep.rate("LVC"))
print(render_report([rep], "json"))
