"""
The command-line pipeline
=========================

Write mock inputs and an experiment file, then run every stage of
``turklvc`` the way a shell user would.
"""

import sys
import tempfile
from pathlib import Path

from turklvc.calibrate import write_diagnostic_set
from turklvc.cli import main
from turklvc.conllu import write_conllu
from turklvc.mock import mock_diagnostic_set, mock_treebank

work = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp())
work.mkdir(parents=True, exist_ok=True)

write_conllu(mock_treebank(120, seed=5), work / "mock.conllu")
items, companion = mock_diagnostic_set(per_condition=5)
write_diagnostic_set(items, work / "diag.jsonl")
write_conllu(companion, work / "diag.conllu")

# paths in the experiment file are relative to the file itself
(work / "experiment.toml").write_text("""\
[data]
treebanks = ["mock.conllu"]
output_dir = "out"

[features]
representation = "lemma_tfidf"
casing = "turkish"

[model]
lambda = 1.0

[split]
train_fraction = 0.8
seed = 0

[calibration]
mode = "max_f1"

[diagnostic]
items = "diag.jsonl"
conllu = "diag.conllu"
""", encoding="utf-8")

cfg = str(work / "experiment.toml")
# between extract and build a human would fill in the review sheet;
# with no verdicts every candidate is kept
for stage in ("extract", "build", "train", "calibrate"):
    print(f"$ turklvc {stage} -c experiment.toml")
    assert main([stage, "-c", cfg]) == 0

print("$ turklvc evaluate -c experiment.toml --run-label 'max-F1'")
main(["evaluate", "-c", cfg, "--run-label", "max-F1", "--model-name", "Lemma-only LR"])

# the same data through the grammar representation
print("$ turklvc train/evaluate --representation grammar")
for stage in ("train", "evaluate"):
    argv = [stage, "-c", cfg, "--representation", "grammar", "-o", str(work / "out_grammar")]
    if stage == "train":
        main(["build", "-c", cfg, "-o", str(work / "out_grammar")])
    else:
        argv += ["--model-name", "Grammar-only LR"]
    main(argv)

print("$ turklvc report out/report.json out_grammar/report.json")
main(["report", str(work / "out" / "report.json"), str(work / "out_grammar" / "report.json")])
print("artifacts in", work)
