"""Command-line driver: extract, build, train, calibrate, evaluate, report.

Every stage reads one TOML experiment file (``--config``); command-line
flags override its values. Outputs go to ``output_dir`` and carry the hash
of the resolved configuration.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numerical failure.
Set ``TURKLVC_LOG`` (DEBUG, INFO, WARNING, ...) for log verbosity.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import calibrate as cal
from . import featurize as fz
from . import logreg as lr
from . import supervision as ws
from .conllu import read_conllu, read_treebanks
from .errors import ConfigError, DataError, LvcError, NumericalError

logger = logging.getLogger("turklvc")

REPRESENTATIONS = ("lemma_tfidf", "grammar")
CALIBRATION_MODES = ("none", "max_f1", "precision_floor")
DEFAULT_MAX_ITER = {"lemma_tfidf": 1000, "grammar": 2000}


@dataclass
class ExperimentConfig:
    treebank_paths: list = field(default_factory=list)
    review_sheet_path: str | None = None
    output_dir: str = "out"
    representation: str = "lemma_tfidf"
    casing: str = "standard"
    max_features: int | None = None
    ngram_max: int | None = None
    lam: float = 1.0
    max_iter: int | None = None
    tol: float = 1e-6
    train_fraction: float = 0.8
    seed: int = 0
    calibration_mode: str = "max_f1"
    floor: float = 0.8
    diagnostic_items: str | None = None
    diagnostic_conllu: str | None = None
    per_condition: int | None = None

    def __post_init__(self):
        if self.representation not in REPRESENTATIONS:
            raise ConfigError(f"representation must be one of {REPRESENTATIONS}")
        if self.representation == "grammar":
            if self.max_features is not None or self.ngram_max is not None:
                raise ConfigError("max_features/ngram_max apply only to lemma_tfidf")
        else:
            if self.max_features is None:
                self.max_features = 5000
            if self.ngram_max is None:
                self.ngram_max = 2
            if self.max_features < 1 or self.ngram_max < 1:
                raise ConfigError("max_features and ngram_max must be >= 1")
        if self.max_iter is None:
            self.max_iter = DEFAULT_MAX_ITER[self.representation]
        if self.casing not in fz.CASINGS:
            raise ConfigError(f"casing must be one of {fz.CASINGS}")
        if self.calibration_mode not in CALIBRATION_MODES:
            raise ConfigError(f"calibration mode must be one of {CALIBRATION_MODES}")
        if not 0 < self.train_fraction < 1:
            raise ConfigError("split.train_fraction must lie in (0, 1)")
        if not 0 <= self.floor <= 1:
            raise ConfigError("calibration.floor must lie in [0, 1]")
        if self.lam <= 0 or self.tol < 0 or self.max_iter < 0:
            raise ConfigError("model.lambda must be > 0, tol and max_iter >= 0")

    @property
    def out(self):
        return Path(self.output_dir)

    @property
    def review_sheet(self):
        return Path(self.review_sheet_path) if self.review_sheet_path else self.out / "review_sheet.tsv"

    def config_hash(self):
        blob = json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


# TOML section/key -> config attribute
_TOML_KEYS = {
    ("data", "treebanks"): "treebank_paths",
    ("data", "review_sheet"): "review_sheet_path",
    ("data", "output_dir"): "output_dir",
    ("features", "representation"): "representation",
    ("features", "casing"): "casing",
    ("features", "max_features"): "max_features",
    ("features", "ngram_max"): "ngram_max",
    ("model", "lambda"): "lam",
    ("model", "max_iter"): "max_iter",
    ("model", "tol"): "tol",
    ("split", "train_fraction"): "train_fraction",
    ("split", "seed"): "seed",
    ("calibration", "mode"): "calibration_mode",
    ("calibration", "floor"): "floor",
    ("diagnostic", "items"): "diagnostic_items",
    ("diagnostic", "conllu"): "diagnostic_conllu",
    ("diagnostic", "per_condition"): "per_condition",
}
_PATH_KEYS = {"review_sheet_path", "output_dir", "diagnostic_items", "diagnostic_conllu"}


def load_config(path=None, overrides=None):
    """Merge a TOML file with flag overrides; relative paths follow the file."""
    values = {}
    if path is not None:
        path = Path(path)
        try:
            doc = tomllib.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        base = path.parent
        for section, body in doc.items():
            if not isinstance(body, dict):
                raise ConfigError(f"{path}: top-level key {section!r} must be a [section]")
            for key, value in body.items():
                attr = _TOML_KEYS.get((section, key))
                if attr is None:
                    raise ConfigError(f"{path}: unknown key {section}.{key}")
                if attr in _PATH_KEYS and value is not None:
                    value = str(base / value)
                elif attr == "treebank_paths":
                    value = [str(base / v) for v in value]
                values[attr] = value
    for attr, value in (overrides or {}).items():
        if value is not None:
            values[attr] = value
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


# --- helpers ----------------------------------------------------------------

def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True, ensure_ascii=False) + "\n",
                          encoding="utf-8")


def _read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"missing file: {path}") from None


def _require(path, what):
    if path is None or not Path(path).exists():
        raise DataError(f"{what} not found: {path}")
    return Path(path)


def _treebanks(cfg):
    if not cfg.treebank_paths:
        raise ConfigError("no treebanks configured (data.treebanks)")
    tbs = read_treebanks(cfg.treebank_paths, strict=False)
    if sum(len(tb) for tb in tbs) == 0:
        raise DataError("treebanks contain no sentences")
    return tbs


def _meta(cfg, stage):
    return {"config_hash": cfg.config_hash(), "stage": stage}


def _binary_metrics(gold, pred):
    gold = np.asarray(gold)
    pred = np.asarray(pred)
    tp = int(np.sum((pred == 1) & (gold == 1)))
    fp = int(np.sum((pred == 1) & (gold == 0)))
    fn = int(np.sum((pred == 0) & (gold == 1)))
    tn = int(np.sum((pred == 0) & (gold == 0)))
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
    return {"n": int(gold.size), "tp": tp, "fp": fp, "fn": fn, "tn": tn,
            "accuracy": (tp + tn) / gold.size if gold.size else 0.0,
            "precision": prec, "recall": rec, "f1": f1}


# --- stages -----------------------------------------------------------------

def cmd_extract(cfg):
    tbs = _treebanks(cfg)
    cands, summary = ws.mine_candidates(tbs)
    cfg.out.mkdir(parents=True, exist_ok=True)
    stats = summary.as_dict()
    stats.update(_meta(cfg, "extract"))
    sheet = cfg.out / "review_sheet.tsv"
    if cands:
        rows = ws.export_review_sheet(cands, sheet, f"config_hash={cfg.config_hash()}")
    else:
        logger.warning("no candidates found; writing an empty review sheet")
        sheet.write_text(f"# config_hash={cfg.config_hash()}\n" + "\t".join(ws.SHEET_COLUMNS) + "\n",
                         encoding="utf-8")
        rows = 0
    stats["sheet_rows"] = rows
    _write_json(cfg.out / "extract_stats.json", stats)
    print(f"wrote {rows} candidates to {sheet}")
    return 0


def cmd_build(cfg):
    tbs = _treebanks(cfg)
    cands, _ = ws.mine_candidates(tbs)
    cands = ws.dedupe_candidates(cands)
    sheet = cfg.review_sheet
    decisions = ws.read_review_sheet(sheet) if sheet.exists() else []
    if not sheet.exists():
        logger.warning("review sheet %s not found; keeping all candidates", sheet)
    kept, removed = ws.apply_review(cands, decisions)
    dataset, stats = ws.assemble_dataset(tbs, kept, removed)
    cfg.out.mkdir(parents=True, exist_ok=True)
    path = cfg.out / "dataset.jsonl"
    ws.write_dataset(dataset, path, _meta(cfg, "build"))
    out = stats.as_dict()
    out["removed_candidates"] = len(cands) - len(kept)
    out.update(_meta(cfg, "build"))
    _write_json(cfg.out / "dataset_stats.json", out)
    print(f"dataset: {stats.retained_sentences} sentences, {stats.positive_sentences} positive")
    return 0


def read_built_dataset(path):
    return ws.read_dataset(_require(path, "labeled dataset"))


def _fit_space(cfg, train_rows, sentences):
    if cfg.representation == "lemma_tfidf":
        docs = [fz.lemma_text(ls, cfg.casing) for ls in train_rows]
        return fz.fit_tfidf(docs, cfg.max_features, cfg.ngram_max, cfg.casing)
    return fz.fit_grammar_inventory(sentences[ls.key] for ls in train_rows)


def _vectorize(space, rows, sentences, coverage=None):
    if isinstance(space, fz.TfidfVocabulary):
        return [fz.tfidf_transform(fz.lemma_text(ls, space.casing), space) for ls in rows]
    return [fz.grammar_vector(sentences[ls.key], space, coverage) for ls in rows]


def cmd_train(cfg):
    data = read_built_dataset(cfg.out / "dataset.jsonl")
    labels = [ls.label for ls in data]
    if len(set(labels)) < 2:
        raise DataError("dataset has a single class; cannot train")
    sentences = None
    if cfg.representation == "grammar":
        sentences = {(tb.name, s.sent_id): s for tb in _treebanks(cfg) for s in tb}
        missing = [ls.key for ls in data if ls.key not in sentences]
        if missing:
            raise DataError(f"dataset sentences missing from treebanks: {missing[:5]}")
    train, test = lr.stratified_split(data, lr.SplitSpec(cfg.train_fraction, cfg.seed))
    if not test:
        raise DataError("held-out split is empty")
    space = _fit_space(cfg, train, sentences)
    X_train = _vectorize(space, train, sentences)
    y_train = np.array([ls.label for ls in train])
    cw = lr.class_weights(y_train)
    model = lr.train(X_train, y_train, lam=cfg.lam, cw=cw, max_iter=cfg.max_iter,
                     tol=cfg.tol, feature_space_id=space.space_id)
    model.metadata.update({"representation": cfg.representation, "casing": cfg.casing})

    coverage = fz.CoverageReport()
    X_test = _vectorize(space, test, sentences, coverage)
    scores = lr.predict_proba_batch(model, X_test)
    y_test = np.array([ls.label for ls in test])
    metrics = _binary_metrics(y_test, (scores >= model.threshold).astype(int))
    metrics.update({
        "threshold": model.threshold,
        "train_size": len(train), "test_size": len(test),
        "iterations": model.iterations, "final_grad_norm": model.grad_norm,
        "converged": model.converged,
    })
    if cfg.representation == "grammar":
        metrics["coverage"] = coverage.as_dict()
    metrics.update(_meta(cfg, "train"))

    meta = _meta(cfg, "train")
    fz.save_feature_space(space, cfg.out / "feature_space.json", meta)
    lr.save_model(model, cfg.out / "model.json", meta)
    _write_json(cfg.out / "heldout_metrics.json", metrics)
    lines = [f"# config_hash={cfg.config_hash()}", "treebank\tsent_id\tgold\tscore"]
    for ls, s in zip(test, scores):
        lines.append(f"{ls.treebank}\t{ls.sent_id}\t{ls.label}\t{float(s)!r}")
    (cfg.out / "heldout_scores.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"held-out accuracy {metrics['accuracy']:.4f}, F1 {metrics['f1']:.4f} "
          f"({model.iterations} iterations, {model.stop_reason})")
    return 0


def _read_scores(path):
    gold, scores = [], []
    for line in _require(path, "held-out scores").read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("#") or line.startswith("treebank\t"):
            continue
        cols = line.split("\t")
        gold.append(int(cols[2]))
        scores.append(float(cols[3]))
    return np.array(scores), np.array(gold)


def cmd_calibrate(cfg, model_path=None):
    if cfg.calibration_mode == "none":
        print("calibration mode is 'none'; nothing to do")
        return 0
    model = lr.load_model(_require(model_path or cfg.out / "model.json", "model"))
    scores, gold = _read_scores(cfg.out / "heldout_scores.tsv")
    points = cal.pr_sweep(scores, gold)
    cal.write_sweep_csv(points, cfg.out / "sweep.csv", f"config_hash={cfg.config_hash()}")
    if cfg.calibration_mode == "max_f1":
        tau, met = cal.select_tau_max_f1(points), True
    else:
        tau, met = cal.select_tau_precision_floor(points, cfg.floor)
        if not met:
            logger.warning("precision floor %.3f unmet; using max-precision tau %.6g", cfg.floor, tau)
    calibrated = model.with_threshold(tau, calibration={
        "mode": cfg.calibration_mode, "floor": cfg.floor, "floor_met": met,
        "split": "stratified held-out portion", "candidates": len(points),
    })
    lr.save_model(calibrated, cfg.out / "model_calibrated.json", _meta(cfg, "calibrate"))
    print(f"tau = {tau:.6g} ({cfg.calibration_mode}, {len(points)} candidate thresholds)")
    return 0


def _diagnostic_inputs(cfg, items, need_conllu):
    companion = None
    if cfg.diagnostic_conllu:
        companion = {s.sent_id: s for s in
                     read_conllu(_require(cfg.diagnostic_conllu, "diagnostic CoNLL-U"), strict=True)}
    elif need_conllu:
        raise DataError("grammar representation needs the companion diagnostic CoNLL-U")
    return companion


def _companion_sentence(companion, item):
    ref = item.conllu_ref or item.item_id
    if companion is None or ref not in companion:
        raise DataError(f"item {item.item_id}: sentence {ref!r} not in companion CoNLL-U")
    return companion[ref]


def model_predictions(cfg, items, model_path):
    model = lr.load_model(_require(model_path, "model"))
    space = fz.load_feature_space(_require(cfg.out / "feature_space.json", "feature space"))
    if space.space_id != model.feature_space_id:
        raise DataError("model and feature space do not belong together")
    grammar = isinstance(space, fz.GrammarInventory)
    companion = _diagnostic_inputs(cfg, items, grammar)
    coverage = fz.CoverageReport()
    vectors = []
    for it in items:
        if grammar:
            vectors.append(fz.grammar_vector(_companion_sentence(companion, it), space, coverage))
        else:
            if it.lemma_text is not None:
                toks = [fz.lower(t, space.casing) for t in it.lemma_text]
            else:
                toks = fz.lemma_text(_companion_sentence(companion, it), space.casing)
            vectors.append(fz.tfidf_transform(toks, space))
    scores = lr.predict_proba_batch(model, vectors)
    labels = {it.item_id: int(s >= model.threshold) for it, s in zip(items, scores)}
    meta = {"threshold": model.threshold}
    if grammar:
        meta["coverage"] = coverage.as_dict()
    return labels, {it.item_id: float(s) for it, s in zip(items, scores)}, meta


def cmd_evaluate(cfg, predictions=None, model_path=None, run_label="", model_name="", stem="report"):
    items = cal.load_diagnostic_set(_require(cfg.diagnostic_items, "diagnostic set"),
                                    cfg.per_condition)
    meta = _meta(cfg, "evaluate")
    cfg.out.mkdir(parents=True, exist_ok=True)
    if predictions is not None:
        preds = cal.import_predictions(_require(predictions, "predictions file"))
        labels = dict(preds)
        meta["source"] = "predictions file"
    else:
        if model_path is None:
            calibrated = cfg.out / "model_calibrated.json"
            model_path = calibrated if calibrated.exists() else cfg.out / "model.json"
        labels, scores, extra = model_predictions(cfg, items, model_path)
        meta.update(extra)
        meta["source"] = "model"
        cal.write_predictions(cfg.out / f"{stem}_predictions.tsv", labels, scores,
                              f"config_hash={cfg.config_hash()}")
    report = cal.evaluate_split(labels, items, run_label=run_label,
                                model=model_name or cfg.representation)
    report = cal.SplitReport(n=report.n, correct=report.correct, run_label=report.run_label,
                             model=report.model, metadata=meta)
    text = cal.render_report([report], "text")
    (cfg.out / f"{stem}.txt").write_text(f"# config_hash={cfg.config_hash()}\n" + text,
                                         encoding="utf-8")
    (cfg.out / f"{stem}.json").write_text(cal.render_report([report], "json"), encoding="utf-8")
    sys.stdout.write(text)
    return 0


def cmd_report(paths, fmt="text", out=None):
    reports = []
    for p in paths:
        reports.extend(cal.parse_report_json(_require(p, "report").read_text(encoding="utf-8")))
    doc = cal.render_report(reports, fmt)
    if out:
        Path(out).write_text(doc, encoding="utf-8")
    sys.stdout.write(doc)
    return 0


# --- argument parsing -------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser():
    common = _Parser(add_help=False)
    g = common.add_argument_group("configuration overrides")
    g.add_argument("--config", "-c", help="TOML experiment file")
    g.add_argument("--treebank", action="append", dest="treebank_paths",
                   help="treebank file or directory (repeatable; replaces data.treebanks)")
    g.add_argument("--review-sheet", dest="review_sheet_path")
    g.add_argument("--output-dir", "-o", dest="output_dir")
    g.add_argument("--representation", choices=REPRESENTATIONS)
    g.add_argument("--casing", choices=fz.CASINGS)
    g.add_argument("--max-features", type=int)
    g.add_argument("--ngram-max", type=int)
    g.add_argument("--lambda", dest="lam", type=float)
    g.add_argument("--max-iter", type=int)
    g.add_argument("--tol", type=float)
    g.add_argument("--train-fraction", type=float)
    g.add_argument("--seed", type=int)
    g.add_argument("--calibration", dest="calibration_mode", choices=CALIBRATION_MODES)
    g.add_argument("--floor", type=float)
    g.add_argument("--diagnostic", dest="diagnostic_items")
    g.add_argument("--diagnostic-conllu")

    p = _Parser(prog="turklvc", description="Turkish LVC detection workbench")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("extract", parents=[common], help="mine candidates and write the review sheet")
    sub.add_parser("build", parents=[common], help="apply review and write the labeled dataset")
    sub.add_parser("train", parents=[common], help="fit features and the classifier")
    c = sub.add_parser("calibrate", parents=[common], help="sweep thresholds on held-out scores")
    c.add_argument("--model", dest="model_path")
    e = sub.add_parser("evaluate", parents=[common], help="split-wise diagnostic report")
    src = e.add_mutually_exclusive_group()
    src.add_argument("--predictions", help="TSV of external predictions (item_id, pred[, score])")
    src.add_argument("--model", dest="model_path")
    e.add_argument("--run-label", default="")
    e.add_argument("--model-name", default="")
    e.add_argument("--stem", default="report", help="output file stem")
    r = sub.add_parser("report", help="combine report JSON files into one table")
    r.add_argument("reports", nargs="+")
    r.add_argument("--format", choices=("text", "json"), default="text")
    r.add_argument("--out")
    return p


_OVERRIDES = ("treebank_paths", "review_sheet_path", "output_dir", "representation", "casing",
              "max_features", "ngram_max", "lam", "max_iter", "tol", "train_fraction", "seed",
              "calibration_mode", "floor", "diagnostic_items", "diagnostic_conllu")


def run(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "report":
        return cmd_report(args.reports, args.format, args.out)
    cfg = load_config(args.config, {k: getattr(args, k) for k in _OVERRIDES})
    if args.command == "extract":
        return cmd_extract(cfg)
    if args.command == "build":
        return cmd_build(cfg)
    if args.command == "train":
        return cmd_train(cfg)
    if args.command == "calibrate":
        return cmd_calibrate(cfg, args.model_path)
    return cmd_evaluate(cfg, args.predictions, args.model_path, args.run_label,
                        args.model_name, args.stem)


def main(argv=None):
    level = os.environ.get("TURKLVC_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(argv)
    except SystemExit as exc:  # argparse usage errors and --help
        return exc.code if isinstance(exc.code, int) else 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (DataError, OSError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except LvcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
