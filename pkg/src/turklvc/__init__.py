"""Restricted-input Turkish light verb construction detection.

Weak supervision from UD treebanks, lemma TF-IDF and grammar-only
representations, class-weighted logistic regression, threshold
calibration and split-wise diagnostic evaluation.
"""

from .calibrate import (
    DiagnosticItem,
    SplitReport,
    ThresholdPoint,
    evaluate_split,
    import_predictions,
    pr_sweep,
    render_report,
    select_tau_max_f1,
    select_tau_precision_floor,
    write_diagnostic_set,
)
from .conllu import (
    Sentence,
    Token,
    Treebank,
    parse_conllu,
    read_conllu,
    read_treebanks,
    serialize_conllu,
    syntactic_words,
    write_conllu,
)
from .errors import ConfigError, ConlluError, DataError, LvcError, NumericalError, ReviewError
from .featurize import (
    GrammarInventory,
    SparseVector,
    TfidfVocabulary,
    fit_grammar_inventory,
    fit_tfidf,
    grammar_vector,
    lemma_text,
    tfidf_transform,
)
from .logreg import (
    ClassWeights,
    LinRegModel,
    SplitSpec,
    class_weights,
    loss_and_grad,
    predict,
    predict_proba,
    stratified_split,
    train,
)
from .supervision import (
    DatasetStats,
    LabeledSentence,
    LvcCandidate,
    ReviewDecision,
    apply_review,
    assemble_dataset,
    export_review_sheet,
    extract_explicit_lvc,
    extract_nv_compound,
    mine_candidates,
)

__version__ = "0.1.0"
