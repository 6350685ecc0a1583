"""Class-weighted L2 logistic regression and stratified splitting.

The objective is the weighted *sum* (not mean) of per-example log losses
plus ``lam / 2 * ||w||^2``; the bias is not penalised. Training is
full-batch gradient descent (diagonally scaled) with Armijo backtracking
from a zero start, so a fitted model depends only on its inputs.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.special import expit

from .errors import DataError, NumericalError

logger = logging.getLogger(__name__)

ARMIJO_C = 1e-4
MAX_HALVINGS = 60
_MASK64 = (1 << 64) - 1


# --- splitting --------------------------------------------------------------

class SplitMix64:
    """SplitMix64 generator (Steele, Lea & Flood constants)."""

    def __init__(self, seed):
        self.state = seed & _MASK64

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, n):
        """Uniform integer in [0, n) by rejection (no modulo bias)."""
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next()
            if r < limit:
                return r % n

    def shuffle(self, items):
        """Fisher-Yates shuffle in place."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
        return items


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must lie strictly between 0 and 1")


def train_count(n, train_fraction):
    """floor(f*n), plus one when the fractional part is at least one half."""
    exact = Fraction(str(train_fraction)) * n
    whole = exact.numerator // exact.denominator
    return whole + (1 if exact - whole >= Fraction(1, 2) else 0)


def stratified_split(data, spec=SplitSpec(), label=lambda item: item.label):
    """Partition ``data`` into (train, test) lists, class by class.

    Each class is shuffled with one SplitMix64 stream seeded from
    ``spec.seed`` (classes visited in sorted order); the first
    ``train_count(n_c)`` shuffled members go to train. Both outputs keep
    the input order.
    """
    data = list(data)
    by_class = {}
    for i, item in enumerate(data):
        by_class.setdefault(label(item), []).append(i)
    small = {c: len(ix) for c, ix in by_class.items() if len(ix) < 2}
    if small:
        raise DataError(f"classes with fewer than 2 members: {small}")
    rng = SplitMix64(spec.seed)
    train_ix = set()
    for c in sorted(by_class):
        ix = rng.shuffle(list(by_class[c]))
        train_ix.update(ix[:train_count(len(ix), spec.train_fraction)])
    train = [data[i] for i in range(len(data)) if i in train_ix]
    test = [data[i] for i in range(len(data)) if i not in train_ix]
    return train, test


# --- objective --------------------------------------------------------------

@dataclass(frozen=True)
class ClassWeights:
    w_pos: float
    w_neg: float

    def __post_init__(self):
        if not (self.w_pos > 0 and self.w_neg > 0):
            raise ValueError("class weights must be positive")

    def per_example(self, y):
        y = np.asarray(y)
        return np.where(y == 1, self.w_pos, self.w_neg)


def class_weights(labels):
    """Balanced weights ``N / (2 * n_c)``."""
    y = np.asarray(list(labels))
    n = y.size
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    if n_pos + n_neg != n:
        raise DataError("labels must be 0 or 1")
    if n_pos == 0 or n_neg == 0:
        raise DataError("class weights need both classes present")
    return ClassWeights(w_pos=n / (2 * n_pos), w_neg=n / (2 * n_neg))


def as_matrix(X, dimension=None):
    """Coerce a list of SparseVectors, a scipy matrix or an array to CSR/ndarray."""
    if sparse.issparse(X):
        return X.tocsr()
    if isinstance(X, np.ndarray):
        return X.astype(float, copy=False)
    from .featurize import stack
    return stack(list(X), dimension)


def loss_and_grad(theta, X, y, cw, lam):
    """Loss and exact gradient at ``theta = [w_1..w_d, b]``.

    Returns ``(loss, grad)`` with ``grad`` laid out like ``theta``.
    """
    X = as_matrix(X)
    theta = np.asarray(theta, dtype=float)
    w, b = theta[:-1], theta[-1]
    y = np.asarray(y, dtype=float)
    c = cw.per_example(y)
    z = X @ w + b
    # -y ln p - (1-y) ln(1-p) == log(1 + e^z) - y z
    losses = np.logaddexp(0.0, z) - y * z
    loss = float(np.dot(c, losses) + 0.5 * lam * np.dot(w, w))
    r = c * (expit(z) - y)
    grad = np.empty_like(theta)
    grad[:-1] = X.T @ r + lam * w
    grad[-1] = r.sum()
    if not (np.isfinite(loss) and np.all(np.isfinite(grad))):
        raise NumericalError("non-finite loss or gradient")
    return loss, grad


# --- model ------------------------------------------------------------------

@dataclass(eq=False)
class LinRegModel:
    """Fitted linear scorer with posterior ``sigmoid(w.x + b)``."""

    weights: np.ndarray
    bias: float
    lam: float = 1.0
    threshold: float = 0.5
    feature_space_id: str = ""
    max_iter: int = 1000
    tol: float = 1e-6
    iterations: int = 0
    grad_norm: float = float("nan")
    converged: bool = False
    stop_reason: str = ""
    loss_history: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        if not (np.all(np.isfinite(self.weights)) and np.isfinite(self.bias)):
            raise NumericalError("model parameters are not finite")

    @property
    def dimension(self):
        return self.weights.size

    def with_threshold(self, tau, **meta):
        m = LinRegModel(**{k: getattr(self, k) for k in self.__dataclass_fields__})
        m.weights = self.weights.copy()
        m.threshold = float(tau)
        m.metadata = {**self.metadata, **meta}
        return m

    def to_dict(self):
        return {
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "lambda": self.lam,
            "threshold": self.threshold,
            "feature_space_id": self.feature_space_id,
            "max_iter": self.max_iter,
            "tol": self.tol,
            "training": {
                "iterations": self.iterations,
                "final_grad_norm": self.grad_norm,
                "converged": self.converged,
                "stop_reason": self.stop_reason,
                "loss_history": self.loss_history,
            },
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d):
        tr = d.get("training", {})
        return cls(
            weights=np.asarray(d["weights"], dtype=float), bias=float(d["bias"]),
            lam=d["lambda"], threshold=d["threshold"],
            feature_space_id=d["feature_space_id"], max_iter=d["max_iter"], tol=d["tol"],
            iterations=tr.get("iterations", 0), grad_norm=tr.get("final_grad_norm", float("nan")),
            converged=tr.get("converged", False), stop_reason=tr.get("stop_reason", ""),
            loss_history=list(tr.get("loss_history", [])), metadata=d.get("metadata", {}),
        )

    def identical_to(self, other):
        """Bitwise equality of parameters and training trace."""
        return (np.array_equal(self.weights, other.weights)
                and self.weights.tobytes() == other.weights.tobytes()
                and float(self.bias).hex() == float(other.bias).hex()
                and self.loss_history == other.loss_history
                and self.threshold == other.threshold)


def save_model(model, path, extra=None):
    d = model.to_dict()
    if extra:
        d.update(extra)
    Path(path).write_text(json.dumps(d, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path):
    return LinRegModel.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def curvature_bounds(X, cw_vec, lam):
    """Diagonal of an upper bound on the Hessian: 1/4 sum c x^2 + lam, bias last."""
    if sparse.issparse(X):
        sq = np.asarray(X.multiply(X).T @ cw_vec).ravel()
    else:
        sq = (X * X).T @ cw_vec
    return np.r_[0.25 * sq + lam, 0.25 * cw_vec.sum()]


def train(X, y, lam=1.0, cw=None, max_iter=1000, tol=1e-6, feature_space_id=""):
    """Fit by diagonally scaled gradient descent with halving backtracking.

    Each step moves along ``-D grad`` where ``D`` is the inverse of
    :func:`curvature_bounds`; without it the unpenalised bias converges
    orders of magnitude slower than the weights when ``lam`` is large.
    Steps must satisfy the Armijo condition (constant 1e-4).

    Stops when ``max|grad| <= tol`` or after ``max_iter`` accepted steps.
    If no step length (after ``MAX_HALVINGS`` halvings) gives sufficient
    decrease, the current iterate is returned with
    ``stop_reason="line_search_stalled"``: the loss cannot be lowered at
    floating point resolution.
    """
    X = as_matrix(X)
    y = np.asarray(y, dtype=float)
    if X.shape[0] != y.size:
        raise DataError(f"{X.shape[0]} rows but {y.size} labels")
    if not (np.any(y == 1) and np.any(y == 0)):
        raise DataError("training needs at least one example per class")
    if cw is None:
        cw = class_weights(y.astype(int))
    if lam <= 0:
        raise ValueError("lambda must be positive")

    scale = 1.0 / curvature_bounds(X, cw.per_example(y), lam)
    theta = np.zeros(X.shape[1] + 1)
    loss, grad = loss_and_grad(theta, X, y, cw, lam)
    history = [loss]
    step = 1.0
    it = 0
    reason = "max_iter"
    while True:
        gmax = float(np.max(np.abs(grad)))
        if gmax <= tol:
            reason = "tol"
            break
        if it >= max_iter:
            break
        direction = scale * grad
        slope = float(np.dot(grad, direction))
        t = step
        for _ in range(MAX_HALVINGS):
            cand = theta - t * direction
            try:
                new_loss, new_grad = loss_and_grad(cand, X, y, cw, lam)
            except NumericalError:
                t *= 0.5
                continue
            if new_loss <= loss - ARMIJO_C * t * slope:
                break
            t *= 0.5
        else:
            reason = "line_search_stalled"
            logger.warning("line search stalled at iteration %d (max|grad|=%.3g)", it, gmax)
            break
        if new_loss > loss:
            raise NumericalError(f"loss increased at iteration {it}: {loss} -> {new_loss}")
        theta, loss, grad = cand, new_loss, new_grad
        history.append(loss)
        it += 1
        step = min(2.0 * t, 1e3)

    gnorm = float(np.max(np.abs(grad)))
    logger.info("trained %d iterations, loss %.6g, max|grad| %.3g (%s)", it, loss, gnorm, reason)
    return LinRegModel(
        weights=theta[:-1].copy(), bias=float(theta[-1]), lam=lam,
        feature_space_id=feature_space_id, max_iter=max_iter, tol=tol,
        iterations=it, grad_norm=gnorm, converged=reason == "tol",
        stop_reason=reason, loss_history=history,
        metadata={"class_weights": {"pos": cw.w_pos, "neg": cw.w_neg}},
    )


def _check_vector(model, x):
    space = getattr(x, "space_id", None)
    if space and model.feature_space_id and space != model.feature_space_id:
        raise DataError(f"feature space {space} does not match model space {model.feature_space_id}")
    dim = x.dimension if hasattr(x, "dimension") else np.shape(x)[-1]
    if dim != model.dimension:
        raise DataError(f"vector dimension {dim} != model dimension {model.dimension}")


def predict_proba(model, x):
    """Posterior ``p(y=1|x)`` for one SparseVector (or dense 1-D array)."""
    _check_vector(model, x)
    if hasattr(x, "indices"):
        z = float(np.dot(model.weights[x.indices], x.values)) + model.bias
    else:
        z = float(np.dot(model.weights, np.asarray(x, dtype=float))) + model.bias
    return float(expit(z))


def predict_proba_batch(model, X):
    if isinstance(X, list):
        for x in X:
            _check_vector(model, x)
        X = as_matrix(X, model.dimension)
    elif X.shape[1] != model.dimension:
        raise DataError("matrix width does not match model dimension")
    return expit(X @ model.weights + model.bias)


def predict(model, x):
    """1 iff ``p >= threshold``."""
    return int(predict_proba(model, x) >= model.threshold)
