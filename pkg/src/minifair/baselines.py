"""Representation builders and downstream models for the comparison set.

Representations: full ([X | S_onehot]), unaware (X), ae (latent code of a
general autoencoder over all features), invenc (latent code of a trained
invariant encoder). Downstream models: ridge-solved linear regression or
full-batch logistic regression, and gradient-boosted depth-1 stumps for both
tasks. All models emit raw scores; classification callers threshold the
sigmoid at 0.5, i.e. the score at 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autoencoder import Autoencoder
from .data import ProcessedDataset
from .neural import forward, sigmoid
from .trainer import ThreePlayerModel, encode

REPRESENTATIONS = ("full", "unaware", "ae", "invenc")

RIDGE = 1e-8
LOGISTIC_ITERATIONS = 500
LOGISTIC_LR = 0.1


def build_representation(kind: str, dataset: ProcessedDataset,
                         trained: ThreePlayerModel | None = None,
                         autoencoder: Autoencoder | None = None) -> np.ndarray:
    if kind == "full":
        return np.hstack([dataset.X, dataset.S_onehot])
    if kind == "unaware":
        return dataset.X.copy()
    if kind == "ae":
        if autoencoder is None:
            raise ValueError("ae representation needs a pretrained autoencoder")
        return forward(autoencoder.encoder, np.hstack([dataset.X, dataset.S_onehot]))
    if kind == "invenc":
        if trained is None:
            raise ValueError("invenc representation needs a trained model")
        return encode(trained, dataset.X)
    raise ValueError(f"unknown representation {kind!r}")


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    link: str  # identity | logistic


@dataclass
class StumpEnsemble:
    """Boosted depth-1 trees: score = base + lr * sum of leaf values."""

    rounds: int
    learning_rate: float
    stumps: list  # (feature index, threshold, left value, right value)
    base_score: float


def fit_linear(features, y, link="identity") -> LinearModel:
    """Identity link solves ridge normal equations; logistic link runs
    full-batch gradient descent on the cross-entropy."""
    f = np.asarray(features, dtype=float)
    t = np.asarray(y, dtype=float).ravel()
    if f.shape[0] < 2:
        raise ValueError("need at least 2 rows to fit")
    if link not in ("identity", "logistic"):
        raise ValueError(f"unknown link {link!r}")
    design = np.hstack([f, np.ones((f.shape[0], 1))])
    if link == "identity":
        gram = design.T @ design + RIDGE * np.eye(design.shape[1])
        try:
            coef = np.linalg.solve(gram, design.T @ t)
        except np.linalg.LinAlgError as exc:
            raise ArithmeticError(f"normal equations unsolvable: {exc}") from exc
        return LinearModel(coef[:-1], float(coef[-1]), link)
    coef = np.zeros(design.shape[1])
    n = design.shape[0]
    for _ in range(LOGISTIC_ITERATIONS):
        z = design @ coef
        grad = design.T @ (sigmoid(z) - t) / n
        coef -= LOGISTIC_LR * grad
    return LinearModel(coef[:-1], float(coef[-1]), link)


def fit_stumps(features, y, task, rounds=100, learning_rate=0.1) -> StumpEnsemble:
    """Stagewise least-squares stumps on pseudo-residuals.

    Regression boosts squared loss from a mean base score; classification
    boosts logistic loss from the log-odds base score with residuals
    y - sigmoid(score). Each stump's threshold comes from an exhaustive scan
    over feature midpoints.
    """
    f = np.asarray(features, dtype=float)
    t = np.asarray(y, dtype=float).ravel()
    if f.shape[0] < 2:
        raise ValueError("need at least 2 rows to fit")
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if task == "regression":
        base = float(t.mean())
    elif task == "classification":
        p = min(max(float(t.mean()), 1e-12), 1.0 - 1e-12)
        base = float(np.log(p / (1.0 - p)))
    else:
        raise ValueError(f"unknown task {task!r}")
    score = np.full(t.size, base)
    stumps = []
    for _ in range(rounds):
        residual = t - score if task == "regression" else t - sigmoid(score)
        stump = _best_stump(f, residual)
        stumps.append(stump)
        score = score + learning_rate * _stump_values(f, stump)
    return StumpEnsemble(rounds, learning_rate, stumps, base)


def _best_stump(f, residual):
    """Exhaustive least-squares split of the residuals; deterministic ties.

    Returns (feature, threshold, left value, right value) with rows going
    left when value <= threshold. Falls back to a single-leaf stump when no
    feature admits a split.
    """
    n = residual.size
    total = residual.sum()
    best = None
    best_gain = -np.inf
    for j in range(f.shape[1]):
        order = np.argsort(f[:, j], kind="stable")
        col = f[order, j]
        prefix = np.cumsum(residual[order])
        boundaries = np.nonzero(col[:-1] != col[1:])[0]  # split after index k
        for k in boundaries:
            n_left = k + 1
            n_right = n - n_left
            left_sum = prefix[k]
            right_sum = total - left_sum
            gain = left_sum**2 / n_left + right_sum**2 / n_right
            if gain > best_gain + 1e-15:
                best_gain = gain
                thr = (col[k] + col[k + 1]) / 2.0
                best = (j, float(thr), float(left_sum / n_left), float(right_sum / n_right))
    if best is None:
        mean = float(residual.mean())
        return (0, float("inf"), mean, mean)
    return best


def _stump_values(f, stump):
    j, thr, left, right = stump
    return np.where(f[:, j] <= thr, left, right)


def predict(model, features) -> np.ndarray:
    """Raw scores from a fitted LinearModel or StumpEnsemble."""
    f = np.asarray(features, dtype=float)
    if isinstance(model, LinearModel):
        if f.shape[1] != model.weights.size:
            raise ValueError(
                f"feature dim {f.shape[1]} does not match model dim {model.weights.size}"
            )
        return f @ model.weights + model.bias
    if isinstance(model, StumpEnsemble):
        score = np.full(f.shape[0], model.base_score)
        for stump in model.stumps:
            score = score + model.learning_rate * _stump_values(f, stump)
        return score
    raise TypeError(f"cannot predict with {type(model).__name__}")
