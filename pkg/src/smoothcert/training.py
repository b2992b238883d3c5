"""Gaussian-data-augmentation training of small differentiable classifiers.

A base classifier only makes a good smoothed classifier if it labels noisy
inputs well, so training perturbs every example with fresh N(0, sigma_train^2 I)
noise each epoch and minimizes softmax cross-entropy by plain mini-batch
gradient descent.  Two desk-scale architectures are provided: multinomial
logistic regression and a one-hidden-layer tanh MLP (tanh keeps gradients
defined everywhere, which the attack machinery relies on).

Runs are bit-deterministic given the config seed: augmentation noise comes
from the counter-based stream keyed by (epoch, example, coordinate), and
initialization and batch shuffling derive from the same seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .noise import NoiseStream
from .smoothing import DifferentiableClassifier

_INIT_STREAM_TAG = 0xA11CE
_AUGMENT_STREAM_TAG = 0x905E


class TrainingDiverged(RuntimeError):
    """Raised when the training loss stops being finite."""


@dataclass(frozen=True)
class LabeledExample:
    features: np.ndarray
    label: int


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one training run; identical configs give
    bit-identical models."""

    sigma_train: float
    epochs: int = 200
    learning_rate: float = 0.5
    batch_size: int = 64
    seed: int = 0
    model_kind: str = "logistic"  # "logistic" | "mlp"
    hidden_width: int = 32

    def __post_init__(self):
        if self.sigma_train < 0.0:
            raise ValueError("sigma_train must be >= 0")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if not self.learning_rate > 0.0:
            raise ValueError("learning_rate must be positive")
        if self.model_kind not in ("logistic", "mlp"):
            raise ValueError("model_kind must be 'logistic' or 'mlp'")
        if self.model_kind == "mlp" and self.hidden_width < 1:
            raise ValueError("hidden_width must be >= 1")


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    probs = np.exp(shifted)
    probs /= probs.sum(axis=1, keepdims=True)
    return probs


def _cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    picked = probs[np.arange(len(labels)), labels]
    return float(-np.mean(np.log(np.maximum(picked, 1e-300))))


class SoftmaxLinearModel(DifferentiableClassifier):
    """Multinomial logistic regression: scores = W x + c."""

    def __init__(self, weights: np.ndarray, biases: np.ndarray):
        self.weights = np.asarray(weights, dtype=np.float64)
        self.biases = np.asarray(biases, dtype=np.float64)
        self.num_labels, self.dim = self.weights.shape

    def scores_batch(self, xs: np.ndarray) -> np.ndarray:
        return np.atleast_2d(xs) @ self.weights.T + self.biases

    def score_gradient(self, x: np.ndarray, label: int) -> np.ndarray:
        return self.weights[label].copy()

    def loss_input_gradients(self, xs: np.ndarray, label: int) -> np.ndarray:
        coeffs = _softmax(self.scores_batch(xs))
        coeffs[:, label] -= 1.0
        return coeffs @ self.weights

    def _param_step(self, xs, labels, lr):
        coeffs = _softmax(self.scores_batch(xs))
        coeffs[np.arange(len(labels)), labels] -= 1.0
        coeffs /= len(labels)
        self.weights -= lr * coeffs.T @ xs
        self.biases -= lr * coeffs.sum(axis=0)


class MlpModel(DifferentiableClassifier):
    """One hidden tanh layer: scores = W2 tanh(W1 x + b1) + b2."""

    def __init__(self, w1: np.ndarray, b1: np.ndarray, w2: np.ndarray, b2: np.ndarray):
        self.w1 = np.asarray(w1, dtype=np.float64)
        self.b1 = np.asarray(b1, dtype=np.float64)
        self.w2 = np.asarray(w2, dtype=np.float64)
        self.b2 = np.asarray(b2, dtype=np.float64)
        self.num_labels, self.hidden_width = self.w2.shape
        self.dim = self.w1.shape[1]

    def _hidden(self, xs: np.ndarray) -> np.ndarray:
        return np.tanh(np.atleast_2d(xs) @ self.w1.T + self.b1)

    def scores_batch(self, xs: np.ndarray) -> np.ndarray:
        return self._hidden(xs) @ self.w2.T + self.b2

    def score_gradient(self, x: np.ndarray, label: int) -> np.ndarray:
        h = self._hidden(x[None, :])[0]
        return ((1.0 - h * h) * self.w2[label]) @ self.w1

    def loss_input_gradients(self, xs: np.ndarray, label: int) -> np.ndarray:
        xs = np.atleast_2d(xs)
        h = self._hidden(xs)
        coeffs = _softmax(h @ self.w2.T + self.b2)
        coeffs[:, label] -= 1.0
        return ((coeffs @ self.w2) * (1.0 - h * h)) @ self.w1

    def _param_step(self, xs, labels, lr):
        h = self._hidden(xs)
        coeffs = _softmax(h @ self.w2.T + self.b2)
        coeffs[np.arange(len(labels)), labels] -= 1.0
        coeffs /= len(labels)
        grad_h = (coeffs @ self.w2) * (1.0 - h * h)
        self.w2 -= lr * coeffs.T @ h
        self.b2 -= lr * coeffs.sum(axis=0)
        self.w1 -= lr * grad_h.T @ xs
        self.b1 -= lr * grad_h.sum(axis=0)


def _init_model(cfg: TrainConfig, dim: int, num_labels: int, stream: NoiseStream):
    def draws(rows: int, cols: int, tag: int) -> np.ndarray:
        return stream.standard_normals(tag, 0, rows, cols)

    if cfg.model_kind == "logistic":
        return SoftmaxLinearModel(draws(num_labels, dim, 0) / math.sqrt(dim),
                                  np.zeros(num_labels))
    w1 = draws(cfg.hidden_width, dim, 1) / math.sqrt(dim)
    w2 = draws(num_labels, cfg.hidden_width, 2) / math.sqrt(cfg.hidden_width)
    return MlpModel(w1, np.zeros(cfg.hidden_width), w2, np.zeros(num_labels))


def _validate_labels(labels: np.ndarray) -> int:
    present = np.unique(labels)
    num_labels = int(labels.max()) + 1
    if labels.min() < 0 or len(present) != num_labels:
        raise ValueError("labels must form a contiguous range 0..L-1 with every class present")
    return num_labels


def train_with_noise(examples, cfg: TrainConfig):
    """Train a classifier on Gaussian-augmented data; deterministic in cfg.seed.

    Every epoch draws fresh per-example noise sigma_train * N(0, I) (stream
    counter (epoch, example)), shuffles, and applies constant-step mini-batch
    gradient descent on softmax cross-entropy.  Raises TrainingDiverged if the
    epoch loss stops being finite.  The returned model records the epoch-mean
    loss history in model.loss_history.
    """
    xs = np.asarray([np.asarray(e.features, dtype=np.float64) for e in examples])
    labels = np.asarray([e.label for e in examples], dtype=np.int64)
    if xs.ndim != 2 or len(xs) == 0:
        raise ValueError("examples must be a nonempty list of equal-length feature vectors")
    if not np.all(np.isfinite(xs)):
        raise ValueError("features must be finite")
    num_labels = _validate_labels(labels)
    n, dim = xs.shape

    root = NoiseStream(cfg.seed)
    model = _init_model(cfg, dim, num_labels, root.substream(_INIT_STREAM_TAG))
    augment = root.substream(_AUGMENT_STREAM_TAG)
    shuffler = np.random.default_rng(cfg.seed)

    losses = []
    # transient overflow shows up as a non-finite loss, which is the abort
    # signal; the intermediate warnings carry no extra information
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(cfg.epochs):
            noisy = xs
            if cfg.sigma_train > 0.0:
                noisy = xs + cfg.sigma_train * augment.standard_normals(epoch, 0, n, dim)
            order = shuffler.permutation(n)
            epoch_loss = 0.0
            for lo in range(0, n, cfg.batch_size):
                idx = order[lo:lo + cfg.batch_size]
                batch, batch_labels = noisy[idx], labels[idx]
                probs = _softmax(model.scores_batch(batch))
                epoch_loss += _cross_entropy(probs, batch_labels) * len(idx)
                model._param_step(batch, batch_labels, cfg.learning_rate)
            epoch_loss /= n
            if not math.isfinite(epoch_loss):
                raise TrainingDiverged(f"non-finite loss {epoch_loss} at epoch {epoch}")
            losses.append(epoch_loss)

    model.loss_history = losses
    return model


def model_gradient_check(model: DifferentiableClassifier, x, label: int,
                         step: float = 1e-5) -> float:
    """Max scale-floored relative error of analytic vs finite-difference gradients.

    Central differences with the given step on scores(.)[label], compared
    coordinate-wise against score_gradient; the denominator is floored at 1
    so exactly-zero gradients contribute zero error rather than NaN.
    """
    x = np.asarray(x, dtype=np.float64)
    analytic = model.score_gradient(x, label)
    worst = 0.0
    for j in range(x.shape[0]):
        bump = np.zeros_like(x)
        bump[j] = step
        fd = (model.scores(x + bump)[label] - model.scores(x - bump)[label]) / (2.0 * step)
        denom = max(1.0, abs(analytic[j]), abs(fd))
        worst = max(worst, abs(analytic[j] - fd) / denom)
    return worst


def jensen_gap_diagnostic(model: DifferentiableClassifier, xs: np.ndarray,
                          labels: np.ndarray, sigma: float, stream: NoiseStream,
                          num_draws: int = 64) -> tuple[float, float]:
    """(log of mean softmax probability, mean log softmax probability) under noise.

    The first quantity is the soft objective that augmentation training
    approximately maximizes; by Jensen's inequality it upper-bounds the
    second (the negative cross-entropy).  Purely diagnostic.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    labels = np.asarray(labels, dtype=np.int64)
    soft, logp = [], []
    for i, (x, label) in enumerate(zip(xs, labels)):
        noisy = x[None, :] + sigma * stream.standard_normals(i, 0, num_draws, xs.shape[1])
        probs = _softmax(model.scores_batch(noisy))[:, label]
        soft.append(math.log(float(np.mean(probs))))
        logp.append(float(np.mean(np.log(np.maximum(probs, 1e-300)))))
    return float(np.mean(soft)), float(np.mean(logp))
