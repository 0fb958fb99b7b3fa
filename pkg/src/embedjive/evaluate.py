"""Bag-of-embeddings featurization plus a small multinomial logistic model.

This is a comparison harness: the classifier is deliberately simple so that
differences in accuracy reflect the embeddings, not the model.  Text is
lowercased, punctuation becomes whitespace, and a sentence is the mean of its
in-vocabulary word vectors.
"""

from __future__ import annotations

import logging
import string
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from embedjive.embed_io import EmbeddingMatrix

logger = logging.getLogger(__name__)

_PUNCT_TO_SPACE = str.maketrans({c: " " for c in string.punctuation})


@dataclass
class LabeledCorpus:
    """Labeled texts with contiguous integer class ids starting at 0."""

    labels: np.ndarray
    texts: list[str]
    split: str = "train"

    def __post_init__(self) -> None:
        self.labels = np.asarray(self.labels, dtype=int)
        if self.labels.ndim != 1 or self.labels.size == 0:
            raise ValueError(f"{self.split} corpus is empty")
        if len(self.texts) != self.labels.size:
            raise ValueError(f"{len(self.texts)} texts for {self.labels.size} labels")
        classes = np.unique(self.labels)
        if classes[0] != 0 or classes[-1] != classes.size - 1:
            raise ValueError(f"class ids must be contiguous from 0, got {classes.tolist()}")

    @property
    def class_count(self) -> int:
        return int(self.labels.max()) + 1


@dataclass
class LinearModel:
    """Multinomial logistic weights (bias in the last row) plus the fit trace."""

    weights: np.ndarray
    loss_history: list[float]
    class_count: int
    config: dict


@dataclass
class EvalResult:
    accuracy: float
    precision: list[float]
    recall: list[float]
    embedding_name: str
    config: dict

    def __post_init__(self) -> None:
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError(f"accuracy {self.accuracy} outside [0, 1]")

    def to_json_dict(self) -> dict:
        return {
            "embedding": self.embedding_name,
            "accuracy": self.accuracy,
            "precision": list(self.precision),
            "recall": list(self.recall),
            "config": self.config,
        }


def read_corpus_tsv(path: str | Path, split: str = "train") -> LabeledCorpus:
    """Read a ``label<TAB>text`` file (UTF-8, one record per line)."""
    path = Path(path)
    labels: list[int] = []
    texts: list[str] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                label_token, text = line.split("\t", 1)
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: expected 'label<TAB>text'") from None
            try:
                labels.append(int(label_token))
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: non-integer label {label_token!r}") from None
            texts.append(text)
    if not labels:
        raise ValueError(f"{path}: empty corpus")
    return LabeledCorpus(labels=np.array(labels), texts=texts, split=split)


def normalize_text(text: str) -> str:
    return text.lower().translate(_PUNCT_TO_SPACE)


def featurize(text: str, embedding: EmbeddingMatrix) -> np.ndarray:
    """Mean embedding column over in-vocabulary tokens; zero vector if none."""
    columns = [
        idx for token in normalize_text(text).split()
        if (idx := embedding.column_index(token)) is not None
    ]
    if not columns:
        return np.zeros(embedding.dim)
    return embedding.data[:, columns].mean(axis=1)


def featurize_corpus(corpus: LabeledCorpus, embedding: EmbeddingMatrix) -> tuple[np.ndarray, int]:
    """Feature matrix (records x dim) and the count of all-out-of-vocabulary texts."""
    features = np.zeros((len(corpus.texts), embedding.dim))
    all_oov = 0
    for i, text in enumerate(corpus.texts):
        vec = featurize(text, embedding)
        if not vec.any():
            all_oov += 1
        features[i] = vec
    if all_oov:
        logger.warning("%s split: %d/%d texts had no in-vocabulary token", corpus.split, all_oov, len(corpus.texts))
    return features, all_oov


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _objective(w: np.ndarray, x: np.ndarray, y: np.ndarray, l2: float) -> float:
    probs = _softmax(x @ w)
    ce = -float(np.mean(np.log(np.maximum(probs[np.arange(y.size), y], 1e-300))))
    return ce + 0.5 * l2 * float(np.sum(w[:-1] ** 2))


def train_linear(
    train: LabeledCorpus,
    embedding: EmbeddingMatrix,
    epochs: int = 50,
    lr: float = 0.1,
    l2: float = 1e-4,
    seed: int = 0,
    batch_size: int = 64,
) -> LinearModel:
    """Fit multinomial logistic regression with seeded mini-batch descent.

    The penalized cross-entropy is evaluated on the full training set after
    every epoch; an epoch that would increase it is re-run from its starting
    weights at half the step size, so the recorded loss history never
    increases.  The bias row is exempt from the l2 penalty.
    """
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")
    if lr <= 0:
        raise ValueError(f"learning rate must be > 0, got {lr}")
    if l2 < 0:
        raise ValueError(f"l2 penalty must be >= 0, got {l2}")
    if batch_size < 1:
        raise ValueError(f"batch size must be >= 1, got {batch_size}")
    if train.class_count < 2:
        raise ValueError("corpus has a single class; nothing to separate")

    features, _ = featurize_corpus(train, embedding)
    x = np.hstack([features, np.ones((features.shape[0], 1))])
    y = train.labels
    n_records, dim1 = x.shape
    classes = train.class_count

    w = np.zeros((dim1, classes))
    rng = np.random.default_rng(seed)
    losses = [_objective(w, x, y, l2)]
    step = lr

    for _ in range(epochs):
        order = rng.permutation(n_records)
        epoch_start = w.copy()
        for _attempt in range(40):
            w = epoch_start.copy()
            for lo in range(0, n_records, batch_size):
                batch = order[lo : lo + batch_size]
                xb, yb = x[batch], y[batch]
                probs = _softmax(xb @ w)
                probs[np.arange(yb.size), yb] -= 1.0
                grad = xb.T @ probs / yb.size
                grad[:-1] += l2 * w[:-1]
                w -= step * grad
            loss = _objective(w, x, y, l2)
            if loss <= losses[-1] + 1e-12:
                break
            step *= 0.5
        else:
            w = epoch_start
            loss = losses[-1]
        losses.append(loss)

    config = {"epochs": epochs, "lr": lr, "l2": l2, "seed": seed, "batch_size": batch_size}
    return LinearModel(weights=w, loss_history=losses, class_count=classes, config=config)


def evaluate(test: LabeledCorpus, embedding: EmbeddingMatrix, model: LinearModel) -> EvalResult:
    """Argmax accuracy plus per-class precision and recall on ``test``."""
    features, _ = featurize_corpus(test, embedding)
    x = np.hstack([features, np.ones((features.shape[0], 1))])
    predicted = np.argmax(x @ model.weights, axis=1)
    y = test.labels
    accuracy = float(np.mean(predicted == y))
    n_classes = max(model.class_count, int(y.max()) + 1)
    precision, recall = [], []
    for c in range(n_classes):
        true_pos = int(np.sum((predicted == c) & (y == c)))
        pred_c = int(np.sum(predicted == c))
        actual_c = int(np.sum(y == c))
        precision.append(true_pos / pred_c if pred_c else 0.0)
        recall.append(true_pos / actual_c if actual_c else 0.0)
    return EvalResult(
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        embedding_name=embedding.name,
        config=dict(model.config),
    )
