"""Scikit-learn estimator facade over the possession outcome network.

Lets the predictor slot into sklearn tooling (grid search, pipelines,
``cross_val_score``) where X is a sequence of :class:`~pressmap.ppm.PPMSequence`
objects and y the keep/lose labels.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .datamodel import ValidationError
from .gnn import TrainConfig, evaluate, load_model, predict_pop, save_model, train
from .ppm import PPMSequence


def _as_sequences(X) -> list[PPMSequence]:
    sequences = list(X)
    for item in sequences:
        if not isinstance(item, PPMSequence):
            raise ValidationError(f"X must contain PPMSequence values, got {type(item).__name__}")
    return sequences


class PossessionOutcomeClassifier(ClassifierMixin, BaseEstimator):
    """Possession-loss classifier with the sklearn fit/predict contract.

    ``predict_proba`` columns follow ``classes_`` = [0, 1] (lose, keep);
    ``team_pressure`` is the loss-probability column.
    """

    def __init__(
        self,
        hidden_width: int = 32,
        learning_rate: float = 1e-3,
        batch_size: int = 16,
        epochs: int = 30,
        seed: int = 0,
        optimizer: str = "adam",
        val_fraction: float = 0.2,
        dropout_rate: float = 0.5,
    ):
        self.hidden_width = hidden_width
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.seed = seed
        self.optimizer = optimizer
        self.val_fraction = val_fraction
        self.dropout_rate = dropout_rate

    def _config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            epochs=self.epochs,
            seed=self.seed,
            optimizer=self.optimizer,
            val_fraction=self.val_fraction,
            hidden_width=self.hidden_width,
            dropout_rate=self.dropout_rate,
        )

    def fit(self, X, y=None):
        sequences = _as_sequences(X)
        if y is not None:
            labels = np.asarray(y, dtype=np.int64)
            if len(labels) != len(sequences):
                raise ValidationError("X and y lengths differ")
            sequences = [
                PPMSequence(
                    graphs=s.graphs,
                    possession_id=s.possession_id,
                    window_start_frame=s.window_start_frame,
                    label=int(label),
                )
                for s, label in zip(sequences, labels)
            ]
        result = train(sequences, self._config())
        self.model_ = result.model
        self.history_ = result.history
        self.best_epoch_ = result.best_epoch
        self.classes_ = np.array([0, 1])
        return self

    def predict_proba(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        preds = [predict_pop(self.model_, seq) for seq in _as_sequences(X)]
        return np.array([[p.p_lose, p.p_keep] for p in preds])

    def predict(self, X) -> np.ndarray:
        proba = self.predict_proba(X)
        # ties break toward keeping possession (class 1)
        return (proba[:, 1] >= proba[:, 0]).astype(np.int64)

    def team_pressure(self, X) -> np.ndarray:
        """Loss probability per sequence: the team-level pressure metric."""
        return self.predict_proba(X)[:, 0]

    def score(self, X, y=None, sample_weight=None) -> float:
        sequences = _as_sequences(X)
        if y is None:
            return evaluate(self.model_, sequences).accuracy
        return super().score(sequences, np.asarray(y), sample_weight)

    def save(self, path) -> None:
        check_is_fitted(self, "model_")
        with open(path, "wb") as fh:
            fh.write(save_model(self.model_))

    @classmethod
    def from_checkpoint(cls, path) -> "PossessionOutcomeClassifier":
        with open(path, "rb") as fh:
            model = load_model(fh.read())
        estimator = cls(hidden_width=model.hidden_width, dropout_rate=model.dropout_rate)
        estimator.model_ = model
        estimator.classes_ = np.array([0, 1])
        estimator.history_ = []
        estimator.best_epoch_ = -1
        return estimator
