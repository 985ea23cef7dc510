"""Scikit-learn style estimators wrapping the two-stage pipeline.

``ContrastiveEmbedder`` is the fit/transform face of stage 1 (contrastively
pretrained per-label embeddings); ``AunceDetector`` runs both stages and
exposes predict/predict_proba for the multi-label decision. Both follow
the estimator contract (``get_params``/``set_params``, trailing-underscore
fitted attributes), so they clone and compose with pipelines and
cross-validation utilities.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .config import AugmentConfig, AunceConfig
from .encoder import forward_batch, init_encoder
from .losses import au_weights
from .synthdata import SyntheticDataset
from .trainer import linear_eval, predict_proba, pretrain
from .validation import as_matrix, as_binary_matrix, check_consistent_length


def _as_dataset(X, Y) -> SyntheticDataset:
    X = as_matrix(X, "X")
    Y = as_binary_matrix(Y, "Y")
    check_consistent_length(X, Y)
    return SyntheticDataset(X, Y, Y)


class ContrastiveEmbedder(BaseEstimator, TransformerMixin):
    """Contrastively pretrained per-label embeddings.

    ``fit(X, Y)`` pretrains a small encoder with the weighted contrastive
    loss on the labelled batch structure of (X, Y); ``transform(X)``
    returns the per-label embeddings flattened to (n, n_labels*embed_dim).

    Parameters mirror the loss and trainer defaults; occurrence rates and
    label weights are estimated from the training labels.
    """

    def __init__(
        self,
        hidden_dim=128,
        embed_dim=32,
        tau=0.5,
        beta_minority=1.2,
        beta_majority=0.4,
        probs=(0.15, 0.15, 0.7, 0.0),
        normalize=True,
        epochs=20,
        batch_size=32,
        learning_rate=1e-3,
        random_state=0,
    ):
        self.hidden_dim = hidden_dim
        self.embed_dim = embed_dim
        self.tau = tau
        self.beta_minority = beta_minority
        self.beta_majority = beta_majority
        self.probs = probs
        self.normalize = normalize
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.random_state = random_state

    def _config(self) -> AunceConfig:
        return AunceConfig(
            tau=self.tau,
            beta_minority=self.beta_minority,
            beta_majority=self.beta_majority,
            probs=tuple(self.probs),
            normalize=self.normalize,
        )

    def fit(self, X, Y):
        data = _as_dataset(X, Y)
        cfg = self._config()
        self.rates_ = data.empirical_rates()
        self.weights_ = au_weights(self.rates_)
        encoder0 = init_encoder(
            self.random_state, data.feature_dim, data.n_labels,
            hidden_dim=self.hidden_dim, embed_dim=self.embed_dim,
            normalize=self.normalize,
        )
        self.encoder_, self.train_run_ = pretrain(
            data, encoder0, cfg,
            epochs=self.epochs, batch_size=self.batch_size,
            lr=self.learning_rate, seed=self.random_state,
            weights=self.weights_, rates=self.rates_,
            aug_cfg=AugmentConfig(),
        )
        self.n_labels_ = data.n_labels
        return self

    def _check_fitted(self):
        if not hasattr(self, "encoder_"):
            raise NotFittedError("call fit before using this estimator")

    def transform(self, X) -> np.ndarray:
        self._check_fitted()
        e, _ = forward_batch(self.encoder_, as_matrix(X, "X"))
        return e.reshape(len(e), -1)

    def embeddings(self, X) -> np.ndarray:
        """Unflattened (n, n_labels, embed_dim) embeddings."""
        self._check_fitted()
        e, _ = forward_batch(self.encoder_, as_matrix(X, "X"))
        return e


class AunceDetector(BaseEstimator, ClassifierMixin):
    """Two-stage multi-label detector: contrastive pretrain + linear probe."""

    def __init__(
        self,
        hidden_dim=128,
        embed_dim=32,
        tau=0.5,
        beta_minority=1.2,
        beta_majority=0.4,
        probs=(0.15, 0.15, 0.7, 0.0),
        normalize=True,
        pretrain_epochs=20,
        linear_epochs=100,
        batch_size=32,
        pretrain_lr=1e-3,
        linear_lr=1e-2,
        threshold=0.5,
        random_state=0,
    ):
        self.hidden_dim = hidden_dim
        self.embed_dim = embed_dim
        self.tau = tau
        self.beta_minority = beta_minority
        self.beta_majority = beta_majority
        self.probs = probs
        self.normalize = normalize
        self.pretrain_epochs = pretrain_epochs
        self.linear_epochs = linear_epochs
        self.batch_size = batch_size
        self.pretrain_lr = pretrain_lr
        self.linear_lr = linear_lr
        self.threshold = threshold
        self.random_state = random_state

    def fit(self, X, Y):
        data = _as_dataset(X, Y)
        embedder = ContrastiveEmbedder(
            hidden_dim=self.hidden_dim, embed_dim=self.embed_dim, tau=self.tau,
            beta_minority=self.beta_minority, beta_majority=self.beta_majority,
            probs=self.probs, normalize=self.normalize,
            epochs=self.pretrain_epochs, batch_size=self.batch_size,
            learning_rate=self.pretrain_lr, random_state=self.random_state,
        )
        embedder.fit(X, Y)
        self.embedder_ = embedder
        self.head_, self.train_report_, self.linear_run_ = linear_eval(
            embedder.encoder_, data, data, embedder.weights_,
            epochs=self.linear_epochs, lr=self.linear_lr,
            seed=self.random_state, threshold=self.threshold,
            eval_on_clean=False,
        )
        self.n_labels_ = data.n_labels
        return self

    def _check_fitted(self):
        if not hasattr(self, "head_"):
            raise NotFittedError("call fit before using this estimator")

    def predict_proba(self, X) -> np.ndarray:
        self._check_fitted()
        return predict_proba(self.embedder_.encoder_, self.head_, as_matrix(X, "X"))

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= self.threshold).astype(np.int64)

    def score(self, X, Y) -> float:
        """Macro F1 against Y (the natural aggregate for imbalanced labels)."""
        from .metrics import MetricsReport

        report = MetricsReport.from_predictions(self.predict(X), as_binary_matrix(Y, "Y"))
        return report.f1_macro
