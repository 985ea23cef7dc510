import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from aunce.estimators import AunceDetector, ContrastiveEmbedder
from aunce.synthdata import GeneratorSpec, generate, split


@pytest.fixture(scope="module")
def data():
    spec = GeneratorSpec(n_au=2, rates=(0.4, 0.6), n_samples=300, seed=21,
                         feature_dim=16, noise_sigma=0.2)
    full = generate(spec)
    return split(full, 0.8, seed=0)


FAST = dict(hidden_dim=16, embed_dim=4, random_state=0)


class TestContrastiveEmbedder:
    def test_get_set_params_round_trip(self):
        est = ContrastiveEmbedder(**FAST, epochs=2)
        params = est.get_params()
        assert params["tau"] == 0.5
        est.set_params(tau=0.7)
        assert est.get_params()["tau"] == 0.7

    def test_clone_compatible(self):
        est = ContrastiveEmbedder(**FAST, epochs=2, tau=0.6)
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()

    def test_fit_transform_shapes(self, data):
        train, test = data
        est = ContrastiveEmbedder(**FAST, epochs=2)
        out = est.fit_transform(train.features, train.labels)
        assert out.shape == (len(train), 2 * 4)
        assert est.embeddings(test.features).shape == (len(test), 2, 4)

    def test_transform_before_fit_raises(self, data):
        train, _ = data
        with pytest.raises(NotFittedError):
            ContrastiveEmbedder(**FAST).transform(train.features)

    def test_embeddings_unit_norm(self, data):
        train, _ = data
        est = ContrastiveEmbedder(**FAST, epochs=1).fit(train.features, train.labels)
        e = est.embeddings(train.features)
        np.testing.assert_allclose(np.linalg.norm(e, axis=2), 1.0, atol=1e-9)

    def test_deterministic_given_random_state(self, data):
        train, _ = data
        a = ContrastiveEmbedder(**FAST, epochs=2).fit(train.features, train.labels)
        b = ContrastiveEmbedder(**FAST, epochs=2).fit(train.features, train.labels)
        assert a.encoder_.equals_bitwise(b.encoder_)


class TestAunceDetector:
    def test_fit_predict_shapes(self, data):
        train, test = data
        det = AunceDetector(**FAST, pretrain_epochs=2, linear_epochs=10)
        det.fit(train.features, train.labels)
        preds = det.predict(test.features)
        assert preds.shape == test.labels.shape
        assert set(np.unique(preds)) <= {0, 1}

    def test_predict_proba_in_unit_interval(self, data):
        train, test = data
        det = AunceDetector(**FAST, pretrain_epochs=2, linear_epochs=10)
        det.fit(train.features, train.labels)
        proba = det.predict_proba(test.features)
        assert proba.min() >= 0.0 and proba.max() <= 1.0

    def test_learns_separable_data(self, data):
        train, test = data
        det = AunceDetector(**FAST, pretrain_epochs=10, linear_epochs=60,
                            linear_lr=5e-2)
        det.fit(train.features, train.labels)
        assert det.score(test.features, test.clean_labels) > 0.9

    def test_clone_and_refit(self, data):
        train, _ = data
        det = AunceDetector(**FAST, pretrain_epochs=1, linear_epochs=5)
        det.fit(train.features, train.labels)
        fresh = clone(det)
        with pytest.raises(NotFittedError):
            fresh.predict(train.features)

    def test_predict_before_fit_raises(self, data):
        train, _ = data
        with pytest.raises(NotFittedError):
            AunceDetector(**FAST).predict(train.features)
