import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from pressmap.estimator import PossessionOutcomeClassifier
from tests.test_gnn import make_sequence, separable_dataset


@pytest.fixture(scope="module")
def fitted():
    data = separable_dataset(10)
    clf = PossessionOutcomeClassifier(
        hidden_width=8, epochs=40, learning_rate=3e-3, batch_size=8, seed=0
    )
    return clf.fit(data), data


class TestEstimatorContract:
    def test_get_set_params_round_trip(self):
        clf = PossessionOutcomeClassifier(hidden_width=16, seed=3)
        params = clf.get_params()
        assert params["hidden_width"] == 16
        other = clone(clf)
        assert other.get_params() == params

    def test_unfitted_predict_raises(self):
        clf = PossessionOutcomeClassifier()
        with pytest.raises(NotFittedError):
            clf.predict_proba([make_sequence(0.5)])

    def test_fit_predict(self, fitted):
        clf, data = fitted
        proba = clf.predict_proba(data)
        assert proba.shape == (len(data), 2)
        assert np.allclose(proba.sum(axis=1), 1.0, atol=1e-9)
        labels = np.array([s.label for s in data])
        assert (clf.predict(data) == labels).mean() >= 0.9

    def test_labels_override_sequence_labels(self):
        data = separable_dataset(8)
        unlabeled = [type(s)(graphs=s.graphs, possession_id=s.possession_id,
                             window_start_frame=s.window_start_frame) for s in data]
        y = [s.label for s in data]
        clf = PossessionOutcomeClassifier(hidden_width=8, epochs=5, batch_size=8, seed=1)
        clf.fit(unlabeled, y)
        assert hasattr(clf, "model_")

    def test_team_pressure_column(self, fitted):
        clf, data = fitted
        tp = clf.team_pressure(data)
        assert np.all((tp >= 0) & (tp <= 1))
        assert np.allclose(tp, clf.predict_proba(data)[:, 0])

    def test_score(self, fitted):
        clf, data = fitted
        y = [s.label for s in data]
        assert clf.score(data, y) >= 0.9
        assert clf.score(data) == pytest.approx(clf.score(data, y))

    def test_checkpoint_round_trip(self, fitted, tmp_path):
        clf, data = fitted
        path = tmp_path / "pop.ckpt"
        clf.save(path)
        loaded = PossessionOutcomeClassifier.from_checkpoint(path)
        assert np.array_equal(loaded.predict_proba(data), clf.predict_proba(data))
