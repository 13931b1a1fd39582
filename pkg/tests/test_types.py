import numpy as np
import pytest

from esglab import Allocation, AssetModel, BranchingVector, ObjectiveSpec, ScenarioSet, ValidationError
from esglab.validation import psd_cholesky


def test_asset_model_accepts_valid_input(model3):
    assert model3.n_assets == 3
    assert not model3.mu.flags.writeable
    np.testing.assert_allclose(np.diag(model3.covariance(0.5)), 0.5 * model3.sigma ** 2)


@pytest.mark.parametrize(
    "kwargs, match",
    [
        (dict(mu=[0.1, 0.1], sigma=[0.1]), "length"),
        (dict(sigma=[-0.1, 0.1]), "non-negative"),
        (dict(corr=[[1, 0.5], [0.4, 1]]), r"corr\[0\]\[1\]"),
        (dict(corr=[[1, 1.2], [1.2, 1]]), "outside"),
        (dict(corr=[[2, 0], [0, 1]]), "unit diagonal"),
    ],
)
def test_asset_model_rejects(kwargs, match):
    base = dict(names=("a", "b"), mu=[0.1, 0.1], sigma=[0.1, 0.1], corr=np.eye(2))
    base.update(kwargs)
    with pytest.raises(ValidationError, match=match):
        AssetModel(**base)


def test_asset_model_rejects_indefinite_corr():
    c = [[1, 0.9, -0.9], [0.9, 1, 0.9], [-0.9, 0.9, 1]]
    with pytest.raises(ValidationError, match="semidefinite"):
        AssetModel(("a", "b", "c"), [0] * 3, [0.1] * 3, c)


def test_asset_model_rejects_asymmetry_just_above_tolerance():
    c = np.eye(2)
    c[0, 1] = 0.3 + 2e-10
    c[1, 0] = 0.3
    with pytest.raises(ValidationError, match="symmetric"):
        AssetModel(("a", "b"), [0, 0], [0.1, 0.1], c)


def test_borderline_corr_is_regularized():
    # congruent rescaling keeps the single tiny negative eigenvalue
    q, _ = np.linalg.qr(np.random.default_rng(3).standard_normal((3, 3)))
    c = q @ np.diag([-5e-11, 1.0, 2.0]) @ q.T
    d = np.sqrt(np.diag(c))
    c = c / np.outer(d, d)
    c = (c + c.T) / 2
    np.fill_diagonal(c, 1.0)
    assert -1e-10 < np.linalg.eigvalsh(c)[0] < 0
    m = AssetModel(("a", "b", "c"), [0] * 3, [0.1] * 3, c)
    assert np.linalg.eigvalsh(m.corr)[0] >= -1e-15
    np.testing.assert_array_equal(np.diag(m.corr), 1.0)
    np.testing.assert_allclose(m.corr, c, atol=1e-9)


def test_psd_cholesky_handles_singular():
    L = psd_cholesky(np.ones((2, 2)))
    np.testing.assert_array_equal(L, [[1, 0], [1, 0]])
    a = np.array([[4.0, 2.0], [2.0, 3.0]])
    np.testing.assert_allclose(psd_cholesky(a), np.linalg.cholesky(a))


def test_scenario_set_invariants():
    s = ScenarioSet(np.zeros((4, 3)))
    assert (s.n_paths, s.n_periods, s.n_assets) == (4, 1, 3)
    with pytest.raises(ValidationError, match="greater than -1"):
        ScenarioSet(np.full((2, 1, 1), -1.0))
    with pytest.raises(ValidationError, match="non-finite"):
        ScenarioSet(np.array([[[np.nan]]]))
    with pytest.raises(ValidationError):
        ScenarioSet(np.zeros((0, 1, 1)))


def test_allocation_invariants():
    a = Allocation((0.35, 0.6, 0.05), step=0.05)
    assert a.weights == (0.35, 0.6, 0.05)
    with pytest.raises(ValidationError, match="sum to 1"):
        Allocation((0.5, 0.6), step=0.05)
    with pytest.raises(ValidationError, match="multiple"):
        Allocation((0.33, 0.67), step=0.05)
    with pytest.raises(ValidationError, match="non-negative"):
        Allocation((-0.05, 1.05), step=0.05)


def test_objective_spec_step():
    assert ObjectiveSpec(0.04, 0.05).n_steps == 20
    with pytest.raises(ValidationError):
        ObjectiveSpec(0.04, 0.3)


def test_branching_vector():
    assert list(BranchingVector.parse("5,3,3,2")) == [5, 3, 3, 2]
    assert len(BranchingVector.parse("")) == 0
    with pytest.raises(ValidationError):
        BranchingVector((2, 0))
    with pytest.raises(ValidationError):
        BranchingVector.parse("2,x")
