import json

import numpy as np
import pytest

from adaglr.core.data import Dataset
from adaglr.core.dimred import (
    DimensionSelector,
    ProjectionConfig,
    ProjectionMethod,
    bic_path,
    bic_penalty,
    bic_select_q,
    estimate_projection,
    mave_estimate,
    opg_estimate,
    pilot_bandwidth,
    refined_opg,
    rre_ratios,
    rre_select_q,
    rule_bandwidth,
)
from adaglr.errors import ConfigError, DataError, InvalidArgumentError

DIRECTION = np.array([1.0, 1.0, 0.0]) / np.sqrt(2.0)


def test_rule_bandwidth():
    assert rule_bandwidth(100, 1) == pytest.approx(1.5 * 100 ** -0.2)
    assert rule_bandwidth(100, 4, scale=1.0) == pytest.approx(100 ** -0.125)


def test_pilot_bandwidth_never_below_rule(single_index_data):
    h0 = rule_bandwidth(single_index_data.n, 3)
    assert pilot_bandwidth(single_index_data.X) >= h0
    assert pilot_bandwidth(single_index_data.X, min_neighbors=0) == pytest.approx(h0)


def test_rre_picks_the_gap():
    assert rre_select_q(np.array([1.0, 0.01, 0.009, 0.008]), n=100, h=0.5) == 1
    assert rre_select_q(np.array([2.0, 1.5, 0.001]), n=400, h=0.5) == 2


def test_rre_ratio_values():
    ratios = rre_ratios(np.array([1.0, 0.5]), c=0.5)
    np.testing.assert_allclose(ratios, [1.0 / 1.5])


@pytest.mark.parametrize(
    "eigenvalues",
    [np.array([1.0]), np.array([0.5, 1.0]), np.array([1.0, -0.1])],
)
def test_rre_rejects_bad_eigenvalues(eigenvalues):
    with pytest.raises(InvalidArgumentError):
        rre_select_q(eigenvalues, n=100, h=0.5)


def test_bic_penalty():
    assert bic_penalty(100, 1, 0.5) == pytest.approx(np.log(100) / 10)
    assert bic_penalty(100, 2, 0.2) == pytest.approx(np.log(100) * 2 / 4)


def test_opg_recovers_single_index(single_index_data):
    h = pilot_bandwidth(single_index_data.X)
    opg = opg_estimate(single_index_data, h)
    assert np.all(np.diff(opg.eigenvalues) <= 1e-12)
    assert abs(opg.eigenvectors[:, 0] @ DIRECTION) > 0.95
    assert rre_select_q(opg.eigenvalues, single_index_data.n, h) == 1
    np.testing.assert_allclose(opg.sigma_hat, opg.sigma_hat.T)


def test_refined_opg_tracks_the_least_squares_direction():
    rng = np.random.default_rng(31)
    beta = np.r_[np.ones(6), 0.0, 0.0] / np.sqrt(6.0)
    excess = []
    for _ in range(12):
        X = rng.standard_normal((200, 8))
        y = 0.5 + X @ beta + rng.standard_normal(200)
        ols = np.linalg.lstsq(np.column_stack([np.ones(200), X]), y, rcond=None)[0][1:]
        opg = refined_opg(Dataset(X, y))
        assert opg.refinements >= 1
        assert rre_select_q(opg.eigenvalues, 200, opg.bandwidth) == 1
        refined_angle = np.degrees(np.arccos(min(1.0, abs(opg.eigenvectors[:, 0] @ beta))))
        ols_angle = np.degrees(np.arccos(min(1.0, abs(ols @ beta) / np.linalg.norm(ols))))
        excess.append(refined_angle - ols_angle)
    assert np.median(excess) <= 5.0


def test_refined_opg_without_passes_is_the_pilot(single_index_data):
    pilot = opg_estimate(single_index_data, pilot_bandwidth(single_index_data.X))
    plain = refined_opg(single_index_data, max_iter=0)
    assert plain.refinements == 0
    np.testing.assert_allclose(plain.sigma_hat, pilot.sigma_hat)


def test_refined_opg_stops_on_exact_linear_data(rng):
    beta = np.array([0.6, -0.8, 0.0, 0.0])
    X = rng.standard_normal((80, 4))
    opg = refined_opg(Dataset(X, X @ beta))
    assert opg.refinements <= 2
    assert abs(opg.eigenvectors[:, 0] @ beta) == pytest.approx(1.0, abs=1e-8)


def test_opg_needs_enough_rows(rng):
    data = Dataset(rng.standard_normal((8, 3)), rng.standard_normal(8))
    with pytest.raises(DataError):
        opg_estimate(data, 2.0)


def test_mave_recovers_single_index(single_index_data):
    estimate = mave_estimate(single_index_data, 1, rule_bandwidth(single_index_data.n, 1))
    assert estimate.b_hat.shape == (3, 1)
    assert np.linalg.norm(estimate.b_hat) == pytest.approx(1.0)
    assert abs(estimate.b_hat[:, 0] @ DIRECTION) > 0.95
    assert estimate.objective > 0


def test_mave_full_dimension_is_a_basis(single_index_data):
    estimate = mave_estimate(single_index_data, 3, 1.0, init=np.eye(3))
    np.testing.assert_allclose(estimate.b_hat.T @ estimate.b_hat, np.eye(3), atol=1e-12)
    assert estimate.iterations == 0


def test_mave_rejects_bad_dimension(single_index_data):
    with pytest.raises(InvalidArgumentError):
        mave_estimate(single_index_data, 4, 1.0)


def test_bic_prefers_single_index(single_index_data):
    steps, estimates = bic_path(single_index_data)
    assert [step.k for step in steps] == [1, 2, 3]
    assert set(estimates) == {1, 2, 3}
    criteria = [step.criterion for step in steps]
    assert int(np.argmin(criteria)) + 1 == 1


def test_bic_needs_enough_rows(rng):
    data = Dataset(rng.standard_normal((9, 3)), rng.standard_normal(9))
    with pytest.raises(DataError):
        bic_path(data)


def test_single_covariate_uses_identity(rng):
    data = Dataset(rng.standard_normal((30, 1)), rng.standard_normal(30))
    estimate = estimate_projection(data, ProjectionConfig(ProjectionMethod.MAVE, DimensionSelector.BIC))
    assert estimate.q_hat == 1
    np.testing.assert_array_equal(estimate.b_hat, [[1.0]])


@pytest.mark.parametrize("fixed_q", [None, 0, 4])
def test_fixed_selector_validates_dimension(single_index_data, fixed_q):
    with pytest.raises(ConfigError):
        estimate_projection(single_index_data, ProjectionConfig(selector=DimensionSelector.FIXED, fixed_q=fixed_q))


@pytest.mark.parametrize("method", list(ProjectionMethod))
def test_estimate_projection_fixed_dimension(single_index_data, method):
    config = ProjectionConfig(method, DimensionSelector.FIXED, fixed_q=2)
    estimate = estimate_projection(single_index_data, config)
    assert estimate.q_hat == 2
    np.testing.assert_allclose(estimate.b_hat.T @ estimate.b_hat, np.eye(2), atol=1e-8)
    assert estimate.pilot_bandwidth > 0


def test_estimate_projection_bic_serializes(single_index_data):
    config = ProjectionConfig(ProjectionMethod.MAVE, DimensionSelector.BIC)
    estimate = estimate_projection(single_index_data, config)
    assert estimate.q_hat == 1
    payload = json.loads(json.dumps(estimate.to_dict()))
    assert payload["method"] == "mave"
    assert payload["selector"] == "bic"
    assert len(payload["bic_path"]) == 3
    assert payload["bic_path"][0]["k"] == 1


def test_bic_select_q_on_two_index_model():
    rng = np.random.default_rng(21)
    X = rng.standard_normal((200, 4))
    y = X @ np.full(4, 0.5) + (X[:, 2] + X[:, 3]) ** 2 / 2 + 0.1 * rng.standard_normal(200)
    assert bic_select_q(Dataset(X, y)) == 2


def test_bic_picks_one_on_exact_single_index_data(rng):
    beta = np.array([1.0, -1.0, 0.5]) / 1.5
    X = rng.standard_normal((100, 3))
    steps, _ = bic_path(Dataset(X, X @ beta))
    assert _argmin_k(steps) == 1
    floor = np.log(1e-6 * np.var(X @ beta))
    assert all(step.criterion - step.penalty == pytest.approx(floor) for step in steps)


def test_bic_bandwidth_keeps_neighbours(single_index_data):
    steps, _ = bic_path(single_index_data)
    n = single_index_data.n
    for step in steps:
        assert step.bandwidth >= rule_bandwidth(n, step.k)
    assert steps[-1].bandwidth > rule_bandwidth(n, 3)
    unfloored, _ = bic_path(single_index_data, min_neighbors=0)
    assert [step.bandwidth for step in unfloored] == pytest.approx([rule_bandwidth(n, k) for k in (1, 2, 3)])


def _argmin_k(steps):
    return steps[int(np.argmin([step.criterion for step in steps]))].k


def test_rank_deficient_update_is_not_convergence(single_index_data, monkeypatch, caplog):
    from adaglr.core import dimred

    monkeypatch.setattr(dimred, "_mave_direction_step", lambda *args: None)
    init = np.array([[1.0], [0.0], [0.0]])
    with caplog.at_level("WARNING", logger="adaglr.core.dimred"):
        estimate = mave_estimate(single_index_data, 1, 0.6, init=init)
    assert estimate.converged is False
    assert estimate.iterations == 1
    np.testing.assert_allclose(estimate.b_hat[:, 0], [1.0, 0.0, 0.0])
    assert "rank deficient" in caplog.text
