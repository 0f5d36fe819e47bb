import numpy as np
import pandas as pd
import pytest

from adaglr.core.dimred import DimensionSelector, ProjectionMethod
from adaglr.core.glrtest import Variant
from adaglr.core.nullfit import NullForm, fit_null_model
from adaglr.core.simlab import (
    CURVE_COLUMNS,
    TABLE_COLUMNS,
    CovarianceKind,
    DgpSpec,
    ErrorLaw,
    ExperimentGrid,
    ExperimentResult,
    Family,
    MethodConfig,
    covariance,
    curves_path,
    default_p,
    dgp_generate,
    directions,
    emit_table,
    null_spec_for,
    regression_mean,
    run_experiment,
    run_grid,
)
from adaglr.errors import ConfigError


@pytest.mark.parametrize("family", list(Family))
def test_zero_amplitude_collapses_to_the_null(family):
    p = default_p(family)
    spec = DgpSpec(family, p, 0.0)
    X = np.random.default_rng(0).standard_normal((20, p))
    beta, _ = directions(family, p)
    assert np.linalg.norm(beta) == pytest.approx(1.0)
    expected = 1.5 * np.exp(0.5 * X @ beta) if family is Family.H14 else X @ beta
    np.testing.assert_allclose(regression_mean(spec, X), expected)


def test_departure_values_at_known_points():
    assert regression_mean(DgpSpec(Family.H11, 8, 0.3), np.zeros((1, 8)))[0] == pytest.approx(0.3)
    # beta1'x = 0 and beta2'x = 4
    c = 2.0 * np.sqrt(2.0)
    x = np.array([[-c, -c, c, c]])
    assert regression_mean(DgpSpec(Family.H22, 4, 1.5), x)[0] == pytest.approx(3.0)


def test_directions_of_the_two_index_families():
    beta1, beta2 = directions(Family.H21, 4)
    np.testing.assert_allclose(beta1, np.full(4, 0.5))
    np.testing.assert_allclose(beta2, [0.0, 0.0, 1 / np.sqrt(2), 1 / np.sqrt(2)])
    beta1, beta2 = directions(Family.H31, 8)
    np.testing.assert_allclose(beta1, [0, 0, 0, 0, 0.5, 0.5, 0.5, 0.5])
    np.testing.assert_allclose(beta2, np.full(8, 1 / np.sqrt(8)))
    beta, _ = directions(Family.H11, 8)
    np.testing.assert_allclose(beta[-2:], 0.0)


@pytest.mark.parametrize(
    "family, p",
    [(Family.H11, 2), (Family.H21, 5), (Family.H12, 3), (Family.H13, 0)],
)
def test_invalid_dimension_is_rejected(family, p):
    with pytest.raises(ConfigError):
        DgpSpec(family, p)


def test_invalid_amplitude_and_sigma():
    with pytest.raises(ConfigError):
        DgpSpec(Family.H13, 8, float("nan"))
    with pytest.raises(ConfigError):
        DgpSpec(Family.H13, 8, sigma=0.0)
    with pytest.raises(ConfigError):
        dgp_generate(DgpSpec(Family.H13, 8), 0, seed=1)


def test_generation_is_deterministic():
    spec = DgpSpec(Family.H21, 4, 0.5, ErrorLaw.LAPLACE)
    first = dgp_generate(spec, 50, seed=9, replication=3)
    second = dgp_generate(spec, 50, seed=9, replication=3)
    other = dgp_generate(spec, 50, seed=9, replication=4)
    np.testing.assert_array_equal(first.X, second.X)
    np.testing.assert_array_equal(first.y, second.y)
    assert not np.array_equal(first.X, other.X)


def test_amplitude_cells_share_covariates():
    low = dgp_generate(DgpSpec(Family.H13, 8, 0.0), 30, seed=4)
    high = dgp_generate(DgpSpec(Family.H13, 8, 1.0), 30, seed=4)
    np.testing.assert_array_equal(low.X, high.X)


def test_ar02_covariance():
    np.testing.assert_allclose(covariance(CovarianceKind.AR02, 3)[0], [1.0, 0.2, 0.04])
    data = dgp_generate(DgpSpec(Family.H13, 4, x_cov=CovarianceKind.AR02), 20000, seed=2)
    np.testing.assert_allclose(np.cov(data.X, rowvar=False), covariance(CovarianceKind.AR02, 4), atol=0.05)


@pytest.mark.parametrize("law, variance", [(ErrorLaw.NORMAL, 4.0), (ErrorLaw.STUDENT_T, 5 / 3), (ErrorLaw.LAPLACE, 2.0)])
def test_null_refit_recovers_error_variance(law, variance):
    spec = DgpSpec(Family.H11, 8, 0.0, law, sigma=2.0)
    data = dgp_generate(spec, 2000, seed=17)
    fit = fit_null_model(data, null_spec_for(spec.family, spec.p))
    assert fit.rss0 / data.n == pytest.approx(variance, rel=0.2)


def test_scaled_exponential_null_for_h14():
    assert null_spec_for(Family.H14, 8).form is NullForm.SCALED_EXP
    assert null_spec_for(Family.H13, 8).form is NullForm.LINEAR


def test_method_tokens():
    default = MethodConfig.parse("rn-opg")
    assert default.variant is Variant.RN_ADJUSTED
    assert default.projection.method is ProjectionMethod.OPG
    assert default.projection.selector is DimensionSelector.RRE

    mave = MethodConfig.parse("SN-MAVE-unadj", bandwidth_scale=2.0)
    assert mave.variant is Variant.SN
    assert mave.projection.selector is DimensionSelector.BIC
    assert mave.projection.bandwidth_scale == 2.0

    fixed = MethodConfig.parse("rn-mave-fixed2")
    assert fixed.projection.selector is DimensionSelector.FIXED
    assert fixed.projection.fixed_q == 2

    assert MethodConfig.parse("fzz-a").variant is Variant.FZZ_ASYMPTOTIC
    assert MethodConfig.parse("fzz-b", bootstrap_b=400).bootstrap_b == 400


@pytest.mark.parametrize("token", ["rn", "rn-pca", "xx-opg", "rn-opg-fixed", "fzz-c"])
def test_unknown_method_tokens(token):
    with pytest.raises(ConfigError):
        MethodConfig.parse(token)


def test_single_replication_rate_is_zero_or_one():
    spec = DgpSpec(Family.H21, 4, 0.5)
    result = run_experiment(spec, 60, 1, [MethodConfig.parse("rn-opg")], seed=1)
    assert result.rate("rn-opg") in (0.0, 1.0)
    assert result.failures["rn-opg"] == 0


def test_experiment_does_not_depend_on_worker_count():
    spec = DgpSpec(Family.H21, 4, 0.3, ErrorLaw.STUDENT_T)
    methods = [MethodConfig.parse("rn-opg"), MethodConfig.parse("sn-opg"), MethodConfig.parse("fzz-a")]
    serial = run_experiment(spec, 60, 4, methods, seed=5, keep_statistics=True)
    parallel = run_experiment(spec, 60, 4, methods, seed=5, n_jobs=2, keep_statistics=True)
    assert serial.counts == parallel.counts
    assert serial.failures == parallel.failures
    for token in serial.methods:
        np.testing.assert_array_equal(serial.statistics[token], parallel.statistics[token])
        np.testing.assert_array_equal(serial.q_hats[token], parallel.q_hats[token])


def test_experiment_validates_inputs():
    spec = DgpSpec(Family.H21, 4)
    with pytest.raises(ConfigError):
        run_experiment(spec, 60, 0, [MethodConfig.parse("rn-opg")])
    with pytest.raises(ConfigError):
        run_experiment(spec, 60, 5, [])


def _result(a, methods, counts, reps=100, failures=None):
    return ExperimentResult(
        DgpSpec(Family.H22, 4, a),
        100,
        reps,
        list(methods),
        dict(zip(methods, counts)),
        failures or {m: 0 for m in methods},
    )


def test_rate_and_stderr():
    result = _result(0.0, ["rn-opg"], [5])
    assert result.rate("rn-opg") == 0.05
    assert result.stderr("rn-opg") == pytest.approx(np.sqrt(0.05 * 0.95 / 100))
    assert not result.unreliable
    assert _result(0.0, ["rn-opg"], [5], failures={"rn-opg": 6}).unreliable


def test_emit_single_result(tmp_path):
    paths = emit_table([_result(0.0, ["rn-opg"], [5])], tmp_path / "single.csv")
    assert paths == [tmp_path / "single.csv", tmp_path / "single_curves.csv"]
    lines = paths[0].read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(TABLE_COLUMNS)
    assert len(lines) == 2


def test_emit_grid_cardinality(tmp_path):
    methods = ["rn-opg", "fzz-a"]
    results = [_result(a, methods, [int(100 * a), 5]) for a in (0.4, 0.0, 0.2)]
    emit_table(results, tmp_path / "grid.csv")
    table = pd.read_csv(tmp_path / "grid.csv")
    assert len(table) == 3 * len(methods)
    curves = pd.read_csv(curves_path(tmp_path / "grid.csv"))
    assert list(curves.columns) == CURVE_COLUMNS
    rn = curves[curves["method"] == "rn-opg"]
    assert list(rn["a"]) == [0.0, 0.2, 0.4]
    assert list(rn["rate"]) == [0.0, 0.2, 0.4]


def test_emit_json(tmp_path):
    emit_table([_result(0.0, ["rn-opg"], [5])], tmp_path / "table.json", fmt="json")
    records = pd.read_json(tmp_path / "table.json", orient="records")
    assert list(records.columns) == TABLE_COLUMNS


def test_emit_rejects_empty_and_unknown_format(tmp_path):
    with pytest.raises(ConfigError):
        emit_table([], tmp_path / "t.csv")
    with pytest.raises(ConfigError):
        emit_table([_result(0.0, ["rn-opg"], [5])], tmp_path / "t.xml", fmt="xml")


def test_grid_expands_cells():
    grid = ExperimentGrid(
        family=Family.H22,
        p=(4, 8),
        a=(0.0, 0.5),
        n=(100,),
        error=(ErrorLaw.NORMAL,),
        methods=("rn-opg", "fzz-b"),
        bootstrap_b=150,
    )
    specs = grid.specs()
    assert [(s.p, s.a) for s in specs] == [(4, 0.0), (4, 0.5), (8, 0.0), (8, 0.5)]
    configs = grid.method_configs()
    assert configs[1].bootstrap_b == 150


def test_run_grid_order_and_shared_seed():
    grid = ExperimentGrid(
        family=Family.H11,
        p=(4,),
        a=(0.0, 0.6),
        n=(60, 80),
        error=(ErrorLaw.NORMAL,),
        methods=("sn-opg-fixed1",),
        reps=3,
        seed=11,
    )
    results = run_grid(grid)
    assert [(r.spec.a, r.n) for r in results] == [(0.0, 60), (0.0, 80), (0.6, 60), (0.6, 80)]
    alone = run_experiment(DgpSpec(Family.H11, 4, 0.6), 80, 3, grid.method_configs(), seed=11)
    assert alone.counts == results[3].counts
    assert alone.failures == results[3].failures
