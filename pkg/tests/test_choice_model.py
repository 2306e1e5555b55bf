"""Tests for the log-centered MNL regression and Style Quotients."""

import json
import math

import numpy as np
import pandas as pd
import pytest

from stylequotient.choice_model import (
    Centering,
    ChoiceProbabilities,
    DesignSystem,
    FitDiagnostics,
    FittedChoiceModel,
    SmoothingPolicy,
    StyleQuotientTable,
    build_design_matrix,
    choice_responses,
    empirical_choice_probabilities,
    fit_choice_model,
    fit_least_squares,
    load_model,
    log_center_response,
    model_from_json,
    model_to_json,
    save_model,
    style_quotients,
)
from stylequotient.config import ChoiceModelConfig, SynthConfig
from stylequotient.errors import EmptyDesignError, EstimationError, ProbabilityDomainError
from stylequotient.features import FEATURE_NAMES, build_feature_panel
from stylequotient.synthgen import generate

from .builders import make_panel, obs

# ============================================================================
# Helpers
# ============================================================================


def _three_style_week():
    return make_panel([obs("A", 1, 3), obs("B", 1, 1), obs("C", 1, 0)])


def _model(gamma: dict[str, float]) -> FittedChoiceModel:
    diagnostics = FitDiagnostics(
        rows=len(gamma), columns=len(gamma), rank=len(gamma), r2=1.0, rmse=0.0, rss=0.0,
        condition=1.0,
    )
    return FittedChoiceModel(
        subcategory_id="SUB",
        gamma=gamma,
        beta=(),
        feature_names=(),
        residuals=pd.Series(dtype=float),
        diagnostics=diagnostics,
    )


def _system(styles, rows_per_style, features, gamma, beta) -> DesignSystem:
    style_index = np.repeat(np.arange(len(styles)), rows_per_style)
    features = np.asarray(features, dtype=float)
    response = np.asarray(gamma)[style_index] + features @ np.asarray(beta)
    return DesignSystem.from_arrays(styles, style_index, features, response)


def _dense_minimum_norm(system: DesignSystem) -> np.ndarray:
    solution, *_ = np.linalg.lstsq(system.matrix.toarray(), system.response, rcond=None)
    return solution


# ============================================================================
# Choice probabilities and responses
# ============================================================================


def test_drop_policy_excludes_zero_sale_styles():
    """Test shares under the default zero-sale policy."""
    p = empirical_choice_probabilities(_three_style_week(), 1)

    assert p.probabilities == {"A": 0.75, "B": 0.25}
    assert p.excluded == {"C"}


def test_laplace_policy_keeps_every_live_style():
    """Test that Laplace smoothing adds alpha to every live style."""
    p = empirical_choice_probabilities(_three_style_week(), 1, SmoothingPolicy.laplace(0.5))

    assert p.probabilities == pytest.approx({"A": 3.5 / 5.5, "B": 1.5 / 5.5, "C": 0.5 / 5.5})
    assert sum(p.probabilities.values()) == pytest.approx(1.0)
    assert p.excluded == frozenset()


def test_laplace_alpha_must_be_positive():
    """Test that a non-positive pseudo-count is rejected."""
    with pytest.raises(EstimationError):
        SmoothingPolicy.laplace(0.0)


def test_week_without_sales_is_empty():
    """Test that a week with no sales yields an empty result, not an error."""
    panel = make_panel([obs("A", 1, 0), obs("B", 1, 0), obs("A", 2, 1)])

    p = empirical_choice_probabilities(panel, 1)

    assert p.is_empty
    assert p.excluded == {"A", "B"}
    assert log_center_response(p) == {}


def test_geometric_centering_sums_to_zero():
    """Test that geometric log-centering yields zero-sum responses."""
    p = ChoiceProbabilities(week=1, probabilities={"A": 0.5, "B": 0.3, "C": 0.2})

    responses = log_center_response(p, Centering.GEOMETRIC)

    assert sum(responses.values()) == pytest.approx(0.0, abs=1e-12)
    assert responses["A"] - responses["B"] == pytest.approx(math.log(0.5 / 0.3))
    assert p.mean_p(Centering.GEOMETRIC) == pytest.approx((0.5 * 0.3 * 0.2) ** (1 / 3))


def test_arithmetic_centering_divides_by_mean_share():
    """Test arithmetic log-centering against the week's mean probability."""
    p = ChoiceProbabilities(week=1, probabilities={"A": 0.75, "B": 0.25})

    responses = log_center_response(p, Centering.ARITHMETIC)

    assert responses == pytest.approx({"A": math.log(1.5), "B": math.log(0.5)})


def test_zero_probability_is_a_domain_error():
    """Test that logs of non-positive probabilities are refused."""
    p = ChoiceProbabilities(week=4, probabilities={"A": 1.0, "B": 0.0})

    with pytest.raises(ProbabilityDomainError) as exc_info:
        log_center_response(p)

    assert "'B'" in str(exc_info.value)


@pytest.mark.parametrize("centering", list(Centering))
@pytest.mark.parametrize("smoothing", [SmoothingPolicy.drop_zeros(), SmoothingPolicy.laplace(1.0)])
def test_vectorized_responses_match_per_week(centering, smoothing):
    """Test choice_responses against the one-week functions."""
    panel = make_panel(
        [
            obs("A", 1, 5), obs("B", 1, 2), obs("C", 1, 0),
            obs("A", 2, 1), obs("B", 2, 7), obs("C", 2, 3),
            obs("A", 3, 0), obs("B", 3, 0), obs("C", 3, live=False),
        ]
    )

    table = choice_responses(panel, smoothing, centering)

    for week in panel.weeks:
        expected = log_center_response(
            empirical_choice_probabilities(panel, week, smoothing), centering
        )
        rows = table.frame[table.frame["week"] == week]
        got = dict(zip(rows["style_id"], rows["response"], strict=True))
        assert got == pytest.approx(expected)
    assert table.skipped_weeks == ((3,) if smoothing.kind == "drop" else ())


# ============================================================================
# Design matrix and least squares
# ============================================================================


def test_design_matrix_layout():
    """Test row order, indicator columns and stored entries of [I | F]."""
    panel = make_panel(
        [
            obs("B", 1, 2), obs("A", 1, 4), obs("C", 1, 0),
            obs("A", 2, 1, selling_price=80.0), obs("B", 2, 3), obs("C", 2, live=False),
        ]
    )

    system = build_design_matrix(choice_responses(panel), build_feature_panel(panel), "SUB")

    assert list(system.rows) == [("A", 1), ("B", 1), ("A", 2), ("B", 2)]
    assert system.style_ids == ("A", "B")
    assert system.excluded_styles == ("C",)
    matrix = system.matrix
    assert matrix.shape == (4, 2 + len(FEATURE_NAMES))
    # explicit zeros are kept: every row stores its indicator and all K features
    assert matrix.nnz == 4 * (1 + len(FEATURE_NAMES))
    np.testing.assert_array_equal(matrix.toarray()[:, :2], [[1, 0], [0, 1], [1, 0], [0, 1]])


def test_full_rank_system_is_recovered_exactly():
    """Test that noiseless responses give back the generating parameters."""
    rng = np.random.default_rng(7)
    gamma = [0.4, -1.1, 0.7, 0.0]
    beta = [1.5, -0.25]
    system = _system(["A", "B", "C", "D"], 5, rng.normal(size=(20, 2)), gamma, beta)

    model = fit_least_squares(system)

    assert [model.gamma[s] for s in "ABCD"] == pytest.approx(gamma, abs=1e-10)
    assert model.beta == pytest.approx(beta, abs=1e-10)
    assert model.diagnostics.rank == 6
    assert model.diagnostics.rank_warnings == ()
    assert model.diagnostics.rss == pytest.approx(0.0, abs=1e-20)
    assert model.diagnostics.r2 == pytest.approx(1.0)
    assert model.diagnostics.solver == "within"


def test_rank_deficient_system_returns_minimum_norm_solution():
    """Test a feature that is constant within every style (collinear with the effects)."""
    rng = np.random.default_rng(11)
    varying = rng.normal(size=12)
    per_style = np.repeat([1.0, 2.0, -3.0], 4)
    features = np.column_stack([varying, per_style])
    system = _system(["A", "B", "C"], 4, features, [0.5, -0.5, 1.0], [2.0, 0.75])

    model = fit_least_squares(system)

    expected = _dense_minimum_norm(system)
    got = np.array([model.gamma[s] for s in "ABC"] + list(model.beta))
    np.testing.assert_allclose(got, expected, atol=1e-8)
    assert model.diagnostics.rank == 4
    assert any("rank 1 < 2" in warning for warning in model.diagnostics.rank_warnings)
    assert model.diagnostics.rss == pytest.approx(0.0, abs=1e-18)
    assert np.isfinite(model.diagnostics.condition)


def test_lsqr_path_agrees_with_factorization():
    """Test that the iterative solver reaches the same solution."""
    rng = np.random.default_rng(3)
    features = rng.normal(size=(30, 3))
    gamma = rng.normal(size=6)
    system = _system([f"S{i}" for i in range(6)], 5, features, gamma, [0.3, -0.2, 1.0])
    noisy = DesignSystem.from_arrays(
        system.style_ids,
        system.style_index,
        system.features,
        system.response + rng.normal(scale=0.05, size=30),
    )

    direct = fit_least_squares(noisy)
    iterative = fit_least_squares(noisy, ChoiceModelConfig(solver_threshold=1))

    assert iterative.diagnostics.solver == "lsqr"
    assert iterative.beta == pytest.approx(direct.beta, abs=1e-6)
    for style in noisy.style_ids:
        assert iterative.gamma[style] == pytest.approx(direct.gamma[style], abs=1e-6)


def test_empty_system_is_rejected():
    """Test that a fit needs at least one row."""
    system = DesignSystem.from_arrays(["A"], np.empty(0), np.empty((0, 2)), np.empty(0))

    with pytest.raises(EmptyDesignError):
        fit_least_squares(system)


def test_residuals_cover_exactly_the_regression_rows():
    """Test the residual index and fitted shapes on a small panel."""
    panel = make_panel(
        [
            obs("A", 1, 5), obs("B", 1, 2), obs("C", 1, 1),
            obs("A", 2, 4, selling_price=90.0), obs("B", 2, 0), obs("C", 2, 6, views=200),
            obs("A", 3, 2), obs("B", 3, 3), obs("C", 3, 2, selling_price=70.0),
        ]
    )

    model = fit_choice_model(panel, build_feature_panel(panel))

    assert len(model.residuals) == model.diagnostics.rows == 8
    assert ("B", 2) not in model.residuals.index
    assert set(model.gamma) == {"A", "B", "C"}
    assert len(model.beta) == len(FEATURE_NAMES)


def test_laplace_fit_keeps_zero_sale_rows():
    """Test that Laplace smoothing puts every live style-week in the regression."""
    panel = make_panel(
        [obs("A", 1, 5), obs("B", 1, 0), obs("A", 2, 3), obs("B", 2, 0), obs("C", 2, 1)]
    )
    config = ChoiceModelConfig(smoothing="laplace", alpha=1.0)

    model = fit_choice_model(panel, build_feature_panel(panel), config)

    assert model.diagnostics.rows == 5
    assert model.smoothing == SmoothingPolicy.laplace(1.0)
    assert "B" in model.gamma


def test_fit_on_synthetic_panel_tracks_true_effects():
    """Test that a fit on generated data ranks styles like the truth does."""
    panel, truth = generate(SynthConfig(n_styles=60, n_weeks=12, rng_seed=5))

    model = fit_choice_model(panel, build_feature_panel(panel))

    styles = sorted(model.gamma)
    fitted = np.array([model.gamma[s] for s in styles])
    true = np.array([truth.gamma_star[s] for s in styles])
    assert np.corrcoef(fitted, true)[0, 1] > 0.9
    assert 0.0 < model.diagnostics.r2 <= 1.0
    assert model.diagnostics.rows == len(model.residuals)


# ============================================================================
# Style Quotients
# ============================================================================


def test_single_style_quotient():
    """Test that a lone style with zero effect has SQ 1 and normalized 0.5."""
    table = style_quotients(_model({"A": 0.0}))

    assert table.raw_sq == {"A": 1.0}
    assert table.normalized_sq == {"A": 0.5}


def test_equal_effects_normalize_to_one_half():
    """Test the all-equal normalization rule."""
    table = style_quotients(_model({"A": 0.3, "B": 0.3, "C": 0.3}))

    assert set(table.normalized_sq.values()) == {0.5}


def test_min_max_normalization():
    """Test that normalized SQ spans [0, 1]."""
    table = style_quotients(_model({"A": 0.0, "B": math.log(2), "C": math.log(4)}))

    assert table.raw_sq == pytest.approx({"A": 1.0, "B": 2.0, "C": 4.0})
    assert table.normalized_sq == pytest.approx({"A": 0.0, "B": 1 / 3, "C": 1.0})
    frame = table.to_frame()
    assert frame.columns.tolist() == ["style_id", "gamma", "raw_sq", "normalized_sq"]
    assert StyleQuotientTable.from_frame(frame).normalized_sq == table.normalized_sq


# ============================================================================
# Serialization
# ============================================================================


def test_model_json_round_trip(tmp_path):
    """Test that a saved model reloads with identical parameters."""
    rng = np.random.default_rng(1)
    system = _system(["A", "B", "C"], 4, rng.normal(size=(12, 2)), [0.1, 0.2, -0.3], [1 / 3, -2])
    model = fit_least_squares(system)
    path = tmp_path / "model.json"

    save_model(model, path)
    again = load_model(path)

    assert again.gamma == model.gamma
    assert again.beta == model.beta
    assert again.diagnostics == model.diagnostics
    assert again.smoothing == model.smoothing
    assert again.centering is model.centering
    assert model_from_json(model_to_json(again)).gamma == model.gamma


def test_model_json_document_fields():
    """Test the keys of the serialized model document."""
    model = fit_least_squares(_system(["A", "B"], 3, np.arange(6.0)[:, None], [0, 1], [0.5]))

    document = json.loads(model_to_json(model))

    assert document["smoothing_policy"] == {"kind": "drop", "alpha": 0.5}
    assert document["centering"] == "geometric"
    assert document["model_kind"] == "style_effects"
    assert document["feature_names"] == ["x0"]
    assert {"rows", "r2", "rmse", "condition", "rank_warnings"} <= set(document["diagnostics"])


def test_fitted_weeks_are_recorded_and_serialized():
    """Test that a fit remembers the weeks its responses came from."""
    rows = [obs(s, week, units + week) for s, units in (("A", 3), ("B", 1)) for week in (1, 2, 3)]
    panel = make_panel(rows)
    features = build_feature_panel(panel)

    model = fit_choice_model(panel, features, weeks=range(1, 3))

    assert model.fitted_weeks == (1, 2)
    assert model.diagnostics.rows == 4
    assert model_from_json(model_to_json(model)).fitted_weeks == (1, 2)
    assert fit_choice_model(panel, features).fitted_weeks == (1, 3)
