"""Test-period sales forecasts and their wMAPE evaluation.

Four forecasters are compared on a train/test split of each subcategory:

(a) Simple ROS
    Rate of sale over the last training weeks, times days live.
(b) Normalized ROS
    ROS shares of the week's live assortment, times the week's total sales D_t.
(c) Mean intercept
    MNL with one common effect plus the merchandising features.
(d) SQ model
    MNL with per-style effects (the Style Quotient) plus the features.

(b), (c) and (d) distribute the actual test-week total D_t, so they conserve
mass per week and differ only in how they split it across styles.
"""

import logging
from collections.abc import Callable, Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
import pandas as pd

from .choice_model import (
    Centering,
    FittedChoiceModel,
    SmoothingPolicy,
    assemble_model,
    build_design_matrix,
    choice_responses,
    fit_choice_model,
)
from .config import BacktestConfig, ChoiceModelConfig
from .errors import (
    ConfigError,
    EmptyDesignError,
    ForecastError,
    KeyMismatchError,
    UndefinedDenominatorError,
    WeekRangeError,
)
from .features import FeaturePanel, build_feature_panel
from .panel import SubcategoryPanel, filter_min_weeks, split_train_test

__all__ = [
    "BacktestResult",
    "EvaluationReport",
    "ForecastModel",
    "SalesForecast",
    "actual_sales",
    "actual_totals",
    "backtest",
    "evaluate",
    "fit_mean_intercept",
    "predict_choice_model",
    "predict_normalized_ros",
    "predict_simple_ros",
    "ros",
    "wmape",
]

logger = logging.getLogger(__name__)

Key = tuple[str, int]
DemandProvider = Callable[[SubcategoryPanel], dict[int, float]]


class ForecastModel(str, Enum):
    """The four compared forecasters, in reporting order."""

    SIMPLE_ROS = "simple_ros"
    NORMALIZED_ROS = "normalized_ros"
    MEAN_INTERCEPT = "mean_intercept"
    SQ_MODEL = "sq_model"

    @property
    def label(self) -> str:
        """Column label such as ``(a) simple_ros``."""
        letter = "abcd"[list(ForecastModel).index(self)]
        return f"({letter}) {self.value}"


@dataclass(frozen=True, eq=False)
class SalesForecast:
    """Predicted unit sales of one model for one subcategory's test weeks.

    Attributes:
        model: Which forecaster produced the predictions
        subcategory_id: Subcategory forecast
        predictions: ``d_it`` for every predicted (style, week)
        uncovered: Live (style, week) pairs the model could not predict
        skipped_weeks: Test weeks without any prediction
    """

    model: ForecastModel
    subcategory_id: str
    predictions: dict[Key, float]
    uncovered: frozenset[Key] = frozenset()
    skipped_weeks: tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.predictions)

    @property
    def coverage(self) -> frozenset[Key]:
        return frozenset(self.predictions)

    def week_totals(self) -> dict[int, float]:
        totals: dict[int, float] = {}
        for (_, week), value in self.predictions.items():
            totals[week] = totals.get(week, 0.0) + value
        return dict(sorted(totals.items()))


@dataclass(frozen=True)
class EvaluationReport:
    """wMAPE of one model, pooled overall, per week and per subcategory.

    All values are percentages. Weeks or subcategories whose actual sales sum
    to zero have no wMAPE and are absent from the maps.
    """

    model: ForecastModel
    wmape_overall: float
    wmape_by_week: dict[int, float]
    wmape_by_subcategory: dict[str, float]
    absolute_error: float
    actual_total: float


@dataclass(frozen=True, eq=False)
class BacktestResult:
    """Everything a backtest produces.

    Attributes:
        reports: One evaluation per model
        forecasts: Per subcategory, the forecast of every model
        models: Per subcategory, the fitted mean-intercept and SQ models
        actuals: Per subcategory, actual sales of every live test (style, week)
        train_weeks: Last training week of the split
        skipped_subcategories: Subcategories with no style left after filtering
    """

    reports: dict[ForecastModel, EvaluationReport]
    forecasts: dict[str, dict[ForecastModel, SalesForecast]]
    models: dict[str, dict[ForecastModel, FittedChoiceModel]]
    actuals: dict[str, dict[Key, float]]
    train_weeks: int
    skipped_subcategories: tuple[str, ...] = ()

    @property
    def subcategories(self) -> list[str]:
        return sorted(self.forecasts)

    @property
    def weeks(self) -> list[int]:
        return sorted(self.reports[ForecastModel.SQ_MODEL].wmape_by_week)

    def improvement(self, baseline: ForecastModel) -> dict[str, object]:
        """wMAPE points the SQ model gains over ``baseline`` (positive is better).

        Returns:
            ``{"overall": float, "by_week": {...}, "by_subcategory": {...}}``
        """
        base = self.reports[baseline]
        sq = self.reports[ForecastModel.SQ_MODEL]
        return {
            "overall": base.wmape_overall - sq.wmape_overall,
            "by_week": {
                week: base.wmape_by_week[week] - value
                for week, value in sq.wmape_by_week.items()
                if week in base.wmape_by_week
            },
            "by_subcategory": {
                sub: base.wmape_by_subcategory[sub] - value
                for sub, value in sq.wmape_by_subcategory.items()
                if sub in base.wmape_by_subcategory
            },
        }

    @property
    def improvements(self) -> dict[str, dict[str, object]]:
        return {
            "d_vs_b": self.improvement(ForecastModel.NORMALIZED_ROS),
            "d_vs_c": self.improvement(ForecastModel.MEAN_INTERCEPT),
        }

    def training_rss(self) -> dict[str, dict[ForecastModel, float]]:
        """In-sample RSS of both regression models, per subcategory."""
        return {
            sub: {kind: model.diagnostics.rss for kind, model in fitted.items()}
            for sub, fitted in sorted(self.models.items())
        }


# ---------------------------------------------------------------------------
# Actuals
# ---------------------------------------------------------------------------


def actual_sales(test: SubcategoryPanel) -> dict[Key, float]:
    """Actual units of every live (style, week) of a panel."""
    live = test.live
    return {
        (style, int(week)): float(sales)
        for style, week, sales in zip(
            live["style_id"], live["week"], live["sales_qty"], strict=True
        )
    }


def actual_totals(test: SubcategoryPanel) -> dict[int, float]:
    """Total subcategory sales ``D_t`` of every week of a panel."""
    totals = test.frame.groupby("week")["sales_qty"].sum()
    totals = totals.reindex(list(test.weeks), fill_value=0)
    return {int(week): float(value) for week, value in totals.items()}


# ---------------------------------------------------------------------------
# ROS baselines
# ---------------------------------------------------------------------------


def ros(panel: SubcategoryPanel, style_id: str, window: range) -> float:
    """Rate of sale: units sold per day live over ``window``.

    Returns 0.0 when the style has no live days in the window.

    Raises:
        WeekRangeError: If ``window`` is empty
    """
    if len(window) == 0:
        raise WeekRangeError("ROS window must not be empty")
    frame = panel.frame
    rows = frame[(frame["style_id"] == style_id) & frame["week"].isin(list(window))]
    days = int(rows["days_live_in_week"].sum())
    if days == 0:
        return 0.0
    return float(rows["sales_qty"].sum()) / days


def _ros_window(train: SubcategoryPanel, window: int) -> range:
    first, last = train.week_range
    if last - first + 1 < window:
        raise WeekRangeError(
            f"Training panel covers {last - first + 1} weeks, fewer than the ROS window {window}"
        )
    return range(last - window + 1, last + 1)


def _ros_by_style(train: SubcategoryPanel, window: range) -> pd.Series:
    rows = train.frame[train.frame["week"].isin(list(window))]
    sums = rows.groupby("style_id")[["sales_qty", "days_live_in_week"]].sum()
    days = sums["days_live_in_week"].to_numpy(dtype=float)
    sales = sums["sales_qty"].to_numpy(dtype=float)
    rates = np.divide(sales, days, out=np.zeros_like(sales), where=days > 0)
    return pd.Series(rates, index=sums.index, name="ros")


def predict_simple_ros(
    train: SubcategoryPanel,
    test: SubcategoryPanel,
    window: int = 4,
) -> SalesForecast:
    """Simple ROS: ``d_it = ROS_i x days_live_in_week(i, t)``.

    The ROS comes from the last ``window`` training weeks and is held constant
    over all test weeks. Styles never seen in training are predicted 0 and
    reported as uncovered.
    """
    rates = _ros_by_style(train, _ros_window(train, window))
    live = test.live
    known = live["style_id"].isin(set(train.live["style_id"]))
    rate = live["style_id"].map(rates).fillna(0.0).to_numpy(dtype=float)
    units = rate * live["days_live_in_week"].to_numpy(dtype=float)

    keys = list(zip(live["style_id"], live["week"].astype(int), strict=True))
    uncovered = frozenset(key for key, seen in zip(keys, known, strict=True) if not seen)
    if uncovered:
        logger.info(
            "Subcategory %s: %d test style-weeks have no training history",
            test.subcategory_id,
            len(uncovered),
        )
    return SalesForecast(
        model=ForecastModel.SIMPLE_ROS,
        subcategory_id=test.subcategory_id,
        predictions=dict(zip(keys, units.tolist(), strict=True)),
        uncovered=uncovered,
    )


def predict_normalized_ros(
    train: SubcategoryPanel,
    test: SubcategoryPanel,
    totals: Mapping[int, float],
    window: int = 4,
) -> SalesForecast:
    """Normalized ROS: ``d_it = ROS_i / sum_j ROS_j x D_t`` over the live styles.

    When every live style has zero ROS, ``D_t`` is split uniformly.

    Raises:
        KeyMismatchError: If ``totals`` lacks a week with live styles
    """
    rates = _ros_by_style(train, _ros_window(train, window))
    live = test.live[["style_id", "week"]].copy()
    _require_totals(live, totals, test.subcategory_id)

    live["ros"] = live["style_id"].map(rates).fillna(0.0).astype(float)
    by_week = live.groupby("week")["ros"]
    week_sum = by_week.transform("sum")
    week_size = by_week.transform("size").astype(float)
    share = np.where(week_sum > 0, live["ros"] / week_sum.where(week_sum > 0, 1.0), 1.0 / week_size)
    demand = live["week"].map(totals).astype(float)
    units = share * demand

    keys = list(zip(live["style_id"], live["week"].astype(int), strict=True))
    return SalesForecast(
        model=ForecastModel.NORMALIZED_ROS,
        subcategory_id=test.subcategory_id,
        predictions=dict(zip(keys, np.asarray(units, dtype=float).tolist(), strict=True)),
        skipped_weeks=_empty_weeks(test),
    )


# ---------------------------------------------------------------------------
# Choice-model forecasters
# ---------------------------------------------------------------------------


def fit_mean_intercept(
    train: SubcategoryPanel,
    feature_panel: FeaturePanel,
    config: ChoiceModelConfig | None = None,
) -> FittedChoiceModel:
    """Fit the baseline MNL with one common intercept instead of style effects.

    The rows are built exactly as for the SQ model; the system ``[1 | F]`` is
    small and solved densely. Every style with a row is assigned the intercept
    as its effect, and styles without one fall back to it when predicting.
    """
    config = config or ChoiceModelConfig()
    responses = choice_responses(
        train,
        SmoothingPolicy.from_config(config),
        Centering(config.centering),
    )
    system = build_design_matrix(responses, feature_panel, train.subcategory_id)
    if system.n_rows == 0:
        raise EmptyDesignError(f"Subcategory {train.subcategory_id}: no regression rows")

    design = np.column_stack([np.ones(system.n_rows), system.features])
    solution, _, rank, singular = np.linalg.lstsq(design, system.response, rcond=None)
    intercept = float(solution[0])
    beta = solution[1:]
    nonzero = singular[singular > np.finfo(float).eps * max(design.shape) * singular[0]]
    condition = float(nonzero[0] / nonzero[-1]) if len(nonzero) else 1.0

    warnings: tuple[str, ...] = ()
    if rank < design.shape[1]:
        warnings = (f"Intercept design has rank {rank} < {design.shape[1]}",)
        logger.warning("Subcategory %s: %s", train.subcategory_id, warnings[0])

    model = assemble_model(
        system,
        np.full(system.n_styles, intercept),
        beta,
        rank=int(rank),
        condition=condition,
        solver="dense",
        rank_warnings=warnings,
        model_kind="mean_intercept",
        intercept=intercept,
        columns=design.shape[1],
    )
    return replace(model, fitted_weeks=train.week_range)


def predict_choice_model(
    model: FittedChoiceModel,
    test: SubcategoryPanel,
    feature_panel: FeaturePanel,
    totals: Mapping[int, float],
) -> SalesForecast:
    """MNL forecast: softmax of the fitted utilities of each week, times ``D_t``.

    ``U_it = effect_i + beta . centered_f_it``. Styles without an effect are
    excluded and the probabilities renormalized over the remaining live styles;
    a week where nobody remains is skipped.

    Raises:
        ForecastError: If the model's features differ from the feature panel's
        KeyMismatchError: If ``totals`` lacks a week with live styles
    """
    if tuple(model.feature_names) != tuple(feature_panel.feature_names):
        raise ForecastError(
            f"Model features {list(model.feature_names)} do not match the feature panel's "
            f"{list(feature_panel.feature_names)}"
        )
    kind = (
        ForecastModel.MEAN_INTERCEPT
        if model.model_kind == "mean_intercept"
        else ForecastModel.SQ_MODEL
    )
    live = test.live[["style_id", "week"]].reset_index(drop=True)
    _require_totals(live, totals, test.subcategory_id)

    effect = live["style_id"].map(model.gamma)
    if model.intercept is not None:
        effect = effect.fillna(model.intercept)
    known = effect.notna().to_numpy()

    rows = live[known].reset_index(drop=True)
    keys = pd.MultiIndex.from_arrays(
        [rows["style_id"].to_numpy(), rows["week"].to_numpy()], names=["style_id", "week"]
    )
    beta = np.asarray(model.beta, dtype=float)
    utility = effect[known].to_numpy(dtype=float) + feature_panel.centered_matrix(keys) @ beta
    utility = pd.Series(utility, index=rows.index)
    shifted = utility - utility.groupby(rows["week"]).transform("max")
    weights = np.exp(shifted)
    probability = weights / weights.groupby(rows["week"]).transform("sum")
    units = probability * rows["week"].map(totals).astype(float)

    uncovered = frozenset(
        (style, int(week))
        for style, week in zip(live.loc[~known, "style_id"], live.loc[~known, "week"], strict=True)
    )
    covered_weeks = set(rows["week"].astype(int))
    skipped = tuple(week for week in test.weeks if week not in covered_weeks)
    for week in skipped:
        logger.warning(
            "Subcategory %s: no live style with an effect in week %d; week skipped",
            test.subcategory_id,
            week,
        )
    if uncovered:
        logger.info(
            "Subcategory %s: %d test style-weeks excluded for lack of a style effect",
            test.subcategory_id,
            len(uncovered),
        )

    prediction_keys = zip(rows["style_id"], rows["week"].astype(int), strict=True)
    return SalesForecast(
        model=kind,
        subcategory_id=test.subcategory_id,
        predictions=dict(zip(prediction_keys, units.to_numpy(dtype=float).tolist(), strict=True)),
        uncovered=uncovered,
        skipped_weeks=skipped,
    )


def _require_totals(live: pd.DataFrame, totals: Mapping[int, float], subcategory_id: str) -> None:
    missing = sorted(set(live["week"].astype(int)) - set(totals))
    if missing:
        raise KeyMismatchError(f"Subcategory {subcategory_id}: no total sales for weeks {missing}")


def _empty_weeks(test: SubcategoryPanel) -> tuple[int, ...]:
    live_weeks = set(test.live["week"].astype(int))
    return tuple(week for week in test.weeks if week not in live_weeks)


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------


def wmape(actual: Mapping[Key, float], predicted: Mapping[Key, float]) -> float:
    """Weighted MAPE in percent: ``100 x sum|A - F| / sum A``.

    Raises:
        KeyMismatchError: If the two maps cover different keys
        UndefinedDenominatorError: If the actuals sum to zero
    """
    if actual.keys() != predicted.keys():
        extra = len(set(predicted) - set(actual))
        missing = len(set(actual) - set(predicted))
        raise KeyMismatchError(
            f"Forecast keys differ from actual keys ({missing} missing, {extra} unexpected)"
        )
    keys = list(actual)
    a = np.array([actual[key] for key in keys], dtype=float)
    f = np.array([predicted[key] for key in keys], dtype=float)
    denominator = a.sum()
    if denominator == 0:
        raise UndefinedDenominatorError("wMAPE is undefined when actual sales sum to zero")
    return float(100.0 * np.abs(a - f).sum() / denominator)


def evaluate(
    model: ForecastModel,
    forecasts: Mapping[str, SalesForecast],
    actuals: Mapping[str, Mapping[Key, float]],
) -> EvaluationReport:
    """Pool absolute errors and actuals overall, per week and per subcategory.

    Live test style-weeks a forecast does not cover count as predicted 0.

    Raises:
        UndefinedDenominatorError: If the pooled actuals sum to zero
    """
    records = []
    for sub in sorted(actuals):
        predictions = forecasts[sub].predictions
        for (style, week), value in actuals[sub].items():
            forecast = predictions.get((style, week), 0.0)
            records.append((sub, week, value, abs(value - forecast)))
    frame = pd.DataFrame(records, columns=["subcategory_id", "week", "actual", "error"])

    actual_total = float(frame["actual"].sum())
    absolute_error = float(frame["error"].sum())
    if actual_total == 0:
        raise UndefinedDenominatorError(
            f"{model.label}: wMAPE is undefined, test sales sum to zero"
        )

    def pooled(column: str) -> dict:
        sums = frame.groupby(column)[["actual", "error"]].sum()
        defined = sums[sums["actual"] > 0]
        if len(defined) < len(sums):
            logger.warning(
                "%s: %d %s groups have no test sales and no wMAPE",
                model.label,
                len(sums) - len(defined),
                column,
            )
        return {
            key: float(100.0 * row["error"] / row["actual"]) for key, row in defined.iterrows()
        }

    report = EvaluationReport(
        model=model,
        wmape_overall=100.0 * absolute_error / actual_total,
        wmape_by_week={int(week): value for week, value in pooled("week").items()},
        wmape_by_subcategory={str(sub): value for sub, value in pooled("subcategory_id").items()},
        absolute_error=absolute_error,
        actual_total=actual_total,
    )
    logger.info("%s: overall wMAPE %.2f%%", model.label, report.wmape_overall)
    return report


# ---------------------------------------------------------------------------
# Backtest
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _Split:
    train: SubcategoryPanel
    test: SubcategoryPanel
    features: FeaturePanel
    totals: dict[int, float]
    actuals: dict[Key, float] = field(default_factory=dict)


def _prepare(
    panel: SubcategoryPanel,
    config: BacktestConfig,
    demand: DemandProvider,
) -> _Split | None:
    filtered = filter_min_weeks(panel, config.min_live_weeks)
    if not filtered.universal_styles:
        logger.warning(
            "Subcategory %s: no style is live for %d weeks; skipped",
            panel.subcategory_id,
            config.min_live_weeks,
        )
        return None
    train, test = split_train_test(filtered, config.train_weeks)
    if len(train.weeks) < config.ros_window:
        raise ConfigError(
            f"train_weeks leaves {len(train.weeks)} training weeks, "
            f"fewer than ros_window={config.ros_window}"
        )
    return _Split(
        train=train,
        test=test,
        features=build_feature_panel(filtered),
        totals=demand(test),
        actuals=actual_sales(test),
    )


def _fit_and_predict(
    split: _Split, config: ChoiceModelConfig, intercept_only: bool
) -> tuple[FittedChoiceModel, SalesForecast]:
    if intercept_only:
        model = fit_mean_intercept(split.train, split.features, config)
    else:
        model = fit_choice_model(split.train, split.features, config)
    return model, predict_choice_model(model, split.test, split.features, split.totals)


def backtest(
    panels: SubcategoryPanel | Mapping[str, SubcategoryPanel],
    config: BacktestConfig | None = None,
    demand: DemandProvider = actual_totals,
) -> BacktestResult:
    """Run all four forecasters on a train/test split and score them.

    Each subcategory is filtered to styles live at least ``min_live_weeks``
    weeks, split after ``train_weeks`` and given features computed on the whole
    filtered panel (test-week merchandising is planned ahead; test-week sales
    are never used for fitting). The per-model passes run concurrently.

    Args:
        panels: One panel or a mapping of subcategory panels
        config: Split, filter, ROS and regression settings
        demand: Supplies ``D_t`` for the test panel; actual totals by default

    Returns:
        Reports, forecasts, fitted models and actuals of the run

    Raises:
        ForecastError: If no subcategory survives filtering
        UndefinedDenominatorError: If the test weeks hold no sales at all
    """
    config = config or BacktestConfig()
    if isinstance(panels, SubcategoryPanel):
        panels = {panels.subcategory_id: panels}

    splits: dict[str, _Split] = {}
    skipped: list[str] = []
    for sub in sorted(panels):
        split = _prepare(panels[sub], config, demand)
        if split is None:
            skipped.append(sub)
        else:
            splits[sub] = split
    if not splits:
        raise ForecastError("No subcategory has styles left to backtest")

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        futures = {}
        for sub, split in splits.items():
            futures[sub, ForecastModel.SIMPLE_ROS] = pool.submit(
                predict_simple_ros, split.train, split.test, config.ros_window
            )
            futures[sub, ForecastModel.NORMALIZED_ROS] = pool.submit(
                predict_normalized_ros, split.train, split.test, split.totals, config.ros_window
            )
            futures[sub, ForecastModel.MEAN_INTERCEPT] = pool.submit(
                _fit_and_predict, split, config.choice, True
            )
            futures[sub, ForecastModel.SQ_MODEL] = pool.submit(
                _fit_and_predict, split, config.choice, False
            )
        outcomes = {key: future.result() for key, future in futures.items()}

    forecasts: dict[str, dict[ForecastModel, SalesForecast]] = {}
    models: dict[str, dict[ForecastModel, FittedChoiceModel]] = {}
    for sub in splits:
        forecasts[sub] = {}
        models[sub] = {}
        for kind in ForecastModel:
            outcome = outcomes[sub, kind]
            if isinstance(outcome, tuple):
                models[sub][kind], forecasts[sub][kind] = outcome
            else:
                forecasts[sub][kind] = outcome

    actuals = {sub: split.actuals for sub, split in splits.items()}
    reports = {
        kind: evaluate(kind, {sub: forecasts[sub][kind] for sub in splits}, actuals)
        for kind in ForecastModel
    }
    return BacktestResult(
        reports=reports,
        forecasts=forecasts,
        models=models,
        actuals=actuals,
        train_weeks=config.train_weeks,
        skipped_subcategories=tuple(skipped),
    )
