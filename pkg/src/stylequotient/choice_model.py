"""Log-centered multinomial logit with style fixed effects.

Weekly sales shares are treated as MNL choice probabilities. Log-centering each
week's shares against the week's mean share turns the MNL into a linear model::

    ln(p_it / mean_p_t) = gamma_i + sum_k beta_k (f_ikt - mean_f_kt) + e_it

which is fitted by least squares. The style effects ``gamma_i`` give the Style
Quotient ``SQ_i = exp(gamma_i)``: the part of a style's demand that the
merchandising levers in ``f`` do not explain.

The design matrix is ``[I | F]``: one indicator column per style followed by
the K centered feature columns, with no global intercept. It is sparse (every
row has 1 + K stored entries) and is solved either through a within-style
factorization (the indicator block is orthogonal, so it can be eliminated
exactly) or, for very large subcategories, iteratively with LSQR.
"""

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd
import scipy.sparse as sp
from scipy.sparse.linalg import lsqr

from .config import ChoiceModelConfig
from .errors import EmptyDesignError, EstimationError, ProbabilityDomainError
from .features import FEATURE_NAMES, FeaturePanel
from .panel import SubcategoryPanel, assortment_at

__all__ = [
    "Centering",
    "ChoiceProbabilities",
    "DesignSystem",
    "FitDiagnostics",
    "FittedChoiceModel",
    "ResponseTable",
    "SmoothingPolicy",
    "StyleQuotientTable",
    "build_design_matrix",
    "choice_responses",
    "empirical_choice_probabilities",
    "fit_choice_model",
    "fit_least_squares",
    "load_model",
    "log_center_response",
    "model_from_json",
    "model_to_json",
    "save_model",
    "style_quotients",
]

logger = logging.getLogger(__name__)

ModelKind = Literal["style_effects", "mean_intercept"]


class Centering(str, Enum):
    """Which per-week mean share the log-centering divides by."""

    GEOMETRIC = "geometric"
    ARITHMETIC = "arithmetic"


@dataclass(frozen=True)
class SmoothingPolicy:
    """How zero-sale live styles enter the choice probabilities.

    ``drop`` excludes them from the week's shares (and from the regression);
    ``laplace`` adds ``alpha`` to every live style's sales first.
    """

    kind: Literal["drop", "laplace"] = "drop"
    alpha: float = 0.5

    @classmethod
    def drop_zeros(cls) -> "SmoothingPolicy":
        return cls("drop")

    @classmethod
    def laplace(cls, alpha: float = 0.5) -> "SmoothingPolicy":
        if alpha <= 0:
            raise EstimationError(f"Laplace alpha must be positive, got {alpha}")
        return cls("laplace", alpha)

    @classmethod
    def from_config(cls, config: ChoiceModelConfig) -> "SmoothingPolicy":
        if config.smoothing == "laplace":
            return cls.laplace(config.alpha)
        return cls.drop_zeros()


@dataclass(frozen=True)
class ChoiceProbabilities:
    """Empirical choice probabilities of one week.

    Attributes:
        week: The week
        probabilities: ``p_it`` for every included style; sums to 1
        excluded: Live styles left out (zero sales under ``drop``)
    """

    week: int
    probabilities: dict[str, float]
    excluded: frozenset[str] = frozenset()

    @property
    def is_empty(self) -> bool:
        return not self.probabilities

    def mean_p(self, centering: Centering = Centering.GEOMETRIC) -> float:
        """The week's mean probability under the given centering."""
        values = np.fromiter(self.probabilities.values(), dtype=float)
        if centering is Centering.GEOMETRIC:
            return float(np.exp(np.log(values).mean()))
        return float(values.mean())


@dataclass(frozen=True, eq=False)
class ResponseTable:
    """Log-centered responses for every included (style, week).

    Attributes:
        frame: Columns ``style_id, week, p, response`` ordered by week then style
        skipped_weeks: Weeks without any included style
        smoothing: Policy used to build the shares
        centering: Centering used for the responses
    """

    frame: pd.DataFrame
    skipped_weeks: tuple[int, ...]
    smoothing: SmoothingPolicy
    centering: Centering


@dataclass(frozen=True, eq=False)
class DesignSystem:
    """The sparse least-squares system ``[I | F] x = y``.

    Attributes:
        rows: ``(style_id, week)`` key of every row
        style_ids: Style of every indicator column, in column order
        style_index: Indicator column of every row
        features: Dense ``n x K`` block of centered features
        response: Response vector of length n
        feature_names: Names of the K feature columns
        excluded_styles: Styles with features but no regression row
        skipped_weeks: Weeks that contributed no rows
        subcategory_id: Subcategory the rows come from
        smoothing: Share construction policy (carried into the model)
        centering: Log-centering mode (carried into the model)
    """

    rows: pd.MultiIndex
    style_ids: tuple[str, ...]
    style_index: np.ndarray
    features: np.ndarray
    response: np.ndarray
    feature_names: tuple[str, ...] = FEATURE_NAMES
    excluded_styles: tuple[str, ...] = ()
    skipped_weeks: tuple[int, ...] = ()
    subcategory_id: str = ""
    smoothing: SmoothingPolicy = field(default_factory=SmoothingPolicy)
    centering: Centering = Centering.GEOMETRIC

    @property
    def n_rows(self) -> int:
        return len(self.response)

    @property
    def n_styles(self) -> int:
        return len(self.style_ids)

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        """CSR form of ``[I | F]``; every row stores exactly 1 + K entries."""
        n, k = self.features.shape
        width = 1 + k
        indices = np.empty((n, width), dtype=np.int64)
        indices[:, 0] = self.style_index
        indices[:, 1:] = self.n_styles + np.arange(k)
        data = np.empty((n, width), dtype=float)
        data[:, 0] = 1.0
        data[:, 1:] = self.features
        indptr = np.arange(0, n * width + 1, width, dtype=np.int64)
        return sp.csr_matrix(
            (data.ravel(), indices.ravel(), indptr),
            shape=(n, self.n_styles + k),
        )

    @classmethod
    def from_arrays(
        cls,
        style_ids: list[str] | tuple[str, ...],
        style_index: np.ndarray,
        features: np.ndarray,
        response: np.ndarray,
        feature_names: tuple[str, ...] | None = None,
    ) -> "DesignSystem":
        """Build a system directly from arrays (rows are keyed by position)."""
        style_index = np.asarray(style_index, dtype=np.int64)
        features = np.asarray(features, dtype=float)
        if features.ndim == 1:
            features = features[:, None]
        if feature_names is None:
            feature_names = tuple(f"x{k}" for k in range(features.shape[1]))
        rows = pd.MultiIndex.from_arrays(
            [[style_ids[i] for i in style_index], np.arange(len(style_index))],
            names=["style_id", "week"],
        )
        return cls(
            rows=rows,
            style_ids=tuple(style_ids),
            style_index=style_index,
            features=features,
            response=np.asarray(response, dtype=float),
            feature_names=tuple(feature_names),
        )


@dataclass(frozen=True)
class FitDiagnostics:
    """Summary of a least-squares fit.

    ``condition`` is estimated over the non-null spectrum of the system, so it
    stays finite for rank-deficient fits; ``rank_warnings`` flags those.
    """

    rows: int
    columns: int
    rank: int
    r2: float
    rmse: float
    rss: float
    condition: float
    rank_warnings: tuple[str, ...] = ()
    solver: str = "within"
    gauge_mean: float = 0.0
    excluded_styles: tuple[str, ...] = ()
    skipped_weeks: tuple[int, ...] = ()


@dataclass(frozen=True, eq=False)
class FittedChoiceModel:
    """Estimated style effects and feature coefficients of one subcategory.

    Attributes:
        subcategory_id: The subcategory fitted
        gamma: Style effect of every style with at least one regression row
        beta: Coefficients in ``feature_names`` order
        feature_names: Names of the K features
        residuals: Residual per regression row, indexed by ``(style_id, week)``
        diagnostics: Fit summary
        smoothing: Share construction policy
        centering: Log-centering mode
        model_kind: ``"style_effects"`` or ``"mean_intercept"``
        intercept: Common effect of the mean-intercept baseline, else ``None``
        fitted_weeks: First and last week the responses were drawn from, or
            ``None`` when unknown
    """

    subcategory_id: str
    gamma: dict[str, float]
    beta: tuple[float, ...]
    feature_names: tuple[str, ...]
    residuals: pd.Series
    diagnostics: FitDiagnostics
    smoothing: SmoothingPolicy = field(default_factory=SmoothingPolicy)
    centering: Centering = Centering.GEOMETRIC
    model_kind: ModelKind = "style_effects"
    intercept: float | None = None
    fitted_weeks: tuple[int, int] | None = None

    def effect(self, style_id: str) -> float | None:
        """Effect used for prediction; the intercept for unseen styles if any."""
        return self.gamma.get(style_id, self.intercept)


@dataclass(frozen=True, eq=False)
class StyleQuotientTable:
    """Raw and min-max normalized Style Quotients of one subcategory."""

    raw_sq: dict[str, float]
    normalized_sq: dict[str, float]
    gamma: dict[str, float] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.raw_sq)

    def to_frame(self) -> pd.DataFrame:
        """Columns ``style_id, gamma, raw_sq, normalized_sq`` sorted by style_id."""
        styles = sorted(self.raw_sq)
        return pd.DataFrame(
            {
                "style_id": styles,
                "gamma": [self.gamma.get(style, np.log(self.raw_sq[style])) for style in styles],
                "raw_sq": [self.raw_sq[style] for style in styles],
                "normalized_sq": [self.normalized_sq[style] for style in styles],
            }
        )

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "StyleQuotientTable":
        styles = frame["style_id"].astype(str)
        return cls(
            raw_sq=dict(zip(styles, frame["raw_sq"].astype(float), strict=True)),
            normalized_sq=dict(zip(styles, frame["normalized_sq"].astype(float), strict=True)),
            gamma=dict(zip(styles, frame["gamma"].astype(float), strict=True)),
        )


# ---------------------------------------------------------------------------
# Choice probabilities and responses
# ---------------------------------------------------------------------------


def empirical_choice_probabilities(
    panel: SubcategoryPanel,
    week: int,
    smoothing: SmoothingPolicy | None = None,
) -> ChoiceProbabilities:
    """Sales shares of the week's live assortment.

    Under ``drop`` only styles with positive sales are included; a week without
    sales yields an empty result (logged) rather than an error. Under
    ``laplace`` every live style is included with ``alpha`` added to its sales.

    Raises:
        WeekRangeError: If ``week`` lies outside the panel
    """
    smoothing = smoothing or SmoothingPolicy()
    live = assortment_at(panel, week).live_styles
    rows = panel.frame[(panel.frame["week"] == week) & panel.frame["style_id"].isin(live)]
    sales = dict(zip(rows["style_id"], rows["sales_qty"].astype(float), strict=True))

    if smoothing.kind == "laplace":
        weights = {style: value + smoothing.alpha for style, value in sales.items()}
        excluded: frozenset[str] = frozenset()
    else:
        weights = {style: value for style, value in sales.items() if value > 0}
        excluded = frozenset(sales) - frozenset(weights)

    total = sum(weights.values())
    if total <= 0:
        logger.warning("Week %d has no sales among live styles; skipped", week)
        return ChoiceProbabilities(week=week, probabilities={}, excluded=frozenset(sales))
    return ChoiceProbabilities(
        week=week,
        probabilities={style: value / total for style, value in sorted(weights.items())},
        excluded=excluded,
    )


def log_center_response(
    p: ChoiceProbabilities,
    centering: Centering = Centering.GEOMETRIC,
) -> dict[str, float]:
    """Log-centered responses ``ln(p_it / mean_p_t)`` of one week.

    With geometric centering the responses sum to zero.

    Raises:
        ProbabilityDomainError: If any probability is not positive
    """
    if p.is_empty:
        return {}
    styles = list(p.probabilities)
    values = np.array([p.probabilities[style] for style in styles], dtype=float)
    if np.any(values <= 0):
        bad = styles[int(np.argmax(values <= 0))]
        raise ProbabilityDomainError(
            f"Week {p.week}: probability of style '{bad}' is not positive"
        )
    logs = np.log(values)
    if Centering(centering) is Centering.GEOMETRIC:
        responses = logs - logs.mean()
    else:
        responses = logs - np.log(values.mean())
    return dict(zip(styles, responses.tolist(), strict=True))


def choice_responses(
    panel: SubcategoryPanel,
    smoothing: SmoothingPolicy | None = None,
    centering: Centering = Centering.GEOMETRIC,
    weeks: range | None = None,
) -> ResponseTable:
    """Probabilities and log-centered responses of every week at once.

    Args:
        panel: Source panel
        smoothing: Zero-sale policy
        centering: Log-centering mode
        weeks: Weeks to use; defaults to every week of the panel

    Returns:
        The response table, including the weeks skipped for lack of sales
    """
    smoothing = smoothing or SmoothingPolicy()
    weeks = panel.weeks if weeks is None else weeks
    live = panel.live
    live = live.loc[live["week"].isin(list(weeks)), ["style_id", "week", "sales_qty"]]

    if smoothing.kind == "laplace":
        rows = live.assign(weight=live["sales_qty"].astype(float) + smoothing.alpha)
    else:
        rows = live[live["sales_qty"] > 0].assign(weight=lambda df: df["sales_qty"].astype(float))

    by_week = rows.groupby("week")
    p = rows["weight"] / by_week["weight"].transform("sum")
    logs = np.log(p)
    if Centering(centering) is Centering.GEOMETRIC:
        response = logs - logs.groupby(rows["week"]).transform("mean")
    else:
        response = logs - np.log(p.groupby(rows["week"]).transform("mean"))

    frame = pd.DataFrame(
        {
            "style_id": rows["style_id"],
            "week": rows["week"],
            "p": p,
            "response": response,
        }
    ).reset_index(drop=True)

    covered = set(frame["week"].unique().tolist())
    skipped = tuple(week for week in weeks if week not in covered)
    if skipped:
        logger.warning(
            "Subcategory %s: weeks %s have no included styles and are skipped",
            panel.subcategory_id,
            list(skipped),
        )
    return ResponseTable(
        frame=frame,
        skipped_weeks=skipped,
        smoothing=smoothing,
        centering=Centering(centering),
    )


# ---------------------------------------------------------------------------
# Design matrix and least squares
# ---------------------------------------------------------------------------


def build_design_matrix(
    responses: ResponseTable,
    feature_panel: FeaturePanel,
    subcategory_id: str = "",
) -> DesignSystem:
    """Assemble the ``[I | F]`` system from responses and centered features.

    Rows are the included (style, week) pairs ordered by week then style;
    columns are one indicator per style (sorted by style_id) then the K centered
    features. Styles that have features in the response weeks but no row (all
    their weeks dropped) are recorded as excluded.
    """
    frame = responses.frame.sort_values(["week", "style_id"], kind="mergesort")
    keys = pd.MultiIndex.from_arrays(
        [frame["style_id"].to_numpy(), frame["week"].to_numpy()],
        names=["style_id", "week"],
    )
    features = feature_panel.centered_matrix(keys)

    style_ids = tuple(sorted(frame["style_id"].unique().tolist()))
    column_of = {style: column for column, style in enumerate(style_ids)}
    style_index = np.fromiter(
        (column_of[style] for style in frame["style_id"]), dtype=np.int64, count=len(frame)
    )

    weeks = set(frame["week"].unique().tolist()) | set(responses.skipped_weeks)
    candidates = feature_panel.entries.index
    in_weeks = candidates.get_level_values("week").isin(list(weeks))
    candidate_styles = set(candidates.get_level_values("style_id")[in_weeks])
    excluded = tuple(sorted(candidate_styles - set(style_ids)))
    if excluded:
        logger.warning(
            "Subcategory %s: %d styles have no regression rows and get no effect",
            subcategory_id,
            len(excluded),
        )

    return DesignSystem(
        rows=keys,
        style_ids=style_ids,
        style_index=style_index,
        features=features,
        response=frame["response"].to_numpy(dtype=float),
        feature_names=feature_panel.feature_names,
        excluded_styles=excluded,
        skipped_weeks=responses.skipped_weeks,
        subcategory_id=subcategory_id,
        smoothing=responses.smoothing,
        centering=responses.centering,
    )


def fit_least_squares(
    system: DesignSystem,
    config: ChoiceModelConfig | None = None,
) -> FittedChoiceModel:
    """Minimum-norm least-squares fit of style effects and coefficients.

    Up to ``config.solver_threshold`` styles the indicator block is eliminated
    by the within-style transformation, the reduced K-column problem is solved
    by SVD, and the solution is projected off the null space of ``[I | F]`` so
    that it is the minimum-norm solution even when the system is rank
    deficient. Above the threshold LSQR runs on the sparse matrix from zero.

    Args:
        system: The design system
        config: Solver settings

    Returns:
        The fitted model with residuals and diagnostics

    Raises:
        EmptyDesignError: If the system has no rows
    """
    config = config or ChoiceModelConfig()
    if system.n_rows == 0:
        raise EmptyDesignError(f"Subcategory {system.subcategory_id}: no regression rows")

    reduced = _WithinReduction(system)
    warnings = list(reduced.rank_warnings())

    if system.n_styles <= config.solver_threshold:
        gamma, beta = reduced.minimum_norm_solution()
        solver = "within"
    else:
        result = lsqr(
            system.matrix,
            system.response,
            atol=config.lsqr_tol,
            btol=config.lsqr_tol,
            conlim=0.0,
            iter_lim=config.lsqr_iter_limit,
        )
        solution, stop, iterations = result[0], result[1], result[2]
        gamma, beta = solution[: system.n_styles], solution[system.n_styles :]
        solver = "lsqr"
        logger.info(
            "Subcategory %s: LSQR stopped with code %d after %d iterations",
            system.subcategory_id,
            stop,
            iterations,
        )
        if stop == 7:
            warnings.append(f"LSQR reached the iteration limit ({iterations}) before converging")

    for warning in warnings:
        logger.warning("Subcategory %s: %s", system.subcategory_id, warning)

    return assemble_model(
        system,
        gamma,
        beta,
        rank=reduced.rank,
        condition=reduced.condition,
        solver=solver,
        rank_warnings=tuple(warnings),
    )


def assemble_model(
    system: DesignSystem,
    gamma: np.ndarray,
    beta: np.ndarray,
    *,
    rank: int,
    condition: float,
    solver: str,
    rank_warnings: tuple[str, ...] = (),
    model_kind: ModelKind = "style_effects",
    intercept: float | None = None,
    columns: int | None = None,
) -> FittedChoiceModel:
    """Wrap a solution vector into a :class:`FittedChoiceModel` with diagnostics."""
    gamma = np.asarray(gamma, dtype=float)
    beta = np.asarray(beta, dtype=float)
    fitted = gamma[system.style_index] + system.features @ beta
    residuals = system.response - fitted
    rss = float(residuals @ residuals)
    centered = system.response - system.response.mean()
    tss = float(centered @ centered)
    if tss > 0:
        r2 = 1.0 - rss / tss
    else:
        r2 = 1.0 if rss <= 1e-24 else 0.0

    diagnostics = FitDiagnostics(
        rows=system.n_rows,
        columns=columns if columns is not None else system.n_styles + system.n_features,
        rank=rank,
        r2=r2,
        rmse=float(np.sqrt(rss / system.n_rows)),
        rss=rss,
        condition=condition,
        rank_warnings=rank_warnings,
        solver=solver,
        gauge_mean=float(gamma.mean()) if len(gamma) else 0.0,
        excluded_styles=system.excluded_styles,
        skipped_weeks=system.skipped_weeks,
    )
    logger.info(
        "Subcategory %s: %s fit on %d rows, R2=%.4f, RMSE=%.4f",
        system.subcategory_id,
        model_kind,
        diagnostics.rows,
        diagnostics.r2,
        diagnostics.rmse,
    )
    return FittedChoiceModel(
        subcategory_id=system.subcategory_id,
        gamma=dict(zip(system.style_ids, gamma.tolist(), strict=True)),
        beta=tuple(beta.tolist()),
        feature_names=system.feature_names,
        residuals=pd.Series(residuals, index=system.rows, name="residual"),
        diagnostics=diagnostics,
        smoothing=system.smoothing,
        centering=system.centering,
        model_kind=model_kind,
        intercept=intercept,
    )


class _WithinReduction:
    """Within-style elimination of the indicator block.

    Subtracting each style's row mean from features and response leaves a
    K-column problem for beta; the style effects follow from the style means.
    The reduced block's singular values give the rank and null space of the
    full system.
    """

    def __init__(self, system: DesignSystem):
        self.system = system
        n_styles = system.n_styles
        index = system.style_index
        self.counts = np.bincount(index, minlength=n_styles).astype(float)
        safe = np.maximum(self.counts, 1.0)
        self.response_means = np.bincount(index, system.response, minlength=n_styles) / safe
        k = system.n_features
        self.feature_means = np.zeros((n_styles, k))
        for column in range(k):
            self.feature_means[:, column] = (
                np.bincount(index, system.features[:, column], minlength=n_styles) / safe
            )
        self.features = system.features - self.feature_means[index]
        self.response = system.response - self.response_means[index]

        if k:
            triangular = np.linalg.qr(self.features, mode="r")
            _, singular, vt = np.linalg.svd(triangular, full_matrices=True)
            tolerance = np.finfo(float).eps * max(self.features.shape) * (
                singular[0] if len(singular) else 0.0
            )
            self.feature_rank = int(np.sum(singular > tolerance))
            self.singular = singular[: self.feature_rank]
            self.null_basis = vt[self.feature_rank :].T
        else:
            self.feature_rank = 0
            self.singular = np.empty(0)
            self.null_basis = np.empty((0, 0))

    @property
    def empty_styles(self) -> int:
        return int(np.sum(self.counts == 0))

    @property
    def rank(self) -> int:
        return self.system.n_styles - self.empty_styles + self.feature_rank

    @property
    def condition(self) -> float:
        populated = self.counts[self.counts > 0]
        indicator = float(np.sqrt(populated.max() / populated.min())) if len(populated) else 1.0
        if len(self.singular):
            return max(indicator, float(self.singular[0] / self.singular[-1]))
        return indicator

    def rank_warnings(self) -> list[str]:
        warnings = []
        k = self.system.n_features
        if self.feature_rank < k:
            warnings.append(
                f"Feature block has rank {self.feature_rank} < {k} after removing style "
                "effects; the minimum-norm solution is returned"
            )
        if self.empty_styles:
            warnings.append(f"{self.empty_styles} style columns have no rows; their effect is 0")
        return warnings

    def minimum_norm_solution(self) -> tuple[np.ndarray, np.ndarray]:
        k = self.system.n_features
        if k:
            beta, *_ = np.linalg.lstsq(self.features, self.response, rcond=None)
        else:
            beta = np.empty(0)
        gamma = self.response_means - self.feature_means @ beta

        if self.null_basis.size:
            # (gamma, beta) + (-M v, v) fits equally well for every v in the null space
            null = np.vstack([-self.feature_means @ self.null_basis, self.null_basis])
            solution = np.concatenate([gamma, beta])
            coefficients, *_ = np.linalg.lstsq(null, solution, rcond=None)
            solution = solution - null @ coefficients
            gamma, beta = solution[: self.system.n_styles], solution[self.system.n_styles :]
        return gamma, beta


def fit_choice_model(
    panel: SubcategoryPanel,
    feature_panel: FeaturePanel,
    config: ChoiceModelConfig | None = None,
    weeks: range | None = None,
) -> FittedChoiceModel:
    """Responses, design and least squares for one subcategory in one call."""
    config = config or ChoiceModelConfig()
    responses = choice_responses(
        panel,
        SmoothingPolicy.from_config(config),
        Centering(config.centering),
        weeks,
    )
    weeks = panel.weeks if weeks is None else weeks
    system = build_design_matrix(responses, feature_panel, panel.subcategory_id)
    model = fit_least_squares(system, config)
    return replace(model, fitted_weeks=(weeks[0], weeks[-1]))


def style_quotients(model: FittedChoiceModel) -> StyleQuotientTable:
    """Style Quotients ``exp(gamma)`` and their min-max normalization.

    When every raw value is equal (including the single-style case) the
    normalized values are all 0.5.
    """
    styles = sorted(model.gamma)
    gamma = np.array([model.gamma[style] for style in styles], dtype=float)
    raw = np.exp(gamma)
    if len(raw) == 0:
        return StyleQuotientTable(raw_sq={}, normalized_sq={}, gamma={})
    low, high = raw.min(), raw.max()
    if high > low:
        normalized = (raw - low) / (high - low)
    else:
        normalized = np.full(len(raw), 0.5)
    return StyleQuotientTable(
        raw_sq=dict(zip(styles, raw.tolist(), strict=True)),
        normalized_sq=dict(zip(styles, normalized.tolist(), strict=True)),
        gamma=dict(zip(styles, gamma.tolist(), strict=True)),
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def model_to_json(model: FittedChoiceModel) -> str:
    """Serialize a model; floats keep full round-trip precision."""
    diagnostics = asdict(model.diagnostics)
    document = {
        "subcategory_id": model.subcategory_id,
        "model_kind": model.model_kind,
        "feature_names": list(model.feature_names),
        "beta": list(model.beta),
        "gamma": {style: model.gamma[style] for style in sorted(model.gamma)},
        "intercept": model.intercept,
        "fitted_weeks": list(model.fitted_weeks) if model.fitted_weeks else None,
        "smoothing_policy": {"kind": model.smoothing.kind, "alpha": model.smoothing.alpha},
        "centering": model.centering.value,
        "diagnostics": {
            **diagnostics,
            "rank_warnings": list(diagnostics["rank_warnings"]),
            "excluded_styles": list(diagnostics["excluded_styles"]),
            "skipped_weeks": list(diagnostics["skipped_weeks"]),
        },
    }
    return json.dumps(document, indent=2)


def model_from_json(text: str) -> FittedChoiceModel:
    """Rebuild a model from :func:`model_to_json` output (without residuals)."""
    document = json.loads(text)
    diagnostics = dict(document["diagnostics"])
    for key in ("rank_warnings", "excluded_styles", "skipped_weeks"):
        diagnostics[key] = tuple(diagnostics.get(key, ()))
    smoothing = document["smoothing_policy"]
    fitted_weeks = document.get("fitted_weeks")
    return FittedChoiceModel(
        subcategory_id=document["subcategory_id"],
        gamma={str(style): float(value) for style, value in document["gamma"].items()},
        beta=tuple(float(value) for value in document["beta"]),
        feature_names=tuple(document["feature_names"]),
        residuals=pd.Series(dtype=float, name="residual"),
        diagnostics=FitDiagnostics(**diagnostics),
        smoothing=SmoothingPolicy(smoothing["kind"], float(smoothing["alpha"])),
        centering=Centering(document["centering"]),
        model_kind=document.get("model_kind", "style_effects"),
        intercept=document.get("intercept"),
        fitted_weeks=tuple(fitted_weeks) if fitted_weeks else None,
    )


def save_model(model: FittedChoiceModel, path: str | Path) -> None:
    Path(path).write_text(model_to_json(model) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> FittedChoiceModel:
    return model_from_json(Path(path).read_text(encoding="utf-8"))
