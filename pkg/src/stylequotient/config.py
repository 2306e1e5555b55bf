"""Configuration models.

All tunables are pydantic models so that invalid values are rejected before any
computation starts. Models are frozen; derive variants with ``model_copy``.
"""

import math
from typing import Literal, TypeVar

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from .errors import ConfigError

__all__ = [
    "BacktestConfig",
    "ChoiceModelConfig",
    "ReportConfig",
    "SynthConfig",
    "build_config",
]

M = TypeVar("M", bound=BaseModel)


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class ChoiceModelConfig(_Frozen):
    """Settings for the log-centered MNL regression.

    Attributes:
        smoothing: ``"drop"`` excludes zero-sale live rows, ``"laplace"`` adds
            ``alpha`` to every live style's sales before computing shares
        alpha: Laplace pseudo-count
        centering: Mean used for the per-week log-centering of shares
        solver_threshold: Style count above which the iterative sparse solver
            replaces the factorization path
        lsqr_tol: ``atol``/``btol`` handed to ``scipy.sparse.linalg.lsqr``
        lsqr_iter_limit: Iteration cap for ``lsqr`` (``None`` keeps scipy's)
    """

    smoothing: Literal["drop", "laplace"] = "drop"
    alpha: float = Field(default=0.5, gt=0)
    centering: Literal["geometric", "arithmetic"] = "geometric"
    solver_threshold: int = Field(default=20_000, ge=1)
    lsqr_tol: float = Field(default=1e-12, gt=0)
    lsqr_iter_limit: int | None = Field(default=None, ge=1)


class BacktestConfig(_Frozen):
    """Settings for the train/test backtest.

    Defaults follow the evaluation protocol: 22 training weeks, styles listed
    for at least 4 weeks, ROS baselines over the last 4 training weeks.
    """

    train_weeks: int = Field(default=22, ge=1)
    min_live_weeks: int = Field(default=4, ge=1)
    ros_window: int = Field(default=4, ge=1)
    choice: ChoiceModelConfig = ChoiceModelConfig()
    workers: int = Field(default=4, ge=1)


class ReportConfig(_Frozen):
    """Settings for the SQ insight reports."""

    top_quantile: float = Field(default=0.9, gt=0, lt=1)
    bottom_quantile: float = Field(default=0.1, gt=0, lt=1)
    forward_weeks: int = Field(default=4, ge=1)
    share_threshold: float = Field(default=0.4, ge=0, le=1)
    histogram_bins: int = Field(default=20, ge=1)
    promotion_gap: int = Field(default=3, ge=1, le=9)

    @model_validator(mode="after")
    def _ordered_quantiles(self) -> "ReportConfig":
        if not self.bottom_quantile < self.top_quantile:
            raise ValueError(
                f"bottom_quantile ({self.bottom_quantile}) must be below "
                f"top_quantile ({self.top_quantile})"
            )
        return self


def build_config(model: type[M], **values) -> M:
    """Construct a configuration model, translating validation failures.

    Args:
        model: The pydantic model class to instantiate
        **values: Field values; ``None`` values are dropped so defaults apply

    Returns:
        The validated model instance

    Raises:
        ConfigError: If pydantic rejects any value
    """
    try:
        return model(**{key: value for key, value in values.items() if value is not None})
    except ValidationError as exc:
        raise ConfigError(f"Invalid {model.__name__}: {exc}") from exc


class SynthConfig(_Frozen):
    """Parameters of the synthetic panel generator.

    Appeal is drawn from ``normal(gamma_mu, gamma_sigma)``, independently per
    style unless ``antithetic`` pairs the draws; ``true_beta`` follows
    the feature order of :data:`stylequotient.features.FEATURE_NAMES`. The
    remaining fields drive the merchandising process the levers are drawn from.
    """

    n_styles: int = Field(default=200, ge=2)
    n_weeks: int = Field(default=26, ge=5)
    n_brands: int = Field(default=8, ge=1)
    gamma_mu: float = 0.0
    gamma_sigma: float = Field(default=1.0, ge=0)
    true_beta: tuple[float, ...] = (2.0, -0.5, 0.8, -0.08, 0.3, -0.05)
    customers_per_week: int = Field(default=50_000, gt=0)
    noise_sigma: float = Field(default=0.1, ge=0)
    rng_seed: int = 0
    antithetic: bool = False

    # liveness
    initial_live_fraction: float = Field(default=0.6, ge=0, le=1)
    exit_fraction: float = Field(default=0.3, ge=0, le=1)
    gap_probability: float = Field(default=0.02, ge=0, lt=1)

    # discounts
    discount_fraction_of_styles: float = Field(default=0.8, ge=0, le=1)
    discount_low: float = Field(default=0.05, ge=0, lt=1)
    discount_high: float = Field(default=0.35, ge=0, lt=1)
    discount_walk_sigma: float = Field(default=0.06, ge=0)
    max_discount: float = Field(default=0.8, gt=0, lt=1)
    promotion_probability: float = Field(default=0.2, ge=0, le=1)
    promotion_depth: float = Field(default=0.3, ge=0, lt=1)
    promotion_views_multiplier: float = Field(default=2.5, ge=1)

    # list views
    views_log_mean: float = 6.0
    views_log_sigma: float = Field(default=0.5, ge=0)
    views_walk_sigma: float = Field(default=0.3, ge=0)

    # list prices
    price_log_mean: float = math.log(800.0)
    price_log_sigma: float = Field(default=0.1, ge=0)
    price_appeal_loading: float = 0.3
    price_revision_probability: float = Field(default=0.15, ge=0, le=1)
    price_revision_sigma: float = Field(default=0.15, ge=0)

    # clicks
    impressions_per_view: float = Field(default=5.0, gt=0)
    ctr_intercept: float = -3.0
    ctr_slope: float = 0.5

    @field_validator("true_beta")
    @classmethod
    def _six_coefficients(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if len(value) != 6:
            raise ValueError(f"true_beta needs one coefficient per feature (6), got {len(value)}")
        return value

    @model_validator(mode="after")
    def _ordered_discounts(self) -> "SynthConfig":
        if not self.discount_low <= self.discount_high <= self.max_discount:
            raise ValueError("discount_low <= discount_high <= max_discount must hold")
        return self
