"""Synthetic sales panels with known appeal and lever coefficients.

Panels are drawn from the MNL itself: every week, customers choose among the
live styles with probabilities ``softmax(gamma_i + beta . centered_f_it + e_it)``.
The features are computed by :mod:`stylequotient.features` on the generated
merchandising data, so the generator and the estimator share one definition
of every feature.

Appeal is drawn independently per style by default. With
``SynthConfig.antithetic`` it is drawn in pairs ``(gamma, 2 mu - gamma)`` whose
members share a liveness schedule, so the mean appeal of the live assortment
stays at ``mu`` every week even though styles enter and leave at staggered
times. Independent draws let that mean drift with the assortment, which is
confounded with ``style_age`` (see ``recovery_experiment``).
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import stats

from .choice_model import fit_choice_model
from .config import ChoiceModelConfig, SynthConfig
from .features import FEATURE_NAMES, build_feature_panel
from .panel import COLUMNS, SubcategoryPanel, write_panel

__all__ = [
    "GroundTruth",
    "RecoveryReport",
    "generate",
    "mnl_probabilities",
    "recovery_experiment",
    "recovery_from_panel",
    "write_synthetic",
]

logger = logging.getLogger(__name__)

SUBCATEGORY_ID = "synthetic"


@dataclass(frozen=True)
class GroundTruth:
    """The parameters a synthetic panel was drawn from."""

    gamma_star: dict[str, float]
    beta_star: tuple[float, ...]
    feature_names: tuple[str, ...] = FEATURE_NAMES
    config: SynthConfig | None = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "gamma_star": dict(sorted(self.gamma_star.items())),
                "beta_star": list(self.beta_star),
                "feature_names": list(self.feature_names),
                "config": self.config.model_dump(mode="json") if self.config else {},
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        document = json.loads(text)
        config = document.get("config") or None
        return cls(
            gamma_star={str(k): float(v) for k, v in document["gamma_star"].items()},
            beta_star=tuple(float(v) for v in document["beta_star"]),
            feature_names=tuple(document.get("feature_names", FEATURE_NAMES)),
            config=SynthConfig(**config) if config else None,
        )


@dataclass(frozen=True)
class RecoveryReport:
    """How well a fit recovered the ground truth.

    Attributes:
        pearson_gamma: Correlation of fitted and true effects after gauge alignment
        rank_corr_gamma: Spearman correlation of the same
        beta_rel_error: Largest relative coefficient error
        beta_rel_errors: Relative error of every coefficient
        n_styles_compared: Styles with both a fitted and a true effect
    """

    pearson_gamma: float
    rank_corr_gamma: float
    beta_rel_error: float
    beta_rel_errors: tuple[float, ...]
    n_styles_compared: int


def _style_ids(n: int) -> list[str]:
    width = max(4, len(str(n - 1)))
    return [f"S{i:0{width}d}" for i in range(n)]


def _draw_appeal(config: SynthConfig, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Appeal per style and the liveness group each style belongs to."""
    n = config.n_styles
    if not config.antithetic:
        gamma = rng.normal(config.gamma_mu, config.gamma_sigma, size=n)
        return gamma, np.arange(n)
    pairs = n // 2
    draws = rng.normal(0.0, config.gamma_sigma, size=pairs)
    gamma = np.full(n, config.gamma_mu)
    gamma[0 : 2 * pairs : 2] = config.gamma_mu + draws
    gamma[1 : 2 * pairs : 2] = config.gamma_mu - draws
    return gamma, np.arange(n) // 2


def _draw_liveness(
    config: SynthConfig, groups: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Live flags (groups x weeks) and each group's entry week index."""
    weeks = config.n_weeks
    latest_entry = max(1, weeks - 4)
    initial = rng.random(groups) < config.initial_live_fraction
    initial[0] = True
    entry = np.where(initial, 0, rng.integers(1, latest_entry + 1, size=groups))

    exits = rng.random(groups) < config.exit_fraction
    exit_week = np.full(groups, weeks)
    for g in np.flatnonzero(exits):
        low = entry[g] + 4
        if low < weeks:
            exit_week[g] = rng.integers(low, weeks)

    index = np.arange(weeks)
    live = (index[None, :] >= entry[:, None]) & (index[None, :] < exit_week[:, None])
    gaps = rng.random((groups, weeks)) < config.gap_probability
    gaps[np.arange(groups), entry] = False
    return live & ~gaps, entry


def _walk(rng: np.random.Generator, sigma: float, shape: tuple[int, int]) -> np.ndarray:
    return np.cumsum(rng.normal(0.0, sigma, size=shape), axis=1)


def _merchandising(
    config: SynthConfig,
    gamma: np.ndarray,
    live: np.ndarray,
    rng: np.random.Generator,
) -> dict[str, np.ndarray]:
    """Draw list prices, selling prices and views (styles x weeks)."""
    n, weeks = live.shape

    log_price = (
        config.price_log_mean
        + config.price_appeal_loading * (gamma - config.gamma_mu)
        + rng.normal(0.0, config.price_log_sigma, size=n)
    )
    revisions = (rng.random((n, weeks)) < config.price_revision_probability) * rng.normal(
        0.0, config.price_revision_sigma, size=(n, weeks)
    )
    revisions[:, 0] = 0.0
    list_price = np.round(np.exp(log_price[:, None] + np.cumsum(revisions, axis=1)), 2)

    first_live = np.argmax(live, axis=1)
    last_live = weeks - 1 - np.argmax(live[:, ::-1], axis=1)
    discounted = rng.random(n) < config.discount_fraction_of_styles
    switch = np.where(
        discounted,
        first_live + np.floor(rng.random(n) * (last_live - first_live + 1)).astype(int),
        weeks,
    )
    on = np.arange(weeks)[None, :] >= switch[:, None]
    base = rng.uniform(config.discount_low, config.discount_high, size=n)
    drift = _walk(rng, config.discount_walk_sigma, (n, weeks))
    discount = np.clip(base[:, None] + drift, 0.0, None)
    promoted = on & (rng.random((n, weeks)) < config.promotion_probability)
    discount = np.where(promoted, discount + config.promotion_depth, discount)
    discount = np.where(on, np.minimum(discount, config.max_discount), 0.0)
    selling_price = np.clip(np.round(list_price * (1.0 - discount), 2), 0.01, list_price)

    log_views = rng.normal(config.views_log_mean, config.views_log_sigma, size=n)
    views = np.exp(log_views[:, None] + _walk(rng, config.views_walk_sigma, (n, weeks)))
    views = np.where(promoted, views * config.promotion_views_multiplier, views)
    views = np.rint(views).astype(np.int64)

    return {
        "list_price": list_price,
        "selling_price": selling_price,
        "list_views": views,
    }


def _first_discount(live: np.ndarray, selling: np.ndarray, listed: np.ndarray) -> np.ndarray:
    on_discount = live & (selling < listed)
    first = np.zeros_like(on_discount)
    has = on_discount.any(axis=1)
    first[np.flatnonzero(has), np.argmax(on_discount[has], axis=1)] = True
    return first


def mnl_probabilities(
    panel: SubcategoryPanel,
    gamma: dict[str, float],
    beta: tuple[float, ...] | np.ndarray,
    noise: pd.Series | None = None,
) -> pd.Series:
    """Choice probabilities of every live style-week under given parameters.

    Args:
        panel: Panel supplying liveness and levers
        gamma: Effect of every live style
        beta: Coefficients in feature order
        noise: Optional utility shocks indexed like the result

    Returns:
        Probabilities indexed by ``(style_id, week)``; each week sums to 1
    """
    features = build_feature_panel(panel)
    keys = features.entries.index
    utility = keys.get_level_values("style_id").map(gamma).to_numpy(dtype=float)
    utility = utility + features.centered_matrix(keys) @ np.asarray(beta, dtype=float)
    utility = pd.Series(utility, index=keys)
    if noise is not None:
        utility = utility + noise.reindex(keys).fillna(0.0)
    weeks = keys.get_level_values("week")
    shifted = utility - utility.groupby(weeks).transform("max")
    weights = np.exp(shifted)
    return weights / weights.groupby(weeks).transform("sum")


def generate(config: SynthConfig | None = None) -> tuple[SubcategoryPanel, GroundTruth]:
    """Draw a synthetic panel and the parameters behind it.

    Fully determined by ``config.rng_seed``.

    Returns:
        The validated panel and its ground truth
    """
    config = config or SynthConfig()
    rng = np.random.default_rng(config.rng_seed)
    n, weeks = config.n_styles, config.n_weeks
    styles = _style_ids(n)

    gamma, group = _draw_appeal(config, rng)
    group_live, group_entry = _draw_liveness(config, int(group.max()) + 1, rng)
    live = group_live[group]
    brands = np.array([f"B{b:02d}" for b in rng.integers(0, config.n_brands, size=n)])
    levers = _merchandising(config, gamma, live, rng)

    days = np.where(live, 7, 0)
    late_entry = group_entry[group] > 0
    partial = rng.integers(1, 8, size=n)
    rows = np.flatnonzero(late_entry)
    days[rows, group_entry[group][rows]] = np.where(
        live[rows, group_entry[group][rows]], partial[rows], 0
    )

    listed = levers["list_price"]
    selling = np.where(live, levers["selling_price"], listed)
    views = np.where(live, levers["list_views"], 0)
    first_discount = _first_discount(live, selling, listed)

    week_grid = np.broadcast_to(np.arange(1, weeks + 1), (n, weeks))
    frame = pd.DataFrame(
        {
            "style_id": np.repeat(styles, weeks),
            "subcategory_id": SUBCATEGORY_ID,
            "brand_id": np.repeat(brands, weeks),
            "week": week_grid.ravel(),
            "sales_qty": 0,
            "is_live": live.ravel(),
            "days_live_in_week": days.ravel(),
            "list_price": listed.ravel(),
            "selling_price": selling.ravel(),
            "list_views": views.ravel(),
            "first_time_on_discount": first_discount.ravel(),
        }
    )
    draft = SubcategoryPanel.from_frame(frame, week_range=(1, weeks))

    gamma_star = dict(zip(styles, gamma.tolist(), strict=True))
    features = build_feature_panel(draft)
    shocks = pd.Series(
        rng.normal(0.0, config.noise_sigma, size=len(features)) if config.noise_sigma > 0 else 0.0,
        index=features.entries.index,
    )
    probability = mnl_probabilities(draft, gamma_star, config.true_beta, shocks)

    sales = pd.Series(0, index=probability.index, dtype="int64")
    week_level = probability.index.get_level_values("week")
    for week in range(1, weeks + 1):
        mask = week_level == week
        if not mask.any():
            continue
        p = probability[mask].to_numpy()
        sales[mask] = rng.multinomial(config.customers_per_week, p / p.sum())

    keyed = frame.set_index(["style_id", "week"])
    keyed.loc[sales.index, "sales_qty"] = sales.to_numpy()
    frame = keyed.reset_index()

    impressions = np.rint(frame["list_views"].to_numpy() * config.impressions_per_view).astype(
        np.int64
    )
    ctr = 1.0 / (1.0 + np.exp(-(config.ctr_intercept + config.ctr_slope * np.repeat(gamma, weeks))))
    frame["impressions"] = impressions
    frame["clicks"] = rng.binomial(impressions, ctr)
    frame = frame.loc[:, list(COLUMNS)]

    panel = SubcategoryPanel.from_frame(frame, week_range=(1, weeks))
    logger.info(
        "Generated %d styles x %d weeks (%d live style-weeks, seed %d)",
        n,
        weeks,
        int(live.sum()),
        config.rng_seed,
    )
    truth = GroundTruth(gamma_star=gamma_star, beta_star=tuple(config.true_beta), config=config)
    return panel, truth


def write_synthetic(
    out_dir: str | Path, panel: SubcategoryPanel, truth: GroundTruth
) -> tuple[Path, Path]:
    """Write ``panel.csv`` and ``ground_truth.json`` into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    panel_path = out_dir / "panel.csv"
    truth_path = out_dir / "ground_truth.json"
    write_panel(panel, panel_path)
    truth_path.write_text(truth.to_json() + "\n", encoding="utf-8")
    return panel_path, truth_path


def recovery_from_panel(
    panel: SubcategoryPanel,
    truth: GroundTruth,
    choice_config: ChoiceModelConfig | None = None,
) -> RecoveryReport:
    """Fit a panel and compare the estimates with its ground truth.

    Both effect vectors are centered on their mean over the compared styles
    before correlating, which removes the gauge shift.
    """
    model = fit_choice_model(panel, build_feature_panel(panel), choice_config)
    styles = sorted(set(model.gamma) & set(truth.gamma_star))
    fitted = np.array([model.gamma[style] for style in styles])
    true = np.array([truth.gamma_star[style] for style in styles])
    fitted = fitted - fitted.mean()
    true = true - true.mean()

    if len(styles) >= 2 and fitted.std() > 0 and true.std() > 0:
        pearson = float(stats.pearsonr(fitted, true)[0])
        spearman = float(stats.spearmanr(fitted, true)[0])
    else:
        pearson = spearman = float("nan")

    beta = np.asarray(model.beta, dtype=float)
    beta_star = np.asarray(truth.beta_star, dtype=float)
    scale = np.where(beta_star != 0, np.abs(beta_star), 1.0)
    errors = np.abs(beta - beta_star) / scale

    report = RecoveryReport(
        pearson_gamma=pearson,
        rank_corr_gamma=spearman,
        beta_rel_error=float(errors.max()),
        beta_rel_errors=tuple(errors.tolist()),
        n_styles_compared=len(styles),
    )
    logger.info(
        "Recovery over %d styles: pearson %.4f, spearman %.4f, max beta error %.2f%%",
        report.n_styles_compared,
        report.pearson_gamma,
        report.rank_corr_gamma,
        100 * report.beta_rel_error,
    )
    return report


def recovery_experiment(
    config: SynthConfig | None = None,
    choice_config: ChoiceModelConfig | None = None,
) -> RecoveryReport:
    """Generate a panel from ``config`` and measure how well it is recovered.

    Centered ``style_age`` is a style constant minus the mean entry week of the
    live assortment, so its coefficient is identified only through week-to-week
    changes in that assortment. With independent appeal draws the live set's
    mean appeal moves with the same changes and biases the ``style_age``
    coefficient; antithetic draws hold it fixed.
    """
    panel, truth = generate(config)
    return recovery_from_panel(panel, truth, choice_config)
