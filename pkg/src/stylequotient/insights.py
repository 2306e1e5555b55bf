"""Decile analysis and operational reports on Style Quotients.

Everything here is a read-only aggregation of a panel and a
:class:`~stylequotient.choice_model.StyleQuotientTable`. SQ values are always
the min-max normalized ones, so reports of different subcategories are on the
same ``[0, 1]`` scale.
"""

import logging
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import stats

from .choice_model import StyleQuotientTable
from .config import ReportConfig
from .errors import ConfigError
from .panel import SubcategoryPanel

__all__ = [
    "BrandSummary",
    "DecileSummary",
    "InsightReport",
    "SQDistribution",
    "StyleClassification",
    "assortment_sq_by_week",
    "brand_mean_sq",
    "build_insights",
    "classify_styles",
    "decile_bins",
    "decile_performance",
    "promotion_driven_styles",
    "report_windows",
    "sq_distribution_stats",
]

logger = logging.getLogger(__name__)

N_BINS = 10


@dataclass(frozen=True)
class DecileSummary:
    """Aggregates of one SQ bin; bin 1 holds the lowest SQ values.

    ``mean_ctr`` is ``None`` when the panel records no impressions.
    """

    bin: int
    style_count: int
    mean_normalized_sq: float
    mean_discount_fraction: float
    mean_ros: float
    mean_ctr: float | None
    future_sale_rate: float

    @property
    def label(self) -> str:
        return f"D{self.bin}"


@dataclass(frozen=True)
class BrandSummary:
    brand_id: str
    style_count: int
    mean_normalized_sq: float


@dataclass(frozen=True)
class SQDistribution:
    """Summary statistics of normalized SQ.

    Attributes:
        mean: Mean normalized SQ
        std: Population standard deviation
        skewness: Population skewness, 0.0 when ``std`` is 0
        histogram: Fraction of styles in each equal-width bin over ``[0, 1]``
        bin_edges: The ``len(histogram) + 1`` bin edges
        share_above: Fraction of styles with normalized SQ above ``threshold``
        threshold: The share threshold
    """

    mean: float
    std: float
    skewness: float
    histogram: tuple[float, ...]
    bin_edges: tuple[float, ...]
    share_above: float
    threshold: float


@dataclass(frozen=True)
class StyleClassification:
    """Top sellers and liquidation candidates by SQ quantile.

    The thresholds are ``None`` when there are no styles to rank.
    """

    top_sellers: frozenset[str]
    liquidation_candidates: frozenset[str]
    top_threshold: float | None
    bottom_threshold: float | None


@dataclass(frozen=True)
class InsightReport:
    """All reports of one subcategory.

    Attributes:
        n_bins: Number of SQ bins actually used; below 10 when the
            subcategory has fewer than 10 styles
        analysis_weeks: First and last week of the decile analysis window
        forward_weeks: First and last week of the forward sales window, or
            ``None`` when that window is empty
    """

    subcategory_id: str
    deciles: tuple[DecileSummary, ...]
    distribution: SQDistribution
    brands: tuple[BrandSummary, ...]
    classification: StyleClassification
    assortment_sq: dict[int, float]
    promotion_driven: tuple[str, ...]
    n_bins: int = N_BINS
    analysis_weeks: tuple[int, int] | None = None
    forward_weeks: tuple[int, int] | None = None


def _rank_bins(values: Mapping[str, float], n_bins: int) -> dict[str, int]:
    """Sort ascending (ties by id) and cut into near-equal bins, larger ones first."""
    order = sorted(values, key=lambda style: (values[style], style))
    if not order:
        return {}
    bins = min(n_bins, len(order))
    assignment: dict[str, int] = {}
    for number, chunk in enumerate(np.array_split(np.array(order, dtype=object), bins), start=1):
        for style in chunk:
            assignment[str(style)] = number
    return assignment


def decile_bins(sq: StyleQuotientTable, n_bins: int = N_BINS) -> dict[str, int]:
    """Assign each style to an SQ bin ``1..n_bins`` (1 = lowest SQ).

    Styles are ordered by normalized SQ with style_id breaking ties, and split
    into bins whose sizes differ by at most one; the remainder goes to the
    lowest bins. With fewer styles than bins, every style gets its own bin.
    """
    if len(sq) < n_bins:
        logger.warning(
            "Only %d styles; using %d bins instead of %d", len(sq), len(sq), n_bins
        )
    return _rank_bins(sq.normalized_sq, n_bins)


def sq_distribution_stats(
    sq: StyleQuotientTable,
    threshold: float = 0.4,
    bins: int = 20,
) -> SQDistribution:
    """Mean, spread, skew, histogram and high-SQ share of normalized SQ."""
    values = np.array(list(sq.normalized_sq.values()), dtype=float)
    if len(values) < 2:
        logger.warning("SQ distribution over %d styles is degenerate", len(values))
    if len(values) == 0:
        edges = np.linspace(0.0, 1.0, bins + 1)
        return SQDistribution(
            0.0, 0.0, 0.0, tuple([0.0] * bins), tuple(edges.tolist()), 0.0, threshold
        )

    std = float(values.std())
    skewness = float(stats.skew(values, bias=True)) if std > 0 else 0.0
    counts, edges = np.histogram(values, bins=bins, range=(0.0, 1.0))
    return SQDistribution(
        mean=float(values.mean()),
        std=std,
        skewness=skewness,
        histogram=tuple((counts / len(values)).tolist()),
        bin_edges=tuple(edges.tolist()),
        share_above=float(np.mean(values > threshold)),
        threshold=threshold,
    )


def _style_activity(panel: SubcategoryPanel, weeks: range) -> pd.DataFrame:
    """Per-style discount, ROS and CTR sums over ``weeks`` (live rows only)."""
    live = panel.live
    live = live[live["week"].isin(list(weeks))]
    discount = (live["list_price"] - live["selling_price"]) / live["list_price"]
    rows = pd.DataFrame(
        {
            "style_id": live["style_id"],
            "discount": discount,
            "sales": live["sales_qty"].astype(float),
            "days": live["days_live_in_week"].astype(float),
            "clicks": live["clicks"].astype("float64"),
            "impressions": live["impressions"].astype("float64"),
        }
    )
    grouped = rows.groupby("style_id")
    return pd.DataFrame(
        {
            "discount": grouped["discount"].mean(),
            "sales": grouped["sales"].sum(),
            "days": grouped["days"].sum(),
            "clicks": grouped["clicks"].sum(min_count=1),
            "impressions": grouped["impressions"].sum(min_count=1),
        }
    )


def report_windows(
    panel: SubcategoryPanel, forward_weeks: int, cutoff: int | None = None
) -> tuple[range, range]:
    """Analysis weeks ``first..cutoff`` and forward weeks after the cutoff.

    The cutoff defaults to ``forward_weeks`` weeks before the panel's last week.

    Raises:
        ConfigError: If the analysis window is empty or the forward window runs
            past the panel
    """
    first, last = panel.week_range
    if cutoff is None:
        if forward_weeks >= last - first + 1:
            raise ConfigError(
                f"forward_weeks={forward_weeks} leaves no analysis weeks in a "
                f"{last - first + 1}-week panel"
            )
        cutoff = last - forward_weeks
    if not first <= cutoff <= last:
        raise ConfigError(f"Cutoff week {cutoff} is outside the panel weeks {first}..{last}")
    if cutoff + forward_weeks > last:
        raise ConfigError(
            f"A {forward_weeks}-week forward window after week {cutoff} runs past the "
            f"panel's last week {last}"
        )
    return range(first, cutoff + 1), range(cutoff + 1, cutoff + forward_weeks + 1)


def decile_performance(
    panel: SubcategoryPanel,
    sq: StyleQuotientTable,
    forward_weeks: int = 4,
    n_bins: int = N_BINS,
    cutoff: int | None = None,
) -> list[DecileSummary]:
    """Merchandising and sales behaviour of each SQ bin.

    Discount, ROS and CTR are measured over the analysis weeks up to
    ``cutoff``; ``future_sale_rate`` is the fraction of a bin's styles with at
    least one sale in the ``forward_weeks`` weeks after it. Pass the last week
    the SQ model was fitted on as ``cutoff`` to keep the forward window out of
    sample. Discount is averaged per style first, then across the bin; ROS per
    style is units over days live (0 when never live); CTR is pooled over the
    bin.

    Raises:
        ConfigError: If the windows do not fit in the panel (see
            :func:`report_windows`)
    """
    analysis_weeks, forward_weeks_range = report_windows(panel, forward_weeks, cutoff)
    analysis = _style_activity(panel, analysis_weeks)
    forward = panel.live[panel.live["week"].isin(list(forward_weeks_range))]
    sold_ahead = set(forward.loc[forward["sales_qty"] > 0, "style_id"])

    assignment = decile_bins(sq, n_bins)
    styles = pd.DataFrame(
        {"bin": pd.Series(assignment, dtype="int64"), "sq": pd.Series(sq.normalized_sq)}
    ).dropna(subset=["bin"])
    styles = styles.join(analysis, how="left")
    days = styles["days"].fillna(0.0).to_numpy()
    sales = styles["sales"].fillna(0.0).to_numpy()
    styles["ros"] = np.divide(sales, days, out=np.zeros_like(sales), where=days > 0)
    styles["sold_ahead"] = styles.index.isin(sold_ahead)

    summaries = []
    for number, group in styles.groupby("bin", sort=True):
        impressions = group["impressions"].sum(min_count=1)
        ctr = None
        if panel.has_ctr and pd.notna(impressions) and impressions > 0:
            ctr = float(group["clicks"].sum() / impressions)
        discount = group["discount"].mean()
        summaries.append(
            DecileSummary(
                bin=int(number),
                style_count=len(group),
                mean_normalized_sq=float(group["sq"].mean()),
                mean_discount_fraction=float(discount) if pd.notna(discount) else 0.0,
                mean_ros=float(group["ros"].mean()),
                mean_ctr=ctr,
                future_sale_rate=float(group["sold_ahead"].mean()),
            )
        )
    return summaries


def brand_mean_sq(panel: SubcategoryPanel, sq: StyleQuotientTable) -> list[BrandSummary]:
    """Style count and mean normalized SQ per brand, highest mean first."""
    brands = panel.brands()
    frame = pd.DataFrame(
        [(brands[style], value) for style, value in sq.normalized_sq.items() if style in brands],
        columns=["brand_id", "sq"],
    )
    grouped = frame.groupby("brand_id")["sq"].agg(["size", "mean"]).reset_index()
    grouped = grouped.sort_values(
        ["mean", "brand_id"], ascending=[False, True], kind="mergesort"
    )
    return [
        BrandSummary(str(row.brand_id), int(row.size), float(row.mean))
        for row in grouped.itertuples(index=False)
    ]


def classify_styles(
    sq: StyleQuotientTable,
    top_quantile: float = 0.9,
    bottom_quantile: float = 0.1,
) -> StyleClassification:
    """Split off top sellers (above the top quantile) and liquidation candidates.

    Both thresholds are strict, so with all-equal SQ both sets are empty.

    Raises:
        ConfigError: Unless ``0 < bottom_quantile < top_quantile < 1``
    """
    if not 0 < bottom_quantile < top_quantile < 1:
        raise ConfigError(
            f"Quantiles must satisfy 0 < bottom < top < 1, got bottom={bottom_quantile}, "
            f"top={top_quantile}"
        )
    styles = sorted(sq.normalized_sq)
    values = np.array([sq.normalized_sq[style] for style in styles], dtype=float)
    if len(values) == 0:
        return StyleClassification(frozenset(), frozenset(), None, None)
    top = float(np.quantile(values, top_quantile))
    bottom = float(np.quantile(values, bottom_quantile))
    return StyleClassification(
        top_sellers=frozenset(s for s, v in zip(styles, values, strict=True) if v > top),
        liquidation_candidates=frozenset(
            s for s, v in zip(styles, values, strict=True) if v < bottom
        ),
        top_threshold=top,
        bottom_threshold=bottom,
    )


def assortment_sq_by_week(panel: SubcategoryPanel, sq: StyleQuotientTable) -> dict[int, float]:
    """Mean normalized SQ of each week's live assortment.

    Live styles without an SQ are ignored; weeks with none are omitted.
    """
    live = panel.live[["style_id", "week"]]
    values = live["style_id"].map(sq.normalized_sq)
    means = values.groupby(live["week"]).mean().dropna()
    return {int(week): float(value) for week, value in means.items()}


def promotion_driven_styles(
    panel: SubcategoryPanel,
    sq: StyleQuotientTable,
    window: range | None = None,
    gap: int = 3,
) -> list[str]:
    """Styles selling far above their appeal.

    A style qualifies when its ROS decile over ``window`` (all weeks by default)
    exceeds its SQ decile by at least ``gap``: its rate of sale is carried by
    merchandising rather than intrinsic demand.
    """
    window = panel.weeks if window is None else window
    activity = _style_activity(panel, window)
    days = activity["days"].to_numpy()
    sales = activity["sales"].to_numpy()
    rates = np.divide(sales, days, out=np.zeros_like(sales), where=days > 0)
    ros = {
        style: float(rate)
        for style, rate in zip(activity.index, rates, strict=True)
        if style in sq.normalized_sq
    }
    ros_bins = _rank_bins(ros, N_BINS)
    sq_bins = _rank_bins({style: sq.normalized_sq[style] for style in ros}, N_BINS)
    return sorted(style for style in ros if ros_bins[style] - sq_bins[style] >= gap)


def build_insights(
    panel: SubcategoryPanel,
    sq: StyleQuotientTable,
    config: ReportConfig | None = None,
    cutoff: int | None = None,
) -> InsightReport:
    """Run every report for one subcategory.

    ``cutoff`` is the last analysis week (see :func:`decile_performance`);
    promotion-driven styles are measured over the same analysis weeks.
    """
    config = config or ReportConfig()
    analysis_weeks, forward_weeks = report_windows(panel, config.forward_weeks, cutoff)
    deciles = decile_performance(panel, sq, config.forward_weeks, cutoff=analysis_weeks[-1])
    promotion = promotion_driven_styles(panel, sq, analysis_weeks, gap=config.promotion_gap)
    report = InsightReport(
        subcategory_id=panel.subcategory_id,
        deciles=tuple(deciles),
        distribution=sq_distribution_stats(sq, config.share_threshold, config.histogram_bins),
        brands=tuple(brand_mean_sq(panel, sq)),
        classification=classify_styles(sq, config.top_quantile, config.bottom_quantile),
        assortment_sq=assortment_sq_by_week(panel, sq),
        promotion_driven=tuple(promotion),
        n_bins=min(N_BINS, len(sq)),
        analysis_weeks=(analysis_weeks[0], analysis_weeks[-1]),
        forward_weeks=(forward_weeks[0], forward_weeks[-1]) if forward_weeks else None,
    )
    if report.n_bins < N_BINS:
        logger.warning(
            "Subcategory %s: only %d SQ bins; decile tables are not comparable across "
            "subcategories",
            panel.subcategory_id,
            report.n_bins,
        )
    logger.info(
        "Subcategory %s: %d top sellers, %d liquidation candidates, %d promotion-driven styles",
        panel.subcategory_id,
        len(report.classification.top_sellers),
        len(report.classification.liquidation_candidates),
        len(report.promotion_driven),
    )
    return report
