"""Time-varying merchandising features.

For every live (style, week) this module computes the K = 6 features that enter
the choice regression, their per-week means over the live assortment, and the
centered values ``f_ikt - mean_k(t)``. Features are causal: the deviation
features compare a week against the style's own history up to and including
that week, never against later weeks.

The per-point functions (:func:`discount_deviation`, :func:`style_age`, ...)
spell out each definition for a single style and week. :func:`build_feature_panel`
computes the same quantities for a whole panel at once.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import EstimationError, WeekRangeError
from .panel import StyleWeekObservation, SubcategoryPanel

__all__ = [
    "FEATURE_NAMES",
    "FeaturePanel",
    "FeatureVector",
    "brand_live_competition",
    "build_feature_panel",
    "discount_deviation",
    "discount_fraction",
    "list_views_deviation",
    "normalized_list_price",
    "style_age",
]

logger = logging.getLogger(__name__)

FEATURE_NAMES = (
    "discount_deviation",
    "normalized_list_price",
    "list_views_deviation",
    "style_age",
    "first_time_on_discount",
    "brand_live_competition",
)
CENTERED_NAMES = tuple(f"centered_{name}" for name in FEATURE_NAMES)


@dataclass(frozen=True)
class FeatureVector:
    """The six merchandising features of one live style-week."""

    discount_deviation: float
    normalized_list_price: float
    list_views_deviation: float
    style_age: float
    first_time_on_discount: float
    brand_live_competition: float

    def as_array(self) -> np.ndarray:
        """Values in :data:`FEATURE_NAMES` order."""
        return np.array([getattr(self, name) for name in FEATURE_NAMES], dtype=float)


@dataclass(frozen=True, eq=False)
class FeaturePanel:
    """Features of every live (style, week) of a panel.

    Attributes:
        entries: Frame indexed by ``(style_id, week)`` with the raw feature
            columns followed by their ``centered_`` counterparts
        per_week_means: Frame indexed by week, one column per feature
        feature_names: The K feature names, in column order
    """

    entries: pd.DataFrame
    per_week_means: pd.DataFrame
    feature_names: tuple[str, ...] = FEATURE_NAMES

    def __len__(self) -> int:
        return len(self.entries)

    def vector(self, style_id: str, week: int) -> FeatureVector:
        """Raw features of one live style-week.

        Raises:
            KeyError: If the style is not live in ``week``
        """
        row = self.entries.loc[(style_id, week)]
        return FeatureVector(**{name: float(row[name]) for name in FEATURE_NAMES})

    def centered(self, style_id: str, week: int) -> np.ndarray:
        """Centered feature vector of one live style-week."""
        return self.entries.loc[(style_id, week), list(CENTERED_NAMES)].to_numpy(dtype=float)

    def centered_matrix(self, keys: pd.MultiIndex) -> np.ndarray:
        """Stack the centered features of the given ``(style_id, week)`` rows.

        Args:
            keys: Rows to select, in the order the matrix should have

        Returns:
            Array of shape ``(len(keys), K)``

        Raises:
            EstimationError: If any requested row has no features (not live)
        """
        block = self.entries.reindex(keys)[list(CENTERED_NAMES)]
        if block.isna().to_numpy().any():
            missing = block.index[block.isna().any(axis=1)][0]
            raise EstimationError(f"No features for style-week {missing}; is it live?")
        return block.to_numpy(dtype=float)

    def weeks(self, weeks: range | list[int]) -> pd.DataFrame:
        """Entries of the given weeks, as a flat frame."""
        flat = self.entries.reset_index()
        return flat[flat["week"].isin(list(weeks))]

    def to_csv(self, path: str | Path) -> None:
        """Dump every live style-week's raw and centered features for audit."""
        flat = self.entries.reset_index()
        flat = flat.sort_values(["week", "style_id"], kind="mergesort")
        columns = ["style_id", "week", *FEATURE_NAMES, *CENTERED_NAMES]
        flat.to_csv(path, index=False, columns=columns, lineterminator="\n")


def discount_fraction(obs: StyleWeekObservation) -> float:
    """Discount as a fraction of list price, in ``[0, 1]``."""
    return (obs.list_price - obs.selling_price) / obs.list_price


def _history(panel: SubcategoryPanel, style_id: str, week: int) -> pd.DataFrame:
    rows = panel.live
    rows = rows[(rows["style_id"] == style_id) & (rows["week"] <= week)]
    if rows.empty or int(rows["week"].iloc[-1]) != week:
        raise WeekRangeError(f"Style '{style_id}' is not live in week {week}")
    return rows


def discount_deviation(panel: SubcategoryPanel, style_id: str, week: int) -> float:
    """Discount this week minus the style's mean discount over its live weeks so far."""
    rows = _history(panel, style_id, week)
    fractions = (rows["list_price"] - rows["selling_price"]) / rows["list_price"]
    return float(fractions.iloc[-1] - fractions.mean())


def normalized_list_price(panel: SubcategoryPanel, style_id: str, week: int) -> float:
    """List price relative to the mean list price of the week's live assortment."""
    _history(panel, style_id, week)
    rows = panel.live
    rows = rows[rows["week"] == week]
    own = rows.loc[rows["style_id"] == style_id, "list_price"].iloc[0]
    return float(own / rows["list_price"].mean())


def list_views_deviation(panel: SubcategoryPanel, style_id: str, week: int) -> float:
    """Relative deviation of list views from the style's expanding mean.

    ``(views - mean) / max(1, mean)`` where the mean runs over the style's live
    weeks up to and including ``week``.
    """
    rows = _history(panel, style_id, week)
    views = rows["list_views"].astype(float)
    mean = views.mean()
    return float((views.iloc[-1] - mean) / max(1.0, mean))


def style_age(panel: SubcategoryPanel, style_id: str, week: int) -> float:
    """Weeks since the style's first live week, counting gaps; 1 in that first week."""
    rows = _history(panel, style_id, week)
    return float(week - int(rows["week"].iloc[0]) + 1)


def brand_live_competition(panel: SubcategoryPanel, style_id: str, week: int) -> float:
    """Number of other live styles of the same brand in ``week``."""
    rows = _history(panel, style_id, week)
    brand = rows["brand_id"].iloc[-1]
    live = panel.live
    same = live[(live["week"] == week) & (live["brand_id"] == brand)]
    return float(len(same) - 1)


def build_feature_panel(panel: SubcategoryPanel) -> FeaturePanel:
    """Compute all features, their per-week means and centered values.

    Args:
        panel: A validated panel; deviations and ages use all of its weeks up
            to each row's week, so pass the full history when features of late
            weeks are needed

    Returns:
        The feature panel, entries ordered by style_id then week
    """
    live = panel.live.loc[
        :,
        [
            "style_id",
            "brand_id",
            "week",
            "list_price",
            "selling_price",
            "list_views",
            "first_time_on_discount",
        ],
    ]
    live = live.sort_values(["style_id", "week"], kind="mergesort").reset_index(drop=True)

    by_style = live.groupby("style_id", sort=False)
    seen = by_style.cumcount().to_numpy() + 1.0

    discount = (live["list_price"] - live["selling_price"]) / live["list_price"]
    discount_mean = discount.groupby(live["style_id"], sort=False).cumsum() / seen

    views = live["list_views"].astype(float)
    views_mean = views.groupby(live["style_id"], sort=False).cumsum() / seen

    week_price = live.groupby("week")["list_price"].transform("mean")
    brand_count = live.groupby(["week", "brand_id"])["style_id"].transform("size")
    first_week = by_style["week"].transform("min")

    features = pd.DataFrame(
        {
            "style_id": live["style_id"],
            "week": live["week"],
            "discount_deviation": discount - discount_mean,
            "normalized_list_price": live["list_price"] / week_price,
            "list_views_deviation": (views - views_mean) / np.maximum(1.0, views_mean),
            "style_age": (live["week"] - first_week + 1).astype(float),
            "first_time_on_discount": live["first_time_on_discount"].astype(float),
            "brand_live_competition": (brand_count - 1).astype(float),
        }
    )

    means = features.groupby("week")[list(FEATURE_NAMES)].mean()
    week_means = features.groupby("week")[list(FEATURE_NAMES)].transform("mean")
    for name, centered in zip(FEATURE_NAMES, CENTERED_NAMES, strict=True):
        features[centered] = features[name] - week_means[name]

    entries = features.set_index(["style_id", "week"])
    logger.debug(
        "Subcategory %s: built features for %d live style-weeks",
        panel.subcategory_id,
        len(entries),
    )
    return FeaturePanel(entries=entries, per_week_means=means)
