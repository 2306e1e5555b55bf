"""Weekly sales panels.

This module defines the canonical on-disk schema of a style × week sales panel,
loads and validates it, and provides the panel-level operations the rest of the
package builds on: liveness filtering, train/test splitting and assortment
lookup.

A loaded panel is dense: every style has exactly one row for every week of the
panel's range. Weeks missing from the input are synthesized as non-live rows,
which makes the live assortment well defined for every week.
"""

import logging
import re
from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd

from .errors import (
    ConfigError,
    DuplicateKeyError,
    InvariantViolationError,
    MalformedRowError,
    MissingColumnError,
    PanelError,
    WeekRangeError,
)

__all__ = [
    "COLUMNS",
    "Assortment",
    "StyleWeekObservation",
    "SubcategoryPanel",
    "assortment_at",
    "filter_min_weeks",
    "load_panel",
    "load_panels",
    "split_train_test",
    "write_panel",
    "write_panels",
]

logger = logging.getLogger(__name__)

WeekFormat = Literal["integer", "iso"]

COLUMNS = (
    "style_id",
    "subcategory_id",
    "brand_id",
    "week",
    "sales_qty",
    "is_live",
    "days_live_in_week",
    "list_price",
    "selling_price",
    "list_views",
    "first_time_on_discount",
    "clicks",
    "impressions",
)
OPTIONAL_COLUMNS = ("clicks", "impressions")
_ID_COLUMNS = ("style_id", "subcategory_id", "brand_id")
_INT_COLUMNS = ("sales_qty", "days_live_in_week", "list_views")
_BOOL_COLUMNS = ("is_live", "first_time_on_discount")
_PRICE_COLUMNS = ("list_price", "selling_price")

_INT_PATTERN = r"[+-]?\d+"
_ISO_WEEK = re.compile(r"^(\d{4})-W(\d{2})$")


@dataclass(frozen=True)
class StyleWeekObservation:
    """One style × week row of a sales panel."""

    style_id: str
    subcategory_id: str
    brand_id: str
    week: int
    sales_qty: int
    is_live: bool
    days_live_in_week: int
    list_price: float
    selling_price: float
    list_views: int
    first_time_on_discount: bool
    clicks: int | None = None
    impressions: int | None = None


@dataclass(frozen=True)
class Assortment:
    """The set of styles live in one week."""

    week: int
    live_styles: frozenset[str]


@dataclass(frozen=True, eq=False)
class SubcategoryPanel:
    """Validated, dense panel of one subcategory.

    The underlying frame holds one row per (style_id, week) for every week in
    ``week_range``, sorted by week then style_id, with the canonical column
    dtypes. It must be treated as read-only; every operation returns a new
    panel.

    Attributes:
        subcategory_id: Identifier shared by all rows
        frame: The observation table
        week_range: Inclusive ``(first_week, last_week)``
        universal_styles: Every style_id present in ``frame``
    """

    subcategory_id: str
    frame: pd.DataFrame
    week_range: tuple[int, int]
    universal_styles: frozenset[str]

    @classmethod
    def from_frame(
        cls,
        frame: pd.DataFrame,
        week_range: tuple[int, int] | None = None,
    ) -> "SubcategoryPanel":
        """Validate an in-memory observation table and build a panel.

        The frame must carry every column of :data:`COLUMNS` (clicks and
        impressions may be missing or null), a single subcategory and integer
        weeks. Missing (style, week) cells are synthesized as non-live rows.

        Args:
            frame: Observation table in the canonical schema
            week_range: Range to densify over; defaults to the frame's min/max

        Returns:
            The validated panel

        Raises:
            PanelError: If the frame holds several subcategories
            DuplicateKeyError: If a (style_id, week) key repeats
            InvariantViolationError: If a row breaks a domain rule
        """
        typed = _coerce_dtypes(frame)
        subcategories = typed["subcategory_id"].unique()
        if len(subcategories) != 1:
            raise PanelError(
                f"Expected exactly one subcategory, found {len(subcategories)}"
            )
        _check_duplicates(typed, typed["week"], lines=None)
        _check_invariants(typed, lines=None)
        if week_range is None:
            week_range = (int(typed["week"].min()), int(typed["week"].max()))
        return _densify(str(subcategories[0]), typed, week_range)

    @property
    def weeks(self) -> range:
        """All weeks of the panel in ascending order."""
        first, last = self.week_range
        return range(first, last + 1)

    @property
    def live(self) -> pd.DataFrame:
        """The live rows of the panel."""
        return self.frame[self.frame["is_live"]]

    @property
    def has_ctr(self) -> bool:
        """Whether clicks and impressions are recorded for any row."""
        return bool(self.frame["impressions"].notna().any())

    @property
    def observations(self) -> Iterator[StyleWeekObservation]:
        """Iterate the rows as :class:`StyleWeekObservation` records."""
        for row in self.frame.itertuples(index=False):
            values = row._asdict()
            for name in OPTIONAL_COLUMNS:
                values[name] = None if pd.isna(values[name]) else int(values[name])
            yield StyleWeekObservation(**values)

    def __len__(self) -> int:
        return len(self.frame)

    def brands(self) -> dict[str, str]:
        """Map every style to its brand."""
        firsts = self.frame.drop_duplicates("style_id")
        return dict(zip(firsts["style_id"], firsts["brand_id"], strict=True))

    def live_weeks(self, style_id: str) -> list[int]:
        """Weeks in which ``style_id`` is live, ascending."""
        rows = self.live
        return rows.loc[rows["style_id"] == style_id, "week"].tolist()

    def observation(self, style_id: str, week: int) -> StyleWeekObservation:
        """Look up the row of one style in one week.

        Raises:
            WeekRangeError: If the style has no row for ``week``
        """
        match = self.frame[(self.frame["style_id"] == style_id) & (self.frame["week"] == week)]
        if match.empty:
            raise WeekRangeError(f"No observation for style '{style_id}' in week {week}")
        return next(SubcategoryPanel._wrap(self.subcategory_id, match).observations)

    def restrict_weeks(self, first: int, last: int) -> "SubcategoryPanel":
        """Return the sub-panel covering weeks ``first..last`` inclusive."""
        mask = self.frame["week"].between(first, last)
        return SubcategoryPanel._wrap(self.subcategory_id, self.frame[mask], (first, last))

    def equals(self, other: "SubcategoryPanel") -> bool:
        """Field-for-field equality of two panels."""
        return (
            self.subcategory_id == other.subcategory_id
            and self.week_range == other.week_range
            and self.universal_styles == other.universal_styles
            and self.frame.equals(other.frame)
        )

    @staticmethod
    def _wrap(
        subcategory_id: str,
        frame: pd.DataFrame,
        week_range: tuple[int, int] | None = None,
    ) -> "SubcategoryPanel":
        frame = frame.reset_index(drop=True)
        if week_range is None:
            week_range = (int(frame["week"].min()), int(frame["week"].max()))
        return SubcategoryPanel(
            subcategory_id=subcategory_id,
            frame=frame,
            week_range=week_range,
            universal_styles=frozenset(frame["style_id"]),
        )


def load_panels(
    path: str | Path,
    week_format: WeekFormat = "integer",
) -> dict[str, SubcategoryPanel]:
    """Load a panel CSV holding one or more subcategories.

    Weeks are re-indexed to consecutive integers starting at 1 against the
    file-wide earliest week, so panels of different subcategories align.

    Args:
        path: CSV file in the canonical schema
        week_format: ``"integer"`` week numbers or ISO ``YYYY-Www`` tokens

    Returns:
        One validated panel per subcategory_id, keyed and ordered by id

    Raises:
        MissingColumnError: If a required header column is absent
        MalformedRowError: If a cell cannot be parsed (line and column named)
        DuplicateKeyError: If a (style_id, week) key repeats (all lines named)
        InvariantViolationError: If a row breaks a domain rule
    """
    path = Path(path)
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.ParserError as exc:
        raise PanelError(f"Cannot parse {path}: {exc}") from exc
    except pd.errors.EmptyDataError as exc:
        raise PanelError(f"{path} is empty") from exc

    raw.columns = [str(column).strip() for column in raw.columns]
    for column in COLUMNS:
        if column not in raw.columns and column not in OPTIONAL_COLUMNS:
            raise MissingColumnError(column)

    lines = pd.Series(np.arange(len(raw)) + 2, index=raw.index)
    frame = _parse(raw, lines, week_format)
    _check_duplicates(frame, raw["week"].str.strip(), lines)
    _check_invariants(frame, lines)

    if frame.empty:
        logger.warning("Panel file %s holds no rows", path)
        return {}

    offsets = frame["week"] - frame["week"].min()
    frame["week"] = (offsets + 1).astype("int64")
    week_range = (1, int(frame["week"].max()))

    panels = {
        str(subcategory_id): _densify(str(subcategory_id), group, week_range)
        for subcategory_id, group in frame.groupby("subcategory_id", sort=True)
    }
    logger.info(
        "Loaded %d rows from %s: %d subcategories, weeks 1..%d",
        len(frame),
        path,
        len(panels),
        week_range[1],
    )
    return panels


def load_panel(
    path: str | Path,
    week_format: WeekFormat = "integer",
    subcategory_id: str | None = None,
) -> SubcategoryPanel:
    """Load a single-subcategory panel.

    Args:
        path: CSV file in the canonical schema
        week_format: ``"integer"`` or ``"iso"``
        subcategory_id: Which subcategory to return when the file holds several

    Returns:
        The validated panel

    Raises:
        PanelError: If the file is empty, holds several subcategories and none
            was chosen, or the chosen one is absent; plus every error of
            :func:`load_panels`
    """
    panels = load_panels(path, week_format)
    if subcategory_id is not None:
        if subcategory_id not in panels:
            raise PanelError(f"Subcategory '{subcategory_id}' not found in {path}")
        return panels[subcategory_id]
    if len(panels) != 1:
        raise PanelError(
            f"{path} holds {len(panels)} subcategories; choose one with subcategory_id"
        )
    return next(iter(panels.values()))


def write_panel(panel: SubcategoryPanel, path: str | Path) -> None:
    """Serialize a panel in the canonical CSV schema."""
    write_panels([panel], path)


def write_panels(panels: Iterable[SubcategoryPanel], path: str | Path) -> None:
    """Serialize several panels into one canonical CSV file.

    Booleans are written as ``0``/``1``, missing clicks/impressions as empty
    cells and prices with round-trip precision.
    """
    frames = [panel.frame for panel in panels]
    out = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=COLUMNS)
    out = out.loc[:, list(COLUMNS)].copy()
    for column in _BOOL_COLUMNS:
        out[column] = out[column].astype("int64")
    out.to_csv(path, index=False, lineterminator="\n")


def filter_min_weeks(panel: SubcategoryPanel, min_weeks: int) -> SubcategoryPanel:
    """Keep only styles live in at least ``min_weeks`` weeks.

    Args:
        panel: Panel to filter
        min_weeks: Minimum number of live weeks, at least 1

    Returns:
        The filtered panel (possibly empty); week_range is unchanged

    Raises:
        ConfigError: If ``min_weeks < 1``
    """
    if min_weeks < 1:
        raise ConfigError(f"min_weeks must be >= 1, got {min_weeks}")
    counts = panel.live.groupby("style_id").size()
    keep = counts.index[counts >= min_weeks]
    frame = panel.frame[panel.frame["style_id"].isin(keep)]
    dropped = len(panel.universal_styles) - len(keep)
    if dropped:
        logger.info(
            "Subcategory %s: dropped %d styles live fewer than %d weeks",
            panel.subcategory_id,
            dropped,
            min_weeks,
        )
    return SubcategoryPanel._wrap(panel.subcategory_id, frame, panel.week_range)


def split_train_test(
    panel: SubcategoryPanel,
    train_weeks: int,
) -> tuple[SubcategoryPanel, SubcategoryPanel]:
    """Split a panel into leading training weeks and the remaining test weeks.

    Week numbers are preserved, so a 26-week panel split at 22 yields a test
    panel over weeks 23..26.

    Raises:
        WeekRangeError: Unless ``first_week <= train_weeks < last_week``
    """
    first, last = panel.week_range
    if not first <= train_weeks < last:
        raise WeekRangeError(
            f"train_weeks must lie in [{first}, {last - 1}] for a panel over "
            f"weeks {first}..{last}, got {train_weeks}"
        )
    return panel.restrict_weeks(first, train_weeks), panel.restrict_weeks(train_weeks + 1, last)


def assortment_at(panel: SubcategoryPanel, week: int) -> Assortment:
    """Return the live assortment A_t of ``week``.

    Raises:
        WeekRangeError: If ``week`` lies outside the panel's range
    """
    first, last = panel.week_range
    if not first <= week <= last:
        raise WeekRangeError(f"Week {week} outside panel range {first}..{last}")
    rows = panel.live
    return Assortment(week=week, live_styles=frozenset(rows.loc[rows["week"] == week, "style_id"]))


# ---------------------------------------------------------------------------
# Parsing and validation helpers
# ---------------------------------------------------------------------------


def _parse(raw: pd.DataFrame, lines: pd.Series, week_format: WeekFormat) -> pd.DataFrame:
    columns: dict[str, pd.Series] = {}
    for column in _ID_COLUMNS:
        values = raw[column].str.strip()
        _raise_first(values == "", raw[column], lines, column)
        columns[column] = values.astype(object)

    columns["week"] = _parse_week(raw["week"], lines, week_format)

    for column in _INT_COLUMNS:
        columns[column] = _parse_int(raw[column], lines, column)

    for column in _BOOL_COLUMNS:
        values = raw[column].str.strip()
        _raise_first(~values.isin(["0", "1"]), raw[column], lines, column)
        columns[column] = values == "1"

    for column in _PRICE_COLUMNS:
        values = pd.to_numeric(raw[column].str.strip(), errors="coerce")
        bad = values.isna() | ~np.isfinite(values.fillna(0.0))
        _raise_first(bad, raw[column], lines, column)
        columns[column] = values.astype("float64")

    for column in OPTIONAL_COLUMNS:
        if column not in raw.columns:
            columns[column] = pd.Series(pd.NA, index=raw.index, dtype="Int64")
            continue
        text = raw[column].str.strip()
        present = text != ""
        _raise_first(present & ~text.str.fullmatch(_INT_PATTERN), raw[column], lines, column)
        parsed = pd.Series(pd.NA, index=raw.index, dtype="Int64")
        parsed[present] = text[present].astype("int64")
        columns[column] = parsed

    return pd.DataFrame(columns, columns=list(COLUMNS))


def _parse_int(values: pd.Series, lines: pd.Series, column: str) -> pd.Series:
    text = values.str.strip()
    _raise_first(~text.str.fullmatch(_INT_PATTERN), values, lines, column)
    return text.astype("int64")


def _parse_week(values: pd.Series, lines: pd.Series, week_format: WeekFormat) -> pd.Series:
    text = values.str.strip()
    if week_format == "integer":
        return _parse_int(values, lines, "week")

    ordinals = []
    for index, token in text.items():
        match = _ISO_WEEK.match(token)
        try:
            if match is None:
                raise ValueError(token)
            monday = date.fromisocalendar(int(match.group(1)), int(match.group(2)), 1)
        except ValueError:
            raise MalformedRowError(int(lines[index]), "week", values[index]) from None
        ordinals.append(monday.toordinal() // 7)
    return pd.Series(ordinals, index=values.index, dtype="int64")


def _raise_first(bad: pd.Series, values: pd.Series, lines: pd.Series, column: str) -> None:
    if bad.any():
        index = bad.idxmax()
        raise MalformedRowError(int(lines[index]), column, values[index])


def _coerce_dtypes(frame: pd.DataFrame) -> pd.DataFrame:
    for column in COLUMNS:
        if column not in frame.columns and column not in OPTIONAL_COLUMNS:
            raise MissingColumnError(column)
    typed = pd.DataFrame(index=frame.index)
    for column in _ID_COLUMNS:
        typed[column] = frame[column].astype(str).astype(object)
    for column in ("week", *_INT_COLUMNS):
        typed[column] = frame[column].astype("int64")
    for column in _BOOL_COLUMNS:
        typed[column] = frame[column].astype(bool)
    for column in _PRICE_COLUMNS:
        typed[column] = frame[column].astype("float64")
    for column in OPTIONAL_COLUMNS:
        if column in frame.columns:
            typed[column] = frame[column].astype("Int64")
        else:
            typed[column] = pd.Series(pd.NA, index=frame.index, dtype="Int64")
    return typed.reset_index(drop=True)


def _check_duplicates(frame: pd.DataFrame, week_labels: pd.Series, lines: pd.Series | None) -> None:
    duplicated = frame.duplicated(["style_id", "week"], keep=False)
    if not duplicated.any():
        return
    first = duplicated.idxmax()
    key = (frame["style_id"] == frame.at[first, "style_id"]) & (
        frame["week"] == frame.at[first, "week"]
    )
    where = [int(line) for line in lines[key]] if lines is not None else []
    raise DuplicateKeyError(frame.at[first, "style_id"], week_labels.iloc[first], where)


def _check_invariants(frame: pd.DataFrame, lines: pd.Series | None) -> None:
    live = frame["is_live"]
    clicks = frame["clicks"]
    impressions = frame["impressions"]
    rules = [
        (frame["sales_qty"] < 0, "sales_qty must be non-negative"),
        (frame["list_views"] < 0, "list_views must be non-negative"),
        (~frame["days_live_in_week"].between(0, 7), "days_live_in_week must lie in 0..7"),
        (frame["list_price"] <= 0, "list_price must be positive"),
        (frame["selling_price"] <= 0, "selling_price must be positive"),
        (frame["selling_price"] > frame["list_price"], "selling_price must not exceed list_price"),
        (~live & (frame["sales_qty"] != 0), "a non-live row must have sales_qty = 0"),
        (
            ~live & (frame["days_live_in_week"] != 0),
            "a non-live row must have days_live_in_week = 0",
        ),
        ((clicks < 0).fillna(False), "clicks must be non-negative"),
        ((impressions < 0).fillna(False), "impressions must be non-negative"),
        ((clicks > impressions).fillna(False), "clicks must not exceed impressions"),
    ]
    for violated, rule in rules:
        violated = violated.astype(bool)
        if violated.any():
            index = violated.idxmax()
            line = int(lines[index]) if lines is not None else None
            raise InvariantViolationError(line, f"{rule} (style_id={frame.at[index, 'style_id']})")

    for column in ("brand_id", "subcategory_id"):
        per_style = frame.groupby("style_id")[column].nunique()
        if (per_style > 1).any():
            style_id = per_style.index[(per_style > 1).argmax()]
            index = frame.index[frame["style_id"] == style_id][-1]
            line = int(lines[index]) if lines is not None else None
            raise InvariantViolationError(
                line, f"style_id={style_id} maps to more than one {column}"
            )


def _densify(
    subcategory_id: str,
    frame: pd.DataFrame,
    week_range: tuple[int, int],
) -> SubcategoryPanel:
    """Fill every missing (style, week) cell with a non-live row."""
    first, last = week_range
    styles = np.sort(frame["style_id"].unique())
    grid = pd.MultiIndex.from_product(
        [range(first, last + 1), styles], names=["week", "style_id"]
    )
    indexed = frame.set_index(["week", "style_id"])
    dense = indexed.reindex(grid)
    missing = dense["is_live"].isna()

    if missing.any():
        style_info = frame.drop_duplicates("style_id").set_index("style_id")
        style_level = dense.index.get_level_values("style_id")
        dense["subcategory_id"] = subcategory_id
        dense["brand_id"] = style_info.loc[style_level, "brand_id"].to_numpy()
        prices = dense["list_price"].groupby(level="style_id").ffill()
        prices = prices.groupby(level="style_id").bfill()
        dense["list_price"] = prices
        dense.loc[missing, "selling_price"] = prices[missing]
        for column in ("sales_qty", "days_live_in_week", "list_views"):
            dense.loc[missing, column] = 0
        dense.loc[missing, "is_live"] = False
        dense.loc[missing, "first_time_on_discount"] = False
        if frame["impressions"].notna().any():
            for column in OPTIONAL_COLUMNS:
                dense.loc[missing, column] = 0

    dense = dense.reset_index()
    dense = dense.loc[:, list(COLUMNS)]
    dense = _coerce_dtypes(dense)
    dense = dense.sort_values(["week", "style_id"], kind="mergesort").reset_index(drop=True)
    if missing.any():
        logger.debug(
            "Subcategory %s: synthesized %d non-live rows", subcategory_id, int(missing.sum())
        )
    return SubcategoryPanel._wrap(subcategory_id, dense, week_range)

