"""Small panel builders shared by the tests."""

from pathlib import Path

import pandas as pd

from stylequotient.panel import COLUMNS, SubcategoryPanel

HEADER = ",".join(COLUMNS)


def obs(
    style: str,
    week: int,
    sales: int = 0,
    *,
    live: bool = True,
    brand: str = "B1",
    sub: str = "SUB",
    days: int | None = None,
    list_price: float = 100.0,
    selling_price: float | None = None,
    views: int = 100,
    first_discount: bool = False,
    clicks: int | None = None,
    impressions: int | None = None,
) -> dict:
    """One observation row in the canonical schema."""
    return {
        "style_id": style,
        "subcategory_id": sub,
        "brand_id": brand,
        "week": week,
        "sales_qty": sales if live else 0,
        "is_live": live,
        "days_live_in_week": (7 if live else 0) if days is None else days,
        "list_price": list_price,
        "selling_price": list_price if selling_price is None else selling_price,
        "list_views": views if live else 0,
        "first_time_on_discount": first_discount,
        "clicks": clicks,
        "impressions": impressions,
    }


def make_panel(rows: list[dict], week_range: tuple[int, int] | None = None) -> SubcategoryPanel:
    frame = pd.DataFrame(rows, columns=list(COLUMNS))
    frame["clicks"] = frame["clicks"].astype("Int64")
    frame["impressions"] = frame["impressions"].astype("Int64")
    return SubcategoryPanel.from_frame(frame, week_range=week_range)


def constant_panel(sales: dict[str, list[int]], **kwargs) -> SubcategoryPanel:
    """Every style live every week with the given weekly sales and identical levers."""
    rows = [
        obs(style, week, units, **kwargs)
        for style, series in sales.items()
        for week, units in enumerate(series, start=1)
    ]
    return make_panel(rows)


def csv_line(row: dict) -> str:
    def cell(value):
        if value is None:
            return ""
        if isinstance(value, bool):
            return "1" if value else "0"
        return str(value)

    return ",".join(cell(row[column]) for column in COLUMNS)


def write_csv(path: Path, rows: list[dict], header: str = HEADER) -> Path:
    path.write_text("\n".join([header, *(csv_line(row) for row in rows)]) + "\n")
    return path
