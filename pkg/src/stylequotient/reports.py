"""JSON and CSV emission for fits, backtests and insight reports.

Tables are laid out for external plotting and spreadsheets: backtest tables
have one row per week or subcategory plus an ``overall`` row, and one column
per model followed by the SQ model's improvements.
"""

import json
import logging
from dataclasses import asdict
from pathlib import Path

import pandas as pd

from .choice_model import FittedChoiceModel, StyleQuotientTable, save_model
from .features import FeaturePanel
from .forecast import BacktestResult, ForecastModel
from .insights import InsightReport

__all__ = [
    "IMPROVEMENT_COLUMNS",
    "MODEL_COLUMNS",
    "backtest_document",
    "backtest_table",
    "insights_document",
    "write_backtest",
    "write_fit",
    "write_insights",
]

logger = logging.getLogger(__name__)

MODEL_COLUMNS = tuple(model.label for model in ForecastModel)
IMPROVEMENT_COLUMNS = ("d_vs_b", "d_vs_c")


def _write_json(path: Path, document: object) -> None:
    path.write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")


def _write_csv(path: Path, frame: pd.DataFrame) -> None:
    frame.to_csv(path, index=False, lineterminator="\n")


def write_fit(
    out_dir: str | Path,
    model: FittedChoiceModel,
    sq: StyleQuotientTable,
    features: FeaturePanel | None = None,
) -> Path:
    """Write ``model.json``, ``sq.csv`` and optionally ``features.csv``.

    Returns:
        The directory written to
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_model(model, out_dir / "model.json")
    _write_csv(out_dir / "sq.csv", sq.to_frame())
    if features is not None:
        features.to_csv(out_dir / "features.csv")
    logger.info("Wrote fit of subcategory %s to %s", model.subcategory_id, out_dir)
    return out_dir


def backtest_table(result: BacktestResult, by: str = "week") -> pd.DataFrame:
    """wMAPE per week (``by="week"``) or per subcategory, plus an overall row.

    Columns are ``week`` or ``subcategory_id``, then the four model labels,
    then ``d_vs_b`` and ``d_vs_c`` in wMAPE points.
    """
    if by not in ("week", "subcategory_id"):
        raise ValueError(f"by must be 'week' or 'subcategory_id', got {by!r}")
    attribute = "wmape_by_week" if by == "week" else "wmape_by_subcategory"
    keys = sorted(getattr(result.reports[ForecastModel.SQ_MODEL], attribute))

    rows = []
    for key in [*keys, "overall"]:
        row: dict[str, object] = {by: key}
        for model in ForecastModel:
            report = result.reports[model]
            if key == "overall":
                row[model.label] = report.wmape_overall
            else:
                row[model.label] = getattr(report, attribute).get(key)
        sq = row[ForecastModel.SQ_MODEL.label]
        for column, baseline in zip(
            IMPROVEMENT_COLUMNS,
            (ForecastModel.NORMALIZED_ROS, ForecastModel.MEAN_INTERCEPT),
            strict=True,
        ):
            base = row[baseline.label]
            row[column] = None if base is None or sq is None else base - sq
        rows.append(row)
    return pd.DataFrame(rows, columns=[by, *MODEL_COLUMNS, *IMPROVEMENT_COLUMNS])


def backtest_document(result: BacktestResult) -> dict:
    """JSON-ready summary of a backtest."""
    return {
        "train_weeks": result.train_weeks,
        "subcategories": result.subcategories,
        "skipped_subcategories": list(result.skipped_subcategories),
        "wmape": {
            model.label: {
                "overall": report.wmape_overall,
                "by_week": {str(week): value for week, value in report.wmape_by_week.items()},
                "by_subcategory": dict(report.wmape_by_subcategory),
            }
            for model, report in result.reports.items()
        },
        "improvements": {
            name: {
                "overall": values["overall"],
                "by_week": {str(week): value for week, value in values["by_week"].items()},
                "by_subcategory": values["by_subcategory"],
            }
            for name, values in result.improvements.items()
        },
        "training_rss": {
            sub: {model.label: rss for model, rss in by_model.items()}
            for sub, by_model in result.training_rss().items()
        },
        "uncovered": {
            sub: {model.label: len(forecast.uncovered) for model, forecast in by_model.items()}
            for sub, by_model in sorted(result.forecasts.items())
        },
    }


def write_backtest(out_dir: str | Path, result: BacktestResult) -> list[Path]:
    """Write ``backtest.json`` and the per-subcategory and per-week CSV tables."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [
        out_dir / "backtest.json",
        out_dir / "backtest_by_subcategory.csv",
        out_dir / "backtest_by_week.csv",
    ]
    _write_json(paths[0], backtest_document(result))
    _write_csv(paths[1], backtest_table(result, by="subcategory_id"))
    _write_csv(paths[2], backtest_table(result, by="week"))
    logger.info("Wrote backtest reports to %s", out_dir)
    return paths


def insights_document(report: InsightReport) -> dict:
    """JSON-ready form of an insight report; style sets become sorted lists."""
    classification = report.classification
    return {
        "subcategory_id": report.subcategory_id,
        "n_bins": report.n_bins,
        "analysis_weeks": list(report.analysis_weeks) if report.analysis_weeks else None,
        "forward_weeks": list(report.forward_weeks) if report.forward_weeks else None,
        "deciles": [{"label": d.label, **asdict(d)} for d in report.deciles],
        "distribution": asdict(report.distribution),
        "brands": [asdict(brand) for brand in report.brands],
        "classification": {
            "top_threshold": classification.top_threshold,
            "bottom_threshold": classification.bottom_threshold,
            "top_sellers": sorted(classification.top_sellers),
            "liquidation_candidates": sorted(classification.liquidation_candidates),
        },
        "assortment_sq": {str(week): value for week, value in report.assortment_sq.items()},
        "promotion_driven": list(report.promotion_driven),
    }


def write_insights(out_dir: str | Path, report: InsightReport) -> list[Path]:
    """Write the insight bundle of one subcategory.

    Files: ``insights.json``, ``deciles.csv``, ``histogram.csv``, ``brands.csv``,
    ``classification.csv`` and ``assortment_sq.csv``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    deciles = pd.DataFrame([{**asdict(d), "bin": d.label} for d in report.deciles])
    edges = report.distribution.bin_edges
    histogram = pd.DataFrame(
        {
            "bin_start": edges[:-1],
            "bin_end": edges[1:],
            "share": report.distribution.histogram,
        }
    )
    brands = pd.DataFrame(
        [asdict(brand) for brand in report.brands],
        columns=["brand_id", "style_count", "mean_normalized_sq"],
    )
    classification = pd.DataFrame(
        [(style, "top_seller") for style in sorted(report.classification.top_sellers)]
        + [
            (style, "liquidation_candidate")
            for style in sorted(report.classification.liquidation_candidates)
        ],
        columns=["style_id", "class"],
    )
    assortment = pd.DataFrame(
        list(report.assortment_sq.items()), columns=["week", "mean_normalized_sq"]
    )

    tables = {
        "deciles.csv": deciles,
        "histogram.csv": histogram,
        "brands.csv": brands,
        "classification.csv": classification,
        "assortment_sq.csv": assortment,
    }
    _write_json(out_dir / "insights.json", insights_document(report))
    for name, frame in tables.items():
        _write_csv(out_dir / name, frame)
    logger.info("Wrote insights of subcategory %s to %s", report.subcategory_id, out_dir)
    return [out_dir / "insights.json", *(out_dir / name for name in tables)]
