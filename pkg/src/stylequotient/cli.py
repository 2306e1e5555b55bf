"""Command-line entry point: validate, fit, backtest, report and simulate.

Exit codes: 0 on success, 2 when the input or configuration is rejected, 1 on
any other failure. Logs go to stderr; data goes to files (and short summaries
to stdout).
"""

import argparse
import logging
import sys
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import TypeVar

from tqdm import tqdm

from .choice_model import (
    FittedChoiceModel,
    StyleQuotientTable,
    fit_choice_model,
    load_model,
    style_quotients,
)
from .config import BacktestConfig, ChoiceModelConfig, ReportConfig, SynthConfig, build_config
from .errors import ConfigError, PanelError, StyleQuotientError, WeekRangeError
from .features import FeaturePanel, build_feature_panel
from .forecast import backtest
from .insights import build_insights
from .panel import SubcategoryPanel, filter_min_weeks, load_panels
from .reports import backtest_table, write_backtest, write_fit, write_insights
from .synthgen import generate, write_synthetic

__all__ = ["RunConfig", "build_parser", "main"]

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME_ERROR = 1
EXIT_INPUT_ERROR = 2

LOG_FORMAT = "%(asctime)s | %(levelname)s | %(name)s | %(message)s"

T = TypeVar("T")


@dataclass(frozen=True)
class RunConfig:
    """Validated settings of one CLI invocation."""

    command: str
    input: Path | None
    out_dir: Path | None
    week_format: str
    backtest: BacktestConfig
    report: ReportConfig
    synth: SynthConfig
    model: Path | None = None
    dump_features: bool = False
    fit_through: int | None = None

    @property
    def choice(self) -> ChoiceModelConfig:
        return self.backtest.choice

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        """Assemble the configuration models from parsed flags.

        Raises:
            ConfigError: If any value is rejected by its model
        """
        get = vars(args).get
        choice = build_config(
            ChoiceModelConfig,
            smoothing=get("smoothing"),
            alpha=get("alpha"),
            centering=get("centering"),
        )
        backtest_config = build_config(
            BacktestConfig,
            train_weeks=get("train_weeks"),
            min_live_weeks=get("min_live_weeks"),
            workers=get("workers"),
            choice=choice,
        )
        report = build_config(
            ReportConfig,
            top_quantile=get("top_q"),
            bottom_quantile=get("bottom_q"),
            forward_weeks=get("forward_weeks"),
        )
        synth = build_config(
            SynthConfig,
            rng_seed=get("seed"),
            n_styles=get("n_styles"),
            n_weeks=get("n_weeks"),
            customers_per_week=get("customers"),
            noise_sigma=get("noise"),
            antithetic=get("antithetic"),
        )
        return cls(
            command=args.command,
            input=Path(args.input) if get("input") else None,
            out_dir=Path(args.out_dir) if get("out_dir") else None,
            week_format=get("week_format") or "integer",
            backtest=backtest_config,
            report=report,
            synth=synth,
            model=Path(args.model) if get("model") else None,
            dump_features=bool(get("dump_features")),
            fit_through=get("train_weeks") if args.command == "fit" else None,
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stylequotient",
        description="Estimate Style Quotients from weekly sales panels and backtest forecasts.",
    )
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging verbosity on stderr (default: INFO)",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    source = argparse.ArgumentParser(add_help=False)
    source.add_argument("--input", required=True, help="Panel CSV in the canonical schema")
    source.add_argument(
        "--week-format",
        choices=["integer", "iso"],
        default="integer",
        help="How the week column is written (default: integer)",
    )

    output = argparse.ArgumentParser(add_help=False)
    output.add_argument("--out-dir", required=True, help="Directory for the outputs")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--min-live-weeks", type=int, help="Minimum live weeks per style (4)")
    model.add_argument("--smoothing", choices=["drop", "laplace"], help="Zero-sale policy (drop)")
    model.add_argument("--alpha", type=float, help="Laplace pseudo-count (0.5)")
    model.add_argument(
        "--centering", choices=["geometric", "arithmetic"], help="Log-centering mean (geometric)"
    )
    model.add_argument("--workers", type=int, help="Worker threads (4)")

    commands.add_parser("validate", parents=[source], help="Check a panel file")

    fit = commands.add_parser("fit", parents=[source, output, model], help="Fit the SQ model")
    fit.add_argument(
        "--dump-features", action="store_true", help="Also write features.csv per subcategory"
    )
    fit.add_argument("--train-weeks", type=int, help="Last week to fit on (default: every week)")

    run = commands.add_parser(
        "backtest", parents=[source, output, model], help="Compare the four forecasters"
    )
    run.add_argument("--train-weeks", type=int, help="Last training week (22)")

    report = commands.add_parser(
        "report", parents=[source, output], help="SQ deciles, brands and classification"
    )
    report.add_argument("--model", required=True, help="model.json written by 'fit'")
    report.add_argument("--min-live-weeks", type=int, help="Minimum live weeks per style (4)")
    report.add_argument("--top-q", type=float, help="Top-seller quantile (0.9)")
    report.add_argument("--bottom-q", type=float, help="Liquidation quantile (0.1)")
    report.add_argument("--forward-weeks", type=int, help="Forward sales window (4)")

    simulate = commands.add_parser(
        "simulate", parents=[output], help="Draw a synthetic panel with known parameters"
    )
    simulate.add_argument("--seed", type=int, help="Random seed (0)")
    simulate.add_argument("--n-styles", type=int, help="Number of styles (200)")
    simulate.add_argument("--n-weeks", type=int, help="Number of weeks (26)")
    simulate.add_argument("--customers", type=int, help="Purchases per week (50000)")
    simulate.add_argument("--noise", type=float, help="Utility noise sigma (0.1)")
    simulate.add_argument(
        "--antithetic",
        action="store_true",
        default=None,
        help="Draw appeal in mirrored pairs with shared liveness",
    )
    return parser


def _load(run: RunConfig) -> dict[str, SubcategoryPanel]:
    return load_panels(run.input, run.week_format)


def cmd_validate(run: RunConfig) -> int:
    panels = _load(run)
    for sub, panel in panels.items():
        print(
            f"{sub}: {len(panel.universal_styles)} styles, weeks "
            f"{panel.week_range[0]}..{panel.week_range[1]}, {len(panel.live)} live rows"
        )
    print(f"OK: {run.input} ({len(panels)} subcategories)")
    return EXIT_OK


def _fit_weeks(panel: SubcategoryPanel, fit_through: int | None) -> range | None:
    if fit_through is None:
        return None
    first, last = panel.week_range
    if not first <= fit_through <= last:
        raise WeekRangeError(
            f"Subcategory {panel.subcategory_id}: --train-weeks must lie in "
            f"[{first}, {last}], got {fit_through}"
        )
    return range(first, fit_through + 1)


def _fit_one(
    panel: SubcategoryPanel, config: BacktestConfig, fit_through: int | None = None
) -> tuple[FittedChoiceModel, StyleQuotientTable, FeaturePanel] | None:
    """Filter, featurize and fit one subcategory; ``None`` when no style survives."""
    weeks = _fit_weeks(panel, fit_through)
    filtered = filter_min_weeks(panel, config.min_live_weeks)
    if not filtered.universal_styles:
        logger.warning(
            "Subcategory %s: no style is live for %d weeks; skipped",
            panel.subcategory_id,
            config.min_live_weeks,
        )
        return None
    features = build_feature_panel(filtered)
    model = fit_choice_model(filtered, features, config.choice, weeks)
    return model, style_quotients(model), features


def _map_subcategories(
    panels: dict[str, SubcategoryPanel],
    work: Callable[[SubcategoryPanel], T],
    workers: int,
    desc: str,
) -> dict[str, T]:
    results: dict[str, T] = {}
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {sub: pool.submit(work, panel) for sub, panel in panels.items()}
        for sub in tqdm(sorted(futures), desc=desc, disable=None):
            results[sub] = futures[sub].result()
    return results


def cmd_fit(run: RunConfig) -> int:
    panels = _load(run)
    if not panels:
        raise PanelError(f"{run.input} holds no rows")
    fits = _map_subcategories(
        panels,
        lambda panel: _fit_one(panel, run.backtest, run.fit_through),
        run.backtest.workers,
        "fit",
    )
    fitted = {sub: fit for sub, fit in fits.items() if fit is not None}
    if not fitted:
        raise PanelError(
            f"No subcategory in {run.input} has a style live for "
            f"{run.backtest.min_live_weeks} weeks"
        )
    for sub in sorted(fitted):
        model, sq, features = fitted[sub]
        write_fit(run.out_dir / sub, model, sq, features if run.dump_features else None)
        print(f"{sub}: {len(sq)} styles, R2={model.diagnostics.r2:.4f}")
    skipped = sorted(set(fits) - set(fitted))
    if skipped:
        print(f"skipped: {', '.join(skipped)}")
    return EXIT_OK


def cmd_backtest(run: RunConfig) -> int:
    result = backtest(_load(run), run.backtest)
    write_backtest(run.out_dir, result)
    print(backtest_table(result, by="week").to_string(index=False, float_format="%.2f"))
    return EXIT_OK


def _report_cutoff(
    model: FittedChoiceModel, panel: SubcategoryPanel, forward_weeks: int
) -> int | None:
    """Last analysis week: the model's last fitted week.

    Raises:
        ConfigError: If the forward window after that week runs past the panel
    """
    if model.fitted_weeks is None:
        logger.warning(
            "%s does not record its fitted weeks; future_sale_rate may be in-sample",
            model.subcategory_id,
        )
        return None
    cutoff = model.fitted_weeks[1]
    last = panel.week_range[1]
    if cutoff + forward_weeks > last:
        raise ConfigError(
            f"The model was fitted through week {cutoff}, so a {forward_weeks}-week forward "
            f"window needs weeks up to {cutoff + forward_weeks} but the panel ends at "
            f"week {last}; refit with --train-weeks {last - forward_weeks}"
        )
    return cutoff


def cmd_report(run: RunConfig) -> int:
    model = load_model(run.model)
    if model.model_kind != "style_effects":
        raise ConfigError(f"{run.model} holds a {model.model_kind} model without style effects")
    panels = _load(run)
    if model.subcategory_id not in panels:
        raise PanelError(f"Subcategory '{model.subcategory_id}' not found in {run.input}")
    panel = filter_min_weeks(panels[model.subcategory_id], run.backtest.min_live_weeks)
    cutoff = _report_cutoff(model, panel, run.report.forward_weeks)
    report = build_insights(panel, style_quotients(model), run.report, cutoff)
    write_insights(run.out_dir / model.subcategory_id, report)
    print(
        f"{model.subcategory_id}: {len(report.deciles)} bins, "
        f"{len(report.classification.top_sellers)} top sellers, "
        f"{len(report.classification.liquidation_candidates)} liquidation candidates"
    )
    return EXIT_OK


def cmd_simulate(run: RunConfig) -> int:
    panel, truth = generate(run.synth)
    panel_path, truth_path = write_synthetic(run.out_dir, panel, truth)
    print(f"Wrote {panel_path} and {truth_path}")
    return EXIT_OK


COMMANDS: dict[str, Callable[[RunConfig], int]] = {
    "validate": cmd_validate,
    "fit": cmd_fit,
    "backtest": cmd_backtest,
    "report": cmd_report,
    "simulate": cmd_simulate,
}


def main(argv: Sequence[str] | None = None) -> int:
    """Run the CLI and return its exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr, format=LOG_FORMAT, level=args.log_level)
    logging.getLogger("stylequotient").setLevel(args.log_level)

    try:
        run = RunConfig.from_args(args)
        return COMMANDS[run.command](run)
    except (StyleQuotientError, FileNotFoundError) as exc:
        logger.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except Exception:
        logger.exception("Unexpected failure running '%s'", args.command)
        return EXIT_RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
