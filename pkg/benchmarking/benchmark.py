"""Benchmarking suite for stylequotient fits, recovery and backtests."""

import time
import tracemalloc
from collections.abc import Callable
from statistics import mean, stdev

from tqdm import tqdm

from stylequotient import (
    BacktestConfig,
    ChoiceModelConfig,
    ForecastModel,
    SynthConfig,
    backtest,
    build_feature_panel,
    fit_choice_model,
    generate,
)
from stylequotient.synthgen import recovery_from_panel


def time_function(func: Callable, args: tuple, num_runs: int = 3, desc: str = "") -> list[float]:
    """Time a function execution multiple times.

    Args:
        func: The function to time
        args: Arguments to pass to the function
        num_runs: Number of times to run the function
        desc: Description for progress bar

    Returns:
        List of execution times in seconds
    """
    times = []
    for _ in tqdm(range(num_runs), desc=desc, leave=False, ncols=80):
        start = time.perf_counter()
        func(*args)
        end = time.perf_counter()
        times.append(end - start)
    return times


def peak_memory(func: Callable, args: tuple) -> float:
    """Peak traced allocation of one call, in MiB."""
    tracemalloc.start()
    try:
        func(*args)
        _, peak = tracemalloc.get_traced_memory()
    finally:
        tracemalloc.stop()
    return peak / 2**20


class FitCase:
    """One fit benchmark: a synthetic subcategory of a given size and solver path."""

    def __init__(self, name: str, n_styles: int, solver_threshold: int):
        self.name = name
        self.synth = SynthConfig(n_styles=n_styles, customers_per_week=5 * n_styles * 50)
        self.choice = ChoiceModelConfig(solver_threshold=solver_threshold)


def run_fit_benchmarks(num_runs: int = 3) -> None:
    """Time the within-style and LSQR solvers on growing subcategories."""
    cases = [
        FitCase("2,000 styles (within)", 2_000, 20_000),
        FitCase("2,000 styles (lsqr)", 2_000, 1),
        FitCase("20,000 styles (lsqr)", 20_000, 1),
    ]

    print("=" * 100)
    print(f"FIT BENCHMARKS - {num_runs} runs per case, 26 weeks")
    print("=" * 100)

    results = []
    for case in tqdm(cases, desc="Fits", ncols=100):
        panel, _ = generate(case.synth)
        features = build_feature_panel(panel)
        args = (panel, features, case.choice)
        times = time_function(fit_choice_model, args, num_runs, desc=f"  {case.name}")
        results.append(
            {
                "name": case.name,
                "rows": len(features),
                "mean": mean(times),
                "stdev": stdev(times) if len(times) > 1 else 0.0,
                "peak": peak_memory(fit_choice_model, args),
            }
        )

    print(f"{'Case':<30} | {'Rows':>10} | {'Mean ± StdDev (seconds)':<28} | {'Peak MiB':>10}")
    print("-" * 100)
    for result in results:
        timing = f"{result['mean']:.3f} ± {result['stdev']:.3f}"
        print(f"{result['name']:<30} | {result['rows']:>10} | {timing:<28} | {result['peak']:>10.1f}")
    print("-" * 100)
    print()


def run_recovery_benchmarks(seeds: range = range(5)) -> None:
    """Recover default synthetic panels and score the four forecasters on each."""
    print("=" * 100)
    print(f"RECOVERY AND BACKTEST - synthetic defaults, {len(seeds)} seeds")
    print("=" * 100)

    labels = [model.label for model in ForecastModel]
    header = f"{'Seed':<6} | {'Pearson':>8} | {'Max beta err':>12} | {'Seconds':>8} | "
    header += " | ".join(f"{label:>20}" for label in labels)
    rows = []
    for seed in tqdm(seeds, desc="Seeds", ncols=100):
        start = time.perf_counter()
        panel, truth = generate(SynthConfig(rng_seed=seed))
        recovery = recovery_from_panel(panel, truth)
        result = backtest(panel, BacktestConfig())
        elapsed = time.perf_counter() - start
        scores = " | ".join(
            f"{result.reports[model].wmape_overall:>20.2f}" for model in ForecastModel
        )
        rows.append(
            f"{seed:<6} | {recovery.pearson_gamma:>8.4f} | "
            f"{100 * recovery.beta_rel_error:>11.2f}% | {elapsed:>8.2f} | {scores}"
        )

    print(header)
    print("-" * len(header))
    for row in rows:
        print(row)
    print("-" * len(header))
    print()


if __name__ == "__main__":
    run_fit_benchmarks()
    run_recovery_benchmarks()
    print("Benchmarking complete!")
