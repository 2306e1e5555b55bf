"""Tests for the synthetic panel generator and parameter recovery."""

import numpy as np
import pandas as pd
import pytest

from stylequotient.choice_model import fit_choice_model
from stylequotient.config import SynthConfig, build_config
from stylequotient.errors import ConfigError
from stylequotient.features import build_feature_panel
from stylequotient.panel import SubcategoryPanel, load_panel
from stylequotient.synthgen import (
    GroundTruth,
    generate,
    mnl_probabilities,
    recovery_experiment,
    write_synthetic,
)

SMALL = SynthConfig(n_styles=40, n_weeks=8, rng_seed=9)


def test_same_seed_same_panel():
    """Test that generation is fully determined by the seed."""
    first, truth = generate(SMALL)
    second, again = generate(SMALL)

    assert first.equals(second)
    assert truth.gamma_star == again.gamma_star
    assert not first.equals(generate(SMALL.model_copy(update={"rng_seed": 10}))[0])


def test_counts_match_config():
    """Test the style and week counts of a generated panel."""
    panel, truth = generate(SMALL)

    assert len(panel.universal_styles) == 40
    assert panel.week_range == (1, 8)
    assert len(panel) == 40 * 8
    assert set(truth.gamma_star) == panel.universal_styles
    assert panel.has_ctr


def test_written_panel_passes_validation(tmp_path):
    """Test that the written CSV loads back and the ground truth round-trips."""
    panel, truth = generate(SMALL)

    panel_path, truth_path = write_synthetic(tmp_path, panel, truth)

    assert load_panel(panel_path).equals(panel)
    loaded = GroundTruth.from_json(truth_path.read_text())
    assert loaded.gamma_star == truth.gamma_star
    assert loaded.beta_star == truth.beta_star
    assert loaded.config == SMALL


def test_antithetic_pairs_share_liveness():
    """Test that paired styles mirror appeal and are live in the same weeks."""
    panel, truth = generate(SMALL.model_copy(update={"antithetic": True}))

    for i in range(0, 40, 2):
        a, b = f"S{i:04d}", f"S{i + 1:04d}"
        assert truth.gamma_star[a] + truth.gamma_star[b] == pytest.approx(0.0)
        assert panel.live_weeks(a) == panel.live_weeks(b)


def test_sales_sum_to_customers_each_week():
    """Test that every week with live styles sells exactly customers_per_week units."""
    panel, _ = generate(SMALL)

    totals = panel.live.groupby("week")["sales_qty"].sum()

    assert set(totals.tolist()) == {SMALL.customers_per_week}


def test_shares_converge_to_choice_probabilities():
    """Test that noiseless shares approach the MNL probabilities with many customers."""
    config = SMALL.model_copy(update={"noise_sigma": 0.0, "customers_per_week": 1_000_000})
    panel, truth = generate(config)

    probability = mnl_probabilities(panel, truth.gamma_star, truth.beta_star)
    live = panel.live.set_index(["style_id", "week"])["sales_qty"]
    share = live / live.groupby(level="week").transform("sum")

    np.testing.assert_allclose(share.reindex(probability.index), probability, atol=5e-3)


def test_two_identical_styles_split_evenly():
    """Test a two-style market with no appeal spread and no lever effects."""
    config = SynthConfig(
        n_styles=2,
        n_weeks=6,
        gamma_sigma=0.0,
        true_beta=(0.0,) * 6,
        noise_sigma=0.0,
        customers_per_week=1_000_000,
        initial_live_fraction=1.0,
        exit_fraction=0.0,
        gap_probability=0.0,
    )

    panel, _ = generate(config)

    shares = panel.live.pivot(index="week", columns="style_id", values="sales_qty")
    shares = shares.div(shares.sum(axis=1), axis=0)
    np.testing.assert_allclose(shares.to_numpy(), 0.5, atol=5e-3)


def test_probabilities_sum_to_one_per_week():
    """Test mnl_probabilities on arbitrary parameters."""
    panel, truth = generate(SMALL)
    shifted = {style: value + 3.0 for style, value in truth.gamma_star.items()}

    probability = mnl_probabilities(panel, shifted, (1.0, 0.0, 0.0, 0.0, 0.0, 0.0))

    totals = probability.groupby(level="week").sum()
    np.testing.assert_allclose(totals.to_numpy(), 1.0)


def test_config_rejects_bad_values():
    """Test pydantic validation of the generator settings."""
    with pytest.raises(ConfigError):
        build_config(SynthConfig, n_styles=1)
    with pytest.raises(ConfigError):
        build_config(SynthConfig, true_beta=(1.0, 2.0))
    with pytest.raises(ConfigError):
        build_config(SynthConfig, discount_low=0.5, discount_high=0.2)


def test_recovery_on_defaults():
    """Test that default panels are recovered closely."""
    report = recovery_experiment(SynthConfig(rng_seed=0))

    assert report.pearson_gamma >= 0.95
    assert report.n_styles_compared >= 190
    assert len(report.beta_rel_errors) == 6


def test_relabelling_styles_permutes_effects():
    """Test that renaming styles moves their effects with them."""
    panel, _ = generate(SMALL)
    styles = sorted(panel.universal_styles)
    rename = dict(zip(styles, [f"X{i:04d}" for i in reversed(range(len(styles)))], strict=True))
    frame = panel.frame.assign(style_id=panel.frame["style_id"].map(rename))
    renamed = SubcategoryPanel.from_frame(frame, week_range=panel.week_range)

    original = fit_choice_model(panel, build_feature_panel(panel))
    relabelled = fit_choice_model(renamed, build_feature_panel(renamed))

    for style, value in original.gamma.items():
        assert relabelled.gamma[rename[style]] == pytest.approx(value, abs=1e-8)
    assert relabelled.beta == pytest.approx(original.beta, abs=1e-8)


def test_appeal_is_unpaired_by_default():
    """Test independent appeal draws without pairing."""
    panel, truth = generate(SMALL)

    assert not SMALL.antithetic
    gamma = pd.Series(truth.gamma_star)
    assert len(gamma) == 40
    assert not np.allclose(gamma.iloc[0::2].to_numpy(), -gamma.iloc[1::2].to_numpy())
    assert panel.live["sales_qty"].sum() > 0
