"""Tests for the merchandising features and their centering."""

import numpy as np
import pandas as pd
import pytest

from stylequotient.errors import EstimationError, WeekRangeError
from stylequotient.features import (
    FEATURE_NAMES,
    brand_live_competition,
    build_feature_panel,
    discount_deviation,
    discount_fraction,
    list_views_deviation,
    normalized_list_price,
    style_age,
)

from .builders import make_panel, obs

PER_POINT = {
    "discount_deviation": discount_deviation,
    "normalized_list_price": normalized_list_price,
    "list_views_deviation": list_views_deviation,
    "style_age": style_age,
    "brand_live_competition": brand_live_competition,
}


def _mixed_panel():
    """Three styles, two brands, gaps, price cuts and varying views."""
    return make_panel(
        [
            obs("A", 1, 4, views=120),
            obs("A", 2, 6, selling_price=90.0, views=180, first_discount=True),
            obs("A", 3, 2, selling_price=70.0, views=90),
            obs("A", 4, 5, selling_price=85.0, views=0),
            obs("B", 2, 1, brand="B2", list_price=250.0, views=40),
            obs("B", 4, 3, brand="B2", list_price=250.0, selling_price=200.0, views=75),
            obs("C", 1, 7, list_price=60.0, views=300),
            obs("C", 2, 2, list_price=60.0, views=310),
            obs("C", 3, 9, list_price=60.0, selling_price=45.0, views=500),
            obs("C", 4, 1, list_price=60.0, views=280, days=3),
        ]
    )


def test_vectorized_features_match_per_point_definitions():
    """Test that build_feature_panel agrees with each per-point function."""
    panel = _mixed_panel()

    features = build_feature_panel(panel)

    assert len(features) == 9
    for (style, week), row in features.entries.iterrows():
        for name, function in PER_POINT.items():
            assert row[name] == pytest.approx(function(panel, style, week)), (style, week, name)
        expected_flag = float(panel.observation(style, week).first_time_on_discount)
        assert row["first_time_on_discount"] == expected_flag


def test_centered_features_sum_to_zero_each_week():
    """Test that centering removes the live-assortment mean of every feature."""
    features = build_feature_panel(_mixed_panel())

    centered = [f"centered_{name}" for name in FEATURE_NAMES]
    sums = features.entries[centered].groupby(level="week").sum()

    np.testing.assert_allclose(sums.to_numpy(), 0.0, atol=1e-12)
    for week in (1, 2, 3, 4):
        block = features.weeks([week]).set_index("style_id")
        expected = block[list(FEATURE_NAMES)] - features.per_week_means.loc[week]
        np.testing.assert_allclose(block[centered].to_numpy(), expected.to_numpy())


def test_style_age_counts_gap_weeks():
    """Test that style age keeps counting through non-live weeks."""
    panel = make_panel([obs("A", 1, 1), obs("A", 2, 1), obs("A", 5, 1)])

    features = build_feature_panel(panel)

    assert style_age(panel, "A", 1) == 1.0
    assert style_age(panel, "A", 5) == 5.0
    assert features.vector("A", 5).style_age == 5.0


def test_discount_deviation_uses_running_mean():
    """Test the discount deviation of a style cut from 0% to 20%."""
    panel = make_panel([obs("A", 1, 1), obs("A", 2, 1, selling_price=80.0)])

    assert discount_deviation(panel, "A", 1) == 0.0
    assert discount_deviation(panel, "A", 2) == pytest.approx(0.1)
    assert discount_fraction(panel.observation("A", 2)) == pytest.approx(0.2)


def test_list_views_deviation():
    """Test the relative views deviation and its zero-views guard."""
    panel = make_panel(
        [
            obs("A", 1, 1, views=100),
            obs("A", 2, 1, views=300),
            obs("Z", 1, 1, views=0),
            obs("Z", 2, 1, views=0),
        ]
    )

    assert list_views_deviation(panel, "A", 2) == pytest.approx(0.5)
    assert list_views_deviation(panel, "Z", 2) == 0.0


def test_normalized_list_price():
    """Test that list price is divided by the week's live mean."""
    panel = make_panel([obs("A", 1, 1, list_price=100.0), obs("B", 1, 1, list_price=300.0)])

    features = build_feature_panel(panel)

    assert features.vector("A", 1).normalized_list_price == pytest.approx(0.5)
    assert features.vector("B", 1).normalized_list_price == pytest.approx(1.5)


def test_brand_live_competition_counts_other_live_styles():
    """Test that only live styles of the same brand are counted."""
    panel = make_panel(
        [
            obs("A", 1, 1),
            obs("B", 1, 1),
            obs("C", 1, 1),
            obs("D", 1, 1, brand="B2"),
            obs("E", 1, live=False),
        ]
    )

    assert brand_live_competition(panel, "A", 1) == 2.0
    assert brand_live_competition(panel, "D", 1) == 0.0


def test_non_live_style_week_has_no_features():
    """Test that features are only defined on live style-weeks."""
    panel = make_panel([obs("A", 1, 1), obs("A", 3, 1)])
    features = build_feature_panel(panel)

    with pytest.raises(WeekRangeError):
        style_age(panel, "A", 2)
    with pytest.raises(EstimationError):
        features.centered_matrix(pd.MultiIndex.from_tuples([("A", 2)], names=["style_id", "week"]))


def test_feature_vector_array_order():
    """Test that as_array follows FEATURE_NAMES."""
    panel = make_panel([obs("A", 1, 1, views=50), obs("A", 2, 1, views=150, first_discount=True)])

    vector = build_feature_panel(panel).vector("A", 2)

    expected = [getattr(vector, name) for name in FEATURE_NAMES]
    np.testing.assert_array_equal(vector.as_array(), expected)
    assert vector.first_time_on_discount == 1.0


def test_to_csv_writes_raw_and_centered_columns(tmp_path):
    """Test the audit dump's header and row order."""
    panel = make_panel([obs("B", 1, 1), obs("A", 1, 1), obs("A", 2, 1)])
    path = tmp_path / "features.csv"

    build_feature_panel(panel).to_csv(path)

    lines = path.read_text().splitlines()
    assert lines[0].split(",")[:3] == ["style_id", "week", "discount_deviation"]
    assert lines[0].split(",")[-1] == "centered_brand_live_competition"
    assert [line.split(",")[:2] for line in lines[1:]] == [["A", "1"], ["B", "1"], ["A", "2"]]


# ============================================================================
# Views deviation on a fixed 5-style, 6-week panel
# ============================================================================

VIEWS = {
    "A": [100, 100, 100, 100, 100, 100],
    "B": [100, 300, 200, 200, 200, 200],
    "C": [50, 50, 50, 50, 50, 350],
    "D": [0, 0, 0, 0, 0, 0],
    "E": [40, 80, 120, 160, 200, 240],
}

# (views - expanding mean) / max(1, expanding mean), worked by hand
VIEWS_DEVIATION = {
    "A": [0, 0, 0, 0, 0, 0],
    "B": [0, 0.5, 0, 0, 0, 0],
    "C": [0, 0, 0, 0, 0, 2.5],
    "D": [0, 0, 0, 0, 0, 0],
    "E": [0, 1 / 3, 0.5, 0.6, 2 / 3, 5 / 7],
}


def _views_panel(week6_shift: int = 0):
    return make_panel(
        [
            obs(style, week, 1, views=views + (week6_shift if week == 6 else 0))
            for style, series in VIEWS.items()
            for week, views in enumerate(series, start=1)
        ]
    )


def test_views_deviation_matches_hand_table():
    """Test raw and centered list_views_deviation against the worked table."""
    entries = build_feature_panel(_views_panel()).entries

    for style, expected in VIEWS_DEVIATION.items():
        raw = [entries.loc[(style, week), "list_views_deviation"] for week in range(1, 7)]
        np.testing.assert_allclose(raw, expected, atol=1e-12)
    centered = entries.xs(6, level="week")["centered_list_views_deviation"]
    assert centered["C"] == pytest.approx(13 / 7)
    assert centered["E"] == pytest.approx(1 / 14)
    assert centered["A"] == pytest.approx(-4.5 / 7)


def test_views_shift_in_one_week_moves_only_that_week():
    """Test that adding 100 views to every style in week 6 follows the formula."""
    before = build_feature_panel(_views_panel()).entries
    after = build_feature_panel(_views_panel(week6_shift=100)).entries

    early = before.index.get_level_values("week") < 6
    pd.testing.assert_series_equal(
        after.loc[early, "list_views_deviation"], before.loc[early, "list_views_deviation"]
    )
    shifted = after.xs(6, level="week")["list_views_deviation"]
    expected = {"A": 5 / 7, "B": 5 / 13, "C": 20 / 7, "D": 5.0, "E": 55 / 47}
    for style, value in expected.items():
        assert shifted[style] == pytest.approx(value)
    centered = after.xs(6, level="week")["centered_list_views_deviation"]
    np.testing.assert_allclose(
        centered.to_numpy(), shifted.to_numpy() - shifted.mean(), atol=1e-12
    )


def test_feature_panel_is_bit_identical_across_builds():
    """Test that two builds from equal panels agree exactly."""
    first = build_feature_panel(_mixed_panel())
    second = build_feature_panel(_mixed_panel())

    pd.testing.assert_frame_equal(first.entries, second.entries, check_exact=True)
    pd.testing.assert_frame_equal(first.per_week_means, second.per_week_means, check_exact=True)
