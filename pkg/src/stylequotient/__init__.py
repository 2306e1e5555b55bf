"""stylequotient: intrinsic style appeal from weekly sales panels.

A style's Style Quotient (SQ) is the exponentiated fixed effect of a
log-centered multinomial logit fitted to weekly sales shares, with discounts,
list views, price positioning, age, discount debut and brand competition as
time-varying controls. It measures demand the merchandising levers do not
explain.

Example:
    from stylequotient import build_feature_panel, fit_choice_model, load_panel
    from stylequotient import style_quotients

    panel = load_panel("panel.csv")
    model = fit_choice_model(panel, build_feature_panel(panel))
    sq = style_quotients(model)
    print(sq.to_frame().sort_values("normalized_sq").tail())
"""

from .choice_model import (
    Centering,
    DesignSystem,
    FittedChoiceModel,
    SmoothingPolicy,
    StyleQuotientTable,
    build_design_matrix,
    choice_responses,
    empirical_choice_probabilities,
    fit_choice_model,
    fit_least_squares,
    load_model,
    log_center_response,
    model_from_json,
    model_to_json,
    save_model,
    style_quotients,
)
from .config import BacktestConfig, ChoiceModelConfig, ReportConfig, SynthConfig
from .errors import (
    ConfigError,
    EstimationError,
    ForecastError,
    PanelError,
    StyleQuotientError,
)
from .features import FEATURE_NAMES, FeaturePanel, build_feature_panel
from .forecast import (
    BacktestResult,
    ForecastModel,
    SalesForecast,
    backtest,
    fit_mean_intercept,
    predict_choice_model,
    predict_normalized_ros,
    predict_simple_ros,
    ros,
    wmape,
)
from .insights import (
    brand_mean_sq,
    build_insights,
    classify_styles,
    decile_bins,
    decile_performance,
    sq_distribution_stats,
)
from .panel import (
    SubcategoryPanel,
    assortment_at,
    filter_min_weeks,
    load_panel,
    load_panels,
    split_train_test,
    write_panel,
)
from .synthgen import GroundTruth, generate, recovery_experiment

__all__ = [
    "FEATURE_NAMES",
    "BacktestConfig",
    "BacktestResult",
    "Centering",
    "ChoiceModelConfig",
    "ConfigError",
    "DesignSystem",
    "EstimationError",
    "FeaturePanel",
    "FittedChoiceModel",
    "ForecastError",
    "ForecastModel",
    "GroundTruth",
    "PanelError",
    "ReportConfig",
    "SalesForecast",
    "SmoothingPolicy",
    "StyleQuotientError",
    "StyleQuotientTable",
    "SubcategoryPanel",
    "SynthConfig",
    "assortment_at",
    "backtest",
    "brand_mean_sq",
    "build_design_matrix",
    "build_feature_panel",
    "build_insights",
    "choice_responses",
    "classify_styles",
    "decile_bins",
    "decile_performance",
    "empirical_choice_probabilities",
    "filter_min_weeks",
    "fit_choice_model",
    "fit_least_squares",
    "fit_mean_intercept",
    "generate",
    "load_model",
    "load_panel",
    "load_panels",
    "log_center_response",
    "model_from_json",
    "model_to_json",
    "predict_choice_model",
    "predict_normalized_ros",
    "predict_simple_ros",
    "recovery_experiment",
    "ros",
    "save_model",
    "split_train_test",
    "sq_distribution_stats",
    "style_quotients",
    "wmape",
    "write_panel",
]
