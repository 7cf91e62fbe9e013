"""Reduced-rank logistic regression for heterogeneous treatment effects on
multiple binary outcomes, with its baselines, simulation study and CLI."""
from .baselines import FullModelFit, SeparableFit, fit_full, fit_ma, fit_mw, full_effect
from .data import (
    FactorizedCoefficients,
    PropensityModel,
    TrialData,
    a_scalings,
    center_columns,
    estimate_propensity,
    w_weights,
)
from .effects import (
    METHOD_TAGS,
    EffectMatrix,
    bias_term,
    corrected_effect,
    corrected_effect_univariate,
    raw_effect,
)
from .errors import (
    ConvergenceError,
    DataValidationError,
    DegenerateInputError,
    DimensionError,
    EstimationError,
    HTEError,
    IllConditionedError,
    NumericError,
    PositivityError,
    UndefinedRateError,
)
from .evaluation import RocCurve, classification_rates, mse, roc_and_auc, subject_scores
from .losses import loss_a, loss_gradient, loss_w, multiple_logistic_loss
from .realdata import RealDataConfig, load_dataset_csv, run_real_data
from .simulation import ScenarioConfig, SimulatedDataset, generate_scenario
from .solver import (
    FitResult,
    MajorizationState,
    SolverOptions,
    fit_r3a,
    fit_r3w,
    majorize_a,
    majorize_w,
    update_v,
    update_w_alearner,
    update_w_wmethod,
)
from .study import StudyConfig, run_simulation_study

__version__ = "0.1.0"
