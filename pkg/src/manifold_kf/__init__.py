"""Kalman filtering for azimuth states on SO(2), R^n and SO(2) x R^n."""
from .exceptions import ContractError, NumericalError
from .lie import SO2, GroupElement, LieGroup, Product, RealN, compose, inverse, wrap_to_pi
from .lgekf import (
    ConcentratedGaussian,
    MeasurementModel,
    SystemModel,
    UpdateReport,
    compute_C,
    compute_H,
    predict,
    update,
)
from .wrapped_ekf import WrappedState, ekf_predict, ekf_update, normalize
from .gating import GateConfig, chi2_quantile, gate_test
from .tracking import (
    Measurement,
    TrackerConfig,
    TrackRecord,
    TruthSample,
    angular_rmse,
    compare_filters,
    run_tracker,
)

__version__ = "0.1.0"
