"""Noise-assisted mode decomposition with Hilbert features for forecasting."""

__version__ = "0.1.0"

from .series import TimeSeries, load_csv, log_transform, to_csv, window
from .emd import (Decomposition, Imf, SiftConfig, emd, envelope_mean,
                  find_extrema, is_residue, sift)
from .ceemd import (EndEffectErrorReport, EnsembleConfig, ceemd,
                    characterize_end_effect, eemd)
from .hsa import (AnalyticMode, HilbertSpectrum, LowessConfig, SpectrumPoint,
                  analytic_mode, analytic_modes, hilbert, hilbert_spectrum,
                  instantaneous_frequency, mode_spectrum_means, robust_lowess)
from .filters import high_pass, low_pass
from .features import (FeatureMatrix, FeatureSetSelector, build_dataset,
                       build_features, end_effect_factor)
from .forecast import (ForecastReport, RidgeModel, RidgeRegressor,
                       evaluate_split, fit_ridge, naive_benchmark,
                       rolling_mse, walk_forward)
