"""Random Fourier features with averaged SGD for binary classification."""
from ._backend import BACKEND
from .data import SampleStream, SyntheticDistribution, bayes_predict, bayes_risk, sample
from .evaluation import (Evaluator, RunTrace, aggregate_runs, classification_error,
                         expected_loss)
from .features import (FeatureSet, GaussianKernel, feature_map, kernel_approx, kernel_exact,
                       sample_features)
from .loss import SurrogateLoss, link, loss_deriv, loss_value, m_delta
from .optim import (DivergenceError, KernelHypothesis, RffHypothesis, Schedule,
                    check_schedule_preconditions, fit_kernel, fit_rff, rff_sgd_step,
                    run_kernel_sgd, run_rff_sgd, step_size)
from .spectra import gram, norm_decay_study, spectral_norm

__version__ = "0.1.0"
