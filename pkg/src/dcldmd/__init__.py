"""Discrete control Liouville dynamic mode decomposition (DCLDMD).

Predicts the closed-loop response of a discrete-time control-affine system to a
given feedback law from open-loop snapshot triples ``(x_k, u_k, y_k)``.
"""

from .core import (
    DcldmdConfig,
    DcldmdModel,
    eval_eigenfunctions,
    fit,
    load_model,
    predict_direct,
    predict_indirect,
    save_model,
)
from .data import SnapshotSet, load_snapshots, save_snapshots, validate
from .edmdc import EdmdcModel, LiftingDictionary, fit_edmdc, rollout_edmdc
from .estimators import DCLDMD, EDMDc
from .exceptions import DivergenceWarning, IntegrationError, SingularMatrixError
from .kernels import Kernel, gram, kernel_eval, vv_inner
from .simulate import FeedbackLaw, SamplingConfig, duffing, generate_snapshots, rollout_true

__version__ = "0.1.0"

__all__ = [
    "DCLDMD",
    "EDMDc",
    "DcldmdConfig",
    "DcldmdModel",
    "DivergenceWarning",
    "EdmdcModel",
    "FeedbackLaw",
    "IntegrationError",
    "Kernel",
    "LiftingDictionary",
    "SamplingConfig",
    "SingularMatrixError",
    "SnapshotSet",
    "duffing",
    "eval_eigenfunctions",
    "fit",
    "fit_edmdc",
    "generate_snapshots",
    "gram",
    "kernel_eval",
    "load_model",
    "load_snapshots",
    "predict_direct",
    "predict_indirect",
    "rollout_edmdc",
    "rollout_true",
    "save_model",
    "save_snapshots",
    "validate",
    "vv_inner",
]
