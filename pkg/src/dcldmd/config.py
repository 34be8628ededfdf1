"""Run configuration: experiment presets, JSON files and flag overrides.

Recognized keys (all optional in a config file; missing keys take the preset
value)::

    alpha, beta, delta, dt            Duffing coefficients and step size
    bounds, counts, layout, n_samples state sampling (grid or uniform box)
    input_bounds, seed                input sampling and RNG seed
    kernel, sigma, kernel_offset      DCLDMD kernel
    epsilon, solver                   regularization and linear solver
    feedback                          gain K, nested list of shape (m, n)
    x0, horizon                       prediction start and length in seconds
    predictors                        subset of dcldmd-direct, dcldmd-indirect, edmdc
    edmdc_centers, edmdc_rbf, edmdc_scale, edmdc_ridge
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .kernels import Kernel
from .simulate import FeedbackLaw, SamplingConfig, duffing

PREDICTORS = ("dcldmd-direct", "dcldmd-indirect", "edmdc")

# The experiment feedback is printed as a 2-vector acting on a scalar input;
# it is read here as the scalar law u = -2 x1 - 2 x2.
FEEDBACK_INTERPRETATION = (
    "feedback printed as mu(x) = [-2 x1, -2 x2]^T for a scalar-input system; "
    "interpreted as the scalar law u = -2 x1 - 2 x2 (K = [[-2, -2]])"
)


@dataclass
class RunConfig:
    alpha: float = 1.0
    beta: float = -1.0
    delta: float = 0.0
    dt: float = 0.1
    bounds: list = field(default_factory=lambda: [[-3.0, 3.0], [-3.0, 3.0]])
    counts: list = field(default_factory=lambda: [15, 15])
    layout: str = "grid"
    n_samples: int | None = None
    input_bounds: list = field(default_factory=lambda: [[-2.0, 2.0]])
    seed: int = 0
    kernel: str = "gaussian"
    sigma: float = 10.0
    kernel_offset: float = 0.0
    epsilon: float = 1e-6
    solver: str = "solve"
    feedback: list = field(default_factory=lambda: [[-2.0, -2.0]])
    x0: list = field(default_factory=lambda: [2.0, -2.0])
    horizon: float = 6.0
    predictors: list = field(default_factory=lambda: ["dcldmd-indirect"])
    edmdc_centers: int = 100
    edmdc_rbf: str = "thinplate"
    edmdc_scale: float = 1.0
    edmdc_ridge: float = 1e-10

    def __post_init__(self):
        if not self.horizon >= 0:
            raise ValueError(f"horizon must be nonnegative, got {self.horizon}")
        unknown = set(self.predictors) - set(PREDICTORS)
        if unknown:
            raise ValueError(f"unknown predictors {sorted(unknown)}; expected a subset of {PREDICTORS}")
        self.sampling()  # validates dt and bounds
        Kernel(self.kernel, self.sigma, self.kernel_offset)

    @property
    def steps(self):
        return int(round(self.horizon / self.dt))

    def system(self):
        return duffing(self.alpha, self.beta, self.delta)

    def sampling(self):
        return SamplingConfig(
            dt=self.dt,
            bounds=self.bounds,
            counts=self.counts,
            input_bounds=self.input_bounds,
            seed=self.seed,
            layout=self.layout,
            n_samples=self.n_samples,
        )

    def kernel_obj(self):
        return Kernel(self.kernel, self.sigma, self.kernel_offset)

    def feedback_law(self):
        return FeedbackLaw.linear(self.feedback)

    def to_dict(self):
        return asdict(self)

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


PRESETS = {
    1: {},
    2: {
        "layout": "uniform",
        "n_samples": 1000,
        "kernel": "expdot",
        "sigma": 100.0,
        "predictors": ["dcldmd-indirect", "edmdc"],
    },
}


def load_config(path=None, exp=1, overrides=None):
    """Preset ``exp``, updated by the JSON file at ``path``, updated by ``overrides``.

    ``None`` values in ``overrides`` are ignored.
    """
    if exp not in PRESETS:
        raise ValueError(f"unknown experiment preset {exp}; expected one of {sorted(PRESETS)}")
    values = dict(PRESETS[exp])
    if path is not None:
        with Path(path).open() as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        known = {f.name for f in fields(RunConfig)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
        values.update(data)
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    return RunConfig(**values)


def parse_gain(text, n=None):
    """Parse a row-major ``"k11,k12,..."`` gain string into an ``(m, n)`` list."""
    vals = [float(v) for v in str(text).replace(";", ",").split(",") if v.strip()]
    if not vals:
        raise ValueError("empty feedback gain")
    n = n or len(vals)
    if len(vals) % n:
        raise ValueError(f"feedback gain has {len(vals)} entries, not a multiple of n={n}")
    return np.array(vals).reshape(-1, n).tolist()


def parse_vector(text):
    return [float(v) for v in str(text).split(",") if v.strip()]
