"""Ground-truth control-affine systems, RK4 integration and snapshot generation."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ._validation import check_steps, check_vector
from .data import SnapshotSet, TrajectoryRecord
from .exceptions import DivergenceWarning, IntegrationError


@dataclass(frozen=True)
class ControlAffineSystem:
    """``x+ = F(x) + G(x) u`` (discrete) or ``xdot = f(x) + g(x) u`` (continuous).

    ``drift`` returns an ``(n,)`` array and ``effectiveness`` an ``(n, m)`` array.
    Continuous systems are stepped with RK4 under a zero-order-hold input.
    """

    n: int
    m: int
    drift: Callable[[np.ndarray], np.ndarray]
    effectiveness: Callable[[np.ndarray], np.ndarray]
    discrete: bool = False
    name: str = "system"

    def rhs(self, x, u):
        return np.asarray(self.drift(x), dtype=float) + np.asarray(
            self.effectiveness(x), dtype=float
        ) @ np.asarray(u, dtype=float)

    def step(self, x, u, dt=None):
        """One transition under input ``u``; ``dt`` is ignored for discrete systems."""
        if self.discrete:
            x_next = self.rhs(np.asarray(x, dtype=float), np.atleast_1d(u))
            if not np.all(np.isfinite(x_next)):
                raise IntegrationError(f"non-finite state after map step from {x}")
            return x_next
        return rk4_step(self, x, u, dt)


def rk4_step(system, x, u, dt):
    """Classical fourth-order Runge-Kutta step with ``u`` held over ``[0, dt]``."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    x = np.asarray(x, dtype=float)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    k1 = system.rhs(x, u)
    k2 = system.rhs(x + 0.5 * dt * k1, u)
    k3 = system.rhs(x + 0.5 * dt * k2, u)
    k4 = system.rhs(x + dt * k3, u)
    x_next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(x_next)):
        raise IntegrationError(f"integration blew up stepping from {x} with u={u}, dt={dt}")
    return x_next


@dataclass(frozen=True)
class DuffingParams:
    alpha: float = 1.0
    beta: float = -1.0
    delta: float = 0.0


def duffing_vector_field(x, u, params=DuffingParams()):
    """Controlled Duffing field ``(x2, -delta x2 - beta x1 - alpha x1^3 + (2 + sin x1) u)``."""
    alpha, beta, delta = params.alpha, params.beta, params.delta
    x1, x2 = float(x[0]), float(x[1])
    u = float(np.ravel(u)[0]) if np.size(u) else 0.0
    return np.array(
        [x2, -delta * x2 - beta * x1 - alpha * x1**3 + (2.0 + np.sin(x1)) * u]
    )


def duffing(alpha=1.0, beta=-1.0, delta=0.0):
    """The controlled Duffing oscillator as a continuous-time :class:`ControlAffineSystem`."""
    p = DuffingParams(alpha, beta, delta)

    def drift(x):
        return np.array([x[1], -p.delta * x[1] - p.beta * x[0] - p.alpha * x[0] ** 3])

    def effectiveness(x):
        return np.array([[0.0], [2.0 + np.sin(x[0])]])

    return ControlAffineSystem(2, 1, drift, effectiveness, discrete=False, name="duffing")


def duffing_energy(x, alpha=1.0, beta=-1.0):
    """Undriven, undamped Duffing energy ``x2^2/2 + beta x1^2/2 + alpha x1^4/4``."""
    x = np.asarray(x, dtype=float)
    return 0.5 * x[..., 1] ** 2 + 0.5 * beta * x[..., 0] ** 2 + 0.25 * alpha * x[..., 0] ** 4


def linear_system(A, B):
    """Discrete linear system ``x+ = A x + B u`` as a native map."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    return ControlAffineSystem(
        A.shape[0], B.shape[1], lambda x: A @ x, lambda x: B, discrete=True, name="linear"
    )


@dataclass(frozen=True)
class FeedbackLaw:
    """State-feedback ``u = mu(x)``.

    Build with :meth:`zero`, :meth:`linear` or :meth:`custom`; only the zero and
    linear kinds are serializable.
    """

    kind: str
    m: int
    K: Optional[np.ndarray] = field(default=None, compare=False)
    fn: Optional[Callable] = field(default=None, compare=False)

    @classmethod
    def zero(cls, m=1):
        return cls("zero", int(m))

    @classmethod
    def linear(cls, K):
        K = np.atleast_2d(np.asarray(K, dtype=float))
        if not np.all(np.isfinite(K)):
            raise ValueError("feedback gain contains non-finite entries")
        K.setflags(write=False)
        return cls("linear", K.shape[0], K=K)

    @classmethod
    def custom(cls, fn, m):
        return cls("custom", int(m), fn=fn)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            return np.zeros(self.m)
        if self.kind == "linear":
            if self.K.shape[1] != x.shape[0]:
                raise ValueError(f"feedback gain is {self.K.shape}, state has dimension {x.shape[0]}")
            return self.K @ x
        u = np.atleast_1d(np.asarray(self.fn(x), dtype=float))
        if u.shape != (self.m,):
            raise ValueError(f"feedback returned shape {u.shape}, expected ({self.m},)")
        return u

    def evaluate_many(self, X):
        """Apply the law to each column of an ``(n, M)`` state matrix; returns ``(m, M)``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind == "zero":
            return np.zeros((self.m, X.shape[1]))
        if self.kind == "linear":
            if self.K.shape[1] != X.shape[0]:
                raise ValueError(f"feedback gain is {self.K.shape}, states have dimension {X.shape[0]}")
            return self.K @ X
        return np.column_stack([self(X[:, k]) for k in range(X.shape[1])])

    def to_dict(self):
        if self.kind == "zero":
            return {"kind": "zero", "m": self.m}
        if self.kind == "linear":
            return {"kind": "linear", "K": self.K.tolist()}
        raise ValueError("custom feedback laws are not serializable")

    @classmethod
    def from_dict(cls, d):
        if d["kind"] == "zero":
            return cls.zero(d.get("m", 1))
        if d["kind"] == "linear":
            return cls.linear(d["K"])
        raise ValueError(f"cannot deserialize feedback kind {d['kind']!r}")


def as_feedback(mu, m=None):
    """Coerce ``None``, a gain matrix, a callable or a :class:`FeedbackLaw`."""
    if isinstance(mu, FeedbackLaw):
        return mu
    if mu is None:
        return FeedbackLaw.zero(1 if m is None else m)
    if callable(mu):
        if m is None:
            raise ValueError("input dimension m is required for a callable feedback")
        return FeedbackLaw.custom(mu, m)
    return FeedbackLaw.linear(mu)


@dataclass
class SamplingConfig:
    """Where training states and inputs are drawn.

    ``layout="grid"`` places ``prod(counts)`` states on an endpoint-inclusive
    grid over ``bounds``; ``layout="uniform"`` draws ``n_samples`` states
    uniformly in the box. Inputs are always uniform in ``input_bounds``.
    """

    dt: float = 0.1
    bounds: Sequence = ((-3.0, 3.0), (-3.0, 3.0))
    counts: Sequence = (15, 15)
    input_bounds: Sequence = ((-2.0, 2.0),)
    seed: int = 0
    layout: str = "grid"
    n_samples: Optional[int] = None

    def __post_init__(self):
        self.bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        self.input_bounds = tuple((float(lo), float(hi)) for lo, hi in self.input_bounds)
        self.counts = tuple(int(c) for c in self.counts)
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        for lo, hi in self.bounds + self.input_bounds:
            if not lo <= hi:
                raise ValueError(f"bounds must be ordered, got ({lo}, {hi})")
        if self.layout == "grid":
            if len(self.counts) != len(self.bounds):
                raise ValueError("one grid count per state axis is required")
            if any(c < 1 for c in self.counts):
                raise ValueError("grid counts must be >= 1")
        elif self.layout == "uniform":
            if self.n_samples is None or int(self.n_samples) < 1:
                raise ValueError("uniform layout needs n_samples >= 1")
        else:
            raise ValueError(f"unknown layout {self.layout!r}")

    def to_dict(self):
        return {
            "dt": self.dt,
            "bounds": [list(b) for b in self.bounds],
            "counts": list(self.counts),
            "input_bounds": [list(b) for b in self.input_bounds],
            "seed": self.seed,
            "layout": self.layout,
            "n_samples": self.n_samples,
        }


def sample_states(config, rng):
    """Initial states of a snapshot set as an ``(n, M)`` matrix."""
    if config.layout == "grid":
        axes = [np.linspace(lo, hi, c) for (lo, hi), c in zip(config.bounds, config.counts)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.vstack([g.ravel() for g in mesh])
    lo = np.array([b[0] for b in config.bounds])
    hi = np.array([b[1] for b in config.bounds])
    return rng.uniform(lo, hi, size=(int(config.n_samples), lo.size)).T


def generate_snapshots(system, config):
    """Sample states and inputs per ``config`` and push each state one step."""
    rng = np.random.default_rng(config.seed)
    X = sample_states(config, rng)
    if X.shape[0] != system.n:
        raise ValueError(f"sampling bounds have {X.shape[0]} axes, system has n={system.n}")
    if len(config.input_bounds) != system.m:
        raise ValueError(f"{len(config.input_bounds)} input bounds given, system has m={system.m}")
    M = X.shape[1]
    lo = np.array([b[0] for b in config.input_bounds])
    hi = np.array([b[1] for b in config.input_bounds])
    U = rng.uniform(lo, hi, size=(M, system.m)).T
    Y = np.empty_like(X)
    for k in range(M):
        try:
            Y[:, k] = system.step(X[:, k], U[:, k], config.dt)
        except IntegrationError as exc:
            raise IntegrationError(f"sample {k} (x={X[:, k]}, u={U[:, k]}): {exc}") from None
    return SnapshotSet(X, U, Y)


def rollout_true(system, mu, x0, steps, dt, bound=1e8):
    """Closed-loop ground truth ``x_{k+1} = step(x_k, mu(x_k))``.

    Returns ``steps + 1`` records unless the state blows up or leaves the
    ``bound`` ball, in which case the list is truncated and a
    :class:`DivergenceWarning` is issued.
    """
    steps = check_steps(steps)
    x = check_vector(x0, "x0", dim=system.n)
    mu = as_feedback(mu, system.m)
    records = [TrajectoryRecord(0, 0.0, x.copy())]
    for k in range(1, steps + 1):
        try:
            x = system.step(x, mu(x), dt)
        except IntegrationError as exc:
            warnings.warn(f"true rollout truncated at step {k}: {exc}", DivergenceWarning, stacklevel=2)
            break
        if np.max(np.abs(x)) > bound:
            warnings.warn(f"true rollout exceeded bound {bound} at step {k}", DivergenceWarning, stacklevel=2)
            break
        records.append(TrajectoryRecord(k, k * dt, x.copy()))
    return records
