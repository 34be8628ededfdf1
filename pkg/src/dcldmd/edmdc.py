"""EDMD with control: a lifted linear predictor ``z+ = A z + B u``, ``x = C z``."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from pathlib import Path

import numpy as np
import scipy.linalg
from scipy.spatial.distance import cdist

from ._validation import check_nonnegative, check_points, check_steps, check_vector
from .exceptions import DivergenceWarning
from .simulate import as_feedback


@dataclass(frozen=True)
class LiftingDictionary:
    """Feature map ``psi``.

    ``kind="state_rbf"``: ``(x, rbf(||x - c_1||), ..., rbf(||x - c_N||))`` with
    ``rbf`` one of ``thinplate`` (``r^2 log r``, 0 at ``r = 0``) or
    ``gaussian`` (``exp(-(r / scale)^2)``). ``centers`` is ``(n, N)``.

    ``kind="monomials"``: all monomials up to ``degree``, constant first.
    """

    kind: str = "state_rbf"
    centers: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)), compare=False)
    rbf: str = "thinplate"
    scale: float = 1.0
    degree: int = 1
    n: int = 0

    def __post_init__(self):
        if self.kind not in ("state_rbf", "monomials"):
            raise ValueError(f"unknown dictionary kind {self.kind!r}")
        if self.kind == "state_rbf":
            if self.rbf not in ("thinplate", "gaussian"):
                raise ValueError(f"unknown rbf {self.rbf!r}")
            if not self.scale > 0:
                raise ValueError("rbf scale must be positive")
            centers = np.asarray(self.centers, dtype=float)
            if centers.size == 0:
                centers = np.zeros((self.n, 0))
            centers = np.atleast_2d(centers)
            if self.n and centers.shape[0] != self.n:
                raise ValueError(f"centers have dimension {centers.shape[0]}, expected {self.n}")
            object.__setattr__(self, "centers", centers)
            object.__setattr__(self, "n", centers.shape[0])
        elif int(self.degree) < 0:
            raise ValueError("degree must be nonnegative")
        if self.n < 1:
            raise ValueError("state dimension n must be >= 1")

    @property
    def embeds_state(self):
        return self.kind == "state_rbf"

    def _exponents(self):
        return [
            combo
            for d in range(int(self.degree) + 1)
            for combo in combinations_with_replacement(range(self.n), d)
        ]

    @property
    def n_features(self):
        if self.kind == "state_rbf":
            return self.n + self.centers.shape[1]
        return len(self._exponents())

    def transform(self, X):
        """Lift each row of ``X`` (shape ``(p, n)``); returns ``(p, N_z)``."""
        X = check_points(X, "X", dim=self.n)
        if self.kind == "monomials":
            return np.column_stack(
                [np.prod(X[:, list(c)], axis=1) if c else np.ones(len(X)) for c in self._exponents()]
            )
        if self.centers.shape[1] == 0:
            return X.copy()
        r = cdist(X, self.centers.T)
        if self.rbf == "thinplate":
            with np.errstate(divide="ignore", invalid="ignore"):
                feats = np.where(r > 0, r**2 * np.log(r), 0.0)
        else:
            feats = np.exp(-((r / self.scale) ** 2))
        return np.hstack([X, feats])

    def to_dict(self):
        return {
            "kind": self.kind,
            "centers": self.centers.tolist() if self.kind == "state_rbf" else [],
            "rbf": self.rbf,
            "scale": self.scale,
            "degree": int(self.degree),
            "n": self.n,
        }


def lift(d, x):
    """``psi(x)`` for a single state."""
    x = check_vector(x, "x", dim=d.n)
    return d.transform(x[None, :])[0]


def default_dictionary(bounds, n_centers=100, seed=0, rbf="thinplate", scale=1.0):
    """State plus ``n_centers`` RBFs with centers uniform in the box ``bounds``."""
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    rng = np.random.default_rng(seed)
    centers = rng.uniform(lo, hi, size=(n_centers, lo.size)).T
    return LiftingDictionary("state_rbf", centers=centers, rbf=rbf, scale=scale, n=lo.size)


@dataclass
class EdmdcModel:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    dictionary: LiftingDictionary
    ridge: float = 0.0


def fit_edmdc(S, d, ridge=1e-10):
    """Least-squares ``[A B]`` from lifted snapshot pairs.

    Minimizes ``sum_k ||psi(y_k) - A psi(x_k) - B u_k||^2 + ridge ||[A B]||^2``.
    ``C`` is ``[I 0]`` for state-embedding dictionaries and a least-squares fit
    otherwise.
    """
    S.check()
    ridge = check_nonnegative(ridge, "ridge")
    if d.n != S.n:
        raise ValueError(f"dictionary is for n={d.n}, data has n={S.n}")
    Zx = d.transform(S.X.T)  # (M, Nz)
    Zy = d.transform(S.Y.T)
    W = np.hstack([Zx, S.U.T])  # (M, Nz + m)
    p = W.shape[1]
    if ridge == 0:
        rank = np.linalg.matrix_rank(W)
        if rank < p:
            raise np.linalg.LinAlgError(
                f"regression matrix has rank {rank} < {p} unknowns per output; use ridge > 0"
            )
        Theta = scipy.linalg.lstsq(W, Zy)[0]
    else:
        W_aug = np.vstack([W, np.sqrt(ridge) * np.eye(p)])
        Z_aug = np.vstack([Zy, np.zeros((p, Zy.shape[1]))])
        Theta = scipy.linalg.lstsq(W_aug, Z_aug)[0]
    AB = Theta.T
    nz = Zx.shape[1]
    A, B = AB[:, :nz], AB[:, nz:]
    if d.embeds_state:
        C = np.hstack([np.eye(S.n), np.zeros((S.n, nz - S.n))])
    else:
        C = scipy.linalg.lstsq(Zx, S.X.T)[0].T
    return EdmdcModel(A, B, C, d, ridge)


def rollout_edmdc(model, mu, x0, steps, bound=1e8):
    """Closed-loop rollout ``z+ = A z + B mu(C z)`` from ``z0 = psi(x0)``; returns ``C z_k``."""
    steps = check_steps(steps)
    mu = as_feedback(mu, model.B.shape[1])
    z = lift(model.dictionary, x0)
    out = [model.C @ z]
    for k in range(1, steps + 1):
        z = model.A @ z + model.B @ mu(out[-1])
        x = model.C @ z
        if not np.all(np.isfinite(z)) or np.max(np.abs(x)) > bound:
            warnings.warn(
                f"EDMDc rollout left the magnitude bound {bound:g} at step {k}; truncated",
                DivergenceWarning,
                stacklevel=2,
            )
            break
        out.append(x)
    return np.array(out)


def save_edmdc(model, path):
    d = model.dictionary
    path = Path(path)
    with path.open("wb") as fh:
        np.savez(
            fh,
            format=np.array("edmdc-model-v1"),
            A=model.A,
            B=model.B,
            C=model.C,
            ridge=np.array(model.ridge),
            dict_kind=np.array(d.kind),
            dict_centers=d.centers if d.kind == "state_rbf" else np.zeros((d.n, 0)),
            dict_rbf=np.array(d.rbf),
            dict_scale=np.array(d.scale),
            dict_degree=np.array(int(d.degree)),
            dict_n=np.array(d.n),
        )
    return path


def load_edmdc(path):
    with np.load(path, allow_pickle=False) as z:
        if "format" not in z or str(z["format"]) != "edmdc-model-v1":
            raise ValueError(f"{path}: not an EDMDc model file")
        d = LiftingDictionary(
            str(z["dict_kind"]),
            centers=z["dict_centers"],
            rbf=str(z["dict_rbf"]),
            scale=float(z["dict_scale"]),
            degree=int(z["dict_degree"]),
            n=int(z["dict_n"]),
        )
        return EdmdcModel(z["A"], z["B"], z["C"], d, float(z["ridge"]))
