"""scikit-learn compatible wrappers around the DCLDMD and EDMDc cores.

Both estimators take sample-major arrays: ``X`` and ``Y`` are ``(M, n)``
(states and their successors) and ``U`` is ``(M, m)``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import core, edmdc
from .data import SnapshotSet
from .kernels import Kernel
from .simulate import as_feedback


def _snapshots(X, Y, U):
    if isinstance(X, SnapshotSet):
        return X.check()
    if Y is None or U is None:
        raise ValueError("Y (successor states) and U (inputs) are required")
    return SnapshotSet.from_rows(X, U, Y).check()


class DCLDMD(BaseEstimator):
    """Discrete control Liouville DMD.

    Predicts the closed-loop response to ``feedback`` from open-loop snapshot
    triples.

    Parameters
    ----------
    kernel : {"gaussian", "expdot", "linear"}
    sigma : float
        Kernel width.
    epsilon : float
        Diagonal regularization of both Gram matrices.
    feedback : array-like of shape (m, n), FeedbackLaw, or None
        Feedback law to predict under; ``None`` means zero input.
    solver : {"solve", "lstsq"}
        ``"lstsq"`` tolerates rank-deficient Gram matrices.
    kernel_offset : float
        Constant term of the linear kernel.
    bound : float
        Magnitude at which rollouts are truncated.

    Attributes
    ----------
    model_ : DcldmdModel
    eigenvalues_ : ndarray of shape (M,)
    modes_ : ndarray of shape (n, M)
    """

    def __init__(
        self,
        kernel="gaussian",
        sigma=10.0,
        epsilon=1e-6,
        feedback=None,
        solver="solve",
        kernel_offset=0.0,
        bound=1e8,
    ):
        self.kernel = kernel
        self.sigma = sigma
        self.epsilon = epsilon
        self.feedback = feedback
        self.solver = solver
        self.kernel_offset = kernel_offset
        self.bound = bound

    def _config(self, m):
        return core.DcldmdConfig(
            kernel=Kernel(self.kernel, self.sigma, self.kernel_offset),
            epsilon=self.epsilon,
            feedback=as_feedback(self.feedback, m),
            solver=self.solver,
        )

    def fit(self, X, Y=None, U=None):
        """Fit on snapshot triples, or on a ``SnapshotSet`` passed as ``X``."""
        S = _snapshots(X, Y, U)
        self.model_ = core.fit(S, self._config(S.m))
        self.n_features_in_ = S.n
        return self

    @classmethod
    def from_model(cls, model, **params):
        est = cls(kernel=model.kernel.kind, sigma=model.kernel.sigma, epsilon=model.epsilon,
                  feedback=model.feedback, kernel_offset=model.kernel.offset, **params)
        est.model_ = model
        est.n_features_in_ = model.n
        return est

    @property
    def eigenvalues_(self):
        check_is_fitted(self, "model_")
        return self.model_.lambdas

    @property
    def modes_(self):
        check_is_fitted(self, "model_")
        return self.model_.Xi

    def transform(self, X):
        """Normalized eigenfunctions at each row of ``X``; complex ``(p, M)``."""
        check_is_fitted(self, "model_")
        return core.eval_eigenfunctions(self.model_, np.atleast_2d(np.asarray(X, dtype=float)))

    def predict(self, X):
        """One closed-loop step from each row of ``X`` via the indirect map."""
        check_is_fitted(self, "model_")
        return core.one_step(self.model_, X)

    def simulate(self, x0, steps, method="indirect"):
        """Roll out ``steps`` closed-loop steps from ``x0``; returns ``(steps + 1, n)``."""
        check_is_fitted(self, "model_")
        if method == "indirect":
            return core.predict_indirect(self.model_, x0, steps, self.bound)
        if method == "direct":
            return core.predict_direct(self.model_, x0, steps, self.bound)
        raise ValueError(f"unknown method {method!r}; expected 'direct' or 'indirect'")


class EDMDc(BaseEstimator):
    """Lifted linear predictor with control (the comparison baseline).

    Parameters
    ----------
    dictionary : LiftingDictionary or None
        ``None`` lifts with the identity (no RBFs).
    ridge : float
    feedback : array-like, FeedbackLaw or None
        Used by :meth:`simulate` and :meth:`predict`.
    """

    def __init__(self, dictionary=None, ridge=1e-10, feedback=None, bound=1e8):
        self.dictionary = dictionary
        self.ridge = ridge
        self.feedback = feedback
        self.bound = bound

    def fit(self, X, Y=None, U=None):
        S = _snapshots(X, Y, U)
        d = self.dictionary
        if d is None:
            d = edmdc.LiftingDictionary("state_rbf", n=S.n)
        self.model_ = edmdc.fit_edmdc(S, d, self.ridge)
        self.n_features_in_ = S.n
        return self

    def transform(self, X):
        check_is_fitted(self, "model_")
        return self.model_.dictionary.transform(X)

    def predict(self, X):
        """One closed-loop step ``C (A psi(x) + B mu(x))`` per row of ``X``."""
        check_is_fitted(self, "model_")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        m = self.model_
        mu = as_feedback(self.feedback, m.B.shape[1])
        Z = m.dictionary.transform(X)
        Uc = mu.evaluate_many((Z @ m.C.T).T)
        return (Z @ m.A.T + Uc.T @ m.B.T) @ m.C.T

    def simulate(self, x0, steps):
        check_is_fitted(self, "model_")
        return edmdc.rollout_edmdc(self.model_, self.feedback, x0, steps, self.bound)
