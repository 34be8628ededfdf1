"""Finite-rank discrete control Liouville operator: construction, spectrum, prediction.

Matrix conventions, with ``M`` snapshots ``(x_k, u_k, y_k)`` and feedback ``mu``:

* ``Gt[i, j] = k(x_i, x_j)``                      scalar Gram matrix
* ``It[i, k] = k(y_k, x_i)``                      successor interaction
* ``Gv[i, j] = k(x_j, x_i) (1 + u_i . u_j)``      vector-valued Gram matrix
* ``Iv[j, i] = k(x_i, x_j) (1 + u_i . mu(x_j))``  feedback interaction

and the proxy is ``(Gt + eps I)^-1 Iv (Gv + eps I)^-1 It^T``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.linalg

from ._validation import check_nonnegative, check_square, check_steps, check_vector
from .exceptions import DivergenceWarning, SingularMatrixError
from .kernels import Kernel, as_kernel, augment, gram
from .simulate import FeedbackLaw, as_feedback

SOLVERS = ("solve", "lstsq")
NORMALIZER_FLOOR = 1e-12


def _solve(A, B, solver="solve", assume_a="gen", what="matrix"):
    """Solve ``A Z = B``.

    ``solver="solve"`` factorizes and refuses singular or numerically singular
    systems. ``solver="lstsq"`` returns the minimum-norm least-squares solution
    with singular values below ``max(A.shape) * eps * s_max`` discarded.
    """
    if solver == "lstsq":
        cond = max(A.shape) * np.finfo(float).eps
        return scipy.linalg.lstsq(A, B, cond=cond)[0]
    if solver != "solve":
        raise ValueError(f"unknown solver {solver!r}; expected one of {SOLVERS}")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            Z = scipy.linalg.solve(A, B, assume_a=assume_a, check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
        raise SingularMatrixError(
            f"{what} is singular or ill-conditioned ({exc}); "
            "increase epsilon (epsilon > 0) or use solver='lstsq'"
        ) from None
    if not np.all(np.isfinite(Z)):
        raise SingularMatrixError(f"{what} solve produced non-finite values; increase epsilon")
    return Z


# -- matrix construction ------------------------------------------------------


def build_gram_tilde(kernel, S):
    """``Gt[i, j] = k(x_i, x_j)``."""
    return gram(kernel, S.X.T, S.X.T)


def build_interaction_tilde(kernel, S):
    """``It[i, k] = k(y_k, x_i)``: the successor stands in for the first-order image."""
    return gram(kernel, S.X.T, S.Y.T)


def build_gram_vv(kernel, S, Gt=None):
    """``Gv[i, j] = k(x_j, x_i) (1 + u_i . u_j)``."""
    if Gt is None:
        Gt = build_gram_tilde(kernel, S)
    W = augment(S.U)
    Gv = Gt.T * (W.T @ W)
    return 0.5 * (Gv + Gv.T)


def build_interaction_vv(kernel, S, mu, Gt=None):
    """``Iv[j, i] = k(x_i, x_j) (1 + u_i . mu(x_j))``.

    Rows run over feedback-augmented centers, columns over data-augmented ones.
    """
    mu = as_feedback(mu, S.m)
    if mu.m != S.m:
        raise ValueError(f"feedback has output dimension {mu.m}, data has m={S.m}")
    MU = mu.evaluate_many(S.X)
    if MU.shape != (S.m, S.M):
        raise ValueError(f"feedback produced shape {MU.shape}, expected {(S.m, S.M)}")
    if Gt is None:
        Gt = build_gram_tilde(kernel, S)
    return Gt.T * (augment(MU).T @ augment(S.U))


def assemble_proxy(Gt, It, Gv, Iv, epsilon, solver="solve"):
    """``(Gt + eps I)^-1 Iv (Gv + eps I)^-1 It^T`` by two linear solves."""
    epsilon = check_nonnegative(epsilon, "epsilon")
    M = check_square(Gt, "Gt").shape[0]
    for name, A in (("It", It), ("Gv", Gv), ("Iv", Iv)):
        check_square(A, name, M)
    eye = np.eye(M)
    R = _solve(Gv + epsilon * eye, np.asarray(It).T, solver, "sym", "regularized vector-valued Gram matrix")
    return _solve(Gt + epsilon * eye, Iv @ R, solver, "sym", "regularized Gram matrix")


# -- spectrum ----------------------------------------------------------------


def sort_eigenpairs(lambdas, V):
    """Order by descending modulus, then descending real part, then imaginary part."""
    order = np.lexsort((-lambdas.imag, -lambdas.real, -np.abs(lambdas)))
    return lambdas[order], V[:, order]


def eigendecompose(proxy, Gt):
    """Eigenpairs of ``proxy`` with eigenvectors scaled so ``v^T Gt v = 1``.

    The bilinear (unconjugated) form is used with the principal square root.
    Eigenvectors whose normalizer has modulus below ``1e-12`` keep unit
    Euclidean norm and are reported in the returned mask.

    Returns
    -------
    lambdas : (M,) complex
    V : (M, M) complex
    degenerate : (M,) bool
    """
    proxy = check_square(proxy, "proxy")
    try:
        lambdas, V = scipy.linalg.eig(proxy)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigensolver did not converge: {exc}") from None
    lambdas = lambdas.astype(complex)
    V = V.astype(complex)
    lambdas, V = sort_eigenpairs(lambdas, V)
    q = np.einsum("ij,ik,kj->j", V, Gt, V)
    degenerate = np.abs(q) < NORMALIZER_FLOOR
    scale = np.ones_like(q)
    scale[~degenerate] = np.sqrt(q[~degenerate])
    return lambdas, V / scale, degenerate


def liouville_modes(X, V, Gt, solver="solve", rtol=1e-8):
    """Modes ``Xi = X (V^T Gt)^-1`` so that ``Xi @ phi(x_k) = x_k`` on the data.

    ``V^T Gt`` is routinely ill-conditioned for smooth kernels while the
    solve itself stays accurate, so acceptance is decided by the residual
    ``||Xi V^T Gt - X|| <= rtol ||X||`` rather than by a condition estimate.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    A = np.asarray(Gt) @ V  # (V^T Gt)^T, Gt symmetric
    B = X.T.astype(complex)
    if solver == "lstsq":
        Z = _solve(A, B, "lstsq")
    elif solver == "solve":
        try:
            with warnings.catch_warnings(), np.errstate(all="ignore"):
                warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                Z = scipy.linalg.solve(A, B, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrixError(
                f"V^T Gt is singular ({exc}); inspect the rank of the Gram matrix or increase epsilon"
            ) from None
    else:
        raise ValueError(f"unknown solver {solver!r}; expected one of {SOLVERS}")
    Xi = Z.T
    with np.errstate(all="ignore"):
        resid = np.linalg.norm(Xi @ A.T - X)
    if not np.isfinite(resid) or resid > rtol * np.linalg.norm(X):
        raise SingularMatrixError(
            f"Liouville modes do not reproduce the data (relative residual "
            f"{resid / max(np.linalg.norm(X), 1e-300):.2e}); V^T Gt is numerically singular, "
            "inspect the Gram matrix rank, increase epsilon or use solver='lstsq'"
        )
    return Xi


# -- model -------------------------------------------------------------------


@dataclass
class DcldmdConfig:
    kernel: Kernel = field(default_factory=lambda: Kernel("gaussian", 10.0))
    epsilon: float = 1e-6
    feedback: Optional[FeedbackLaw] = None
    solver: str = "solve"

    def __post_init__(self):
        self.kernel = as_kernel(self.kernel)
        self.epsilon = check_nonnegative(self.epsilon, "epsilon")
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}; expected one of {SOLVERS}")


@dataclass
class OperatorMatrices:
    Gt: np.ndarray
    It: np.ndarray
    Gv: np.ndarray
    Iv: np.ndarray
    A_hat: np.ndarray


@dataclass
class DcldmdModel:
    """Everything needed to evaluate eigenfunctions and roll out predictions.

    ``V`` holds normalized eigenvectors as columns, ``Xi`` the ``(n, M)`` modes
    and ``centers`` the ``(n, M)`` training states.
    """

    lambdas: np.ndarray
    V: np.ndarray
    Xi: np.ndarray
    centers: np.ndarray
    kernel: Kernel
    epsilon: float = 0.0
    degenerate: Optional[np.ndarray] = None
    feedback: Optional[FeedbackLaw] = None

    def __post_init__(self):
        # a fixed memory layout keeps predictions bit-identical across save/load
        self.lambdas = np.ascontiguousarray(self.lambdas, dtype=complex)
        self.V = np.ascontiguousarray(self.V, dtype=complex)
        self.Xi = np.ascontiguousarray(self.Xi, dtype=complex)
        self.centers = np.ascontiguousarray(self.centers, dtype=float)

    @property
    def n(self):
        return self.centers.shape[0]

    @property
    def M(self):
        return self.centers.shape[1]


def build_matrices(S, config):
    """Algorithm steps 1-5: the four kernel matrices and the proxy."""
    kernel = config.kernel
    mu = as_feedback(config.feedback, S.m)
    Gt = build_gram_tilde(kernel, S)
    It = build_interaction_tilde(kernel, S)
    Gv = build_gram_vv(kernel, S, Gt)
    Iv = build_interaction_vv(kernel, S, mu, Gt)
    A_hat = assemble_proxy(Gt, It, Gv, Iv, config.epsilon, config.solver)
    return OperatorMatrices(Gt, It, Gv, Iv, A_hat)


def fit(S, config):
    """Fit a :class:`DcldmdModel` to snapshot set ``S`` under ``config.feedback``."""
    S.check()
    mats = build_matrices(S, config)
    lambdas, V, degenerate = eigendecompose(mats.A_hat, mats.Gt)
    Xi = liouville_modes(S.X, V, mats.Gt, config.solver)
    return DcldmdModel(
        lambdas=lambdas,
        V=V,
        Xi=Xi,
        centers=S.X.copy(),
        kernel=config.kernel,
        epsilon=config.epsilon,
        degenerate=degenerate,
        feedback=as_feedback(config.feedback, S.m),
    )


def eval_eigenfunctions(model, x):
    """Normalized eigenfunctions at ``x``: ``phi_j(x) = sum_i V[i, j] k(x, x_i)``.

    ``x`` may be a single state ``(n,)`` or a batch ``(p, n)``.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = x[None, :] if single else x
    if pts.shape[1] != model.n:
        raise ValueError(f"state has dimension {pts.shape[1]}, model has n={model.n}")
    kx = gram(model.kernel, pts, model.centers.T)  # (p, M)
    phi = kx @ model.V
    return phi[0] if single else phi


def _rollout(model, x0, steps, bound, advance):
    steps = check_steps(steps)
    x0 = check_vector(x0, "x0", dim=model.n)
    out = [x0]
    for k in range(1, steps + 1):
        x = advance(out[-1])
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > bound:
            warnings.warn(
                f"prediction left the magnitude bound {bound:g} at step {k}; truncated",
                DivergenceWarning,
                stacklevel=3,
            )
            break
        out.append(x)
    return np.array(out)


def predict_indirect(model, x0, steps, bound=1e8):
    """Iterate the one-step map ``x -> Re(Xi diag(lambda) phi(x))`` from ``x0``.

    Returns an ``(steps + 1, n)`` array starting at ``x0``; truncated with a
    :class:`DivergenceWarning` if the bound is exceeded.
    """

    def advance(x):
        return np.real(model.Xi @ (model.lambdas * eval_eigenfunctions(model, x)))

    return _rollout(model, x0, steps, bound, advance)


def predict_direct(model, x0, steps, bound=1e8):
    """``x_k = Re(Xi diag(lambda)^k phi(x0))`` for ``k >= 1``; row 0 is ``x0``."""
    x0 = check_vector(x0, "x0", dim=model.n)
    coeffs = [eval_eigenfunctions(model, x0)]

    def advance(_x):
        coeffs[0] = model.lambdas * coeffs[0]
        return np.real(model.Xi @ coeffs[0])

    return _rollout(model, x0, steps, bound, advance)


def one_step(model, X):
    """Apply the one-step map to each row of ``X`` (shape ``(p, n)``)."""
    phi = eval_eigenfunctions(model, np.atleast_2d(X))
    return np.real((phi * model.lambdas) @ model.Xi.T)


def linearization_residual(S, kernel, system, dt=None):
    """Per-snapshot control-induced deviation of the successor interaction.

    For each snapshot ``k`` this is ``max_i |k(y_k, x_i) - k(y0_k, x_i)|`` with
    ``y0_k`` the successor of ``x_k`` under zero input. It vanishes when the
    inputs do and grows with their magnitude, which is where the first-order
    control approximation degrades.
    """
    S.check()
    kernel = as_kernel(kernel)
    zero = np.zeros(S.m)
    Y0 = np.column_stack([system.step(S.X[:, k], zero, dt) for k in range(S.M)])
    It = gram(kernel, S.X.T, S.Y.T)
    It0 = gram(kernel, S.X.T, Y0.T)
    return np.max(np.abs(It - It0), axis=0)


# -- persistence -------------------------------------------------------------


def save_model(model, path):
    """Write ``model`` to a ``.npz`` archive (no pickled objects).

    Keys: ``format``, ``n``, ``M``, ``kernel_kind``, ``sigma``, ``offset``, ``epsilon``,
    ``centers``, ``lambdas_re``/``lambdas_im``, ``V_re``/``V_im``,
    ``Xi_re``/``Xi_im``, ``degenerate`` and ``feedback_K`` (empty if none).
    """
    fb = model.feedback
    K = fb.K if fb is not None and fb.kind == "linear" else np.zeros((0, 0))
    path = Path(path)
    with path.open("wb") as fh:
        np.savez(
            fh,
            format=np.array("dcldmd-model-v1"),
            n=np.array(model.n),
            M=np.array(model.M),
            kernel_kind=np.array(model.kernel.kind),
            sigma=np.array(model.kernel.sigma),
            offset=np.array(model.kernel.offset),
            epsilon=np.array(model.epsilon),
            centers=model.centers,
            lambdas_re=model.lambdas.real,
            lambdas_im=model.lambdas.imag,
            V_re=model.V.real,
            V_im=model.V.imag,
            Xi_re=model.Xi.real,
            Xi_im=model.Xi.imag,
            degenerate=np.zeros(model.M, bool) if model.degenerate is None else model.degenerate,
            feedback_K=K,
            feedback_m=np.array(fb.m if fb is not None else 0),
        )
    return path


def load_model(path):
    with np.load(path, allow_pickle=False) as z:
        if "format" not in z or str(z["format"]) != "dcldmd-model-v1":
            raise ValueError(f"{path}: not a DCLDMD model file")
        K = z["feedback_K"]
        m = int(z["feedback_m"])
        if K.size:
            fb = FeedbackLaw.linear(K)
        elif m:
            fb = FeedbackLaw.zero(m)
        else:
            fb = None
        return DcldmdModel(
            lambdas=z["lambdas_re"] + 1j * z["lambdas_im"],
            V=z["V_re"] + 1j * z["V_im"],
            Xi=z["Xi_re"] + 1j * z["Xi_im"],
            centers=z["centers"],
            kernel=Kernel(str(z["kernel_kind"]), float(z["sigma"]), float(z["offset"])),
            epsilon=float(z["epsilon"]),
            degenerate=z["degenerate"],
            feedback=fb,
        )
