"""Scalar kernels, Gram matrices and the diagonal vector-valued inner product.

The operator-valued kernel used for control pairs ``(x, u)`` is the scalar
kernel replicated on the diagonal of an ``(m+1) x (m+1)`` matrix, so its inner
products factor into a kernel value times a dot product of augmented inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from ._validation import check_points, check_vector

KERNEL_KINDS = ("gaussian", "expdot", "linear")

_ALIASES = {
    "gaussian": "gaussian",
    "rbf": "gaussian",
    "expdot": "expdot",
    "exponentialdotproduct": "expdot",
    "exponential_dot_product": "expdot",
    "linear": "linear",
}


@dataclass(frozen=True)
class Kernel:
    """A symmetric scalar kernel.

    Parameters
    ----------
    kind : {"gaussian", "expdot", "linear"}
        ``gaussian``: ``exp(-||x - y||^2 / sigma)``.
        ``expdot``: ``exp(x.y / sigma)``.
        ``linear``: ``x.y + offset`` (``sigma`` is ignored).
    sigma : float
        Width; sits in the denominator of the exponent.
    offset : float
        Constant added by the linear kind. With ``offset > 0`` the span
        contains constant functions, which control-affine linear dynamics
        need to be represented exactly.
    """

    kind: str = "gaussian"
    sigma: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        kind = _ALIASES.get(str(self.kind).lower())
        if kind is None:
            raise ValueError(f"unknown kernel kind {self.kind!r}; expected one of {KERNEL_KINDS}")
        object.__setattr__(self, "kind", kind)
        sigma = float(self.sigma)
        if not np.isfinite(sigma) or sigma <= 0:
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")
        object.__setattr__(self, "sigma", sigma)
        offset = float(self.offset)
        if not np.isfinite(offset) or offset < 0:
            raise ValueError(f"offset must be nonnegative and finite, got {self.offset}")
        if offset and kind != "linear":
            raise ValueError("offset only applies to the linear kernel")
        object.__setattr__(self, "offset", offset)

    def __call__(self, x, y):
        return kernel_eval(self, x, y)

    def gram(self, A, B=None):
        return gram(self, A, A if B is None else B)


def as_kernel(kernel, sigma=None, offset=0.0):
    """Coerce a ``Kernel`` or a kind name into a ``Kernel``."""
    if isinstance(kernel, Kernel):
        return kernel
    return Kernel(kernel, 1.0 if sigma is None else sigma, offset)


def _pairwise(kernel, A, B):
    if kernel.kind == "gaussian":
        return np.exp(-cdist(A, B, "sqeuclidean") / kernel.sigma)
    inner = A @ B.T
    if kernel.kind == "expdot":
        return np.exp(inner / kernel.sigma)
    return inner + kernel.offset if kernel.offset else inner


def kernel_eval(kernel, x, y):
    """Evaluate ``kernel`` at a pair of points of equal dimension."""
    x = check_vector(x, "x")
    y = check_vector(y, "y", dim=x.shape[0])
    return float(_pairwise(kernel, x[None, :], y[None, :])[0, 0])


def gram(kernel, A, B):
    """Matrix of kernel values ``K[i, j] = k(A[i], B[j])``.

    ``A`` and ``B`` are point lists shaped ``(p, n)`` and ``(q, n)``. A 1-d
    array is read as a list of scalar points.
    """
    A = check_points(A, "A")
    B = check_points(B, "B", dim=A.shape[1])
    K = _pairwise(kernel, A, B)
    if A is B or (A.shape == B.shape and np.array_equal(A, B)):
        # exact symmetry, the pairwise routines can differ in the last ulp
        K = 0.5 * (K + K.T)
    return K


def vv_inner(kernel, x_i, a, x_j, b):
    """Inner product of two diagonal-kernel sections.

    ``<K_{x_i, a}, K_{x_j, b}> = k(x_j, x_i) * (a . b)`` where ``a`` and ``b``
    are augmented inputs ``(1, u)``.
    """
    a = check_vector(a, "a")
    b = check_vector(b, "b", dim=a.shape[0])
    return kernel_eval(kernel, x_j, x_i) * float(a @ b)


def augment(U):
    """Prepend a row of ones to an ``(m, M)`` input matrix, giving ``(1, u)`` columns."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    return np.vstack([np.ones((1, U.shape[1])), U])
