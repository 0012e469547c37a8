"""Quadratic decision functions ``x -> w_q * x^T A x + w^T x + theta``.

Forms are classified by the sign pattern of the spectrum of the symmetric part
of ``A``. Signed "singular values" are taken to be the eigenvalues of
``(A + A^T) / 2``; ``x^T A x`` only sees that part anyway.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core_math import sym_eigen

DEFAULT_CLASSIFY_TOL = 1e-9


class FormClass(str, Enum):
    AFFINE = "affine"
    CIRCULAR = "circular"
    ELLIPTIC = "elliptic"
    HYPERBOLIC = "hyperbolic"
    ULTRAHYPERBOLIC = "ultrahyperbolic"
    PARABOLIC = "parabolic"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class QuadraticForm:
    A: np.ndarray
    w: np.ndarray
    w_q: float = 1.0
    theta: float = 0.0

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.A, dtype=float))
        w = np.atleast_1d(np.asarray(self.w, dtype=float))
        if a.shape != (w.shape[0], w.shape[0]):
            raise ValueError(f"A has shape {a.shape} but w has length {w.shape[0]}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(w))):
            raise ValueError("non-finite coefficients")
        sym = 0.5 * (a + a.T)
        object.__setattr__(self, "A", sym)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "w_q", float(self.w_q))
        object.__setattr__(self, "theta", float(self.theta))

    @property
    def n(self) -> int:
        return self.w.shape[0]


@dataclass(frozen=True)
class CanonicalForm:
    zeta: np.ndarray
    nu: float
    w_q: float
    a: np.ndarray

    def a_norm_sq(self, x) -> np.ndarray:
        """``x^T A x - 2 sum_i zeta_i a_i^2 x_i + zeta^T A zeta`` for ``A = diag(a)``.

        This is the completed square as the coefficients ``zeta_i = -w_i/(2 a_i^2 w_q)``
        define it; it equals ``||x - zeta||^2`` only when every ``a_i = 1``.
        """
        x = np.asarray(x, dtype=float)
        a = self.a
        return (
            (x * x) @ a
            - 2.0 * x @ (self.zeta * a * a)
            + float(self.zeta @ (a * self.zeta))
        )

    def evaluate(self, x):
        return self.w_q * self.a_norm_sq(x) - self.nu


def evaluate(q: QuadraticForm, x):
    """Decision value for one point ``(n,)`` or a batch ``(m, n)``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != q.n:
        raise ValueError(f"input has dimension {x.shape[-1]}, form expects {q.n}")
    quad = np.einsum("...i,ij,...j->...", x, q.A, x)
    out = q.w_q * quad + x @ q.w + q.theta
    if out.ndim == 0:
        return float(out)
    return out


def classify(q: QuadraticForm | np.ndarray, tol: float = DEFAULT_CLASSIFY_TOL) -> FormClass:
    """Label the form by the sign pattern of its spectrum.

    Eigenvalues with ``|lam| <= tol * max|lam|`` count as zero. A one-dimensional
    nonzero ``A`` is elliptic. Patterns with two or more zero eigenvalues next to
    nonzero ones, or zeros mixed with both signs, are ``DEGENERATE``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = q.A if isinstance(q, QuadraticForm) else np.atleast_2d(np.asarray(q, dtype=float))
    a = 0.5 * (a + a.T)
    lam, _ = sym_eigen(a)
    peak = np.max(np.abs(lam)) if lam.size else 0.0
    if peak == 0.0:
        return FormClass.AFFINE
    zero = np.abs(lam) <= tol * peak
    pos = int(np.sum((lam > 0) & ~zero))
    neg = int(np.sum((lam < 0) & ~zero))
    zeros = int(np.sum(zero))

    if zeros == 0:
        if pos == 0 or neg == 0:
            if np.allclose(a, np.eye(a.shape[0]), rtol=0.0, atol=tol):
                return FormClass.CIRCULAR
            return FormClass.ELLIPTIC
        if min(pos, neg) == 1:
            return FormClass.HYPERBOLIC
        return FormClass.ULTRAHYPERBOLIC
    if zeros == 1 and (pos == 0 or neg == 0):
        return FormClass.PARABOLIC
    return FormClass.DEGENERATE


def canonicalize(q: QuadraticForm) -> CanonicalForm:
    """Center/level form of a diagonal quadratic decision function.

    With ``A = diag(a)``, all ``a_i != 0`` and ``w_q != 0``:
    ``zeta_i = -w_i / (2 a_i^2 w_q)`` and ``nu = w_q zeta^T A zeta - theta``, so that
    ``evaluate(q, x) == w_q * ||x - zeta||_A^2 - nu`` (see ``CanonicalForm.a_norm_sq``).
    """
    if q.w_q == 0.0:
        raise ValueError("canonical form needs a nonzero quadratic weight")
    if np.count_nonzero(q.A - np.diag(np.diag(q.A))):
        raise ValueError("canonical form needs a diagonal A")
    a = np.diag(q.A).copy()
    if np.any(a == 0.0):
        raise ValueError("canonical form needs every diagonal entry of A nonzero")
    zeta = -q.w / (2.0 * a * a * q.w_q)
    nu = q.w_q * float(zeta @ (a * zeta)) - q.theta
    return CanonicalForm(zeta=zeta, nu=nu, w_q=q.w_q, a=a)
