"""Shared numeric primitives: Jacobi eigensolver, radial quadrature, seeded RNG."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

JACOBI_MAX_SWEEPS = 100
DEFAULT_RADIAL_STEPS = 65536


class ConvergenceError(RuntimeError):
    pass


class QuadratureError(RuntimeError):
    pass


def sym_eigen(m, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Eigendecomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, Q)`` with eigenvalues sorted in descending order and
    the columns of ``Q`` the matching orthonormal eigenvectors, so that
    ``Q @ diag(eigenvalues) @ Q.T`` reproduces ``m``.

    Raises ConvergenceError if the off-diagonal mass does not vanish within
    ``max_sweeps`` full sweeps.
    """
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    if not np.array_equal(a, a.T):
        raise ValueError("matrix is not symmetric")
    n = a.shape[0]
    q = np.eye(n)
    scale = np.linalg.norm(a)
    if n < 2 or scale == 0.0:
        return _sorted_pair(np.diag(a).copy(), q)
    tol = n * np.finfo(float).eps * scale

    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol:
            return _sorted_pair(np.diag(a).copy(), q)
        for p in range(n - 1):
            for r in range(p + 1, n):
                apr = a[p, r]
                if apr == 0.0:
                    continue
                # Rutishauser's stable rotation
                diff = a[r, r] - a[p, p]
                if abs(apr) < 1e-150 * abs(diff):
                    t = apr / diff  # small-angle limit, avoids overflow in tau
                else:
                    tau = diff / (2.0 * apr)
                    t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                rot_p = a[:, p].copy()
                rot_r = a[:, r].copy()
                a[:, p] = c * rot_p - s * rot_r
                a[:, r] = s * rot_p + c * rot_r
                rot_p = a[p, :].copy()
                rot_r = a[r, :].copy()
                a[p, :] = c * rot_p - s * rot_r
                a[r, :] = s * rot_p + c * rot_r
                a[p, r] = a[r, p] = 0.0
                qp = q[:, p].copy()
                qr = q[:, r].copy()
                q[:, p] = c * qp - s * qr
                q[:, r] = s * qp + c * qr
    raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")


def _sorted_pair(values, vectors):
    order = np.argsort(-values, kind="stable")
    return values[order], vectors[:, order]


def sphere_surface(n: int) -> float:
    """Surface area of the unit sphere in R^n (2 for n=1: the two endpoints)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def simpson(values, h: float) -> float:
    """Composite Simpson rule on equally spaced samples (odd sample count)."""
    y = np.asarray(values, dtype=float)
    if y.shape[0] < 3 or y.shape[0] % 2 == 0:
        raise ValueError("composite Simpson needs an odd number (>= 3) of samples")
    return float(h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum()))


def integrate_radial(
    g: Callable,
    n: int,
    r_max: float,
    steps: int = DEFAULT_RADIAL_STEPS,
    tail_bound: Callable[[float], float] | None = None,
    tol: float = 1e-10,
) -> float:
    """Integrate a radial profile over R^n: ``Surf(n) * int_0^r_max g(rho) rho^(n-1) drho``.

    ``g`` must accept a numpy array of radii. ``steps`` is the number of Simpson
    subintervals (rounded up to even). If ``tail_bound`` is given it must bound
    the discarded mass beyond ``r_max``; a bound above ``tol`` is an error.
    """
    if steps < 2:
        raise ValueError("steps must be >= 2")
    if r_max <= 0:
        raise ValueError("r_max must be positive")
    if tail_bound is not None:
        tail = tail_bound(r_max)
        if not tail <= tol:
            raise QuadratureError(
                f"tail beyond r_max={r_max} is bounded by {tail:.3e} > tol={tol:.1e}; increase r_max"
            )
    steps += steps % 2
    rho = np.linspace(0.0, r_max, steps + 1)
    integrand = np.asarray(g(rho), dtype=float) * rho ** (n - 1)
    return sphere_surface(n) * simpson(integrand, r_max / steps)


class Rng:
    """Seeded generator backed by numpy's PCG64 (portable, documented stream)."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def gaussian(self, mean: float = 0.0, stddev: float = 1.0, size=None):
        return rng_gaussian(self, mean, stddev, size)

    def integers(self, low, high, size=None):
        return self._gen.integers(low, high, size=size)

    def permutation(self, n: int):
        return self._gen.permutation(n)

    def spawn_seed(self) -> int:
        return int(self._gen.integers(0, 2**63 - 1))


def rng_gaussian(rng: Rng, mean: float, stddev: float, size=None):
    """Box-Muller normal draws from the generator's uniform stream.

    ``stddev == 0`` returns ``mean`` exactly.
    """
    if stddev < 0:
        raise ValueError("stddev must be non-negative")
    count = 1 if size is None else int(np.prod(size))
    pairs = (count + 1) // 2
    u1 = 1.0 - rng.generator.random(pairs)  # in (0, 1]
    u2 = rng.generator.random(pairs)
    radius = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([radius * np.cos(2 * np.pi * u2), radius * np.sin(2 * np.pi * u2)])[:count]
    out = mean + stddev * z if stddev > 0 else np.full(count, float(mean))
    if size is None:
        return float(out[0])
    return out.reshape(size)
