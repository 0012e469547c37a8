"""Circular wavelet frame generated by a normalized sigmoid bump.

The mother function is ``phi(x) = C_d * sigmoid(r^2 - |x|^2)`` with ``C_d``
chosen so that ``phi`` has unit mass on R^n. Kernels and atoms:

    S_k(x, y)     = 2^k phi(2^(k/n) (x - y))
    psi_{k,b}(x)  = 2^(-k/2) (S_k(x, b) - S_{k-1}(x, b)),   b in 2^(-k/n) Z^n
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product

import numpy as np
from scipy.special import gammaincc

from .core_math import DEFAULT_RADIAL_STEPS, Rng, integrate_radial
from .network import sigmoid

log = logging.getLogger(__name__)

DEFAULT_R = 4.0
SUPPORT_THRESHOLD = 1e-8
GRID_CAP = 200_000
L2_POINTS = {1: 4097, 2: 257}


class GridTooLarge(ValueError):
    pass


def _sigmoid(t):
    t = np.asarray(t, dtype=float)
    if t.ndim == 0:
        return float(sigmoid(t.reshape(1))[0])
    return sigmoid(t)


def sigmoid_tail_bound(r: float, n: int, r_max: float) -> float:
    """Upper bound on ``int_{|x| > r_max} sigmoid(r^2 - |x|^2) dx`` via ``sigmoid(t) <= e^t``."""
    return math.exp(r * r) * math.pi ** (n / 2.0) * float(gammaincc(n / 2.0, r_max * r_max))


@dataclass(frozen=True)
class MotherFunction:
    r: float
    n: int
    C_d: float
    activation: str = "sigmoid"

    def profile(self, rho_sq):
        """``phi`` as a function of the squared radius."""
        return self.C_d * _sigmoid(self.r * self.r - np.asarray(rho_sq, dtype=float))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.profile(np.sum(x * x, axis=-1))

    @cached_property
    def support_radius(self) -> float:
        """Radius beyond which ``|psi_{0,0}|`` stays below the threshold fraction of its peak."""
        return _support_radius(self, SUPPORT_THRESHOLD)


def default_r_max(r: float, n: int, tol: float = 1e-12) -> float:
    r_max = r + 2.0
    while sigmoid_tail_bound(r, n, r_max) > tol:
        r_max += 0.5
    return r_max


def normalize_mother(r: float = DEFAULT_R, n: int = 1, steps: int = DEFAULT_RADIAL_STEPS,
                     r_max: float | None = None, tol: float = 1e-12) -> MotherFunction:
    """Build the unit-mass mother function ``C_d * sigmoid(r^2 - |x|^2)`` on R^n."""
    if r <= 0 or n < 1:
        raise ValueError("need r > 0 and n >= 1")
    if r_max is None:
        r_max = default_r_max(r, n, tol)
    mass = integrate_radial(
        lambda rho: _sigmoid(r * r - rho * rho),
        n,
        r_max,
        steps,
        tail_bound=lambda R: sigmoid_tail_bound(r, n, R),
        tol=tol,
    )
    return MotherFunction(r=float(r), n=int(n), C_d=1.0 / mass)


def kernel_S(mother: MotherFunction, k: int, x, y):
    """``2^k phi(2^(k/n) (x - y))``; ``x`` and ``y`` broadcast over leading axes."""
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return 2.0**k * mother(2.0 ** (k / mother.n) * d)


def atom_psi(mother: MotherFunction, k: int, b, x):
    return 2.0 ** (-k / 2.0) * (kernel_S(mother, k, x, b) - kernel_S(mother, k - 1, x, b))


@dataclass(frozen=True, order=True)
class FrameAtom:
    """Atom at scale ``k`` centred on the lattice point ``index * 2^(-k/n)``."""

    k: int
    index: tuple[int, ...]

    def spacing(self, n: int | None = None) -> float:
        n = len(self.index) if n is None else n
        return 2.0 ** (-self.k / n)

    @property
    def b(self) -> np.ndarray:
        return np.asarray(self.index, dtype=float) * self.spacing()

    def __call__(self, mother: MotherFunction, x):
        return atom_psi(mother, self.k, self.b, x)


@dataclass
class FrameExpansion:
    mother: MotherFunction
    terms: list[tuple[FrameAtom, float]] = field(default_factory=list)

    def __post_init__(self):
        atoms = [a for a, _ in self.terms]
        if len(set(atoms)) != len(atoms):
            raise ValueError("duplicate atoms in expansion")
        for _, c in self.terms:
            if not math.isfinite(c):
                raise ValueError("non-finite coefficient")

    def __len__(self) -> int:
        return len(self.terms)

    def __call__(self, x):
        return synthesize(self, x)

    def coefficients(self) -> np.ndarray:
        return np.array([c for _, c in self.terms], dtype=float)


def synthesize(expansion: FrameExpansion, x):
    """Pointwise ``sum_j c_j psi_j(x)`` for points ``x`` of shape ``(..., n)``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape[:-1])
    for atom, c in expansion.terms:
        out = out + c * atom(expansion.mother, x)
    return out


def l1_frame_norm(expansion: FrameExpansion) -> float:
    """Sum of absolute coefficients of this particular representation."""
    return float(np.sum(np.abs(expansion.coefficients()))) if expansion.terms else 0.0


def concat(*expansions: FrameExpansion) -> FrameExpansion:
    return FrameExpansion(expansions[0].mother, [t for e in expansions for t in e.terms])


def greedy_n_term(expansion: FrameExpansion, N: int) -> FrameExpansion:
    """Keep the ``N`` largest-magnitude terms; ties go to the smaller ``(k, b)``."""
    if N < 0:
        raise ValueError("N must be >= 0")
    ranked = sorted(expansion.terms, key=lambda t: (-abs(t[1]), t[0]))
    return FrameExpansion(expansion.mother, ranked[:N])


def build_grid(mother: MotherFunction, k_min: int, k_max: int, box_lo, box_hi,
               threshold: float = SUPPORT_THRESHOLD, cap: int = GRID_CAP) -> list[FrameAtom]:
    """All lattice atoms whose effective support meets the box ``[lo, hi)``.

    The effective support of ``psi_{k,b}`` is the ball of radius
    ``R_0 * 2^(-k/n)`` around ``b``, where ``R_0`` is where ``|psi_{0,0}|`` falls
    below ``threshold`` times its peak.
    """
    if k_min > k_max:
        raise ValueError("k_min must not exceed k_max")
    n = mother.n
    lo = np.broadcast_to(np.asarray(box_lo, dtype=float), (n,))
    hi = np.broadcast_to(np.asarray(box_hi, dtype=float), (n,))
    if np.any(hi <= lo):
        return []
    if threshold == SUPPORT_THRESHOLD:
        r0 = mother.support_radius
    else:
        r0 = _support_radius(mother, threshold)
    atoms: list[FrameAtom] = []
    for k in range(k_min, k_max + 1):
        h = 2.0 ** (-k / n)
        radius = r0 * h
        ranges = [range(math.ceil((lo[i] - radius) / h), math.floor((hi[i] + radius) / h) + 1) for i in range(n)]
        count = math.prod(len(rg) for rg in ranges)
        if len(atoms) + count > cap:
            raise GridTooLarge(f"grid would hold at least {len(atoms) + count} atoms (cap {cap})")
        for idx in product(*ranges):
            b = np.asarray(idx, dtype=float) * h
            gap = np.maximum(np.maximum(lo - b, b - hi), 0.0)
            if float(np.sqrt(np.sum(gap * gap))) <= radius:
                atoms.append(FrameAtom(k, tuple(int(i) for i in idx)))
    return atoms


def _support_radius(mother: MotherFunction, threshold: float) -> float:
    rho = np.linspace(0.0, 4.0 * (mother.r + 10.0), 200_001)
    vals = np.abs(mother.profile(rho**2) - 0.5 * mother.profile((2.0 ** (-1.0 / mother.n) * rho) ** 2))
    above = np.nonzero(vals >= threshold * vals.max())[0]
    return float(rho[above[-1]])


def _simpson_weights(points: int, h: float) -> np.ndarray:
    if points < 3 or points % 2 == 0:
        raise ValueError("Simpson grids need an odd number (>= 3) of points per axis")
    w = np.ones(points)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * h / 3.0


def l2_error(f, g, box_lo, box_hi, points: int | None = None) -> float:
    """``||f - g||_{L^2(box)}`` by tensor-grid composite Simpson.

    ``f`` and ``g`` take an array of points of shape ``(m, n)``.
    """
    lo = np.atleast_1d(np.asarray(box_lo, dtype=float))
    hi = np.atleast_1d(np.asarray(box_hi, dtype=float))
    n = lo.shape[0]
    if points is None:
        points = L2_POINTS.get(n, 65)
    axes = [np.linspace(lo[i], hi[i], points) for i in range(n)]
    weights = [_simpson_weights(points, (hi[i] - lo[i]) / (points - 1)) for i in range(n)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    w = weights[0]
    for wi in weights[1:]:
        w = np.multiply.outer(w, wi)
    diff = np.asarray(f(mesh), dtype=float) - np.asarray(g(mesh), dtype=float)
    return float(math.sqrt(max(float(np.sum(w.ravel() * diff * diff)), 0.0)))


def expansion_box(expansion: FrameExpansion, pad: float = 0.0):
    """Bounding box containing the effective support of every atom."""
    n = expansion.mother.n
    r0 = expansion.mother.support_radius
    if not expansion.terms:
        return np.zeros(n), np.ones(n)
    lows, highs = [], []
    for atom, _ in expansion.terms:
        radius = r0 * atom.spacing(n) + pad
        lows.append(atom.b - radius)
        highs.append(atom.b + radius)
    return np.min(lows, axis=0), np.max(highs, axis=0)


def synthetic_target(mother: MotherFunction, seed: int, k_range=(0, 3), center_box=(-8.5, 8.5),
                     n_atoms=(64, 256)) -> FrameExpansion:
    """Random expansion: ``n_atoms`` distinct grid atoms with heavy-tailed coefficients.

    Magnitudes are ``1/u`` for ``u`` uniform on ``(0.1, 1]``; signs are random.
    Atoms are drawn from lattice points with centres inside ``center_box``.
    """
    rng = Rng(seed)
    n = mother.n
    lo, hi = center_box
    pool = []
    for k in range(k_range[0], k_range[1] + 1):
        h = 2.0 ** (-k / n)
        rg = range(math.ceil(lo / h), math.floor(hi / h) + 1)
        pool.extend(FrameAtom(k, idx) for idx in product(rg, repeat=n))
    lo_count = min(n_atoms[0], len(pool))
    hi_count = min(n_atoms[1], len(pool))
    count = int(rng.integers(lo_count, hi_count + 1))
    chosen = sorted(pool[i] for i in rng.permutation(len(pool))[:count])
    u = 1.0 - rng.uniform(0.0, 0.9, count)  # (0.1, 1]
    signs = np.where(rng.uniform(0.0, 1.0, count) < 0.5, -1.0, 1.0)
    coefs = signs / u
    return FrameExpansion(mother, [(a, float(c)) for a, c in zip(chosen, coefs)])


@dataclass
class RateRow:
    N: int
    error: float
    bound: float
    log_ratio: float


@dataclass
class RateResult:
    rows: list[RateRow]
    l1_norm: float
    n_atoms: int

    @property
    def monotone(self) -> bool:
        errs = [r.error for r in self.rows]
        return all(b <= a * (1 + 1e-9) + 1e-12 for a, b in zip(errs, errs[1:]))

    def to_csv(self) -> str:
        lines = ["N,error,bound,log_ratio"]
        for row in self.rows:
            lines.append(f"{row.N},{row.error:.6g},{row.bound:.6g},{row.log_ratio:.6g}")
        return "\n".join(lines) + "\n"


def rate_experiment(mother: MotherFunction, target: FrameExpansion, N_list, box=None,
                    points: int | None = None) -> RateResult:
    """N-term greedy approximation errors against the ``||f||_1 (N+1)^(-1/2)`` bound."""
    if box is None:
        box = expansion_box(target)
    norm = l1_frame_norm(target)
    rows = []
    for N in sorted(int(v) for v in N_list):
        approx = greedy_n_term(target, N)
        err = l2_error(target, approx, box[0], box[1], points)
        bound = norm * (N + 1) ** -0.5
        if N == 0:
            ratio = math.nan
        elif err > 0 and norm > 0:
            ratio = math.log(err / norm) / math.log(N + 1)
        else:
            ratio = -math.inf
        rows.append(RateRow(N, err, bound, ratio))
    result = RateResult(rows, norm, len(target))
    if not result.monotone:
        log.info("N-term error is not monotone in N for this target")
    return result
