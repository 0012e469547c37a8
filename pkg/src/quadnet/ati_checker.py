"""Sampled numerical checks of the approximation-to-the-identity conditions.

Every check evaluates both sides of an inequality on seeded samples and
returns a :class:`CheckReport`. The margin of one sample is
``(rhs - lhs) / rhs``; it is negative exactly when the sample violates the
inequality, and ``worst_margin`` is the smallest margin seen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .core_math import Rng, sphere_surface, sym_eigen
from .frame import MotherFunction, normalize_mother

K_RANGE = (-6, 6)
MAX_DISTANCE = 20.0
T_GRID = (-10.0, 10.0, 20001)
GEOMETRY_TS = (0.0, 0.25, 0.5, 0.75, 1.0)
FD_STEP = 1e-4
FD_TOL = 1e-3
MIN_ACCEPTANCE = 0.01
C_SIGMA = 1e6


@dataclass(frozen=True)
class AtIConstants:
    """Constants of the decay, Lipschitz and double-Lipschitz conditions."""

    n: int
    epsilon: float
    zeta: float
    C: float
    C_rho: float
    C_A: float
    C_tilde: float
    C_tilde_A: float
    C_sigma: float
    C_item2: float | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0.0 < self.epsilon <= 1.0 / self.n:
            raise ValueError("epsilon must lie in (0, 1/n]")
        if not 0.0 < self.zeta <= 1.0 / self.n:
            raise ValueError("zeta must lie in (0, 1/n]")
        if not 0.0 < self.C_A < 1.0:
            raise ValueError("C_A must lie in (0, 1)")
        if not 0.0 < self.C_tilde_A < 0.5:
            raise ValueError("C_tilde_A must lie in (0, 1/2)")
        for name in ("C", "C_rho", "C_tilde", "C_sigma"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def lipschitz_C(self) -> float:
        return self.C if self.C_item2 is None else self.C_item2


def sigmoid_kernel_constants(mother: MotherFunction, C_sigma: float = C_SIGMA) -> AtIConstants:
    """Constants under which the sigmoid kernels should satisfy every condition."""
    n = mother.n
    base = mother.C_d * C_sigma
    return AtIConstants(
        n=n,
        epsilon=1.0 / n,
        zeta=1.0 / n,
        C=base,
        C_rho=1.0,
        C_A=2.0 ** (-n),
        C_tilde=8.0 * 3.0 ** (n + 3) * base,
        C_tilde_A=3.0 ** (-n),
        C_sigma=C_sigma,
        C_item2=2.0 ** (n + 2) * base,
    )


@dataclass
class CheckReport:
    condition: str
    samples: int
    violations: int
    worst_margin: float
    worst_sample: dict = field(default_factory=dict)
    acceptance: float | None = None

    @property
    def passed(self) -> bool:
        return self.samples > 0 and self.violations == 0

    def csv_row(self) -> str:
        return f"{self.condition},{self.samples},{self.violations},{self.worst_margin:.6g}"


CSV_HEADER = "id,samples,violations,worst_margin"


def reports_csv(reports) -> str:
    return "\n".join([CSV_HEADER] + [r.csv_row() for r in reports]) + "\n"


def _report(condition: str, lhs, rhs, details: dict, acceptance=None) -> CheckReport:
    lhs = np.asarray(lhs, dtype=float).ravel()
    rhs = np.asarray(rhs, dtype=float).ravel()
    if lhs.shape != rhs.shape:
        raise ValueError("lhs and rhs differ in shape")
    bad = ~(lhs <= rhs)  # NaN counts as a violation
    with np.errstate(divide="ignore", invalid="ignore"):
        margin = np.where(rhs > 0, (rhs - lhs) / rhs, np.where(lhs <= rhs, 0.0, -np.inf))
    margin = np.where(np.isnan(margin), -np.inf, margin)
    worst = int(np.argmin(margin)) if margin.size else 0
    sample = {key: (np.asarray(v)[worst].tolist() if np.ndim(v) else v) for key, v in details.items()}
    return CheckReport(
        condition=condition,
        samples=int(lhs.size),
        violations=int(np.sum(bad)),
        worst_margin=float(margin[worst]) if margin.size else math.nan,
        worst_sample=sample,
        acceptance=acceptance,
    )


# sigmoid and its first two derivatives, in log-magnitude form

def _log_sigmoid(z):
    return -np.logaddexp(0.0, -z)


def log_abs_sigmoid_derivative(i: int, z):
    """``log |sigma^(i)(z)|`` for the logistic sigmoid, i in {0, 1, 2}."""
    z = np.asarray(z, dtype=float)
    if i == 0:
        return _log_sigmoid(z)
    # sigma' = sigma(z) sigma(-z), sigma'' = sigma' (1 - 2 sigma(z)) = -sigma' tanh(z/2)
    first = _log_sigmoid(z) + _log_sigmoid(-z)
    if i == 1:
        return first
    if i == 2:
        with np.errstate(divide="ignore"):
            return first + np.log(np.abs(np.tanh(0.5 * z)))
    raise ValueError("derivative order must be 0, 1 or 2")


def sigmoid_derivative(i: int, z):
    """Signed ``sigma^(i)(z)`` for i in {0, 1, 2}."""
    z = np.asarray(z, dtype=float)
    mag = np.exp(log_abs_sigmoid_derivative(i, z))
    if i == 2:
        return -np.sign(z) * mag
    return mag


def log_decay_bound(i: int, t, n: int, C_sigma: float):
    """``log(C_sigma (1 + |t|^n)^(-1 - (2i+1)/n))``."""
    t = np.abs(np.asarray(t, dtype=float))
    return math.log(C_sigma) - (1.0 + (2 * i + 1) / n) * np.log1p(t**n)


def sigma_decay_curves(i: int, C_sigma: float = C_SIGMA, n: int = 5, r: float = 4.0, t=None):
    """``(t, lhs_log, rhs_log)`` arrays for the decay inequality of ``sigma^(i)``."""
    if t is None:
        t = np.linspace(*T_GRID)
    t = np.asarray(t, dtype=float)
    lhs = log_abs_sigmoid_derivative(i, r * r - t * t)
    rhs = log_decay_bound(i, t, n, C_sigma)
    return t, lhs, rhs


def sigma_curve_csv(t, lhs, rhs) -> str:
    lines = ["t,lhs_log,rhs_log"]
    for a, b, c in zip(t, lhs, rhs):
        lines.append(f"{a:.6g},{b:.6g},{c:.6g}")
    return "\n".join(lines) + "\n"


def _log_report(condition: str, lhs_log, rhs_log, details: dict) -> CheckReport:
    # margin (rhs - lhs) / rhs computed from logs without overflow
    lhs_log = np.asarray(lhs_log, dtype=float)
    rhs_log = np.asarray(rhs_log, dtype=float)
    diff = np.minimum(lhs_log - rhs_log, 700.0)
    return _report(condition, np.exp(diff), np.ones_like(diff), details)


def check_sigma_decay(C_sigma: float = C_SIGMA, n: int = 5, r: float = 4.0, t=None,
                      orders=(0, 1, 2), form: str = "t", seed: int = 0) -> list[CheckReport]:
    """Decay of ``sigma^(i)(r^2 - t^2)`` against ``C_sigma (1 + |t|^n)^(-1 - (2i+1)/n)``.

    ``form="t"`` evaluates on the scalar grid. ``form="x"`` draws points of
    ``R^n`` whose norms are the grid values and evaluates at ``r^2 - ||x||^2``.
    """
    if t is None:
        t = np.linspace(*T_GRID)
    t = np.asarray(t, dtype=float)
    if form == "x":
        rng = Rng(seed)
        dirs = rng.gaussian(0.0, 1.0, (t.size, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        pts = np.abs(t)[:, None] * dirs
        radius = np.linalg.norm(pts, axis=1)
    elif form == "t":
        radius = t
    else:
        raise ValueError("form must be 't' or 'x'")
    out = []
    for i in orders:
        lhs = log_abs_sigmoid_derivative(i, r * r - radius * radius)
        rhs = log_decay_bound(i, radius, n, C_sigma)
        out.append(_log_report(f"sigma_decay_{form}_i{i}", lhs, rhs, {"t": t}))
    return out


def _kernel(mother: MotherFunction, k, x, y):
    """``S_k(x, y)`` with a per-sample integer scale ``k``."""
    k = np.asarray(k, dtype=float)
    n = mother.n
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return 2.0**k * mother((2.0 ** (k / n))[..., None] * d)


def _dist_pow(a, b, n: int):
    return np.sum((a - b) ** 2, axis=-1) ** (n / 2.0)


def _decay_factor(k, dist_n, c: AtIConstants):
    denom = 2.0 ** (-k) + c.C_rho * dist_n
    return 2.0 ** (-k * c.epsilon) / denom ** (1.0 + c.epsilon), denom


def _unit_vectors(rng: Rng, count: int, n: int):
    v = rng.gaussian(0.0, 1.0, (count, n))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return v / norms


def _base_samples(rng: Rng, count: int, n: int, k_range, max_distance):
    k = rng.integers(k_range[0], k_range[1] + 1, count).astype(float)
    x = rng.uniform(-10.0, 10.0, (count, n))
    dist = rng.uniform(0.0, max_distance, count)
    y = x + dist[:, None] * _unit_vectors(rng, count, n)
    return k, x, y


def check_item1(mother: MotherFunction, constants: AtIConstants, samples: int = 10_000,
                seed: int = 0, k_range=K_RANGE, max_distance: float = MAX_DISTANCE) -> CheckReport:
    """Size bound ``|S_k(x,y)| <= C 2^(-k eps) / (2^(-k) + C_rho ||x-y||^n)^(1+eps)``."""
    n = mother.n
    k, x, y = _base_samples(Rng(seed), samples, n, k_range, max_distance)
    lhs = np.abs(_kernel(mother, k, x, y))
    decay, _ = _decay_factor(k, _dist_pow(x, y, n), constants)
    return _report("item1_size", lhs, constants.C * decay, {"k": k, "x": x, "y": y})


def _admissible_offsets(rng: Rng, k, base_n, n: int, bound_factor: float, scale: float):
    """Rejection-sample offsets ``d`` with ``||d||^n <= bound_factor * (2^-k + base_n)``.

    Candidate lengths are uniform on ``[0, scale]``; after any batch whose
    acceptance falls under ``MIN_ACCEPTANCE`` the scale is halved.
    Returns ``(offsets, acceptance_fraction)``.
    """
    total = len(k)
    offsets = np.zeros((total, n))
    pending = np.arange(total)
    proposed = accepted = 0
    while pending.size:
        length = rng.uniform(0.0, scale, pending.size)
        vec = length[:, None] * _unit_vectors(rng, pending.size, n)
        limit = bound_factor * (2.0 ** (-k[pending]) + base_n[pending])
        ok = length**n <= limit
        offsets[pending[ok]] = vec[ok]
        proposed += pending.size
        accepted += int(np.sum(ok))
        if np.mean(ok) < MIN_ACCEPTANCE:
            scale *= 0.5
        pending = pending[~ok]
    return offsets, accepted / max(proposed, 1)


def check_item2(mother: MotherFunction, constants: AtIConstants, samples: int = 10_000,
                seed: int = 0, k_range=K_RANGE, max_distance: float = MAX_DISTANCE) -> CheckReport:
    """Lipschitz bound on ``|S_k(x,y) - S_k(x',y)|`` over admissible triples."""
    n = mother.n
    c = constants
    rng = Rng(seed)
    k, x, y = _base_samples(rng, samples, n, k_range, max_distance)
    dxy = _dist_pow(x, y, n)
    offsets, acceptance = _admissible_offsets(
        rng, k, c.C_rho * dxy, n, c.C_A / c.C_rho, max_distance
    )
    xp = x + offsets
    lhs = np.abs(_kernel(mother, k, x, y) - _kernel(mother, k, xp, y))
    decay, denom = _decay_factor(k, dxy, c)
    ratio = c.C_rho * _dist_pow(x, xp, n) / denom
    rhs = c.lipschitz_C * ratio**c.zeta * decay
    return _report("item2_lipschitz", lhs, rhs, {"k": k, "x": x, "x_prime": xp, "y": y}, acceptance)


def double_difference(mother: MotherFunction, k, x, xp, y, yp):
    # grouped so that x == x' or y == y' gives exactly zero
    return (
        (_kernel(mother, k, x, y) - _kernel(mother, k, xp, y))
        - (_kernel(mother, k, x, yp) - _kernel(mother, k, xp, yp))
    )


def check_double_lipschitz(mother: MotherFunction, constants: AtIConstants, samples: int = 10_000,
                           seed: int = 0, k_range=K_RANGE,
                           max_distance: float = MAX_DISTANCE) -> CheckReport:
    """Four-point mixed bound over admissible quadruples."""
    n = mother.n
    c = constants
    rng = Rng(seed)
    k, x, y = _base_samples(rng, samples, n, k_range, max_distance)
    dxy = _dist_pow(x, y, n)
    factor = c.C_tilde_A / c.C_rho
    dx, acc_x = _admissible_offsets(rng, k, c.C_rho * dxy, n, factor, max_distance)
    dy, acc_y = _admissible_offsets(rng, k, c.C_rho * dxy, n, factor, max_distance)
    xp, yp = x + dx, y + dy
    lhs = np.abs(double_difference(mother, k, x, xp, y, yp))
    decay, denom = _decay_factor(k, dxy, c)
    rx = c.C_rho * _dist_pow(x, xp, n) / denom
    ry = c.C_rho * _dist_pow(y, yp, n) / denom
    rhs = c.C_tilde * rx**c.zeta * ry**c.zeta * decay
    details = {"k": k, "x": x, "x_prime": xp, "y": y, "y_prime": yp}
    return _report("double_lipschitz", lhs, rhs, details, acc_x * acc_y)


def kernel_mass(mother: MotherFunction, k: int, y=None) -> float:
    """``int S_k(x, y) dx`` by adaptive quadrature, independent of the normalizing rule."""
    n = mother.n
    scale = 2.0 ** (k / n)
    reach = (mother.support_radius + 2.0 * mother.r) / scale
    if n == 1:
        y0 = 0.0 if y is None else float(np.ravel(y)[0])

        def f(x):
            return 2.0**k * float(mother(np.array([scale * (x - y0)])))

        pieces = np.linspace(y0 - reach, y0 + reach, 9)
        total = 0.0
        for a, b in zip(pieces[:-1], pieces[1:]):
            val, _ = quad(f, a, b, epsabs=1e-13, epsrel=1e-12, limit=200)
            total += val
        return total

    # radial symmetry: mass does not depend on y
    def g(rho):
        return 2.0**k * rho ** (n - 1) * float(mother.profile((scale * rho) ** 2))

    val, _ = quad(g, 0.0, reach, epsabs=1e-13, epsrel=1e-12, limit=400, points=[mother.r / scale])
    return sphere_surface(n) * val


def check_item3(mother: MotherFunction, ks=(-2, 0, 3), tol: float = 1e-5, seed: int = 0) -> CheckReport:
    """Unit mass ``|int S_k(x, y) dy - 1| <= tol`` at a random centre for each ``k``."""
    rng = Rng(seed)
    ks = np.asarray(ks, dtype=int)
    centres = rng.uniform(-5.0, 5.0, (ks.size, mother.n))
    err = np.array([abs(kernel_mass(mother, int(k), c) - 1.0) for k, c in zip(ks, centres)])
    return _report("item3_mass", err, np.full(err.shape, tol), {"k": ks})


# Hessian of radial functions


@dataclass(frozen=True)
class RadialProfile:
    """``h_s`` with its first two derivatives."""

    name: str
    f: object
    d1: object
    d2: object


def identity_profile() -> RadialProfile:
    return RadialProfile("t", lambda t: t, lambda t: np.ones_like(t), lambda t: np.zeros_like(t))


def square_profile() -> RadialProfile:
    return RadialProfile("t^2", lambda t: t * t, lambda t: 2.0 * t, lambda t: np.full_like(t, 2.0))


def sigmoid_profile(C_d: float, r: float = 4.0) -> RadialProfile:
    # h_s(t) = C_d sigma(r^2 - t): each derivative picks up a factor -1
    return RadialProfile(
        "C_d*sigma(r^2-t)",
        lambda t: C_d * sigmoid_derivative(0, r * r - t),
        lambda t: -C_d * sigmoid_derivative(1, r * r - t),
        lambda t: C_d * sigmoid_derivative(2, r * r - t),
    )


def analytic_hessian_eigenvalues(profile: RadialProfile, x) -> np.ndarray:
    """Eigenvalues of the Hessian of ``x -> h_s(||x||^2)``, in descending order."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    s = float(x @ x)
    tangential = 2.0 * float(profile.d1(np.float64(s)))
    radial = 4.0 * s * float(profile.d2(np.float64(s))) + tangential
    return np.sort(np.array([tangential] * (n - 1) + [radial]))[::-1]


def fd_hessian(fun, x, step: float = FD_STEP) -> np.ndarray:
    """Central-difference Hessian; symmetric by construction."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    eye = np.eye(n) * step
    H = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            val = (
                fun(x + eye[i] + eye[j]) - fun(x + eye[i] - eye[j])
                - fun(x - eye[i] + eye[j]) + fun(x - eye[i] - eye[j])
            ) / (4.0 * step * step)
            H[i, j] = H[j, i] = val
    return H


def check_hessian_bound(profile: RadialProfile, n: int, samples: int = 100, seed: int = 0,
                        max_radius: float = 5.0, step: float = FD_STEP,
                        tol: float = FD_TOL) -> list[CheckReport]:
    """Compare finite-difference Hessians of ``h_s(||x||^2)`` with the closed form.

    Returns two reports: eigenvalue agreement within ``tol`` and the spectral
    norm bound (plus ``tol``).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = Rng(seed)
    dirs = _unit_vectors(rng, samples, n)
    radii = rng.uniform(0.0, max_radius, samples)
    pts = radii[:, None] * dirs

    def h(z):
        return float(profile.f(np.float64(z @ z)))

    eig_err = np.empty(samples)
    norms = np.empty(samples)
    bounds = np.empty(samples)
    for idx, x in enumerate(pts):
        lam_fd, _ = sym_eigen(fd_hessian(h, x, step))
        lam = analytic_hessian_eigenvalues(profile, x)
        eig_err[idx] = float(np.max(np.abs(lam_fd - lam)))
        norms[idx] = float(np.max(np.abs(lam_fd)))
        bounds[idx] = float(np.max(np.abs(lam)))
    tag = f"hessian_{profile.name}_n{n}"
    return [
        _report(f"{tag}_eigenvalues", eig_err, np.full(samples, tol), {"x": pts}),
        _report(f"{tag}_norm", norms, bounds + tol, {"x": pts}),
    ]


# geometry of the admissible sets


def check_geometry(n: int = 1, samples: int = 10_000, seed: int = 0, k_range=K_RANGE,
                   max_distance: float = MAX_DISTANCE, ts=GEOMETRY_TS) -> list[CheckReport]:
    """Lower bounds on distances along segments inside the admissible sets.

    Triples use ``C_A = 2^-n`` and quadruples ``C_tilde_A = 3^-n`` with ``C_rho = 1``.
    Half of the base pairs are drawn with ``||x - y||^n < 2^-k``, where the
    lower bound is negative.
    """
    rng = Rng(seed)
    k, x, y = _base_samples(rng, samples, n, k_range, max_distance)
    # force the near regime for every other sample
    near = np.arange(samples) % 2 == 1
    near_dist = rng.uniform(0.0, 1.0, samples) * 2.0 ** (-k / n)
    y[near] = x[near] + near_dist[near, None] * _unit_vectors(rng, int(near.sum()), n)
    dxy = _dist_pow(x, y, n)
    ts = np.asarray(ts, dtype=float)

    dx, acc2 = _admissible_offsets(rng, k, dxy, n, 2.0 ** (-n), max_distance)
    lhs2, rhs2 = [], []
    for t in ts:
        lhs2.append(_dist_pow(x + t * dx, y, n))
        rhs2.append(2.0 ** (-n) * dxy - 2.0 ** (-n) * 2.0 ** (-k))
    # inequality is lhs >= rhs; report it as rhs <= lhs
    pair = _geometry_report("geometry_triple", np.ravel(rhs2), np.ravel(lhs2), acc2)

    ex, acc_x = _admissible_offsets(rng, k, dxy, n, 3.0 ** (-n), max_distance)
    ey, acc_y = _admissible_offsets(rng, k, dxy, n, 3.0 ** (-n), max_distance)
    lhs3, rhs3 = [], []
    for tx in ts:
        for ty in ts:
            lhs3.append(_dist_pow(x + tx * ex, y + ty * ey, n))
            rhs3.append(3.0 ** (-n) * dxy - 3.0 ** (-n) * 2.0 ** (1.0 - k))
    quad_report = _geometry_report("geometry_quadruple", np.ravel(rhs3), np.ravel(lhs3), acc_x * acc_y)
    return [pair, quad_report]


def _geometry_report(condition, small, large, acceptance) -> CheckReport:
    # margin relative to the scale of the larger side, which may be zero
    small = np.asarray(small, dtype=float)
    large = np.asarray(large, dtype=float)
    scale = np.maximum(np.abs(small), np.abs(large))
    slack = 1e-12 * scale
    lhs = small - slack
    rep = _report(condition, lhs, large, {})
    rep.acceptance = acceptance
    return rep


def check_jensen(n_values=(1, 2, 3, 4, 5, 6), samples: int = 10_000, seed: int = 0,
                 terms: int = 2) -> list[CheckReport]:
    """``sum a_i^n >= m^(1-n) (sum a_i)^n`` for ``m`` nonnegative terms."""
    rng = Rng(seed)
    out = []
    for n in n_values:
        vals = rng.uniform(0.0, 10.0, (samples, terms))
        lhs = np.sum(vals**n, axis=1)
        rhs = terms ** (1.0 - n) * np.sum(vals, axis=1) ** n
        # power sums equal at a == b, so allow rounding slack
        out.append(_report(f"jensen{terms}_n{n}", rhs * (1.0 - 1e-12), lhs, {}))
    return out


def run_all(mother: MotherFunction, samples: int = 10_000, seed: int = 0,
            C_sigma: float = C_SIGMA) -> list[CheckReport]:
    """Every check at the given kernel; used by the ``ati-check`` command."""
    consts = sigmoid_kernel_constants(mother, C_sigma)
    seeds = Rng(seed)
    reports = []
    reports += check_sigma_decay(C_sigma, n=5, r=4.0, form="t")
    reports += check_sigma_decay(C_sigma, n=5, r=4.0, form="x", seed=seeds.spawn_seed())
    reports.append(check_item1(mother, consts, samples, seeds.spawn_seed()))
    reports.append(check_item2(mother, consts, samples, seeds.spawn_seed()))
    reports.append(check_item3(mother, seed=seeds.spawn_seed()))
    reports.append(check_double_lipschitz(mother, consts, samples, seeds.spawn_seed()))
    for dim in (2, 3, 5):
        profiles = [identity_profile(), square_profile(),
                    sigmoid_profile(normalize_mother(mother.r, dim).C_d, mother.r)]
        for prof in profiles:
            reports += check_hessian_bound(prof, dim, 100, seeds.spawn_seed())
    reports += check_geometry(mother.n, samples, seeds.spawn_seed())
    reports += check_jensen(samples=samples, seed=seeds.spawn_seed(), terms=2)
    reports += check_jensen(samples=samples, seed=seeds.spawn_seed(), terms=3)
    return reports
