import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadnet.ati_checker import kernel_mass
from quadnet.frame import (
    L2_POINTS,
    FrameAtom,
    FrameExpansion,
    GridTooLarge,
    atom_psi,
    build_grid,
    concat,
    expansion_box,
    greedy_n_term,
    kernel_S,
    l1_frame_norm,
    l2_error,
    normalize_mother,
    rate_experiment,
    synthesize,
    synthetic_target,
)

# int_R sigmoid(16 - x^2) dx from a 4.8M-point trapezoid on [-12, 12]
SIGMOID_MASS_N1_R4 = 7.98691550098974


def test_mother_unit_mass_against_trapezoid_oracle(mother1):
    assert mother1.C_d * SIGMOID_MASS_N1_R4 == pytest.approx(1.0, abs=1e-6)


def test_mother_truncation_converged(mother1):
    wider = normalize_mother(4.0, 1, r_max=2 * 12.0)
    assert abs(wider.C_d - mother1.C_d) < 1e-8


def test_mother_peak_below_normalizer(mother1, mother2):
    for m in (mother1, mother2):
        assert m(np.zeros(m.n)) <= m.C_d
        assert m(np.full(m.n, 30.0)) >= 0.0


def test_mother_mass_in_two_dimensions(mother2):
    assert kernel_mass(mother2, 0) == pytest.approx(1.0, abs=1e-8)


def test_mother_rejects_bad_parameters():
    with pytest.raises(ValueError):
        normalize_mother(-1.0, 1)


def test_kernel_at_scale_zero_is_shifted_mother(mother1):
    x, y = np.array([1.3]), np.array([-0.4])
    assert kernel_S(mother1, 0, x, y) == mother1(x - y)


@pytest.mark.parametrize("k", [-2, 0, 3])
def test_kernel_unit_mass(mother1, k):
    assert abs(kernel_mass(mother1, k, y=np.array([0.7])) - 1.0) <= 1e-5


def test_kernel_unit_mass_by_simpson_grid(mother1):
    # a second route that shares nothing with the adaptive quadrature
    for k in (-2, 0, 3):
        x = np.linspace(-60.0, 60.0, 400_001)
        vals = kernel_S(mother1, k, x[:, None], np.array([0.7]))
        assert abs(np.trapezoid(vals, x) - 1.0) <= 1e-5


@settings(max_examples=50, deadline=None)
@given(st.integers(-5, 5), st.floats(-20, 20), st.floats(-20, 20))
def test_kernel_symmetric(k, a, b):
    m = normalize_mother(4.0, 1)
    assert kernel_S(m, k, np.array([a]), np.array([b])) == kernel_S(m, k, np.array([b]), np.array([a]))


def test_atom_scaling_identity(mother1, mother2):
    rng = np.random.default_rng(0)
    for m in (mother1, mother2):
        for _ in range(200):
            k = int(rng.integers(-4, 5))
            x, y = rng.uniform(-6, 6, m.n), rng.uniform(-6, 6, m.n)
            lhs = atom_psi(m, k, y, x)
            rhs = 2.0 ** (k / 2) * atom_psi(m, 0, np.zeros(m.n), 2.0 ** (k / m.n) * (x - y))
            assert abs(lhs - rhs) <= 1e-10


def test_atom_zero_mass(mother1):
    x = np.linspace(-80.0, 80.0, 320_001)
    for k in (-1, 0, 2):
        vals = atom_psi(mother1, k, np.array([1.0]), x[:, None])
        assert abs(np.trapezoid(vals, x)) <= 1e-5


def test_atom_tail(mother1):
    assert abs(atom_psi(mother1, 0, np.zeros(1), np.array([50.0]))) < 1e-8


def test_grid_unit_lattice(mother1):
    atoms = build_grid(mother1, 0, 0, [0.0], [4.0])
    centres = {a.index[0] for a in atoms}
    assert {0, 1, 2, 3, 4}.issubset(centres)
    assert min(centres) < 0 and max(centres) > 4
    assert sorted(centres) == list(range(min(centres), max(centres) + 1))


def test_grid_finer_scale_halves_spacing(mother1):
    coarse = build_grid(mother1, 0, 0, [0.0], [8.0])
    fine = build_grid(mother1, 1, 1, [0.0], [8.0])
    assert fine[0].spacing() == 0.5
    assert all(a.b[0] == a.index[0] * 0.5 for a in fine)
    inside = lambda atoms: sum(0.0 <= a.b[0] < 8.0 for a in atoms)  # noqa: E731
    assert inside(fine) == 2 * inside(coarse)


def test_grid_empty_box_and_cap(mother1):
    assert build_grid(mother1, 0, 2, [1.0], [1.0]) == []
    with pytest.raises(GridTooLarge):
        build_grid(mother1, 0, 6, [-100.0], [100.0], cap=100)
    with pytest.raises(ValueError):
        build_grid(mother1, 2, 1, [0.0], [1.0])


def test_grid_two_dimensional(mother2):
    atoms = build_grid(mother2, 0, 0, [0.0, 0.0], [2.0, 2.0])
    assert FrameAtom(0, (0, 0)) in atoms and FrameAtom(0, (1, 1)) in atoms
    lattice = build_grid(mother2, 2, 2, [0.0, 0.0], [2.0, 2.0])
    assert lattice[0].spacing() == 0.5


def test_empty_expansion(mother1):
    e = FrameExpansion(mother1)
    assert np.all(synthesize(e, np.linspace(-3, 3, 7)[:, None]) == 0.0)
    assert l1_frame_norm(e) == 0.0


def test_single_atom_norm(mother1):
    assert l1_frame_norm(FrameExpansion(mother1, [(FrameAtom(0, (0,)), 2.0)])) == 2.0


def test_expansion_rejects_duplicates_and_nonfinite(mother1):
    with pytest.raises(ValueError):
        FrameExpansion(mother1, [(FrameAtom(0, (0,)), 1.0), (FrameAtom(0, (0,)), 2.0)])
    with pytest.raises(ValueError):
        FrameExpansion(mother1, [(FrameAtom(0, (0,)), math.inf)])


def test_synthesis_linear(mother1):
    a = FrameExpansion(mother1, [(FrameAtom(0, (0,)), 1.5), (FrameAtom(1, (3,)), -2.0)])
    b = FrameExpansion(mother1, [(FrameAtom(2, (-1,)), 0.5)])
    x = np.linspace(-5, 5, 41)[:, None]
    np.testing.assert_allclose(synthesize(concat(a, b), x), synthesize(a, x) + synthesize(b, x), atol=1e-15)


def test_greedy_keeps_largest_magnitudes(mother1):
    atoms = [FrameAtom(0, (i,)) for i in range(3)]
    e = FrameExpansion(mother1, list(zip(atoms, [3.0, -5.0, 1.0])))
    kept = greedy_n_term(e, 2)
    assert [c for _, c in kept.terms] == [-5.0, 3.0]
    assert greedy_n_term(e, 10).terms == sorted(e.terms, key=lambda t: -abs(t[1]))
    with pytest.raises(ValueError):
        greedy_n_term(e, -1)


def test_greedy_tie_break_by_scale_then_position(mother1):
    e = FrameExpansion(mother1, [(FrameAtom(1, (0,)), 1.0), (FrameAtom(0, (5,)), -1.0),
                                 (FrameAtom(0, (2,)), 1.0)])
    assert [a for a, _ in greedy_n_term(e, 2).terms] == [FrameAtom(0, (2,)), FrameAtom(0, (5,))]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=0, max_size=12), st.integers(0, 15))
def test_greedy_subset_and_norm(coefs, N):
    m = normalize_mother(4.0, 1)
    e = FrameExpansion(m, [(FrameAtom(0, (i,)), c) for i, c in enumerate(coefs)])
    kept = greedy_n_term(e, N)
    assert len(kept) == min(N, len(e))
    assert set(kept.terms) <= set(e.terms)
    assert l1_frame_norm(kept) <= l1_frame_norm(e) + 1e-12


def test_l2_error_basic_cases():
    f = lambda x: np.sin(x[:, 0])  # noqa: E731
    assert l2_error(f, f, [0.0], [3.0]) == 0.0
    one = lambda x: np.ones(len(x))  # noqa: E731
    zero = lambda x: np.zeros(len(x))  # noqa: E731
    assert l2_error(one, zero, [0.0], [1.0]) == pytest.approx(1.0, abs=1e-14)
    assert l2_error(one, zero, [0.0, 0.0], [1.0, 1.0]) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ValueError):
        l2_error(one, zero, [0.0], [1.0], points=4)


def test_l2_error_refinement_at_acceptance_settings(mother1):
    target = synthetic_target(mother1, 3)
    approx = greedy_n_term(target, 16)
    lo, hi = expansion_box(target)
    base = l2_error(target, approx, lo, hi)
    fine = l2_error(target, approx, lo, hi, points=2 * L2_POINTS[1] - 1)
    assert abs(base - fine) < 1e-4


def test_synthetic_target_shape(mother1):
    t = synthetic_target(mother1, 0)
    assert 64 <= len(t) <= 256
    mags = np.abs(t.coefficients())
    assert mags.min() >= 1.0 and mags.max() <= 10.0 + 1e-12
    assert synthetic_target(mother1, 0).terms == t.terms


def test_rate_full_expansion_recovers_exactly(mother1):
    target = synthetic_target(mother1, 1)
    res = rate_experiment(mother1, target, [len(target)])
    assert res.rows[0].error <= 1e-12


def test_rate_rows_and_csv(mother1):
    target = synthetic_target(mother1, 2)
    res = rate_experiment(mother1, target, [0, 1, 4, 16])
    assert [r.N for r in res.rows] == [0, 1, 4, 16]
    assert math.isnan(res.rows[0].log_ratio)
    for row in res.rows:
        assert row.error <= row.bound * (1 + 1e-6) + 1e-5
        if row.N >= 1:
            assert row.log_ratio <= -0.5 + 1e-6
    lines = res.to_csv().splitlines()
    assert lines[0] == "N,error,bound,log_ratio"
    assert len(lines) == 5
