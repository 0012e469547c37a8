"""The ten acceptance criteria, each at its stated tolerance.

Criteria 7-9 read the artifacts of the first of the two ``suite --seed 42``
runs made for criterion 10.
"""

import csv
import io
import time
from pathlib import Path

import numpy as np
import pytest

from gradcheck import gradient_check
from quadnet import ati_checker as ati
from quadnet.cli import main
from quadnet.core_math import Rng
from quadnet.frame import normalize_mother, rate_experiment, synthetic_target
from quadnet.network import LAYER_KINDS

RATE_N = [2**i for i in range(9)]


def rows(path: Path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


@pytest.fixture(scope="module")
def rate_results(mother1):
    start = time.perf_counter()
    rng = Rng(20240)
    results = [rate_experiment(mother1, synthetic_target(mother1, rng.spawn_seed()), RATE_N) for _ in range(20)]
    return results, time.perf_counter() - start


@pytest.fixture(scope="module")
def suite_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("suite")
    out = []
    for name in ("first", "second"):
        start = time.perf_counter()
        code = main(["suite", "--seed", "42", "--out-dir", str(base / name)])
        out.append((base / name, code, time.perf_counter() - start))
    return out


def test_criterion_01_frame_rate_bound(rate_results, criterion):
    results, elapsed = rate_results
    sizes = [r.n_atoms for r in results]
    excess = max(row.error - (row.bound * (1 + 1e-6) + 1e-5) for r in results for row in r.rows)
    ok = excess <= 0.0 and elapsed < 120.0 and min(sizes) >= 64 and max(sizes) <= 256
    criterion(1, ok, f"max(error - slack bound) = {excess:.3g} over 20 targets x 9 N, {elapsed:.1f} s")
    assert ok


def test_criterion_02_log_ratio_curve(rate_results, criterion, tmp_path):
    results, _ = rate_results
    worst = max(row.log_ratio for r in results for row in r.rows if row.N >= 1)
    for i, r in enumerate(results):
        (tmp_path / f"rate_{i:02d}.csv").write_text(r.to_csv())
    header = (tmp_path / "rate_00.csv").read_text().splitlines()[0]
    ok = worst <= -0.5 + 1e-6 and header == "N,error,bound,log_ratio"
    criterion(2, ok, f"max log_ratio = {worst:.4f} (limit -0.5), CSV emitted")
    assert ok


def test_criterion_03_ati_conditions(mother1, criterion):
    start = time.perf_counter()
    consts = ati.sigmoid_kernel_constants(mother1, 1e6)
    reports = [
        ati.check_item1(mother1, consts, 10_000, seed=101),
        ati.check_item2(mother1, consts, 10_000, seed=102),
        ati.check_item3(mother1, ks=(-2, 0, 3), tol=1e-5, seed=103),
        ati.check_double_lipschitz(mother1, consts, 10_000, seed=104),
    ]
    elapsed = time.perf_counter() - start
    violations = {r.condition: r.violations for r in reports}
    ok = all(r.passed for r in reports) and reports[0].samples == 10_000 and elapsed < 60.0
    criterion(3, ok, f"violations {violations}, {elapsed:.1f} s")
    assert ok


def test_criterion_04_sigma_decay(criterion, tmp_path):
    t = np.linspace(-10.0, 10.0, 20001)
    assert t[1] - t[0] == pytest.approx(0.001)
    reports = ati.check_sigma_decay(1e6, n=5, r=4.0, t=t, orders=(0, 1, 2))
    for i in (0, 1, 2):
        tt, lhs, rhs = ati.sigma_decay_curves(i, 1e6, n=5, r=4.0, t=t)
        (tmp_path / f"sigma_decay_i{i}.csv").write_text(ati.sigma_curve_csv(tt, lhs, rhs))
    emitted = all((tmp_path / f"sigma_decay_i{i}.csv").exists() for i in (0, 1, 2))
    ok = all(r.passed for r in reports) and emitted
    criterion(4, ok, "violations " + ", ".join(f"i={i}: {r.violations}" for i, r in enumerate(reports)))
    assert ok


def test_criterion_05_hessian_eigenvalues(criterion):
    worst = np.inf
    ok = True
    for n in (2, 3, 5):
        C_d = normalize_mother(4.0, n).C_d
        for prof in (ati.identity_profile(), ati.square_profile(), ati.sigmoid_profile(C_d, 4.0)):
            eig, norm = ati.check_hessian_bound(prof, n, samples=100, seed=500 + n, tol=1e-3)
            ok = ok and eig.passed and norm.passed and eig.samples == 100
            worst = min(worst, eig.worst_margin)
    criterion(5, ok, f"3 dims x 3 profiles x 100 points, worst eigenvalue margin {worst:.3f}")
    assert ok


def test_criterion_06_gradients(criterion):
    errors = {kind: gradient_check(kind, configs=20, seed=606) for kind in LAYER_KINDS}
    ok = all(e <= 1e-5 for e in errors.values())
    criterion(6, ok, "max relative error " + ", ".join(f"{k} {e:.1e}" for k, e in errors.items()))
    assert ok


@pytest.mark.slow
def test_criterion_07_shallow_table(suite_runs, criterion):
    out, code, elapsed = suite_runs[0]
    table = {(r["network"], int(r["epochs"])): r for r in rows(out / "shallow_table1" / "summary.csv")}
    ell140 = float(table[("elliptic", 140)]["median_test_mse"])
    aff140 = float(table[("affine", 140)]["median_test_mse"])
    ell250 = float(table[("elliptic", 250)]["median_test_mse"])
    seeds = {int(r["seeds"]) for r in table.values()}
    ok = ell140 < 0.5 * aff140 and ell250 <= 0.2 and seeds == {5} and elapsed < 600.0
    criterion(7, ok, f"elliptic140 {ell140:.4g} vs affine140 {aff140:.4g}; elliptic250 {ell250:.4g} (<= 0.2)")
    assert ok


@pytest.mark.slow
def test_criterion_08_deep_table(suite_runs, criterion):
    out, _, _ = suite_runs[0]
    table = {r["network"] + r["units"]: r for r in rows(out / "deep_table2" / "summary.csv")}
    ell30 = float(table["elliptic[30, 30, 30]"]["median_test_mse"])
    curves = rows(out / "deep_table2" / "loss_curves.csv")
    fractions = {}
    for w in (5, 30):
        ell = np.array([float(r[f"elliptic_{w}x{w}x{w}"]) for r in curves])
        aff = np.array([float(r[f"affine_{w}x{w}x{w}x{w}"]) for r in curves])
        epochs = np.array([int(r["epoch"]) for r in curves])
        keep = epochs >= 20
        fractions[w] = float(np.mean(ell[keep] < aff[keep]))
    ok = ell30 <= 0.02 and all(f >= 0.7 for f in fractions.values())
    criterion(8, ok, f"elliptic [30,30,30] {ell30:.4g} (<= 0.02); curve below affine: "
                     + ", ".join(f"width {w} {f:.2f}" for w, f in fractions.items()))
    assert ok


@pytest.mark.slow
def test_criterion_09_clusters(suite_runs, criterion):
    out, _, _ = suite_runs[0]
    table = {(r["dataset"], r["network"]): r for r in rows(out / "clusters_table3" / "summary.csv")}
    ell = float(table[("subspecies", "elliptic")]["median_test_accuracy"])
    aff = float(table[("subspecies", "affine")]["median_test_accuracy"])
    ok = ell >= 0.99 and aff < ell
    criterion(9, ok, f"subspecies accuracy elliptic {ell:.4g} vs affine {aff:.4g}")
    assert ok


@pytest.mark.slow
def test_criterion_10_determinism(suite_runs, criterion):
    (a, code_a, _), (b, code_b, _) = suite_runs
    files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    differing = [p for p in files_a if (a / p).read_bytes() != (b / p).read_bytes()] if files_a == files_b else None
    ok = code_a == 0 and code_b == 0 and files_a == files_b and not differing and len(files_a) > 0
    criterion(10, ok, f"{len(files_a)} files, identical trees: {files_a == files_b and not differing}, "
                      f"exit codes {code_a}/{code_b}")
    assert ok
