"""Acceptance criteria for the simulator, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line; the lines are repeated
in the pytest terminal summary.
"""

import math
import time

import numpy as np
import pytest

from acamsim.analysis import (
    DatasetSpec,
    OpMode,
    gamma_scaling_check,
    kernel_sweep,
    op_count,
    r2_identity,
    residual_stats,
    sense_margin,
)
from acamsim.core import AcamArray
from acamsim.fewshot import sweep_accuracy, synth_embeddings
from acamsim.kernel import (
    KernelKind,
    KernelSpec,
    fit,
    gram_matrix,
    predict_acam,
    predict_exact,
    support_radius,
    surrogate_kernel,
)
from acamsim.search import analog_hamming

pytestmark = pytest.mark.acceptance

SEEDS = 10


def gauss_solve(a, b):
    """Gaussian elimination with partial pivoting on Python floats."""
    n = len(b)
    m = [list(map(float, row)) + [float(v)] for row, v in zip(a, b)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(m[r][col]))
        m[col], m[piv] = m[piv], m[col]
        for r in range(col + 1, n):
            f = m[r][col] / m[col][col]
            for c in range(col, n + 1):
                m[r][c] -= f * m[col][c]
    x = [0.0] * n
    for r in range(n - 1, -1, -1):
        x[r] = (m[r][n] - sum(m[r][c] * x[c] for c in range(r + 1, n))) / m[r][r]
    return x


def test_01_surrogate_identities(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    ok_diag = ok_zero = True
    for _ in range(1000):
        d = int(rng.integers(1, 6))
        g = float(rng.uniform(0.01, 1.0))
        x = rng.uniform(-2, 2, d)
        ok_diag &= surrogate_kernel(x, x, g) == 1.0
        u = rng.normal(size=d)
        r = support_radius(g) * (1.0 + float(rng.exponential(0.5)))
        ok_zero &= abs(surrogate_kernel(x, x + r * u / np.linalg.norm(u), g)) <= 1e-15
    edge = abs(surrogate_kernel([0.0], [support_radius(0.1)], 0.1))
    ok_zero &= edge <= 4 * np.finfo(float).eps
    a = rng.uniform(-1, 1, (1000, 3))
    b = rng.uniform(-1, 1, (1000, 3))
    sym = max(abs(surrogate_kernel(x, y, 0.3) - surrogate_kernel(y, x, 0.3)) for x, y in zip(a, b))
    dt = time.perf_counter() - t0
    ok = ok_diag and ok_zero and sym <= 1e-12 and dt < 1.0
    report(1, ok, f"K(x,x)=1 {ok_diag}, zero beyond support {ok_zero} (edge {edge:.1e}), "
                  f"max asymmetry {sym:.1e}, {dt:.2f}s")


def test_02_ridge_oracle(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    kinds = [KernelSpec(KernelKind.RBF, 0.2), KernelSpec(KernelKind.ACAM_SURROGATE, 0.1),
             KernelSpec(KernelKind.LAPLACE, c=3.0)]
    worst_res = worst_diff = 0.0
    for i in range(50):
        m = int(rng.integers(1, 33))
        d = int(rng.integers(1, 4))
        x = rng.uniform(0, 1, (m, d))
        y = rng.normal(size=m)
        lam = float(10 ** rng.uniform(-3, 0))
        spec = kinds[i % 3]
        model = fit(x, y, spec, lam)
        a = (gram_matrix(x, spec) + lam * m * np.eye(m)).tolist()
        ref = gauss_solve(a, y.tolist())
        resid = [sum(a[r][c] * model.alpha[c] for c in range(m)) - y[r] for r in range(m)]
        worst_res = max(worst_res, math.sqrt(sum(v * v for v in resid)) / np.linalg.norm(y))
        worst_diff = max(worst_diff, np.linalg.norm(model.alpha - ref) / np.linalg.norm(ref))
    dt = time.perf_counter() - t0
    ok = worst_res <= 1e-8 and worst_diff <= 1e-6 and dt < 5.0
    report(2, ok, f"max relative residual {worst_res:.1e}, max deviation from elimination "
                  f"oracle {worst_diff:.1e}, {dt:.2f}s")


def test_03_fig4b_quantized_noisy_mse(report):
    t0 = time.perf_counter()
    rows = kernel_sweep(DatasetSpec(), [0.1], [4], [0.0, 0.1, 0.2, 0.3], seed=0, repeats=SEEDS)
    dt = time.perf_counter() - t0
    worst = max(r.mse for r in rows)
    ok = worst < 0.03 + 0.02 and dt < 10.0
    detail = ", ".join(f"sigma={r.noise_std}: {r.mse:.4g}" for r in rows)
    report(3, ok, f"4-bit test MSE vs sin(5x) ({detail}); need < 0.05, {dt:.2f}s")


def test_04_gamma_regimes(report):
    t0 = time.perf_counter()
    rows = kernel_sweep(DatasetSpec(), [0.02, 0.1, 0.4], [4], [0.0], seed=0, repeats=SEEDS)
    dt = time.perf_counter() - t0
    mse = {r.gamma: r.mse for r in rows}
    ok = mse[0.1] < mse[0.4] and mse[0.1] < mse[0.02] and dt < 10.0
    report(4, ok, f"MSE gamma=0.02: {mse[0.02]:.4g}, 0.1: {mse[0.1]:.4g}, "
                  f"0.4: {mse[0.4]:.4g}, {dt:.2f}s")


def test_05_residual_trend(report):
    t0 = time.perf_counter()
    stats = residual_stats(DatasetSpec(), [0.01, 0.02, 0.04, 0.08], seed=0, repeats=SEEDS)
    dt = time.perf_counter() - t0
    means = [s.mean for s in stats]
    variances = [s.variance for s in stats]
    ok_mean = all(abs(m) <= 0.05 for m in means)
    ok_var = all(a <= b for a, b in zip(variances, variances[1:]))
    ok = ok_mean and ok_var and dt < 20.0
    report(5, ok, "means " + ", ".join(f"{m:+.4f}" for m in means)
                  + " (need |mu| <= 0.05); variances " + ", ".join(f"{v:.4g}" for v in variances)
                  + f" (nondecreasing {ok_var}), {dt:.2f}s")


def test_06_gamma_scaling(report):
    t0 = time.perf_counter()
    pairs = gamma_scaling_check(seed=0)
    r2 = r2_identity(pairs)
    dt = time.perf_counter() - t0
    diff = max(abs(p.mse_unscaled - p.mse_scaled) for p in pairs)
    ok = len(pairs) == 5 and diff <= 1e-9 and r2 > 0.99 and dt < 20.0
    report(6, ok, f"max pair difference {diff:.1e}, R^2 {r2:.6f}, {dt:.2f}s")


def test_07_density_calibration(report):
    t0 = time.perf_counter()
    pts = [sense_margin(b) for b in range(1, 7)]
    dt = time.perf_counter() - t0
    m3, m4 = pts[2].sense_margin, pts[3].sense_margin
    logs = [p.log10_margin for p in pts]
    dec = all(a > b for a, b in zip(logs, logs[1:]))
    ok = 700 <= m3 <= 1300 and 70 <= m4 <= 130 and dec and dt < 1.0
    report(7, ok, f"margin(3)={m3:.1f}, margin(4)={m4:.2f}, log10 strictly decreasing {dec}, {dt:.2f}s")


def test_08_fewshot_properties(report):
    t0 = time.perf_counter()
    span = 2.3
    sep = synth_embeddings(20, 10, cluster_std=0.02 * span, seed=21)
    acc_sep = sweep_accuracy(sep, 5, 5, 500, [0.4], [0.0], seed=5)[0].accuracy
    hard = synth_embeddings(20, 10, cluster_std=0.4, seed=22)
    widths = [0.2, 0.3, 0.4, 0.5, 0.6, 0.7]
    grid = sweep_accuracy(hard, 5, 5, 500, widths, [0.0, 0.1], seed=6)
    clean = [c.accuracy for c in grid if c.noise_std == 0.0]
    noisy = [c.accuracy for c in grid if c.noise_std == 0.1]
    spread = max(clean) - min(clean)
    drop = max(a - b for a, b in zip(clean, noisy))
    dt = time.perf_counter() - t0
    ok = acc_sep == 1.0 and spread < 0.05 and drop < 0.10 and dt < 60.0
    report(8, ok, f"(a) separable accuracy {acc_sep:.3f}; (b) plateau spread "
                  f"{100 * spread:.1f} pts over 0.2-0.7 V; (c) worst drop at sigma=0.1 "
                  f"{100 * drop:.1f} pts, {dt:.2f}s")


def test_09_search_oracle(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    mismatches = 0
    for _ in range(100):
        m, d = (int(v) for v in rng.integers(1, 65, 2))
        a, b = rng.uniform(-0.3, 2.0, (2, m, d))
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        q = rng.uniform(-0.3, 2.0, d)
        got = analog_hamming(AcamArray(lo, hi), q).scores.tolist()
        want = [sum(1 for j in range(d) if lo[i, j] <= q[j] <= hi[i, j]) for i in range(m)]
        mismatches += got != want
    dt = time.perf_counter() - t0
    report(9, mismatches == 0 and dt < 5.0, f"{mismatches} of 100 arrays differ from the loop, {dt:.2f}s")


def test_10_pipeline_identity(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    x = rng.uniform(0, 1, 64)
    model = fit(x, np.sin(5 * x) + rng.normal(0, 0.2, 64), KernelSpec(), 1e-3)
    q = rng.uniform(-0.1, 1.1, 100)
    diff = float(np.max(np.abs(predict_acam(model, q) - predict_exact(model, q))))
    dt = time.perf_counter() - t0
    report(10, diff <= 1e-12 and dt < 1.0, f"max |acam - exact| {diff:.1e} on 100 queries, {dt:.3f}s")


def test_11_op_count(report):
    exact = op_count(64, 64, OpMode.EXACT_SOFTWARE)
    tally = 64 * (64 + 64 + 64 + 1 + 1) + 64 * 2
    ok = exact.count == tally and 0.1 <= exact.count / 4096 <= 10
    ok &= all(op_count(m, d, OpMode.ACAM).count == 1 for m, d in [(1, 1), (64, 64), (500, 3)])
    report(11, ok, f"exact software {exact.count} ops ({exact.formula}), hand tally {tally}, "
                   f"ratio to 4096 = {exact.count / 4096:.2f}; ACAM 1")
