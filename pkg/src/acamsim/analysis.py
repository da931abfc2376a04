"""Quantitative studies built on the simulator.

* bit density against match-line sense margin
* kernel-regression sweeps over gamma, quantization and window noise
* residual statistics of the noisy ACAM predictor
* the gamma/x scaling law of the surrogate kernel
* operation counts of software and ACAM kernel evaluation
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .core import NoiseSpec, cell_current, MatchWindow
from .device import DeviceConfig, load_device_config
from .kernel import DEFAULT_LAMBDA, KernelSpec, fit, predict_acam

CALIBRATION_FILE = "density_calibration.cfg"


def calibration_config() -> DeviceConfig:
    """Device parameters shipped for the sense-margin study."""
    with resources.as_file(resources.files("acamsim") / "data" / CALIBRATION_FILE) as path:
        return load_device_config(path)


# -- density vs sense margin -------------------------------------------------


@dataclass(frozen=True)
class DensityPoint:
    bits: int
    window_width: float
    sense_margin: float
    log10_margin: float
    degenerate: bool = False


def sense_margin(bits: int, v_range=None, config: DeviceConfig | None = None) -> DensityPoint:
    """Match-line current ratio for ``2**bits`` abutting windows.

    The mismatch current is the smallest cell current seen when the query sits
    at the centre of a neighbouring window; the match current is the largest
    cell current with the query at the centre of the cell's own window.  Both
    include the configured match-line leakage.  Windows narrower than two
    subthreshold swings are flagged ``degenerate``.
    """
    if bits < 1:
        raise ValueError("bits must be at least 1")
    config = config or calibration_config()
    v_min, v_max = v_range or config.v_range
    n = 2 ** bits
    width = (v_max - v_min) / n
    lowers = v_min + width * np.arange(n)
    windows = [MatchWindow(lo, lo + width) for lo in lowers]
    centers = lowers + 0.5 * width
    match = max(cell_current(w, c, config) for w, c in zip(windows, centers)) + config.ml_leak
    mismatch = min(
        cell_current(windows[k], centers[j], config)
        for k in range(n) for j in (k - 1, k + 1) if 0 <= j < n
    ) + config.ml_leak
    margin = mismatch / match
    degenerate = width < 2 * config.subthreshold_swing_mv / 1000.0
    return DensityPoint(bits, float(width), float(margin), float(np.log10(margin)), degenerate)


def density_sweep(bits_list, v_range=None, config: DeviceConfig | None = None) -> list[DensityPoint]:
    config = config or calibration_config()
    return [sense_margin(b, v_range, config) for b in bits_list]


# -- kernel regression sweeps --------------------------------------------------


@dataclass(frozen=True)
class DatasetSpec:
    """``y = sin(freq * x) + N(0, label_noise)`` with uniform inputs."""

    freq: float = 5.0
    x_range: tuple = (0.0, 1.0)
    n_train: int = 64
    n_test: int = 256
    label_noise: float = 0.2

    def truth(self, x):
        return np.sin(self.freq * np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class Dataset:
    train_x: np.ndarray
    train_y: np.ndarray
    test_x: np.ndarray
    test_f: np.ndarray  # noiseless targets
    test_y: np.ndarray


def make_dataset(spec: DatasetSpec, seed: int) -> Dataset:
    rng = np.random.default_rng(seed)
    lo, hi = spec.x_range
    train_x = np.sort(rng.uniform(lo, hi, spec.n_train))
    test_x = np.sort(rng.uniform(lo, hi, spec.n_test))
    train_y = spec.truth(train_x) + rng.normal(0.0, spec.label_noise, spec.n_train)
    test_f = spec.truth(test_x)
    test_y = test_f + rng.normal(0.0, spec.label_noise, spec.n_test)
    return Dataset(train_x, train_y, test_x, test_f, test_y)


def sub_seed(seed: int, *path: int) -> int:
    """Deterministic child seed for a position in a sweep."""
    return int(np.random.SeedSequence([seed, *path]).generate_state(1)[0])


@dataclass(frozen=True)
class KernelSweepRow:
    gamma: float
    bits: int  # 0 means unquantized
    noise_std: float
    mse: float  # against the noiseless function
    mse_noisy: float  # against noisy test labels
    repeats: int


def kernel_sweep(spec: DatasetSpec, gammas, bits_list, noise_stds, seed: int,
                 lam: float = DEFAULT_LAMBDA, repeats: int = 1,
                 threads: int = 1) -> list[KernelSweepRow]:
    """Test MSE of the ACAM predictor over a (gamma, bits, noise) grid.

    Repeat ``r`` draws its dataset from ``sub_seed(seed, r)``; all grid cells
    of a repeat share that dataset and one window-noise seed.
    """
    gammas, bits_list, noise_stds = list(gammas), list(bits_list), list(noise_stds)

    def run(r):
        data = make_dataset(spec, sub_seed(seed, r))
        noise_seed = sub_seed(seed, r, 1)
        out = []
        for g in gammas:
            model = fit(data.train_x, data.train_y, KernelSpec(gamma=g), lam)
            for b in bits_list:
                for s in noise_stds:
                    pred = predict_acam(model, data.test_x, quant_bits=b or None,
                                        noise=NoiseSpec(s, seed=noise_seed))
                    out.append((np.mean((pred - data.test_f) ** 2),
                                np.mean((pred - data.test_y) ** 2)))
        return out

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_repeat = list(pool.map(run, range(repeats)))
    else:
        per_repeat = [run(r) for r in range(repeats)]
    means = np.mean(np.array(per_repeat, dtype=float), axis=0)
    rows, i = [], 0
    for g in gammas:
        for b in bits_list:
            for s in noise_stds:
                rows.append(KernelSweepRow(float(g), int(b or 0), float(s),
                                           float(means[i, 0]), float(means[i, 1]), repeats))
                i += 1
    return rows


@dataclass(frozen=True, eq=False)
class ResidualStats:
    noise_std: float
    mean: float
    variance: float
    counts: np.ndarray
    edges: np.ndarray
    n: int


def residual_stats(spec: DatasetSpec, noise_stds, seed: int, gamma: float = 0.1,
                   lam: float = DEFAULT_LAMBDA, quant_bits: int | None = None,
                   repeats: int = 10, bins: int = 21,
                   hist_range=(-1.0, 1.0)) -> list[ResidualStats]:
    """Residuals ``prediction - sin(freq x)`` of the noisy ACAM predictor.

    Mean and variance are averaged over ``repeats`` datasets; the histogram
    pools all residuals, with out-of-range values placed in the end bins.
    """
    noise_stds = [float(s) for s in noise_stds]
    res = {s: [] for s in noise_stds}
    for r in range(repeats):
        data = make_dataset(spec, sub_seed(seed, r))
        model = fit(data.train_x, data.train_y, KernelSpec(gamma=gamma), lam)
        noise_seed = sub_seed(seed, r, 1)
        for s in noise_stds:
            pred = predict_acam(model, data.test_x, quant_bits=quant_bits,
                                noise=NoiseSpec(s, seed=noise_seed))
            res[s].append(pred - data.test_f)
    out = []
    edges = np.linspace(hist_range[0], hist_range[1], bins + 1)
    for s in noise_stds:
        stack = np.array(res[s])
        pooled = np.clip(stack.ravel(), edges[0], edges[-1])
        counts, _ = np.histogram(pooled, bins=edges)
        out.append(ResidualStats(s, float(np.mean(stack.mean(axis=1))),
                                 float(np.mean(stack.var(axis=1))), counts, edges, pooled.size))
    return out


# -- gamma scaling -------------------------------------------------------------

# (frequency, scale factor k); the matched gamma of each function is 0.1 / k
DEFAULT_FAMILY = ((20.0, 4.0), (10.0, 2.0), (5.0, 1.0), (2.5, 0.5), (1.125, 0.25))
TARGET_GAMMA = 0.1


@dataclass(frozen=True)
class ScalingPair:
    freq: float
    k: float
    gamma_opt: float
    mse_unscaled: float
    mse_scaled: float


def gamma_scaling_check(family=DEFAULT_FAMILY, seed: int = 0, lam: float = DEFAULT_LAMBDA,
                        spec: DatasetSpec = DatasetSpec(),
                        target_gamma: float = TARGET_GAMMA) -> list[ScalingPair]:
    """MSE at the matched gamma against MSE after scaling ``x`` by ``k``.

    Both fits share one dataset draw per family member.  With ``k`` a power of
    two every distance scales exactly, so the two MSEs agree bitwise.
    """
    pairs = []
    for i, (freq, k) in enumerate(family):
        member = DatasetSpec(freq, spec.x_range, spec.n_train, spec.n_test, spec.label_noise)
        data = make_dataset(member, sub_seed(seed, i))
        gamma_opt = target_gamma / k
        m0 = fit(data.train_x, data.train_y, KernelSpec(gamma=gamma_opt), lam)
        m1 = fit(k * data.train_x, data.train_y, KernelSpec(gamma=target_gamma), lam)
        p0 = predict_acam(m0, data.test_x)
        p1 = predict_acam(m1, k * data.test_x)
        pairs.append(ScalingPair(freq, k, gamma_opt,
                                 float(np.mean((p0 - data.test_f) ** 2)),
                                 float(np.mean((p1 - data.test_f) ** 2))))
    return pairs


def r2_identity(pairs) -> float:
    """Coefficient of determination of ``mse_scaled`` against the line y = x."""
    x = np.array([p.mse_unscaled for p in pairs])
    y = np.array([p.mse_scaled for p in pairs])
    ss_res = float(np.sum((y - x) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0:
        return 1.0 if ss_res == 0 else -math.inf
    return 1.0 - ss_res / ss_tot


# -- operation count -------------------------------------------------------------


class OpMode(enum.Enum):
    EXACT_SOFTWARE = "exact"
    ACAM = "acam"


@dataclass(frozen=True)
class OpCount:
    m: int
    d: int
    mode: OpMode
    count: int
    formula: str


def op_count(m: int, d: int, mode: OpMode = OpMode.EXACT_SOFTWARE) -> OpCount:
    """Floating-point operations for one kernel-regression prediction.

    Software: each of the ``m`` kernel terms costs ``d`` subtractions, ``d``
    squarings and ``d`` accumulations, one scaling and one exponential
    (``3d + 2``), then a multiply and an add into the output (``2``).  The
    ACAM reads the whole sum in one analog step.
    """
    if m < 1 or d < 1:
        raise ValueError("m and d must be at least 1")
    mode = OpMode(mode)
    if mode is OpMode.ACAM:
        return OpCount(m, d, mode, 1, "1")
    return OpCount(m, d, mode, m * (3 * d + 2) + 2 * m, "m*(3*d + 2) + 2*m")
