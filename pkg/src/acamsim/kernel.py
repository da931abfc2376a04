"""Kernel ridge regression and one-step ACAM inference.

Three kernels are available: the Gaussian (RBF), the Laplace kernel and the
ACAM surrogate ``max(0, 2 - exp(r**2 / (2 gamma**2)))`` that a match line
produces.  ``fit`` solves ``(K + lam * m * I) alpha = y``; ``predict_acam``
programs one ACAM row per training point, puts ``alpha_i`` on the drain and
reads the weighted kernel sum off the match lines.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from .core import AcamArray, NoiseSpec, perturb_windows, quantize
from .errors import ParseError, SingularSystemError

DEFAULT_GAMMA = 0.1
DEFAULT_LAMBDA = 1e-3
RESIDUAL_TOL = 1e-8
# reciprocal condition below this is treated as singular
_RCOND_MIN = 1e-14


class KernelKind(enum.Enum):
    RBF = "rbf"
    LAPLACE = "laplace"
    ACAM_SURROGATE = "acam"


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind = KernelKind.ACAM_SURROGATE
    gamma: float = DEFAULT_GAMMA
    c: float = 1.0

    def __post_init__(self):
        if self.kind is KernelKind.LAPLACE:
            if not self.c > 0:
                raise ValueError("Laplace rate c must be positive")
        elif not self.gamma > 0:
            raise ValueError("gamma must be positive")


def _check_gamma(gamma):
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")


def support_radius(gamma: float) -> float:
    """Distance at which the surrogate kernel reaches zero."""
    _check_gamma(gamma)
    return gamma * math.sqrt(2.0 * math.log(2.0))


def _surrogate_from_sq(r2, gamma):
    # exponents past ln 2 give 0 anyway; capping avoids overflow
    z = np.minimum(np.asarray(r2, dtype=float) / (2.0 * gamma * gamma), 1.0)
    return np.maximum(0.0, 2.0 - np.exp(z))


def _sqdist(x, x_prime):
    diff = np.asarray(x, dtype=float) - np.asarray(x_prime, dtype=float)
    return float(np.sum(diff * diff))


def surrogate_kernel(x, x_prime, gamma: float = DEFAULT_GAMMA) -> float:
    _check_gamma(gamma)
    return float(_surrogate_from_sq(_sqdist(x, x_prime), gamma))


def rbf_kernel(x, x_prime, gamma: float = DEFAULT_GAMMA) -> float:
    _check_gamma(gamma)
    return math.exp(-_sqdist(x, x_prime) / (2.0 * gamma * gamma))


def laplace_kernel(x, x_prime, c: float = 1.0) -> float:
    if not c > 0:
        raise ValueError(f"Laplace rate c must be positive, got {c}")
    return math.exp(-c * math.sqrt(_sqdist(x, x_prime)))


def _as_rows(x):
    x = np.asarray(x, dtype=float)
    return x.reshape(-1, 1) if x.ndim <= 1 else x


def pairwise_kernel(a, b, spec: KernelSpec) -> np.ndarray:
    """Kernel matrix between the rows of ``a`` and the rows of ``b``."""
    a, b = _as_rows(a), _as_rows(b)
    diff = a[:, None, :] - b[None, :, :]
    r2 = np.einsum("ijk,ijk->ij", diff, diff)
    if spec.kind is KernelKind.RBF:
        return np.exp(-r2 / (2.0 * spec.gamma ** 2))
    if spec.kind is KernelKind.LAPLACE:
        return np.exp(-spec.c * np.sqrt(r2))
    return _surrogate_from_sq(r2, spec.gamma)


def gram_matrix(train_x, spec: KernelSpec) -> np.ndarray:
    x = _as_rows(train_x)
    if x.shape[0] < 1:
        raise ValueError("need at least one training point")
    k = pairwise_kernel(x, x, spec)
    return 0.5 * (k + k.T)


@dataclass(frozen=True, eq=False)
class KernelModel:
    train_x: np.ndarray
    alpha: np.ndarray
    spec: KernelSpec
    lam: float

    @property
    def m(self) -> int:
        return self.train_x.shape[0]

    @property
    def d(self) -> int:
        return self.train_x.shape[1]

    def to_dict(self) -> dict:
        return {
            "kind": self.spec.kind.value,
            "gamma": self.spec.gamma,
            "c": self.spec.c,
            "lambda": self.lam,
            "train_x": self.train_x.tolist(),
            "alpha": self.alpha.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> KernelModel:
        spec = KernelSpec(KernelKind(data.get("kind", "acam")), data["gamma"], data.get("c", 1.0))
        return cls(_as_rows(data["train_x"]), np.asarray(data["alpha"], dtype=float),
                   spec, float(data["lambda"]))

    @classmethod
    def from_json(cls, text: str) -> KernelModel:
        return cls.from_dict(json.loads(text))


def solve_ridge(k, y, lam: float) -> np.ndarray:
    """Solve ``(k + lam * m * I) alpha = y``.

    Tries a Cholesky factorization first; the surrogate Gram matrix can be
    indefinite, in which case LU with partial pivoting takes over.
    """
    if lam < 0:
        raise ValueError("ridge constant must be nonnegative")
    k = np.asarray(k, dtype=float)
    y = np.asarray(y, dtype=float)
    m = k.shape[0]
    a = k + lam * m * np.eye(m)
    try:
        alpha = scipy.linalg.cho_solve(scipy.linalg.cho_factor(a), y)
    except np.linalg.LinAlgError:
        alpha = _lu_solve(a, y)
    ynorm = np.linalg.norm(y)
    if ynorm == 0:
        return np.zeros(m)
    resid = np.linalg.norm(a @ alpha - y) / ynorm
    if resid > RESIDUAL_TOL:
        # one round of iterative refinement
        alpha = alpha + _lu_solve(a, y - a @ alpha)
        resid = np.linalg.norm(a @ alpha - y) / ynorm
    if not np.isfinite(resid) or resid > RESIDUAL_TOL:
        cond = float(np.linalg.cond(a))
        raise SingularSystemError(
            f"ridge system not solvable to tolerance (residual {resid:.2e}, "
            f"condition estimate {cond:.3e})", condition=cond)
    return alpha


def _lu_solve(a, y):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a)
    anorm = np.linalg.norm(a, 1)
    rcond, _ = scipy.linalg.lapack.dgecon(lu, anorm, norm="1")
    if not rcond >= _RCOND_MIN:
        cond = math.inf if rcond == 0 else 1.0 / rcond
        raise SingularSystemError(
            f"singular ridge system (condition estimate {cond:.3e}); use lam > 0",
            condition=cond)
    return scipy.linalg.lu_solve((lu, piv), y)


def fit(train_x, y, spec: KernelSpec | None = None, lam: float = DEFAULT_LAMBDA) -> KernelModel:
    """Kernel ridge fit.  The Gram matrix uses ``spec``'s own kernel."""
    spec = spec or KernelSpec()
    x = _as_rows(train_x)
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != x.shape[0]:
        raise ValueError(f"{x.shape[0]} inputs but {y.shape[0]} targets")
    alpha = solve_ridge(gram_matrix(x, spec), y, lam)
    return KernelModel(x.copy(), alpha, spec, float(lam))


def _queries(model: KernelModel, x):
    """Return queries as ``(n, d)`` and whether a single value was asked for."""
    x = np.asarray(x, dtype=float)
    if model.d == 1:
        return x.reshape(-1, 1), x.ndim == 0 or x.shape == (1,)
    if x.ndim == 1:
        if x.shape[0] != model.d:
            raise ValueError(f"query has {x.shape[0]} elements, expected d={model.d}")
        return x.reshape(1, -1), True
    if x.shape[1] != model.d:
        raise ValueError(f"queries have {x.shape[1]} columns, expected d={model.d}")
    return x, False


def predict_exact(model: KernelModel, x):
    """Weighted kernel sum over the training set (software reference)."""
    q, single = _queries(model, x)
    out = pairwise_kernel(q, model.train_x, model.spec) @ model.alpha
    return float(out[0]) if single else out


def kernel_array(model: KernelModel, quant_bits: int | None = None,
                 noise: NoiseSpec | None = None, v_range=None) -> AcamArray:
    """Program the fitted model into an ACAM array.

    Row ``i`` holds training point ``i``: each cell's window is centred on the
    (optionally quantized) coordinate with the surrogate's zero-crossing width,
    and the drain weight is ``alpha_i``.  Quantization levels span
    ``v_range``, by default the extent of the training inputs; the operating
    range is that span widened by half a window on each side.
    """
    if model.spec.kind is not KernelKind.ACAM_SURROGATE:
        raise ValueError(f"ACAM inference needs the surrogate kernel, model uses {model.spec.kind.value}")
    half = support_radius(model.spec.gamma)
    if v_range is None:
        v_range = (float(model.train_x.min()), float(model.train_x.max()))
    lo, hi = v_range
    if hi <= lo:
        lo, hi = lo - half, hi + half
    centers = model.train_x
    if quant_bits:
        centers = quantize(centers, quant_bits, (lo, hi))
    operating = (lo - half, hi + half)
    array = AcamArray.from_centers(centers, 2.0 * half, drain_weights=model.alpha,
                                   v_range=operating)
    if noise is not None and (noise.std > 0 or noise.mean != 0):
        array = perturb_windows(array, noise)
    return array


def acam_readout(array: AcamArray, gamma: float, x) -> np.ndarray:
    """Match-line outputs for a batch of queries ``x`` of shape ``(n, d)``.

    The kernel of a cell is centred on its window midpoint.  With several
    columns each cell contributes its own one-dimensional kernel to the row.
    """
    x = _as_rows(x)
    c = array.centers
    if array.d == 1:
        k = _surrogate_from_sq((x - c[:, 0][None, :]) ** 2, gamma)
    else:
        diff = x[:, None, :] - c[None, :, :]
        k = _surrogate_from_sq(diff * diff, gamma).sum(axis=2)
    return k @ array.drain_weights


def predict_acam(model: KernelModel, x, quant_bits: int | None = None,
                 noise: NoiseSpec | None = None, v_range=None):
    """One-step ACAM prediction ``sum_i alpha_i K_acam(x_i_stored, x)``."""
    q, single = _queries(model, x)
    array = kernel_array(model, quant_bits, noise, v_range)
    out = acam_readout(array, model.spec.gamma, q)
    return float(out[0]) if single else out


def parse_xy_csv(text: str, path=None) -> tuple[np.ndarray, np.ndarray]:
    """Two numeric columns ``x,y``; an optional ``x,y`` header line is skipped."""
    xs, ys = [], []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or not "".join(row).strip():
            continue
        if lineno == 1 and [c.strip().lower() for c in row] == ["x", "y"]:
            continue
        if len(row) != 2:
            raise ParseError(f"expected 2 columns, found {len(row)}", path=path, line=lineno)
        try:
            xs.append(float(row[0]))
            ys.append(float(row[1]))
        except ValueError:
            raise ParseError(f"non-numeric cell in {row!r}", path=path, line=lineno) from None
    return np.array(xs), np.array(ys)


def load_xy_csv(path) -> tuple[np.ndarray, np.ndarray]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read data file: {exc}", path=path) from exc
    return parse_xy_csv(text, path=path)


def dump_xy_csv(x, y, header=("x", "y")) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in zip(*(np.asarray(c).tolist() for c in (x, y))):
        w.writerow([repr(v) for v in row])
    return buf.getvalue()
