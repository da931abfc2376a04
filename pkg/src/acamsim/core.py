"""ACAM cells and arrays.

A cell stores a closed voltage window ``[lower, upper]``: ``upper`` is the NMOS
threshold and ``lower`` the PMOS threshold.  A search-line voltage inside the
window leaves both devices in cutoff (match); outside it one device conducts
and discharges the match line.

Arrays keep their window bounds as two read-only ``(m, d)`` numpy arrays.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .device import DEFAULT_RANGE, DeviceConfig, FefetParams, Polarity, channel_current
from .errors import ParseError


@dataclass(frozen=True)
class MatchWindow:
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError(f"window lower bound {self.lower} exceeds upper bound {self.upper}")

    @property
    def center(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class NoiseSpec:
    """Additive Gaussian perturbation of window bounds."""

    std: float
    mean: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.std < 0:
            raise ValueError("noise std must be nonnegative")


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class AcamArray:
    """An ``m x d`` grid of match windows with one drain weight per row."""

    lower: np.ndarray
    upper: np.ndarray
    drain_weights: np.ndarray = None
    v_range: tuple = DEFAULT_RANGE

    def __post_init__(self):
        lower = np.atleast_2d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_2d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape:
            raise ValueError(f"bound shapes differ: {lower.shape} vs {upper.shape}")
        if np.any(lower > upper):
            raise ValueError("every window needs lower <= upper")
        v_min, v_max = self.v_range
        if v_min >= v_max:
            raise ValueError("operating range needs v_min < v_max")
        if lower.size and (lower.min() < v_min or upper.max() > v_max):
            raise ValueError(f"window bounds leave operating range [{v_min}, {v_max}]")
        weights = np.ones(lower.shape[0]) if self.drain_weights is None else self.drain_weights
        weights = np.asarray(weights, dtype=float).reshape(-1)
        if weights.shape != (lower.shape[0],):
            raise ValueError("need one drain weight per row")
        if not np.all(np.isfinite(weights)):
            raise ValueError("drain weights must be finite")
        object.__setattr__(self, "lower", _frozen(lower))
        object.__setattr__(self, "upper", _frozen(upper))
        object.__setattr__(self, "drain_weights", _frozen(weights))
        object.__setattr__(self, "v_range", (float(v_min), float(v_max)))

    @property
    def m(self) -> int:
        return self.lower.shape[0]

    @property
    def d(self) -> int:
        return self.lower.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.lower.shape

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def window(self, row: int, col: int) -> MatchWindow:
        return MatchWindow(float(self.lower[row, col]), float(self.upper[row, col]))

    def with_weights(self, weights) -> AcamArray:
        return AcamArray(self.lower, self.upper, weights, self.v_range)

    def same_windows(self, other: AcamArray) -> bool:
        return (
            self.shape == other.shape
            and np.array_equal(self.lower, other.lower)
            and np.array_equal(self.upper, other.upper)
        )

    @classmethod
    def from_windows(cls, rows, drain_weights=None, v_range=DEFAULT_RANGE) -> AcamArray:
        """Build from nested sequences of ``MatchWindow`` or ``(lower, upper)`` pairs."""
        rows = [[w if isinstance(w, MatchWindow) else MatchWindow(*w) for w in r] for r in rows]
        d = len(rows[0]) if rows else 0
        if any(len(r) != d for r in rows):
            raise ValueError("ragged window rows")
        lower = np.array([[w.lower for w in r] for r in rows], dtype=float).reshape(len(rows), d)
        upper = np.array([[w.upper for w in r] for r in rows], dtype=float).reshape(len(rows), d)
        return cls(lower, upper, drain_weights, v_range)

    @classmethod
    def from_centers(cls, centers, width, quant_bits=None, drain_weights=None,
                     v_range=DEFAULT_RANGE) -> AcamArray:
        """Vectorized ``make_window`` over an ``(m, d)`` grid of centers."""
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        lower, upper = _window_bounds(centers, width, quant_bits, v_range)
        return cls(lower, upper, drain_weights, v_range)


def quantize(values, bits: int, v_range=DEFAULT_RANGE):
    """Snap to the nearest of ``2**bits`` uniform levels spanning ``v_range``.

    Values outside the range go to the end levels.
    """
    if bits < 1:
        raise ValueError("quantization needs at least one bit")
    v_min, v_max = v_range
    n = 2 ** bits
    step = (v_max - v_min) / (n - 1)
    idx = np.clip(np.floor((np.asarray(values, dtype=float) - v_min) / step + 0.5), 0, n - 1)
    out = v_min + idx * step
    return float(out) if np.ndim(out) == 0 else out


def _window_bounds(center, width, quant_bits, v_range):
    if np.any(np.asarray(width) < 0):
        raise ValueError(f"window width must be nonnegative, got {width}")
    c = np.asarray(center, dtype=float)
    if quant_bits is not None:
        c = np.asarray(quantize(c, quant_bits, v_range))
    half = 0.5 * np.asarray(width, dtype=float)
    v_min, v_max = v_range
    return np.clip(c - half, v_min, v_max), np.clip(c + half, v_min, v_max)


def make_window(center: float, width: float, quant_bits: int | None = None,
                v_range=DEFAULT_RANGE) -> MatchWindow:
    """Window of the given width around ``center``.

    With ``quant_bits`` the center is first snapped to ``2**quant_bits`` levels
    over ``v_range``; the width is kept exact.  Bounds are clamped to the range.
    """
    lower, upper = _window_bounds(center, width, quant_bits, v_range)
    return MatchWindow(float(lower), float(upper))


def perturb_windows(array: AcamArray, noise: NoiseSpec) -> AcamArray:
    """Add independent Gaussian noise to every lower and upper bound.

    Bounds are re-clamped to the operating range and swapped where noise
    inverted them.  The result depends only on ``noise.seed``.
    """
    rng = np.random.default_rng(noise.seed)
    shape = array.shape
    dl = rng.normal(noise.mean, noise.std, size=shape)
    du = rng.normal(noise.mean, noise.std, size=shape)
    v_min, v_max = array.v_range
    lo = np.clip(array.lower + dl, v_min, v_max)
    hi = np.clip(array.upper + du, v_min, v_max)
    return AcamArray(np.minimum(lo, hi), np.maximum(lo, hi), array.drain_weights, array.v_range)


def cell_match(window: MatchWindow, v_sl) -> bool:
    return bool(window.lower <= v_sl <= window.upper)


def match_matrix(array: AcamArray, query) -> np.ndarray:
    """Boolean ``(m, d)`` membership of each query element in its column's windows."""
    q = _check_query(array, query)
    return (array.lower <= q) & (q <= array.upper)


def _cell_current(lower, upper, v_sl, config: DeviceConfig):
    n = FefetParams(Polarity.NMOS, 0.0, config.subthreshold_swing_mv, config.i_on, config.i_floor)
    p = FefetParams(Polarity.PMOS, 0.0, config.subthreshold_swing_mv, config.i_on, config.i_floor)
    v = np.asarray(v_sl, dtype=float)
    # thresholds enter only through the offset, so shift the query instead
    i_n = channel_current(n, v - upper)
    i_p = channel_current(p, v - lower)
    return i_n + i_p


def cell_current(window: MatchWindow, v_sl, config: DeviceConfig | None = None):
    """Sum of the NMOS (threshold ``upper``) and PMOS (threshold ``lower``) currents."""
    config = config or DeviceConfig()
    out = _cell_current(window.lower, window.upper, v_sl, config)
    return float(out) if np.ndim(out) == 0 else out


def cell_currents(array: AcamArray, query, config: DeviceConfig | None = None) -> np.ndarray:
    q = _check_query(array, query)
    return _cell_current(array.lower, array.upper, q, config or DeviceConfig())


def row_mismatch_current(array: AcamArray, row: int, query,
                         config: DeviceConfig | None = None) -> float:
    """Total discharge current of one match line."""
    if not 0 <= row < array.m:
        raise IndexError(f"row {row} outside [0, {array.m})")
    q = _check_query(array, query)
    cur = _cell_current(array.lower[row], array.upper[row], q, config or DeviceConfig())
    return float(np.sum(cur))


def row_matches(array: AcamArray, row: int, query) -> bool:
    """Match line stays high only when every cell in the row matches."""
    return bool(np.all(match_matrix(array, query)[row]))


def _check_query(array: AcamArray, query) -> np.ndarray:
    q = np.asarray(query, dtype=float).reshape(-1)
    if q.shape[0] != array.d:
        raise ValueError(f"query has {q.shape[0]} elements, expected d={array.d}")
    return q


# -- CSV ---------------------------------------------------------------------
#
# first line:  m,d,v_min,v_max
# then one line per ACAM row, each cell written as lower:upper


def dump_array_csv(array: AcamArray) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([array.m, array.d, repr(array.v_range[0]), repr(array.v_range[1])])
    for i in range(array.m):
        writer.writerow(f"{lo!r}:{hi!r}" for lo, hi in zip(array.lower[i].tolist(),
                                                           array.upper[i].tolist()))
    return buf.getvalue()


def save_array_csv(array: AcamArray, path) -> None:
    Path(path).write_text(dump_array_csv(array))


def parse_array_csv(text: str, path=None) -> AcamArray:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ParseError("empty array file", path=path, line=1)
    try:
        m, d = int(rows[0][0]), int(rows[0][1])
        v_range = (float(rows[0][2]), float(rows[0][3]))
    except (IndexError, ValueError):
        raise ParseError("header must be m,d,v_min,v_max", path=path, line=1) from None
    body = [(n, r) for n, r in enumerate(rows[1:], start=2) if r]
    if len(body) != m:
        raise ParseError(f"header declares {m} rows, found {len(body)}", path=path)
    lower = np.empty((m, d))
    upper = np.empty((m, d))
    for i, (lineno, row) in enumerate(body):
        if len(row) != d:
            raise ParseError(f"expected {d} cells, found {len(row)}", path=path, line=lineno)
        for j, cell in enumerate(row):
            try:
                lo, hi = cell.split(":")
                lower[i, j], upper[i, j] = float(lo), float(hi)
            except ValueError:
                raise ParseError(f"bad cell {cell!r}, expected lower:upper",
                                 path=path, line=lineno) from None
    try:
        return AcamArray(lower, upper, v_range=v_range)
    except ValueError as exc:
        raise ParseError(str(exc), path=path) from None


def load_array_csv(path) -> AcamArray:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read array file: {exc}", path=path) from exc
    return parse_array_csv(text, path=path)
