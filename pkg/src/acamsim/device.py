"""FeFET device model: pulse-programmed threshold voltage and channel current.

Currents are in normalized units (``i_on`` defaults to 1).  Below threshold an
NMOS device follows a single-exponential subthreshold law with the configured
swing; a PMOS device is the mirror image.  Both are clamped to
``[i_floor, i_on]``.
"""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .errors import OutOfRangeError, ParseError

DEFAULT_RANGE = (-0.3, 2.0)
PULSE_MIN_V = 3.0
PULSE_MAX_V = 4.0


class Polarity(enum.Enum):
    NMOS = "nmos"
    PMOS = "pmos"


@dataclass(frozen=True)
class DeviceConfig:
    """Shared device parameters, loadable from a ``key = value`` file.

    ``ml_leak`` is a constant background current on the match line (sense
    amplifier and precharge leakage).  It only enters the sense-margin study.
    """

    subthreshold_swing_mv: float = 60.0
    i_on: float = 1.0
    i_floor: float = 1e-9
    v_min: float = DEFAULT_RANGE[0]
    v_max: float = DEFAULT_RANGE[1]
    level_count: int = 10
    ml_leak: float = 0.0

    def __post_init__(self):
        if self.subthreshold_swing_mv <= 0:
            raise ValueError("subthreshold_swing_mv must be positive")
        if not 0 < self.i_floor < self.i_on:
            raise ValueError("need 0 < i_floor < i_on")
        if self.v_min >= self.v_max:
            raise ValueError("need v_min < v_max")
        if self.level_count < 2:
            raise ValueError("level_count must be at least 2")
        if self.ml_leak < 0:
            raise ValueError("ml_leak must be nonnegative")

    @property
    def v_range(self) -> tuple[float, float]:
        return (self.v_min, self.v_max)

    def fefet(self, polarity: Polarity, v_th: float) -> FefetParams:
        if not self.v_min <= v_th <= self.v_max:
            raise OutOfRangeError(
                f"v_th={v_th} outside programmable range [{self.v_min}, {self.v_max}]"
            )
        return FefetParams(polarity, v_th, self.subthreshold_swing_mv, self.i_on, self.i_floor)

    def to_dict(self) -> dict:
        return asdict(self)


def load_device_config(path) -> DeviceConfig:
    """Read a plain-text device file.  Blank lines and ``#`` comments are ignored."""
    path = Path(path)
    types = {f.name: f.type for f in fields(DeviceConfig)}
    values = {}
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read device config: {exc}", path=path) from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", path=path, line=lineno)
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in types:
            raise ParseError(f"unknown key {key!r}", path=path, line=lineno)
        try:
            values[key] = int(value) if types[key] in ("int", int) else float(value)
        except ValueError:
            raise ParseError(f"bad value for {key}: {value!r}", path=path, line=lineno) from None
    try:
        return DeviceConfig(**values)
    except ValueError as exc:
        raise ParseError(str(exc), path=path) from None


@dataclass(frozen=True)
class FefetParams:
    polarity: Polarity
    v_th: float
    subthreshold_swing: float = 60.0  # mV/dec
    i_on: float = 1.0
    i_floor: float = 1e-9

    def __post_init__(self):
        if self.subthreshold_swing <= 0:
            raise ValueError("subthreshold_swing must be positive")
        if not 0 < self.i_floor < self.i_on:
            raise ValueError("need 0 < i_floor < i_on")


@dataclass(frozen=True)
class PulseProgram:
    amplitude: float
    level_count: int = 10

    def __post_init__(self):
        if not PULSE_MIN_V <= self.amplitude <= PULSE_MAX_V:
            raise OutOfRangeError(
                f"pulse amplitude {self.amplitude} V outside [{PULSE_MIN_V}, {PULSE_MAX_V}] V"
            )
        if self.level_count < 2:
            raise ValueError("level_count must be at least 2")


def threshold_levels(device_range=DEFAULT_RANGE, level_count: int = 10) -> np.ndarray:
    v_min, v_max = device_range
    return np.linspace(v_min, v_max, level_count)


def snap_to_level(v, device_range=DEFAULT_RANGE, level_count: int = 10) -> float:
    """Nearest of ``level_count`` uniform levels; exact midpoints round up."""
    v_min, v_max = device_range
    step = (v_max - v_min) / (level_count - 1)
    idx = np.floor((v - v_min) / step + 0.5)
    idx = np.clip(idx, 0, level_count - 1)
    return float(threshold_levels(device_range, level_count)[int(idx)])


def program_threshold(pulse: PulseProgram, device_range=DEFAULT_RANGE) -> float:
    """Threshold voltage reached after a write pulse.

    The amplitude is mapped affinely from [3, 4] V onto ``device_range`` and
    snapped to the pulse program's level grid.  Larger pulses never lower the
    threshold.
    """
    v_min, v_max = device_range
    frac = (pulse.amplitude - PULSE_MIN_V) / (PULSE_MAX_V - PULSE_MIN_V)
    # snap on the fraction so the endpoints land exactly on v_min / v_max
    idx = int(np.floor(frac * (pulse.level_count - 1) + 0.5))
    return float(threshold_levels(device_range, pulse.level_count)[idx])


def channel_current(params: FefetParams, v_sl):
    """Drain current at search-line voltage ``v_sl`` (scalar or array)."""
    v = np.asarray(v_sl, dtype=float)
    if params.polarity is Polarity.NMOS:
        overdrive = v - params.v_th
    else:
        overdrive = params.v_th - v
    decades = np.minimum(overdrive, 0.0) * 1000.0 / params.subthreshold_swing
    current = np.maximum(params.i_floor, params.i_on * np.power(10.0, decades))
    current = np.where(overdrive >= 0, params.i_on, current)
    return float(current) if current.ndim == 0 else current
