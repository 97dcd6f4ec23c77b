"""Temperature and supply-voltage perturbation of a die's delay grid.

The perturbation is a calibration model, not device physics: a linear
path-level offset in temperature and voltage plus a small Gaussian jitter,
sized so that quantised responses flip at rates comparable to delay-based
PUF hardware (single-digit percentages for the 2nd counter bit, roughly
double that for the LSB).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ParameterError
from .model import DelayMatrix

NOMINAL_TEMPERATURE = 25.0
NOMINAL_VDD = 5.0

#: Environment sweeps used by the reproducibility experiments.
TEMPERATURE_GRID = (0.0, 10.0, 20.0, 30.0, 40.0, 50.0)
VOLTAGE_GRID = (4.64, 4.70, 4.76, 4.82, 4.88, 4.94)

_JITTER_TAG = 0x1E42


@dataclass(frozen=True)
class EnvCondition:
    """Ambient temperature (Celsius) and supply voltage (volts)."""

    temperature: float = NOMINAL_TEMPERATURE
    vdd: float = NOMINAL_VDD

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 50.0:
            raise ParameterError(
                f"temperature {self.temperature} outside the supported 0..50 C range"
            )
        # The studied supply sweep runs below nominal only.
        if not 4.64 <= self.vdd <= NOMINAL_VDD:
            raise ParameterError(
                f"vdd {self.vdd} outside the supported 4.64..5.0 V range"
            )

    @property
    def is_nominal(self) -> bool:
        return self.temperature == NOMINAL_TEMPERATURE and self.vdd == NOMINAL_VDD


NOMINAL = EnvCondition()


@dataclass(frozen=True)
class NoiseParams:
    """Calibration constants of the environmental model.

    ``temp_coeff`` and ``vdd_coeff`` are deterministic path-delay offsets in
    ns per degree / ns per volt; ``jitter_sd`` is the standard deviation of
    the random per-path offset in ns.  Defaults keep the worst-case
    deterministic offset under ~1.1 ns so the 2nd counter bit stays below a
    12% flip rate over the temperature sweep and 18% at the voltage corner.
    """

    temp_coeff: float = 0.03
    vdd_coeff: float = -3.0
    jitter_sd: float = 0.2

    def __post_init__(self) -> None:
        if self.jitter_sd < 0:
            raise ParameterError("jitter_sd must be non-negative")


def deterministic_path_offset(env: EnvCondition, noise: NoiseParams) -> float:
    """Mean path-delay offset (ns) of an average-length path at ``env``."""
    return noise.temp_coeff * (env.temperature - NOMINAL_TEMPERATURE) + (
        noise.vdd_coeff * (env.vdd - NOMINAL_VDD)
    )


def perturb_chip(
    chip: DelayMatrix,
    env: EnvCondition,
    noise: NoiseParams = NoiseParams(),
    seed: int = 0,
) -> DelayMatrix:
    """Return a copy of a die as it behaves under ``env``.

    Every gate delay is scaled by a global factor so that an average path
    shifts by :func:`deterministic_path_offset`, then per-gate jitter is
    added with variance ``jitter_sd**2 / stages`` so each path accumulates
    jitter of standard deviation ``jitter_sd``.  At the nominal condition
    the die is returned unchanged.
    """
    if not isinstance(env, EnvCondition):
        raise ParameterError("env must be an EnvCondition instance")
    if env.is_nominal:
        return chip
    params = chip.params
    path_mean = params.stages * params.mean_unit_delay
    factor = 1.0 + deterministic_path_offset(env, noise) / path_mean
    entries = chip.entries * factor
    if noise.jitter_sd > 0:
        rng = np.random.default_rng(np.random.SeedSequence([chip.seed, seed, _JITTER_TAG]))
        entries = entries + rng.normal(
            0.0, noise.jitter_sd / np.sqrt(params.stages), size=entries.shape
        )
    entries = np.maximum(entries, 0.1 * params.mean_unit_delay)
    return replace(
        chip,
        entries=entries,
        chip_id=f"{chip.chip_id}@{env.temperature:g}C/{env.vdd:g}V",
    )
