"""Behavioural model of a keyed barrel-shifter delay PUF.

One fabricated die is reduced to a ``width x stages`` grid of gate-delay
pairs.  Stage ``j`` either rotates a bit left by ``2**j`` positions (key bit
set, upper gate) or passes it straight through (key bit clear, lower gate),
so a key selects one of the ``width`` rotations and, with it, one delay path
per input bit.  A free-running counter quantises each path delay and one
chosen counter bit is XORed into the message bit travelling that path.  The
resulting map is invertible: running it backwards through the same die
removes the same delay bits.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import DimensionError, ParameterError

CHIP_SCHEMA_VERSION = 1

#: Width of the capture counter.  Realistic paths sit around count 30, so
#: saturation only ever signals a badly configured clock.
COUNTER_BITS = 10
COUNTER_MAX = (1 << COUNTER_BITS) - 1

_ASYMMETRY_TAG = 0x5A17


class Direction(Enum):
    """Which way message bits travel through the shifter."""

    FORWARD = "forward"
    REVERSE = "reverse"


@dataclass(frozen=True)
class FoundryParams:
    """Process parameters shared by every die of one simulated foundry run.

    The defaults describe an 8-stage, 256-bit shifter whose per-gate delays
    average 15 ns, giving full paths a mean near 120 ns with roughly a
    +/-25% spread, sampled by a 4 ns capture clock.
    """

    width: int = 256
    stages: int = 8
    mean_unit_delay: float = 15.0
    sd_unit_delay: float = 3.6
    clock_period: float = 4.0

    def __post_init__(self) -> None:
        if self.stages < 1 or self.width != 1 << self.stages:
            raise ParameterError(
                f"width {self.width} must equal 2**stages (stages={self.stages})"
            )
        if not self.mean_unit_delay > 0:
            raise ParameterError("mean_unit_delay must be positive")
        if self.sd_unit_delay < 0:
            raise ParameterError("sd_unit_delay must be non-negative")
        if not self.clock_period > 0:
            raise ParameterError("clock_period must be positive")

    @classmethod
    def with_width(cls, width: int, **kwargs) -> "FoundryParams":
        """Build params for a given power-of-two width."""
        if width < 2 or width & (width - 1):
            raise ParameterError(f"width {width} is not a power of two >= 2")
        return cls(width=width, stages=width.bit_length() - 1, **kwargs)


@dataclass(frozen=True)
class DelayMatrix:
    """Per-die grid of gate delays.

    ``entries[i, j]`` holds the ``(upper, lower)`` gate delays in nanoseconds
    of the shift unit at bit position ``i``, stage ``j``.  Instances are
    immutable; fresh grids come from :func:`generate_chip` and perturbed
    copies from the environment module.
    """

    params: FoundryParams
    entries: np.ndarray
    chip_id: str
    seed: int

    def __post_init__(self) -> None:
        expected = (self.params.width, self.params.stages, 2)
        if self.entries.shape != expected:
            raise DimensionError(
                f"delay grid shape {self.entries.shape} != {expected}"
            )
        if not np.all(np.isfinite(self.entries)) or np.any(self.entries <= 0):
            raise ParameterError("all gate delays must be finite and positive")

    @property
    def width(self) -> int:
        return self.params.width

    @property
    def stages(self) -> int:
        return self.params.stages


@dataclass(frozen=True)
class ResponseConfig:
    """Selects the entanglement bit and traversal direction.

    ``m`` indexes the quantised delay counter from the least significant bit
    (``m=1``).  Bits 1-3 carry the usable silicon entropy; anything up to the
    counter width is accepted.
    """

    m: int = 2
    direction: Direction = Direction.FORWARD

    def __post_init__(self) -> None:
        if not 1 <= self.m <= COUNTER_BITS:
            raise ParameterError(f"delay bit index m={self.m} outside 1..{COUNTER_BITS}")
        if not isinstance(self.direction, Direction):
            raise ParameterError(f"direction {self.direction!r} is not a Direction")


# ---------------------------------------------------------------------------
# bit-vector helpers


def as_bits(values, length: int | None = None, what: str = "bit vector") -> np.ndarray:
    """Coerce to a uint8 0/1 vector, optionally checking its length."""
    arr = np.asarray(values, dtype=np.uint8)
    if arr.ndim != 1:
        raise DimensionError(f"{what} must be one-dimensional")
    if not np.all(arr <= 1):
        raise ParameterError(f"{what} may only contain 0s and 1s")
    if length is not None and arr.shape[0] != length:
        raise DimensionError(f"{what} has length {arr.shape[0]}, expected {length}")
    return arr


def random_block(width: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a uniformly random message block."""
    return rng.integers(0, 2, size=width, dtype=np.uint8)


def random_key(stages: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a uniformly random shift key."""
    return rng.integers(0, 2, size=stages, dtype=np.uint8)


def key_from_amount(amount: int, stages: int) -> np.ndarray:
    """Key bits (LSB first) realising a left rotation by ``amount``."""
    width = 1 << stages
    if not 0 <= amount < width:
        raise ParameterError(f"rotation amount {amount} outside 0..{width - 1}")
    return ((amount >> np.arange(stages)) & 1).astype(np.uint8)


def block_to_hex(block) -> str:
    """Hex encoding of a bit vector, first bit in the MSB of the first byte."""
    return np.packbits(as_bits(block)).tobytes().hex()


def hex_to_block(text: str, width: int) -> np.ndarray:
    """Inverse of :func:`block_to_hex` for a known width."""
    bits = np.unpackbits(np.frombuffer(bytes.fromhex(text), dtype=np.uint8))
    if bits.shape[0] < width:
        raise DimensionError(f"hex string holds {bits.shape[0]} bits, expected {width}")
    return bits[:width].astype(np.uint8)


# ---------------------------------------------------------------------------
# chip generation


def generate_chip(seed: int, params: FoundryParams = FoundryParams()) -> DelayMatrix:
    """Sample one die's delay grid from the foundry distribution.

    Every gate delay is drawn independently from a normal distribution with
    the configured mean and standard deviation, floored at one tenth of the
    mean so extreme tails stay physical.  The same ``(seed, params)`` pair
    always reproduces the same grid bit for bit.
    """
    if not isinstance(params, FoundryParams):
        raise ParameterError("params must be a FoundryParams instance")
    if seed < 0:
        raise ParameterError("seed must be a non-negative integer")
    rng = np.random.default_rng(seed)
    draws = rng.normal(
        params.mean_unit_delay,
        params.sd_unit_delay,
        size=(params.width, params.stages, 2),
    )
    entries = np.maximum(draws, 0.1 * params.mean_unit_delay)
    return DelayMatrix(
        params=params,
        entries=entries,
        chip_id=f"chip-{seed:016x}",
        seed=int(seed),
    )


def subchip(chip: DelayMatrix, width: int, stages: int) -> DelayMatrix:
    """Carve a smaller shifter out of the top-left corner of a die.

    Used for scalability experiments: a 64x6 shifter behaves exactly like
    the corresponding corner of the full 256x8 grid.
    """
    if width > chip.width or stages > chip.stages:
        raise DimensionError("sub-chip cannot exceed the parent grid")
    params = replace(chip.params, width=width, stages=stages)
    return DelayMatrix(
        params=params,
        entries=chip.entries[:width, :stages].copy(),
        chip_id=f"{chip.chip_id}/sub{width}x{stages}",
        seed=chip.seed,
    )


# ---------------------------------------------------------------------------
# paths, delays and counters


def rotation_amount(key) -> int:
    """Total left-rotation realised by a key: sum of ``key_i * 2**i``."""
    bits = as_bits(key, what="shift key")
    return int(bits @ (1 << np.arange(bits.shape[0], dtype=np.int64)))


def complement_key(key) -> np.ndarray:
    """Key realising the inverse rotation on the same shifter."""
    bits = as_bits(key, what="shift key")
    stages = bits.shape[0]
    width = 1 << stages
    return key_from_amount((width - rotation_amount(bits)) % width, stages)


def path_positions(input_index: int, key, stages: int) -> list[int]:
    """Bit positions occupied after each stage, starting from ``input_index``."""
    bits = as_bits(key, length=stages, what="shift key")
    width = 1 << stages
    if not 0 <= input_index < width:
        raise ParameterError(f"input index {input_index} outside 0..{width - 1}")
    positions = []
    pos = input_index
    for j in range(stages):
        if bits[j]:
            pos = (pos + (1 << j)) % width
        positions.append(pos)
    return positions


def _path_delays(chip: DelayMatrix, key: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """Sum of selected gate delays along each index's rotation path."""
    pos = indices.copy()
    total = np.zeros(pos.shape, dtype=np.float64)
    for j in range(chip.stages):
        if key[j]:
            pos = (pos + (1 << j)) % chip.width
            total += chip.entries[pos, j, 0]
        else:
            total += chip.entries[pos, j, 1]
    return total


def _reverse_unit_offsets(chip: DelayMatrix, amount: int) -> np.ndarray:
    """Deterministic per-path offsets in [-1, 1] used for asymmetry injection."""
    seq = np.random.SeedSequence([chip.seed, amount, _ASYMMETRY_TAG])
    return np.random.default_rng(seq).uniform(-1.0, 1.0, size=chip.width)


def path_delay(
    chip: DelayMatrix,
    input_index: int,
    key,
    direction: Direction = Direction.FORWARD,
    asymmetry: float = 0.0,
) -> float:
    """Delay in nanoseconds accumulated by one bit under one key.

    The model is symmetric: the reverse traversal of a path sees exactly the
    forward delay.  ``asymmetry`` optionally adds a fixed per-path offset
    (uniform within ``+/-asymmetry`` ns) to reverse traversals only, to
    probe how much forward/backward mismatch the quantiser tolerates.
    """
    bits = as_bits(key, length=chip.stages, what="shift key")
    if not 0 <= input_index < chip.width:
        raise ParameterError(f"input index {input_index} outside 0..{chip.width - 1}")
    delay = float(_path_delays(chip, bits, np.array([input_index]))[0])
    if direction is Direction.REVERSE and asymmetry != 0.0:
        offsets = _reverse_unit_offsets(chip, rotation_amount(bits))
        delay += asymmetry * float(offsets[input_index])
    return delay


def quantize_delay(delay, clock_period: float):
    """Counter value for a delay: completed clock periods, saturating.

    Accepts a scalar or an array.  Counters cap at the 10-bit maximum with a
    warning; delays produced by realistic parameters never get close.
    """
    if not clock_period > 0:
        raise ParameterError("clock_period must be positive")
    arr = np.asarray(delay, dtype=np.float64)
    if np.any(arr < 0):
        raise ParameterError("delay must be non-negative")
    counter = np.floor(arr / clock_period).astype(np.int64)
    if np.any(counter > COUNTER_MAX):
        warnings.warn(
            "capture counter saturated at its 10-bit maximum", stacklevel=2
        )
        counter = np.minimum(counter, COUNTER_MAX)
    if np.isscalar(delay) or np.ndim(delay) == 0:
        return int(counter)
    return counter


def delay_bit(counter: int, m: int) -> int:
    """The m-th least significant bit of a counter value (m=1 is the LSB)."""
    if m < 1:
        raise ParameterError("delay bit index m must be >= 1")
    return int((int(counter) >> (m - 1)) & 1)


def path_counters(
    chip: DelayMatrix,
    key,
    direction: Direction = Direction.FORWARD,
    asymmetry: float = 0.0,
) -> np.ndarray:
    """Quantised delay counters of all ``width`` paths under one key."""
    bits = as_bits(key, length=chip.stages, what="shift key")
    delays = _path_delays(chip, bits, np.arange(chip.width))
    if direction is Direction.REVERSE and asymmetry != 0.0:
        delays = delays + asymmetry * _reverse_unit_offsets(
            chip, rotation_amount(bits)
        )
    return quantize_delay(delays, chip.params.clock_period)


def delay_bits(chip: DelayMatrix, key, cfg: ResponseConfig) -> np.ndarray:
    """Entanglement bit of every path, indexed by input position."""
    counters = path_counters(chip, key)
    return ((counters >> (cfg.m - 1)) & 1).astype(np.uint8)


def respond(chip: DelayMatrix, block, key, cfg: ResponseConfig) -> np.ndarray:
    """Delay-entangled response of the shifter to one message block.

    Forward: input bit ``i`` lands at position ``(i + s) % width`` carrying
    an XOR with its path's delay bit.  Reverse inverts that map on the same
    die: reverse(forward(x)) == x for every chip, key and block.
    """
    data = as_bits(block, length=chip.width, what="message block")
    bits = delay_bits(chip, key, cfg)
    s = rotation_amount(as_bits(key, length=chip.stages, what="shift key"))
    if cfg.direction is Direction.FORWARD:
        return np.roll(data ^ bits, s)
    return np.roll(data, -s) ^ bits


# ---------------------------------------------------------------------------
# persistence


def save_chip(chip: DelayMatrix, path) -> None:
    """Write a die to a schema-versioned JSON document."""
    doc = {
        "version": CHIP_SCHEMA_VERSION,
        "seed": chip.seed,
        "params": {
            "width": chip.params.width,
            "stages": chip.params.stages,
            "mean_unit_delay_ns": chip.params.mean_unit_delay,
            "sd_unit_delay_ns": chip.params.sd_unit_delay,
            "clock_period_ns": chip.params.clock_period,
        },
        "entries": chip.entries.reshape(-1, 2).tolist(),
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, separators=(",", ":"))
        handle.write("\n")


def load_chip(path) -> DelayMatrix:
    """Read a die back from :func:`save_chip` output."""
    with open(path, "r", encoding="utf-8") as handle:
        doc = json.load(handle)
    if doc.get("version") != CHIP_SCHEMA_VERSION:
        raise ParameterError(f"unsupported chip schema version {doc.get('version')!r}")
    p = doc["params"]
    params = FoundryParams(
        width=p["width"],
        stages=p["stages"],
        mean_unit_delay=p["mean_unit_delay_ns"],
        sd_unit_delay=p["sd_unit_delay_ns"],
        clock_period=p["clock_period_ns"],
    )
    entries = np.asarray(doc["entries"], dtype=np.float64)
    if entries.shape != (params.width * params.stages, 2):
        raise DimensionError("entry list does not match the declared grid size")
    return DelayMatrix(
        params=params,
        entries=entries.reshape(params.width, params.stages, 2),
        chip_id=f"chip-{doc['seed']:016x}",
        seed=int(doc["seed"]),
    )
