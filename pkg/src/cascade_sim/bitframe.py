"""Bit frames, permutations and channel noise.

A frame is an immutable ordered sequence of bits.  Permutations are stored
as explicit target maps: ``mapping[i]`` is the position that source bit
``i`` occupies after the permutation is applied.  Two deterministic
permutation families are provided, both keyed by ``(length, round, seed)``:

* ``shuffle`` - repeated perfect out-shuffle composed with a round-dependent
  rotation.  One out-shuffle sends source ``i`` to target ``i // 2`` when
  ``i`` is even and to ``ceil(n / 2) + i // 2`` when ``i`` is odd (for odd
  lengths the first ``ceil(n / 2)`` positions form the first half).  The
  shuffle is applied ``round + 1 + (seed mod 7)`` times and the result is
  rotated by ``round mod n``; the rotation guarantees that rounds
  ``0 .. n - 1`` all get distinct permutations, which bare out-shuffle
  powers cannot (the shuffle group is tiny for small ``n``).
* ``lcg`` - each index is assigned a key from a linear congruential
  generator (a=1664525, c=1013904223, m=2**32) seeded from ``(seed,
  round)``; the permutation is the stable argsort of the keys.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import ConfigurationError
from .rng import SeededRng, label_from_text, u64_stream, unit_floats

_LCG_A = 1664525
_LCG_C = 1013904223
_LCG_M = 1 << 32

_SHUFFLE_LABEL = label_from_text("permutation/shuffle")
_LCG_LABEL = label_from_text("permutation/lcg")
_BSC_LABEL = label_from_text("noise/bsc")
_FIXED_LABEL = label_from_text("noise/fixed")
_FRAME_LABEL = label_from_text("frame/random")

BitsLike = Union["BitFrame", np.ndarray, Sequence[int]]


def _as_bit_array(bits: BitsLike) -> np.ndarray:
    if isinstance(bits, BitFrame):
        return bits.bits
    arr = np.asarray(bits, dtype=np.uint8)
    if arr.ndim != 1:
        raise ConfigurationError("bits must be one-dimensional")
    if arr.size and int(arr.max(initial=0)) > 1:
        raise ConfigurationError("bits must be 0 or 1")
    return arr


class BitFrame:
    """Immutable ordered sequence of binary values."""

    __slots__ = ("bits",)

    def __init__(self, bits: BitsLike):
        arr = _as_bit_array(bits).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)

    def __setattr__(self, name, value):  # pragma: no cover - guard rail
        raise AttributeError("BitFrame is immutable")

    def __len__(self) -> int:
        return int(self.bits.size)

    def __getitem__(self, index: int) -> int:
        return int(self.bits[index])

    def __iter__(self):
        return iter(int(b) for b in self.bits)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitFrame):
            return NotImplemented
        return self.bits.shape == other.bits.shape and bool(
            np.array_equal(self.bits, other.bits)
        )

    def __hash__(self) -> int:
        return hash((self.bits.size, self.bits.tobytes()))

    def __repr__(self) -> str:
        shown = "".join(str(int(b)) for b in self.bits[:32])
        tail = "..." if len(self) > 32 else ""
        return f"BitFrame({shown}{tail}, length={len(self)})"

    @classmethod
    def zeros(cls, length: int) -> "BitFrame":
        if length < 0:
            raise ConfigurationError("length must be nonnegative")
        return cls(np.zeros(length, dtype=np.uint8))

    @classmethod
    def random(cls, length: int, seed: int) -> "BitFrame":
        """Uniform random frame from the dedicated per-seed stream."""
        if length < 0:
            raise ConfigurationError("length must be nonnegative")
        child = SeededRng(seed).derive(_FRAME_LABEL)
        return cls((u64_stream(child.seed, length) & np.uint64(1)).astype(np.uint8))

    def to01(self) -> str:
        return "".join(str(int(b)) for b in self.bits)


def parity(bits: BitsLike) -> int:
    """XOR fold of a bit sequence; an empty sequence has parity 0."""
    arr = _as_bit_array(bits)
    if arr.size == 0:
        return 0
    return int(np.bitwise_xor.reduce(arr))


def hamming_distance(a: BitsLike, b: BitsLike) -> int:
    """Number of positions where two equal-length frames differ."""
    arr_a = _as_bit_array(a)
    arr_b = _as_bit_array(b)
    if arr_a.size != arr_b.size:
        raise ConfigurationError("frames must have equal length")
    return int(np.count_nonzero(arr_a != arr_b))


@dataclass(frozen=True)
class Permutation:
    """Bijection on frame positions, stored as a source-to-target map."""

    mapping: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.mapping, dtype=np.int64)
        if arr.ndim != 1:
            raise ConfigurationError("mapping must be one-dimensional")
        if not np.array_equal(np.sort(arr), np.arange(arr.size)):
            raise ConfigurationError("mapping is not a bijection")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "mapping", arr)

    def __len__(self) -> int:
        return int(self.mapping.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Permutation):
            return NotImplemented
        return bool(np.array_equal(self.mapping, other.mapping))

    def __hash__(self) -> int:
        return hash(self.mapping.tobytes())

    @classmethod
    def identity(cls, length: int) -> "Permutation":
        return cls(np.arange(length, dtype=np.int64))

    def source_order(self) -> np.ndarray:
        """Inverse view: ``source_order()[t]`` is the source at target t."""
        inv = np.empty(len(self), dtype=np.int64)
        inv[self.mapping] = np.arange(len(self), dtype=np.int64)
        return inv


def apply_permutation(frame: BitFrame, perm: Permutation) -> BitFrame:
    """Reorder a frame: output bit ``perm.mapping[i]`` is input bit ``i``."""
    if len(frame) != len(perm):
        raise ConfigurationError("frame and permutation lengths differ")
    out = np.empty(len(frame), dtype=np.uint8)
    out[perm.mapping] = frame.bits
    return BitFrame(out)


def invert_permutation(perm: Permutation) -> Permutation:
    """Permutation that undoes ``perm``."""
    return Permutation(perm.source_order())


def out_shuffle_mapping(length: int) -> np.ndarray:
    """Single perfect out-shuffle as a source-to-target map."""
    if length < 0:
        raise ConfigurationError("length must be nonnegative")
    first_half = (length + 1) // 2
    targets = np.empty(length, dtype=np.int64)
    evens = np.arange(0, length, 2, dtype=np.int64)
    odds = np.arange(1, length, 2, dtype=np.int64)
    targets[evens] = np.arange(evens.size, dtype=np.int64)
    targets[odds] = first_half + np.arange(odds.size, dtype=np.int64)
    return targets


def gen_shuffle_permutation(length: int, round_index: int, seed: int) -> Permutation:
    """Deterministic shuffle-family permutation for one round.

    See the module docstring for the exact construction.  Distinct rounds
    below ``length`` always produce distinct permutations.
    """
    if length < 0:
        raise ConfigurationError("length must be nonnegative")
    if round_index < 0:
        raise ConfigurationError("round index must be nonnegative")
    if length == 0:
        return Permutation(np.empty(0, dtype=np.int64))
    single = out_shuffle_mapping(length)
    applications = round_index + 1 + ((seed & ((1 << 64) - 1)) % 7)
    mapping = np.arange(length, dtype=np.int64)
    for _ in range(applications):
        mapping = single[mapping]
    rotation = round_index % length
    if rotation:
        mapping = (mapping + rotation) % length
    return Permutation(mapping)


def _lcg_keys(lcg_seed: int, count: int) -> np.ndarray:
    keys = np.empty(count, dtype=np.int64)
    state = lcg_seed % _LCG_M
    for i in range(count):
        state = (_LCG_A * state + _LCG_C) % _LCG_M
        keys[i] = state
    return keys


def stable_argsort(keys: Sequence[int]) -> np.ndarray:
    """Indices that sort ``keys`` ascending, ties kept in input order."""
    return np.argsort(np.asarray(keys), kind="stable").astype(np.int64)


def gen_lcg_permutation(length: int, round_index: int, seed: int) -> Permutation:
    """LCG-keyed permutation: stable argsort of a per-round LCG key stream."""
    if length < 0:
        raise ConfigurationError("length must be nonnegative")
    if round_index < 0:
        raise ConfigurationError("round index must be nonnegative")
    lcg_seed = SeededRng(seed).derive(_LCG_LABEL, round_index).next_u64() % _LCG_M
    return Permutation(stable_argsort(_lcg_keys(lcg_seed, length)))


@dataclass(frozen=True)
class Bsc:
    """Binary symmetric channel: each bit flips independently."""

    qber: float

    def __post_init__(self):
        # 0 is allowed as the degenerate noiseless channel; at 0.5 and above
        # the flipped stream carries no information so reconciliation is
        # ill-posed.
        if not 0.0 <= self.qber < 0.5:
            raise ConfigurationError("qber must lie in [0, 0.5)")


@dataclass(frozen=True)
class FixedErrors:
    """Exactly ``count`` flips at distinct uniform positions."""

    count: int

    def __post_init__(self):
        if self.count < 0:
            raise ConfigurationError("error count must be nonnegative")


NoiseSpec = Union[Bsc, FixedErrors]


def _sample_distinct(length: int, count: int, rng: SeededRng) -> np.ndarray:
    # Partial Fisher-Yates over [0, length) driven by the seeded stream.
    pool = np.arange(length, dtype=np.int64)
    for i in range(count):
        j = i + rng.below(length - i)
        pool[i], pool[j] = pool[j], pool[i]
    return np.sort(pool[:count])


def apply_noise(frame: BitFrame, spec: NoiseSpec, seed: int) -> tuple[BitFrame, int]:
    """Return a noisy copy of ``frame`` and the number of injected flips."""
    n = len(frame)
    out = frame.bits.copy()
    if isinstance(spec, Bsc):
        child = SeededRng(seed).derive(_BSC_LABEL)
        flips = unit_floats(child.seed, n) < spec.qber
        out[flips] ^= 1
        return BitFrame(out), int(np.count_nonzero(flips))
    if isinstance(spec, FixedErrors):
        if spec.count > n:
            raise ConfigurationError("cannot inject more errors than frame bits")
        child = SeededRng(seed).derive(_FIXED_LABEL)
        positions = _sample_distinct(n, spec.count, child)
        out[positions] ^= 1
        return BitFrame(out), int(spec.count)
    raise ConfigurationError(f"unknown noise spec: {spec!r}")
