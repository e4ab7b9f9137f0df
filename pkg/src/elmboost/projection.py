"""Seed-derived random projections, activations, and sign hashing.

Projection matrices are never stored: they are regenerated on demand from a
64-bit master seed, so a trained model can reproduce the exact hidden-layer
encodings at prediction time from the seed alone.  The deviate stream is
pinned precisely (generator id 0) so regeneration is bit-exact across runs:

* sub-stream seed for ``(level, step)``: the first SplitMix64 output of the
  state ``master_seed XOR (level * 2**32 + step)``, i.e.
  ``mix64(state + GOLDEN)`` with the level stride fixed at ``2**32``;
* 64-bit uniforms: SplitMix64 outputs at counters 1, 2, ... from that seed
  (counter-based, so any segment can be regenerated independently);
* standard normals: Box-Muller over consecutive uniform pairs ``(u, v)``
  mapped to (0, 1] / [0, 1) via ``u53 = (u >> 11) * 2**-53``::

      r  = sqrt(-2 * ln(1 - u53))
      z0 = r * cos(2 * pi * v53)        # even stream positions
      z1 = r * sin(2 * pi * v53)        # odd stream positions

  Deviates fill each J×M matrix row-major; the surplus deviate of the final
  pair, if any, is discarded.

Changing any of this invalidates every persisted model, hence the generator
id recorded in model files: a new scheme gets a new id, never a silent edit.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .linalg import matmul

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

#: Stride separating levels in the sub-stream index space; (level, step)
#: pairs with step below this bound can never collide.
_LEVEL_STRIDE = 1 << 32

#: Identifier of the SplitMix64 + Box-Muller scheme documented above.
GENERATOR_SPLITMIX_BOX_MULLER = 0


class Activation(enum.Enum):
    """Elementwise hidden-layer activation."""

    TANH = "tanh"
    SIGN = "sign"


@dataclass(frozen=True)
class ProjectionSpec:
    """Everything needed to regenerate every projection matrix of a model."""

    master_seed: int
    j: int  # hidden width: rows of each projection matrix
    m: int  # input width: columns of each projection matrix
    generator_id: int = GENERATOR_SPLITMIX_BOX_MULLER

    def __post_init__(self):
        if self.j < 1 or self.m < 1:
            raise ValueError(f"projection dimensions must be >= 1, got {self.j}x{self.m}")
        if not 0 <= self.master_seed <= _MASK64:
            raise ValueError("master_seed must fit in an unsigned 64-bit integer")
        if self.generator_id != GENERATOR_SPLITMIX_BOX_MULLER:
            raise ValueError(f"unknown projection generator id {self.generator_id}")


def _mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 output finalizer, vectorized over uint64 arrays."""
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def _stream_seed(spec: ProjectionSpec, level: int, step: int) -> int:
    """Seed of the (level, step) sub-stream; plain-int SplitMix64 step."""
    z = ((spec.master_seed ^ (level * _LEVEL_STRIDE + step)) + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def _uniforms(seed: int, count: int) -> np.ndarray:
    """SplitMix64 outputs at counters 1..count as a uint64 array."""
    counters = np.arange(1, count + 1, dtype=np.uint64)
    return _mix64(np.uint64(seed) + counters * np.uint64(_GOLDEN))


def _normals(seed: int, count: int) -> np.ndarray:
    """Box-Muller standard normals drawn from the seeded uniform stream."""
    pairs = (count + 1) // 2
    u53 = (_uniforms(seed, 2 * pairs) >> np.uint64(11)).astype(np.float64) * 2.0**-53
    radius = np.sqrt(-2.0 * np.log1p(-u53[0::2]))
    angle = (2.0 * np.pi) * u53[1::2]
    z = np.empty(2 * pairs)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return z[:count]


def generate_projection(spec: ProjectionSpec, level: int, step: int) -> np.ndarray:
    """J×M matrix of standard-normal entries for one (level, step) slot.

    A pure function of its arguments: training and prediction call this
    independently and obtain bit-identical matrices, which is what lets a
    model omit the projections entirely.  Distinct (level, step) pairs draw
    from statistically independent sub-streams.
    """
    if level < 0 or step < 0:
        raise ValueError(f"level and step must be nonnegative, got ({level}, {step})")
    if step >= _LEVEL_STRIDE:
        raise ValueError(f"step {step} exceeds the sub-stream stride")
    seed = _stream_seed(spec, level, step)
    return _normals(seed, spec.j * spec.m).reshape(spec.j, spec.m)


def _sign(z: np.ndarray) -> np.ndarray:
    # Fixed convention: sign(0) = +1, so the codomain is exactly {-1, +1}.
    return np.where(z >= 0.0, 1.0, -1.0)


def encode(x: np.ndarray, r: np.ndarray, act: Activation) -> np.ndarray:
    """Hidden-layer encoding: the activation applied elementwise to X·Rᵀ."""
    if x.ndim != 2 or r.ndim != 2 or x.shape[1] != r.shape[1]:
        raise ValueError(
            f"encode width mismatch: samples are {x.shape}, projections are {r.shape}"
        )
    z = matmul(x, r.T)
    if act is Activation.TANH:
        return np.tanh(z)
    if act is Activation.SIGN:
        return _sign(z)
    raise ValueError(f"unknown activation {act!r}")


def hash_signature(x: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Signature [sign(x·r₀), ..., sign(x·r_{J-1})] of a single vector.

    Each row of r is one random hyperplane; the signature is invariant under
    positive rescaling of x.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or r.ndim != 2 or r.shape[1] != x.shape[0]:
        raise ValueError(
            f"hash_signature dimension mismatch: vector has shape {x.shape}, "
            f"hyperplanes have shape {r.shape}"
        )
    return _sign(r @ x)


def collision_probability(x: np.ndarray, x_other: np.ndarray) -> float:
    """Probability that one random hyperplane hashes x and x_other alike.

    Equals 1 − θ/π for the angle θ between the vectors.  Identical and
    antipodal inputs short-circuit to exactly 1.0 and 0.0; otherwise the
    cosine is clamped to [−1, 1] before the arccos so floating-point noise
    cannot produce a NaN.
    """
    x = np.asarray(x, dtype=np.float64)
    x_other = np.asarray(x_other, dtype=np.float64)
    if x.shape != x_other.shape or x.ndim != 1:
        raise ValueError(f"vectors must share one shape, got {x.shape} and {x_other.shape}")
    if not x.any() or not x_other.any():
        raise ValueError("collision probability is undefined for zero vectors")
    if np.array_equal(x, x_other):
        return 1.0
    if np.array_equal(x, -x_other):
        return 0.0
    cos = float(x @ x_other) / (float(np.linalg.norm(x)) * float(np.linalg.norm(x_other)))
    theta = float(np.arccos(np.clip(cos, -1.0, 1.0)))
    return 1.0 - theta / np.pi


def estimate_collision_rate(x: np.ndarray, x_other: np.ndarray, j: int, seed: int) -> float:
    """Fraction of j seeded random hyperplanes that hash x and x_other alike.

    The hyperplanes are regenerated deterministically from the seed, so the
    estimate is reproducible; it concentrates around collision_probability
    at the usual binomial rate sqrt(p(1-p)/j).
    """
    x = np.asarray(x, dtype=np.float64)
    x_other = np.asarray(x_other, dtype=np.float64)
    if x.shape != x_other.shape or x.ndim != 1:
        raise ValueError(f"vectors must share one shape, got {x.shape} and {x_other.shape}")
    r = generate_projection(ProjectionSpec(master_seed=seed, j=j, m=x.shape[0]), 0, 0)
    return float(np.mean(hash_signature(x, r) == hash_signature(x_other, r)))
