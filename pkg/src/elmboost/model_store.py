"""Binary persistence for trained models.

File layout, all integers little-endian::

    offset  size  field
    0       4     magic "ELMB"
    4       4     format version (currently 1)
    8       4     projection generator id
    12      8     master seed (u64)
    20      8     lambda (f64)
    28      8     alpha (f64)
    36      4     levels (u32)
    40      4     t_steps (u32)
    44      4     hidden width J (u32)
    48      4     input width M (u32)
    52      4     class count K (u32)
    56      1     activation (0 = tanh, 1 = sign)
    57      ...   levels*t_steps weight matrices, each J*K float64
                  row-major, in (level, step) order
    end     8     CRC-64/XZ of every preceding byte (u64)

Total size is therefore 57 + 8*levels*t_steps*J*K + 8 bytes.  Projection
matrices are regenerated from the seed at load time, so the weights are the
only bulk payload, and saving the same model twice produces byte-identical
files.
"""

from __future__ import annotations

import struct

import numpy as np

from .boost import BoostedModel, HyperParams
from .projection import GENERATOR_SPLITMIX_BOX_MULLER, Activation

MAGIC = b"ELMB"
VERSION = 1
HEADER_SIZE = 57
_HEADER_FMT = "<4sIIQddIIIIIB"

_ACTIVATION_CODE = {Activation.TANH: 0, Activation.SIGN: 1}
_ACTIVATION_FROM_CODE = {code: act for act, code in _ACTIVATION_CODE.items()}


class ModelFormatError(ValueError):
    """Model file violates the documented layout."""


class BadMagicError(ModelFormatError):
    """File does not start with the ELMB magic."""


class UnsupportedVersionError(ModelFormatError):
    """File declares a version or generator this build cannot read."""


class ChecksumError(ModelFormatError):
    """Stored CRC-64 does not match the file contents."""


class TruncatedError(ModelFormatError):
    """File ends before the declared payload and checksum."""


# CRC-64/XZ: reflected ECMA-182 polynomial, init and xorout all-ones.
_CRC64_POLY = 0xC96C5795D7870F42
_CRC64_XOR = 0xFFFFFFFFFFFFFFFF


def _build_crc64_table() -> list[int]:
    table = []
    for byte in range(256):
        crc = byte
        for _ in range(8):
            crc = (crc >> 1) ^ _CRC64_POLY if crc & 1 else crc >> 1
        table.append(crc)
    return table


_CRC64_TABLE = _build_crc64_table()


def crc64(data: bytes, state: int = 0) -> int:
    """CRC-64/XZ of data; pass a previous result as state to chain chunks."""
    crc = state ^ _CRC64_XOR
    table = _CRC64_TABLE
    for byte in data:
        crc = table[(crc ^ byte) & 0xFF] ^ (crc >> 8)
    return crc ^ _CRC64_XOR


def _pack_header(model: BoostedModel) -> bytes:
    hyper = model.hyper
    return struct.pack(
        _HEADER_FMT,
        MAGIC,
        VERSION,
        GENERATOR_SPLITMIX_BOX_MULLER,
        hyper.master_seed,
        hyper.lam,
        hyper.alpha,
        hyper.levels,
        hyper.t_steps,
        hyper.hidden,
        model.input_width,
        model.num_classes,
        _ACTIVATION_CODE[hyper.activation],
    )


def save(model: BoostedModel, path) -> None:
    """Write the model in the canonical binary layout, checksum last."""
    chunks = [_pack_header(model)]
    for level_weights in model.weights:
        for w in level_weights:
            chunks.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
    body = b"".join(chunks)
    with open(path, "wb") as f:
        f.write(body)
        f.write(struct.pack("<Q", crc64(body)))


def load(path) -> BoostedModel:
    """Read a model file back; verifies layout and checksum before trusting it."""
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) >= 4 and blob[:4] != MAGIC:
        raise BadMagicError(f"{path}: not a model file (bad magic {blob[:4]!r})")
    if len(blob) < HEADER_SIZE + 8:
        raise TruncatedError(f"{path}: file shorter than header plus checksum")
    (
        _,
        version,
        generator_id,
        master_seed,
        lam,
        alpha,
        levels,
        t_steps,
        hidden,
        input_width,
        num_classes,
        act_code,
    ) = struct.unpack_from(_HEADER_FMT, blob)
    if version != VERSION:
        raise UnsupportedVersionError(f"{path}: unsupported format version {version}")
    if generator_id != GENERATOR_SPLITMIX_BOX_MULLER:
        raise UnsupportedVersionError(f"{path}: unknown projection generator id {generator_id}")
    if act_code not in _ACTIVATION_FROM_CODE:
        raise ModelFormatError(f"{path}: unknown activation code {act_code}")

    count = levels * t_steps * hidden * num_classes
    expected = HEADER_SIZE + 8 * count + 8
    if len(blob) < expected:
        raise TruncatedError(
            f"{path}: expected {expected} bytes for the declared sizes, found {len(blob)}"
        )
    if len(blob) > expected:
        raise ModelFormatError(f"{path}: {len(blob) - expected} trailing bytes")

    (stored_crc,) = struct.unpack_from("<Q", blob, expected - 8)
    actual_crc = crc64(blob[: expected - 8])
    if stored_crc != actual_crc:
        raise ChecksumError(
            f"{path}: checksum mismatch (stored {stored_crc:#018x}, "
            f"computed {actual_crc:#018x})"
        )

    try:
        hyper = HyperParams(
            lam=lam,
            alpha=alpha,
            t_steps=t_steps,
            levels=levels,
            hidden=hidden,
            activation=_ACTIVATION_FROM_CODE[act_code],
            master_seed=master_seed,
        )
    except ValueError as exc:
        raise ModelFormatError(f"{path}: invalid hyperparameters: {exc}") from exc

    flat = np.frombuffer(blob, dtype="<f8", count=count, offset=HEADER_SIZE)
    grid = flat.reshape(levels, t_steps, hidden, num_classes)
    # copy: frombuffer views are read-only and would pin the whole blob
    weights = [
        [grid[lv, t].astype(np.float64) for t in range(t_steps)] for lv in range(levels)
    ]
    return BoostedModel(
        hyper=hyper, weights=weights, num_classes=num_classes, input_width=input_width
    )
