"""Binary dump/load of a LUT pair, for debugging.

Layout (little-endian)::

    4s  magic "1BML"
    u8  version (1)
    u16 M, u16 N, u16 n_block1, u16 n_block2
    then for LUT1 and LUT2 in turn:
        f8[4^M]  objectives
        packed entries: 2 bits per complex entry (Re>0, Im>0), row-major over
        (index, antenna), MSB first, zero padded to a whole byte
"""

from __future__ import annotations

import logging
import struct
from pathlib import Path
from typing import BinaryIO, Tuple

import numpy as np

from onebitmiso.errors import ConfigurationError
from onebitmiso.modulation.constellation import INV_SQRT2
from onebitmiso.precoding.lut_precoder import PrecoderLut

logger = logging.getLogger(__name__)

MAGIC = b"1BML"
VERSION = 1
_HEADER = struct.Struct("<4sBHHHH")


def _pack_entries(entries: np.ndarray) -> bytes:
    bits = np.stack([entries.real > 0, entries.imag > 0], axis=-1)
    return np.packbits(bits.astype(np.uint8).ravel(), bitorder="big").tobytes()


def _unpack_entries(raw: bytes, rows: int, cols: int) -> np.ndarray:
    n_bits = rows * cols * 2
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), count=n_bits, bitorder="big")
    signs = 2.0 * bits.reshape(rows, cols, 2) - 1.0
    return (signs[..., 0] + 1j * signs[..., 1]) * INV_SQRT2


def _read_exact(f: BinaryIO, size: int) -> bytes:
    raw = f.read(size)
    if len(raw) != size:
        raise ConfigurationError("truncated LUT file")
    return raw


def dump_luts(path: Path, luts: Tuple[PrecoderLut, PrecoderLut]) -> Path:
    lut1, lut2 = luts
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as f:
        f.write(
            _HEADER.pack(
                MAGIC, VERSION, lut1.n_users, lut1.block_size + lut2.block_size,
                lut1.block_size, lut2.block_size,
            )
        )
        for lut in (lut1, lut2):
            f.write(np.asarray(lut.objectives, dtype="<f8").tobytes())
            f.write(_pack_entries(lut.entries))
    logger.info(f"Wrote LUT pair (M={lut1.n_users}) to {path}")
    return path


def load_luts(path: Path) -> Tuple[PrecoderLut, PrecoderLut]:
    path = Path(path)
    with path.open("rb") as f:
        magic, version, m, n, n1, n2 = _HEADER.unpack(_read_exact(f, _HEADER.size))
        if magic != MAGIC or version != VERSION:
            raise ConfigurationError(f"{path} is not a version-{VERSION} LUT dump")
        if n1 + n2 != n:
            raise ConfigurationError(f"inconsistent block sizes {n1} + {n2} != {n}")
        rows = 4 ** m
        luts = []
        for block_size in (n1, n2):
            objectives = np.frombuffer(_read_exact(f, 8 * rows), dtype="<f8").astype(float)
            n_bytes = (rows * block_size * 2 + 7) // 8
            entries = _unpack_entries(_read_exact(f, n_bytes), rows, block_size)
            luts.append(PrecoderLut(block_size=block_size, n_users=m, entries=entries, objectives=objectives))
    logger.info(f"Loaded LUT pair (M={m}, N={n}) from {path}")
    return luts[0], luts[1]
