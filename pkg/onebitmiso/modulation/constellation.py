"""Symbol alphabets for the 1-bit downlink.

The 16QAM set is built as the superposition ``2*q1 + q2`` of two QPSK points,
so its points sit at (±1, ±3)/√2 per axis and its average energy is 5. The
receive filter absorbs the absolute scale, so no unit-energy normalization is
applied anywhere.

Bit labeling: per symbol the bits (b1, b2) carry the signs of Re/Im of the
quadrant symbol q1 and (b3, b4) the signs of Re/Im of the offset symbol q2,
with ``1 -> +``. This is not Gray on the 16-point grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from onebitmiso.errors import InvalidSymbolError


INV_SQRT2 = 1.0 / np.sqrt(2.0)

# Points in LUT digit order: digit = 2*[Re > 0] + [Im > 0]
QPSK_POINTS = np.array([-1 - 1j, -1 + 1j, 1 - 1j, 1 + 1j]) * INV_SQRT2

# Row-major over (quadrant digit, offset digit)
QAM16_POINTS = (2.0 * QPSK_POINTS[:, None] + QPSK_POINTS[None, :]).ravel()

QAM16_SIGMA_S2 = 5.0

# E|Re s| = E|Im s| over the 16 points: (1/√2 + 3/√2) / 2
QAM16_MEAN_ABS_AXIS = np.sqrt(2.0)

_AXIS_TOL = 1e-9


@dataclass(frozen=True)
class QpskSymbol:
    value: complex

    def __post_init__(self):
        _check_qpsk(np.asarray(self.value))
        object.__setattr__(self, "value", complex(self.value))

    @property
    def digit(self) -> int:
        return 2 * int(self.value.real > 0) + int(self.value.imag > 0)


@dataclass(frozen=True)
class Qam16Symbol:
    value: complex
    quadrant: QpskSymbol
    offset: QpskSymbol

    @classmethod
    def from_pair(cls, quadrant: complex, offset: complex) -> "Qam16Symbol":
        q1, q2 = QpskSymbol(quadrant), QpskSymbol(offset)
        return cls(value=2 * q1.value + q2.value, quadrant=q1, offset=q2)

    @classmethod
    def from_value(cls, value: complex) -> "Qam16Symbol":
        q1, q2 = split_qam16(np.asarray([value]))
        return cls(value=complex(value), quadrant=QpskSymbol(q1[0]), offset=QpskSymbol(q2[0]))


@dataclass(frozen=True)
class BitMap:
    """Bijection between fixed-width bit tuples and constellation points.

    ``points[k]`` is the symbol whose bits, read MSB first, spell ``k``.
    """

    bits_per_symbol: int
    points: np.ndarray

    def encode(self, bits: np.ndarray) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.int64).reshape(-1)
        if bits.size % self.bits_per_symbol:
            raise ValueError(
                f"bit count {bits.size} is not a multiple of {self.bits_per_symbol}"
            )
        weights = 1 << np.arange(self.bits_per_symbol - 1, -1, -1)
        labels = bits.reshape(-1, self.bits_per_symbol) @ weights
        return self.points[labels]

    def labels(self, symbols: np.ndarray) -> np.ndarray:
        symbols = np.asarray(symbols, dtype=complex).reshape(-1)
        dist = np.abs(symbols[:, None] - self.points[None, :])
        labels = np.argmin(dist, axis=1)
        if symbols.size and np.max(dist[np.arange(symbols.size), labels]) > _AXIS_TOL:
            raise InvalidSymbolError("symbol outside the constellation")
        return labels

    def decode(self, symbols: np.ndarray) -> np.ndarray:
        labels = self.labels(symbols)
        shifts = np.arange(self.bits_per_symbol - 1, -1, -1)
        return ((labels[:, None] >> shifts) & 1).astype(np.uint8).ravel()


def _sign_pairs(n_bits: int) -> np.ndarray:
    k = np.arange(1 << n_bits)
    shifts = np.arange(n_bits - 1, -1, -1)
    return 2.0 * ((k[:, None] >> shifts) & 1) - 1.0


def _build_bitmaps() -> Tuple[BitMap, BitMap]:
    s2 = _sign_pairs(2)
    qpsk = (s2[:, 0] + 1j * s2[:, 1]) * INV_SQRT2
    s4 = _sign_pairs(4)
    quadrant = (s4[:, 0] + 1j * s4[:, 1]) * INV_SQRT2
    offset = (s4[:, 2] + 1j * s4[:, 3]) * INV_SQRT2
    return BitMap(2, qpsk), BitMap(4, 2.0 * quadrant + offset)


QPSK_BITMAP, QAM16_BITMAP = _build_bitmaps()


def quantize_1bit(x: np.ndarray) -> np.ndarray:
    """Per-entry 1-bit DAC: sign of Re and Im, scaled onto the QPSK set.

    Exact zeros resolve to +1/√2.
    """
    x = np.asarray(x)
    re = np.where(np.real(x) >= 0, INV_SQRT2, -INV_SQRT2)
    im = np.where(np.imag(x) >= 0, INV_SQRT2, -INV_SQRT2)
    return re + 1j * im


def is_qpsk(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    return (np.abs(np.abs(np.real(x)) - INV_SQRT2) < _AXIS_TOL) & (
        np.abs(np.abs(np.imag(x)) - INV_SQRT2) < _AXIS_TOL
    )


def _check_qpsk(x: np.ndarray) -> None:
    if not np.all(is_qpsk(x)):
        raise InvalidSymbolError("entry is not a QPSK point (±1 ± j)/√2")


def _axis_in_qam16(v: np.ndarray) -> np.ndarray:
    a = np.abs(v) * np.sqrt(2.0)
    return (np.abs(a - 1.0) < _AXIS_TOL) | (np.abs(a - 3.0) < _AXIS_TOL)


def split_qam16(s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Split 16QAM entries into (quadrant, offset) QPSK parts with s = 2*q1 + q2."""
    s = np.asarray(s, dtype=complex)
    if not np.all(_axis_in_qam16(s.real) & _axis_in_qam16(s.imag)):
        raise InvalidSymbolError("entry is not a 16QAM point of 2*O2 + O2")
    quadrant = quantize_1bit(s)
    offset = quantize_1bit(s - 2.0 * quadrant)
    return quadrant, offset


def combine_qpsk(quadrant: np.ndarray, offset: np.ndarray) -> np.ndarray:
    quadrant = np.asarray(quadrant)
    offset = np.asarray(offset)
    _check_qpsk(quadrant)
    _check_qpsk(offset)
    return 2.0 * quadrant + offset


def bits_to_symbols(bits: np.ndarray) -> np.ndarray:
    """Map a flat bit stream (length divisible by 4) onto 16QAM symbols."""
    return QAM16_BITMAP.encode(bits)


def symbols_to_bits(symbols: np.ndarray) -> np.ndarray:
    # Sign reading of the split is the inverse of QAM16_BITMAP without the
    # 16-way distance search
    quadrant, offset = split_qam16(np.asarray(symbols).reshape(-1))
    bits = np.stack(
        [quadrant.real > 0, quadrant.imag > 0, offset.real > 0, offset.imag > 0],
        axis=1,
    )
    return bits.astype(np.uint8).ravel()
