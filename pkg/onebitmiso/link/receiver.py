from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from onebitmiso.errors import DegenerateInputError
from onebitmiso.modulation.constellation import INV_SQRT2, QAM16_MEAN_ABS_AXIS, symbols_to_bits

logger = logging.getLogger(__name__)

# Per-axis decision thresholds for the 2*O2 + O2 grid
SLICER_THRESHOLDS = np.array([-np.sqrt(2.0), 0.0, np.sqrt(2.0)])
_SLICER_LEVELS = np.array([-3.0, -1.0, 1.0, 3.0]) * INV_SQRT2


@dataclass(frozen=True)
class ReceiveFilter:
    gains: np.ndarray

    def __post_init__(self):
        gains = np.atleast_1d(np.asarray(self.gains, dtype=float))
        if not np.all(np.isfinite(gains)) or np.any(gains <= 0):
            raise DegenerateInputError(f"receive gains must be positive and finite, got {gains}")
        gains.setflags(write=False)
        object.__setattr__(self, "gains", gains)

    def apply(self, y: np.ndarray) -> np.ndarray:
        return np.asarray(y) * self.gains


@dataclass(frozen=True)
class DetectionReport:
    symbol_errors: int
    bit_errors: int
    symbols_total: int
    bits_total: int

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_total if self.bits_total else 0.0

    @property
    def ser(self) -> float:
        return self.symbol_errors / self.symbols_total if self.symbols_total else 0.0


def estimate_gain(y_samples: np.ndarray) -> float:
    """Blind per-user scale: (E|Re s| + E|Im s|) / (mean|Re y| + mean|Im y|).

    The numerator is the constellation's, 2*sqrt(2); no noise statistics are used.
    """
    y = np.asarray(y_samples).reshape(-1)
    if y.size == 0:
        raise DegenerateInputError("cannot estimate a receive gain from zero samples")
    denominator = np.mean(np.abs(y.real)) + np.mean(np.abs(y.imag))
    if denominator <= 0:
        raise DegenerateInputError("all receive samples are zero")
    return float(2.0 * QAM16_MEAN_ABS_AXIS / denominator)


def estimate_receive_filter(y: np.ndarray, training_length: Optional[int] = None) -> ReceiveFilter:
    """One gain per user (column) of a (B, M) block of receive samples.

    ``training_length`` limits the estimate to the first samples; the default
    uses the whole block.
    """
    y = np.asarray(y)
    if y.ndim == 1:
        y = y[:, None]
    if training_length is not None:
        y = y[:training_length]
    gains = np.array([estimate_gain(y[:, m]) for m in range(y.shape[1])])
    logger.debug("Receive gains: %s", np.array2string(gains, precision=4))
    return ReceiveFilter(gains)


def _slice_axis(v: np.ndarray) -> np.ndarray:
    # digitize puts a value equal to a threshold in the upper cell
    return _SLICER_LEVELS[np.digitize(v, SLICER_THRESHOLDS)]


def detect(s_hat: np.ndarray, constellation: Optional[np.ndarray] = None) -> np.ndarray:
    """Nearest constellation point per entry.

    The default 16QAM grid uses per-axis slicing; any other ``constellation``
    is searched by distance, ties going to the earlier point.
    """
    s_hat = np.asarray(s_hat)
    if constellation is None:
        return _slice_axis(s_hat.real) + 1j * _slice_axis(s_hat.imag)
    points = np.asarray(constellation, dtype=complex).reshape(-1)
    if points.size == 0:
        raise ValueError("empty constellation")
    return points[np.argmin(np.abs(s_hat[..., None] - points), axis=-1)]


def count_errors(
    sent: np.ndarray, detected: np.ndarray, sent_bits: Optional[np.ndarray] = None
) -> DetectionReport:
    """Compare sent and detected 16QAM streams of equal length."""
    sent = np.asarray(sent).reshape(-1)
    detected = np.asarray(detected).reshape(-1)
    if sent.shape != detected.shape:
        raise ValueError(f"length mismatch: sent {sent.size}, detected {detected.size}")
    tx_bits = symbols_to_bits(sent) if sent_bits is None else np.asarray(sent_bits).reshape(-1)
    if tx_bits.size != 4 * sent.size:
        raise ValueError(f"expected {4 * sent.size} sent bits, got {tx_bits.size}")
    rx_bits = symbols_to_bits(detected)
    flips = (tx_bits != rx_bits).reshape(-1, 4)
    return DetectionReport(
        symbol_errors=int(np.count_nonzero(flips.any(axis=1))),
        bit_errors=int(np.count_nonzero(flips)),
        symbols_total=int(sent.size),
        bits_total=int(tx_bits.size),
    )
