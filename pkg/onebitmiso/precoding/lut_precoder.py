"""Per-channel look-up tables for the superposition (MBER-sup) transmitter.

The 16QAM input ``s = 2*q1 + q2`` is split into two QPSK vectors. ``q1`` is
mapped through a table solved on the first ``n_block1`` antennas and ``q2``
through a table solved on the remaining ones; the two table rows are stacked
into the transmit vector, and the factor 2 on ``q1`` comes only from its larger
antenna share.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from onebitmiso.errors import ConfigurationError, InvalidSymbolError
from onebitmiso.modulation.constellation import QPSK_POINTS, is_qpsk, split_qam16
from onebitmiso.precoding.mber_solver import MberProblem, SolverConfig, solve

logger = logging.getLogger(__name__)

MAX_LUT_USERS = 8
DEFAULT_SPLIT_RATIO = 2.0 / 3.0


@dataclass(frozen=True)
class ChannelRealization:
    matrix: np.ndarray
    split_ratio: float = DEFAULT_SPLIT_RATIO

    def __post_init__(self):
        matrix = np.atleast_2d(np.asarray(self.matrix, dtype=complex))
        object.__setattr__(self, "matrix", matrix)
        if not 0.0 < self.split_ratio < 1.0:
            raise ConfigurationError(f"split ratio must lie in (0, 1), got {self.split_ratio}")
        n1 = self.n_block1
        if n1 < 1 or n1 >= self.n_antennas:
            raise ConfigurationError(
                f"split ratio {self.split_ratio} leaves an empty block for N={self.n_antennas}"
            )

    @property
    def n_users(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_antennas(self) -> int:
        return self.matrix.shape[1]

    @property
    def n_block1(self) -> int:
        # round half up, so N=3 gives 2 antennas for the quadrant stream
        return int(np.floor(self.split_ratio * self.n_antennas + 0.5))

    @property
    def n_block2(self) -> int:
        return self.n_antennas - self.n_block1

    @property
    def block1(self) -> np.ndarray:
        return self.matrix[:, : self.n_block1]

    @property
    def block2(self) -> np.ndarray:
        return self.matrix[:, self.n_block1 :]


@dataclass(frozen=True)
class PrecoderLut:
    block_size: int
    n_users: int
    entries: np.ndarray
    objectives: np.ndarray

    def __post_init__(self):
        size = 4 ** self.n_users
        if self.entries.shape != (size, self.block_size):
            raise ConfigurationError(
                f"LUT entries have shape {self.entries.shape}, expected {(size, self.block_size)}"
            )
        if self.objectives.shape != (size,):
            raise ConfigurationError("LUT objectives must have one value per entry")
        if not np.all(is_qpsk(self.entries)):
            raise ConfigurationError("LUT entries must be QPSK vectors")
        self.entries.setflags(write=False)
        self.objectives.setflags(write=False)

    def __len__(self) -> int:
        return self.entries.shape[0]

    def lookup(self, qpsk: np.ndarray) -> np.ndarray:
        return self.entries[lut_index(qpsk)]


def lut_index(qpsk: np.ndarray):
    """Base-4 index of QPSK vectors along the last axis; digit m has weight 4**m."""
    qpsk = np.asarray(qpsk)
    if not np.all(is_qpsk(qpsk)):
        raise InvalidSymbolError("LUT index requires QPSK entries")
    digits = 2 * (qpsk.real > 0).astype(np.int64) + (qpsk.imag > 0).astype(np.int64)
    weights = 4 ** np.arange(qpsk.shape[-1], dtype=np.int64)
    index = digits @ weights
    return int(index) if np.ndim(index) == 0 else index


def all_qpsk_vectors(n_users: int) -> np.ndarray:
    """Every QPSK vector of length M, row i having lut_index i."""
    k = np.arange(4 ** n_users)
    digits = (k[:, None] // (4 ** np.arange(n_users))[None, :]) % 4
    return QPSK_POINTS[digits]


def build_lut(block: np.ndarray, config: SolverConfig) -> PrecoderLut:
    n_users, block_size = block.shape
    targets = all_qpsk_vectors(n_users)
    entries = np.empty((targets.shape[0], block_size), dtype=complex)
    objectives = np.empty(targets.shape[0])
    for i, target in enumerate(targets):
        problem = MberProblem(block, target)
        result = solve(problem, config)
        entries[i] = result.x_corner
        objectives[i] = result.corner_objective
    n_bad = int(np.sum(objectives <= 0))
    if n_bad:
        logger.warning("%d of %d LUT entries have a non-positive objective", n_bad, len(objectives))
    return PrecoderLut(block_size=block_size, n_users=n_users, entries=entries, objectives=objectives)


def build_luts(
    channel: ChannelRealization, config: SolverConfig = SolverConfig()
) -> Tuple[PrecoderLut, PrecoderLut]:
    """Solve both tables (quadrant stream, offset stream) for one coherence slot."""
    m = channel.n_users
    if m > MAX_LUT_USERS:
        raise ConfigurationError(f"a LUT of 4^{m} entries is too large; at most {MAX_LUT_USERS} users")
    if channel.n_block2 < m:
        raise ConfigurationError(
            f"offset block has {channel.n_block2} antennas, fewer than M={m} users"
        )
    start = time.time()
    lut1 = build_lut(channel.block1, config)
    lut2 = build_lut(channel.block2, config)
    logger.debug(
        "Built LUTs %dx%d and %dx%d in %.2fs",
        len(lut1), lut1.block_size, len(lut2), lut2.block_size, time.time() - start,
    )
    return lut1, lut2


def map_symbols(s: np.ndarray, luts: Tuple[PrecoderLut, PrecoderLut]) -> np.ndarray:
    """Map 16QAM vectors (shape (M,) or (B, M)) to quantized transmit vectors of length N."""
    lut1, lut2 = luts
    s = np.asarray(s, dtype=complex)
    if s.ndim == 0 or s.shape[-1] != lut1.n_users:
        raise InvalidSymbolError(f"expected {lut1.n_users} symbols per vector, got shape {s.shape}")
    quadrant, offset = split_qam16(s)
    return np.concatenate(
        [lut1.entries[lut_index(quadrant)], lut2.entries[lut_index(offset)]], axis=-1
    )
