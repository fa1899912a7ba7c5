"""Monte-Carlo downlink BER experiments for the MBER-sup and QWF transmitters.

Every channel index owns three random streams (channel, payload bits, unit
noise) derived from ``(rng_seed, channel_index)`` alone. Results therefore do
not depend on the worker count, and all E_tx points of a sweep share the same
channels, payloads and noise.
"""

from __future__ import annotations

import itertools
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from onebitmiso.config import PROPAGATION_BATCH, resolve_worker_count
from onebitmiso.errors import ConfigurationError
from onebitmiso.link.receiver import count_errors, detect, estimate_receive_filter
from onebitmiso.modulation.constellation import QAM16_SIGMA_S2, bits_to_symbols
from onebitmiso.precoding.lut_precoder import (
    DEFAULT_SPLIT_RATIO,
    MAX_LUT_USERS,
    ChannelRealization,
    build_luts,
    map_symbols,
)
from onebitmiso.precoding.mber_solver import SolverConfig
from onebitmiso.precoding.qwf_precoder import build_qwf, qwf_transmit

logger = logging.getLogger(__name__)


class Scheme(str, Enum):
    MBER_SUP = "mber-sup"
    QWF = "qwf"


GAIN_EST = "g-est"
GAIN_OPT = "g-opt"


class SimConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_antennas: int = Field(..., ge=3)
    n_users: int = Field(..., ge=1)
    etx_grid: Tuple[float, ...] = (0.0,)
    n_channels: int = Field(10, ge=1)
    n_symbols_per_channel: int = Field(10_000, ge=1)
    rng_seed: int = Field(0, ge=0, lt=2 ** 63)
    scheme: Scheme = Scheme.MBER_SUP
    solver: SolverConfig = SolverConfig()
    split_ratio: float = Field(DEFAULT_SPLIT_RATIO, gt=0, lt=1)
    # None = estimate the receive gains from the whole block
    training_length: Optional[int] = Field(None, ge=1)
    # 0 = ONEBIT_MISO_THREADS / CPU count
    n_workers: int = Field(1, ge=0)

    @model_validator(mode="after")
    def _check_dimensions(self):
        if self.n_users > self.n_antennas:
            raise ConfigurationError(
                f"more users than antennas: M={self.n_users} > N={self.n_antennas}"
            )
        if self.scheme is Scheme.MBER_SUP:
            if self.n_users > MAX_LUT_USERS:
                raise ConfigurationError(f"MBER-sup LUTs support at most {MAX_LUT_USERS} users")
            n_block1 = int(np.floor(self.split_ratio * self.n_antennas + 0.5))
            n_block2 = self.n_antennas - n_block1
            if min(n_block1, n_block2) < self.n_users:
                raise ConfigurationError(
                    f"antenna split {n_block1}/{n_block2} leaves a block smaller than M={self.n_users}"
                )
        return self


class GainCheckConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    snr_grid: Tuple[float, ...] = (0.0, 5.0, 10.0, 15.0)
    n_symbols: int = Field(100_000, ge=1)
    rng_seed: int = Field(0, ge=0, lt=2 ** 63)


@dataclass(frozen=True)
class BerRecord:
    scheme: str
    n_antennas: int
    n_users: int
    etx_db: float
    ber: float
    bit_errors: int
    bits_total: int
    channels_used: int
    seed: int

    def __post_init__(self):
        if self.bits_total <= 0 or self.ber != self.bit_errors / self.bits_total:
            raise ValueError("ber must equal bit_errors / bits_total")

    @classmethod
    def from_counts(cls, scheme: str, n_antennas: int, n_users: int, etx_db: float,
                    bit_errors: int, bits_total: int, channels_used: int, seed: int) -> "BerRecord":
        return cls(
            scheme=scheme,
            n_antennas=n_antennas,
            n_users=n_users,
            etx_db=float(etx_db),
            ber=bit_errors / bits_total,
            bit_errors=int(bit_errors),
            bits_total=int(bits_total),
            channels_used=int(channels_used),
            seed=int(seed),
        )


def db_to_linear(db: float) -> float:
    return float(10.0 ** (db / 10.0))


def channel_streams(seed: int, channel_index: int):
    """(channel, bits, noise) generators for one channel index."""
    seq = np.random.SeedSequence(entropy=seed, spawn_key=(channel_index,))
    return tuple(np.random.default_rng(child) for child in seq.spawn(3))


def draw_channel(rng: np.random.Generator, n_users: int, n_antennas: int,
                 split_ratio: float = DEFAULT_SPLIT_RATIO) -> ChannelRealization:
    """i.i.d. CN(0, 1) taps."""
    h = (rng.standard_normal((n_users, n_antennas)) + 1j * rng.standard_normal((n_users, n_antennas))) / np.sqrt(2.0)
    return ChannelRealization(h, split_ratio=split_ratio)


def draw_noise(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def _propagate(transmit, symbols: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Noiseless receive samples H x for every symbol vector, in batches."""
    r = np.empty((symbols.shape[0], h.shape[0]), dtype=complex)
    for start in range(0, symbols.shape[0], PROPAGATION_BATCH):
        stop = start + PROPAGATION_BATCH
        r[start:stop] = transmit(symbols[start:stop]) @ h.T
    return r


def mber_sup_transmit(luts, symbols: np.ndarray, etx: float) -> np.ndarray:
    """Equal power allocation: sqrt(E_tx / N) times the LUT transmit vectors."""
    x = map_symbols(symbols, luts)
    return np.sqrt(etx / x.shape[-1]) * x


def _simulate_channel(config: SimConfig, channel_index: int, etx_grid: Sequence[float]) -> List[Tuple[int, int]]:
    rng_h, rng_b, rng_n = channel_streams(config.rng_seed, channel_index)
    m, n, n_b = config.n_users, config.n_antennas, config.n_symbols_per_channel
    channel = draw_channel(rng_h, m, n, config.split_ratio)
    bits = rng_b.integers(0, 2, size=(n_b, 4 * m), dtype=np.uint8)
    symbols = bits_to_symbols(bits).reshape(n_b, m)
    noise = draw_noise(rng_n, (n_b, m))

    if config.scheme is Scheme.MBER_SUP:
        luts = build_luts(channel, config.solver)
        # LUTs do not depend on E_tx; the received signal scales with sqrt(E_tx / N)
        unit = _propagate(lambda s: map_symbols(s, luts), symbols, channel.matrix)

    counts = []
    for etx_db in etx_grid:
        etx = db_to_linear(etx_db)
        if config.scheme is Scheme.MBER_SUP:
            y = np.sqrt(etx / n) * unit + noise
        else:
            precoder = build_qwf(channel, etx, QAM16_SIGMA_S2)
            y = _propagate(lambda s: qwf_transmit(precoder, s), symbols, channel.matrix) + noise
        receive_filter = estimate_receive_filter(y, config.training_length)
        report = count_errors(symbols, detect(receive_filter.apply(y)), sent_bits=bits)
        counts.append((report.bit_errors, report.bits_total))
    return counts


def _run(config: SimConfig, etx_grid: Sequence[float]) -> List[BerRecord]:
    workers = resolve_worker_count(config.n_workers)
    logger.info(
        f"Running {config.scheme.value}: N={config.n_antennas} M={config.n_users} "
        f"channels={config.n_channels} symbols={config.n_symbols_per_channel} "
        f"points={len(etx_grid)} workers={workers}"
    )
    start = time.time()
    progress = itertools.count(1)

    def work(index: int):
        counts = _simulate_channel(config, index, etx_grid)
        logger.info("channel %d/%d", next(progress), config.n_channels)
        return counts

    indices = range(config.n_channels)
    if workers == 1:
        per_channel = [work(i) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            # map keeps channel-index order
            per_channel = list(executor.map(work, indices))

    records = []
    for j, etx_db in enumerate(etx_grid):
        bit_errors = sum(c[j][0] for c in per_channel)
        bits_total = sum(c[j][1] for c in per_channel)
        records.append(
            BerRecord.from_counts(
                config.scheme.value, config.n_antennas, config.n_users, etx_db,
                bit_errors, bits_total, config.n_channels, config.rng_seed,
            )
        )
    logger.info(f"✓ {config.scheme.value} finished in {time.time() - start:.1f}s")
    return records


def run_point(config: SimConfig, etx_db: float) -> BerRecord:
    return _run(config, [etx_db])[0]


def run_sweep(config: SimConfig) -> List[BerRecord]:
    """One record per E_tx grid point; LUTs are built once per channel.

    All grid points of a channel reuse its bits and unit noise draw (common random
    numbers), so the curve is smooth in E_tx and points are not independent
    samples. Independent points come from separate ``run_point`` calls with
    different seeds.
    """
    return _run(config, list(config.etx_grid))


def run_gain_check(config: GainCheckConfig) -> List[BerRecord]:
    """SISO AWGN 16QAM: BER with the blind gain estimate vs g_opt = 1/(1 + 1/SNR)."""
    _, rng_b, rng_n = channel_streams(config.rng_seed, 0)
    bits = rng_b.integers(0, 2, size=4 * config.n_symbols, dtype=np.uint8)
    symbols = bits_to_symbols(bits)
    unit_noise = draw_noise(rng_n, symbols.shape)

    records = []
    for snr_db in config.snr_grid:
        snr = db_to_linear(snr_db)
        y = symbols + np.sqrt(QAM16_SIGMA_S2 / snr) * unit_noise
        g_est = estimate_receive_filter(y).gains[0]
        g_opt = 1.0 / (1.0 + 1.0 / snr)
        for scheme, g in ((GAIN_EST, g_est), (GAIN_OPT, g_opt)):
            report = count_errors(symbols, detect(g * y), sent_bits=bits)
            records.append(
                BerRecord.from_counts(scheme, 1, 1, snr_db, report.bit_errors, report.bits_total, 1, config.rng_seed)
            )
        logger.info(f"SNR {snr_db:g} dB: g_est={g_est:.4f} g_opt={g_opt:.4f}")
    return records
