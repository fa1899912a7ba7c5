import sys
import argparse
import logging
from pathlib import Path

import numpy as np

# Add the project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from onebitmiso.link.receiver import estimate_receive_filter
from onebitmiso.link.sim_engine import (
    GAIN_EST,
    GAIN_OPT,
    GainCheckConfig,
    channel_streams,
    db_to_linear,
    draw_noise,
    run_gain_check,
)
from onebitmiso.modulation.constellation import QAM16_SIGMA_S2, bits_to_symbols


def setup_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s - %(levelname)s - %(message)s")


def gain_table(config: GainCheckConfig):
    """(snr_db, g_est, g_opt) on the same samples the BER check uses."""
    _, rng_b, rng_n = channel_streams(config.rng_seed, 0)
    symbols = bits_to_symbols(rng_b.integers(0, 2, size=4 * config.n_symbols, dtype=np.uint8))
    unit_noise = draw_noise(rng_n, symbols.shape)
    rows = []
    for snr_db in config.snr_grid:
        snr = db_to_linear(snr_db)
        y = symbols + np.sqrt(QAM16_SIGMA_S2 / snr) * unit_noise
        rows.append((snr_db, estimate_receive_filter(y).gains[0], 1.0 / (1.0 + 1.0 / snr)))
    return rows


def main():
    parser = argparse.ArgumentParser(description="Compare the blind receive gain with the noise-aware optimum on SISO AWGN")
    parser.add_argument("--snr", type=str, default="0,5,10,15", help="comma-separated SNRs in dB (default: 0,5,10,15)")
    parser.add_argument("--symbols", type=int, default=100_000, help="16QAM symbols per SNR (default: 100000)")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed (default: 0)")
    parser.add_argument("--verbose", action="store_true", help="Enable debug logging")
    args = parser.parse_args()
    setup_logging(args.verbose)

    try:
        config = GainCheckConfig(
            snr_grid=tuple(float(v) for v in args.snr.split(",")),
            n_symbols=args.symbols,
            rng_seed=args.seed,
        )
        records = run_gain_check(config)
    except Exception as e:
        print(f"Error running gain check: {e}")
        sys.exit(1)

    ber = {(r.scheme, r.etx_db): r.ber for r in records}
    print(f"{'SNR dB':>7} {'g_est':>8} {'g_opt':>8} {'BER est':>10} {'BER opt':>10} {'ratio':>6}")
    for snr_db, g_est, g_opt in gain_table(config):
        b_est, b_opt = ber[(GAIN_EST, snr_db)], ber[(GAIN_OPT, snr_db)]
        ratio = b_est / b_opt if b_opt > 0 else float("nan")
        print(f"{snr_db:>7g} {g_est:>8.4f} {g_opt:>8.4f} {b_est:>10.3e} {b_opt:>10.3e} {ratio:>6.2f}")


if __name__ == "__main__":
    main()
