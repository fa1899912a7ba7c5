"""Command-line front end: resolve presets into SimConfigs, run them, write CSV.

Exit codes: 0 ok, 1 usage, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import itertools
import logging
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import orjson
from pydantic import BaseModel, ConfigDict, ValidationError

from onebitmiso import __version__
from onebitmiso.config import LOG_LEVEL, RESULTS_DIR
from onebitmiso.errors import ConfigurationError, OutputExistsError, UsageError
from onebitmiso.link.sim_engine import GainCheckConfig, Scheme, SimConfig, run_gain_check, run_sweep
from onebitmiso.precoding.lut_precoder import DEFAULT_SPLIT_RATIO
from onebitmiso.utils.results import emit_csv, read_records

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

# (channels, symbols per channel)
SCALES: Dict[str, Tuple[int, int]] = {
    "desk": (10, 10_000),
    "paper": (100, 100_000),
}

DEFAULT_ETX = "-10:2.5:10"
DEFAULT_SNR = "0:5:15"

PRESETS: Dict[str, Dict] = {
    "fig3": {"antennas": [150], "users": [3], "scheme": "both"},
    "fig4": {"antennas": [150], "users": [2, 3, 4], "scheme": "both"},
    "fig5": {"antennas": [48, 96, 150], "users": [3], "scheme": "both"},
    "g-check": {},
}


class RunManifest(BaseModel):
    model_config = ConfigDict(frozen=True)

    configs: Tuple[SimConfig, ...] = ()
    gain_check: Optional[GainCheckConfig] = None
    output: Path
    append: bool = False
    figure: Optional[str] = None
    scale: str = "desk"
    tool_version: str = __version__
    timestamp: str


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def setup_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else getattr(logging, LOG_LEVEL, logging.INFO)
    logging.basicConfig(level=level, format="%(asctime)s - %(levelname)s - %(message)s")


def parse_grid(text: str) -> Tuple[float, ...]:
    """'start:step:stop' (stop inclusive) or a single value, in dB."""
    parts = text.split(":")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"invalid grid {text!r}; expected start:step:stop") from None
    if len(values) == 1:
        return (values[0],)
    if len(values) != 3:
        raise UsageError(f"invalid grid {text!r}; expected start:step:stop")
    start, step, stop = values
    if step <= 0 or stop < start:
        raise UsageError(f"invalid grid {text!r}; need step > 0 and stop >= start")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return tuple(round(start + i * step, 12) for i in range(count))


def parse_int_list(text: str) -> List[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise UsageError("empty integer list")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="onebit-miso",
        description="Simulate 16QAM over a 1-bit massive MU-MISO downlink (MBER-sup vs QWF) and write BER CSV.",
    )
    parser.add_argument("--scheme", choices=["mber-sup", "qwf", "both"], default=None,
                        help="transmit scheme (default: both)")
    parser.add_argument("--antennas", type=str, default=None,
                        help="transmit antennas N, comma-separated for several (default: 150 or the figure preset)")
    parser.add_argument("--users", type=str, default=None,
                        help="users M, comma-separated for several (default: 3 or the figure preset)")
    parser.add_argument("--etx", type=str, default=None,
                        help=f"E_tx grid in dB as start:step:stop (default: {DEFAULT_ETX}; "
                             f"SNR grid {DEFAULT_SNR} for g-check)")
    parser.add_argument("--channels", type=int, default=None,
                        help="channel realizations per point (default: 10 desk, 100 paper)")
    parser.add_argument("--symbols", type=int, default=None,
                        help="symbol vectors per channel (default: 10000 desk, 100000 paper)")
    parser.add_argument("--seed", type=int, default=0, help="64-bit RNG seed (default: 0)")
    parser.add_argument("--out", type=str, default=None,
                        help=f"CSV output path (default: {RESULTS_DIR}/<figure or sweep>.csv)")
    parser.add_argument("--append", action="store_true",
                        help="append to an existing CSV instead of refusing (default: off)")
    parser.add_argument("--figure", choices=list(PRESETS), default=None,
                        help="experiment preset (default: none)")
    parser.add_argument("--scale", choices=list(SCALES), default="desk",
                        help="averaging scale for channels/symbols (default: desk)")
    parser.add_argument("--split-ratio", type=float, default=DEFAULT_SPLIT_RATIO,
                        help="antenna share of the quadrant stream (default: 2/3)")
    parser.add_argument("--training-length", type=int, default=None,
                        help="receive samples used for the gain estimate (default: whole block)")
    parser.add_argument("--workers", type=int, default=0,
                        help="channel-loop workers, capped by ONEBIT_MISO_THREADS (default: 0 = auto)")
    parser.add_argument("--verbose", action="store_true", help="enable debug logging (default: off)")
    return parser


def _schemes(choice: str) -> List[Scheme]:
    if choice == "both":
        return [Scheme.MBER_SUP, Scheme.QWF]
    return [Scheme(choice)]


def parse_args(argv: Optional[Sequence[str]] = None) -> RunManifest:
    args = build_parser().parse_args(argv)
    preset = PRESETS.get(args.figure, {}) if args.figure else {}
    channels, symbols = SCALES[args.scale]
    channels = args.channels if args.channels is not None else channels
    symbols = args.symbols if args.symbols is not None else symbols
    if channels < 1 or symbols < 1:
        raise UsageError("--channels and --symbols must be positive")

    out = Path(args.out) if args.out else RESULTS_DIR / f"{args.figure or 'sweep'}.csv"
    if out.exists() and not args.append:
        raise UsageError(f"{out} already exists; pass --append or choose another --out")

    common = dict(
        output=out,
        append=args.append,
        figure=args.figure,
        scale=args.scale,
        timestamp=datetime.now(timezone.utc).isoformat(),
    )

    try:
        if args.figure == "g-check":
            gain_check = GainCheckConfig(
                snr_grid=parse_grid(args.etx or DEFAULT_SNR),
                n_symbols=channels * symbols,
                rng_seed=args.seed,
            )
            return RunManifest(gain_check=gain_check, **common)

        antennas = parse_int_list(args.antennas) if args.antennas else preset.get("antennas", [150])
        users = parse_int_list(args.users) if args.users else preset.get("users", [3])
        schemes = _schemes(args.scheme or preset.get("scheme", "both"))
        grid = parse_grid(args.etx or DEFAULT_ETX)
        configs = tuple(
            SimConfig(
                n_antennas=n,
                n_users=m,
                etx_grid=grid,
                n_channels=channels,
                n_symbols_per_channel=symbols,
                rng_seed=args.seed,
                scheme=scheme,
                split_ratio=args.split_ratio,
                training_length=args.training_length,
                n_workers=args.workers,
            )
            for n, m, scheme in itertools.product(antennas, users, schemes)
        )
        return RunManifest(configs=configs, **common)
    except ValidationError as e:
        raise UsageError(_first_error(e)) from None
    except ConfigurationError as e:
        raise UsageError(str(e)) from None


def _first_error(e: ValidationError) -> str:
    err = e.errors()[0]
    where = ".".join(str(p) for p in err.get("loc", ())) or "config"
    return f"{where}: {err.get('msg')}"


def manifest_path(output: Path) -> Path:
    return output.with_name(output.name + ".manifest.json")


def write_manifest(manifest: RunManifest, first_row: int, n_rows: int) -> Path:
    """Record the run in ``<out>.manifest.json``; appended runs extend the run list."""
    path = manifest_path(manifest.output)
    runs = []
    if manifest.append and path.exists():
        runs = orjson.loads(path.read_bytes()).get("runs", [])
    entry = manifest.model_dump(mode="json")
    entry["rows"] = [first_row, first_row + n_rows]
    runs.append(entry)
    path.write_bytes(orjson.dumps({"runs": runs}, option=orjson.OPT_INDENT_2))
    return path


def _existing_rows(path: Path) -> int:
    if not path.exists() or path.stat().st_size == 0:
        return 0
    return len(read_records(path))


def run(manifest: RunManifest) -> List:
    records = []
    if manifest.gain_check is not None:
        records.extend(run_gain_check(manifest.gain_check))
    for i, config in enumerate(manifest.configs, start=1):
        logger.info(f"Config {i}/{len(manifest.configs)}")
        records.extend(run_sweep(config))
    return records


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    setup_logging("--verbose" in argv)
    try:
        manifest = parse_args(argv)
    except UsageError as e:
        print(f"onebit-miso: error: {e}", file=sys.stderr)
        return EXIT_USAGE

    start = time.time()
    try:
        records = run(manifest)
        first_row = _existing_rows(manifest.output) if manifest.append else 0
        emit_csv(records, manifest.output, append=manifest.append)
        sidecar = write_manifest(manifest, first_row, len(records))
    except OutputExistsError as e:
        logger.error(str(e))
        return EXIT_USAGE
    except Exception as e:
        logger.error(f"✗ Run failed after {time.time() - start:.1f}s: {e}")
        logger.exception("Full error details:")
        return EXIT_RUNTIME

    logger.info(f"✓ {len(records)} records in {time.time() - start:.1f}s -> {manifest.output}")
    logger.info(f"Manifest: {sidecar}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
