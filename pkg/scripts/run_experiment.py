import sys
import argparse
import logging
import time
from pathlib import Path
from datetime import datetime

# Add the project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from onebitmiso.cli import main as cli_main
from onebitmiso.config import RESULTS_DIR

FIGURES = ["fig3", "fig4", "fig5", "g-check"]


def setup_logging(verbose: bool):
    """Log to stdout and to a timestamped file under logs/."""
    logs_dir = project_root / "logs"
    logs_dir.mkdir(exist_ok=True)
    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    log_file = logs_dir / f"experiment_{timestamp}.log"

    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        handlers=[logging.FileHandler(log_file), logging.StreamHandler(sys.stdout)],
    )
    logger = logging.getLogger(__name__)
    logger.info(f"Log file: {log_file}")
    return logger


def run_with_logging(figure: str, argv, logger) -> int:
    start_time = time.time()
    logger.info(f"Starting {figure}...")
    code = cli_main(argv)
    elapsed = time.time() - start_time
    if code == 0:
        logger.info(f"✓ {figure} completed in {elapsed:.2f} seconds")
    else:
        logger.error(f"✗ {figure} failed after {elapsed:.2f} seconds (exit code {code})")
    return code


def main():
    parser = argparse.ArgumentParser(description="Run every figure preset back to back")
    parser.add_argument("--scale", choices=["desk", "paper"], default="desk", help="averaging scale (default: desk)")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed shared by all presets (default: 0)")
    parser.add_argument("--figures", type=str, default=",".join(FIGURES),
                        help=f"comma-separated presets to run (default: {','.join(FIGURES)})")
    parser.add_argument("--out-dir", type=str, default=str(RESULTS_DIR),
                        help=f"directory for the CSV files (default: {RESULTS_DIR})")
    parser.add_argument("--verbose", action="store_true", help="Enable debug logging")
    args = parser.parse_args()
    logger = setup_logging(args.verbose)

    out_dir = Path(args.out_dir)
    stamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    failed = []
    for figure in [f.strip() for f in args.figures.split(",") if f.strip()]:
        logger.info("-" * 40)
        argv = [
            "--figure", figure,
            "--scale", args.scale,
            "--seed", str(args.seed),
            "--out", str(out_dir / f"{figure}_{args.scale}_{stamp}.csv"),
        ]
        if args.verbose:
            argv.append("--verbose")
        if run_with_logging(figure, argv, logger) != 0:
            failed.append(figure)

    if failed:
        logger.error(f"Failed presets: {', '.join(failed)}")
        sys.exit(1)
    logger.info("All presets completed")


if __name__ == "__main__":
    main()
