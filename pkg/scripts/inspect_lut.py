import sys
import argparse
import logging
from pathlib import Path

import numpy as np

# Add the project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from onebitmiso.link.sim_engine import channel_streams, draw_channel
from onebitmiso.precoding.lut_io import dump_luts, load_luts
from onebitmiso.precoding.lut_precoder import build_luts


def setup_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s - %(levelname)s - %(message)s")


def summarize(luts) -> str:
    lines = []
    for name, lut in zip(("quadrant", "offset"), luts):
        obj = np.asarray(lut.objectives)
        lines.append(f"{name} LUT: {len(lut)} entries x {lut.block_size} antennas")
        lines.append(
            f"  objective min={obj.min():.4e} median={np.median(obj):.4e} max={obj.max():.4e} "
            f"positive={np.mean(obj > 0):.1%}"
        )
    return "\n".join(lines)


def main():
    parser = argparse.ArgumentParser(description="Build, dump or inspect the MBER-sup LUT pair of one channel")
    parser.add_argument("--load", type=str, default="", help="Existing LUT dump to inspect instead of building")
    parser.add_argument("--antennas", type=int, default=48, help="N (default: 48)")
    parser.add_argument("--users", type=int, default=3, help="M (default: 3)")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed (default: 0)")
    parser.add_argument("--channel-index", type=int, default=0, help="channel index within the seed (default: 0)")
    parser.add_argument("--out", type=str, default="", help="Optional path for the binary LUT dump")
    parser.add_argument("--verbose", action="store_true", help="Enable debug logging")
    args = parser.parse_args()
    setup_logging(args.verbose)

    try:
        if args.load:
            luts = load_luts(Path(args.load))
        else:
            rng_h, _, _ = channel_streams(args.seed, args.channel_index)
            luts = build_luts(draw_channel(rng_h, args.users, args.antennas))
    except Exception as e:
        print(f"Error preparing LUTs: {e}")
        sys.exit(1)

    print(summarize(luts))

    if args.out:
        out_path = dump_luts(Path(args.out), luts)
        print(f"\nWrote LUT dump to: {out_path}")


if __name__ == "__main__":
    main()
