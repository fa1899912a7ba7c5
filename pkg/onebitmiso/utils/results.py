import logging
import os
import tempfile
from pathlib import Path
from typing import Iterable, List

import pandas as pd

from onebitmiso.errors import OutputExistsError
from onebitmiso.link.sim_engine import BerRecord

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["scheme", "N", "M", "etx_db", "ber", "bit_errors", "bits_total", "channels", "seed"]

# 17 significant digits round-trip every float64
FLOAT_FORMAT = "%.17g"


def records_to_frame(records: Iterable[BerRecord]) -> pd.DataFrame:
    rows = [
        {
            "scheme": r.scheme,
            "N": r.n_antennas,
            "M": r.n_users,
            "etx_db": float(r.etx_db),
            "ber": float(r.ber),
            "bit_errors": r.bit_errors,
            "bits_total": r.bits_total,
            "channels": r.channels_used,
            "seed": r.seed,
        }
        for r in records
    ]
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def emit_csv(records: Iterable[BerRecord], path: Path, append: bool = False) -> Path:
    """Write records as CSV; refuses to overwrite an existing file unless appending."""
    path = Path(path)
    df = records_to_frame(records)
    path.parent.mkdir(parents=True, exist_ok=True)

    if append and path.exists() and path.stat().st_size > 0:
        df.to_csv(path, mode="a", header=False, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        logger.info(f"Appended {len(df)} records to {path}")
        return path
    if path.exists() and not append:
        raise OutputExistsError(f"{path} already exists; pass --append or choose another --out")

    # write-then-rename so a failed write never leaves a partial file behind
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    os.close(fd)
    try:
        df.to_csv(tmp, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        os.replace(tmp, path)
    except Exception:
        Path(tmp).unlink(missing_ok=True)
        raise
    logger.info(f"✓ Wrote {len(df)} records to {path}")
    return path


def read_records(path: Path) -> List[BerRecord]:
    df = pd.read_csv(
        path, dtype={"scheme": str, "etx_db": float, "ber": float}, float_precision="round_trip"
    )
    missing = [c for c in CSV_COLUMNS if c not in df.columns]
    if missing:
        raise ValueError(f"{path} is missing columns {missing}")
    return [
        BerRecord(
            scheme=row.scheme,
            n_antennas=int(row.N),
            n_users=int(row.M),
            etx_db=float(row.etx_db),
            ber=float(row.ber),
            bit_errors=int(row.bit_errors),
            bits_total=int(row.bits_total),
            channels_used=int(row.channels),
            seed=int(row.seed),
        )
        for row in df.itertuples(index=False)
    ]
