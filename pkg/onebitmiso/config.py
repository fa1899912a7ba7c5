import os
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

RESULTS_DIR = Path(os.getenv("ONEBIT_MISO_RESULTS_DIR", "results")).resolve()

# 0 = one worker per CPU
ONEBIT_MISO_THREADS = int(os.getenv("ONEBIT_MISO_THREADS", "0"))

LOG_LEVEL = os.getenv("ONEBIT_MISO_LOG_LEVEL", "INFO").upper()

# Transmit symbols propagated per matrix product in the Monte-Carlo loop
PROPAGATION_BATCH = int(os.getenv("ONEBIT_MISO_BATCH", "10000"))


def resolve_worker_count(requested: int = 0) -> int:
    """Combine a requested worker count with the ONEBIT_MISO_THREADS cap."""
    cap = ONEBIT_MISO_THREADS if ONEBIT_MISO_THREADS > 0 else (os.cpu_count() or 1)
    if requested <= 0:
        return cap
    return max(1, min(requested, cap))
