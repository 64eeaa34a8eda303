import os

# Pin the deterministic single-threaded numerics before numpy loads.
os.environ.setdefault("VTCC_THREADS", "1")

import vtcc  # noqa: E402,F401
