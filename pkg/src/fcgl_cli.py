"""Console launcher for the fcgl command.

Exists only to pin the BLAS thread environment (``--threads N``) before
numpy loads its threadpool; everything else lives in :mod:`fcgl.cli`.
"""

import os
import sys


def _peek_threads(argv):
    for i, arg in enumerate(argv):
        if arg == "--threads" and i + 1 < len(argv):
            return argv[i + 1]
        if arg.startswith("--threads="):
            return arg.split("=", 1)[1]
    return None


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    threads = _peek_threads(argv)
    if threads is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(threads)
    from fcgl.cli import run_cli

    return run_cli(argv)


if __name__ == "__main__":
    raise SystemExit(main())
