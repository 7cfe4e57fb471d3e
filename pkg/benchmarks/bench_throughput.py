"""Throughput of the estimate pipeline.

Times the in-memory pipeline per mode and the full CLI path on a binary-u64
file, reporting million elements per second on one core.

  python3 benchmarks/bench_throughput.py -n 20000000
"""

import argparse
import contextlib
import io
import os
import sys
import tempfile
import time

import numpy as np

from sampled_card import cli
from sampled_card.estimators import CardinalityPipeline, PipelineConfig

CHUNK = 1 << 20


def pipeline_rate(ids, mode, u, m):
    pipe = CardinalityPipeline(PipelineConfig(mode, m=m, u=u))
    start = time.perf_counter()
    for i in range(0, ids.size, CHUNK):
        pipe.offer_u64(ids[i:i + CHUNK])
    pipe.report()
    return ids.size / (time.perf_counter() - start)


def cli_rate(ids, u, m):
    with tempfile.NamedTemporaryFile(suffix=".bin", delete=False) as fh:
        fh.write(ids.astype("<u8").tobytes())
        path = fh.name
    try:
        start = time.perf_counter()
        with contextlib.redirect_stdout(io.StringIO()):
            code = cli.main(["estimate", path, "--format", "binary-u64", "--algorithm", "alg2",
                             "--u", str(u), "--m", str(m)])
        elapsed = time.perf_counter() - start
    finally:
        os.unlink(path)
    if code != 0:
        raise SystemExit(f"estimate exited {code}")
    return ids.size / elapsed


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("-n", type=int, default=10**7, help="elements per run")
    p.add_argument("--distinct", type=int, default=10**6)
    p.add_argument("--m", type=int, default=1024)
    p.add_argument("--u", type=int, default=1000)
    args = p.parse_args(argv)

    ids = np.random.default_rng(0).integers(0, args.distinct, size=args.n, dtype=np.uint64)
    print(f"{'path':<16}{'M elem/s':>10}")
    for mode, u in (("naive", None), ("alg1", None), ("alg2", args.u)):
        print(f"{'pipeline ' + mode:<16}{pipeline_rate(ids, mode, u, args.m) / 1e6:>10.1f}")
    print(f"{'cli alg2':<16}{cli_rate(ids, args.u, args.m) / 1e6:>10.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
