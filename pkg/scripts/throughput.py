"""Time raster ingest and the full scale sweep on a synthetic raster.

    python3 scripts/throughput.py --side 100 --base-factor 100
"""
import argparse
import tempfile
import time
from pathlib import Path

from cropdiv import read_raster, scale_sweep, tally, write_raster
from cropdiv.multiscale import ScaleSet
from cropdiv.testkit import SyntheticSpec, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--side", type=int, default=100, help="lattice edge in base cells")
    ap.add_argument("--base-factor", type=int, default=100)
    ap.add_argument("--classes", type=int, default=19)
    ap.add_argument("--scales", type=ScaleSet.parse, default=ScaleSet())
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=10)
    args = ap.parse_args()

    spec = SyntheticSpec(shape=(args.side, args.side), base_factor=args.base_factor,
                         n_classes=args.classes, generator="patchwork", seed=args.seed,
                         patch_size=(1, 20), cropland_fraction=0.7)
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "raster.bin"
        t0 = time.perf_counter()
        write_raster(generate(spec), path)
        t1 = time.perf_counter()
        cube = tally(read_raster(path), spec.scheme(), args.base_factor, threads=args.threads)
        t2 = time.perf_counter()
        results = scale_sweep(cube, args.scales, 0.01, threads=args.threads)
        t3 = time.perf_counter()

    pixels = cube.total_pixels.sum()
    print(f"pixels           {pixels:,}")
    print(f"generate+write   {t1 - t0:7.2f} s")
    print(f"read+tally       {t2 - t1:7.2f} s  ({pixels / (t2 - t1) / 1e6:.0f} Mpx/s)")
    print(f"scale sweep      {t3 - t2:7.2f} s")
    for res in results:
        ok = res.retained
        print(f"  {res.scale_m / 1000:6g} km  blocks {res.n_blocks:7d}  retained {ok.sum():7d}"
              f"  mean gamma {res.gamma[ok].mean():.3f}")


if __name__ == "__main__":
    main()
