"""Command-line interface: ``cropdiv <subcommand> [options]``.

Subcommands mirror the data products: ``grid``, ``zonal``, ``profile``,
``ecdf``, ``props``, ``synth`` and ``oracle-check``.  Exit codes: 0 success,
1 usage error, 2 input format error, 3 compute error.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import covariate_join, domain_means, ecdf, read_covariates, scale_profile
from .diversity import UndefinedUnitError
from .ingest import (
    ClassScheme,
    RasterFormatError,
    format_number,
    read_class_scheme,
    read_raster,
    read_zone_map,
    tally,
    write_ascii_grid,
    write_class_scheme,
    write_raster,
)
from .multiscale import OK, ScaleSet, alignment_offsets, scale_sweep
from .testkit import GENERATORS, SyntheticSpec, generate, oracle_diversity, random_cube
from .zonal import zone_diversity, zone_scale_means

log = logging.getLogger("cropdiv")

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_COMPUTE = 0, 1, 2, 3
RASTER_NODATA = -9999

GRID_COLUMNS = ["scale_m", "block_row", "block_col", "n_cells", "cropland_pixels",
                "cropland_fraction", "alpha", "gamma", "beta", "richness", "partial", "filtered"]
ZONE_COLUMNS = ["zone", "n_cells", "discarded_cells", "discarded_fraction",
                "alpha", "gamma", "beta", "richness"]
ZONE_MEAN_COLUMNS = ["zone", "scale_m", "n_blocks", "mean_alpha", "mean_gamma", "mean_beta"]
PROFILE_COLUMNS = ["region", "avg_gamma", "std_gamma", "delta_avg", "delta_std", "quadrant"]
ECDF_COLUMNS = ["metric", "scale_m", "value", "cum_prob"]


class UsageError(Exception):
    pass


class ComputeError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    input: Path | None = None
    format: str | None = None
    classes: Path | None = None
    exclude_class: list[int] = field(default_factory=list)
    base_factor: int = 100
    scales: ScaleSet = field(default_factory=ScaleSet)
    min_cropland: float = 0.01
    zones: Path | None = None
    zones_resolution: str = "base"
    covariates: Path | None = None
    reference: Path | None = None
    regions: Path | None = None
    align: tuple[float, float] | None = None
    out: Path = Path(".")
    threads: int = 1

    def validate(self) -> None:
        for name in ("input", "classes", "zones", "covariates", "reference", "regions"):
            p = getattr(self, name)
            if p is not None and not Path(p).exists() and not (
                name == "input" and Path(p).with_suffix(".hdr").exists()
            ):
                raise UsageError(f"--{name.replace('_', '-')}: no such file {p}")
        if self.base_factor < 1:
            raise UsageError("--base-factor must be >= 1")
        if not 0 <= self.min_cropland < 1:
            raise UsageError("--min-cropland must lie in [0, 1)")
        if self.threads < 0:
            raise UsageError("--threads must be >= 0")
        try:
            Path(self.out).mkdir(parents=True, exist_ok=True)
            probe = Path(self.out) / ".cropdiv-write-test"
            probe.write_text("")
            probe.unlink()
        except OSError as e:
            raise UsageError(f"--out: output directory is not writable ({e})") from None

    def as_json(self) -> dict:
        out = {}
        for k, v in vars(self).items():
            if isinstance(v, Path):
                v = str(v)
            elif isinstance(v, ScaleSet):
                v = list(v.factors)
            elif isinstance(v, tuple):
                v = list(v)
            out[k] = v
        return out


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, float) and x != x:
        return ""
    return format_number(x)


def _float_col(arr: np.ndarray, mask: np.ndarray) -> list[str]:
    return [format_number(v) if m else "" for v, m in zip(arr.tolist(), mask.tolist())]


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _input_files(path: Path) -> list[Path]:
    if path.suffix.lower() in (".bin", ".hdr"):
        return [path.with_suffix(".bin"), path.with_suffix(".hdr")]
    return [path]


def write_manifest(cfg: RunConfig, outputs: list[Path]) -> Path:
    inputs = {}
    for name in ("input", "classes", "zones", "covariates", "reference", "regions"):
        p = getattr(cfg, name)
        if p is not None:
            for fp in _input_files(Path(p)):
                if fp.exists():
                    inputs[str(fp)] = _sha256(fp)
    manifest = {
        "tool": "cropdiv",
        "version": __version__,
        "command": cfg.command,
        "config": cfg.as_json(),
        "std_convention": "population",
        "inputs": inputs,
        "outputs": {p.name: _sha256(p) for p in sorted(outputs)},
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    path = cfg.out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def load_scheme(cfg: RunConfig) -> ClassScheme:
    scheme = read_class_scheme(cfg.classes) if cfg.classes else ClassScheme.default()
    if cfg.exclude_class:
        try:
            scheme = scheme.excluding(cfg.exclude_class)
        except ValueError as e:
            raise UsageError(f"--exclude-class: {e}") from None
    return scheme


def load_cube(cfg: RunConfig):
    if cfg.input is None:
        raise UsageError("--input is required")
    raster = read_raster(cfg.input, cfg.format)
    return tally(raster, load_scheme(cfg), cfg.base_factor, threads=cfg.threads)


def run_sweep(cfg: RunConfig, cube, keep_pooled: bool = False):
    offsets = None
    if cfg.align is not None:
        try:
            offsets = alignment_offsets(cube, cfg.scales.factors, *cfg.align)
        except ValueError as e:
            raise UsageError(f"--align: {e}") from None
    return scale_sweep(cube, cfg.scales, cfg.min_cropland, offsets=offsets,
                       keep_pooled=keep_pooled, threads=cfg.threads)


def _raster_origin(cube, res) -> tuple[float, float]:
    ro, co = res.grid.offset
    nR, _ = res.shape
    x = cube.origin_x - co * cube.base_size
    top = cube.top_y + ro * cube.base_size
    return x, top - nR * res.scale_m


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_grid(cfg: RunConfig, rasters: bool = True) -> list[Path]:
    cube = load_cube(cfg)
    results = run_sweep(cfg, cube)
    cfg.out.mkdir(parents=True, exist_ok=True)
    outputs = []
    csv_path = cfg.out / "grid_diversity.csv"
    with open(csv_path, "w", newline="") as f:
        f.write(",".join(GRID_COLUMNS) + "\n")
        for res in results:
            ok = res.retained
            has_total = res.total_pixels > 0
            frac = np.where(has_total, res.cropland_pixels / np.where(has_total, res.total_pixels, 1), 0.0)
            cols = [
                [format_number(res.scale_m)] * res.n_blocks,
                list(map(str, res.block_rows.tolist())),
                list(map(str, res.block_cols.tolist())),
                list(map(str, res.n_cells.tolist())),
                list(map(str, res.cropland_pixels.tolist())),
                _float_col(frac, has_total),
                _float_col(res.alpha, ok),
                _float_col(res.gamma, ok),
                _float_col(res.beta, ok),
                list(map(str, res.richness.tolist())),
                ["true" if p else "false" for p in res.partial.tolist()],
                ["false" if o else "true" for o in ok.tolist()],
            ]
            f.write("\n".join(",".join(row) for row in zip(*cols)))
            f.write("\n")
    outputs.append(csv_path)
    if rasters:
        for res in results:
            x0, y0 = _raster_origin(cube, res)
            tag = format_number(res.scale_m)
            for metric in ("alpha", "gamma", "beta", "richness"):
                vals = getattr(res, metric)
                if metric == "richness":
                    vals = np.where(res.retained, vals, RASTER_NODATA).astype(np.int64)
                path = cfg.out / f"grid_{tag}m_{metric}.asc"
                write_ascii_grid(path, vals.reshape(res.shape), res.scale_m, x0, y0, RASTER_NODATA)
                outputs.append(path)
    outputs.append(write_manifest(cfg, outputs))
    return outputs


def _zones(cfg: RunConfig, cube):
    if cfg.zones is None:
        raise UsageError("--zones is required for this command")
    try:
        return read_zone_map(cfg.zones, cube, cfg.zones_resolution)
    except RasterFormatError:
        raise
    except ValueError as e:
        raise RasterFormatError(f"{cfg.zones}: {e}") from None


def cmd_zonal(cfg: RunConfig) -> list[Path]:
    if cfg.zones is None:
        raise UsageError("--zones is required for zonal")
    cube = load_cube(cfg)
    zones = _zones(cfg, cube)
    reports = zone_diversity(cube, zones, cfg.min_cropland)
    results = run_sweep(cfg, cube)
    means = zone_scale_means(results, zones)
    cfg.out.mkdir(parents=True, exist_ok=True)
    zpath = cfg.out / "zones.csv"
    _write_csv(zpath, ZONE_COLUMNS, (
        [r.zone, r.n_cells, r.discarded_cells, _fmt(r.discarded_fraction),
         _fmt(r.record.alpha), _fmt(r.record.gamma), _fmt(r.record.beta),
         r.record.richness if r.record.defined else ""]
        for r in reports
    ))
    mpath = cfg.out / "zone_scale_means.csv"
    _write_csv(mpath, ZONE_MEAN_COLUMNS, (
        [m.zone, _fmt(m.scale_m), m.n_blocks, _fmt(m.mean_alpha), _fmt(m.mean_gamma),
         _fmt(m.mean_beta)]
        for m in sorted(means, key=lambda m: (m.zone, m.scale_m))
    ))
    outputs = [zpath, mpath]
    if cfg.covariates is not None:
        rows, unmatched = covariate_join((r.record for r in reports if r.record.defined),
                                         read_covariates(cfg.covariates))
        cpath = cfg.out / "covariate_scatter.csv"
        _write_csv(cpath, ["region", "value", "alpha", "gamma", "beta"], (
            [r.region, _fmt(r.covariate), _fmt(r.alpha), _fmt(r.gamma), _fmt(r.beta)]
            for r in rows
        ))
        upath = cfg.out / "covariate_unmatched.csv"
        _write_csv(upath, ["region"], ([u] for u in unmatched))
        outputs += [cpath, upath]
    outputs.append(write_manifest(cfg, outputs))
    return outputs


def _read_profile_table(path: Path, keyed: bool) -> dict:
    """``scale_m,gamma`` (reference) or ``region,scale_m,gamma`` (regions) CSV."""
    out: dict = {}
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        need = ["region", "scale_m", "gamma"] if keyed else ["scale_m", "gamma"]
        if reader.fieldnames is None or any(k not in reader.fieldnames for k in need):
            raise RasterFormatError(f"{path}: expected columns {','.join(need)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                scale, g = float(row["scale_m"]), float(row["gamma"])
            except ValueError:
                raise RasterFormatError(f"{path}: bad number on line {lineno}") from None
            target = out.setdefault(row["region"], {}) if keyed else out
            if scale in target:
                raise RasterFormatError(f"{path}: duplicate scale {scale} on line {lineno}")
            target[scale] = g
    return out


def cmd_profile(cfg: RunConfig) -> list[Path]:
    regions: dict[str, dict[float, float]] = {}
    reference = None
    if cfg.regions is not None:
        regions = _read_profile_table(cfg.regions, keyed=True)
    if cfg.input is not None:
        cube = load_cube(cfg)
        results = run_sweep(cfg, cube)
        reference = domain_means(results)
        if cfg.zones is not None:
            zones = _zones(cfg, cube)
            for m in zone_scale_means(results, zones):
                if m.mean_gamma is not None:
                    regions.setdefault(str(m.zone), {})[m.scale_m] = m.mean_gamma
    if cfg.reference is not None:
        reference = _read_profile_table(cfg.reference, keyed=False)
    if reference is None:
        raise UsageError("profile needs --input or --reference")
    profiles = [scale_profile(reference, reference, "reference")]
    skipped = []
    for region in sorted(regions):
        try:
            profiles.append(scale_profile(regions[region], reference, region))
        except ValueError:
            skipped.append(region)
    if skipped:
        log.warning("skipped regions lacking a full scale profile: %s", ", ".join(skipped))
    cfg.out.mkdir(parents=True, exist_ok=True)
    path = cfg.out / "profiles.csv"
    _write_csv(path, PROFILE_COLUMNS, (
        [p.region, _fmt(p.avg_gamma), _fmt(p.std_gamma), _fmt(p.delta_avg),
         _fmt(p.delta_std), p.quadrant]
        for p in profiles
    ))
    return [path, write_manifest(cfg, [path])]


def cmd_ecdf(cfg: RunConfig) -> list[Path]:
    cube = load_cube(cfg)
    results = run_sweep(cfg, cube)
    cfg.out.mkdir(parents=True, exist_ok=True)
    path = cfg.out / "ecdf.csv"
    rows = []
    for metric in ("alpha", "gamma"):
        for res in results:
            sample = getattr(res, metric)[res.retained]
            if sample.size == 0:
                continue
            table = ecdf(sample, metric, res.scale_m)
            s = _fmt(res.scale_m)
            rows.extend([metric, s, _fmt(v), _fmt(p)]
                        for v, p in zip(table.values.tolist(), table.cum_prob.tolist()))
    _write_csv(path, ECDF_COLUMNS, rows)
    return [path, write_manifest(cfg, [path])]


def cmd_props(cfg: RunConfig) -> list[Path]:
    cube = load_cube(cfg)
    results = run_sweep(cfg, cube, keep_pooled=True)
    codes = cube.scheme.codes
    header = (["scale_m", "block_row", "block_col", "filtered"]
              + [f"cropland_{c}" for c in codes] + [f"land_{c}" for c in codes])
    cfg.out.mkdir(parents=True, exist_ok=True)
    path = cfg.out / "proportions.csv"

    def rows():
        for res in results:
            crop = res.cropland_pixels
            tot = res.total_pixels
            for b in range(res.n_blocks):
                pooled = res.pooled[b].tolist()
                cp = [_fmt(v / crop[b]) for v in pooled] if crop[b] else [""] * len(pooled)
                lp = [_fmt(v / tot[b]) for v in pooled] if tot[b] else [""] * len(pooled)
                yield ([_fmt(res.scale_m), b // res.shape[1], b % res.shape[1],
                        _fmt(res.status[b] != OK)] + cp + lp)

    _write_csv(path, header, rows())
    return [path, write_manifest(cfg, [path])]


def cmd_synth(args) -> list[Path]:
    spec = SyntheticSpec(
        shape=(args.rows, args.cols),
        base_factor=args.base_factor,
        n_classes=args.n_classes,
        generator=args.generator,
        seed=args.seed,
        cropland_fraction=args.cropland_fraction,
        patch_size=(args.patch_min, args.patch_max),
        cell_size=args.cell_size,
    )
    try:
        raster = generate(spec)
    except ValueError as e:
        raise UsageError(str(e)) from None
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_raster(raster, out, args.format)
    scheme_path = out.with_name(out.stem + "_classes.csv")
    write_class_scheme(spec.scheme(), scheme_path)
    return [out, scheme_path]


def cmd_oracle_check(cfg: RunConfig, n_cubes: int, seed: int, tol: float = 1e-12) -> dict:
    worst = 0.0
    checked = 0
    if cfg.input is not None:
        cube = load_cube(cfg)
        for res in run_sweep(cfg, cube):
            for b in np.flatnonzero(res.retained):
                cells = res.grid.cells(int(b) // res.shape[1], int(b) % res.shape[1])
                if cells.size > 1000:
                    continue
                a, g, _ = oracle_diversity(cube, cells)
                worst = max(worst, abs(a - res.alpha[b]), abs(g - res.gamma[b]))
                checked += 1
    else:
        from .diversity import alpha, gamma

        rng = np.random.Generator(np.random.Philox(seed))
        for _ in range(n_cubes):
            cube = random_cube(rng)
            unit = range(cube.n_cells)
            a, g, _ = oracle_diversity(cube, unit)
            worst = max(worst, abs(a - alpha(cube, unit)), abs(g - gamma(cube, unit)))
            checked += 1
    summary = {"units_checked": checked, "max_abs_diff": worst, "tolerance": tol,
               "pass": worst <= tol}
    print(json.dumps(summary))
    if worst > tol:
        raise ComputeError(f"engine and oracle disagree by {worst:g} > {tol:g}")
    return summary


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _pair(text: str) -> tuple[float, float]:
    try:
        x, y = (float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected X,Y") from None
    return x, y


def _scales(text: str) -> ScaleSet:
    try:
        return ScaleSet.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cropdiv", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"cropdiv {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, zones=False, input_required=True):
        p.add_argument("--input", type=Path, required=input_required, help="class raster (.asc or .bin)")
        p.add_argument("--format", choices=["ascii", "raw", "ascii-grid", "raw-binary"])
        p.add_argument("--classes", type=Path, help="class scheme CSV (code,label)")
        p.add_argument("--exclude-class", type=int, action="append", default=[], metavar="CODE")
        p.add_argument("--base-factor", type=int, default=100, help="pixels per base-cell edge")
        p.add_argument("--scales", type=_scales, default=ScaleSet(),
                       help="comma list of block factors in base cells")
        p.add_argument("--min-cropland", type=float, default=0.01)
        p.add_argument("--align", type=_pair, metavar="X,Y",
                       help="align blocks to a reference grid with a corner at X,Y")
        p.add_argument("--out", type=Path, default=Path("."))
        p.add_argument("--threads", type=int, default=1, help="0 = one per core")
        if zones:
            p.add_argument("--zones", type=Path)
            p.add_argument("--zones-resolution", choices=["base", "fine"], default="base")
        return p

    common(sub.add_parser("grid", help="per-scale grid diversity"))
    z = common(sub.add_parser("zonal", help="diversity per zone"), zones=True)
    z.add_argument("--covariates", type=Path, help="region,value CSV for a scatter join")
    p = common(sub.add_parser("profile", help="gamma scale profiles and quadrants"),
               zones=True, input_required=False)
    p.add_argument("--reference", type=Path, help="explicit reference profile CSV (scale_m,gamma)")
    p.add_argument("--regions", type=Path, help="explicit region profiles CSV (region,scale_m,gamma)")
    common(sub.add_parser("ecdf", help="ECDFs of alpha and gamma per scale"))
    common(sub.add_parser("props", help="class proportions per block and scale"))

    s = sub.add_parser("synth", help="write a synthetic landscape")
    s.add_argument("--generator", choices=GENERATORS, default="patchwork")
    s.add_argument("--rows", type=int, default=100, help="lattice rows in base cells")
    s.add_argument("--cols", type=int, default=100, help="lattice columns in base cells")
    s.add_argument("--base-factor", type=int, default=10)
    s.add_argument("--n-classes", type=int, default=8)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--cropland-fraction", type=float, default=1.0)
    s.add_argument("--patch-min", type=int, default=1)
    s.add_argument("--patch-max", type=int, default=50)
    s.add_argument("--cell-size", type=float, default=10.0)
    s.add_argument("--format", choices=["ascii", "raw", "ascii-grid", "raw-binary"])
    s.add_argument("--out", type=Path, required=True, help="output raster path")

    o = common(sub.add_parser("oracle-check", help="compare engine with the brute-force oracle"),
               input_required=False)
    o.add_argument("--n-cubes", type=int, default=1000)
    o.add_argument("--seed", type=int, default=0)
    return parser


def config_from_args(args) -> RunConfig:
    cfg = RunConfig(command=args.command)
    for name in vars(cfg):
        if name != "command" and hasattr(args, name):
            setattr(cfg, name, getattr(args, name))
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "synth":
            cmd_synth(args)
            return EXIT_OK
        cfg = config_from_args(args)
        if cfg.threads == 0:
            import os

            cfg.threads = os.cpu_count() or 1
        if args.command == "grid":
            cmd_grid(cfg)
        elif args.command == "zonal":
            cmd_zonal(cfg)
        elif args.command == "profile":
            cmd_profile(cfg)
        elif args.command == "ecdf":
            cmd_ecdf(cfg)
        elif args.command == "props":
            cmd_props(cfg)
        elif args.command == "oracle-check":
            cmd_oracle_check(cfg, args.n_cubes, args.seed)
    except UsageError as e:
        print(f"cropdiv: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (RasterFormatError, FileNotFoundError) as e:
        print(f"cropdiv: input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (ComputeError, UndefinedUnitError, ValueError, MemoryError) as e:
        print(f"cropdiv: compute error: {e}", file=sys.stderr)
        return EXIT_COMPUTE
    except OSError as e:
        print(f"cropdiv: error: {e}", file=sys.stderr)
        return EXIT_COMPUTE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
