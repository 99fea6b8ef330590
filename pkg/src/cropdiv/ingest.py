"""Reading categorical rasters and zone maps, and tallying pixels into base cells.

Two on-disk raster formats are supported:

* ESRI ASCII grid (``.asc``): six header lines followed by ``nrows`` lines of
  ``ncols`` integers, top row first.
* Raw binary (``.bin`` + ``.hdr``): little-endian uint16 values, row-major,
  top row first, with a ``key=value`` text sidecar.

Everything downstream works from a :class:`CountCube`, the per-base-cell,
per-class pixel counts.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

UINT16_MAX = 65535

# Supplementary class list of the EU crop map (code, label).
EU_CROP_CLASSES: tuple[tuple[int, str], ...] = (
    (211, "Common wheat"),
    (212, "Durum wheat"),
    (213, "Barley"),
    (214, "Rye"),
    (215, "Oats"),
    (216, "Maize"),
    (217, "Rice"),
    (218, "Triticale"),
    (219, "Other cereals"),
    (221, "Potatoes"),
    (222, "Sugar beet"),
    (223, "Other root crops"),
    (230, "Other non permanent industrial crops"),
    (231, "Sunflower"),
    (232, "Rape and turnip rape"),
    (233, "Soya"),
    (240, "Dry pulses, vegetables and flowers"),
    (250, "Other fodder crops (excl. temp. grasslands)"),
    (290, "Bare arable land"),
)

BORDER = -1
OUTSIDE = -2


class RasterFormatError(ValueError):
    """Malformed or truncated raster input."""


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CategoricalRaster:
    """Grid of integer class codes.

    ``origin_x``/``origin_y`` are the lower-left corner in map units and
    ``values`` has shape ``(height, width)`` with row 0 at the top.
    """

    values: np.ndarray
    cell_size: float = 10.0
    origin_x: float = 0.0
    origin_y: float = 0.0
    nodata: int = 0

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ValueError("raster values must be two-dimensional")
        if self.height <= 0 or self.width <= 0:
            raise ValueError("zero-area raster")
        if not self.cell_size > 0:
            raise ValueError(f"cell_size must be positive, got {self.cell_size}")

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    @property
    def width(self) -> int:
        return int(self.values.shape[1])


@dataclass(frozen=True)
class ClassScheme:
    """Ordered set of class codes counted as cropland.

    The declaration order fixes the class index used for count columns.
    """

    classes: tuple[tuple[int, str], ...]

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple((int(c), str(l)) for c, l in self.classes))
        if not self.classes:
            raise ValueError("class scheme needs at least one class")
        codes = self.codes
        if len(set(codes)) != len(codes):
            raise ValueError("duplicate class codes in scheme")
        for code in codes:
            if not 0 <= code <= UINT16_MAX:
                raise ValueError(f"class code {code} outside the 16-bit range")

    @classmethod
    def default(cls) -> "ClassScheme":
        return cls(EU_CROP_CLASSES)

    @property
    def codes(self) -> list[int]:
        return [c for c, _ in self.classes]

    @property
    def labels(self) -> list[str]:
        return [l for _, l in self.classes]

    def __len__(self) -> int:
        return len(self.classes)

    def excluding(self, codes: Iterable[int]) -> "ClassScheme":
        drop = set(int(c) for c in codes)
        unknown = drop - set(self.codes)
        if unknown:
            raise ValueError(f"codes not in the class scheme: {sorted(unknown)}")
        return ClassScheme(tuple(cl for cl in self.classes if cl[0] not in drop))

    def lookup_table(self) -> np.ndarray:
        """Map every uint16 code to its class index, or ``len(self)`` if absent."""
        dtype = np.uint8 if len(self) < 255 else np.uint16
        lut = np.full(UINT16_MAX + 1, len(self), dtype=dtype)
        lut[self.codes] = np.arange(len(self), dtype=dtype)
        return lut


@dataclass(frozen=True)
class CountCube:
    """Per-base-cell class counts.

    ``counts[i, j]`` is the number of pixels of class ``j`` in base cell ``i``,
    cells ordered row-major from the top-left of the raster.
    ``total_pixels[i]`` counts every pixel of the cell, cropland or not.
    """

    counts: np.ndarray
    total_pixels: np.ndarray
    grid_rows: int
    grid_cols: int
    base_factor: int
    scheme: ClassScheme = field(default_factory=ClassScheme.default)
    pixel_shape: tuple[int, int] | None = None
    cell_size: float = 10.0
    origin_x: float = 0.0
    origin_y: float = 0.0

    def __post_init__(self):
        counts = np.ascontiguousarray(self.counts, dtype=np.int64)
        total = np.ascontiguousarray(self.total_pixels, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[1] != len(self.scheme):
            raise ValueError(
                f"counts must have shape (M, {len(self.scheme)}), got {counts.shape}"
            )
        if counts.shape[0] != self.grid_rows * self.grid_cols:
            raise ValueError("number of cells does not match grid_rows * grid_cols")
        if total.shape != (counts.shape[0],):
            raise ValueError("total_pixels must have one entry per cell")
        if (counts < 0).any():
            raise ValueError("negative counts")
        if (counts.sum(axis=1) > total).any():
            raise ValueError("cropland counts exceed total pixels for some cell")
        counts.flags.writeable = False
        total.flags.writeable = False
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "total_pixels", total)

    @classmethod
    def from_counts(cls, counts, total_pixels=None, grid_shape=None, **kwargs) -> "CountCube":
        """Convenience constructor for hand-built cubes (tests, oracles)."""
        counts = np.asarray(counts, dtype=np.int64)
        if counts.ndim == 1:
            counts = counts[None, :]
        if total_pixels is None:
            total_pixels = counts.sum(axis=1)
        rows, cols = grid_shape if grid_shape is not None else (1, counts.shape[0])
        if "scheme" not in kwargs:
            kwargs["scheme"] = ClassScheme(
                tuple((j + 1, f"class {j + 1}") for j in range(counts.shape[1]))
            )
        kwargs.setdefault("base_factor", 1)
        return cls(counts, np.asarray(total_pixels), rows, cols, **kwargs)

    @property
    def n_cells(self) -> int:
        return self.counts.shape[0]

    @property
    def n_classes(self) -> int:
        return self.counts.shape[1]

    @property
    def base_size(self) -> float:
        """Edge length of a base cell in map units."""
        return self.base_factor * self.cell_size

    @property
    def top_y(self) -> float:
        height = self.pixel_shape[0] if self.pixel_shape else self.grid_rows * self.base_factor
        return self.origin_y + height * self.cell_size

    def lattice(self) -> np.ndarray:
        """Counts viewed as ``(grid_rows, grid_cols, S)``."""
        return self.counts.reshape(self.grid_rows, self.grid_cols, self.n_classes)

    def cropland_pixels(self) -> np.ndarray:
        return self.counts.sum(axis=1)


@dataclass(frozen=True)
class ZoneMap:
    """Zone assignment per base cell.

    ``assignment`` holds a non-negative zone label, :data:`BORDER` or
    :data:`OUTSIDE` for each cell.  ``border_labels`` maps every border cell
    index to the sorted labels it touches (empty for base-resolution maps).
    """

    assignment: np.ndarray
    border_labels: dict[int, tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self):
        a = np.ascontiguousarray(self.assignment, dtype=np.int64)
        if a.ndim != 1:
            raise ValueError("zone assignment must be one-dimensional")
        if (a < OUTSIDE).any():
            raise ValueError("invalid zone assignment value")
        a.flags.writeable = False
        object.__setattr__(self, "assignment", a)

    def labels(self) -> list[int]:
        """All zone labels, including those reached only through border cells."""
        found = set(np.unique(self.assignment[self.assignment >= 0]).tolist())
        for labs in self.border_labels.values():
            found.update(labs)
        return sorted(found)


# ---------------------------------------------------------------------------
# Raster readers / writers
# ---------------------------------------------------------------------------

_ASCII_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")


def _parse_ascii_header(lines: Sequence[str], path) -> dict[str, str]:
    header: dict[str, str] = {}
    for lineno, line in enumerate(lines, start=1):
        parts = line.split()
        if len(parts) != 2:
            raise RasterFormatError(f"{path}: malformed header line {lineno}: {line.strip()!r}")
        key = parts[0].lower()
        if key not in _ASCII_KEYS:
            raise RasterFormatError(f"{path}: unknown header key {parts[0]!r} on line {lineno}")
        header[key] = parts[1]
    missing = [k for k in _ASCII_KEYS if k not in header]
    if missing:
        raise RasterFormatError(f"{path}: header missing {', '.join(missing)}")
    return header


def _header_int(header, key, path) -> int:
    try:
        value = float(header[key])
    except ValueError:
        raise RasterFormatError(f"{path}: header {key} is not a number: {header[key]!r}") from None
    if value != int(value):
        raise RasterFormatError(f"{path}: header {key} must be an integer, got {header[key]!r}")
    return int(value)


def _header_float(header, key, path) -> float:
    try:
        return float(header[key])
    except ValueError:
        raise RasterFormatError(f"{path}: header {key} is not a number: {header[key]!r}") from None


def read_ascii_grid(path, dtype=float):
    """Read an ASCII grid with arbitrary numeric payload.

    Returns ``(values, header)`` where ``header`` holds ``ncols, nrows,
    xllcorner, yllcorner, cellsize, nodata_value`` as numbers.  Used for
    re-reading metric rasters; :func:`read_raster` layers code validation on
    top of the same parsing.
    """
    text = Path(path).read_text()
    lines = text.splitlines()
    if len(lines) < 6:
        raise RasterFormatError(f"{path}: header truncated ({len(lines)} lines)")
    raw = _parse_ascii_header(lines[:6], path)
    ncols = _header_int(raw, "ncols", path)
    nrows = _header_int(raw, "nrows", path)
    if ncols <= 0 or nrows <= 0:
        raise RasterFormatError(f"{path}: ncols and nrows must be positive")
    header = {
        "ncols": ncols,
        "nrows": nrows,
        "xllcorner": _header_float(raw, "xllcorner", path),
        "yllcorner": _header_float(raw, "yllcorner", path),
        "cellsize": _header_float(raw, "cellsize", path),
        "nodata_value": _header_float(raw, "nodata_value", path),
    }
    tokens = "\n".join(lines[6:]).split()
    expected = nrows * ncols
    if len(tokens) < expected:
        n = len(tokens)
        raise RasterFormatError(
            f"{path}: truncated payload, header declares {expected} values but found {n} "
            f"(data ends at row {n // ncols}, column {n % ncols})"
        )
    if len(tokens) > expected:
        raise RasterFormatError(
            f"{path}: payload holds {len(tokens)} values, header declares {expected}"
        )
    try:
        values = np.array(tokens, dtype=dtype)
    except ValueError:
        for k, tok in enumerate(tokens):
            try:
                dtype(tok) if dtype in (int, float) else np.array(tok, dtype=dtype)
            except ValueError:
                raise RasterFormatError(
                    f"{path}: bad value {tok!r} at row {k // ncols}, column {k % ncols}"
                ) from None
        raise
    return values.reshape(nrows, ncols), header


def _check_code_range(values: np.ndarray, nodata: int, path) -> None:
    bad = ((values < 0) | (values > UINT16_MAX)) & (values != nodata)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise RasterFormatError(
            f"{path}: value {values[r, c]} at row {r}, column {c} exceeds the 16-bit code range"
        )


def _read_ascii_raster(path) -> CategoricalRaster:
    try:
        values, header = read_ascii_grid(path, dtype=np.int64)
    except RasterFormatError:
        raise
    nodata = header["nodata_value"]
    if nodata != int(nodata):
        raise RasterFormatError(f"{path}: NODATA_value must be an integer")
    nodata = int(nodata)
    _check_code_range(values, nodata, path)
    if 0 <= nodata <= UINT16_MAX:
        values = values.astype(np.uint16)
    else:
        values = values.astype(np.int32)
    return CategoricalRaster(
        values,
        cell_size=header["cellsize"],
        origin_x=header["xllcorner"],
        origin_y=header["yllcorner"],
        nodata=nodata,
    )


def _raw_paths(path) -> tuple[Path, Path]:
    p = Path(path)
    if p.suffix in (".bin", ".hdr"):
        p = p.with_suffix("")
    return p.with_suffix(".bin"), p.with_suffix(".hdr")


def read_raw_header(path) -> dict[str, float]:
    _, hdr = _raw_paths(path)
    if not hdr.exists():
        raise RasterFormatError(f"{hdr}: missing header sidecar")
    header: dict[str, str] = {}
    for lineno, line in enumerate(hdr.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        if "=" not in line:
            raise RasterFormatError(f"{hdr}: malformed line {lineno}: {line!r}")
        key, value = line.split("=", 1)
        header[key.strip().lower()] = value.strip()
    required = ("width", "height", "cellsize", "origin_x", "origin_y", "nodata")
    missing = [k for k in required if k not in header]
    if missing:
        raise RasterFormatError(f"{hdr}: header missing {', '.join(missing)}")
    out = {
        "width": _header_int(header, "width", hdr),
        "height": _header_int(header, "height", hdr),
        "cellsize": _header_float(header, "cellsize", hdr),
        "origin_x": _header_float(header, "origin_x", hdr),
        "origin_y": _header_float(header, "origin_y", hdr),
        "nodata": _header_int(header, "nodata", hdr),
    }
    if out["width"] <= 0 or out["height"] <= 0:
        raise RasterFormatError(f"{hdr}: width and height must be positive")
    if not 0 <= out["nodata"] <= UINT16_MAX:
        raise RasterFormatError(f"{hdr}: nodata {out['nodata']} outside the 16-bit range")
    return out


def _read_raw_raster(path, mmap: bool = True) -> CategoricalRaster:
    binpath, _ = _raw_paths(path)
    header = read_raw_header(path)
    width, height = header["width"], header["height"]
    expected = width * height
    if not binpath.exists():
        raise RasterFormatError(f"{binpath}: missing payload")
    size = os.path.getsize(binpath)
    n = size // 2
    if size % 2:
        raise RasterFormatError(f"{binpath}: odd byte count {size}, not a uint16 payload")
    if n < expected:
        raise RasterFormatError(
            f"{binpath}: truncated payload, header declares {expected} values but found {n} "
            f"(data ends at row {n // width}, column {n % width})"
        )
    if n > expected:
        raise RasterFormatError(
            f"{binpath}: payload holds {n} values, header declares {expected}"
        )
    if mmap:
        values = np.memmap(binpath, dtype="<u2", mode="r", shape=(height, width))
    else:
        values = np.fromfile(binpath, dtype="<u2").reshape(height, width)
    return CategoricalRaster(
        values,
        cell_size=header["cellsize"],
        origin_x=header["origin_x"],
        origin_y=header["origin_y"],
        nodata=header["nodata"],
    )


def detect_format(path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix in (".bin", ".hdr", ".raw"):
        return "raw-binary"
    return "ascii-grid"


def read_raster(path, format: str | None = None) -> CategoricalRaster:
    """Read a categorical raster.

    ``format`` is ``"ascii-grid"`` or ``"raw-binary"``; ``None`` picks by file
    extension.  Raises :class:`RasterFormatError` for malformed headers,
    out-of-range codes and truncated payloads.
    """
    fmt = _normalise_format(format or detect_format(path))
    if fmt == "ascii-grid":
        return _read_ascii_raster(path)
    return _read_raw_raster(path)


def _normalise_format(fmt: str) -> str:
    aliases = {"ascii": "ascii-grid", "asc": "ascii-grid", "ascii-grid": "ascii-grid",
               "raw": "raw-binary", "bin": "raw-binary", "raw-binary": "raw-binary"}
    try:
        return aliases[fmt.lower()]
    except KeyError:
        raise ValueError(f"unknown raster format {fmt!r}") from None


def format_number(x) -> str:
    """Shortest round-trip decimal text for a number."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if x.is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def write_ascii_grid(path, values, cell_size, origin_x, origin_y, nodata) -> None:
    """Write a 2-D array as an ASCII grid, row 0 first.

    Float arrays are written with shortest round-trip text; NaN cells become
    ``nodata``.
    """
    values = np.asarray(values)
    nrows, ncols = values.shape
    with open(path, "w", newline="\n") as f:
        f.write(f"ncols {ncols}\n")
        f.write(f"nrows {nrows}\n")
        f.write(f"xllcorner {format_number(origin_x)}\n")
        f.write(f"yllcorner {format_number(origin_y)}\n")
        f.write(f"cellsize {format_number(cell_size)}\n")
        f.write(f"NODATA_value {format_number(nodata)}\n")
        nd = format_number(nodata)
        if np.issubdtype(values.dtype, np.integer):
            for row in values:
                f.write(" ".join(map(str, row.tolist())) + "\n")
        else:
            for row in values:
                f.write(" ".join(nd if v != v else format_number(v) for v in row.tolist()) + "\n")


def write_raster(raster: CategoricalRaster, path, format: str | None = None) -> None:
    fmt = _normalise_format(format or detect_format(path))
    if fmt == "ascii-grid":
        write_ascii_grid(path, raster.values, raster.cell_size, raster.origin_x,
                         raster.origin_y, raster.nodata)
        return
    if not 0 <= raster.nodata <= UINT16_MAX:
        raise ValueError("raw-binary rasters need a 16-bit nodata value")
    binpath, hdr = _raw_paths(path)
    np.ascontiguousarray(raster.values, dtype="<u2").tofile(binpath)
    hdr.write_text(
        f"width={raster.width}\nheight={raster.height}\n"
        f"cellsize={format_number(raster.cell_size)}\n"
        f"origin_x={format_number(raster.origin_x)}\n"
        f"origin_y={format_number(raster.origin_y)}\n"
        f"nodata={raster.nodata}\n"
    )


def read_class_scheme(path) -> ClassScheme:
    """Read a ``code,label`` CSV; row order defines the class index."""
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or [h.strip().lower() for h in reader.fieldnames[:2]] != ["code", "label"]:
            raise RasterFormatError(f"{path}: expected header 'code,label'")
        classes = []
        for lineno, row in enumerate(reader, start=2):
            try:
                code = int(row["code"])
            except (TypeError, ValueError):
                raise RasterFormatError(f"{path}: bad class code on line {lineno}") from None
            classes.append((code, (row.get("label") or "").strip()))
    try:
        return ClassScheme(tuple(classes))
    except ValueError as e:
        raise RasterFormatError(f"{path}: {e}") from None


def write_class_scheme(scheme: ClassScheme, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["code", "label"])
        w.writerows(scheme.classes)


# ---------------------------------------------------------------------------
# Tally
# ---------------------------------------------------------------------------


def lattice_shape(height: int, width: int, base_factor: int) -> tuple[int, int]:
    return -(-height // base_factor), -(-width // base_factor)


def tally_tile(values: np.ndarray, lut: np.ndarray, n_classes: int, base_factor: int,
               rows: slice, cols: slice, grid_shape: tuple[int, int]):
    """Tally a pixel window into full-lattice partial count arrays.

    Returns ``(counts, total)`` shaped ``(grid_rows * grid_cols, S)`` and
    ``(grid_rows * grid_cols,)``; summing the partials of any tiling of the
    raster gives the whole-raster tally.
    """
    r0, r1, _ = rows.indices(values.shape[0])
    c0, c1, _ = cols.indices(values.shape[1])
    gr, gc = grid_shape
    counts = np.zeros((gr * gc, n_classes), dtype=np.int64)
    total = np.zeros(gr * gc, dtype=np.int64)
    if r1 <= r0 or c1 <= c0:
        return counts, total
    f = base_factor
    block = values[r0:r1, c0:c1]
    if block.dtype == np.uint16:
        idx = lut[block]
    else:
        clipped = np.where((block < 0) | (block > UINT16_MAX), 0, block).astype(np.intp)
        idx = np.where((block < 0) | (block > UINT16_MAX), n_classes, lut[clipped])
    row_cell = np.arange(r0, r1) // f
    col_cell = np.arange(c0, c1) // f
    rmin, cmin = row_cell[0], col_cell[0]
    span_r = row_cell[-1] - rmin + 1
    span_c = col_cell[-1] - cmin + 1
    width = n_classes + 1
    key = ((row_cell - rmin)[:, None] * (span_c * width)
           + (col_cell - cmin)[None, :] * width
           + idx.astype(np.int64))
    bc = np.bincount(key.ravel(), minlength=span_r * span_c * width)
    bc = bc.reshape(span_r, span_c, width)
    cell_rows = np.arange(rmin, rmin + span_r)
    cell_cols = np.arange(cmin, cmin + span_c)
    flat = (cell_rows[:, None] * gc + cell_cols[None, :]).ravel()
    counts[flat] = bc[:, :, :n_classes].reshape(-1, n_classes)
    total[flat] = bc.sum(axis=2).ravel()
    return counts, total


def tally(raster: CategoricalRaster, scheme: ClassScheme | None = None,
          base_factor: int = 100, threads: int = 1) -> CountCube:
    """Count pixels per base cell and class.

    Base cell ``(r, c)`` covers pixel rows ``[r*f, min((r+1)*f, height))``
    and the matching columns; edge cells may be partial.  Codes outside the
    scheme (nodata included) only add to ``total_pixels``.  Work is split
    into bands of base-cell rows whose partial cubes are summed, so the
    result does not depend on ``threads``.
    """
    scheme = scheme or ClassScheme.default()
    if base_factor < 1:
        raise ValueError("base_factor must be >= 1")
    values = raster.values
    height, width = values.shape
    if height == 0 or width == 0:
        raise ValueError("zero-area raster")
    gr, gc = lattice_shape(height, width, base_factor)
    lut = scheme.lookup_table()
    S = len(scheme)
    counts = np.zeros((gr, gc, S), dtype=np.int64)
    total = np.zeros((gr, gc), dtype=np.int64)

    # bands of whole base-cell rows, ~2**22 pixels each
    rows_per_band = max(1, (1 << 22) // max(1, width * base_factor)) * base_factor
    bands = [(r, min(r + rows_per_band, height)) for r in range(0, height, rows_per_band)]

    def work(band):
        r0, r1 = band
        sub_rows = lattice_shape(r1 - r0, width, base_factor)[0]
        c, t = tally_tile(values[r0:r1], lut, S, base_factor, slice(None), slice(None),
                          (sub_rows, gc))
        return r0 // base_factor, c.reshape(sub_rows, gc, S), t.reshape(sub_rows, gc)

    if threads == 1 or len(bands) == 1:
        parts = map(work, bands)
    else:
        from concurrent.futures import ThreadPoolExecutor

        pool = ThreadPoolExecutor(max_workers=threads or None)
        parts = pool.map(work, bands)
    for start, c, t in parts:
        counts[start:start + c.shape[0]] += c
        total[start:start + t.shape[0]] += t
    if threads != 1 and len(bands) > 1:
        pool.shutdown()

    return CountCube(
        counts.reshape(gr * gc, S),
        total.reshape(gr * gc),
        gr,
        gc,
        base_factor,
        scheme=scheme,
        pixel_shape=(height, width),
        cell_size=raster.cell_size,
        origin_x=raster.origin_x,
        origin_y=raster.origin_y,
    )


# ---------------------------------------------------------------------------
# Zone maps
# ---------------------------------------------------------------------------


def zone_map_from_labels(labels: np.ndarray, cube: CountCube, resolution: str = "base",
                         outside: int = 0) -> ZoneMap:
    """Build a :class:`ZoneMap` from a label array aligned with ``cube``.

    At ``"base"`` resolution there is one label per base cell.  At ``"fine"``
    resolution there is one label per pixel, and a cell whose pixels carry two
    or more distinct labels (``outside`` ignored) becomes :data:`BORDER`.
    """
    labels = np.asarray(labels)
    if resolution == "base":
        if labels.shape != (cube.grid_rows, cube.grid_cols):
            raise ValueError(
                f"zone map shape {labels.shape} does not match base lattice "
                f"{(cube.grid_rows, cube.grid_cols)}"
            )
        flat = labels.astype(np.int64).ravel()
        assignment = np.where(flat == outside, OUTSIDE, flat)
        return ZoneMap(assignment)
    if resolution != "fine":
        raise ValueError(f"unknown zone resolution {resolution!r}")
    f = cube.base_factor
    expected = cube.pixel_shape or (cube.grid_rows * f, cube.grid_cols * f)
    if labels.shape != tuple(expected):
        raise ValueError(f"zone map shape {labels.shape} does not match raster {tuple(expected)}")
    gr, gc = cube.grid_rows, cube.grid_cols
    h, w = labels.shape
    lo = np.empty((gr, gc), dtype=np.int64)
    hi = np.empty((gr, gc), dtype=np.int64)
    big = np.iinfo(np.int64).max
    band_rows = max(1, (1 << 22) // max(1, gc * f * f))
    for R0 in range(0, gr, band_rows):
        R1 = min(R0 + band_rows, gr)
        lab = np.full(((R1 - R0) * f, gc * f), outside, dtype=np.int64)
        chunk = labels[R0 * f:R1 * f]
        lab[:chunk.shape[0], :w] = chunk
        inside = lab != outside
        shape = (R1 - R0, f, gc, f)
        lo[R0:R1] = np.where(inside, lab, big).reshape(shape).min(axis=(1, 3))
        hi[R0:R1] = np.where(inside, lab, -1).reshape(shape).max(axis=(1, 3))
    lo, hi = lo.ravel(), hi.ravel()
    assignment = np.where(hi < 0, OUTSIDE, np.where(lo == hi, lo, BORDER)).astype(np.int64)
    border: dict[int, tuple[int, ...]] = {}
    for c in np.flatnonzero(assignment == BORDER).tolist():
        r0, c0 = (c // gc) * f, (c % gc) * f
        window = np.asarray(labels[r0:r0 + f, c0:c0 + f]).astype(np.int64)
        border[c] = tuple(np.unique(window[window != outside]).tolist())
    return ZoneMap(assignment, border)


def read_zone_map(path, cube: CountCube, resolution: str = "base",
                  format: str | None = None, outside: int | None = None) -> ZoneMap:
    """Read a rasterized zone map aligned with ``cube``'s lattice.

    Labels equal to ``outside`` (default: the file's nodata value) mark
    pixels/cells outside every zone.
    """
    raster = read_raster(path, format)
    return zone_map_from_labels(
        np.asarray(raster.values), cube, resolution,
        outside=raster.nodata if outside is None else outside,
    )
