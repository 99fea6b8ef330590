"""Nested block grids over the base-cell lattice and the per-scale sweep.

A scale factor ``f`` groups ``f x f`` base cells into one block.  Alpha of a
block always comes from its base cells (the reference scale), gamma from the
block's pooled counts.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .diversity import DiversityRecord, unit_exponents
from .ingest import CountCube

DEFAULT_FACTORS = (1, 2, 5, 10, 20, 50, 100)

OK, FILTERED, UNDEFINED = 0, 1, 2
STATUS_NAMES = {OK: "ok", FILTERED: "filtered", UNDEFINED: "undefined"}

# cells per chunk handed to unit_exponents; bounds peak memory
_CHUNK_CELLS = 1 << 18


@dataclass(frozen=True)
class ScaleSet:
    factors: tuple[int, ...] = DEFAULT_FACTORS

    def __post_init__(self):
        factors = tuple(int(f) for f in self.factors)
        if not factors:
            raise ValueError("empty scale set")
        if any(f < 1 for f in factors):
            raise ValueError("scale factors must be positive")
        if any(b <= a for a, b in zip(factors, factors[1:])):
            raise ValueError("scale factors must be strictly increasing")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def parse(cls, text: str) -> "ScaleSet":
        return cls(tuple(int(t) for t in text.split(",") if t.strip()))

    def __iter__(self):
        return iter(self.factors)

    def __len__(self):
        return len(self.factors)


@dataclass(frozen=True)
class BlockGrid:
    """Blocks of ``factor x factor`` base cells anchored at the lattice origin.

    ``offset = (row, col)`` shifts the anchor: base cell ``(r, c)`` belongs to
    block ``((r + row) // factor, (c + col) // factor)``.
    """

    factor: int
    grid_rows: int
    grid_cols: int
    offset: tuple[int, int] = (0, 0)

    def __post_init__(self):
        if self.factor < 1:
            raise ValueError("factor must be >= 1")
        ro, co = self.offset
        if not (0 <= ro < self.factor and 0 <= co < self.factor):
            raise ValueError("offset must lie in [0, factor)")

    @property
    def shape(self) -> tuple[int, int]:
        ro, co = self.offset
        f = self.factor
        return -(-(self.grid_rows + ro) // f), -(-(self.grid_cols + co) // f)

    def cells(self, R: int, C: int) -> np.ndarray:
        """Base-cell indices of block ``(R, C)``, ascending."""
        f = self.factor
        ro, co = self.offset
        r0, r1 = max(R * f - ro, 0), min((R + 1) * f - ro, self.grid_rows)
        c0, c1 = max(C * f - co, 0), min((C + 1) * f - co, self.grid_cols)
        rows = np.arange(r0, r1)
        cols = np.arange(c0, c1)
        return (rows[:, None] * self.grid_cols + cols[None, :]).ravel()

    @property
    def blocks(self) -> dict[tuple[int, int], np.ndarray]:
        nR, nC = self.shape
        return {(R, C): self.cells(R, C) for R in range(nR) for C in range(nC)}


def block_partition(cube: CountCube, factor: int, offset: tuple[int, int] = (0, 0)) -> BlockGrid:
    return BlockGrid(int(factor), cube.grid_rows, cube.grid_cols, tuple(offset))


@dataclass
class ScaleResult:
    """Column arrays for every block of one scale, in row-major block order.

    Metric arrays hold NaN where ``status`` is not ``OK``; use
    :meth:`records` or the CLI writers rather than reading NaN downstream.
    """

    factor: int
    scale_m: float
    grid: BlockGrid
    n_cells: np.ndarray
    cropland_pixels: np.ndarray
    total_pixels: np.ndarray
    alpha: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray
    richness: np.ndarray
    status: np.ndarray
    partial: np.ndarray
    pooled: np.ndarray | None = field(default=None, repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.grid.shape

    @property
    def n_blocks(self) -> int:
        return int(self.status.size)

    @property
    def block_rows(self) -> np.ndarray:
        return np.arange(self.n_blocks) // self.shape[1]

    @property
    def block_cols(self) -> np.ndarray:
        return np.arange(self.n_blocks) % self.shape[1]

    @property
    def retained(self) -> np.ndarray:
        return self.status == OK

    @property
    def cropland_fraction(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.cropland_pixels / self.total_pixels

    def records(self) -> Iterator[DiversityRecord]:
        frac = self.cropland_fraction
        nC = self.shape[1]
        for b in range(self.n_blocks):
            ok = self.status[b] == OK
            yield DiversityRecord(
                unit_id=f"r{b // nC}c{b % nC}",
                scale=self.scale_m,
                alpha=float(self.alpha[b]) if ok else None,
                gamma=float(self.gamma[b]) if ok else None,
                beta=float(self.beta[b]) if ok else None,
                richness=int(self.richness[b]),
                cropland_fraction=float(frac[b]) if self.total_pixels[b] else None,
                n_cells=int(self.n_cells[b]),
                cropland_pixels=int(self.cropland_pixels[b]),
                status=STATUS_NAMES[int(self.status[b])],
            )

    def block_of_cell(self) -> np.ndarray:
        """Block index of every base cell."""
        g = self.grid
        ro, co = g.offset
        r = (np.arange(g.grid_rows) + ro) // g.factor
        c = (np.arange(g.grid_cols) + co) // g.factor
        return (r[:, None] * self.shape[1] + c[None, :]).ravel()


def _padded_rows(arr: np.ndarray, grid: BlockGrid, R0: int, R1: int) -> np.ndarray:
    """Lattice rows of block rows ``[R0, R1)``, zero-padded to whole blocks."""
    f = grid.factor
    ro, co = grid.offset
    nC = grid.shape[1]
    out = np.zeros(((R1 - R0) * f, nC * f) + arr.shape[2:], dtype=arr.dtype)
    r0 = max(R0 * f - ro, 0)
    r1 = min(R1 * f - ro, grid.grid_rows)
    dst0 = r0 - (R0 * f - ro)
    out[dst0:dst0 + (r1 - r0), co:co + grid.grid_cols] = arr[r0:r1]
    return out


def _to_stack(padded: np.ndarray, f: int) -> np.ndarray:
    """``(nr*f, nC*f, ...)`` -> ``(nr*nC, f*f, ...)`` with row-major cells per block."""
    nr, nc = padded.shape[0] // f, padded.shape[1] // f
    tail = padded.shape[2:]
    x = padded.reshape((nr, f, nc, f) + tail)
    x = x.transpose((0, 2, 1, 3) + tuple(range(4, 4 + len(tail))))
    return x.reshape((nr * nc, f * f) + tail)


def sweep_factor(cube: CountCube, factor: int, min_cropland_fraction: float = 0.01,
                 offset: tuple[int, int] = (0, 0), keep_pooled: bool = False) -> ScaleResult:
    """Diversity of every block at one scale factor."""
    grid = block_partition(cube, factor, offset)
    f = grid.factor
    nR, nC = grid.shape
    U = nR * nC
    S = cube.n_classes
    lattice = cube.lattice()
    totals = cube.total_pixels.reshape(cube.grid_rows, cube.grid_cols)
    real = np.ones((cube.grid_rows, cube.grid_cols), dtype=np.int64)

    alpha_exp = np.empty(U)
    gamma_exp = np.empty(U)
    pooled = np.empty((U, S), dtype=np.int64)
    total = np.empty(U, dtype=np.int64)
    n_cells = np.empty(U, dtype=np.int64)

    step = max(1, _CHUNK_CELLS // max(1, nC * f * f))
    for R0 in range(0, nR, step):
        R1 = min(R0 + step, nR)
        b0, b1 = R0 * nC, R1 * nC
        stack = _to_stack(_padded_rows(lattice, grid, R0, R1), f)
        a, g = unit_exponents(stack)
        alpha_exp[b0:b1] = a
        gamma_exp[b0:b1] = g
        pooled[b0:b1] = stack.sum(axis=1)
        total[b0:b1] = _to_stack(_padded_rows(totals, grid, R0, R1), f).sum(axis=1)
        n_cells[b0:b1] = _to_stack(_padded_rows(real, grid, R0, R1), f).sum(axis=1)

    crop = pooled.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(total > 0, crop / np.where(total > 0, total, 1), 0.0)
    status = np.where(crop == 0, UNDEFINED, np.where(frac < min_cropland_fraction, FILTERED, OK))
    ok = status == OK
    alpha = np.where(ok, np.exp(alpha_exp), np.nan)
    gamma = np.where(ok, np.exp(gamma_exp), np.nan)
    with np.errstate(invalid="ignore"):
        beta = np.where(ok, gamma / alpha, np.nan)
    block_pixels = (f * cube.base_factor) ** 2
    return ScaleResult(
        factor=f,
        scale_m=f * cube.base_size,
        grid=grid,
        n_cells=n_cells,
        cropland_pixels=crop,
        total_pixels=total,
        alpha=alpha,
        gamma=gamma,
        beta=beta,
        richness=(pooled > 0).sum(axis=1),
        status=status.astype(np.int8),
        partial=total < block_pixels,
        pooled=pooled if keep_pooled else None,
    )


def scale_sweep(cube: CountCube, scales: ScaleSet | Sequence[int] = ScaleSet(),
                min_cropland_fraction: float = 0.01, *, offsets=None,
                keep_pooled: bool = False, threads: int = 1) -> list[ScaleResult]:
    """Sweep every scale; results come back in ascending factor order.

    ``offsets`` maps factor -> ``(row, col)`` block anchor offset.  Blocks
    below ``min_cropland_fraction`` cropland are kept with status
    ``FILTERED``.  ``threads`` only changes scheduling, never results.
    """
    if not isinstance(scales, ScaleSet):
        scales = ScaleSet(tuple(scales))
    if not 0 <= min_cropland_fraction < 1:
        raise ValueError("min_cropland_fraction must lie in [0, 1)")
    offsets = offsets or {}

    def run(f):
        return sweep_factor(cube, f, min_cropland_fraction, offsets.get(f, (0, 0)), keep_pooled)

    if threads == 1 or len(scales) == 1:
        return [run(f) for f in scales]
    with ThreadPoolExecutor(max_workers=threads or None) as pool:
        return list(pool.map(run, scales.factors))


def iter_records(results: Sequence[ScaleResult]) -> Iterator[DiversityRecord]:
    for res in results:
        yield from res.records()


def alignment_offsets(cube: CountCube, factors: Sequence[int], align_x: float,
                      align_y: float) -> dict[int, tuple[int, int]]:
    """Per-factor block offsets aligning block corners to a reference grid.

    The reference grid has corners at ``align_x + k * size`` and
    ``align_y + k * size`` for block edge ``size``; the raster's top-left
    corner must sit on the base-cell lattice of that grid.
    """
    base = cube.base_size
    dx = (cube.origin_x - align_x) / base
    dy = (align_y - cube.top_y) / base
    if abs(dx - round(dx)) > 1e-9 or abs(dy - round(dy)) > 1e-9:
        raise ValueError("raster corner is not on the reference base-cell lattice")
    dx, dy = int(round(dx)), int(round(dy))
    return {int(f): (dy % f, dx % f) for f in factors}
