"""Synthetic landscapes with known diversity structure and a brute-force oracle.

Random generators use numpy's Philox-4x64 counter-based bit generator keyed
through ``SeedSequence``, which yields identical streams on every platform.
Row-chunked generators derive one key per chunk of :data:`ROW_CHUNK` rows
from ``(seed, chunk index)``, so rows can be produced independently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ingest import EU_CROP_CLASSES, UINT16_MAX, CategoricalRaster, ClassScheme, CountCube

ROW_CHUNK = 256
GENERATORS = ("checkerboard", "patchwork", "uniform-random")


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a synthetic categorical raster.

    ``shape`` is the lattice in base cells; the raster is
    ``shape * base_factor`` pixels.  Patch sizes are edge lengths in base
    cells.  Non-cropland pixels get ``noncrop_code``.
    """

    shape: tuple[int, int] = (10, 10)
    base_factor: int = 10
    n_classes: int = 4
    generator: str = "checkerboard"
    seed: int = 0
    weights: tuple[float, ...] | None = None
    cropland_fraction: float = 1.0
    patch_size: tuple[int, int] = (1, 50)
    cell_size: float = 10.0
    noncrop_code: int = 1
    nodata: int = 0

    def scheme(self) -> ClassScheme:
        if self.n_classes <= len(EU_CROP_CLASSES):
            return ClassScheme(EU_CROP_CLASSES[: self.n_classes])
        return ClassScheme(tuple((1000 + j, f"class {j}") for j in range(self.n_classes)))

    def validate(self) -> None:
        if self.generator not in GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}")
        if self.n_classes < 1 or 1000 + self.n_classes - 1 > UINT16_MAX:
            raise ValueError(f"cannot encode {self.n_classes} classes in 16-bit codes")
        if min(self.shape) < 1 or self.base_factor < 1:
            raise ValueError("shape and base_factor must be positive")
        if not 0 <= self.cropland_fraction <= 1:
            raise ValueError("cropland_fraction must lie in [0, 1]")
        if self.weights is not None:
            if len(self.weights) != self.n_classes or min(self.weights) < 0 or sum(self.weights) <= 0:
                raise ValueError("weights must be non-negative, one per class, not all zero")
        lo, hi = self.patch_size
        if not 1 <= lo <= hi:
            raise ValueError("patch_size must satisfy 1 <= min <= max")
        codes = self.scheme().codes
        if self.noncrop_code in codes or self.nodata in codes:
            raise ValueError("noncrop_code and nodata must lie outside the class scheme")

    def probabilities(self) -> np.ndarray:
        w = np.ones(self.n_classes) if self.weights is None else np.asarray(self.weights, float)
        return w / w.sum()


def _rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *stream])))


def _checker_period(S: int) -> tuple[int, int]:
    kr = max(d for d in range(1, math.isqrt(S) + 1) if S % d == 0)
    return kr, S // kr


def generate(spec: SyntheticSpec) -> CategoricalRaster:
    """Build the raster described by ``spec``.

    ``checkerboard`` assigns base cell ``(R, C)`` the class
    ``(R % kr) * kc + (C % kc)`` where ``kr * kc = S`` (``kr`` the largest
    divisor of ``S`` not above its square root), so every aligned ``kr x kc``
    window of base cells has alpha 1 and gamma ``S``.
    """
    spec.validate()
    f = spec.base_factor
    H, W = spec.shape[0] * f, spec.shape[1] * f
    codes = np.asarray(spec.scheme().codes, dtype=np.uint16)
    S = spec.n_classes

    if spec.generator == "checkerboard":
        kr, kc = _checker_period(S)
        R = np.arange(H) // f
        C = np.arange(W) // f
        idx = (R[:, None] % kr) * kc + (C[None, :] % kc)
        values = codes[idx]
    elif spec.generator == "uniform-random":
        values = np.empty((H, W), dtype=np.uint16)
        p = spec.probabilities()
        lut = np.append(codes, np.uint16(spec.noncrop_code))
        for k, r0 in enumerate(range(0, H, ROW_CHUNK)):
            r1 = min(r0 + ROW_CHUNK, H)
            rng = _rng(spec.seed, k)
            cls = rng.choice(S, size=(r1 - r0, W), p=p)
            if spec.cropland_fraction < 1:
                cls[rng.random((r1 - r0, W)) >= spec.cropland_fraction] = S
            values[r0:r1] = lut[cls]
    else:
        values = _patchwork(spec, H, W, codes)

    return CategoricalRaster(values, cell_size=spec.cell_size, nodata=spec.nodata)


def _breaks(rng: np.random.Generator, length: int, lo: int, hi: int) -> np.ndarray:
    """Random segment lengths in ``[lo, hi]`` covering ``length``."""
    n = length // lo + 1
    sizes = rng.integers(lo, hi + 1, size=n)
    ends = np.cumsum(sizes)
    k = int(np.searchsorted(ends, length)) + 1
    sizes = sizes[:k]
    sizes[-1] -= int(sizes.sum()) - length
    return sizes


def _patchwork(spec: SyntheticSpec, H: int, W: int, codes: np.ndarray) -> np.ndarray:
    """Strips of random height, each cut into patches of random width."""
    f = spec.base_factor
    lo, hi = spec.patch_size[0] * f, spec.patch_size[1] * f
    rng = _rng(spec.seed)
    p = spec.probabilities()
    lut = np.append(codes, np.uint16(spec.noncrop_code))
    values = np.empty((H, W), dtype=np.uint16)
    r = 0
    for h in _breaks(rng, H, lo, hi):
        widths = _breaks(rng, W, lo, hi)
        cls = rng.choice(spec.n_classes, size=widths.size, p=p)
        if spec.cropland_fraction < 1:
            cls[rng.random(widths.size) >= spec.cropland_fraction] = spec.n_classes
        values[r:r + h] = np.repeat(lut[cls], widths)[None, :]
        r += h
    return values


def oracle_diversity(cube: CountCube, unit) -> tuple[float, float, float]:
    """Reference alpha, gamma, beta by explicit weights and proportions.

    Plain Python loops over the cell weights ``w_i = n_i / N`` and in-cell
    proportions ``p_ij = c_ij / n_i``::

        alpha = exp(-sum_i w_i sum_j p_ij ln p_ij)
        gamma = exp(-sum_j P_j ln P_j),  P_j = sum_i w_i p_ij

    Meant for small units only.
    """
    cells = sorted(set(int(i) for i in unit))
    if not cells:
        raise ValueError("empty unit selection")
    if len(cells) > 1000:
        raise ValueError("oracle is limited to units of at most 1000 cells")
    rows = [[int(v) for v in cube.counts[i]] for i in cells]
    S = len(rows[0])
    cell_totals = [sum(r) for r in rows]
    grand = sum(cell_totals)
    if grand == 0:
        raise ValueError("unit has no cropland pixels")

    weights = [t / grand for t in cell_totals]
    props = [[(c / t if t else 0.0) for c in r] for r, t in zip(rows, cell_totals)]

    h_alpha = 0.0
    for w, p_row in zip(weights, props):
        if w == 0:
            continue
        inner = 0.0
        for p in p_row:
            if p > 0:
                inner += p * math.log(p)
        h_alpha -= w * inner

    h_gamma = 0.0
    for j in range(S):
        pj = 0.0
        for w, p_row in zip(weights, props):
            pj += w * p_row[j]
        if pj > 0:
            h_gamma -= pj * math.log(pj)

    a, g = math.exp(h_alpha), math.exp(h_gamma)
    return a, g, g / a


def random_cube(rng: np.random.Generator, max_cells: int = 20, max_classes: int = 6,
                max_count: int = 1000, zero_prob: float = 0.3) -> CountCube:
    """Random small cube with at least one cropland pixel (property tests)."""
    M = int(rng.integers(1, max_cells + 1))
    S = int(rng.integers(1, max_classes + 1))
    counts = rng.integers(0, max_count + 1, size=(M, S))
    counts[rng.random((M, S)) < zero_prob] = 0
    if counts.sum() == 0:
        counts[rng.integers(M), rng.integers(S)] = int(rng.integers(1, max_count + 1))
    return CountCube.from_counts(counts)
