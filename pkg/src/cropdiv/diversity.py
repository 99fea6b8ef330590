"""Shannon effective numbers and the multiplicative alpha/gamma/beta partition.

For a unit made of base cells ``i`` with class counts ``c[i, j]``::

    alpha = exp(-sum_ij c_ij / N * ln(c_ij / n_i))
    gamma = exp(-sum_j  C_j  / N * ln(C_j  / N))
    beta  = gamma / alpha

where ``n_i`` is the cropland total of cell ``i``, ``C_j`` the pooled count of
class ``j`` and ``N`` the unit's cropland total.  Zero counts contribute
nothing (``0 ln 0 = 0``) and are never passed to the logarithm.

All arithmetic goes through :func:`unit_exponents`, which works on a stack of
units at once.  The multiscale sweep and the per-unit functions below share
it, so a one-cell unit gives ``alpha == gamma`` bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .ingest import CountCube


class UndefinedUnitError(ValueError):
    """The unit holds no cropland pixels, so no diversity is defined."""


@dataclass(frozen=True)
class DiversityRecord:
    """Diversity of one spatial unit.

    ``status`` is ``"ok"``, ``"filtered"`` (below the cropland threshold) or
    ``"undefined"`` (no cropland); metric fields are ``None`` unless ``ok``.
    """

    unit_id: str
    scale: float
    alpha: float | None
    gamma: float | None
    beta: float | None
    richness: int
    cropland_fraction: float | None
    n_cells: int
    cropland_pixels: int
    status: str = "ok"

    @property
    def defined(self) -> bool:
        return self.status == "ok"


@dataclass(frozen=True)
class ProportionVector:
    """Pooled class shares of a unit over cropland and over all land.

    ``cropland`` is ``None`` for cropland-free units; ``land`` is ``None``
    only when the unit has no pixels at all.
    """

    cropland: np.ndarray | None
    land: np.ndarray | None


def _xlogy_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """``(num/den) * ln(num/den)`` with zero where ``num == 0``."""
    mask = num > 0
    q = np.divide(num, den, out=np.zeros(num.shape), where=mask)
    return q * np.log(q, out=np.zeros(num.shape), where=mask)


def unit_exponents(stack: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Entropy exponents ``(ln alpha, ln gamma)`` for a stack of units.

    ``stack`` has shape ``(U, K, S)``: ``U`` units of ``K`` cells (zero-padded
    cells are allowed and contribute nothing).  Units without cropland get
    NaN.  Cell terms are summed over classes first (in ascending value
    order), then over cells in index order.
    """
    stack = np.asarray(stack)
    U, K, S = stack.shape
    x = stack.astype(np.float64)
    n_cell = stack.sum(axis=2)                      # (U, K) exact ints
    n_unit = n_cell.sum(axis=1)                     # (U,)
    pooled = stack.sum(axis=1)                      # (U, S)
    empty = n_unit == 0
    N = np.where(empty, 1, n_unit).astype(np.float64)

    mask = stack > 0
    w = np.divide(x, N[:, None, None], out=np.zeros(x.shape), where=mask)
    q_cell = np.divide(x, n_cell[:, :, None].astype(np.float64), out=np.zeros(x.shape), where=mask)
    ln_q = np.log(q_cell, out=np.zeros(x.shape), where=mask)
    # sorting the class terms makes the sum independent of class order
    cell_terms = np.sort(w * ln_q, axis=2).sum(axis=2)   # (U, K)
    alpha_exp = -cell_terms.sum(axis=1)

    gamma_exp = -np.sort(_xlogy_ratio(pooled.astype(np.float64), N[:, None]), axis=1).sum(axis=1)
    alpha_exp[empty] = np.nan
    gamma_exp[empty] = np.nan
    return alpha_exp, gamma_exp


def entropy_effective(counts) -> float:
    """``exp`` of the Shannon entropy of a count vector."""
    counts = np.asarray(counts, dtype=np.int64)
    if counts.ndim != 1:
        raise ValueError("expected a one-dimensional count vector")
    if (counts < 0).any():
        raise ValueError("negative counts")
    if counts.sum() == 0:
        raise UndefinedUnitError("no positive counts")
    _, g = unit_exponents(counts[None, None, :])
    return float(np.exp(g[0]))


def unit_indices(cube: CountCube, unit) -> np.ndarray:
    """Validated, sorted, de-duplicated cell indices of a unit selection."""
    idx = np.unique(np.asarray(list(unit) if not isinstance(unit, np.ndarray) else unit,
                               dtype=np.int64))
    if idx.size == 0:
        raise ValueError("empty unit selection")
    if idx[0] < 0 or idx[-1] >= cube.n_cells:
        raise IndexError("unit selection contains cell indices outside the cube")
    return idx


def _unit_stack(cube: CountCube, unit) -> np.ndarray:
    return cube.counts[unit_indices(cube, unit)]


def _exponents(cube: CountCube, unit) -> tuple[float, float]:
    a, g = unit_exponents(_unit_stack(cube, unit)[None])
    if np.isnan(a[0]):
        raise UndefinedUnitError("unit has no cropland pixels")
    return float(a[0]), float(g[0])


def alpha(cube: CountCube, unit) -> float:
    """Local diversity: exp of the cropland-weighted mean cell entropy."""
    return float(np.exp(_exponents(cube, unit)[0]))


def gamma(cube: CountCube, unit) -> float:
    """Regional diversity: effective number of the pooled counts."""
    return float(np.exp(_exponents(cube, unit)[1]))


def beta(alpha_value: float, gamma_value: float) -> float:
    if not alpha_value > 0:
        raise ValueError("alpha must be positive")
    return gamma_value / alpha_value


def richness(cube: CountCube, unit) -> int:
    """Number of classes with a non-zero pooled count."""
    pooled = _unit_stack(cube, unit).sum(axis=0)
    return int((pooled > 0).sum())


def proportions(cube: CountCube, unit) -> ProportionVector:
    idx = unit_indices(cube, unit)
    stack = cube.counts[idx]
    pooled = stack.sum(axis=0)
    crop = int(pooled.sum())
    land = int(cube.total_pixels[idx].sum())
    return ProportionVector(
        cropland=pooled / crop if crop else None,
        land=pooled / land if land else None,
    )


def diversity(cube: CountCube, unit, unit_id: str = "", scale: float = 0.0,
              min_cropland_fraction: float = 0.0) -> DiversityRecord:
    """Full record for one unit; never raises for cropland-free units."""
    idx = unit_indices(cube, unit)
    stack = cube.counts[idx]
    pooled = stack.sum(axis=0)
    crop = int(pooled.sum())
    total = int(cube.total_pixels[idx].sum())
    frac = crop / total if total else None
    rich = int((pooled > 0).sum())
    common = dict(unit_id=unit_id, scale=scale, richness=rich, cropland_fraction=frac,
                  n_cells=int(idx.size), cropland_pixels=crop)
    if crop == 0:
        return DiversityRecord(alpha=None, gamma=None, beta=None, status="undefined", **common)
    if frac < min_cropland_fraction:
        return DiversityRecord(alpha=None, gamma=None, beta=None, status="filtered", **common)
    a_exp, g_exp = unit_exponents(stack[None])
    a, g = float(np.exp(a_exp[0])), float(np.exp(g_exp[0]))
    return DiversityRecord(alpha=a, gamma=g, beta=g / a, **common)


def diversity_many(cube: CountCube, units: Iterable) -> list[tuple[float, float, float]]:
    """``(alpha, gamma, beta)`` for several units; raises on undefined units."""
    out = []
    for unit in units:
        a_exp, g_exp = _exponents(cube, unit)
        a, g = float(np.exp(a_exp)), float(np.exp(g_exp))
        out.append((a, g, g / a))
    return out
