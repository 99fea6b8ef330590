"""Diversity over zone maps (administrative units) and per-zone means of grid products."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .diversity import DiversityRecord, diversity
from .ingest import CountCube, ZoneMap
from .multiscale import ScaleResult


@dataclass(frozen=True)
class ZoneScaleMean:
    zone: int
    scale_m: float
    n_blocks: int
    mean_alpha: float | None
    mean_gamma: float | None
    mean_beta: float | None


@dataclass(frozen=True)
class ZoneReport:
    """Zone-level diversity plus discard bookkeeping.

    ``n_cells`` counts retained (non-border) cells; ``discarded_cells`` the
    border cells touching the zone.
    """

    zone: int
    record: DiversityRecord
    n_cells: int
    discarded_cells: int
    means: dict[float, ZoneScaleMean] = field(default_factory=dict)

    @property
    def discarded_fraction(self) -> float:
        total = self.n_cells + self.discarded_cells
        return self.discarded_cells / total if total else 0.0


def zone_cells(zones: ZoneMap) -> dict[int, np.ndarray]:
    """Retained cell indices per zone label (border and outside cells dropped)."""
    a = zones.assignment
    inside = np.flatnonzero(a >= 0)
    labels = a[inside]
    order = np.argsort(labels, kind="stable")
    labels, inside = labels[order], inside[order]
    uniq, starts = np.unique(labels, return_index=True)
    bounds = list(starts[1:]) + [len(labels)]
    out = {int(z): inside[s:e] for z, s, e in zip(uniq, starts, bounds)}
    for z in zones.labels():
        out.setdefault(z, np.empty(0, dtype=np.int64))
    return out


def border_counts(zones: ZoneMap) -> Counter:
    counts: Counter = Counter()
    for labs in zones.border_labels.values():
        counts.update(labs)
    return counts


def zone_diversity(cube: CountCube, zones: ZoneMap,
                   min_cropland_fraction: float = 0.0) -> list[ZoneReport]:
    """Zone-level alpha/gamma/beta over each zone's non-border cells.

    Zones whose retained cells hold no cropland (including zones made only of
    border cells) get an ``undefined`` record.
    """
    if zones.assignment.shape != (cube.n_cells,):
        raise ValueError("zone map does not match the cube lattice")
    cells = zone_cells(zones)
    borders = border_counts(zones)
    reports = []
    for z in sorted(cells):
        idx = cells[z]
        if idx.size:
            rec = diversity(cube, idx, unit_id=str(z), scale=0.0,
                            min_cropland_fraction=min_cropland_fraction)
        else:
            rec = DiversityRecord(str(z), 0.0, None, None, None, 0, None, 0, 0, "undefined")
        reports.append(ZoneReport(z, rec, int(idx.size), int(borders.get(z, 0))))
    return reports


def assign_blocks(result: ScaleResult, zones: ZoneMap) -> np.ndarray:
    """Zone of each block by plurality of its labelled base cells; -1 if tied or empty."""
    block = result.block_of_cell()
    a = zones.assignment
    labelled = a >= 0
    out = np.full(result.n_blocks, -1, dtype=np.int64)
    if not labelled.any():
        return out
    b, z = block[labelled], a[labelled]
    key = b * (int(z.max()) + 1) + z
    uniq, n = np.unique(key, return_counts=True)
    kb, kz = uniq // (int(z.max()) + 1), uniq % (int(z.max()) + 1)
    # per block: best count and whether it is unique
    order = np.lexsort((-n, kb))
    kb, kz, n = kb[order], kz[order], n[order]
    first = np.r_[True, kb[1:] != kb[:-1]]
    starts = np.flatnonzero(first)
    best_n = n[starts]
    second = np.zeros_like(best_n)
    has_second = np.r_[starts[1:], len(kb)] - starts > 1
    second[has_second] = n[starts[has_second] + 1]
    winner = best_n > second
    out[kb[starts[winner]]] = kz[starts[winner]]
    return out


def zone_scale_means(results: Sequence[ScaleResult], zones: ZoneMap) -> list[ZoneScaleMean]:
    """Unweighted mean of retained block diversities per zone and scale.

    Sums use :func:`math.fsum`, so the means do not depend on record order.
    """
    labels = zones.labels()
    rows = []
    for res in sorted(results, key=lambda r: r.factor):
        owner = assign_blocks(res, zones)
        use = np.flatnonzero(res.retained & (owner >= 0))
        order = use[np.argsort(owner[use], kind="stable")]
        groups = dict(zip(*np.unique(owner[order], return_index=True)))
        bounds = sorted(groups.values()) + [len(order)]
        nxt = {s: e for s, e in zip(bounds, bounds[1:])}
        for z in labels:
            if z not in groups:
                rows.append(ZoneScaleMean(z, res.scale_m, 0, None, None, None))
                continue
            sel = order[groups[z]:nxt[groups[z]]]
            n = int(sel.size)
            rows.append(ZoneScaleMean(
                z, res.scale_m, n,
                math.fsum(res.alpha[sel].tolist()) / n,
                math.fsum(res.gamma[sel].tolist()) / n,
                math.fsum(res.beta[sel].tolist()) / n,
            ))
    return rows


def zone_reports(cube: CountCube, zones: ZoneMap, results: Sequence[ScaleResult] = (),
                 min_cropland_fraction: float = 0.0) -> list[ZoneReport]:
    """:func:`zone_diversity` with the per-scale means attached."""
    reports = zone_diversity(cube, zones, min_cropland_fraction)
    means: dict[int, dict[float, ZoneScaleMean]] = {}
    for m in zone_scale_means(results, zones):
        means.setdefault(m.zone, {})[m.scale_m] = m
    return [ZoneReport(r.zone, r.record, r.n_cells, r.discarded_cells, means.get(r.zone, {}))
            for r in reports]
