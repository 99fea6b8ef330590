"""Cross-scale summaries: gamma scale profiles, quadrant typology, ECDFs, covariate joins."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

QUADRANTS = ("Q1", "Q2", "Q3", "Q4", "AXIS")


@dataclass(frozen=True)
class ScaleProfile:
    """Gamma of one region across scales, compared with a reference region.

    ``std_gamma`` is the population standard deviation over the scale set.
    """

    region: str
    gamma: dict[float, float]
    avg_gamma: float
    std_gamma: float
    delta_avg: float
    delta_std: float
    quadrant: str


def quadrant(delta_avg: float, delta_std: float) -> str:
    """Q1: lower & less uniform, Q2: higher & less uniform,
    Q3: higher & more uniform, Q4: lower & more uniform; AXIS on a zero delta."""
    if delta_avg == 0 or delta_std == 0:
        return "AXIS"
    if delta_std > 0:
        return "Q2" if delta_avg > 0 else "Q1"
    return "Q3" if delta_avg > 0 else "Q4"


def _avg_std(values: Mapping[float, float]) -> tuple[float, float]:
    v = np.array([values[k] for k in sorted(values)], dtype=np.float64)
    return float(v.mean()), float(v.std())


def scale_profile(per_scale_gamma: Mapping[float, float], reference: Mapping[float, float],
                  region: str = "") -> ScaleProfile:
    if set(per_scale_gamma) != set(reference):
        raise ValueError(
            f"scale sets differ: {sorted(per_scale_gamma)} vs {sorted(reference)}"
        )
    if len(per_scale_gamma) < 2:
        raise ValueError("a scale profile needs at least two scales")
    avg, std = _avg_std(per_scale_gamma)
    ref_avg, ref_std = _avg_std(reference)
    d_avg, d_std = avg - ref_avg, std - ref_std
    return ScaleProfile(region, dict(per_scale_gamma), avg, std, d_avg, d_std,
                        quadrant(d_avg, d_std))


@dataclass(frozen=True)
class EcdfTable:
    """Step ECDF: distinct sorted values and ``P(X <= value)``."""

    metric: str
    scale_m: float
    values: np.ndarray
    cum_prob: np.ndarray
    n: int

    def cdf(self, x: float) -> float:
        i = np.searchsorted(self.values, x, side="right")
        return 0.0 if i == 0 else float(self.cum_prob[i - 1])

    def quantile(self, p: float) -> float:
        """Lowest value whose cumulative probability reaches ``p``."""
        if not 0 <= p <= 1:
            raise ValueError("p must lie in [0, 1]")
        i = int(np.searchsorted(self.cum_prob, p, side="left"))
        return float(self.values[min(i, len(self.values) - 1)])


def ecdf(values, metric: str = "", scale_m: float = 0.0) -> EcdfTable:
    x = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if x.size == 0:
        raise ValueError("ECDF of an empty sample")
    if np.isnan(x).any():
        raise ValueError("ECDF sample contains undefined values")
    n = x.size
    uniq, last = np.unique(x, return_counts=True)
    # counts are exact integers; one division per step
    cum = np.cumsum(last) / n
    return EcdfTable(metric, scale_m, uniq, cum, n)


@dataclass(frozen=True)
class ScatterRow:
    region: str
    covariate: float
    alpha: float | None
    gamma: float | None
    beta: float | None


def read_covariates(path) -> dict[str, float]:
    """``region,value`` CSV; duplicate regions are an error."""
    out: dict[str, float] = {}
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or [h.strip().lower() for h in reader.fieldnames[:2]] != ["region", "value"]:
            raise ValueError(f"{path}: expected header 'region,value'")
        for lineno, row in enumerate(reader, start=2):
            region = row["region"].strip()
            if region in out:
                raise ValueError(f"{path}: duplicate region {region!r} on line {lineno}")
            try:
                out[region] = float(row["value"])
            except (TypeError, ValueError):
                raise ValueError(f"{path}: bad value on line {lineno}") from None
    return out


def covariate_join(records, covariates: Mapping[str, float]):
    """Pair region-level diversity with a covariate.

    ``records`` is an iterable of objects with ``unit_id``, ``alpha``,
    ``gamma`` and ``beta``.  Returns ``(rows, unmatched)`` where ``unmatched``
    lists region ids present in only one input.  No fitting is done.
    """
    seen = set()
    rows = []
    for rec in records:
        rid = str(rec.unit_id)
        seen.add(rid)
        if rid in covariates:
            rows.append(ScatterRow(rid, covariates[rid], rec.alpha, rec.gamma, rec.beta))
    rows.sort(key=lambda r: r.region)
    unmatched = sorted((seen - set(covariates)) | (set(covariates) - seen))
    return rows, unmatched


def domain_means(results) -> dict[float, float]:
    """Mean retained gamma per scale over the whole domain (reference profile)."""
    out = {}
    for res in results:
        g = res.gamma[res.retained]
        if g.size:
            out[res.scale_m] = math.fsum(g.tolist()) / g.size
    return out
