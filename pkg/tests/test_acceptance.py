"""Acceptance checks, one or more tests per numbered criterion.

Run ``pytest tests/test_acceptance.py -v``; the terminal summary prints one
PASS/FAIL line per criterion.
"""
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from cropdiv import (
    BORDER,
    OUTSIDE,
    CountCube,
    ZoneMap,
    alpha,
    diversity,
    gamma,
    read_raster,
    scale_sweep,
    tally,
    write_raster,
)
from cropdiv.analytics import quadrant, scale_profile
from cropdiv.cli import RunConfig, cmd_grid
from cropdiv.ingest import zone_map_from_labels
from cropdiv.multiscale import ScaleSet
from cropdiv.testkit import SyntheticSpec, generate, oracle_diversity, random_cube
from cropdiv.zonal import zone_diversity

TOL = 1e-12
SHAPE_SCALES = (1, 2, 5, 10, 20, 50)
LANDSCAPE = SyntheticSpec(shape=(1000, 1000), base_factor=4, n_classes=8,
                          generator="patchwork", seed=7, patch_size=(1, 50))


def criterion(n):
    return pytest.mark.criterion(n)


def _random_lattice(rng, max_side=12, max_classes=6):
    R, C = int(rng.integers(1, max_side + 1)), int(rng.integers(1, max_side + 1))
    S = int(rng.integers(1, max_classes + 1))
    counts = rng.integers(0, 1001, size=(R * C, S))
    counts[rng.random(counts.shape) < 0.4] = 0
    extra = rng.integers(0, 200, size=R * C)
    return CountCube.from_counts(counts, total_pixels=counts.sum(axis=1) + extra, grid_shape=(R, C))


@pytest.fixture(scope="module")
def property_runs():
    """Random lattices swept at several scales, shared by the property criteria."""
    rng = np.random.Generator(np.random.Philox(4242))
    runs = []
    for _ in range(300):
        cube = _random_lattice(rng)
        runs.append((cube, scale_sweep(cube, [1, 2, 3, 5], 0.0, keep_pooled=True)))
    return runs


@pytest.fixture(scope="module")
def landscape():
    t0 = time.perf_counter()
    raster = generate(LANDSCAPE)
    cube = tally(raster, LANDSCAPE.scheme(), LANDSCAPE.base_factor)
    results = scale_sweep(cube, SHAPE_SCALES, 0.01)
    elapsed = time.perf_counter() - t0
    return raster, cube, results, elapsed


# -- 1 -----------------------------------------------------------------------


@criterion(1)
def test_oracle_equivalence():
    rng = np.random.Generator(np.random.Philox(1))
    t0 = time.perf_counter()
    worst = 0.0
    n = 1200
    for _ in range(n):
        cube = random_cube(rng, max_cells=20, max_classes=6, max_count=1000)
        unit = range(cube.n_cells)
        a_o, g_o, _ = oracle_diversity(cube, unit)
        worst = max(worst, abs(alpha(cube, unit) - a_o), abs(gamma(cube, unit) - g_o))
    elapsed = time.perf_counter() - t0
    print(f"oracle: {n} cubes, max |diff| = {worst:.3g}, {elapsed:.2f} s")
    assert worst <= TOL
    assert elapsed < 10


# -- 2 -----------------------------------------------------------------------


@criterion(2)
def test_identities_on_property_runs(property_runs):
    for _, results in property_runs:
        for res in results:
            ok = res.retained
            assert (np.abs(res.beta[ok] - res.gamma[ok] / res.alpha[ok]) <= TOL).all()
            for rec in res.records():
                if rec.defined:
                    assert abs(rec.beta - rec.gamma / rec.alpha) <= TOL
        f1 = results[0]
        assert f1.factor == 1
        assert np.array_equal(f1.alpha[f1.retained], f1.gamma[f1.retained])


@criterion(2)
def test_identities_on_landscape(landscape):
    _, _, results, _ = landscape
    for res in results:
        ok = res.retained
        assert (np.abs(res.beta[ok] - res.gamma[ok] / res.alpha[ok]) <= TOL).all()
    f1 = results[0]
    assert np.array_equal(f1.alpha[f1.retained], f1.gamma[f1.retained])
    assert (f1.beta[f1.retained] == 1.0).all()


# -- 3 -----------------------------------------------------------------------


@criterion(3)
def test_partition_inequality(property_runs, landscape):
    runs = list(property_runs) + [(None, landscape[2])]
    for _, results in runs:
        for res in results:
            ok = res.retained
            assert (res.gamma[ok] >= res.alpha[ok] - TOL).all()
            assert (res.beta[ok] >= 1 - TOL).all()
    rng = np.random.Generator(np.random.Philox(3))
    for _ in range(1000):
        rec = diversity(cube := random_cube(rng), range(cube.n_cells))
        assert rec.gamma >= rec.alpha - TOL and rec.beta >= 1 - TOL


# -- 4 -----------------------------------------------------------------------


@criterion(4)
def test_bounds(property_runs, landscape):
    runs = list(property_runs) + [(landscape[1], landscape[2])]
    for cube, results in runs:
        S = cube.n_classes
        for res in results:
            ok = res.retained
            assert (res.alpha[ok] >= 1).all()
            rich = res.richness[ok]
            assert (res.gamma[ok] <= rich + TOL).all()
            assert (rich <= S).all()
    rng = np.random.Generator(np.random.Philox(4))
    for _ in range(1000):
        cube = random_cube(rng)
        rec = diversity(cube, range(cube.n_cells))
        assert 1 <= rec.alpha and rec.gamma <= rec.richness + TOL <= cube.n_classes + TOL


# -- 5 -----------------------------------------------------------------------


@criterion(5)
def test_class_permutation_bit_identical(property_runs):
    rng = np.random.Generator(np.random.Philox(5))
    for cube, results in property_runs[:100]:
        perm = rng.permutation(cube.n_classes)
        permuted = CountCube.from_counts(cube.counts[:, perm], total_pixels=cube.total_pixels,
                                         grid_shape=(cube.grid_rows, cube.grid_cols))
        for a, b in zip(results, scale_sweep(permuted, [1, 2, 3, 5], 0.0)):
            for name in ("alpha", "gamma", "beta", "richness", "status"):
                assert np.array_equal(getattr(a, name), getattr(b, name), equal_nan=True)


@criterion(5)
def test_count_scaling(property_runs):
    for cube, results in property_runs[:100]:
        for k in (2, 7, 100):
            scaled = CountCube.from_counts(cube.counts * k, total_pixels=cube.total_pixels * k,
                                           grid_shape=(cube.grid_rows, cube.grid_cols))
            for a, b in zip(results, scale_sweep(scaled, [1, 2, 3, 5], 0.0)):
                assert np.array_equal(a.status, b.status)
                ok = a.retained
                for name in ("alpha", "gamma", "beta"):
                    assert (np.abs(getattr(a, name)[ok] - getattr(b, name)[ok]) <= TOL).all()
                assert np.array_equal(a.richness, b.richness)


# -- 6 -----------------------------------------------------------------------


@criterion(6)
def test_checkerboard_exact():
    spec = SyntheticSpec(shape=(8, 8), base_factor=10, n_classes=4, generator="checkerboard")
    cube = tally(generate(spec), spec.scheme(), spec.base_factor)
    (res,) = scale_sweep(cube, [2], 0.0)
    assert (res.alpha == 1.0).all() and (res.gamma == 4.0).all() and (res.beta == 4.0).all()


@criterion(6)
def test_disjoint_monocultures_exact():
    cube = CountCube.from_counts([[50, 0], [0, 50]])
    rec = diversity(cube, [0, 1])
    assert (rec.alpha, rec.gamma, rec.beta) == (1.0, 2.0, 2.0)


@criterion(6)
def test_hand_case(hand_cube):
    rec = diversity(hand_cube, [0, 1])
    # independently recomputed: exp(-(0.5 ln .75 + ... )) at 30 digits
    exact = (1.83297284933147017, 1.88988157484230975, 1.03104722774895197)
    for got, ref, quoted in zip((rec.alpha, rec.gamma, rec.beta), exact,
                                (1.832975, 1.889882, 1.031045)):
        assert abs(got - ref) <= 1e-12
        assert abs(quoted - ref) <= 1e-5


# -- 7 -----------------------------------------------------------------------


@criterion(7)
def test_cross_scale_shape(landscape):
    _, _, results, elapsed = landscape
    mean_gamma = [float(r.gamma[r.retained].mean()) for r in results]
    mean_beta = {r.factor: float(r.beta[r.retained].mean()) for r in results}
    print("mean gamma by scale:", dict(zip(SHAPE_SCALES, np.round(mean_gamma, 4))))
    print("mean beta by scale:", {k: round(v, 4) for k, v in mean_beta.items()})
    print(f"generate + tally + sweep: {elapsed:.1f} s")
    assert all(b >= a for a, b in zip(mean_gamma, mean_gamma[1:]))
    assert mean_beta[50] > mean_beta[2]
    assert elapsed < 60


# -- 8 -----------------------------------------------------------------------


def _two_zone_labels(rows_px, cols_px, f):
    """Zone 1 left, zone 2 right; the boundary wiggles inside base-cell column 20."""
    r = np.arange(rows_px)[:, None]
    c = np.arange(cols_px)[None, :]
    edge = 20 * f + 1 + (r // 3) % (f - 1)
    labels = np.where(c < edge, 1, 2)
    labels[: 2 * f, :] = 0  # two rows of cells outside both zones
    return labels


@criterion(8)
def test_border_discard():
    f = 10
    spec = SyntheticSpec(shape=(30, 40), base_factor=f, n_classes=5, generator="patchwork",
                         seed=8, patch_size=(1, 6), cropland_fraction=0.8)
    raster = generate(spec)
    cube = tally(raster, spec.scheme(), f)
    labels = _two_zone_labels(*raster.values.shape, f)
    zones = zone_map_from_labels(labels, cube, "fine", outside=0)

    band = np.flatnonzero(zones.assignment == BORDER)
    assert band.size == 28 and set(band % 40) == {20}
    reports = {r.zone: r for r in zone_diversity(cube, zones)}

    # 1) border cells blanked in the input raster and marked outside
    blanked = np.array(raster.values)
    for c in band:
        R, C = divmod(int(c), 40)
        blanked[R * f:(R + 1) * f, C * f:(C + 1) * f] = spec.nodata
    cube_b = tally(type(raster)(blanked, cell_size=raster.cell_size, nodata=spec.nodata),
                   spec.scheme(), f)
    assign_b = np.array(zones.assignment)
    assign_b[band] = OUTSIDE
    reports_b = {r.zone: r for r in zone_diversity(cube_b, ZoneMap(assign_b))}

    # 2) border cells dropped from the cube altogether
    keep = np.flatnonzero(zones.assignment != BORDER)
    cube_d = CountCube.from_counts(cube.counts[keep], total_pixels=cube.total_pixels[keep])
    reports_d = {r.zone: r for r in zone_diversity(cube_d, ZoneMap(zones.assignment[keep]))}

    for z in (1, 2):
        rec = reports[z].record
        assert rec.defined
        for other in (reports_b[z].record, reports_d[z].record):
            assert (rec.alpha, rec.gamma, rec.beta, rec.richness) == (
                other.alpha, other.gamma, other.beta, other.richness)

    # zone 1 keeps columns 0..19, zone 2 columns 21..39, rows 2..29
    assert (reports[1].n_cells, reports[1].discarded_cells) == (20 * 28, 28)
    assert (reports[2].n_cells, reports[2].discarded_cells) == (19 * 28, 28)
    # exact: the correctly rounded quotient of the integer counts
    assert reports[1].discarded_fraction == float(Fraction(28, 588))
    assert reports[2].discarded_fraction == float(Fraction(28, 560)) == 0.05


# -- 9 -----------------------------------------------------------------------


@criterion(9)
def test_threads_byte_identical(landscape, tmp_path_factory):
    raster, _, _, _ = landscape
    root = tmp_path_factory.mktemp("determinism")
    path = root / "landscape.bin"
    write_raster(raster, path)
    classes = root / "classes.csv"
    classes.write_text("code,label\n" + "".join(
        f"{c},{l}\n" for c, l in LANDSCAPE.scheme().classes))
    outputs = {}
    for threads in (1, 8):
        cfg = RunConfig(command="grid", input=path, classes=classes,
                        base_factor=LANDSCAPE.base_factor, scales=ScaleSet(SHAPE_SCALES),
                        out=root / f"t{threads}", threads=threads)
        cfg.validate()
        cmd_grid(cfg, rasters=False)
        outputs[threads] = (cfg.out / "grid_diversity.csv").read_bytes()
    assert outputs[1] == outputs[8]
    assert outputs[1].count(b"\n") == 1 + sum(
        math.ceil(1000 / f) ** 2 for f in SHAPE_SCALES)


# -- 10 ----------------------------------------------------------------------


@criterion(10)
@pytest.mark.slow
def test_throughput(tmp_path_factory):
    spec = SyntheticSpec(shape=(100, 100), base_factor=100, n_classes=19,
                         generator="patchwork", seed=10, patch_size=(1, 20),
                         cropland_fraction=0.7)
    path = tmp_path_factory.mktemp("throughput") / "big.bin"
    raster = generate(spec)
    assert raster.values.size == 10**8
    write_raster(raster, path)
    del raster
    t0 = time.perf_counter()
    cube = tally(read_raster(path), spec.scheme(), 100)
    results = scale_sweep(cube, ScaleSet(), 0.01)
    elapsed = time.perf_counter() - t0
    print(f"ingest + sweep of 1e8 pixels: {elapsed:.1f} s")
    assert [r.factor for r in results] == [1, 2, 5, 10, 20, 50, 100]
    assert int(cube.total_pixels.sum()) == 10**8
    assert elapsed <= 120


# -- 11 ----------------------------------------------------------------------


@criterion(11)
def test_quadrants():
    assert quadrant(-0.3, 0.2) == "Q1"  # lower, less uniform
    assert quadrant(0.3, 0.2) == "Q2"   # higher, less uniform
    assert quadrant(0.3, -0.2) == "Q3"  # higher, more uniform
    assert quadrant(-0.3, -0.2) == "Q4"  # lower, more uniform
    ref = {1000.0: 2.85, 10000.0: 3.86, 100000.0: 4.27}
    p = scale_profile(ref, ref, "EU")
    assert p.delta_avg == 0.0 and p.delta_std == 0.0 and p.quadrant == "AXIS"
    flat_low = {k: 2.0 for k in ref}
    assert scale_profile(flat_low, ref).quadrant == "Q4"
    steep_high = {1000.0: 2.0, 10000.0: 5.0, 100000.0: 8.0}
    assert scale_profile(steep_high, ref).quadrant == "Q2"
