import numpy as np
import pytest

from cropdiv import CountCube, alpha, gamma, scale_sweep, tally
from cropdiv.testkit import SyntheticSpec, generate, oracle_diversity, random_cube


def test_checkerboard_aligned_blocks():
    spec = SyntheticSpec(shape=(6, 6), base_factor=5, n_classes=4, generator="checkerboard")
    raster = generate(spec)
    cube = tally(raster, spec.scheme(), spec.base_factor)
    r1, r2 = scale_sweep(cube, [1, 2], 0.0)
    assert (r1.alpha == 1.0).all() and (r1.gamma == 1.0).all()
    assert (r2.alpha == 1.0).all() and (r2.gamma == 4.0).all() and (r2.beta == 4.0).all()


def test_checkerboard_non_square_period():
    spec = SyntheticSpec(shape=(4, 6), base_factor=2, n_classes=6, generator="checkerboard")
    cube = tally(generate(spec), spec.scheme(), spec.base_factor)
    # S=6 tiles as 2 rows x 3 columns
    cells = [0, 1, 2, 6, 7, 8]
    assert alpha(cube, cells) == 1.0
    assert gamma(cube, cells) == pytest.approx(6.0, abs=1e-12)


def test_uniform_random_converges():
    spec = SyntheticSpec(shape=(3, 3), base_factor=100, n_classes=3,
                         generator="uniform-random", seed=42)
    cube = tally(generate(spec), spec.scheme(), spec.base_factor)
    for i in range(cube.n_cells):
        assert abs(gamma(cube, [i]) - 3.0) <= 0.05


def test_weights_and_cropland_fraction():
    spec = SyntheticSpec(shape=(2, 2), base_factor=100, n_classes=2, generator="uniform-random",
                         seed=1, weights=(3, 1), cropland_fraction=0.5)
    cube = tally(generate(spec), spec.scheme(), spec.base_factor)
    crop = cube.counts.sum()
    assert abs(crop / cube.total_pixels.sum() - 0.5) < 0.01
    assert abs(cube.counts[:, 0].sum() / crop - 0.75) < 0.01


@pytest.mark.parametrize("generator", ["uniform-random", "patchwork"])
def test_seed_determinism(generator):
    spec = SyntheticSpec(shape=(8, 5), base_factor=7, n_classes=5, generator=generator, seed=9)
    a, b = generate(spec), generate(spec)
    assert np.array_equal(a.values, b.values)
    other = generate(SyntheticSpec(shape=(8, 5), base_factor=7, n_classes=5,
                                   generator=generator, seed=10))
    assert not np.array_equal(a.values, other.values)


def test_uniform_rows_are_chunk_keyed():
    # the first chunk of rows does not depend on how many rows follow
    small = generate(SyntheticSpec(shape=(3, 4), base_factor=100, generator="uniform-random", seed=5))
    big = generate(SyntheticSpec(shape=(6, 4), base_factor=100, generator="uniform-random", seed=5))
    assert np.array_equal(small.values[:256], big.values[:256])


def test_patchwork_patch_sizes():
    spec = SyntheticSpec(shape=(40, 40), base_factor=4, n_classes=6, generator="patchwork",
                         seed=3, patch_size=(2, 5))
    v = generate(spec).values
    # horizontal runs of one value have length >= the minimum patch edge unless merged
    change = np.flatnonzero(np.diff(v[0].astype(int)) != 0)
    runs = np.diff(np.r_[-1, change, v.shape[1] - 1])
    assert runs[:-1].min() >= 8
    assert set(np.unique(v).tolist()) <= set(spec.scheme().codes)


@pytest.mark.parametrize("kwargs", [
    dict(generator="spiral"),
    dict(n_classes=0),
    dict(n_classes=70000),
    dict(weights=(1, 2)),
    dict(cropland_fraction=1.5),
    dict(patch_size=(5, 2)),
    dict(noncrop_code=211),
])
def test_infeasible_specs(kwargs):
    with pytest.raises(ValueError):
        generate(SyntheticSpec(**kwargs))


def test_oracle_examples(hand_cube):
    a, g, b = oracle_diversity(hand_cube, [0, 1])
    assert a == pytest.approx(1.83297284933147017, abs=1e-12)
    assert g == pytest.approx(1.88988157484230975, abs=1e-12)
    assert oracle_diversity(CountCube.from_counts([[9, 0]]), [0]) == (1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        oracle_diversity(CountCube.from_counts([[0, 0]]), [0])


def test_oracle_agrees_with_engine(rng):
    for _ in range(200):
        cube = random_cube(rng)
        unit = range(cube.n_cells)
        a, g, _ = oracle_diversity(cube, unit)
        assert abs(a - alpha(cube, unit)) <= 1e-12
        assert abs(g - gamma(cube, unit)) <= 1e-12


def test_random_cube_bounds(rng):
    for _ in range(50):
        cube = random_cube(rng)
        assert 1 <= cube.n_cells <= 20 and 1 <= cube.n_classes <= 6
        assert cube.counts.max() <= 1000 and cube.counts.sum() > 0
