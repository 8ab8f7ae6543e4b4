import math

import numpy as np
import pytest

from boustrodiff.discrete import ScoreParams, TransectField
from boustrodiff.errors import BadSideCount, InvalidParameter
from boustrodiff.experiments import (
    Axis,
    count_local_maxima,
    grid_vs_gd,
    parallel_map,
    parallelogram,
    parity_csv,
    parity_experiment,
    random_convex_polygon,
    random_sample,
    surface_sample,
    total_variation,
)
from boustrodiff.geometry import min_enclosing_circle, normalize, validate
from boustrodiff.optimize import OptimizerConfig


def test_random_polygons_validate():
    for seed in range(1000):
        poly = random_convex_polygon(seed, 7)
        assert len(poly.vertices) == 7
        validate(poly.vertices)


@pytest.mark.parametrize("n", range(3, 10))
def test_random_polygon_side_counts_and_normalization(n):
    for seed in range(20):
        poly = random_convex_polygon(seed, n)
        assert len(poly.vertices) == n
        unit = normalize(poly)
        c, r = min_enclosing_circle(np.array(unit.vertices))
        assert r == pytest.approx(0.5, abs=1e-9)
        assert np.allclose(c, 0, atol=1e-9)


def test_random_polygon_deterministic():
    assert random_convex_polygon(3, 6) == random_convex_polygon(3, 6)
    assert random_convex_polygon(3, 6) != random_convex_polygon(4, 6)
    assert random_sample(0, 5) == random_sample(0, 5)


@pytest.mark.parametrize("n", [0, 2, 10, 12])
def test_bad_side_count(n):
    with pytest.raises(BadSideCount):
        random_convex_polygon(0, n)


def test_parallel_map_ordered():
    assert parallel_map(lambda x: x * x, range(20), threads=4) == [x * x for x in range(20)]
    assert parallel_map(lambda x: x, [], threads=0) == []


def test_parity_small_and_thread_independent():
    kw = dict(seed=1, temps=(10, 1000), ppts=(50,), samples=8)
    rows = parity_experiment(**kw)
    assert [(r.temperature, r.ppt) for r in rows] == [(10.0, 50), (1000.0, 50)]
    for r in rows:
        assert 0 <= r.mean_abs_error <= 1
        assert r.samples == 8
    assert parity_csv(rows) == parity_csv(parity_experiment(threads=4, **kw))
    lines = parity_csv(rows).splitlines()
    assert lines[0] == "temperature,ppt,mean_abs_error,samples"
    assert len(lines) == 3


def test_parity_rejects_empty():
    with pytest.raises(InvalidParameter):
        parity_experiment(samples=0)


def test_surface_single_point(square):
    p = ScoreParams(temperature=100, ppt=100)
    grid = surface_sample(square, [Axis("theta", 0.3, 0.3, 1)], TransectField(0.1, 0.01), p)
    assert grid.values.shape == (1,)
    assert grid.fixed == {"x_offset": 0.01, "temperature": 100}
    from boustrodiff.diffable import soft_fitness

    assert grid.values[0] == soft_fitness(square, 0.3, 0.01, 0.1, p)


def test_surface_csv_layout(square):
    p = ScoreParams(temperature=100, ppt=50)
    grid = surface_sample(square, [Axis("theta", 0, 1, 3), Axis("temperature", 10, 20, 2)], TransectField(0.2), p)
    assert grid.values.shape == (3, 2)
    rows = grid.to_csv().splitlines()
    assert rows[0] == "theta,temperature,fitness"
    assert len(rows) == 7
    assert rows[2].startswith("0.0,20.0,")


def test_surface_axis_errors(square):
    p = ScoreParams(ppt=50)
    with pytest.raises(InvalidParameter):
        surface_sample(square, [], TransectField(0.2), p)
    with pytest.raises(InvalidParameter):
        surface_sample(square, [Axis("theta", 0, 1, 2)] * 2, TransectField(0.2), p)
    with pytest.raises(InvalidParameter):
        Axis("spacing", 0, 1, 2)
    with pytest.raises(InvalidParameter):
        Axis("temperature", 0, 10, 2)


def test_local_maxima_helpers():
    assert count_local_maxima([0, 1, 0, 2, 0]) == 2
    assert count_local_maxima([1, 0, 0, 1], circular=True) == 0
    assert count_local_maxima([2, 0, 1, 0], circular=True) == 2
    assert count_local_maxima([1, 1, 1]) == 0
    assert total_variation([0, 1, -1]) == 3


def test_surface_smoother_at_low_temperature():
    para = normalize(parallelogram())
    ax = [Axis("theta", 0, math.pi, 180, endpoint=False)]
    field = TransectField(0.1)
    low = surface_sample(para, ax, field, ScoreParams(temperature=10, ppt=200)).values
    high = surface_sample(para, ax, field, ScoreParams(temperature=200, ppt=200)).values
    assert total_variation(low) < total_variation(high)


def test_grid_vs_gd_from_grid_start():
    rep = grid_vs_gd(seed=3, n_polygons=1, cfg=OptimizerConfig(theta_steps=36, offset_steps=1, max_iters=20), gd_init="grid")
    assert rep.n_polygons == 1 and len(rep.rows) == 1
    assert rep.mean_gap <= 0
    assert rep.hybrid_not_worse == 1


def test_grid_vs_gd_thread_independent():
    kw = dict(seed=2, n_polygons=4, cfg=OptimizerConfig(theta_steps=20, offset_steps=1, max_iters=10), params=ScoreParams(temperature=100, ppt=50))
    a = grid_vs_gd(threads=1, **kw)
    b = grid_vs_gd(threads=3, **kw)
    assert a.to_json() == b.to_json()
    assert a.gd_wins == sum(r.gd_best > r.grid_best for r in a.rows)


def test_grid_vs_gd_rejects_bad_args():
    with pytest.raises(InvalidParameter):
        grid_vs_gd(n_polygons=0)
    with pytest.raises(InvalidParameter):
        grid_vs_gd(n_polygons=1, gd_init="lattice")
