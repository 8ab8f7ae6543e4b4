"""Acceptance gate: one test per criterion, each at its stated tolerance.

Every test appends a PASS/FAIL line to ``ACCEPTANCE_LINES``; the lines are
printed together at the end of the pytest run.
"""

import math

import numpy as np
import pytest

from boustrodiff.cli import main
from boustrodiff.discrete import ScoreParams, TransectField, clip_transect, discrete_score
from boustrodiff.diffable import finite_difference_gradient, score_and_gradient, soft_fitness
from boustrodiff.experiments import (
    Axis,
    count_local_maxima,
    grid_vs_gd,
    parallelogram,
    parity_experiment,
    random_sample,
    surface_sample,
)
from boustrodiff.geometry import normalize, rotate, validate
from conftest import ACCEPTANCE_LINES, UNIT_SQUARE, random_polygons

pytestmark = pytest.mark.acceptance

TEMPS = (1, 10, 100, 1000, 10000)
PPTS = (100, 1000)


def record(name, ok, detail):
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def parity_table():
    rows = parity_experiment(seed=0, temps=TEMPS, ppts=PPTS, samples=100, threads=0)
    return {(r.temperature, r.ppt): r.mean_abs_error for r in rows}


# -- 1. parity trend ------------------------------------------------------------


@pytest.mark.parametrize("ppt", PPTS)
def test_c1_parity_error_decreases_with_temperature(parity_table, ppt):
    col = [parity_table[(float(T), ppt)] for T in TEMPS]
    ok = all(b < a for a, b in zip(col, col[1:]))
    record(f"C1 parity strictly decreasing in T (ppt={ppt})", ok, ", ".join(f"T={T}:{e:.6f}" for T, e in zip(TEMPS, col)))


@pytest.mark.parametrize("ppt", PPTS)
def test_c1_parity_error_at_t1(parity_table, ppt):
    err = parity_table[(1.0, ppt)]
    record(f"C1 parity error at T=1 in [0.4, 0.6] (ppt={ppt})", 0.4 <= err <= 0.6, f"{err:.6f}")


def test_c1_parity_error_at_best_cell(parity_table):
    err = parity_table[(10000.0, 1000)]
    record("C1 parity error at T=10000, ppt=1000 < 0.005", err < 0.005, f"{err:.6f}")


# -- 2. gradient correctness ---------------------------------------------------------


def _partial_ok(analytic, fd):
    if abs(fd) < 1e-7:
        return abs(analytic - fd) < 1e-7
    return abs(analytic - fd) / abs(fd) < 1e-4


def test_c2_gradient_matches_finite_differences():
    rng = np.random.default_rng(2)
    polys = random_polygons(200, seed=20)
    passed = 0
    for k, poly in enumerate(polys):
        T = 10 if k < 100 else 100
        p = ScoreParams(temperature=T)  # default quadrature, ppt=1000
        s = rng.uniform(0.05, 0.3)
        theta, off = rng.uniform(0, math.pi), rng.uniform(-s / 2, s / 2)
        g = score_and_gradient(poly, theta, off, TransectField(s), p).gradient
        fd = finite_difference_gradient(poly, theta, off, s, p, step=1e-5)
        passed += _partial_ok(g[0], fd[0]) and _partial_ok(g[1], fd[1])
    record("C2 gradient vs central differences >= 98% of 200", passed >= 196, f"{passed}/200 within tolerance")


# -- 3. oracle equivalence ---------------------------------------------------------


def _dense_length(vertices, x, n=100_000):
    # membership by vertex cross products, independent of the edge half-planes
    v = np.asarray(vertices)
    y = -0.5 + (np.arange(n) + 0.5) / n
    inside = np.ones(n, dtype=bool)
    for p, q in zip(v, np.roll(v, -1, axis=0)):
        inside &= (q[0] - p[0]) * (y - p[1]) - (q[1] - p[1]) * (x - p[0]) >= 0
    return inside.mean()


def test_c3_clip_matches_dense_sampling():
    rng = np.random.default_rng(3)
    worst = 0.0
    for poly in random_polygons(500, seed=30):
        theta = rng.uniform(0, 2 * math.pi)
        edges = rotate(poly.edges, theta)
        c, s = math.cos(theta), math.sin(theta)
        verts = np.array(poly.vertices) @ np.array([[c, s], [-s, c]])
        x = rng.uniform(-0.5, 0.5)
        worst = max(worst, abs(clip_transect(edges, x) - _dense_length(verts, x)))
    record("C3 clip vs dense sampling within 2e-4 (500 cases)", worst < 2e-4, f"max error {worst:.3g}")


def test_c3_soft_matches_discrete_at_high_resolution():
    p = ScoreParams(temperature=10000, ppt=10000)
    worst = 0.0
    for i in range(100):
        smp = random_sample(3, i)
        poly = normalize(smp.polygon)
        truth = discrete_score(rotate(poly.edges, smp.theta), TransectField(smp.spacing, smp.offset), p).fitness
        worst = max(worst, abs(truth - soft_fitness(poly, smp.theta, smp.offset, smp.spacing, p)))
    record("C3 soft (T=1e4, ppt=1e4) vs discrete within 2e-3 (100 cases)", worst < 2e-3, f"max error {worst:.3g}")


# -- 4. symmetry and periodicity --------------------------------------------------------


def test_c4_symmetries():
    rng = np.random.default_rng(4)
    p = ScoreParams(temperature=1000, ppt=200)
    full = mirror = 0.0
    for poly in random_polygons(50, seed=40):
        s = rng.uniform(0.05, 0.3)
        t, o = rng.uniform(0, math.pi), rng.uniform(-s / 2, s / 2)
        f = soft_fitness(poly, t, o, s, p)
        full = max(full, abs(soft_fitness(poly, t + 2 * math.pi, o, s, p) - f))
        mirror = max(mirror, abs(soft_fitness(poly, t + math.pi, -o, s, p) - f))
    sq = normalize(validate(UNIT_SQUARE))
    quarter = 0.0
    for t in np.linspace(0, math.pi, 13):
        for s, o in ((0.1, 0.0), (0.2, 0.03), (0.07, -0.02)):
            quarter = max(quarter, abs(soft_fitness(sq, t + math.pi / 2, o, s, p) - soft_fitness(sq, t, o, s, p)))
    d_off = max(abs(score_and_gradient(sq, 0.0, 0.0, TransectField(s), p).gradient[1]) for s in (0.1, 0.2, 0.15))
    ok = full < 1e-9 and mirror < 1e-6 and quarter < 1e-6 and d_off < 1e-6
    record(
        "C4 symmetry suite",
        ok,
        f"2pi {full:.2g} (<1e-9), mirror {mirror:.2g} (<1e-6), square quarter-turn {quarter:.2g} (<1e-6), "
        f"d/doffset {d_off:.2g} (<1e-6)",
    )


# -- 5. non-convexity -----------------------------------------------------------------


def test_c5_parallelogram_sweep_is_multimodal():
    para = normalize(parallelogram(aspect=2.0))
    axis = [Axis("theta", 0, math.pi, 180, endpoint=False)]
    field = TransectField(0.1)
    counts = {}
    for T in (10000, 10):
        vals = surface_sample(para, axis, field, ScoreParams(temperature=T, ppt=1000)).values
        # the slice at zero offset has period pi, so the sweep is circular
        counts[T] = count_local_maxima(vals, circular=True)
    ok = counts[10000] >= 3 and counts[10] < counts[10000]
    record("C5 parallelogram sweep: >=3 maxima at T=1e4, fewer at T=10", ok, f"T=10000: {counts[10000]}, T=10: {counts[10]}")


# -- 6. grid versus gradient ascent -------------------------------------------------------


def test_c6_grid_beats_random_start_gd():
    rep = grid_vs_gd(seed=0, n_polygons=100, threads=0)
    hybrid_ok = all(r.hybrid_best >= r.grid_best - 1e-9 for r in rep.rows)
    ok = rep.mean_gap > 0 and hybrid_ok and rep.gd_wins >= 1
    record(
        "C6 grid vs GD (100 polygons)",
        ok,
        f"mean gap {rep.mean_gap:.5f} (>0), hybrid>=grid on {rep.hybrid_not_worse}/100, GD wins {rep.gd_wins} (>=1)",
    )


# -- 7. determinism across thread counts ---------------------------------------------------


def test_c7_outputs_independent_of_threads(tmp_path):
    poly = tmp_path / "poly.json"
    assert main(["genpoly", "--sides", "6", "--seed", "5", "--out", str(poly)]) == 0
    commands = {
        "parity": ["parity", "--samples", "12", "--temps", "10,1000", "--ppts", "100", "--seed", "9"],
        "surface": ["surface", "--polygon", str(poly), "--theta-range", "0,180,30", "--temp-range", "10,1000,3", "--ppt", "100", "--seed", "9"],
        "gridvsgd": ["gridvsgd", "--samples", "6", "--grid-theta", "36", "--grid-offset", "2", "--iters", "20", "--ppt", "100", "--seed", "9"],
    }
    same = []
    for name, argv in commands.items():
        outs = []
        for threads in ("1", "4", "0"):
            out = tmp_path / f"{name}-{threads}.out"
            assert main(argv + ["--threads", threads, "--out", str(out)]) == 0
            outs.append(out.read_bytes())
        if all(o == outs[0] for o in outs):
            same.append(name)
    record("C7 byte-identical outputs for threads 1/4/auto", len(same) == len(commands), f"identical: {', '.join(same) or 'none'}")
