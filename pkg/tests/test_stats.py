import math
from statistics import NormalDist

import numpy as np
import pytest

from phlab.core import AngleSpec, CatMap, ProductSystem, SystemPoint, orbit_chunks
from phlab.fixedpoint import SCALE
from phlab.lattice import FrequencyIndex
from phlab.stats import (Builtin, Character, EmpiricalMeasure, GridSampler, RandomSampler,
                         TrigPolynomial, basin_survey, birkhoff_average, boxes_per_axis,
                         center_exponent_series, classify_basin, classify_centers, constant,
                         empirical_measure, frequency_box, lyapunov_estimate,
                         rotation_weyl_closed_form, sandwich_check, transitivity_probe,
                         uniformity_deviation, weyl_sums)

from oracles import h_scalar

P0 = SystemPoint.of("0.1234", "0.5678", ["0.31"])


def fq(*v, j=0):
    return FrequencyIndex(v[0], v[1], tuple(v[2:]), j)


# ------------------------------------------------------------------ Birkhoff

def test_birkhoff_constant_is_exact():
    f = ProductSystem.default_f()
    assert birkhoff_average(f, P0, constant(0.1), 3) == 0.1
    assert birkhoff_average(f, P0, constant(0.7 - 0.2j), 1000) == 0.7 - 0.2j


def test_birkhoff_rotation_character_closed_form():
    f = ProductSystem.default_f()
    v = birkhoff_average(f, SystemPoint.of(0, 0, [0]), Character(fq(0, 0, 1)), 10)
    # geometric sum |sin(10 pi a)| / (10 |sin(pi a)|), mpmath at 40 digits
    assert abs(v) == pytest.approx(0.057586843430875994, abs=1e-12)
    a = f.rotations[0].raw / SCALE
    direct = sum(complex(math.cos(2 * math.pi * ((j * f.rotations[0].raw) % SCALE) / SCALE),
                         math.sin(2 * math.pi * ((j * f.rotations[0].raw) % SCALE) / SCALE))
                 for j in range(10)) / 10
    assert abs(v - direct) < 1e-14
    assert abs(v) == pytest.approx(abs(math.sin(10 * math.pi * a)) / (10 * abs(math.sin(math.pi * a))),
                                   abs=1e-12)


def test_birkhoff_hyperbolic_character_small():
    f = ProductSystem.default_f()
    assert abs(birkhoff_average(f, P0, Character(fq(1, 1, 0)), 10**6)) < 0.01


def test_birkhoff_matches_direct_scalar_sum():
    g = ProductSystem.default_g(ell=2)
    p = P0.with_z(0.3)
    obs = TrigPolynomial([(fq(1, 0, 0, j=1), 0.5), (fq(0, 1, 1), -0.25j)])
    vals = []
    for T, Z in orbit_chunks(g, p, 500):
        for row, z in zip(T, Z):
            x, y, w = (int(v) / SCALE for v in row)
            vals.append(0.5 * np.exp(2j * math.pi * (x + z)) - 0.25j * np.exp(2j * math.pi * (y + w)))
    assert abs(birkhoff_average(g, p, obs, 500) - sum(vals) / 500) < 1e-13


# ------------------------------------------------------------------ Weyl

def test_weyl_zero_box():
    t = weyl_sums(ProductSystem.default_f(), P0, (0, 0, 0), 100)
    assert len(t.freqs) == 1 and t.values[0] == 1.0


def test_weyl_f_box_and_closed_form():
    f = ProductSystem.default_f()
    t = weyl_sums(f, P0, (2, 2, 2), 10**5)
    assert len(t.freqs) == 125
    assert np.all(t.moduli <= 1.0)
    for fr, N, mod, val in t.rows():
        if fr.is_zero():
            assert val == 1.0
        elif fr.m == 0 and fr.n == 0:
            assert abs(mod - rotation_weyl_closed_form(f, fr.k, N)) <= 1e-12
        else:
            assert mod < 5 / math.sqrt(N)


def test_weyl_parallel_identical():
    g = ProductSystem.default_g(ell=2)
    a = weyl_sums(g, P0.with_z(0.1), (1, 1, 1, 1), 20000, workers=1)
    b = weyl_sums(g, P0.with_z(0.1), (1, 1, 1, 1), 20000, workers=3)
    assert a.freqs == b.freqs and np.array_equal(a.values, b.values)


def test_weyl_center_rows_tend_to_sink_value():
    g = ProductSystem.default_g(ell=2, epsilon=0.5)
    t = weyl_sums(g, P0.with_z(0.1), (1, 1, 1, 1), 10**5)
    # z_n -> 0.25, so pure center characters approach modulus 1
    assert t.row(fq(0, 0, 0, j=1)) > 0.999
    assert t.row(fq(1, 0, 0, j=1)) < 0.02


def test_frequency_box_counts():
    f2 = ProductSystem(CatMap(), (AngleSpec.golden(), AngleSpec.sqrt_prime(3)))
    assert len(frequency_box(f2, (1, 1, 1))) == 81
    assert len(frequency_box(ProductSystem.default_g(), (1, 1, 1, 2))) == 135


# ------------------------------------------------------------------ histograms

def test_uniformity_deviation_stratified_zero():
    e = EmpiricalMeasure((2, 2, 2), np.ones((2, 2, 2), dtype=np.int64), 8)
    assert uniformity_deviation(e) == 0.0


def test_empirical_measure_f():
    e = empirical_measure(ProductSystem.default_f(), P0, 8, 10**6)
    assert e.counts.sum() == 10**6
    u = 1 / 512
    # per-bin 3 sigma is exceeded by the max of 512 bins about half the time for
    # iid uniform data; bound the max at family-wise 3 sigma (Bonferroni) instead
    fam = NormalDist().inv_cdf(1 - (1 - NormalDist().cdf(3.0)) / 512)
    assert uniformity_deviation(e) < fam * math.sqrt(u * (1 - u) / 10**6)
    exp = 10**6 * u
    chi2 = float(((e.counts - exp) ** 2 / exp).sum())
    assert chi2 < 511 + 3 * math.sqrt(2 * 511)


def test_empirical_measure_g_sink_slice_matches_f():
    f = ProductSystem.default_f()
    g = ProductSystem.default_g(ell=2)
    a = empirical_measure(f, P0, 4, 10**4)
    b = empirical_measure(g, P0.with_z(0.75), 4, 10**4)
    assert np.array_equal(a.counts, b.counts)


# ------------------------------------------------------------------ Lyapunov

def test_lyapunov_on_sink_is_constant():
    g = ProductSystem.default_g(ell=2, epsilon=0.5)
    est = lyapunov_estimate(g, P0.with_z(0.25), 1000)
    assert est.center == math.log(0.5)
    assert est.rotations == (0.0,)


def test_lyapunov_generic_and_monotone_tail():
    g = ProductSystem.default_g(ell=1, epsilon=0.5)
    p = P0.with_z(0.013)
    est = lyapunov_estimate(g, p, 10**6)
    assert abs(est.center - math.log(0.5)) < 1e-3
    assert est.cat == pytest.approx((0.9624236501192069, -0.9624236501192069), abs=1e-15)
    ns = [10**3, 10**4, 10**5, 10**6]
    errs = [abs(v - math.log(0.5)) for v in center_exponent_series(g, p, ns)]
    assert all(b < a for a, b in zip(errs, errs[1:]))


# ------------------------------------------------------------------ basins

def test_classify_examples():
    g2 = ProductSystem.default_g(ell=2)
    assert classify_basin(g2, P0.with_z(0.3)) == 0
    assert g2.center.sink(0) == 0.25
    assert classify_basin(g2, P0.with_z(0.5)) is None
    assert classify_basin(g2, P0.with_z(0.0)) is None


def test_classify_iteration_count_direct():
    h = ProductSystem.default_g(ell=1, epsilon=0.5).center
    labels, iters = classify_centers(h, [0.01], radius=1e-6)
    z, it = 0.01, 0
    while abs(z - 0.5) >= 1e-6:
        z = h_scalar(z, 1, 0.5, 0.0)
        it += 1
    assert labels[0] == 0 and iters[0] == it == 27


def test_classify_ignores_other_coordinates():
    g = ProductSystem.default_g(ell=4)
    rng = np.random.default_rng(11)
    for z in rng.random(50):
        ref = classify_basin(g, SystemPoint.of(0, 0, [0], z))
        for _ in range(3):
            x, y, w = rng.random(3)
            assert classify_basin(g, SystemPoint.of(x, y, [w], z)) == ref


def test_survey_ell1():
    rep = basin_survey(ProductSystem.default_g(ell=1), RandomSampler(3), 2000)
    assert rep.counts == [2000] and rep.unresolved == 0 and rep.fractions == [1.0]


def test_survey_ell4_fractions():
    rep = basin_survey(ProductSystem.default_g(ell=4), RandomSampler(12), 10**4)
    sig = 3 * math.sqrt(0.25 * 0.75 / 10**4)
    assert all(abs(fr - 0.25) <= sig for fr in rep.fractions)
    assert rep.resolved_agree == rep.resolved == 10**4


def test_survey_phase_shifted_matches_closed_form():
    g = ProductSystem.default_g(ell=3, epsilon=0.7, phase=0.37)
    rep = basin_survey(g, RandomSampler(5), 5000)
    assert rep.resolved_agree == rep.resolved


def test_survey_deterministic_across_workers():
    g = ProductSystem.default_g(ell=3)
    a = basin_survey(g, RandomSampler(7), 9000, workers=1)
    b = basin_survey(g, RandomSampler(7), 9000, workers=4)
    assert a == b


def test_grid_survey_counts_sources():
    rep = basin_survey(ProductSystem.default_g(ell=3), GridSampler(), 300)
    assert rep.unresolved == 3
    assert sum(rep.counts) == 297


# ------------------------------------------------------------------ sandwich

def test_sandwich_on_slice_is_zero():
    g = ProductSystem.default_g(ell=1)
    rep = sandwich_check(g, Character(fq(1, 0, 0, j=1)), P0.with_z(0.5), 0.01, 10**4)
    assert all(r.D == 0.0 for r in rep.rows) and rep.holds


def test_sandwich_constant_is_zero():
    g = ProductSystem.default_g(ell=1)
    rep = sandwich_check(g, constant(2.0), P0.with_z(0.2), 0.01, 10**4)
    assert all(r.D == 0.0 for r in rep.rows) and rep.N_delta == 0


def test_sandwich_default_character():
    g = ProductSystem.default_g(ell=1)
    rep = sandwich_check(g, Character(fq(1, 0, 0)), P0.with_z(0.1), 0.01, 10**6)
    assert rep.holds and [r.n for r in rep.rows] == [10**3, 10**4, 10**5, 10**6]


def test_sandwich_center_character_decays():
    g = ProductSystem.default_g(ell=2, epsilon=0.5)
    rep = sandwich_check(g, Character(fq(1, 0, 0, j=1)), P0.with_z(0.1), 0.01, 10**5)
    assert rep.holds
    D = [r.D for r in rep.rows]
    assert D[0] > 0 and all(b < a for a, b in zip(D, D[1:]))
    assert rep.delta == pytest.approx(0.01 / (2 * math.pi * math.sqrt(2)))


def test_sandwich_builtin_flagged():
    g = ProductSystem.default_g(ell=2)
    obs = Builtin("tent_z")
    assert obs.lipschitz() == pytest.approx(2.0 * 1.05, rel=0.02)
    rep = sandwich_check(g, obs, P0.with_z(0.1), 0.05, 10**4)
    assert rep.lipschitz_estimated and rep.holds


def test_sandwich_needs_resolved_point():
    with pytest.raises(ValueError):
        sandwich_check(ProductSystem.default_g(ell=1), constant(1.0), P0.with_z(0.0), 0.01, 100)


# ------------------------------------------------------------------ transitivity

def test_transitivity_single_box():
    assert boxes_per_axis(1.0) == 1
    assert transitivity_probe(ProductSystem.default_f(), P0, 1.0, 1) == 1.0
    assert boxes_per_axis(0.1) == 10


def test_transitivity_full_and_rational_plateau():
    assert transitivity_probe(ProductSystem.default_f(), P0, 0.1, 10**5) == 1.0
    rat = ProductSystem.default_f(AngleSpec.explicit("1/4"))
    a = transitivity_probe(rat, P0, 0.1, 10**4)
    b = transitivity_probe(rat, P0, 0.1, 10**5)
    assert a == b == 0.4
