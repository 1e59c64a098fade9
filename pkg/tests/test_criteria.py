import math

import numpy as np
import pytest

from ferrogas.config_space import MarkedConfiguration
from ferrogas.criteria import (choose_parameters, coupling_condition,
                               g_integral, g_star, wells_threshold)
from ferrogas.interaction import ModelSpec, PositionPotential, SpinMeasure
from ferrogas.percolation import P_SITE, h as h_block


def _spec(r=0.25, phi_star=3.0, **kw):
    return ModelSpec.default(r=r, phi_star=phi_star, **kw)


def test_wells_threshold_two_point():
    chi = SpinMeasure.two_point(1.0)
    assert wells_threshold(chi, tol=1e-10) == pytest.approx(1.0, abs=1e-9)
    assert wells_threshold(chi) < 1.0


def test_wells_threshold_uniform_closed_form():
    # chi([a sqrt 2, b]) >= chi([0, a]) for uniform(b):
    # (b - a sqrt 2)/2b >= a/2b  <=>  a <= b/(1 + sqrt 2) = b (sqrt 2 - 1)
    for b in (1.0, 2.5):
        got = wells_threshold(SpinMeasure.uniform(b), tol=1e-10)
        assert got == pytest.approx(b * (math.sqrt(2.0) - 1.0), abs=1e-8)


def test_wells_threshold_gaussian_root():
    # root of Phi(a) + Phi(a sqrt 2) = 3/2 for the standard normal cdf Phi
    got = wells_threshold(SpinMeasure.gaussian(1.0), tol=1e-10)

    def deficit(x):
        cdf = lambda t: 0.5 * (1 + math.erf(t / math.sqrt(2)))
        return (1 - cdf(x * math.sqrt(2))) - (cdf(x) - 0.5)

    lo, hi = 0.1, 2.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if deficit(mid) >= 0:
            lo = mid
        else:
            hi = mid
    assert got == pytest.approx(lo, abs=1e-6)
    assert got == pytest.approx(0.5626, abs=1e-3)


def test_coupling_condition():
    a, q = 1.0, 0.99
    threshold = 0.5 * a * a * math.log((1 + q) / (1 - q))
    ok, slack = coupling_condition(3.0, a, q)
    assert ok and slack == pytest.approx(3.0 - threshold)
    ok2, slack2 = coupling_condition(threshold, a, q)
    assert not ok2 and slack2 == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        coupling_condition(1.0, 1.0, 1.0)


def test_g_star_single_occupancy_closed_form():
    spec = _spec()
    res = g_star(spec, n_star=1)
    v_star = (spec.l - 2 * spec.r) ** 2
    assert res.v_star == pytest.approx(v_star)
    assert res.g_star == pytest.approx(0.5 * v_star)
    assert res.ok


def test_g_star_multi_occupancy_strong_repulsion_degenerates():
    # with the default repulsion strength the tail constant dominates and
    # no c > 0 makes the two-point bound positive
    res = g_star(_spec(), n_star=2)
    assert not res.ok and res.g_star == 0.0


def test_g_star_multi_occupancy_bruteforce_oracle():
    spec = _spec(c=1e-3)
    res = g_star(spec, n_star=2)
    assert res.ok and 0 < res.g_star < 0.5 * res.v_star

    def f(c):
        return 0.5 * math.exp(-c) * (res.v_star - res.C_delta / c)

    cs = np.linspace(1e-4, 80.0, 400000)
    brute = max(f(c) for c in cs)
    assert res.g_star == pytest.approx(brute, rel=1e-6)
    # delta halving keeps v_star positive
    assert res.v_star > 0


def test_g_star_core_requires_small_r():
    spec = ModelSpec.default(r=0.5, phi_star=3.0)   # l < 2r in d=2
    with pytest.raises(ValueError):
        g_star(spec, n_star=1)


def test_tail_constant_closed_form_oracle():
    # repeated from the interaction suite in certificate context:
    # d=2, eps=1, c=1, r=1, delta=1/2 -> C_delta = 2 pi * 1.125
    pot = PositionPotential(c=1.0, eps=1.0, r=1.0, d=2)
    assert pot.tail_integral(0.5) == pytest.approx(2 * math.pi * 1.125,
                                                   rel=1e-9)


def test_g_integral_empty_cell_equals_core_volume():
    spec = _spec()
    conf = MarkedConfiguration(2, spec.l)
    val, min_g = g_integral(conf, spec, nodes=32, with_min_g=True)
    assert val == pytest.approx((spec.l - 2 * spec.r) ** 2, rel=1e-12)
    assert min_g == pytest.approx(1.0)


def test_g_integral_far_points_do_not_matter_much():
    spec = _spec()
    conf = MarkedConfiguration(2, spec.l)
    conf.add([40.0, 0.0], 1.0)
    val = g_integral(conf, spec, nodes=32)
    assert val == pytest.approx((spec.l - 2 * spec.r) ** 2, rel=1e-12)


def test_g_integral_fields_only_increase_it():
    # points outside the repulsion range contribute G = cosh(field) >= 1
    spec = _spec()
    conf = MarkedConfiguration(2, spec.l)
    conf.add([spec.l, 0.0], 1.0)
    val = g_integral(conf, spec, nodes=32)
    assert val >= (spec.l - 2 * spec.r) ** 2


def test_g_integral_quadrature_converges():
    spec = _spec()
    rng = np.random.default_rng(2)
    conf = MarkedConfiguration(2, spec.l)
    for p in rng.uniform(-1.5, 1.5, size=(12, 2)):
        conf.add(p, float(spec.chi.sample(rng)))
    coarse = g_integral(conf, spec, nodes=48)
    fine = g_integral(conf, spec, nodes=192)
    assert coarse == pytest.approx(fine, rel=1e-3)


def test_choose_parameters_default_certificate():
    spec = _spec()
    rep = choose_parameters(spec, q=0.99)
    assert rep.passed, rep.as_dict()
    assert rep.a == pytest.approx(1.0, abs=1e-8)
    assert rep.n_star == 1
    assert rep.h_value == pytest.approx(h_block(1, 0.99))
    assert rep.h_value == pytest.approx(0.99 ** 2 * 1.0)  # rho(1,.99)=... see below
    assert rep.q0 == pytest.approx(0.5 * (P_SITE[2] / rep.h_value + 1.0))
    assert rep.t_star == pytest.approx(rep.g_star)
    assert rep.z_c == pytest.approx(1.0 / (rep.t_star * (1.0 - rep.q0)))
    # frozen reference values for the default model
    assert rep.g_star == pytest.approx(0.0736832617, rel=1e-6)
    assert rep.z_c == pytest.approx(68.6789, rel=1e-4)
    assert rep.theta == pytest.approx(P_SITE[2] / 2.0)
    assert rep.m_c == pytest.approx(rep.a * rep.theta ** 2 / 2.0)


def test_choose_parameters_n_star_is_minimal():
    spec = _spec()
    rep = choose_parameters(spec, q=0.8)
    assert h_block(rep.n_star, 0.8) > P_SITE[2]
    for n in range(1, rep.n_star):
        assert h_block(n, 0.8) <= P_SITE[2]


def test_choose_parameters_weak_coupling_fails():
    spec = _spec(phi_star=0.5)
    rep = choose_parameters(spec, q=0.99)
    assert not rep.inequalities["coupling"]["passed"]
    assert not rep.passed


def test_choose_parameters_rejects_d1():
    spec = ModelSpec.default(d=1, r=0.1, R=2.5)
    with pytest.raises(ValueError):
        choose_parameters(spec, q=0.9)
