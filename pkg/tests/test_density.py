import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

import weierlab as w
from weierlab import density as D
from weierlab.errors import DomainError
from weierlab.phases import Role, replicate_phases

I_ORACLE = float(special.beta(0.5, 0.25))


def test_bn_examples(p33):
    assert all(D.bn_coefficient(p33, n, 0.4, 0.4) == 0.0 for n in range(6))
    mpmath.mp.dps = 30
    oracle = float(2 * mpmath.mpf(3) ** mpmath.mpf("-0.3") * mpmath.sin(mpmath.pi / 6))
    assert D.bn_coefficient(p33, 1, 0.0, 1 / 18) == pytest.approx(oracle, rel=1e-12)
    assert oracle == pytest.approx(0.71922, abs=5e-6)


@settings(max_examples=50, deadline=None)
@given(x=st.floats(0, 1), y=st.floats(0, 1), n=st.integers(0, 25))
def test_bn_antisymmetric_and_bounded(x, y, n):
    p = w.make_params(3, 0.3)
    b1, b2 = D.bn_coefficient(p, n, x, y), D.bn_coefficient(p, n, y, x)
    assert b1 == pytest.approx(-b2, abs=1e-12)
    assert abs(b1) <= 2 * p.a ** n * (1 + 1e-12)


def test_component_accessors(p33):
    c = D.arcsine_component(p33, 2, 0.1, 0.12)
    assert c.bn == D.bn_coefficient(p33, 2, 0.1, 0.12)
    assert c.r1n == pytest.approx(math.fmod(math.pi * 9 * 0.22, 2 * math.pi), abs=1e-12)


def test_choose_k_examples(p33):
    assert D.choose_k(p33, 0.3, 0.31) == 3
    assert D.choose_k(p33, 0.0, 1 / 18) == 2
    with pytest.raises(DomainError):
        D.choose_k(p33, 0.0, 0.2)
    with pytest.raises(DomainError):
        D.choose_k(p33, 0.4, 0.4)


def test_choose_k_boundary_tie(p33):
    for k in range(2, 12):
        assert D.choose_k(p33, 0.0, 0.5 / 3 ** k) == k


@pytest.mark.parametrize("b,beta", [(3, 0.3), (2, 0.25), (4, 0.4), (2.5, 0.1)])
def test_bracket_and_coefficient_floor(b, beta):
    p = w.make_params(b, beta)
    r = np.random.default_rng(17)
    lim = 1 / (2 * b ** 2)
    for _ in range(300):
        x = r.uniform(0, 1 - lim)
        y = x + lim * 10 ** -r.uniform(0, 8)
        d = y - x
        k = D.choose_k(p, x, y)
        # integer enumeration oracle for the bracket
        assert 0.5 / b ** (k + 1) < d <= 0.5 / b ** k
        for n in (k - 2, k - 1, k):
            ang = abs(math.pi * b ** n * (y - x))
            assert math.pi / (2 * b ** 3) < ang <= math.pi / 2 * (1 + 1e-12)
            assert abs(D.bn_coefficient(p, n, x, y)) > D.coefficient_floor(p, d)


def test_arcsine_pdf():
    bn = 0.71922
    assert D.arcsine_pdf(bn, 0.0) == pytest.approx(1 / (math.pi * bn), rel=1e-14)
    assert D.arcsine_pdf(bn, 0.0) == pytest.approx(0.44257, abs=1e-5)
    assert D.arcsine_pdf(bn, bn) == 0.0 and D.arcsine_pdf(-bn, 3.0) == 0.0
    with pytest.raises(DomainError):
        D.arcsine_pdf(0.0, 0.1)


@settings(max_examples=20, deadline=None)
@given(bn=st.floats(1e-3, 2))
def test_arcsine_normalized(bn):
    total, _ = integrate.quad(lambda z: D.arcsine_pdf(bn, z), -bn, bn, limit=200)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_universal_I():
    oracle = math.sqrt(math.pi) * math.gamma(0.25) / math.gamma(0.75)
    assert oracle == pytest.approx(I_ORACLE, rel=1e-14)
    assert abs(D.universal_I() - I_ORACLE) < 1e-10
    assert D.universal_I() == pytest.approx(5.244116, abs=1e-6)


def test_universal_I_half_and_refinement():
    from weierlab.quadrature import tanh_sinh
    half, _ = tanh_sinh(lambda u, ua, bu: ((1 + u) * bu) ** -0.75, 0.0, 1.0, tol=1e-14)
    assert abs(2 * half - D.universal_I()) < 1e-10
    coarse = D.universal_I(1e-9)
    assert abs(coarse - D.universal_I()) < 1e-8


def test_l32_norm():
    assert D.arcsine_l32_norm(1.0) == pytest.approx(I_ORACLE ** (2 / 3) / math.pi, rel=1e-13)
    assert D.arcsine_l32_norm(1.0) == pytest.approx(0.9608, abs=1e-4)
    r = np.random.default_rng(3)
    for bn in r.uniform(1e-3, 2, 20):
        assert D.arcsine_l32_norm(-bn) == pytest.approx(D.arcsine_l32_norm(1.0) * bn ** (-1 / 3),
                                                        rel=1e-13)
        q = D.arcsine_l32_norm_quadrature(bn)
        assert q == pytest.approx(D.arcsine_l32_norm(bn), rel=1e-6)
    with pytest.raises(DomainError):
        D.arcsine_l32_norm(0.0)


def test_constant_chain_values(p33):
    c = D.constant_chain(p33, 2.2)
    assert c.C3 == c.C2 ** 3 and c.C1 == math.pi * c.C3 ** 2
    assert c.C0 * (c.s - 2) / 2 == pytest.approx(c.C1, rel=1e-15)
    mpmath.mp.dps = 30
    I = mpmath.beta(0.5, 0.25)
    beta = mpmath.mpf("0.3")
    C2 = I ** (mpmath.mpf(2) / 3) / mpmath.pi * (2 ** (1 + beta) * mpmath.sin(mpmath.pi / 54)) ** (
        -mpmath.mpf(1) / 3)
    assert c.C2 == pytest.approx(float(C2), rel=1e-12)
    assert (round(c.C2, 3), round(c.C3, 2)) == (1.837, 6.20)
    assert c.C1 == pytest.approx(1.21e2, rel=5e-3) and c.C0 == pytest.approx(1.21e3, rel=5e-3)
    assert c.c_holder == w.holder_constant(p33)
    assert c.C2_b_only > c.C2
    assert all(v > 0 and math.isfinite(v) for v in (c.I, c.C2, c.C3, c.C1, c.C0))


def test_constant_chain_blows_up_near_two(p33):
    c0 = [D.constant_chain(p33, s).C0 for s in (2.1, 2.05, 2.01)]
    assert c0[0] < c0[1] < c0[2]


@pytest.mark.parametrize("s", [2.0, 1.5, 2.4, 2.6])
def test_constant_chain_domain(p33, s):
    with pytest.raises(DomainError):
        D.constant_chain(p33, s)


def test_distance_sample_construction(p33):
    smp = D.sample_sq_distance(p33, 0.3, 0.31, 5000, 42)
    assert np.array_equal(smp.Xs, smp.X1s ** 2 + smp.X2s ** 2)
    assert np.all(smp.Xs >= 0)
    c = w.holder_constant(p33)
    assert np.all(smp.Xs <= (c * 0.01 ** 0.3 + 2e-6) ** 2)
    again = D.sample_sq_distance(p33, 0.3, 0.31, 5000, 42, workers=2)
    assert np.array_equal(smp.Xs, again.Xs)


def test_distance_sample_matches_direct_evaluation(p33):
    # replicate r is the series with phases from the (seed, r) streams
    smp = D.sample_sq_distance(p33, 0.3, 0.31, 3, 42, eps=1e-10)
    for r in range(3):
        th = replicate_phases(42, Role.THETA, [r], 80)[0]
        la = replicate_phases(42, Role.LAMBDA, [r], 80)[0]
        f = w.evaluate_at(p33, th, la, [0.3, 0.31], 1e-10)
        assert smp.Xs[r] == pytest.approx(np.sum((f[0] - f[1]) ** 2), abs=1e-9)


def test_distance_sample_domain(p33):
    with pytest.raises(DomainError):
        D.sample_sq_distance(p33, 0.3, 0.3, 10, 1)
    with pytest.raises(DomainError):
        D.sample_sq_distance(p33, 0.0, 0.2, 10, 1)


def test_single_term_is_arcsine(p33):
    assert D.arcsine_ks_check(p33, 2, 0.3, 0.31, 10 ** 4, 42)["pass"]


def test_density_check_passes_and_monotone(p33):
    chain = D.constant_chain(p33, 2.2)
    smp = D.sample_sq_distance(p33, 0.3, 0.31, 10 ** 5, 42)
    chk = D.density_sup_check(smp, chain)
    assert chk.passed
    big = D.ConstantChain(**{**chain.to_dict(), "C3": 10 * chain.C3, "C1": 10 * chain.C1})
    assert D.density_sup_check(smp, big).passed
    tiny = D.ConstantChain(**{**chain.to_dict(), "C3": 1e-3, "C1": 1e-3})
    assert not D.density_sup_check(smp, tiny).passed
    with pytest.raises(DomainError):
        D.density_sup_check(smp, chain, bandwidth=0.0)


def test_kde_sup_against_exact_arcsine():
    # on [-0.2, 0.2] the unit arcsine density peaks at the window edge
    z = np.sin(2 * math.pi * np.random.default_rng(0).uniform(size=10 ** 5))
    val = D._kde_sup(z, 0.03, -0.2, 0.2)
    assert val == pytest.approx(D.arcsine_pdf(1.0, 0.2), rel=0.05)


def test_expectation_check(p33):
    r = D.expectation_check(p33, 2.2, 0.3, 0.31, 10 ** 5, 42)
    assert r["pass"] and r["mc_mean"] > 0
    assert r["bound"] == pytest.approx(D.constant_chain(p33, 2.2).C0 * 0.01 ** (2 - 2.2 - 0.6),
                                       rel=1e-6)
    with pytest.raises(DomainError):
        D.expectation_check(p33, 2.0, 0.3, 0.31, 100, 1)


def test_kernel_ceiling_crossover(p33):
    # |x-y|^-s lies below the bound exactly when |x-y| >= C0^(-1/(2-2beta))
    for s in (2.1, 2.2, 2.3):
        c0 = D.constant_chain(p33, s).C0
        cross = c0 ** (-1 / (2 - 2 * p33.beta))
        for d in np.geomspace(1e-6, 1 / 18, 60):
            below = d ** -s <= c0 * d ** (2 - s - 2 * p33.beta)
            assert below == (d >= cross * (1 - 1e-12)) or abs(d / cross - 1) < 1e-9
