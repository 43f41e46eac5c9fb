import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cavityphoton import PhysicalCavity, RateSet
from cavityphoton.bounds import (
    DomainError, bound_report, cin_from_roundtrip, cooperativities, effective_cin, kappa_ex_opt,
    pf_lower, pf_lower_approx, prep_upper, ps_upper, ps_upper_norep, rates_from_physical,
)

SQRT101 = math.sqrt(101)
PF_100 = 2 / (1 + SQRT101)      # 0.18099751...


def rates_with_C(C, kappa_ex=3.0, kappa_in=1.0, r_u=0.0, gamma=1.0):
    kappa = kappa_ex + kappa_in
    return RateSet(g=math.sqrt(2 * C * kappa * gamma), kappa_in=kappa_in, kappa_ex=kappa_ex,
                   gamma=gamma, r_u=r_u, r_g=1 - r_u)


# -- cooperativities ---------------------------------------------------------

def test_cooperativity_single_channel():
    C, C_in = cooperativities(RateSet(g=2, kappa_in=1, kappa_ex=0, gamma=1))
    assert C == pytest.approx(2) and C_in == pytest.approx(2)


def test_cooperativity_vstirap_set(vstirap_rates):
    C, C_in = cooperativities(vstirap_rates)
    assert C_in == pytest.approx(50, rel=1e-14)
    assert C == pytest.approx(100 / (2 * (1 + SQRT101)), rel=1e-14)
    assert C == pytest.approx(4.5249, abs=1e-4)


def test_lossless_cavity_sentinel():
    rates = RateSet(g=2, kappa_in=0, kappa_ex=1, gamma=1)
    _, C_in = cooperativities(rates)
    assert math.isinf(C_in)
    assert pf_lower(C_in) == 0.0
    assert bound_report(rates).pf_lower == 0.0


# -- ps_upper / prep_upper ---------------------------------------------------

def test_ps_upper_examples():
    assert ps_upper(rates_with_C(2)) == pytest.approx(0.6, rel=1e-14)
    assert ps_upper(rates_with_C(2, r_u=0.5)) == pytest.approx(2 / 3, rel=1e-14)
    perfect = RateSet(g=1.3, kappa_in=0, kappa_ex=0.7, gamma=1, r_u=1, r_g=0, r_o=0)
    assert ps_upper(perfect) == pytest.approx(1.0, rel=1e-14)


def test_prep_upper_examples():
    assert prep_upper(rates_with_C(2)) == 0.0
    assert prep_upper(rates_with_C(2, r_u=0.5)) == pytest.approx(1 / 15, rel=1e-14)
    assert prep_upper(rates_with_C(1e12, r_u=0.5)) < 1e-12


# -- pf_lower / kappa_ex_opt -------------------------------------------------

def test_pf_lower_examples():
    assert pf_lower(4, 0) == pytest.approx(0.5, rel=1e-15)
    assert pf_lower(0, 0) == 1.0
    # 2 C_in / (1 - r_u) = 100
    assert pf_lower(40, 0.2) == pytest.approx(PF_100, rel=1e-14)
    assert pf_lower(40, 0.2) == pytest.approx(0.180998, abs=1e-6)
    assert pf_lower(3.0, 1.0) == 0.0


@pytest.mark.parametrize("r_u", [-0.1, 1.1])
def test_pf_lower_domain(r_u):
    with pytest.raises(DomainError):
        pf_lower(1.0, r_u)
    with pytest.raises(DomainError):
        kappa_ex_opt(1.0, 1.0, r_u)


def test_kappa_ex_opt_examples():
    assert kappa_ex_opt(1, 4, 0) == pytest.approx(3, rel=1e-15)
    assert kappa_ex_opt(1, 0) == 1.0
    assert kappa_ex_opt(1, 40, 0.2) == pytest.approx(SQRT101, rel=1e-14)
    with pytest.raises(DomainError):
        kappa_ex_opt(0.0, 4)


def _duality_grid():
    for C_in in (0.1, 1, 4, 50, 1e3):
        for r_u in (0.0, 0.3, 0.9):
            for factor in (0.1, 0.5, 0.9, 1.0, 1.1, 2, 10):
                yield C_in, r_u, factor


@pytest.mark.parametrize("C_in, r_u, factor", list(_duality_grid()))
def test_duality(C_in, r_u, factor):
    kappa_in, gamma = 1.0, 1.0
    g = math.sqrt(2 * C_in * kappa_in * gamma)
    k_opt = kappa_ex_opt(kappa_in, C_in, r_u)
    rates = RateSet(g=g, kappa_in=kappa_in, kappa_ex=factor * k_opt, gamma=gamma, r_u=r_u,
                    r_g=1 - r_u)
    bound = pf_lower(C_in, r_u)
    gap = 1 - ps_upper(rates) - bound
    if factor == 1.0:
        assert abs(gap) <= 1e-12
    else:
        assert gap > 1e-12


@given(C_in=st.floats(1e-3, 1e6), r_u=st.floats(0, 0.99), kappa_in=st.floats(1e-2, 1e2))
def test_optimal_coupling_identity(C_in, r_u, kappa_in):
    k_opt = kappa_ex_opt(kappa_in, C_in, r_u)
    assert pf_lower(C_in, r_u) == pytest.approx(2 * kappa_in / (kappa_in + k_opt), rel=1e-12)
    rates = RateSet(g=math.sqrt(2 * C_in * kappa_in), kappa_in=kappa_in, kappa_ex=k_opt, gamma=1.0,
                    r_u=r_u, r_g=1 - r_u)
    assert 1 - ps_upper(rates) == pytest.approx(pf_lower(C_in, r_u), rel=1e-9, abs=1e-12)


@given(C_in=st.floats(100, 1e9))
def test_large_cin_approximation(C_in):
    exact = pf_lower(C_in)
    assert abs(exact - pf_lower_approx(C_in)) / exact <= 0.15


def test_arithmetic_geometric_route():
    rng = np.random.default_rng(3)
    checked = 0
    for _ in range(2000):
        gamma = 1.0
        kappa = 10 ** rng.uniform(-1, 2)
        kappa_in = kappa * 10 ** rng.uniform(-4, -1.5)
        g = math.sqrt(2 * kappa * gamma * 10 ** rng.uniform(1.5, 5))
        C_in = g ** 2 / (2 * kappa_in * gamma)
        assert kappa_in / kappa + kappa * gamma / g ** 2 >= math.sqrt(2 / C_in) * (1 - 1e-12)
        checked += 1
    assert checked == 2000


@given(st.builds(RateSet, g=st.floats(1e-2, 1e2), kappa_in=st.floats(0, 1e2),
                 kappa_ex=st.floats(1e-2, 1e2), gamma=st.floats(1e-2, 1e2),
                 r_u=st.sampled_from([0.0, 0.25, 0.5, 0.99])).map(
    lambda r: r.replace(r_g=1 - r.r_u)))
def test_report_invariants(rates):
    rep = bound_report(rates)
    assert 0 <= rep.eta_esc <= 1
    assert 0 <= rep.ps_upper <= 1
    assert 0 <= rep.pf_lower <= 1
    assert 0 <= rep.prep_upper <= rep.ps_upper
    assert 1 - rep.ps_upper >= rep.pf_lower - 1e-12


# -- physical cavity ---------------------------------------------------------

def _cavity(**over):
    base = dict(mu_ge=2.5e-29, omega_ge=2 * math.pi * 3.84e14, L=1e-3, A_eff=math.pi * (20e-6) ** 2,
                alpha_loss=1e-4)
    base.update(over)
    return PhysicalCavity(**base)


def test_length_and_dipole_cancel():
    ref = rates_from_physical(_cavity()).C_in
    assert rates_from_physical(_cavity(L=2e-3)).C_in == pytest.approx(ref, rel=1e-12)
    assert rates_from_physical(_cavity(mu_ge=5e-29)).C_in == pytest.approx(ref, rel=1e-12)


def test_physical_matches_roundtrip_formula():
    rng = np.random.default_rng(5)
    for _ in range(100):
        r_g = rng.uniform(0.1, 1.0)
        r_u = rng.uniform(0, 1 - r_g)
        cav = _cavity(mu_ge=10 ** rng.uniform(-30, -28), omega_ge=10 ** rng.uniform(14, 16),
                      L=10 ** rng.uniform(-5, -1), A_eff=10 ** rng.uniform(-12, -8),
                      alpha_loss=10 ** rng.uniform(-6, -1), r_g=r_g, r_u=r_u, r_o=1 - r_g - r_u)
        phys = rates_from_physical(cav)
        assert 2 * phys.C_in == pytest.approx(r_g / (cav.alpha_loss * phys.r_A), rel=1e-12)
        assert phys.C_in == pytest.approx(cin_from_roundtrip(cav.alpha_loss, phys.r_A, r_g), rel=1e-12)


def test_lossless_physical_cavity():
    assert math.isinf(rates_from_physical(_cavity(alpha_loss=0.0)).C_in)


def test_roundtrip_examples():
    assert cin_from_roundtrip(0.01, 1, 1) == pytest.approx(50)
    assert pf_lower(cin_from_roundtrip(0.01, 1, 1)) == pytest.approx(PF_100, rel=1e-14)
    assert effective_cin(0.01, 1, 0.5, 0.5) == pytest.approx(100)
    assert pf_lower(cin_from_roundtrip(0.01, 1, 0.5, 0.5), 0.5) == pytest.approx(PF_100, rel=1e-14)


@given(alpha=st.floats(1e-6, 0.5), r_A=st.floats(0.1, 100), r_u=st.floats(0, 0.9),
       share=st.floats(0.01, 1))
def test_branching_loss_never_helps(alpha, r_A, r_u, share):
    r_g = (1 - r_u) * share
    lossy = pf_lower(cin_from_roundtrip(alpha, r_A, r_g, r_u), r_u)
    ideal = pf_lower(cin_from_roundtrip(alpha, r_A, 1.0))
    assert lossy >= ideal * (1 - 1e-12)


@pytest.mark.parametrize("args", [(0, 1, 1), (0.1, 0, 1), (0.1, 1, 0), (0.1, 1, 1.5), (0.1, 1, 0.5, 1.0)])
def test_roundtrip_domain(args):
    with pytest.raises(DomainError):
        cin_from_roundtrip(*args)


def test_no_repump_ceiling_ignores_branching():
    assert ps_upper_norep(rates_with_C(2, r_u=0.5)) == pytest.approx(0.6, rel=1e-14)
    assert ps_upper_norep(rates_with_C(2)) == ps_upper(rates_with_C(2))
