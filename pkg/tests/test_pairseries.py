import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from supertube import pairseries as ps
from supertube.core import LatticeVector, PhysicalParams, lattice, lattice_array, ksq
from supertube.critical import flow_energy, min_metastable_energy
from supertube.errors import NotTransverse, TruncationDominates, ZeroDenominator
from supertube.potential import FourierTable, PotentialSpec, build_table, limit_table

from conftest import DEFAULT_V0, lattice_vectors

ZERO = LatticeVector(0, 0, 0)
K2 = LatticeVector(0, 1, 0)


def test_phi_on_sphere_is_half(params):
    assert ps.phi_limit(K2, K2, DEFAULT_V0, params) == (0.5, False)
    assert ps.phi_limit(K2, LatticeVector(0, 0, -1), DEFAULT_V0, params).phi == 0.5


def test_phi_plug_in():
    p = PhysicalParams()
    val = ps.phi_limit(np.zeros(3), np.array([math.sqrt(8), 0, 0]), 1.0, p)
    assert not val.complex_branch
    assert val.phi.real == pytest.approx((-3 + 2 * math.sqrt(2)) / 2, rel=1e-14)
    assert val.phi.real == pytest.approx(-0.08579, abs=1e-5)


@given(st.floats(1e-6, 2.0 - 1e-6))
def test_complex_branch_window(x):
    # 0 < hbar^2 (l^2 - k2^2)/2m < 2 V0 puts the discriminant below zero
    p = PhysicalParams()
    val = ps.phi_limit(np.zeros(3), np.array([math.sqrt(2 * x), 0, 0]), 1.0, p)
    assert val.complex_branch
    assert abs(val.phi) == pytest.approx(0.5, rel=1e-12)


@settings(max_examples=200)
@given(lattice_vectors(-3, 3, transverse=True), lattice_vectors(-12, 12), st.floats(0.05, 20.0))
def test_root_identity(k2, l, V0):
    p = PhysicalParams()
    phi, _ = ps.phi_limit(k2, l, V0, p)
    b = ps.b_limit(k2, l, V0, p)
    if ps._cmp(l, k2, p) != 0:
        assert abs(phi * phi + b * phi + 0.25) <= 1e-12 * max(1.0, abs(b))
    assert abs(phi) <= 0.5 + 1e-15


@given(lattice_vectors(-3, 3, transverse=True), lattice_vectors(-10, 10))
def test_phi_even(k2, l):
    p = PhysicalParams()
    assert ps.phi_limit(k2, l, 1.1, p) == ps.phi_limit(k2, -l, 1.1, p)
    assert ps.phi_limit(k2, l, 1.1, p) == ps.phi_limit(-k2, l, 1.1, p)


def test_phi_many_matches_scalar(params):
    ns = lattice_array(5, 2)
    phi, cplx = ps.phi_limit_many(K2, ns, DEFAULT_V0, params)
    for n, f, c in zip(ns, phi, cplx):
        ref = ps.phi_limit(K2, LatticeVector(*map(int, n)), DEFAULT_V0, params)
        assert f == pytest.approx(ref.phi, rel=1e-14, abs=1e-16)
        assert c == ref.complex_branch


def test_phi_decays():
    assert abs(ps.root(1e4, 1).phi) < 1e-4
    assert abs(ps.root(1e4, 1).phi) == pytest.approx(1 / (4e4), rel=1e-6)


def test_finite_phi_branch_point(params):
    table = build_table(PotentialSpec(), params, cutoff=4)
    assert ps.phi_finiteN(K2, K2, table).phi == 0.5
    assert ps.b_finite(K2, LatticeVector(0, 0, 1), limit_table(2.0, params)) == -1.0


def test_finite_phi_converges_to_limit():
    p = PhysicalParams(N=10**9)
    table = build_table(PotentialSpec(), p, cutoff=10, longitudinal_cutoff=0)
    worst = 0.0
    for l in lattice(8, 0):
        worst = max(worst, abs(ps.phi_finiteN(K2, l, table).phi - ps.phi_limit(K2, l, table.v0_limit, p).phi))
    assert worst < 1e-2


def test_finite_b_equals_limit_b_in_limit_table(params):
    table = limit_table(DEFAULT_V0, params)
    for l in lattice(4, 1):
        assert ps.b_finite(K2, l, table) == pytest.approx(ps.b_limit(K2, l, DEFAULT_V0, params), rel=1e-13, abs=1e-13)


def test_zero_denominator(params):
    # v_(l-k2) = V0 = 1 outside the stored patch, v_(l+k2) = -1
    table = FourierTable(params, 1.0, mode="finiteN", entries={LatticeVector(0, 2, 1): -1.0})
    with pytest.raises(ZeroDenominator) as err:
        ps.b_finite(K2, LatticeVector(0, 1, 1), table)
    assert err.value.l == LatticeVector(0, 1, 1)


def test_omega_limit_values():
    p = PhysicalParams()
    assert ps.omega(ZERO, ZERO, limit_table(1.5, p)) == 3.0
    k1 = np.array([0.6, 0, 0])
    k2 = np.array([0, 0.8, 0])
    assert ps.omega(k1, k2, limit_table(1.0, p)) == pytest.approx(3.0, rel=1e-15)


def test_omega_finite_vs_limit(params):
    table = build_table(PotentialSpec(), params, cutoff=4)
    lim = limit_table(table.v0_limit, params)
    gap = abs(ps.omega(ZERO, K2, table) - ps.omega(ZERO, K2, lim))
    assert gap <= 2 * table.max_deviation()


def test_leading_energy():
    p = PhysicalParams(N=1000)
    assert ps.leading_energy(ZERO, ZERO, p, 1.2) == pytest.approx(600.0)
    k1 = np.array([2 * math.pi * 0.6, 0, 0])
    k2 = np.array([0, 2 * math.pi * 0.8, 0])
    assert ps.leading_energy(k1, k2, p, 1.0) == pytest.approx(1000 * (2 * math.pi**2 + 0.5), rel=1e-14)
    assert ps.leading_energy(k1, k2, p, 1.0) == pytest.approx(20239.2, abs=0.05)


@given(st.integers(-30, 30))
def test_leading_energy_matches_flow_energy(n):
    p = PhysicalParams()
    k0 = LatticeVector(n, 0, 0)
    assert ps.leading_energy(k0, ZERO, p, 0.9) == flow_energy(k0, p, 0.9)


@pytest.mark.parametrize("k2", [K2, LatticeVector(0, 2, -1), ZERO])
def test_normalization_exact(default_table, k2):
    state = ps.build_state(LatticeVector(2, 0, 0), k2, default_table, cutoff=4)
    assert ps.normalization_check(state) == 0.5


def test_normalization_quadrature(params, default_table):
    state = ps.build_state(ZERO, K2, default_table, cutoff=8)
    assert abs(ps.normalization_quadrature(state, params) - 0.5) < 1e-6


def test_normalization_quadrature_with_flow(params, default_table):
    state = ps.build_state(LatticeVector(3, 0, 0), LatticeVector(0, 1, 1), default_table, cutoff=3)
    assert abs(ps.normalization_quadrature(state, params) - 0.5) < 1e-9


def test_state_invariants(default_table):
    state = ps.build_state(ZERO, K2, default_table, cutoff=5, longitudinal_cutoff=1)
    assert state.phi[K2] == 0.5
    assert all(state.phi[l] == state.phi[-l] for l in state.phi)
    assert state.coeff(LatticeVector(0, 40, 0)) == 0
    assert state.any_complex
    flipped = ps.build_state(ZERO, -K2, default_table, cutoff=5, longitudinal_cutoff=1)
    assert flipped.phi == state.phi


def test_residual_limit_mode(default_table):
    for k1 in (ZERO, LatticeVector(4, 0, 0), LatticeVector(-7, 0, 0)):
        res = ps.residual_7aa(ps.build_state(k1, K2, default_table, cutoff=8), default_table)
        assert res.interior <= 1e-10


def test_residual_independent_of_flow(params):
    table = build_table(PotentialSpec(), params, cutoff=14, longitudinal_cutoff=0)
    r = [
        ps.residual_7aa(ps.build_state(k1, K2, table, cutoff=6, phi_source="limit"), table).max
        for k1 in (ZERO, LatticeVector(5, 0, 0))
    ]
    assert r[0] == pytest.approx(r[1] * ps.omega(LatticeVector(5, 0, 0), K2, table) / ps.omega(ZERO, K2, table), rel=1e-9)


def test_residual_unit_weight_contradicts_omega(default_table):
    # a unit interaction weight is inconsistent with Omega already at l = k2
    state = ps.build_state(ZERO, K2, default_table, cutoff=4)
    assert ps.residual_7aa(state, default_table, weight=1.0).max > 1e-3


def test_finite_residual_decreases():
    r = []
    for N in (10**3, 10**6, 10**9):
        p = PhysicalParams(N=N)
        table = build_table(PotentialSpec(), p, cutoff=18, longitudinal_cutoff=0)
        r.append(ps.residual_7aa(ps.build_state(ZERO, K2, table, cutoff=8, phi_source="limit"), table).max)
    assert r[0] > r[1] > r[2]


def test_finite_phi_solves_finite_equations():
    p = PhysicalParams(N=1000)
    table = build_table(PotentialSpec(), p, cutoff=18, longitudinal_cutoff=0)
    state = ps.build_state(ZERO, K2, table, cutoff=8, phi_source="finiteN")
    assert ps.residual_7aa(state, table).max < 1e-9


def test_truncation_dominates(params, default_table):
    state = ps.build_state(ZERO, K2, default_table, cutoff=4)
    state.phi[LatticeVector(0, 4, 4)] += 1e-3
    with pytest.raises(TruncationDominates):
        ps.residual_7aa(state, default_table)


def test_standing_wave_family(params):
    state = ps.standing_wave_family(K2, params, DEFAULT_V0, cutoff=4)
    assert not state.flowing
    assert state.energy == pytest.approx(min_metastable_energy(params, DEFAULT_V0), rel=1e-15)
    assert ps.normalization_check(state) == 0.5
    uniform = ps.standing_wave_family(ZERO, params, DEFAULT_V0, cutoff=2)
    assert uniform.energy == pytest.approx(params.N * DEFAULT_V0 / 2)
    with pytest.raises(NotTransverse):
        ps.standing_wave_family(LatticeVector(1, 1, 0), params, DEFAULT_V0)


def test_pair_fields_symmetry(params, default_table):
    state = ps.build_state(LatticeVector(1, 0, 0), K2, default_table, cutoff=3)
    phi_plus, phi = ps.pair_fields(state, params)
    rng = np.random.default_rng(7)
    x, y = rng.uniform(0, 1, (2, 5, 3))
    np.testing.assert_allclose(phi(x, y), phi(y, x), atol=1e-15)
    np.testing.assert_allclose(phi_plus(x, y), phi_plus(y, x), atol=1e-15)
