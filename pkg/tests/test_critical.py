import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from supertube import critical as crit
from supertube.core import LatticeVector, PhysicalParams, wavevector
from supertube.errors import EmptyScan, NotLongitudinal
from supertube.pairseries import leading_energy
from supertube.potential import limit_table

from conftest import DEFAULT_V0

ZERO = LatticeVector(0, 0, 0)


def brute_force(p, v_max, cutoff):
    # (n0^2 - m1^2) / L1^2 == s / L2^2  <=>  (n0^2 - m1^2) * L2^2 == s * L1^2, exactly
    L1sq, L2sq = Fraction(p.L1) ** 2, Fraction(p.L2) ** 2
    den = L1sq.denominator * L2sq.denominator
    w1, w2 = int(L2sq * den), int(L1sq * den)
    nmax = int(v_max * p.m * p.L1 / (2 * math.pi * p.hbar) * (1 + 1e-12))
    out = set()
    for n0 in range(-nmax, nmax + 1):
        for m1 in range(-nmax, nmax + 1):
            for n2 in range(-cutoff, cutoff + 1):
                for n3 in range(-cutoff, cutoff + 1):
                    if n0 == 0 or (n2, n3) == (0, 0):
                        continue
                    if (n0 * n0 - m1 * m1) * w1 == (n2 * n2 + n3 * n3) * w2:
                        out.add(((n0, 0, 0), (m1, 0, 0), (0, n2, n3)))
    return out


def test_flow_energy_values():
    p = PhysicalParams(N=100, L1=1.0)
    assert crit.flow_energy(ZERO, p, 0.6) == pytest.approx(30.0)
    assert crit.flow_energy(LatticeVector(1, 0, 0), p, 0.6) == pytest.approx(100 * (2 * math.pi**2 + 0.3), rel=1e-14)


def test_flow_energy_requires_longitudinal(params):
    with pytest.raises(NotLongitudinal):
        crit.flow_energy(LatticeVector(1, 1, 0), params, 1.0)
    with pytest.raises(NotLongitudinal):
        crit.flow_energy([0.0, 0.5, 0.0], params, 1.0)


def test_min_metastable_energy():
    p = PhysicalParams(N=10, L2=1.0)
    assert crit.min_metastable_energy(p, 1.0) == pytest.approx(10 * (2 * math.pi**2 + 0.5), rel=1e-14)
    assert crit.min_metastable_energy(p, 1.0) == pytest.approx(202.39, abs=5e-3)
    assert crit.min_metastable_energy(p, 1.0) == pytest.approx(leading_energy(ZERO, LatticeVector(0, 1, 0), p, 1.0), rel=1e-15)
    wide = PhysicalParams(N=10, L2=2.0)
    kin = lambda q: crit.min_metastable_energy(q, 1.0) - q.N * 0.5
    assert kin(wide) == pytest.approx(kin(p) / 4, rel=1e-14)


def test_geometric_velocity():
    assert crit.geometric_critical_velocity(PhysicalParams()) == 2 * math.pi
    a = crit.geometric_critical_velocity(PhysicalParams(L2=0.3))
    assert crit.geometric_critical_velocity(PhysicalParams(L2=0.6)) == a / 2
    R = 0.35
    p = PhysicalParams(hbar=0.7, m=1.9, L2=2 * R)
    assert crit.geometric_critical_velocity(p) == pytest.approx(p.h / (2 * p.m * R), rel=1e-15)


def test_exact_resonance_integer_identity():
    p = PhysicalParams(L1=10.0, L2=1.0)
    hits = crit.resonance_scan(p, 1.0, v_max=2 * math.pi * 1.01, tolerance=0.0, cutoff=2)
    keys = {(h.k0, h.k1, h.k2) for h in hits}
    assert (LatticeVector(10, 0, 0), ZERO, LatticeVector(0, 1, 0)) in keys
    assert all(h.gap == 0 for h in hits)


def test_incommensurate_box_has_no_hits():
    # (L1/L2)^2 = 100 sqrt(2) is irrational, so n0^2 - n1^2 = 100 sqrt(2) s has no solution
    p = PhysicalParams(L1=10 * 2**0.25, L2=1.0)
    assert crit.resonance_scan(p, 1.0, v_max=12.0, tolerance=1e-12, cutoff=3) == []


def test_root_two_box_is_commensurate_in_squares():
    # L1 = 10 sqrt(2) has L1^2 = 200: (27^2 - 23^2)/200 = 1 is a genuine resonance
    p = PhysicalParams(L1=10 * math.sqrt(2), L2=1.0)
    hits = crit.resonance_scan(p, 1.0, v_max=12.0, tolerance=1e-12, cutoff=3)
    assert any(abs(h.k0.n1) == 27 and abs(h.k1.n1) == 23 for h in hits)
    # the float box is not exactly 200, so exact mode finds nothing
    assert crit.resonance_scan(p, 1.0, v_max=12.0, tolerance=0.0, cutoff=3) == []


@settings(max_examples=15, deadline=None)
@given(st.sampled_from([5.0, 10.0, 12.5, 20.0, 7.5]), st.sampled_from([1.0, 0.5, 2.0]), st.integers(1, 4))
def test_exact_scan_matches_brute_force(L1, L2, cutoff):
    p = PhysicalParams(L1=L1, L2=L2)
    v_max = 1.5 * crit.geometric_critical_velocity(p)
    got = {(tuple(h.k0), tuple(h.k1), tuple(h.k2)) for h in crit.resonance_scan(p, 1.0, v_max, 0.0, cutoff)}
    assert got == brute_force(p, v_max, cutoff)


def test_no_hits_below_geometric_velocity(params):
    v_geo = crit.geometric_critical_velocity(params)
    hits = crit.resonance_scan(params, DEFAULT_V0, v_max=3 * v_geo, tolerance=1e-3, cutoff=4)
    assert hits
    for h in hits:
        assert params.hbar * abs(wavevector(h.k0, params)[0]) / params.m >= v_geo * (1 - 1e-3)


def test_tolerance_hits_respect_bound(params):
    hits = crit.resonance_scan(params, DEFAULT_V0, v_max=15.0, tolerance=1e-3, cutoff=4)
    for h in hits:
        assert h.gap <= 1e-3 * h.e_flow
        assert h.relative_gap == pytest.approx(h.gap / h.e_flow)
    gaps = [h.gap for h in hits]
    assert gaps == sorted(gaps)


def test_resonance_argument_checks(params):
    with pytest.raises(EmptyScan):
        crit.resonance_scan(params, 1.0, v_max=0.1, tolerance=0.0)
    with pytest.raises(ValueError):
        crit.resonance_scan(params, 1.0, v_max=-1.0)
    with pytest.raises(ValueError):
        crit.resonance_scan(params, 1.0, v_max=1.0, tolerance=1.0)


def test_critical_report_definitional(params, default_table):
    rep = crit.critical_velocity(params, default_table, cutoff=4, longitudinal_cutoff=8)
    assert rep.v_critical == min(rep.v_landau, rep.v_geometric)
    assert rep.regime is crit.Regime.LANDAU_LIMITED
    d = rep.as_dict()
    assert d["regime"] == "landau_limited"
    assert "diameter" in d["L2_interpretation"]


def test_regime_thin_and_wide_tube(default_table, params):
    v_l = crit.critical_velocity(params, default_table, cutoff=2, longitudinal_cutoff=8).v_landau
    thin = PhysicalParams(L2=0.01 * params.hbar / (params.m * v_l))
    rep = crit.critical_velocity(thin, limit_table(DEFAULT_V0, thin), cutoff=2, longitudinal_cutoff=8)
    assert rep.regime is crit.Regime.LANDAU_LIMITED
    wide = PhysicalParams(L2=20.0)
    rep = crit.critical_velocity(wide, limit_table(DEFAULT_V0, wide), cutoff=2, longitudinal_cutoff=8)
    assert rep.regime is crit.Regime.GEOMETRY_LIMITED
    assert rep.v_critical == rep.v_geometric


def test_critical_velocity_unit_invariance():
    a = PhysicalParams(hbar=1.0, m=1.0, L2=1.0)
    b = PhysicalParams(hbar=2.0, m=2.0, L2=1.0)
    ra = crit.critical_velocity(a, limit_table(1.0, a), cutoff=3, longitudinal_cutoff=5)
    rb = crit.critical_velocity(b, limit_table(2.0, b), cutoff=3, longitudinal_cutoff=5)
    assert ra.v_critical == pytest.approx(rb.v_critical, rel=1e-14)
    assert ra.v_geometric == pytest.approx(rb.v_geometric, rel=1e-14)
