import math
import warnings

import numpy as np
import pytest
import scipy.sparse as sp

from supertube import oracle as orc
from supertube.checks import oracle_setup
from supertube.config import RunConfig
from supertube.core import LatticeVector, PhysicalParams, ksq
from supertube.errors import ModeSetNotClosed
from supertube.potential import FourierTable, PotentialSpec, build_table

FIVE = [(0, 0, 0), (1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0)]


def unit_params(N):
    return PhysicalParams(L1=1.0, L2=1.0, N=N)


def quiet_build(basis, table):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ModeSetNotClosed)
        return orc.build_hamiltonian(basis, table)


def test_dimension_formula():
    for N, M in [(1, 1), (2, 3), (8, 5), (10, 7)]:
        assert len(orc.FockBasis(FIVE[:M] + [(0, 0, k) for k in range(1, M - 4)], N)) == orc.fock_dimension(N, M)
    assert orc.fock_dimension(10, 7) == 8008


def test_basis_limits():
    with pytest.raises(ValueError):
        orc.FockBasis([(0, 0, 0), (0, 0, 0)], 2)
    with pytest.raises(ValueError):
        orc.FockBasis([(0, 0, k) for k in range(8)], 2)
    with pytest.raises(ValueError):
        orc.FockBasis(FIVE, 11)


def test_single_particle_is_free():
    p = unit_params(1)
    basis = orc.FockBasis(FIVE, 1)
    H = quiet_build(basis, FourierTable(p, 3.0))
    assert sp.triu(H, 1).nnz == 0
    kin = sorted(p.kinetic(ksq(k, p)) for k in basis.modes)
    np.testing.assert_allclose(np.sort(H.diagonal()), kin)


def test_two_particle_hand_fixture():
    p = unit_params(2)
    V0 = 0.9
    g = V0 / 2
    basis = orc.FockBasis([(-1, 0, 0), (0, 0, 0), (1, 0, 0)], 2)
    with pytest.warns(ModeSetNotClosed):
        H = orc.build_hamiltonian(basis, FourierTable(p, V0)).toarray()
    x = p.kinetic(ksq((1, 0, 0), p))
    idx = basis.index
    pair, cond = idx[(1, 0, 1)], idx[(0, 2, 0)]
    assert H[cond, cond] == pytest.approx(g)
    assert H[pair, pair] == pytest.approx(2 * x + 2 * g)
    assert H[pair, cond] == pytest.approx(math.sqrt(2) * g)
    assert H[idx[(0, 1, 1)], idx[(0, 1, 1)]] == pytest.approx(x + 2 * g)
    assert H[idx[(0, 0, 2)], idx[(0, 0, 2)]] == pytest.approx(2 * x + g)
    spec = orc.diagonalize(sp.csr_matrix(H), basis)
    # zero-momentum block [[g, sqrt2 g], [sqrt2 g, 2x + 2g]]
    tr, det = 2 * x + 3 * g, g * (2 * x + 2 * g) - 2 * g * g
    roots = [(tr - math.sqrt(tr * tr - 4 * det)) / 2, (tr + math.sqrt(tr * tr - 4 * det)) / 2]
    np.testing.assert_allclose(spec.sectors[LatticeVector(0, 0, 0)], roots, rtol=1e-12)


def test_free_spectrum_is_kinetic_sums():
    p = unit_params(3)
    basis = orc.FockBasis(FIVE, 3)
    spec = orc.diagonalize(quiet_build(basis, FourierTable(p, 0.0)), basis)
    kin = np.array([p.kinetic(ksq(k, p)) for k in basis.modes])
    expected = np.sort([np.dot(s, kin) for s in basis.states])
    np.testing.assert_allclose(spec.eigenvalues, expected, atol=1e-10)


def test_diagonal_matrix_spectrum():
    basis = orc.FockBasis([(0, 0, 0), (1, 0, 0)], 3)
    d = np.array([3.0, -1.0, 2.0, 0.5])
    spec = orc.diagonalize(sp.diags(d).tocsr(), basis)
    np.testing.assert_array_equal(spec.eigenvalues, np.sort(d))


def test_momentum_conservation():
    p = unit_params(4)
    basis = orc.FockBasis(FIVE, 4)
    H = quiet_build(basis, FourierTable(p, 2.0)).tocoo()
    for r, c in zip(H.row, H.col):
        assert basis.momenta[r] == basis.momenta[c]
    assert abs(H - H.T).max() == 0


def test_relabeling_invariance():
    p = unit_params(5)
    table = FourierTable(p, 1.7)
    a = orc.FockBasis(FIVE, 5)
    b = orc.FockBasis(FIVE[::-1], 5)
    ea = orc.diagonalize(quiet_build(a, table), a).eigenvalues
    eb = orc.diagonalize(quiet_build(b, table), b).eigenvalues
    np.testing.assert_allclose(ea, eb, atol=1e-10)


def test_ground_energy_grows_with_repulsion():
    p = PhysicalParams(L1=1.0, L2=1.0, N=6)
    basis = orc.FockBasis(FIVE, 6)
    e0 = []
    for A in (0.5, 1.0, 2.0):
        table = build_table(PotentialSpec("tophat", A=A, a=0.5), p, cutoff=2, longitudinal_cutoff=2)
        e0.append(orc.diagonalize(quiet_build(basis, table), basis).ground_energy)
    assert e0[0] < e0[1] < e0[2]


def test_sector_sizes_keep_dense_path():
    modes = FIVE + [(0, 0, 1), (0, 0, -1)]
    basis = orc.FockBasis(modes, 10)
    assert len(basis) == 8008
    sizes = [len(v) for v in basis.sectors().values()]
    assert max(sizes) <= orc.DENSE_LIMIT


def test_lanczos_path(monkeypatch):
    p = unit_params(6)
    basis = orc.FockBasis(FIVE, 6)
    H = quiet_build(basis, FourierTable(p, 1.0))
    dense = orc.diagonalize(H, basis)
    monkeypatch.setattr(orc, "DENSE_LIMIT", 6)
    sparse = orc.diagonalize(H, basis, k=4)
    assert sparse.ground_energy == pytest.approx(dense.ground_energy, abs=1e-9)
    assert not all(sparse.complete.values())


def test_compare_free_control():
    cfg = RunConfig.default()
    p, basis, table = oracle_setup(cfg, 0.0)
    spec = orc.diagonalize(quiet_build(basis, table), basis)
    rep = orc.compare_bogoliubov(spec, basis, table)
    assert rep["max_deviation"] == 0.0
    assert rep["density_convention"] == "rho = N"


def test_compare_weak_coupling():
    cfg = RunConfig.default()
    devs = []
    for frac in (0.1, 0.05, 0.025):
        p, basis, table = oracle_setup(cfg, frac)
        spec = orc.diagonalize(quiet_build(basis, table), basis)
        devs.append(orc.compare_bogoliubov(spec, basis, table)["max_deviation"])
    assert devs[0] <= 0.10
    assert devs[0] > devs[1] > devs[2]


def test_density_convention_switch():
    cfg = RunConfig.default()
    p, basis, table = oracle_setup(cfg, 0.1)
    spec = orc.diagonalize(quiet_build(basis, table), basis)
    a = orc.compare_bogoliubov(spec, basis, table, "N")
    b = orc.compare_bogoliubov(spec, basis, table, "N-1")
    assert b["density_convention"] == "rho = N-1"
    assert a["comparisons"][0]["epsilon"] > b["comparisons"][0]["epsilon"]


def test_oracle_setup_with_potential():
    cfg = RunConfig.from_dict({"oracle": {"coupling_fraction": None}})
    p, basis, table = oracle_setup(cfg, None)
    assert table.mode == "finiteN"
    assert p.N == 8
