"""Invariant suite behind ``supertube verify``.

Each check returns (passed, detail). Known discrepancies between the
printed formulas and the numerics are measured separately and reported
without affecting the exit status.
"""
from __future__ import annotations

import math
import time
from fractions import Fraction
import warnings
from dataclasses import dataclass

import numpy as np

from . import bogoliubov as bog
from . import critical as crit
from . import oracle as orc
from . import pairseries as ps
from . import variational as var
from .core import LatticeVector, PhysicalParams, ksq, lattice, wavevector
from .errors import ModeSetNotClosed
from .potential import FourierTable, bound_check, build_table, fourier_coeff, limit_table, v0_limit


@dataclass
class CheckResult:
    name: str
    module: str
    passed: bool
    detail: str
    seconds: float


def _random_lattice(rng, lo, hi, transverse=False):
    n1 = 0 if transverse else int(rng.integers(lo, hi + 1))
    return LatticeVector(n1, int(rng.integers(lo, hi + 1)), int(rng.integers(lo, hi + 1)))


def oracle_setup(config, fraction):
    """Parameters, Fock basis and coupling table for the exact-diagonalisation run.

    With a numeric ``fraction`` the interaction is the constant table
    v_q = fraction * (smallest nonzero kinetic energy in the mode set);
    with ``None`` the configured potential is used at the oracle's N.
    """
    o = config.raw["oracle"]
    ph = config.raw["physical"]
    p = PhysicalParams(hbar=ph["hbar"], m=ph["m"], L1=o["L1"], L2=o["L2"], N=o["N"])
    basis = orc.FockBasis([tuple(k) for k in o["modes"]], o["N"])
    if fraction is None:
        reach = max(max(abs(c) for c in k) for k in basis.modes)
        table = build_table(config.potential, p, cutoff=2 * reach, longitudinal_cutoff=2 * reach)
    else:
        nonzero = [k for k in basis.modes if not k.is_zero]
        xmin = min(p.kinetic(ksq(k, p)) for k in nonzero) if nonzero else 1.0
        table = FourierTable(params=p, v0_limit=fraction * xmin, mode="limit")
    return p, basis, table


class Suite:
    def __init__(self, config, skip_oracle=False, seed=0):
        self.cfg = config
        self.p = config.physical
        self.spec = config.potential
        self.skip_oracle = skip_oracle
        self.seed = seed
        self.V0 = v0_limit(self.spec, self.p)
        self.table = limit_table(self.V0, self.p)

    # -- core ---------------------------------------------------------------
    def check_wavevector_linear(self):
        rng = np.random.default_rng(self.seed)
        worst = 0.0
        for _ in range(50):
            a, b = _random_lattice(rng, -9, 9), _random_lattice(rng, -9, 9)
            d = wavevector(a + b, self.p) - wavevector(a, self.p) - wavevector(b, self.p)
            worst = max(worst, float(np.abs(d).max()))
        return worst <= 1e-12, f"max |k(a+b) - k(a) - k(b)| = {worst:.3e}"

    def check_orthogonal(self):
        a = wavevector((0, 3, -2), self.p)
        b = wavevector((5, 0, 0), self.p)
        return float(a @ b) == 0.0, f"k_transverse . k_longitudinal = {float(a @ b)!r}"

    # -- potential ----------------------------------------------------------
    def check_fourier_table(self):
        p = self.p
        tab = build_table(self.spec, p, cutoff=4, longitudinal_cutoff=2)
        ratio = bound_check(tab)
        sym = max(abs(tab[n] - tab[-n]) for n in tab.entries)
        v0_gap = abs(fourier_coeff(self.spec, p, LatticeVector(0, 0, 0)) - self.V0) / self.V0
        ok = ratio <= 1.0 + 1e-9 and sym == 0.0 and v0_gap <= 1e-8
        return ok, f"max |v_q|/v_0 = {ratio:.12f}, max |v_q - v_-q| = {sym:.1e}, |v_0 - V0|/V0 = {v0_gap:.1e}"

    def check_fourier_convergence(self):
        devs = []
        for N in (10**3, 10**6, 10**9):
            p = type(self.p)(hbar=self.p.hbar, m=self.p.m, L1=self.p.L1, L2=self.p.L2, N=N)
            devs.append(build_table(self.spec, p, cutoff=4).max_deviation())
        ok = devs[0] > devs[1] > devs[2]
        return ok, "max |v_q - V0| over N = 1e3, 1e6, 1e9: " + ", ".join(f"{d:.3e}" for d in devs)

    # -- bogoliubov ---------------------------------------------------------
    def check_bogoliubov_closed_form(self):
        rng = np.random.default_rng(self.seed)
        worst_rel, worst_norm = 0.0, 0.0
        for _ in range(100):
            pvec = _random_lattice(rng, -3, 3)
            lam = _random_lattice(rng, -5, 5)
            if lam.is_zero:
                continue
            mode = bog.solve_two_mode(pvec, lam, self.table)
            beta = bog.spectrum_beta(pvec, lam, self.table)
            worst_rel = max(worst_rel, abs(mode.beta - beta) / max(abs(beta), 1e-300))
            worst_norm = max(worst_norm, abs(mode.norm - 1))
        return worst_rel <= 1e-10 and worst_norm <= 1e-12, f"max rel |beta_2x2 - beta| = {worst_rel:.2e}, max |norm - 1| = {worst_norm:.2e}"

    def check_bogoliubov_symmetry(self):
        worst = 0.0
        pvec = LatticeVector(2, 0, 0)
        zero = LatticeVector(0, 0, 0)
        for lam in lattice(2, 2):
            if lam.is_zero:
                continue
            b0p = bog.spectrum_beta(zero, lam, self.table)
            b0m = bog.spectrum_beta(zero, -lam, self.table)
            bp = bog.spectrum_beta(pvec, lam, self.table)
            bm = bog.spectrum_beta(pvec, -lam, self.table)
            worst = max(worst, abs(b0p - b0m), abs(bp + bm - 2 * b0p) / max(b0p, 1.0))
            if b0p <= 0:
                return False, f"eps({tuple(lam)}) = {b0p!r} <= 0"
        return worst <= 1e-10, f"evenness/drift antisymmetry error {worst:.2e}; eps > 0 off zero"

    # -- pair series --------------------------------------------------------
    def check_root_identity(self):
        k2 = LatticeVector(*self.cfg.raw["k2"])
        worst = 0.0
        for l in lattice(8, 2):
            phi, _ = ps.phi_limit(k2, l, self.V0, self.p)
            b = ps.b_limit(k2, l, self.V0, self.p)
            if ps._cmp(l, k2, self.p) == 0:
                continue
            worst = max(worst, abs(phi * phi + b * phi + 0.25) / max(1.0, abs(b)))
        half = ps.phi_limit(k2, k2, self.V0, self.p).phi
        return worst <= 1e-12 and half == 0.5, f"max |phi^2 + b phi + 1/4| = {worst:.2e}, phi_(k2,k2) = {half}"

    def check_phi_evenness(self):
        k2 = LatticeVector(*self.cfg.raw["k2"])
        st = ps.build_state(LatticeVector(0, 0, 0), k2, self.table, cutoff=6)
        odd = max(abs(st.phi[l] - st.phi[-l]) for l in st.phi)
        st2 = ps.build_state(LatticeVector(0, 0, 0), -k2, self.table, cutoff=6)
        flip = max(abs(st.phi[l] - st2.phi[l]) for l in st.phi)
        big = max(abs(v) for v in st.phi.values())
        return odd == 0 and flip == 0 and big <= 0.5 + 1e-15, f"|phi_l - phi_-l| = {odd}, k2 -> -k2 change {flip}, max |phi| = {big:.15f}"

    def check_normalization(self):
        k2 = LatticeVector(*self.cfg.raw["k2"])
        vals = [ps.normalization_check(ps.build_state(LatticeVector(0, 0, 0), k, self.table, cutoff=4)) for k in (k2, LatticeVector(0, 0, 0))]
        return all(v == 0.5 for v in vals), f"normalisation values {vals}"

    def check_residual_limit(self):
        k2 = LatticeVector(*self.cfg.raw["k2"])
        worst = 0.0
        for k1 in (LatticeVector(0, 0, 0), LatticeVector(3, 0, 0)):
            st = ps.build_state(k1, k2, self.table, cutoff=8)
            worst = max(worst, ps.residual_7aa(st, self.table).max)
        return worst <= 1e-10, f"limit-mode stationary residual {worst:.2e}"

    def check_energy_consistency(self):
        worst = 0.0
        for n in range(-5, 6):
            k0 = LatticeVector(n, 0, 0)
            e1 = crit.flow_energy(k0, self.p, self.V0)
            e2 = ps.leading_energy(k0, LatticeVector(0, 0, 0), self.p, self.V0)
            worst = max(worst, abs(e1 - e2))
        return worst == 0.0, f"max |flow_energy - leading_energy(k0, 0)| = {worst!r}"

    # -- variational --------------------------------------------------------
    def check_block_reduction(self):
        k2 = LatticeVector(*self.cfg.raw["k2"])
        res = var.scan(LatticeVector(1, 0, 0), k2, self.V0, self.p, cutoff=6, longitudinal_cutoff=3)
        tol = self.cfg.raw["tolerance"]["eigen"]
        ok = res.reduction_error <= tol and res.trace_error <= tol
        return ok, f"{len(res)} blocks: max reduction error {res.reduction_error:.2e}, max |tr M| {res.trace_error:.2e}"

    def check_determinant(self):
        k2 = LatticeVector(*self.cfg.raw["k2"])
        worst = 0.0
        for l in lattice(3, 1):
            if l == -k2:
                continue
            blk = var.build_block(LatticeVector(0, 0, 0), k2, l, self.V0, self.p)
            dm = np.linalg.det(blk.M)
            dr = np.linalg.det(blk.C @ blk.C - self.V0 * blk.D)
            worst = max(worst, abs(dm - dr) / max(abs(dr), 1e-300))
        return worst <= 1e-8, f"max rel |det M - det(C^2 - V0 D)| = {worst:.2e}"

    def check_drift_covariance(self):
        k2 = LatticeVector(*self.cfg.raw["k2"])
        k1 = LatticeVector(2, 0, 0)
        a = var.scan(LatticeVector(0, 0, 0), k2, self.V0, self.p, cutoff=3, longitudinal_cutoff=2)
        b = var.scan(k1, k2, self.V0, self.p, cutoff=3, longitudinal_cutoff=2)
        shift = self.p.hbar**2 * ((np.array([wavevector(n, self.p) for n in a.ns]) + wavevector(k2, self.p)) @ wavevector(k1, self.p)) / self.p.m
        worst = float(np.abs(b.lam - a.lam + shift[:, None]).max())
        return worst <= 1e-9, f"max |lambda(k1) - lambda(0) + hbar^2 k1.(k2+l)/m| = {worst:.2e}"

    def check_transverse_unstable(self):
        k2 = LatticeVector(*self.cfg.raw["k2"])
        if k2.is_zero:
            return True, "k2 = 0 configured; nothing to check"
        c = var.classify_series(LatticeVector(0, 0, 0), k2, self.V0, self.p, cutoff=4, longitudinal_cutoff=4)
        return c.kind is var.SeriesKind.UNSTABLE, f"k2 = {tuple(k2)}: {c.kind.value}, min selected lambda = {c.min_selected:.6g}"

    # -- critical -----------------------------------------------------------
    def check_critical_velocity(self):
        rep = crit.critical_velocity(self.p, self.table, cutoff=4, longitudinal_cutoff=4)
        p2 = type(self.p)(hbar=self.p.hbar, m=self.p.m, L1=self.p.L1, L2=self.p.L2 / 2, N=self.p.N)
        ratio = crit.geometric_critical_velocity(p2) / rep.v_geometric
        ok = rep.v_critical == min(rep.v_landau, rep.v_geometric) and ratio == 2.0
        return ok, f"v_landau = {rep.v_landau:.6g}, v_geometric = {rep.v_geometric:.6g}, regime = {rep.regime.value}"

    def check_resonance_exact(self):
        p = self.p
        vmax = 2 * crit.geometric_critical_velocity(p)
        cut = 3
        hits = crit.resonance_scan(p, self.V0, vmax, tolerance=0.0, cutoff=cut)
        got = sorted((h.k0, h.k1, h.k2) for h in hits)
        # integer weights: k^2 / (2 pi)^2 = n1^2 / L1^2 + s / L2^2, scaled by a common denominator
        L1sq, L2sq = Fraction(p.L1) ** 2, Fraction(p.L2) ** 2
        den = math.lcm(L1sq.numerator, L2sq.numerator)
        w1, w23 = int(den / L1sq), int(den / L2sq)
        nmax = crit._k0_range(p, vmax)
        want = []
        for n1 in range(-nmax, nmax + 1):
            if n1 == 0:
                continue
            for m1 in range(-nmax, nmax + 1):
                for n2 in range(-cut, cut + 1):
                    for n3 in range(-cut, cut + 1):
                        if (n2, n3) != (0, 0) and n1 * n1 * w1 == m1 * m1 * w1 + (n2 * n2 + n3 * n3) * w23:
                            want.append((LatticeVector(n1, 0, 0), LatticeVector(m1, 0, 0), LatticeVector(0, n2, n3)))
        vgeo = crit.geometric_critical_velocity(p)
        slow = [h for h in hits if p.hbar * abs(wavevector(h.k0, p)[0]) / p.m < vgeo * (1 - 1e-12)]
        return got == sorted(want) and not slow, f"{len(got)} exact hits, brute force {len(want)}, below v_geometric {len(slow)}"

    # -- oracle -------------------------------------------------------------
    def _oracle_run(self, fraction):
        p, basis, table = oracle_setup(self.cfg, fraction)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ModeSetNotClosed)
            H = orc.build_hamiltonian(basis, table)
        spec = orc.diagonalize(H, basis)
        return orc.compare_bogoliubov(spec, basis, table, self.cfg.raw["oracle"]["density"])

    def check_oracle_free(self):
        rep = self._oracle_run(0.0)
        worst = max(abs(r["exact_gap"] - r["free_gap"]) for r in rep["comparisons"])
        return worst <= 1e-9, f"v = 0: max |gap - hbar^2 q^2/2m| = {worst:.2e}"

    def check_oracle_weak(self):
        frac = self.cfg.raw["oracle"]["coupling_fraction"] or 0.1
        devs = [self._oracle_run(f)["max_deviation"] for f in (frac, frac / 2, frac / 4)]
        ok = devs[0] <= 0.10 and devs[0] > devs[1] > devs[2]
        return ok, "max relative deviation from eps(q): " + ", ".join(f"{d:.3e}" for d in devs)

    # -- informational ------------------------------------------------------
    def discrepancies(self) -> dict:
        """Measured gaps between printed formulas and the numerics (never fail)."""
        p, V0 = self.p, self.V0
        k2 = LatticeVector(*self.cfg.raw["k2"])
        out = {}
        res = var.scan(LatticeVector(0, 0, 0), LatticeVector(0, 0, 0), V0, p, cutoff=4, longitudinal_cutoff=4)
        ls = np.array([wavevector(n, p) for n in res.ns])
        eps = bog.epsilon(np.sum(ls**2, axis=1), V0, p)
        best = np.min(np.where(res.selected, np.abs(res.lam - eps[:, None]), np.inf), axis=1)
        out["k2_zero_block_vs_bogoliubov_max_abs"] = float(best.max())
        for variant in ("literal", "corrected"):
            worst = 0.0
            for l in lattice(3, 1):
                if l == -k2:
                    continue
                spec = var.eigen_block(var.build_block(LatticeVector(0, 0, 0), k2, l, V0, p), p)
                cf = var.closed_form_branches(LatticeVector(0, 0, 0), k2, l, V0, p, variant)
                for x in cf:
                    worst = max(worst, min(abs(x - b.lam) for b in spec.branches) / max(abs(x), 1e-300))
            out[f"closed_form_{variant}_vs_eigen_max_rel"] = worst
        res = var.scan(LatticeVector(0, 0, 0), k2, V0, p, cutoff=6, longitudinal_cutoff=3)
        real = ~res.complex_flag.any(axis=1) & np.all(res.mu.real > 0, axis=1)
        counts = res.selected[real].sum(axis=1)
        out["selection_count_histogram_real_blocks"] = {str(k): int((counts == k).sum()) for k in range(5) if (counts == k).any()}
        return out

    def checks(self):
        core = [
            ("wavevector linearity", "core", self.check_wavevector_linear),
            ("transverse/longitudinal orthogonality", "core", self.check_orthogonal),
            ("Fourier table symmetry and bound", "potential", self.check_fourier_table),
            ("Fourier coefficients converge to V0", "potential", self.check_fourier_convergence),
            ("closed form vs two-mode solve", "bogoliubov", self.check_bogoliubov_closed_form),
            ("Bogoliubov evenness and drift", "bogoliubov", self.check_bogoliubov_symmetry),
            ("pair coefficient root identity", "pairseries", self.check_root_identity),
            ("pair coefficient evenness", "pairseries", self.check_phi_evenness),
            ("pair normalisation", "pairseries", self.check_normalization),
            ("stationary residual (limit)", "pairseries", self.check_residual_limit),
            ("flow energy = pair energy at k2 = 0", "pairseries", self.check_energy_consistency),
            ("block reduction and trace", "variational", self.check_block_reduction),
            ("det M = det(C^2 - V0 D)", "variational", self.check_determinant),
            ("drift covariance", "variational", self.check_drift_covariance),
            ("transverse series not metastable", "variational", self.check_transverse_unstable),
            ("critical velocity law", "critical", self.check_critical_velocity),
            ("exact resonance = brute force", "critical", self.check_resonance_exact),
        ]
        if not self.skip_oracle:
            core += [
                ("oracle free gaps", "oracle", self.check_oracle_free),
                ("oracle weak coupling", "oracle", self.check_oracle_weak),
            ]
        return core

    def run(self) -> list[CheckResult]:
        results = []
        for name, module, fn in self.checks():
            t0 = time.perf_counter()
            try:
                ok, detail = fn()
            except Exception as exc:  # a crashing check is a failed check
                ok, detail = False, f"{type(exc).__name__}: {exc}"
            results.append(CheckResult(name, module, bool(ok), detail, time.perf_counter() - t0))
        return results
