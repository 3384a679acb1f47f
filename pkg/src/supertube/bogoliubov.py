"""The Bogoliubov series around a plane-wave condensate.

Wave vectors may be given either as lattice vectors (the coefficient is
then looked up in the table) or as plain 3-vectors of wave numbers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DispersionCurve, LatticeVector, lattice_array, wavevector, wavevectors
from .errors import ComplexBranch, EmptyScan, Gapless, NonNormalizable
from .potential import FourierTable


@dataclass(frozen=True)
class BogoliubovMode:
    p: np.ndarray
    lam: np.ndarray
    rho: complex
    sigma: complex
    beta: float

    @property
    def norm(self) -> float:
        return abs(self.sigma) ** 2 - abs(self.rho) ** 2


def _vec_and_coeff(k, table: FourierTable):
    if isinstance(k, LatticeVector):
        return wavevector(k, table.params), table[k]
    k = np.asarray(k, dtype=float)
    return k, table.at(k)


def _vec(k, table):
    if isinstance(k, LatticeVector):
        return wavevector(k, table.params)
    return np.asarray(k, dtype=float)


def condensate_omega(p, table: FourierTable) -> float:
    """Frequency of the plane-wave condensate with wave vector ``p``."""
    pv = _vec(p, table)
    return table.params.kinetic(pv @ pv) + table.v0_limit


def epsilon(lam_sq, v_lam, params):
    """Drift-free Bogoliubov energy sqrt((x + v)^2 - v^2), x = hbar^2 lam^2 / 2m.

    Works elementwise on arrays. Written as sqrt(x (x + 2v)) to avoid the
    cancellation of the literal form at small x.
    """
    x = params.kinetic(np.asarray(lam_sq, dtype=float))
    return np.sqrt(x * (x + 2.0 * np.asarray(v_lam, dtype=float)))


def spectrum_beta(p, lam, table: FourierTable, v_lam: float | None = None) -> float:
    """Closed-form frequency beta = -hbar^2 (p.lam)/m + sqrt((x + v)^2 - v^2)."""
    pr = table.params
    pv = _vec(p, table)
    lv, v = _vec_and_coeff(lam, table)
    if v_lam is not None:
        v = v_lam
    x = pr.kinetic(lv @ lv)
    radicand = x * (x + 2.0 * v)
    if radicand < 0:
        raise ComplexBranch(f"negative radicand {radicand!r} at lambda = {lv.tolist()}", lam=lv)
    return -pr.hbar**2 * float(pv @ lv) / pr.m + math.sqrt(radicand)


def two_mode_matrix(p, lam, table: FourierTable, v_lam: float | None = None) -> np.ndarray:
    """Matrix K with beta (rho, sigma) = K (rho, sigma) for the two-mode system.

    The second line of the printed system reads beta*rho on the left; it is
    taken as beta*sigma, the only reading that gives a closed 2x2 problem.
    """
    pr = table.params
    pv = _vec(p, table)
    lv, v = _vec_and_coeff(lam, table)
    if v_lam is not None:
        v = v_lam
    a_plus = pr.hbar**2 * ((pv + lv) @ (pv + lv) - pv @ pv) / (2 * pr.m) + v
    a_minus = pr.hbar**2 * ((pv - lv) @ (pv - lv) - pv @ pv) / (2 * pr.m) + v
    return np.array([[-a_plus, -v], [v, a_minus]])


def solve_two_mode(p, lam, table: FourierTable, v_lam: float | None = None) -> BogoliubovMode:
    """Solve the two-mode system numerically and keep the normalisable branch."""
    lv = _vec(lam, table)
    if not np.any(lv):
        raise Gapless("lambda = 0 is not an excitation")
    K = two_mode_matrix(p, lam, table, v_lam)
    w, vecs = np.linalg.eig(K)
    if np.max(np.abs(w.imag)) > 0:
        raise ComplexBranch(f"complex frequencies {w} at lambda = {lv.tolist()}", lam=lv)
    w = w.real
    scale = max(np.abs(K).max(), 1e-300)
    if abs(w[0] - w[1]) <= 1e-12 * scale:
        raise Gapless(f"degenerate two-mode system at lambda = {lv.tolist()}")
    norms = np.abs(vecs[1]) ** 2 - np.abs(vecs[0]) ** 2
    i = int(np.argmax(norms))
    if norms[i] <= 0:
        raise NonNormalizable(f"no branch with |sigma|^2 - |rho|^2 > 0 at lambda = {lv.tolist()}")
    rho, sigma = vecs[:, i] / math.sqrt(norms[i])
    # fix the global phase so that sigma is real and positive
    phase = sigma / abs(sigma)
    rho, sigma = rho / phase, sigma / phase
    return BogoliubovMode(p=_vec(p, table), lam=lv, rho=complex(rho), sigma=complex(sigma), beta=float(w[i]))


@dataclass(frozen=True)
class LandauResult:
    v_landau: float
    continuum_bound: float
    argmin: LatticeVector


def landau_velocity(table: FourierTable, cutoff: int, longitudinal_cutoff: int | None = None) -> LandauResult:
    """min over nonzero lattice lambda of eps(lambda) / (hbar |lambda|)."""
    pr = table.params
    ns = lattice_array(cutoff, longitudinal_cutoff)
    ns = ns[np.any(ns != 0, axis=1)]
    if len(ns) == 0:
        raise EmptyScan("the lattice cutoff excludes every nonzero wave vector")
    ks = wavevectors(ns, pr)
    ksq = np.einsum("ij,ij->i", ks, ks)
    eps = epsilon(ksq, table.values(ns), pr)
    ratio = eps / (pr.hbar * np.sqrt(ksq))
    i = int(np.argmin(ratio))
    return LandauResult(
        v_landau=float(ratio[i]),
        continuum_bound=math.sqrt(table.v0_limit / pr.m),
        argmin=LatticeVector(*map(int, ns[i])),
    )


def dispersion(table: FourierTable, k1, cutoff: int, longitudinal_cutoff: int = 0) -> DispersionCurve:
    """Flow-shifted Bogoliubov energies beta(k1, lambda) over the nonzero lattice patch."""
    pr = table.params
    ns = lattice_array(cutoff, longitudinal_cutoff)
    ns = ns[np.any(ns != 0, axis=1)]
    ks = wavevectors(ns, pr)
    ksq = np.einsum("ij,ij->i", ks, ks)
    x = pr.kinetic(ksq)
    v = table.values(ns)
    radicand = x * (x + 2.0 * v)
    cplx = radicand < 0
    eps = np.sqrt(np.where(cplx, 0.0, radicand))
    drift = pr.hbar**2 * (ks @ _vec(k1, table)) / pr.m
    return DispersionCurve(
        series="bogoliubov",
        ns=ns,
        k_abs=np.sqrt(ksq),
        energy=eps - drift,
        selected=~cplx,
        complex_flag=cplx,
    )
