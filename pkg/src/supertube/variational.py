"""Quasiparticle spectrum of a pair series from the closed 4x4 variational subsystem.

For each l != -k2 the coefficients X = (u1, u2, v1, v2) satisfy
lt X = M X with

    M = [[C, -V0 I], [D, -C]],
    C = [[B_l, V0], [V0, B_l1]],
    D = V0 [[2 phi_l, phi_l + phi_l1], [phi_l + phi_l1, 2 phi_l1]],

l1 = l + 2 k2 and B_l = hbar^2 (l^2 - k2^2)/2m + V0 phi_l. Eliminating v
gives lt^2 u = (C^2 - V0 D) u, so the spectrum of M is the set of +-square
roots of the two eigenvalues mu of C^2 - V0 D.

The physical energy is lambda = lt - hbar^2 k1.(k2 + l)/m, i.e. the flow
enters as a Doppler shift with the same sign as in the Bogoliubov series.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .bogoliubov import epsilon
from .core import LatticeVector, PhysicalParams, as_lattice, ksq, lattice_array, wavevector, wavevectors
from .errors import EmptyScan, ExcludedMode, NonConvergence
from .pairseries import phi_limit, phi_limit_many

EIG_RTOL = 1e-10
RESIDUAL_RTOL = 1e-9


def b_coeff(l, k2, V0: float, phi: complex, params: PhysicalParams) -> complex:
    """B_l = hbar^2 (l^2 - k2^2) / 2m + V0 phi_l."""
    lsq = ksq(l, params) if isinstance(l, LatticeVector) else float(np.dot(l, l))
    k2sq = ksq(k2, params) if isinstance(k2, LatticeVector) else float(np.dot(k2, k2))
    b = params.kinetic(lsq - k2sq) + V0 * phi
    return b.real if isinstance(b, complex) and b.imag == 0 else b


def assemble(C: np.ndarray, D: np.ndarray, V0: float) -> np.ndarray:
    """M from its blocks; works on single (2,2) blocks or stacks (..., 2, 2)."""
    eye = np.broadcast_to(np.eye(2), C.shape)
    top = np.concatenate([C, -V0 * eye], axis=-1)
    bottom = np.concatenate([D, -C], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


@dataclass
class VariationalBlock:
    k1: LatticeVector
    k2: LatticeVector
    l: LatticeVector
    l1: LatticeVector
    V0: float
    phi_l: complex
    phi_l1: complex
    B_l: complex
    B_l1: complex
    C: np.ndarray
    D: np.ndarray
    M: np.ndarray
    complex_phi: bool = False


def build_block(k1, k2, l, V0: float, params: PhysicalParams, phi_map: dict | None = None) -> VariationalBlock:
    k1, k2, l = as_lattice(k1), as_lattice(k2), as_lattice(l)
    if l == -k2:
        raise ExcludedMode(f"l = -k2 = {tuple(l)} is excluded")
    l1 = l + k2.scaled(2)
    cflag = False
    phis = []
    for q in (l, l1):
        if phi_map is not None and q in phi_map:
            val = complex(phi_map[q])
            cflag |= val.imag != 0
        else:
            val, flag = phi_limit(k2, q, V0, params)
            cflag |= flag
        phis.append(val)
    phi_l, phi_l1 = phis if cflag else (phis[0].real, phis[1].real)
    B_l = b_coeff(l, k2, V0, phi_l, params)
    B_l1 = b_coeff(l1, k2, V0, phi_l1, params)
    dtype = complex if cflag else float
    C = np.array([[B_l, V0], [V0, B_l1]], dtype=dtype)
    D = V0 * np.array([[2 * phi_l, phi_l + phi_l1], [phi_l + phi_l1, 2 * phi_l1]], dtype=dtype)
    return VariationalBlock(
        k1=k1, k2=k2, l=l, l1=l1, V0=V0, phi_l=phi_l, phi_l1=phi_l1,
        B_l=B_l, B_l1=B_l1, C=C, D=D, M=assemble(C, D, V0), complex_phi=cflag,
    )


def selection_rule(vec) -> bool:
    """|u1|^2 + |u2|^2 - |v1|^2 - |v2|^2 > 0."""
    vec = np.asarray(vec)
    return bool(np.sum(np.abs(vec[:2]) ** 2) - np.sum(np.abs(vec[2:]) ** 2) > 0)


@dataclass(frozen=True)
class QuasiparticleBranch:
    series: int
    k1: LatticeVector
    k2: LatticeVector
    l: LatticeVector
    lam_tilde: complex
    lam: complex
    sign: int
    selected: bool
    complex_flag: bool


@dataclass
class BlockSpectrum:
    block: VariationalBlock
    lam_tilde: np.ndarray
    vectors: np.ndarray
    mu: np.ndarray
    branches: list = field(default_factory=list)

    @property
    def selected(self):
        return [b for b in self.branches if b.selected]


def drift(k1, k2, l, params: PhysicalParams) -> float:
    """hbar^2 k1.(k2 + l) / m."""
    k1v = wavevector(k1, params)
    return params.hbar**2 * float(k1v @ (wavevector(k2, params) + wavevector(l, params))) / params.m


def _reduction_error(lt: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """Largest distance from each lt^2 to the nearest mu (stack-aware)."""
    d = np.abs(lt[..., :, None] ** 2 - mu[..., None, :])
    return d.min(axis=-1).max(axis=-1)


def eigen_block(block: VariationalBlock, params: PhysicalParams) -> BlockSpectrum:
    """Diagonalise M directly and cross-check against C^2 - V0 D."""
    M, C, D, V0 = block.M, block.C, block.D, block.V0
    lt, vecs = np.linalg.eig(M)
    red = C @ C - V0 * D
    mu = np.linalg.eigvalsh(red) if not np.iscomplexobj(red) else np.linalg.eigvals(red)
    scale = max(np.abs(M).max(), 1e-300)
    resid = np.linalg.norm(M @ vecs - vecs * lt, axis=0).max()
    if resid > RESIDUAL_RTOL * np.linalg.norm(M, 2):
        raise NonConvergence(
            f"eigenpair residual {resid:.3e} at l = {tuple(block.l)}",
            detail={"cond": float(np.linalg.cond(vecs))},
        )
    err = _reduction_error(lt, mu)
    if err > EIG_RTOL * scale**2:
        raise NonConvergence(
            f"eig(M)^2 and eig(C^2 - V0 D) disagree by {err:.3e} at l = {tuple(block.l)}",
            detail={"cond": float(np.linalg.cond(vecs))},
        )
    shift = drift(block.k1, block.k2, block.l, params)
    order = np.argsort(-np.abs(mu))  # series 1 <-> larger |mu|
    branches = []
    for i in range(4):
        x = lt[i]
        series = 1 + int(np.argmin(np.abs(x**2 - mu[order])))
        is_cplx = abs(x.imag) > 1e-12 * scale or block.complex_phi
        ref = x.real if abs(x.real) > abs(x.imag) else x.imag
        branches.append(
            QuasiparticleBranch(
                series=series,
                k1=block.k1,
                k2=block.k2,
                l=block.l,
                lam_tilde=complex(x),
                lam=complex(x - shift),
                sign=1 if ref >= 0 else -1,
                selected=selection_rule(vecs[:, i]),
                complex_flag=bool(is_cplx),
            )
        )
    return BlockSpectrum(block=block, lam_tilde=lt, vectors=vecs, mu=mu, branches=branches)


class Variant(str, Enum):
    LITERAL = "literal"
    CORRECTED = "corrected"


def closed_form_branches(k1, k2, l, V0: float, params: PhysicalParams, variant: Variant | str = Variant.CORRECTED):
    """The two printed branch formulas lambda_1, lambda_2.

    ``literal`` evaluates the inner root as printed, sqrt((l^2 - l1^2) +
    4 m V0 / hbar^2), which mixes squared and unsquared quantities.
    ``corrected`` uses sqrt((l^2 - l1^2)^2 + (4 m V0 / hbar^2)^2); at k2 = 0
    its first branch is exactly the Bogoliubov energy. Signs follow the
    printed rule: branch 1 takes + iff l^2 > k2^2, branch 2 takes + iff
    l1^2 > k2^2. Results are complex when a radicand is negative.
    """
    variant = Variant(variant)
    k1, k2, l = as_lattice(k1), as_lattice(k2), as_lattice(l)
    l1 = l + k2.scaled(2)
    h2m = params.hbar**2 / params.m
    a, b, c = ksq(l, params), ksq(l1, params), ksq(k2, params)
    g = 4 * params.m * V0 / params.hbar**2
    inner = cmath.sqrt((a - b) + g) if variant is Variant.LITERAL else cmath.sqrt((a - b) ** 2 + g**2)
    base = c * c + a * a / 2 + b * b / 2 - c * (a + b)
    half = (a + b - 2 * c) / 2
    shift = drift(k1, k2, l, params)
    s1 = 1 if a > c else -1
    s2 = 1 if b > c else -1
    lam1 = -shift + s1 * (h2m / 2) * cmath.sqrt(base + half * inner)
    lam2 = -shift + s2 * (h2m / 2) * cmath.sqrt(base - half * inner)
    return lam1, lam2


@dataclass
class ScanResult:
    """Batched spectra over a lattice patch; arrays are indexed [block, branch]."""

    k1: LatticeVector
    k2: LatticeVector
    ns: np.ndarray
    lam_tilde: np.ndarray
    lam: np.ndarray
    selected: np.ndarray
    complex_flag: np.ndarray
    mu: np.ndarray
    reduction_error: float
    trace_error: float

    def __len__(self):
        return len(self.ns)


def scan(
    k1,
    k2,
    V0: float,
    params: PhysicalParams,
    cutoff: int,
    longitudinal_cutoff: int | None = 0,
) -> ScanResult:
    """Vectorised :func:`eigen_block` over the patch, skipping l = -k2."""
    k1, k2 = as_lattice(k1), as_lattice(k2)
    ns = lattice_array(cutoff, longitudinal_cutoff)
    ns = ns[~np.all(ns == -np.array(k2), axis=1)]
    if len(ns) == 0:
        raise EmptyScan("no lattice vectors l != -k2 within the cutoff")
    n1s = ns + 2 * np.array(k2)
    phi_l, cl = phi_limit_many(k2, ns, V0, params)
    phi_l1, cl1 = phi_limit_many(k2, n1s, V0, params)
    cphi = cl | cl1
    ls, l1s = wavevectors(ns, params), wavevectors(n1s, params)
    k2sq = ksq(k2, params)
    B_l = params.kinetic(np.sum(ls**2, axis=1) - k2sq) + V0 * phi_l
    B_l1 = params.kinetic(np.sum(l1s**2, axis=1) - k2sq) + V0 * phi_l1
    n = len(ns)
    C = np.empty((n, 2, 2), complex)
    C[:, 0, 0], C[:, 1, 1] = B_l, B_l1
    C[:, 0, 1] = C[:, 1, 0] = V0
    D = np.empty((n, 2, 2), complex)
    D[:, 0, 0], D[:, 1, 1] = 2 * V0 * phi_l, 2 * V0 * phi_l1
    D[:, 0, 1] = D[:, 1, 0] = V0 * (phi_l + phi_l1)
    M = assemble(C, D, V0)
    lt, vecs = np.linalg.eig(M)
    mu = np.linalg.eigvals(C @ C - V0 * D)
    scale = np.abs(M).reshape(n, -1).max(axis=1)
    red = _reduction_error(lt, mu) / scale**2
    tr = np.abs(lt.sum(axis=1)) / scale
    norms = np.sum(np.abs(vecs[:, :2, :]) ** 2, axis=1) - np.sum(np.abs(vecs[:, 2:, :]) ** 2, axis=1)
    k1v = wavevector(k1, params)
    shift = params.hbar**2 * ((ls + wavevector(k2, params)) @ k1v) / params.m
    cflag = (np.abs(lt.imag) > 1e-12 * scale[:, None]) | cphi[:, None]
    return ScanResult(
        k1=k1,
        k2=k2,
        ns=ns,
        lam_tilde=lt,
        lam=lt - shift[:, None],
        selected=norms > 0,
        complex_flag=cflag,
        mu=mu,
        reduction_error=float(red.max()),
        trace_error=float(tr.max()),
    )


class SeriesKind(str, Enum):
    BOGOLIUBOV = "bogoliubov"
    METASTABLE = "metastable"
    UNSTABLE = "unstable"


@dataclass
class Classification:
    kind: SeriesKind
    metastable: bool
    min_selected: float
    evidence: list


def classify_series(
    k1,
    k2,
    V0: float,
    params: PhysicalParams,
    cutoff: int = 8,
    longitudinal_cutoff: int | None = None,
    max_evidence: int = 20,
) -> Classification:
    """Decide whether the pair series (k1, k2) is metastable.

    k2 = 0 is the Bogoliubov series: its spectrum is eps(l) - hbar^2 k1.l/m,
    metastable iff that is nonnegative over the patch. For k2 != 0 the
    selected branches of every 4x4 block are scanned; a negative selected
    energy or any complex branch makes the series unstable. Evidence lists
    (l, lambda) pairs, most negative first.
    """
    k1, k2 = as_lattice(k1), as_lattice(k2)
    if k2.is_zero:
        ns = lattice_array(cutoff, longitudinal_cutoff)
        ns = ns[np.any(ns != 0, axis=1)]
        if len(ns) == 0:
            raise EmptyScan("no nonzero l within the cutoff")
        ls = wavevectors(ns, params)
        lam = epsilon(np.sum(ls**2, axis=1), V0, params) - params.hbar**2 * (ls @ wavevector(k1, params)) / params.m
        order = np.argsort(lam, kind="stable")
        bad = [(tuple(map(int, ns[i])), float(lam[i])) for i in order if lam[i] < 0][:max_evidence]
        return Classification(SeriesKind.BOGOLIUBOV, not bad, float(lam[order[0]]), bad)
    res = scan(k1, k2, V0, params, cutoff, longitudinal_cutoff)
    lam = res.lam.real
    neg = res.selected & ~res.complex_flag & (lam < 0)
    real_sel = res.selected & ~res.complex_flag
    min_sel = float(lam[real_sel].min()) if real_sel.any() else float("nan")
    rows, cols = np.nonzero(neg)
    order = np.argsort(lam[rows, cols], kind="stable")
    evidence = [(tuple(map(int, res.ns[rows[i]])), float(lam[rows[i], cols[i]])) for i in order[:max_evidence]]
    if len(evidence) < max_evidence:
        crow = np.nonzero(res.complex_flag.any(axis=1))[0][: max_evidence - len(evidence)]
        evidence += [(tuple(map(int, res.ns[i])), "complex") for i in crow]
    unstable = bool(neg.any() or res.complex_flag.any())
    kind = SeriesKind.UNSTABLE if unstable else SeriesKind.METASTABLE
    return Classification(kind, not unstable, min_sel, evidence)
