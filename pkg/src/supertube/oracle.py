"""Exact diagonalisation of a few-mode boson Hamiltonian in momentum space.

    H = sum_k hbar^2 k^2/2m n_k + 1/2 sum g_q a+_{k+q} a+_{k'-q} a_{k'} a_k

restricted to a finite mode set. The pair amplitude is g_q = v_q / N: v_q is
the box coefficient of N V(N^(1/3) x), the per-pair potential is
V(N^(1/3) x). Scattering that would leave the mode set is dropped.
"""
from __future__ import annotations

import itertools
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from .bogoliubov import epsilon
from .core import LatticeVector, PhysicalParams, as_lattice, ksq
from .errors import ModeSetNotClosed, NonConvergence
from .potential import FourierTable

MAX_MODES = 7
MAX_PARTICLES = 10
DENSE_LIMIT = 2000
MAX_DIM = 200_000


def workers() -> int:
    try:
        return max(1, int(os.environ.get("SUPERTUBE_THREADS", "1")))
    except ValueError:
        return 1


def fock_dimension(N: int, n_modes: int) -> int:
    return math.comb(N + n_modes - 1, n_modes - 1)


@dataclass
class FockBasis:
    modes: list
    N: int
    states: list = field(init=False)
    index: dict = field(init=False)
    momenta: list = field(init=False)

    def __post_init__(self):
        self.modes = [as_lattice(k) for k in self.modes]
        if len(set(self.modes)) != len(self.modes):
            raise ValueError("duplicate modes")
        if not 1 <= len(self.modes) <= MAX_MODES:
            raise ValueError(f"between 1 and {MAX_MODES} modes are supported")
        if not 1 <= self.N <= MAX_PARTICLES:
            raise ValueError(f"between 1 and {MAX_PARTICLES} particles are supported")
        M = len(self.modes)
        states = []
        for combo in itertools.combinations_with_replacement(range(M), self.N):
            occ = [0] * M
            for i in combo:
                occ[i] += 1
            states.append(tuple(occ))
        self.states = sorted(states, reverse=True)
        self.index = {s: i for i, s in enumerate(self.states)}
        ks = np.array(self.modes)
        self.momenta = [LatticeVector(*map(int, np.array(s) @ ks)) for s in self.states]

    def __len__(self):
        return len(self.states)

    def sectors(self) -> dict:
        """Total momentum -> array of basis indices, keys in sorted order."""
        out = {}
        for i, P in enumerate(self.momenta):
            out.setdefault(P, []).append(i)
        return {P: np.array(out[P]) for P in sorted(out)}


def _pair_channels(modes):
    """For each ordered (i, j): in-set targets (a, b) with k_a + k_b = k_i + k_j, and a dropped count."""
    pos = {k: n for n, k in enumerate(modes)}
    channels, dropped = {}, 0
    for i, j in itertools.product(range(len(modes)), repeat=2):
        K = modes[i] + modes[j]
        targets = []
        for a, ka in enumerate(modes):
            b = pos.get(K - ka)
            if b is None:
                dropped += 1
            else:
                targets.append((a, b))
        channels[i, j] = targets
    return channels, dropped


def pair_amplitude(table: FourierTable, q) -> float:
    return table[q] / table.params.N


def build_hamiltonian(basis: FockBasis, table: FourierTable) -> sp.csr_matrix:
    p = table.params
    if p.N != basis.N:
        raise ValueError(f"table was built for N = {p.N}, basis has N = {basis.N}")
    modes = basis.modes
    kin = np.array([p.kinetic(ksq(k, p)) for k in modes])
    channels, dropped = _pair_channels(modes)
    if dropped:
        warnings.warn(f"{dropped} out-of-set scattering channels dropped", ModeSetNotClosed, stacklevel=2)
    g = {}
    rows, cols, vals = [], [], []
    for c, state in enumerate(basis.states):
        occ = list(state)
        rows.append(c)
        cols.append(c)
        vals.append(float(kin @ np.array(occ)))
        for (i, j), targets in channels.items():
            ni = occ[i]
            if ni == 0:
                continue
            amp = math.sqrt(ni)
            occ[i] -= 1
            nj = occ[j]
            if nj == 0:
                occ[i] += 1
                continue
            amp *= math.sqrt(nj)
            occ[j] -= 1
            for a, b in targets:
                q = modes[a] - modes[i]
                if q not in g:
                    g[q] = pair_amplitude(table, q)
                if g[q] == 0.0:
                    continue
                occ[b] += 1
                amp2 = amp * math.sqrt(occ[b])
                occ[a] += 1
                amp2 *= math.sqrt(occ[a])
                rows.append(basis.index[tuple(occ)])
                cols.append(c)
                vals.append(0.5 * g[q] * amp2)
                occ[a] -= 1
                occ[b] -= 1
            occ[j] += 1
            occ[i] += 1
    n = len(basis)
    H = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    H.sum_duplicates()
    return ((H + H.T) * 0.5).tocsr()


@dataclass
class ExactSpectrum:
    sectors: dict
    eigenvalues: np.ndarray
    ground_energy: float
    ground_sector: LatticeVector
    excitation_gaps: list
    complete: dict


def _solve_sector(H, idx, k):
    block = H[idx][:, idx]
    n = len(idx)
    norm = max(abs(block).max(), 1e-300) if block.nnz else 1.0
    if n <= DENSE_LIMIT:
        dense = block.toarray()
        w, v = np.linalg.eigh(dense)
        resid = np.abs(dense @ v - v * w).max() if n else 0.0
        complete = True
    else:
        kk = min(k, n - 2)
        w, v = eigsh(block, k=kk, which="SA")
        order = np.argsort(w)
        w, v = w[order], v[:, order]
        resid = np.abs(block @ v - v * w).max()
        complete = False
    if resid > 1e-8 * norm * max(1.0, math.sqrt(n)):
        raise NonConvergence(f"residual {resid:.3e}", module="oracle")
    return w, complete


def diagonalize(H: sp.spmatrix, basis: FockBasis, k: int = 20) -> ExactSpectrum:
    """Spectrum per momentum sector: dense below DENSE_LIMIT states, Lanczos above."""
    if len(basis) > MAX_DIM:
        raise ValueError(f"dimension {len(basis)} exceeds {MAX_DIM}")
    H = sp.csr_matrix(H)
    secs = basis.sectors()
    labels = list(secs)
    with ThreadPoolExecutor(max_workers=workers()) as pool:
        results = list(pool.map(lambda P: _solve_sector(H, secs[P], k), labels))
    sectors = {P: r[0] for P, r in zip(labels, results)}
    complete = {P: r[1] for P, r in zip(labels, results)}
    ground_sector = min(labels, key=lambda P: (sectors[P][0], P))
    e0 = float(sectors[ground_sector][0])
    gaps = [(P, float(sectors[P][0] - e0)) for P in labels if P != ground_sector]
    return ExactSpectrum(
        sectors=sectors,
        eigenvalues=np.sort(np.concatenate(list(sectors.values()))),
        ground_energy=e0,
        ground_sector=ground_sector,
        excitation_gaps=gaps,
        complete=complete,
    )


def compare_bogoliubov(spectrum: ExactSpectrum, basis: FockBasis, table: FourierTable, density: str = "N") -> dict:
    """Exact gaps E1(q) - E0 against eps(q) with mean-field coupling rho * g_q.

    ``density`` is 'N' (rho = N, so rho g_q = v_q) or 'N-1'.
    """
    p = table.params
    rho = {"N": basis.N, "N-1": basis.N - 1}[density]
    zero = LatticeVector(0, 0, 0)
    e0 = float(spectrum.sectors[zero][0]) if zero in spectrum.sectors else spectrum.ground_energy
    rows = []
    for q in basis.modes:
        if q.is_zero or q not in spectrum.sectors:
            continue
        coupling = rho * pair_amplitude(table, q)
        eps = float(epsilon(ksq(q, p), coupling, p))
        gap = float(spectrum.sectors[q][0] - e0)
        rows.append(
            {
                "q": list(q),
                "exact_gap": gap,
                "epsilon": eps,
                "free_gap": float(p.kinetic(ksq(q, p))),
                "deviation": abs(gap - eps) / eps if eps else abs(gap),
            }
        )
    return {
        "density_convention": f"rho = {density}",
        "pair_amplitude": "g_q = v_q / N",
        "N": basis.N,
        "modes": [list(k) for k in basis.modes],
        "ground_energy": e0,
        "comparisons": rows,
        "max_deviation": max((r["deviation"] for r in rows), default=0.0),
    }
