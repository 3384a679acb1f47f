"""Resonance between the flowing Bogoliubov series and the transverse pair series,
and the resulting critical velocity min(v_landau, 2 pi hbar / (m L2)).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from .bogoliubov import landau_velocity
from .core import TWO_PI, LatticeVector, NormKey, PhysicalParams, as_lattice, ksq
from .errors import EmptyScan, NotLongitudinal
from .pairseries import leading_energy
from .potential import FourierTable


def flow_energy(k0, p: PhysicalParams, V0: float) -> float:
    """Leading energy N (hbar^2 k0^2 / 2m + V0/2) of the flowing condensate."""
    if isinstance(k0, LatticeVector) or (len(k0) == 3 and all(isinstance(c, (int, np.integer)) for c in k0)):
        k0 = as_lattice(k0)
        if not k0.is_longitudinal:
            raise NotLongitudinal(f"k0 = {tuple(k0)} is not along the tube")
        k0sq = ksq(k0, p)
    else:
        k0 = np.asarray(k0, dtype=float)
        if k0[1] != 0 or k0[2] != 0:
            raise NotLongitudinal(f"k0 = {k0.tolist()} is not along the tube")
        k0sq = float(k0 @ k0)
    return p.N * (p.kinetic(k0sq) + V0 / 2)


def min_metastable_energy(p: PhysicalParams, V0: float) -> float:
    return p.N * (p.hbar**2 * TWO_PI**2 / (2 * p.m * p.L2**2) + V0 / 2)


def geometric_critical_velocity(p: PhysicalParams) -> float:
    return TWO_PI * p.hbar / (p.m * p.L2)


@dataclass(frozen=True)
class ResonanceHit:
    k0: LatticeVector
    k1: LatticeVector
    k2: LatticeVector
    e_flow: float
    e_pair: float
    gap: float
    relative_gap: float


def _k0_range(p: PhysicalParams, v_max: float) -> int:
    # |hbar k0 / m| <= v_max  <=>  |n1| <= v_max m L1 / (2 pi hbar)
    return int(math.floor(v_max * p.m * p.L1 / (TWO_PI * p.hbar) * (1 + 1e-12)))


def resonance_scan(
    p: PhysicalParams,
    V0: float,
    v_max: float,
    tolerance: float = 1e-3,
    cutoff: int = 16,
) -> list[ResonanceHit]:
    """Flowing states k0 against non-flowing-or-flowing pair states (k1, k2 != 0).

    k0 = 2 pi (n1/L1, 0, 0) runs over 0 < |hbar k0/m| <= v_max. Pair states
    have k2 = 2 pi (0, n2, n3)/L2 with |n2|, |n3| <= cutoff, k2 != 0, and a
    longitudinal k1 bounded by the same velocity window (anything faster
    cannot match in energy). ``tolerance == 0`` selects exact resonance,
    k0^2 = k1^2 + k2^2, decided on exact integer keys. Hits are sorted by
    (gap, k0, k1, k2).
    """
    if not v_max > 0:
        raise ValueError("v_max must be positive")
    if not 0 <= tolerance < 1:
        raise ValueError("tolerance must lie in [0, 1)")
    nmax = _k0_range(p, v_max)
    if nmax < 1:
        raise EmptyScan(f"no nonzero longitudinal mode with |v| <= {v_max!r}")
    k0s = [LatticeVector(n, 0, 0) for n in range(-nmax, nmax + 1) if n != 0]
    r = range(-cutoff, cutoff + 1)
    pairs = [
        LatticeVector(n1, n2, n3)
        for n1 in range(-nmax, nmax + 1)
        for n2 in r
        for n3 in r
        if (n2, n3) != (0, 0)
    ]
    hits = []
    if tolerance == 0:
        key = NormKey(p)
        by_key = {}
        for q in pairs:
            by_key.setdefault(key(q), []).append(q)
        for k0 in k0s:
            for q in by_key.get(key(k0), []):
                e = flow_energy(k0, p, V0)
                ep = leading_energy(LatticeVector(q.n1, 0, 0), LatticeVector(0, q.n2, q.n3), p, V0)
                hits.append(ResonanceHit(k0, LatticeVector(q.n1, 0, 0), LatticeVector(0, q.n2, q.n3), e, ep, 0.0, 0.0))
    else:
        pn = np.array(pairs)
        pk = TWO_PI * pn / np.array([p.L1, p.L2, p.L2])
        e_pair = p.N * (p.kinetic(np.sum(pk**2, axis=1)) + V0 / 2)
        for k0 in k0s:
            e = flow_energy(k0, p, V0)
            gap = np.abs(e - e_pair)
            for i in np.nonzero(gap <= tolerance * e)[0]:
                q = pairs[i]
                hits.append(
                    ResonanceHit(
                        k0, LatticeVector(q.n1, 0, 0), LatticeVector(0, q.n2, q.n3),
                        e, float(e_pair[i]), float(gap[i]), float(gap[i] / e),
                    )
                )
    hits.sort(key=lambda h: (h.gap, h.k0, h.k1, h.k2))
    return hits


class Regime(str, Enum):
    GEOMETRY_LIMITED = "geometry_limited"
    LANDAU_LIMITED = "landau_limited"


@dataclass(frozen=True)
class CriticalVelocityReport:
    v_landau: float
    v_geometric: float
    v_critical: float
    regime: Regime
    continuum_bound: float
    landau_argmin: LatticeVector
    L2_interpretation: str = "L2 is the square cross-section side, read as the tube diameter (2R)"

    def as_dict(self) -> dict:
        d = asdict(self)
        d["regime"] = self.regime.value
        d["landau_argmin"] = list(self.landau_argmin)
        return d


def critical_velocity(
    p: PhysicalParams,
    table: FourierTable,
    cutoff: int = 32,
    longitudinal_cutoff: int | None = None,
) -> CriticalVelocityReport:
    landau = landau_velocity(table, cutoff, longitudinal_cutoff)
    v_geo = geometric_critical_velocity(p)
    geometry_limited = v_geo < landau.v_landau
    return CriticalVelocityReport(
        v_landau=landau.v_landau,
        v_geometric=v_geo,
        v_critical=min(landau.v_landau, v_geo),
        regime=Regime.GEOMETRY_LIMITED if geometry_limited else Regime.LANDAU_LIMITED,
        continuum_bound=landau.continuum_bound,
        landau_argmin=landau.argmin,
    )
