"""Transverse pair-field series.

A stationary pair state is indexed by a longitudinal wave vector k1 (the
flow) and a transverse wave vector k2 (the standing wave across the tube):

    Phi+(x, y) = exp(-i k1 (x+y)) cos(k2 (x-y)) / |T|
    Phi (x, y) = sum_l phi_l exp(i k1 (x+y)) exp(i l (x-y)) / |T|

Each coefficient phi_l is the smaller-magnitude root of
phi^2 + b_l phi + 1/4 = 0.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core import (
    LatticeVector,
    NormKey,
    PhysicalParams,
    as_lattice,
    ksq,
    lattice,
    wavevector,
)
from .errors import NotTransverse, TruncationDominates, ZeroDenominator
from .potential import FourierTable, limit_table

# Interaction weight of the Fourier-projected stationary equations. Weight 2
# is the one for which the eigenvalue Omega = hbar^2/m (k1^2+k2^2) + v_0 +
# v_2k2 and the coefficients phi_l solve both projected equations; weight 1
# (the naive single-count projection) contradicts Omega
# already at l = k2.
INTERACTION_WEIGHT = 2.0


class PhiValue(NamedTuple):
    phi: complex
    complex_branch: bool


def _sq(k, params) -> float:
    if isinstance(k, LatticeVector):
        return ksq(k, params)
    k = np.asarray(k, dtype=float)
    return float(k @ k)


def _cmp(l, k2, params) -> int:
    """Sign of l^2 - k2^2; exact on the lattice, 1e-12 relative otherwise."""
    if isinstance(l, LatticeVector) and isinstance(k2, LatticeVector):
        key = NormKey(params)
        d = key(l) - key(k2)
        return (d > 0) - (d < 0)
    a, b = _sq(l, params), _sq(k2, params)
    if abs(a - b) <= 1e-12 * max(a, b, 1e-300):
        return 0
    return 1 if a > b else -1


def root(b: float, sign: int) -> PhiValue:
    """-b/2 + sign * sqrt(b^2 - 1)/2, with the complex square root when |b| < 1."""
    disc = b * b - 1.0
    if disc >= 0:
        r = math.sqrt(disc)
        if sign * b > 0:
            # the requested root is the small one: avoid the cancellation in -b + sign r
            return PhiValue(complex(-0.5 / (b + sign * r)), False)
        return PhiValue(complex((-b + sign * r) / 2), False)
    return PhiValue(-b / 2 + sign * cmath.sqrt(disc) / 2, True)


def b_limit(k2, l, V0: float, params: PhysicalParams) -> float:
    return params.hbar**2 * (_sq(l, params) - _sq(k2, params)) / (2 * params.m * V0) - 1.0


def phi_limit(k2, l, V0: float, params: PhysicalParams) -> PhiValue:
    """Coefficient phi_{k2,l} in the N -> infinity limit.

    Plus root for l^2 > k2^2, minus root for l^2 < k2^2, exactly 1/2 on the
    sphere l^2 = k2^2.
    """
    c = _cmp(l, k2, params)
    if c == 0:
        return PhiValue(0.5 + 0j, False)
    return root(b_limit(k2, l, V0, params), c)


def phi_limit_many(k2: LatticeVector, ns, V0: float, params: PhysicalParams):
    """Vectorised :func:`phi_limit` over an (M, 3) integer array of l.

    Returns (phi, complex_branch) arrays.
    """
    ns = np.asarray(ns)
    key = NormKey(params)
    k2key = key(k2)
    sign = np.sign(np.array([key(row) - k2key for row in ns.tolist()], dtype=np.int64))
    s1 = 2 * np.pi / np.array([params.L1, params.L2, params.L2])
    lsq = np.sum((ns * s1) ** 2, axis=1)
    b = params.hbar**2 * (lsq - ksq(k2, params)) / (2 * params.m * V0) - 1.0
    disc = (b * b - 1.0).astype(complex)
    r = sign * np.sqrt(disc)
    small = (sign * b > 0) & (b * b >= 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(small, -0.5 / (b + r), (-b + r) / 2)
    phi = np.where(sign == 0, 0.5 + 0j, phi)
    cplx = (b * b < 1.0) & (sign != 0)
    return phi, cplx


def b_finite(k2: LatticeVector, l: LatticeVector, table: FourierTable) -> float:
    """b_l = (hbar^2/m (l^2 - k2^2) - (v_0 + v_2k2)) / (v_{l-k2} + v_{l+k2}).

    As v_q -> V0 this tends to hbar^2 (l^2 - k2^2) / (2 m V0) - 1, the limit
    coefficient; the two forms are the same formula.
    """
    p = table.params
    k2, l = as_lattice(k2), as_lattice(l)
    den = table[l - k2] + table[l + k2]
    if abs(den) <= 1e-14 * abs(table.v_zero):
        raise ZeroDenominator(f"v_(l-k2) + v_(l+k2) = {den!r} at l = {tuple(l)}", l=l)
    num = p.hbar**2 * (ksq(l, p) - ksq(k2, p)) / p.m - (table.v_zero + table[k2.scaled(2)])
    return num / den


def phi_finiteN(k2: LatticeVector, l: LatticeVector, table: FourierTable) -> PhiValue:
    k2, l = as_lattice(k2), as_lattice(l)
    if l == k2 or l == -k2:
        return PhiValue(0.5 + 0j, False)
    b = b_finite(k2, l, table)
    c = _cmp(l, k2, table.params)
    if c == 0:
        # off the +-k2 pair but on the same sphere: keep the smaller root
        r1, r2 = root(b, 1), root(b, -1)
        return r1 if abs(r1.phi) <= abs(r2.phi) else r2
    return root(b, c)


def omega(k1, k2, table: FourierTable) -> float:
    """Omega = hbar^2/m (k1^2 + k2^2) + v_0 + v_2k2."""
    p = table.params
    k2l = as_lattice(k2) if not isinstance(k2, np.ndarray) else None
    v2 = table[k2l.scaled(2)] if k2l is not None else table.at(2 * np.asarray(k2))
    return p.hbar**2 * (_sq(k1, p) + _sq(k2, p)) / p.m + table.v_zero + v2


def leading_energy(k1, k2, p: PhysicalParams, V0: float) -> float:
    """E = N (hbar^2 (k1^2 + k2^2) / 2m + V0/2)."""
    return p.N * (p.kinetic(_sq(k1, p) + _sq(k2, p)) + V0 / 2)


@dataclass
class PairSeriesState:
    k1: LatticeVector
    k2: LatticeVector
    phi: dict
    omega: float
    energy: float
    cutoff: int
    longitudinal_cutoff: int = 0
    complex_flags: dict = field(default_factory=dict)
    source: str = "limit"
    flowing: bool = True

    def coeff(self, l) -> complex:
        l = as_lattice(l)
        if l == self.k2 or l == -self.k2:
            return self.phi.get(l, 0.5 + 0j)
        return self.phi.get(l, 0j)

    @property
    def any_complex(self) -> bool:
        return any(self.complex_flags.values())


def build_state(
    k1,
    k2,
    table: FourierTable,
    cutoff: int = 32,
    longitudinal_cutoff: int = 0,
    phi_source: str | None = None,
) -> PairSeriesState:
    """Pair state (k1, k2) with phi_l filled over the lattice patch.

    ``phi_source`` picks the coefficient formula ('limit' or 'finiteN') and
    defaults to the table's mode.
    """
    k1, k2 = as_lattice(k1), as_lattice(k2)
    p = table.params
    source = phi_source or table.mode
    phi, flags = {}, {}
    for l in lattice(cutoff, longitudinal_cutoff):
        if source == "limit":
            val = phi_limit(k2, l, table.v0_limit, p)
        else:
            val = phi_finiteN(k2, l, table)
        phi[l], flags[l] = val.phi, val.complex_branch
    return PairSeriesState(
        k1=k1,
        k2=k2,
        phi=phi,
        omega=omega(k1, k2, table),
        energy=leading_energy(k1, k2, p, table.v0_limit),
        cutoff=cutoff,
        longitudinal_cutoff=longitudinal_cutoff,
        complex_flags=flags,
        source=source,
        flowing=not k1.is_zero,
    )


def standing_wave_family(k, p: PhysicalParams, V0: float, cutoff: int = 32) -> PairSeriesState:
    """The non-flowing (k1 = 0) state with transverse wave vector ``k``."""
    k = as_lattice(k)
    if not k.is_transverse:
        raise NotTransverse(f"k = {tuple(k)} has a longitudinal component")
    state = build_state(LatticeVector(0, 0, 0), k, limit_table(V0, p), cutoff=cutoff, phi_source="limit")
    state.flowing = False
    return state


def normalization_check(state: PairSeriesState) -> float:
    """Integral of Phi+ Phi over T x T, evaluated in Fourier space.

    Phi+ carries weight 1/2 on each of +-k2 (weight 1 on the single mode
    when k2 = 0); integrating against Phi picks phi_{-+k2}.
    """
    if state.k2.is_zero:
        val = state.coeff(state.k2)
    else:
        val = (state.coeff(state.k2) + state.coeff(-state.k2)) / 2
    return float(val.real)


def pair_fields(state: PairSeriesState, p: PhysicalParams):
    """Callables (Phi+, Phi) on point arrays of shape (..., 3)."""
    vol = p.volume
    k1 = wavevector(state.k1, p)
    k2 = wavevector(state.k2, p)
    ls = np.array([wavevector(l, p) for l in state.phi])
    cs = np.array(list(state.phi.values()))

    def phi_plus(x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        return np.exp(-1j * (x + y) @ k1) * np.cos((x - y) @ k2) / vol

    def phi(x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        waves = np.exp(1j * (x - y) @ ls.T) @ cs
        return np.exp(1j * (x + y) @ k1) * waves / vol

    return phi_plus, phi


def normalization_quadrature(state: PairSeriesState, p: PhysicalParams, points: tuple | None = None) -> complex:
    """Integral of Phi+ Phi over T x T by the periodic trapezoid rule in x and y.

    ``points`` is the grid size (longitudinal, transverse) per axis; the
    default resolves every retained mode, so the result equals the Fourier
    value up to rounding.
    """
    n1_max = max(abs(state.k1.n1), state.longitudinal_cutoff)
    nt_max = state.cutoff + max(abs(state.k2.n2), abs(state.k2.n3))
    m1, mt = points or (2 * n1_max + 2, nt_max + 2)
    ax1 = np.arange(m1) * p.L1 / m1
    axt = np.arange(mt) * p.L2 / mt
    grid = np.stack(np.meshgrid(ax1, axt, axt, indexing="ij"), axis=-1).reshape(-1, 3)
    cell = p.volume / len(grid)
    phi_plus, phi = pair_fields(state, p)
    total = 0j
    for x in grid:
        xs = np.broadcast_to(x, grid.shape)
        total += np.sum(phi_plus(xs, grid) * phi(xs, grid))
    return total * cell * cell


@dataclass(frozen=True)
class Residual:
    max: float
    interior: float
    boundary: float
    worst_mode: LatticeVector


def residual_7aa(
    state: PairSeriesState,
    table: FourierTable,
    weight: float = INTERACTION_WEIGHT,
    floor: float = 1e-8,
) -> Residual:
    """Residual of the Fourier-projected stationary pair equations.

    First equation, one per retained l:
        Omega phi_l = hbar^2/m (k1^2 + l^2) phi_l
                      + weight * sum_s c_s v_{l - s k2} (phi_l phi_-l + phi_sk2 phi_-sk2)
    Second equation, one per mode t k2 of Phi+:
        Omega c_t = hbar^2/m (k1^2 + k2^2) c_t
                    + 2 weight * sum_s c_s c_t phi_-tk2 v_{(s+t) k2}
    with c_s = 1/2 on s = +-1 (c = 1 when k2 = 0). Both sides scale out k1,
    which enters only through Omega and the kinetic term. Omega is taken
    from the table, so with phi from the same table the residual is rounding
    noise, while phi from a different table measures the mismatch.

    Returns max |LHS - RHS| / |Omega|, split into interior modes and modes on
    the cutoff boundary.
    """
    p = table.params
    k1, k2 = state.k1, state.k2
    om = omega(k1, k2, table)
    kin = p.hbar**2 / p.m
    k1sq = ksq(k1, p)
    signs = (1,) if k2.is_zero else (1, -1)
    c = 1.0 if k2.is_zero else 0.5

    def on_boundary(l):
        edge = max(abs(l.n2), abs(l.n3)) == state.cutoff
        return edge or (state.longitudinal_cutoff > 0 and abs(l.n1) == state.longitudinal_cutoff)

    interior, boundary = 0.0, 0.0
    worst, worst_l = -1.0, LatticeVector(0, 0, 0)
    for l, phi_l in state.phi.items():
        rhs = kin * (k1sq + ksq(l, p)) * phi_l
        for s in signs:
            sk2 = k2.scaled(s)
            rhs += weight * c * table[l - sk2] * (phi_l * state.coeff(-l) + state.coeff(sk2) * state.coeff(-sk2))
        r = abs(om * phi_l - rhs) / abs(om)
        if on_boundary(l):
            boundary = max(boundary, r)
        else:
            interior = max(interior, r)
        if r > worst:
            worst, worst_l = r, l
    for t in signs:
        tk2 = k2.scaled(t)
        rhs = kin * (k1sq + ksq(k2, p)) * c
        for s in signs:
            rhs += 2 * weight * c * c * state.coeff(-tk2) * table[k2.scaled(s + t)]
        r = abs(om * c - rhs) / abs(om)
        interior = max(interior, r)
        if r > worst:
            worst, worst_l = r, tk2
    if boundary > floor and boundary > 1e3 * interior:
        raise TruncationDominates(
            f"boundary residual {boundary:.3e} exceeds interior {interior:.3e} by more than 1e3"
        )
    return Residual(max=max(interior, boundary), interior=interior, boundary=boundary, worst_mode=worst_l)
