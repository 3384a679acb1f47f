"""Pair potential, its box Fourier coefficients and the limit constant V0.

The interaction between two bosons is N * V(N^(1/3) x) with V even and of
compact support. Both shapes offered here are isotropic, so every
three-dimensional integral over the support ball reduces exactly to a
radial integral, which is what the quadrature evaluates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import integrate

from .core import LatticeVector, PhysicalParams, as_lattice, ksq, lattice
from .errors import BoundViolated, NonRepulsive, SupportExceedsBox

QUAD_RTOL = 1e-10  # comfortably inside the 1e-8 contract


class Shape(str, Enum):
    TOPHAT = "tophat"
    BUMP = "bump"


@dataclass(frozen=True)
class PotentialSpec:
    shape: Shape = Shape.TOPHAT
    A: float = 40.0
    a: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "shape", Shape(self.shape))
        if not self.a > 0:
            raise ValueError(f"support radius must be positive, got {self.a!r}")

    def __call__(self, r):
        """V at distance r (scalar or array) in the scaled variable."""
        r = np.abs(np.asarray(r, dtype=float))
        if self.shape is Shape.TOPHAT:
            return np.where(r <= self.a, self.A, 0.0)
        t = np.clip(1.0 - (r / self.a) ** 2, 1e-300, None)
        return np.where(r < self.a, self.A * np.exp(-1.0 / t), 0.0)


def _radial_transform(spec: PotentialSpec, kappa: float, rtol: float = QUAD_RTOL) -> float:
    """Integral of exp(-i kappa.xi) V(|xi|) over R^3, with |kappa| = kappa."""
    if kappa == 0.0:
        f = lambda r: r * r * float(spec(r))
    else:
        f = lambda r: r * r * float(spec(r)) * np.sinc(kappa * r / math.pi)
    # the number of sign changes of sinc on [0, a] sets the subdivision budget
    limit = 100 + int(4 * kappa * spec.a / math.pi)
    val, _ = integrate.quad(f, 0.0, spec.a, epsabs=0.0, epsrel=rtol, limit=limit)
    return 4.0 * math.pi * val


def v0_limit(spec: PotentialSpec, p: PhysicalParams, allow_attractive: bool = False) -> float:
    v0 = _radial_transform(spec, 0.0) / p.volume
    if v0 <= 0 and not allow_attractive:
        raise NonRepulsive(f"V0 = {v0!r} <= 0; the Bogoliubov spectrum needs V0 > 0")
    return v0


def check_support(spec: PotentialSpec, p: PhysicalParams) -> None:
    scaled = spec.a / p.N ** (1.0 / 3.0)
    if scaled > min(p.L1, p.L2) / 2:
        raise SupportExceedsBox(
            f"scaled support a/N^(1/3) = {scaled:g} exceeds half the smallest box side "
            f"{min(p.L1, p.L2) / 2:g}"
        )


def fourier_coeff(spec: PotentialSpec, p: PhysicalParams, q) -> float:
    """Box Fourier coefficient v_q of N V(N^(1/3) x).

    ``q`` is either a LatticeVector / integer triple or a 3-vector of wave
    numbers. After xi = N^(1/3) x the factor N cancels the Jacobian.
    """
    check_support(spec, p)
    if isinstance(q, LatticeVector) or (
        len(q) == 3 and all(isinstance(c, (int, np.integer)) for c in q)
    ):
        qabs = math.sqrt(ksq(q, p))
    else:
        qabs = float(np.linalg.norm(q))
    kappa = qabs / p.N ** (1.0 / 3.0)
    return _radial_transform(spec, kappa) / p.volume


@dataclass
class FourierTable:
    """Fourier coefficients on a finite patch of the lattice.

    In ``limit`` mode no coefficients are stored and every lookup returns
    V0, the N -> infinity value. In ``finiteN`` mode lookups outside the
    stored patch also fall back to V0.
    """

    params: PhysicalParams
    v0_limit: float
    spec: PotentialSpec | None = None
    mode: str = "limit"
    entries: dict = field(default_factory=dict)

    def __getitem__(self, n) -> float:
        if self.mode == "limit":
            return self.v0_limit
        return self.entries.get(as_lattice(n), self.v0_limit)

    get = __getitem__

    @property
    def v_zero(self) -> float:
        """The q = 0 coefficient actually used by the table."""
        return self[LatticeVector(0, 0, 0)]

    def values(self, ns) -> np.ndarray:
        """Lookup over an (M, 3) integer array."""
        ns = np.asarray(ns)
        if self.mode == "limit":
            return np.full(len(ns), self.v0_limit)
        return np.array([self[tuple(row)] for row in ns], dtype=float)

    def at(self, q) -> float:
        """Coefficient at an arbitrary wave vector (not necessarily on the lattice)."""
        if self.mode == "limit" or self.spec is None:
            return self.v0_limit
        return fourier_coeff(self.spec, self.params, np.asarray(q, dtype=float))

    def max_deviation(self) -> float:
        """max over stored q of |v_q - V0|."""
        if not self.entries:
            return 0.0
        return max(abs(v - self.v0_limit) for v in self.entries.values())


def limit_table(v0: float, p: PhysicalParams) -> FourierTable:
    """A table in which every coefficient equals ``v0``."""
    if v0 <= 0:
        raise NonRepulsive(f"V0 = {v0!r} <= 0; the Bogoliubov spectrum needs V0 > 0")
    return FourierTable(params=p, v0_limit=float(v0), mode="limit")


def build_table(
    spec: PotentialSpec,
    p: PhysicalParams,
    cutoff: int = 32,
    longitudinal_cutoff: int = 0,
    mode: str = "finiteN",
    rtol: float = QUAD_RTOL,
) -> FourierTable:
    """Fill a table on the patch |n1| <= longitudinal_cutoff, |n2|,|n3| <= cutoff.

    V is isotropic, so v_q depends on |q|^2 only; one quadrature is done per
    distinct (n1^2, n2^2 + n3^2).
    """
    if mode not in ("limit", "finiteN"):
        raise ValueError(f"unknown mode {mode!r}")
    v0 = v0_limit(spec, p)
    table = FourierTable(params=p, v0_limit=v0, spec=spec, mode=mode)
    if mode == "limit":
        return table
    check_support(spec, p)
    cache = {}
    scale = p.N ** (1.0 / 3.0)
    for n in lattice(cutoff, longitudinal_cutoff):
        key = (n.n1 * n.n1, n.n2 * n.n2 + n.n3 * n.n3)
        if key not in cache:
            cache[key] = _radial_transform(spec, math.sqrt(ksq(n, p)) / scale, rtol) / p.volume
        table.entries[n] = cache[key]
    return table


def bound_check(table: FourierTable, rtol: float = 1e-9) -> float:
    """Check |v_q| <= v_0 over the stored entries; return max |v_q| / v_0.

    ``rtol`` absorbs quadrature noise; anything beyond it is reported as a
    violation.
    """
    v_zero = table.v_zero
    worst, worst_q = 1.0, LatticeVector(0, 0, 0)
    for n, v in table.entries.items():
        ratio = abs(v) / v_zero
        if ratio > worst:
            worst, worst_q = ratio, n
    if worst > 1.0 + rtol:
        raise BoundViolated(f"|v_q|/v_0 = {worst!r} at q = {tuple(worst_q)}", q=worst_q)
    return worst
