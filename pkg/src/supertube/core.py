"""Units, box geometry and the wave-vector lattice.

The box is L1 x L2 x L2; axis 0 runs along the tube. Wave vectors live on
the lattice 2*pi*(n1/L1, n2/L2, n3/L2).
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .errors import InvalidParams

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PhysicalParams:
    hbar: float = 1.0
    m: float = 1.0
    L1: float = 20.0
    L2: float = 1.0
    N: int = 1000

    def __post_init__(self):
        for name in ("hbar", "m", "L1", "L2"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
                raise InvalidParams(f"{name} must be a positive finite number, got {val!r}")
        if int(self.N) != self.N or self.N < 1:
            raise InvalidParams(f"N must be an integer >= 1, got {self.N!r}")

    @property
    def h(self) -> float:
        """Planck's constant, always 2*pi*hbar."""
        return TWO_PI * self.hbar

    @property
    def elongated(self) -> bool:
        return self.L1 >= 10.0 * self.L2

    @property
    def volume(self) -> float:
        return self.L1 * self.L2 * self.L2

    def kinetic(self, ksq):
        """hbar^2 k^2 / 2m for a squared wave number (scalar or array)."""
        return self.hbar**2 * ksq / (2.0 * self.m)


class LatticeVector(NamedTuple):
    n1: int
    n2: int
    n3: int

    def __neg__(self):
        return LatticeVector(-self.n1, -self.n2, -self.n3)

    def __add__(self, other):
        return LatticeVector(self.n1 + other[0], self.n2 + other[1], self.n3 + other[2])

    def __sub__(self, other):
        return LatticeVector(self.n1 - other[0], self.n2 - other[1], self.n3 - other[2])

    def scaled(self, c: int) -> "LatticeVector":
        return LatticeVector(c * self.n1, c * self.n2, c * self.n3)

    @property
    def is_zero(self) -> bool:
        return self.n1 == 0 and self.n2 == 0 and self.n3 == 0

    @property
    def is_transverse(self) -> bool:
        return self.n1 == 0

    @property
    def is_longitudinal(self) -> bool:
        return self.n2 == 0 and self.n3 == 0


def as_lattice(n) -> LatticeVector:
    if isinstance(n, LatticeVector):
        return n
    a, b, c = n
    return LatticeVector(int(a), int(b), int(c))


def wavevector(n, p: PhysicalParams) -> np.ndarray:
    n = as_lattice(n)
    return TWO_PI * np.array([n.n1 / p.L1, n.n2 / p.L2, n.n3 / p.L2])


def ksq(n, p: PhysicalParams) -> float:
    """|k|^2 for a lattice vector, evaluated without forming the vector."""
    n = as_lattice(n)
    return TWO_PI**2 * (n.n1**2 / p.L1**2 + (n.n2**2 + n.n3**2) / p.L2**2)


class NormKey:
    """Exact integer keys proportional to |k|^2 on the lattice of ``p``.

    L1 and L2 are taken as the exact binary fractions of their float values,
    so two lattice vectors get equal keys iff their |k|^2 agree exactly for
    that box. Used wherever floating-point ties would be ambiguous (branch
    selection at l^2 = k^2, exact resonance).
    """

    def __init__(self, p: PhysicalParams):
        f1 = Fraction(p.L1) ** 2
        f2 = Fraction(p.L2) ** 2
        den = math.lcm(f1.denominator, f2.denominator)
        # |k|^2 (L1 L2)^2 / (2 pi)^2 = n1^2 L2^2 + (n2^2 + n3^2) L1^2
        self.w1 = int(f2 * den)
        self.w23 = int(f1 * den)

    def __call__(self, n) -> int:
        n1, n2, n3 = (int(c) for c in n)
        return n1 * n1 * self.w1 + (n2 * n2 + n3 * n3) * self.w23

    def many(self, ns) -> list:
        return [self(row) for row in np.asarray(ns).tolist()]


def compare_norms(a, b, p: PhysicalParams) -> int:
    """Sign of |a|^2 - |b|^2 for lattice vectors, computed exactly."""
    key = NormKey(p)
    d = key(a) - key(b)
    return (d > 0) - (d < 0)


def flow_velocity(k1, p: PhysicalParams) -> np.ndarray:
    return p.hbar * np.asarray(k1, dtype=float) / p.m


def lattice(cutoff: int, longitudinal_cutoff: int | None = None) -> Iterator[LatticeVector]:
    """All n-triples with |n1| <= longitudinal_cutoff, |n2|,|n3| <= cutoff.

    Iteration order is lexicographic in (n1, n2, n3). ``longitudinal_cutoff``
    defaults to ``cutoff`` (a cube).
    """
    if longitudinal_cutoff is None:
        longitudinal_cutoff = cutoff
    r1 = range(-longitudinal_cutoff, longitudinal_cutoff + 1)
    r = range(-cutoff, cutoff + 1)
    for t in itertools.product(r1, r, r):
        yield LatticeVector(*t)


def lattice_array(cutoff: int, longitudinal_cutoff: int | None = None) -> np.ndarray:
    """Integer array of shape (M, 3), same order as :func:`lattice`."""
    if longitudinal_cutoff is None:
        longitudinal_cutoff = cutoff
    r1 = np.arange(-longitudinal_cutoff, longitudinal_cutoff + 1)
    r = np.arange(-cutoff, cutoff + 1)
    g = np.stack(np.meshgrid(r1, r, r, indexing="ij"), axis=-1)
    return g.reshape(-1, 3)


def wavevectors(ns: np.ndarray, p: PhysicalParams) -> np.ndarray:
    """Vectorised :func:`wavevector` over an (M, 3) integer array."""
    scale = TWO_PI / np.array([p.L1, p.L2, p.L2])
    return np.asarray(ns, dtype=float) * scale


@dataclass
class DispersionCurve:
    """Samples (lattice vector, |k|, energy) of one quasiparticle series."""

    series: str
    ns: np.ndarray
    k_abs: np.ndarray
    energy: np.ndarray
    selected: np.ndarray | None = None
    complex_flag: np.ndarray | None = None

    def __len__(self):
        return len(self.ns)
