"""Conformal IFS models of hyperbolic Cantor sets and their dimensions.

Branches are similarity contractions of the unit interval, optionally coded
by a subshift restricting admissible compositions. Conformality reduces the
expanding derivative to the scalar 1/ratio per branch, so Bowen's equation
becomes a root problem for the pressure of -t times the log-expansion
potential; the Moran equation and dyadic box counting provide independent
oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import RootBracketError
from .numerics import bisect_decreasing
from .potentials import Potential, PotentialSequence, additive_sequence
from .pressure import perron_pressure
from .symbolic import BranchSystem, SubshiftOfFiniteType, saturate_pressure

_GEOM_TOL = 1e-12


@dataclass(frozen=True)
class IFSBranch:
    ratio: float
    offset: float

    def __post_init__(self):
        if not 0 < self.ratio < 1:
            raise ValueError("contraction ratio must lie in (0, 1)")
        if self.offset < -_GEOM_TOL or self.offset + self.ratio > 1 + _GEOM_TOL:
            raise ValueError("branch image must be contained in [0, 1]")

    @property
    def image(self) -> tuple[float, float]:
        return (self.offset, self.offset + self.ratio)


@dataclass(frozen=True, eq=False)
class ConformalIFS:
    """Finitely many similarity contractions with an optional coding subshift.

    ``separated`` asserts pairwise disjoint branch images (verified to 1e-12);
    systems with touching images are accepted but only box counting is
    meaningful for them. ``expanding_dim`` is the integer dimension multiplier
    for products of one-dimensional models.
    """

    branches: tuple
    coding: SubshiftOfFiniteType | None = None
    separated: bool = True
    expanding_dim: int = 1

    def __post_init__(self):
        branches = tuple(b if isinstance(b, IFSBranch) else IFSBranch(*b)
                         for b in self.branches)
        if not branches:
            raise ValueError("at least one branch required")
        object.__setattr__(self, "branches", branches)
        coding = self.coding
        if coding is None:
            coding = SubshiftOfFiniteType.full_shift(len(branches))
            object.__setattr__(self, "coding", coding)
        if coding.alphabet_size != len(branches):
            raise ValueError("coding alphabet must match branch count")
        if self.expanding_dim < 1:
            raise ValueError("expanding_dim must be a positive integer")
        if self.separated:
            images = sorted(b.image for b in branches)
            for (_, hi), (lo, _) in zip(images, images[1:]):
                if lo < hi - _GEOM_TOL:
                    raise ValueError(
                        "branch images overlap; unset the separation flag")

    @property
    def ratios(self) -> tuple:
        return tuple(b.ratio for b in self.branches)


@dataclass(frozen=True)
class BowenRoot:
    """Root of a pressure-in-t equation with its certificate."""

    t_star: float
    residual: float
    bracket: tuple

    def __post_init__(self):
        lo, hi = self.bracket
        if not lo <= self.t_star <= hi:
            raise ValueError("root must lie in its bracket")
        if hi - lo > 1e-10 + 1e-12:
            raise ValueError("bracket wider than contract allows")
        if self.residual > 1e-9:
            raise ValueError("residual above the 1e-9 contract")


def bowen_root(pressure_fn, t_hi: float | None = None, *,
               width_tol: float = 5e-11, residual_tol: float = 1e-9,
               probe_count: int = 5) -> BowenRoot:
    """Unique zero of a monotone decreasing pressure function of t >= 0.

    Verifies the sign condition pressure_fn(0) >= 0 >= pressure_fn(T)
    (doubling T from 1 when not supplied) and non-increase along probe
    points, then bisects to a bracket of width <= 1e-10 and re-evaluates the
    residual at the root.
    """
    p0 = pressure_fn(0.0)
    if p0 < 0:
        raise RootBracketError(f"pressure at t=0 is negative ({p0}); no root in [0, T]")
    if t_hi is None:
        t_hi = 1.0
        for _ in range(60):
            if pressure_fn(t_hi) <= 0:
                break
            t_hi *= 2
        else:
            raise RootBracketError("no sign change found while doubling T")
    elif pressure_fn(t_hi) > 0:
        raise RootBracketError(f"pressure at T={t_hi} is positive; no root in [0, T]")
    probes = np.linspace(0.0, t_hi, probe_count)
    values = [pressure_fn(float(t)) for t in probes]
    for a, b in zip(values, values[1:]):
        if b > a + 1e-12:
            raise RootBracketError("non-monotone probe pattern")
    root, bracket = bisect_decreasing(pressure_fn, 0.0, float(t_hi),
                                      width_tol=width_tol)
    residual = abs(pressure_fn(root))
    if residual > residual_tol:
        raise RootBracketError(f"residual {residual} above tolerance at root")
    return BowenRoot(root, residual, bracket)


def moran_root(ratios, tol: float = 1e-12) -> float:
    """Unique s >= 0 with sum of ratios**s equal to 1."""
    ratios = [float(r) for r in ratios]
    if not ratios:
        raise ValueError("at least one ratio required")
    if any(not 0 < r < 1 for r in ratios):
        raise ValueError("ratios must lie in (0, 1)")

    def fn(s: float) -> float:
        return sum(r ** s for r in ratios) - 1.0

    hi = 1.0
    for _ in range(200):
        if fn(hi) <= 0:
            break
        hi *= 2
    root, _ = bisect_decreasing(fn, 0.0, hi)
    if abs(fn(root)) > tol:
        raise RuntimeError("Moran root residual above tolerance")
    return root


def unstable_potential(ifs: ConformalIFS) -> tuple[Potential, PotentialSequence]:
    """The log-expansion potential log J = expanding_dim * (-log ratio).

    Returns the range-1 table on the coding subshift together with its
    additive sequence embedding (Birkhoff sums along code words).
    """
    table = {}
    for row in np.arange(ifs.coding.alphabet_size).reshape(-1, 1):
        s = int(row[0])
        table[(s,)] = ifs.expanding_dim * (-math.log(ifs.branches[s].ratio))
    phi = Potential(ifs.coding, 1, table)
    return phi, additive_sequence(phi, name="log-expansion")


def ifs_dimension(ifs: ConformalIFS) -> BowenRoot:
    """Dimension of the attractor via the pressure root P(-t log J) = 0.

    Needs the separation flag; with full-shift coding the root coincides with
    the Moran exponent of the ratio list.
    """
    if not ifs.separated:
        raise ValueError("dimension via the pressure root needs separated images")
    phi, _ = unstable_potential(ifs)

    def pressure_fn(t: float) -> float:
        return perron_pressure(ifs.coding, phi.scaled(-t))

    return bowen_root(pressure_fn, t_hi=float(ifs.expanding_dim))


@dataclass(frozen=True)
class BoxDimensionEstimate:
    estimate: float
    scales: tuple             # (j, box count at size 2^-j)
    depth: int


def box_dimension(ifs: ConformalIFS, depth: int,
                  max_intervals: int = 2 ** 22) -> BoxDimensionEstimate:
    """Dyadic box-counting estimate of the attractor dimension.

    The attractor is covered by composition intervals refined until their
    length is at most 2^-depth; N(j) counts the dyadic boxes of size 2^-j
    meeting the cover and the estimate is the least-squares slope of log N(j)
    against j log 2 over the finer half of the scales.
    """
    if depth > 24:
        raise ValueError("depth capped at 24")
    if depth < 2:
        raise ValueError("depth must be >= 2")
    finest = 2.0 ** (-depth)
    intervals: list[tuple[float, float]] = []
    stack = [(b.offset, b.ratio, s) for s, b in enumerate(ifs.branches)]
    while stack:
        x, length, symbol = stack.pop()
        if length <= finest:
            intervals.append((x, x + length))
            continue
        for child in ifs.coding.successors(symbol):
            b = ifs.branches[child]
            stack.append((x + b.offset * length, b.ratio * length, child))
        if len(stack) + len(intervals) > max_intervals:
            raise ValueError("interval cover exceeds the configured budget")
    lows = np.array([a for a, _ in intervals])
    highs = np.array([b for _, b in intervals])
    scales = []
    for j in range(1, depth + 1):
        boxes = 2 ** j
        lo_idx = np.floor(lows * boxes).astype(np.int64)
        hi_idx = np.minimum(np.floor(highs * boxes).astype(np.int64), boxes - 1)
        order = np.argsort(lo_idx, kind="stable")
        count, reach = 0, -1
        for a, b in zip(lo_idx[order], hi_idx[order]):
            if a > reach:
                count += b - a + 1
                reach = b
            elif b > reach:
                count += b - reach
                reach = b
        scales.append((j, count))
    half = [(j, c) for j, c in scales if j >= math.ceil(depth / 2)]
    xs = np.array([j * math.log(2) for j, _ in half])
    ys = np.array([math.log(c) for _, c in half])
    slope = float(np.polyfit(xs, ys, 1)[0]) if len(half) > 1 else 0.0
    return BoxDimensionEstimate(estimate=slope, scales=tuple(scales), depth=depth)


def _edge_key(system: SubshiftOfFiniteType) -> set:
    return {(system.labels[i], system.labels[j]) for i, j in system.edges()}


def dimension_lower_bound(ifs: ConformalIFS, chain) -> list[BowenRoot]:
    """Bowen roots along a nested chain of coded subsystems or horseshoes.

    The chain must be strictly increasing (edge inclusion for subsystems of
    the coding, branch inclusion for branch systems); the roots are then
    non-decreasing and bounded by the full system's dimension, both of which
    are asserted.
    """
    phi, _ = unstable_potential(ifs)
    chain = list(chain)
    if not chain:
        raise ValueError("empty chain")
    for prev, nxt in zip(chain, chain[1:]):
        if isinstance(prev, SubshiftOfFiniteType) and isinstance(nxt, SubshiftOfFiniteType):
            if not _edge_key(prev) < _edge_key(nxt):
                raise ValueError("chain is not strictly increasing by edge inclusion")
        elif isinstance(prev, BranchSystem) and isinstance(nxt, BranchSystem):
            prev_words = {b.word.symbols for b in prev.branches}
            nxt_words = {b.word.symbols for b in nxt.branches}
            if not prev_words < nxt_words:
                raise ValueError("chain is not strictly increasing by branch inclusion")
        else:
            raise ValueError("chain elements must be of one kind")
    roots: list[BowenRoot] = []
    for element in chain:
        if isinstance(element, SubshiftOfFiniteType):
            if not element.is_irreducible():
                raise ValueError("chain subsystems must be irreducible")
            label = element.labels
            table = {(s,): phi.value((label[s],))
                     for s in range(element.alphabet_size)}
            restricted = Potential(element, 1, table)

            def pressure_fn(t: float, sub=element, tab=restricted) -> float:
                return perron_pressure(sub, tab.scaled(-t))
        else:
            def pressure_fn(t: float, bs=element) -> float:
                return saturate_pressure(bs, phi.scaled(-t))

        roots.append(bowen_root(pressure_fn, t_hi=float(ifs.expanding_dim)))
    for a, b in zip(roots, roots[1:]):
        if b.t_star < a.t_star - 1e-12:
            raise AssertionError("roots decreased along a nested chain")
    if ifs.separated:
        full = ifs_dimension(ifs)
        if roots[-1].t_star > full.t_star + 1e-9:
            raise AssertionError("chain root exceeds the full-system dimension")
    return roots
