"""Markov measures, free energy, equilibrium states and basic-set suprema.

Order-1 Markov measures on the symbol graph are the base class; equilibrium
states of range-r potentials are order-(r-1) Markov and are represented as
order-1 chains on (r-1)-blocks via block recoding, which is lossless for
locally constant potentials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.special import logsumexp

from .errors import EmptyBranchSetError, ReducibleSystemError
from .numerics import perron_left_vector, perron_value_vector
from .potentials import Potential, PotentialSequence, additive_sequence
from .pressure import (PressureEstimate, _evaluate_rows, _lexmin_extension,
                       sequence_table, sequence_pressure, snap_epsilon,
                       weighted_block_matrix)
from .symbolic import (BranchSystem, SubshiftOfFiniteType, Word,
                       cyclic_extension, first_return_horseshoe,
                       saturate_pressure, transitive_subsystems, word_matrix)

_TOL = 1e-12


def _stationary_vector(transition: np.ndarray) -> np.ndarray:
    k = transition.shape[0]
    system = np.vstack([transition.T - np.eye(k), np.ones((1, k))])
    rhs = np.concatenate([np.zeros(k), [1.0]])
    pi, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    return pi


@dataclass(frozen=True, eq=False)
class MarkovMeasure:
    """A stationary Markov chain supported on the admissible transitions.

    ``block_length > 1`` marks a chain living on the b-block recoding of
    ``base_sft``; ``block_words`` then names each block symbol.
    """

    sft: SubshiftOfFiniteType
    transition: np.ndarray
    stationary: np.ndarray
    block_length: int = 1
    block_words: tuple | None = None
    base_sft: SubshiftOfFiniteType | None = None

    def __post_init__(self):
        p = np.asarray(self.transition, dtype=float)
        pi = np.asarray(self.stationary, dtype=float)
        k = self.sft.alphabet_size
        if p.shape != (k, k) or pi.shape != (k,):
            raise ValueError("transition/stationary shapes must match the subshift")
        if np.abs(p.sum(axis=1) - 1.0).max() > _TOL:
            raise ValueError("rows must sum to 1")
        if (p < 0).any() or (pi < -_TOL).any():
            raise ValueError("probabilities must be nonnegative")
        if ((p > 0) & (self.sft.transitions == 0)).any():
            raise ValueError("measure charges an inadmissible transition")
        if abs(pi.sum() - 1.0) > _TOL:
            raise ValueError("stationary vector must sum to 1")
        if np.abs(pi @ p - pi).max() > _TOL:
            raise ValueError("stationary vector is not invariant")
        p.flags.writeable = False
        pi.flags.writeable = False
        object.__setattr__(self, "transition", p)
        object.__setattr__(self, "stationary", pi)

    @classmethod
    def from_transition(cls, sft: SubshiftOfFiniteType, transition,
                        stationary=None, **kwargs) -> "MarkovMeasure":
        p = np.asarray(transition, dtype=float)
        pi = _stationary_vector(p) if stationary is None else np.asarray(stationary)
        return cls(sft, p, pi, **kwargs)

    @classmethod
    def bernoulli(cls, sft: SubshiftOfFiniteType, probs) -> "MarkovMeasure":
        probs = np.asarray(probs, dtype=float)
        p = np.tile(probs, (sft.alphabet_size, 1))
        return cls(sft, p, probs.copy())

    def cylinder_mass(self, symbols) -> float:
        syms = symbols.symbols if isinstance(symbols, Word) else tuple(symbols)
        mass = self.stationary[syms[0]]
        for a, b in zip(syms, syms[1:]):
            mass *= self.transition[a, b]
        return float(mass)

    def cylinder_masses(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.int64)
        masses = self.stationary[rows[:, 0]].copy()
        for j in range(rows.shape[1] - 1):
            masses *= self.transition[rows[:, j], rows[:, j + 1]]
        return masses


def entropy_rate(mu: MarkovMeasure) -> float:
    """Kolmogorov-Sinai entropy -sum pi_i P_ij log P_ij (0 log 0 = 0)."""
    p = mu.transition
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    return float(-(mu.stationary @ plogp.sum(axis=1)))


def block_system(sft: SubshiftOfFiniteType, b: int):
    """The b-block recoding: a subshift on admissible b-words.

    Returns ``(block_sft, block_words)`` with blocks in lexicographic order;
    block B can follow block A exactly when they overlap in b-1 symbols and
    the combined (b+1)-word is admissible.
    """
    blocks = [tuple(int(s) for s in row) for row in word_matrix(sft, b)]
    index = {w: i for i, w in enumerate(blocks)}
    t = np.zeros((len(blocks), len(blocks)), dtype=np.int8)
    for i, w in enumerate(blocks):
        for s in sft.successors(w[-1]):
            t[i, index[w[1:] + (s,)]] = 1
    return SubshiftOfFiniteType(t, tuple(blocks)), tuple(blocks)


def integrate(mu: MarkovMeasure, phi: Potential, cap: int | None = None) -> float:
    """Exact integral of a range-r potential against a Markov measure."""
    if mu.block_length == 1:
        rows = word_matrix(mu.sft, phi.r, cap)
        masses = mu.cylinder_masses(rows)
        values = phi._flat[phi._window_codes(rows.astype(np.int64))][:, 0]
        return float(masses @ values)
    b = mu.block_length
    if phi.r > b + 1:
        raise ValueError(
            f"range-{phi.r} potential needs order >= {phi.r - 1}, measure has {b}")
    total = 0.0
    if phi.r <= b:
        for i, block in enumerate(mu.block_words):
            total += mu.stationary[i] * phi.value(block[:phi.r])
    else:
        index = {w: i for i, w in enumerate(mu.block_words)}
        for i, block in enumerate(mu.block_words):
            for j in np.flatnonzero(mu.transition[i]):
                word = block + (mu.block_words[int(j)][-1],)
                total += mu.stationary[i] * mu.transition[i, j] * phi.value(word)
    return float(total)


def free_energy(mu: MarkovMeasure, phi: Potential) -> float:
    """h(mu) + integral of phi d(mu), the measure-theoretical pressure."""
    return entropy_rate(mu) + integrate(mu, phi)


def equilibrium_measure(sft: SubshiftOfFiniteType, phi: Potential,
                        tol: float = 1e-13) -> tuple[MarkovMeasure, float]:
    """The Gibbs chain from Perron eigendata and its free energy.

    For a range-r potential on an irreducible subshift the equilibrium state
    is the order-(r-1) Markov chain P_ij = M_ij v_j / (lambda v_i) built from
    the weighted block matrix M with right eigenvector v and left eigenvector
    u; its free energy equals the topological pressure log(lambda).
    """
    if not sft.is_irreducible():
        raise ReducibleSystemError("equilibrium measure needs an irreducible system")
    matrix, states = weighted_block_matrix(sft, phi)
    lam, right = perron_value_vector(matrix, tol)
    left = perron_left_vector(matrix, tol)
    dense = matrix.toarray()
    p = dense * right[None, :] / (lam * right[:, None])
    p = p / p.sum(axis=1, keepdims=True)
    pi = left * right
    pi = pi / pi.sum()
    b = max(phi.r - 1, 1)
    if b == 1:
        mu = MarkovMeasure(sft, p, pi)
    else:
        blocked, words = block_system(sft, b)
        mu = MarkovMeasure(blocked, p, pi, block_length=b,
                           block_words=words, base_sft=sft)
    return mu, free_energy(mu, phi)


# ---------------------------------------------------------------------------
# ergodic optimization: maximum mean cycle


def _karp_max_mean(nc: int, src: np.ndarray, dst: np.ndarray,
                   weight: np.ndarray) -> float:
    d = np.full((nc + 1, nc), -np.inf)
    d[0] = 0.0
    for k in range(1, nc + 1):
        row = np.full(nc, -np.inf)
        np.maximum.at(row, dst, d[k - 1][src] + weight)
        d[k] = row
    best = -np.inf
    spans = nc - np.arange(nc)
    for v in range(nc):
        if not np.isfinite(d[nc, v]):
            continue
        finite = np.isfinite(d[:nc, v])
        ratios = (d[nc, v] - d[:nc, v][finite]) / spans[finite]
        best = max(best, float(ratios.min()))
    return best


def max_mean_cycle(sft: SubshiftOfFiniteType, phi: Potential) -> float:
    """sup over invariant measures of the integral of phi.

    Equals the maximum over cycles of the mean edge weight on the weighted
    block digraph (Karp's algorithm per strongly connected component).
    """
    matrix, states = weighted_block_matrix(sft, phi)
    coo = matrix.tocoo()
    src, dst = coo.row, coo.col
    weight = np.log(coo.data)
    pattern = sp.coo_matrix((np.ones_like(src), (src, dst)),
                            shape=matrix.shape).tocsr()
    n_comp, labels = connected_components(pattern, connection="strong")
    best = None
    for comp in range(n_comp):
        nodes = np.flatnonzero(labels == comp)
        mask = np.isin(src, nodes) & np.isin(dst, nodes)
        if not mask.any():
            continue
        relabel = -np.ones(matrix.shape[0], dtype=int)
        relabel[nodes] = np.arange(len(nodes))
        value = _karp_max_mean(len(nodes), relabel[src[mask]],
                               relabel[dst[mask]], weight[mask])
        best = value if best is None else max(best, value)
    if best is None:
        raise ReducibleSystemError("weighted block digraph has no cycle")
    return best


def simple_cycles(sft: SubshiftOfFiniteType) -> list[tuple]:
    """All simple cycles of the symbol digraph, canonically rotated."""
    k = sft.alphabet_size
    cycles = set()

    def walk(start, path, seen):
        for nxt in sft.successors(path[-1]):
            if nxt == start:
                rot = min(tuple(path[i:] + path[:i]) for i in range(len(path)))
                cycles.add(rot)
            elif nxt > start and nxt not in seen:
                walk(start, path + [nxt], seen | {nxt})

    for s in range(k):
        if sft.transitions[s, s]:
            cycles.add((s,))
        walk(s, [s], {s})
    return sorted(cycles)


@dataclass(frozen=True)
class HyperbolicGap:
    """Gap between sequence pressure and the best ergodic average.

    ``mean_upper`` is a rigorous upper bound on sup over invariant measures of
    the rate integral (minimum over n of the max mean cycle of phi_n / n, for
    subadditive kinds); ``cycle_estimate`` is the best finite-stage rate over
    periodic cycle measures, a lower-leaning witness. The verdict compares the
    gap against ``tolerance``; a positive gap forces near-optimal measures to
    carry entropy.
    """

    gap: float
    verdict: bool
    pressure: PressureEstimate
    mean_upper: float
    cycle_estimate: float
    tolerance: float


def hyperbolic_gap(sft: SubshiftOfFiniteType, seq: PotentialSequence,
                   n_max: int, tolerance: float = 1e-6,
                   cap: int | None = None) -> HyperbolicGap:
    estimate = sequence_pressure(sft, seq, n_max, cap)
    means = []
    for n in range(1, n_max + 1):
        table = sequence_table(sft, seq, n, cap)
        means.append(max_mean_cycle(sft, table))
    if seq.kind == "superadditive":
        mean_upper = max(means)
    else:
        mean_upper = min(means)
    cycle_estimate = -math.inf
    for cycle in simple_cycles(sft):
        m = n_max * len(cycle)
        ext = cyclic_extension(cycle, m + seq.lookahead)
        cycle_estimate = max(cycle_estimate, seq.evaluate(ext, m) / m)
    gap = estimate.value - mean_upper
    return HyperbolicGap(gap=gap, verdict=gap > tolerance, pressure=estimate,
                         mean_upper=mean_upper, cycle_estimate=cycle_estimate,
                         tolerance=tolerance)


# ---------------------------------------------------------------------------
# spanning free energy


def _greedy_cover(masses: np.ndarray, log_costs: np.ndarray,
                  alpha: float) -> np.ndarray:
    """Indices of a low-cost family with total mass >= alpha.

    Greedy by cost/mass ratio, then an unnecessary-item drop pass and
    single-swap exchange passes until stable.
    """
    slack = 1e-12
    costs = np.exp(log_costs)
    with np.errstate(divide="ignore"):
        ratio = np.where(masses > 0, costs / np.where(masses > 0, masses, 1.0),
                         np.inf)
    order = np.lexsort((np.arange(len(masses)), ratio))
    chosen: list[int] = []
    mass = 0.0
    for idx in order:
        if mass >= alpha - slack:
            break
        if masses[idx] <= 0:
            continue
        chosen.append(int(idx))
        mass += masses[idx]
    if mass < alpha - slack:
        raise ValueError("total available mass below alpha")
    for _ in range(20):
        changed = False
        for i in sorted(chosen, key=lambda j: -costs[j]):
            if mass - masses[i] >= alpha - slack:
                chosen.remove(i)
                mass -= masses[i]
                changed = True
        selected = set(chosen)
        outside = [j for j in range(len(masses)) if j not in selected]
        for i in sorted(chosen, key=lambda j: -costs[j]):
            swaps = [j for j in outside
                     if costs[j] < costs[i] - slack
                     and mass - masses[i] + masses[j] >= alpha - slack]
            if swaps:
                j = min(swaps, key=lambda j: (costs[j], j))
                chosen[chosen.index(i)] = j
                outside.remove(j)
                outside.append(i)
                mass += masses[j] - masses[i]
                changed = True
        if not changed:
            break
    return np.array(sorted(chosen), dtype=int)


def spanning_free_energy(sft: SubshiftOfFiniteType, mu: MarkovMeasure,
                         phi: Potential, epsilon: float, n: int, alpha: float,
                         cap: int | None = None) -> PressureEstimate:
    """Free energy from minimal-cost partial spanning families.

    Over the (n+m)-cylinders with their Markov masses, selects a family of
    total mass at least alpha minimizing the weighted sum of exp(S_n phi) and
    reports (1/n) log of the minimized sum. Selection is greedy-with-exchange
    on the cost/mass ratio (exact in the equal-cost and equal-mass cases;
    certified against brute force on small instances in the test suite).
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    snapped, m = snap_epsilon(epsilon)
    seq = additive_sequence(phi)
    diagnostics = []
    last_selected = 0
    for i in range(1, n + 1):
        rows = word_matrix(sft, i + m, cap)
        masses = mu.cylinder_masses(rows)
        reps = _lexmin_extension(sft, rows, seq.lookahead - m)
        log_costs = _evaluate_rows(seq, reps, i)
        chosen = _greedy_cover(masses, log_costs, alpha)
        diagnostics.append((i, float(logsumexp(log_costs[chosen])) / i))
        last_selected = len(chosen)
    return PressureEstimate(
        value=diagnostics[-1][1], method="spanning-free-energy",
        params={"n": n, "epsilon": snapped, "m": m, "alpha": alpha,
                "selection": "greedy-exchange", "selected": last_selected},
        diagnostics=tuple(diagnostics))


def _bruteforce_cover(masses: np.ndarray, log_costs: np.ndarray,
                      alpha: float) -> float:
    """Optimal cover cost by exhaustion; certification oracle for tests."""
    if len(masses) > 22:
        raise ValueError("brute force certification limited to 22 items")
    costs = np.exp(log_costs)
    best = math.inf
    for bits in range(1, 2 ** len(masses)):
        mask = [(bits >> j) & 1 for j in range(len(masses))]
        if np.dot(mask, masses) >= alpha - 1e-12:
            best = min(best, float(np.dot(mask, costs)))
    return math.log(best)


# ---------------------------------------------------------------------------
# genericity and the supremum over basic sets


def generic_branches(bs: BranchSystem, mu: MarkovMeasure, rho: float = 0.05,
                     depth: int = 2) -> BranchSystem:
    """Branches whose loop statistics are rho-close to the measure.

    The test functions are the indicators of the depth-cylinders; a branch
    passes when every cyclic occurrence frequency along its loop word is
    within rho of the corresponding cylinder mass. Default depth 2 gives
    k^2 test functions (4 on a binary alphabet).
    """
    k = bs.sft.alphabet_size
    codes_count = k ** depth
    masses = np.zeros(codes_count)
    for row in word_matrix(bs.sft, depth):
        code = 0
        for s in row:
            code = code * k + int(s)
        masses[code] = mu.cylinder_mass(tuple(int(s) for s in row))
    keep = []
    for branch in bs.branches:
        w = branch.word.symbols
        ext = cyclic_extension(w, len(w) + depth - 1)
        counts = np.zeros(codes_count)
        for j in range(len(w)):
            code = 0
            for s in ext[j:j + depth]:
                code = code * k + s
            counts[code] += 1
        freqs = counts / len(w)
        if np.abs(freqs - masses).max() <= rho + 1e-12:
            keep.append(branch)
    if not keep:
        raise EmptyBranchSetError(
            f"no branch is ({rho}, depth-{depth})-generic for the measure")
    return BranchSystem(bs.sft, bs.base, tuple(keep), bs.window)


def restrict_sequence(seq: PotentialSequence,
                      sub: SubshiftOfFiniteType) -> PotentialSequence:
    """View a sequence on a subsystem by relabeling symbols to the parent."""
    label = np.array(sub.labels, dtype=np.int64)

    def evaluator(symbols: tuple, n: int) -> float:
        return seq._evaluator(tuple(int(label[s]) for s in symbols), n)

    out = PotentialSequence(sub, seq.kind, evaluator, bound=seq.bound,
                            lookahead=seq.lookahead,
                            name=f"{seq.name}|sub", audit_samples=0)
    if seq.additive_table is not None:
        phi = seq.additive_table
        table = {tuple(int(s) for s in row):
                 phi.value(tuple(int(label[s]) for s in row))
                 for row in word_matrix(sub, phi.r)}
        out.additive_table = Potential(sub, phi.r, table)
    return out


@dataclass(frozen=True)
class BasicSetSupremum:
    value: float
    witness_kind: str         # "subsystem" or "horseshoe"
    witness: object
    full_value: float
    gap: float
    candidates: tuple         # (kind, key, value), deterministic order


def sup_over_basic_sets(sft: SubshiftOfFiniteType, seq: PotentialSequence,
                        n_max: int, *, include_subsystems: bool = True,
                        include_horseshoes: bool = True,
                        horseshoe_base=None,
                        horseshoe_windows=tuple((n, 1.0) for n in range(2, 9)),
                        subsystem_max: int | None = None,
                        cap: int | None = None) -> BasicSetSupremum:
    """Maximize sequence pressure over computable basic-set stand-ins.

    Candidates are (i) the irreducible subsystems, each scored by its exact
    sequence pressure at horizon n_max, and (ii) first-return horseshoes
    through ``horseshoe_base`` (default: the cylinder of the smallest symbol)
    for the given (n, rho) window schedule, scored by their saturate
    pressure with per-branch sequence weights. Returns the best value, its
    witness and the gap to the full system's sequence pressure.
    """
    full_value = sequence_pressure(sft, seq, n_max, cap).value
    candidates: list[tuple[str, tuple, float, object]] = []
    if include_subsystems:
        for sub in transitive_subsystems(sft, max_count=subsystem_max, cap=cap):
            key = tuple(sorted((sub.labels[i], sub.labels[j])
                               for i, j in sub.edges()))
            value = sequence_pressure(sub, restrict_sequence(seq, sub),
                                      n_max, cap).value
            candidates.append(("subsystem", key, value, sub))
    if include_horseshoes:
        base = horseshoe_base if horseshoe_base is not None else sft.word([0])
        for n, rho in horseshoe_windows:
            try:
                bs = first_return_horseshoe(sft, base, n, rho, cap=cap)
            except EmptyBranchSetError:
                continue
            value = saturate_pressure(bs, seq)
            candidates.append(("horseshoe", (n, bs.window), value, bs))
    if not candidates:
        raise ValueError("no basic-set candidates were produced")
    ordered = sorted(candidates, key=lambda c: (-c[2], c[0], repr(c[1])))
    kind, key, value, witness = ordered[0]
    return BasicSetSupremum(
        value=value, witness_kind=kind, witness=witness,
        full_value=full_value, gap=full_value - value,
        candidates=tuple((c[0], c[1], c[2]) for c in candidates))
