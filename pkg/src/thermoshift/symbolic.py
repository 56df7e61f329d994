"""Subshifts of finite type, words, cylinders and first-return horseshoes.

The metric on the one-sided shift is fixed as d(x, y) = 2^(-j) where j is the
first index at which x and y disagree, so Bowen balls coincide with cylinders
of computable depth and every estimator in the package can work on finite
words exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import CapExceededError, EmptyBranchSetError
from .numerics import bisect_decreasing

DEFAULT_ENUMERATION_CAP = 2 ** 24


def _effective_cap(cap: int | None) -> int:
    return DEFAULT_ENUMERATION_CAP if cap is None else int(cap)


def ensure_within_cap(amount: int, cap: int | None, what: str) -> None:
    limit = _effective_cap(cap)
    if amount > limit:
        raise CapExceededError(f"{what}: {amount} items exceed cap {limit}")


@dataclass(frozen=True, eq=False)
class SubshiftOfFiniteType:
    """A one-sided subshift given by a 0/1 transition matrix.

    ``labels`` names each local symbol in an ambient system; for a system
    built from scratch the labels are just ``0..k-1``. Subsystems returned by
    :func:`transitive_subsystems` keep their parent's labels so potentials
    defined upstairs can be evaluated on their words.
    """

    transitions: np.ndarray
    labels: tuple = None

    def __post_init__(self):
        t = np.asarray(self.transitions)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise ValueError("transition matrix must be square")
        if not np.isin(t, (0, 1)).all():
            raise ValueError("transition matrix entries must be 0 or 1")
        t = t.astype(np.int8)
        t.flags.writeable = False
        object.__setattr__(self, "transitions", t)
        if self.labels is None:
            object.__setattr__(self, "labels", tuple(range(t.shape[0])))
        elif len(self.labels) != t.shape[0]:
            raise ValueError("labels must match alphabet size")
        if t.shape[0] == 0:
            raise ValueError("empty alphabet")
        if (t.sum(axis=1) == 0).any() or (t.sum(axis=0) == 0).any():
            raise ValueError(
                "stranded symbol (no successor or no predecessor); "
                "use from_matrix() to prune")

    @classmethod
    def from_matrix(cls, matrix, labels=None) -> "SubshiftOfFiniteType":
        """Build a subshift, pruning stranded symbols until none remain."""
        t = np.asarray(matrix, dtype=np.int8).copy()
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise ValueError("transition matrix must be square")
        if not np.isin(t, (0, 1)).all():
            raise ValueError("transition matrix entries must be 0 or 1")
        names = tuple(labels) if labels is not None else tuple(range(t.shape[0]))
        keep = np.arange(t.shape[0])
        while True:
            alive = (t.sum(axis=1) > 0) & (t.sum(axis=0) > 0)
            if alive.all():
                break
            t = t[np.ix_(alive, alive)]
            keep = keep[alive]
            if t.size == 0:
                raise ValueError("all symbols pruned: the subshift is empty")
        return cls(t, tuple(names[i] for i in keep))

    @classmethod
    def full_shift(cls, k: int) -> "SubshiftOfFiniteType":
        return cls(np.ones((k, k), dtype=np.int8))

    @classmethod
    def golden_mean(cls) -> "SubshiftOfFiniteType":
        return cls(np.array([[1, 1], [1, 0]], dtype=np.int8))

    @property
    def alphabet_size(self) -> int:
        return self.transitions.shape[0]

    @cached_property
    def _successors(self) -> tuple:
        return tuple(np.flatnonzero(self.transitions[s]).astype(np.int8)
                     for s in range(self.alphabet_size))

    def successors(self, symbol: int) -> tuple:
        return tuple(int(x) for x in self._successors[symbol])

    def edges(self) -> list[tuple[int, int]]:
        rows, cols = np.nonzero(self.transitions)
        return list(zip(rows.tolist(), cols.tolist()))

    def is_admissible(self, symbols: Sequence[int]) -> bool:
        syms = list(symbols)
        if not syms:
            return False
        k = self.alphabet_size
        if any(not 0 <= s < k for s in syms):
            return False
        t = self.transitions
        return all(t[a, b] for a, b in zip(syms, syms[1:]))

    def word(self, symbols: Sequence[int]) -> "Word":
        return Word(self, tuple(int(s) for s in symbols))

    def _reachable(self, start: int, reverse: bool = False) -> set[int]:
        # reachability in >= 1 steps
        t = self.transitions.T if reverse else self.transitions
        seen: set[int] = set()
        frontier = set(np.flatnonzero(t[start]).tolist())
        while frontier:
            seen |= frontier
            frontier = {int(j) for i in frontier
                        for j in np.flatnonzero(t[i])} - seen
        return seen

    def is_irreducible(self) -> bool:
        """True when every symbol reaches every symbol in >= 1 steps."""
        k = self.alphabet_size
        return all(self._reachable(i) == set(range(k)) for i in range(k))

    def is_primitive(self) -> bool:
        """True when some power of the transition matrix is strictly positive."""
        if not self.is_irreducible():
            return False
        k = self.alphabet_size
        power = self.transitions.astype(bool)
        limit = k * k - 2 * k + 2 if k > 1 else 1
        for _ in range(max(limit, 1)):
            if power.all():
                return True
            power = power @ self.transitions.astype(bool)
        return bool(power.all())

    def restrict_edges(self, edge_subset: Iterable[tuple[int, int]]
                       ) -> "SubshiftOfFiniteType":
        """Subsystem on the symbols touched by ``edge_subset``."""
        edges = sorted(set(edge_subset))
        if not edges:
            raise ValueError("edge subset is empty")
        symbols = sorted({i for i, _ in edges} | {j for _, j in edges})
        index = {s: i for i, s in enumerate(symbols)}
        t = np.zeros((len(symbols), len(symbols)), dtype=np.int8)
        for i, j in edges:
            if not self.transitions[i, j]:
                raise ValueError(f"edge {(i, j)} is not admissible in the parent")
            t[index[i], index[j]] = 1
        return SubshiftOfFiniteType(t, tuple(self.labels[s] for s in symbols))

    def __repr__(self):
        rows = ["".join(str(int(b)) for b in row) for row in self.transitions]
        return f"SubshiftOfFiniteType(k={self.alphabet_size}, rows={rows})"


@dataclass(frozen=True)
class Word:
    """A finite admissible word of its owning subshift."""

    sft: SubshiftOfFiniteType
    symbols: tuple

    def __post_init__(self):
        if not self.symbols:
            raise ValueError("empty word")
        if not self.sft.is_admissible(self.symbols):
            raise ValueError(f"inadmissible word {self.symbols}")

    @classmethod
    def _trusted(cls, sft: SubshiftOfFiniteType, symbols: tuple) -> "Word":
        # fast path for words produced by admissible-by-construction enumeration
        obj = object.__new__(cls)
        object.__setattr__(obj, "sft", sft)
        object.__setattr__(obj, "symbols", symbols)
        return obj

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __lt__(self, other: "Word"):
        return self.symbols < other.symbols

    def __eq__(self, other):
        return isinstance(other, Word) and self.symbols == other.symbols

    def __hash__(self):
        return hash(self.symbols)

    @property
    def ambient_symbols(self) -> tuple:
        """The word spelled in the parent system's symbol names."""
        return tuple(self.sft.labels[s] for s in self.symbols)

    def __repr__(self):
        return "Word(" + "".join(map(str, self.symbols)) + ")"


# ---------------------------------------------------------------------------
# enumeration


def count_words(sft: SubshiftOfFiniteType, n: int) -> int:
    """Number of admissible n-words, exactly (big-integer arithmetic)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    counts = [1] * sft.alphabet_size
    t = sft.transitions
    for _ in range(n - 1):
        counts = [sum(counts[j] for j in np.flatnonzero(t[i]))
                  for i in range(sft.alphabet_size)]
    return sum(counts)


def count_periodic(sft: SubshiftOfFiniteType, N: int) -> int:
    """Trace of the N-th power of the transition matrix, exactly."""
    if N < 1:
        raise ValueError("N must be >= 1")
    t = [[int(x) for x in row] for row in sft.transitions]
    power = t
    for _ in range(N - 1):
        power = [[sum(power[i][m] * t[m][j] for m in range(len(t)))
                  for j in range(len(t))] for i in range(len(t))]
    return sum(power[i][i] for i in range(len(t)))


def word_matrix(sft: SubshiftOfFiniteType, n: int,
                cap: int | None = None) -> np.ndarray:
    """All admissible n-words as an int8 array, rows in lexicographic order."""
    if n < 1:
        raise ValueError("n must be >= 1")
    ensure_within_cap(sft.alphabet_size ** n, cap, f"{n}-word enumeration")
    arr = np.arange(sft.alphabet_size, dtype=np.int8).reshape(-1, 1)
    for _ in range(n - 1):
        arr = _extend_words(sft, arr)
    return arr


def _extend_words(sft: SubshiftOfFiniteType, arr: np.ndarray) -> np.ndarray:
    """Append one admissible symbol to every row, preserving lex order."""
    succ = sft._successors
    succ_counts = np.array([len(s) for s in succ])
    succ_flat = np.concatenate(succ) if succ else np.empty(0, dtype=np.int8)
    offsets = np.concatenate(([0], np.cumsum(succ_counts)))[:-1]
    last = arr[:, -1]
    rep = succ_counts[last]
    total = int(rep.sum())
    grown = np.repeat(arr, rep, axis=0)
    starts = np.cumsum(rep) - rep
    within = np.arange(total) - np.repeat(starts, rep)
    newcol = succ_flat[np.repeat(offsets[last], rep) + within]
    return np.hstack([grown, newcol.reshape(-1, 1)])


def periodic_matrix(sft: SubshiftOfFiniteType, N: int,
                    cap: int | None = None) -> np.ndarray:
    """Admissible cyclic N-words (wrap transition included), lex order."""
    arr = word_matrix(sft, N, cap)
    mask = sft.transitions[arr[:, -1], arr[:, 0]] == 1
    return arr[mask]


def enumerate_words(sft: SubshiftOfFiniteType, n: int,
                    cap: int | None = None) -> list[Word]:
    """The admissible words of length n, lexicographically ordered."""
    return [Word._trusted(sft, tuple(int(s) for s in row))
            for row in word_matrix(sft, n, cap)]


def enumerate_periodic(sft: SubshiftOfFiniteType, N: int,
                       cap: int | None = None) -> list[Word]:
    """Period-N points as cyclic words (points of lower period included).

    The count equals the trace of the N-th power of the transition matrix.
    """
    return [Word._trusted(sft, tuple(int(s) for s in row))
            for row in periodic_matrix(sft, N, cap)]


# ---------------------------------------------------------------------------
# transitive subsystems


def _strongly_connected(symbols: list[int], edges: list[tuple[int, int]]) -> bool:
    succ: dict[int, list[int]] = {s: [] for s in symbols}
    pred: dict[int, list[int]] = {s: [] for s in symbols}
    for i, j in edges:
        succ[i].append(j)
        pred[j].append(i)

    def sweep(adj):
        seen = {symbols[0]}
        stack = [symbols[0]]
        while stack:
            for nxt in adj[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return seen

    if any(not succ[s] or not pred[s] for s in symbols):
        return False
    return len(sweep(succ)) == len(symbols) and len(sweep(pred)) == len(symbols)


def transitive_subsystems(sft: SubshiftOfFiniteType,
                          max_count: int | None = None,
                          cap: int | None = None) -> list[SubshiftOfFiniteType]:
    """All irreducible subsystems, canonically one per admissible edge subset.

    A subsystem is the restriction to the symbols touched by a nonempty edge
    subset whose digraph is strongly connected (every symbol lies on a cycle).
    Enumeration order: by edge count, then lexicographically by edge list, so
    the full system appears last when it is itself irreducible.
    """
    from itertools import combinations

    edges = sorted(sft.edges())
    if max_count is None:
        ensure_within_cap(2 ** len(edges), cap, "edge-subset enumeration")
    limit = _effective_cap(cap)
    out: list[SubshiftOfFiniteType] = []
    visited = 0
    for size in range(1, len(edges) + 1):
        for subset in combinations(edges, size):
            visited += 1
            if visited > limit:
                raise CapExceededError(
                    f"edge-subset enumeration visited more than {limit} candidates")
            symbols = sorted({i for i, _ in subset} | {j for _, j in subset})
            if _strongly_connected(symbols, list(subset)):
                out.append(sft.restrict_edges(subset))
                if max_count is not None and len(out) >= max_count:
                    return out
    return out


# ---------------------------------------------------------------------------
# first-return horseshoes


@dataclass(frozen=True)
class Branch:
    word: Word
    return_time: int
    weight: float = 0.0


@dataclass(frozen=True)
class BranchSystem:
    """First-return branches through a base cylinder, with a return window.

    Branch words start with the base and are pairwise distinct; every
    concatenation of branches is admissible, so the system codes an induced
    full shift over the branch alphabet (a horseshoe with variable return
    times).
    """

    sft: SubshiftOfFiniteType
    base: Word
    branches: tuple
    window: tuple

    def __post_init__(self):
        lo, hi = self.window
        seen = set()
        prev = None
        for br in self.branches:
            w = br.word.symbols
            if br.return_time != len(w):
                raise ValueError("return time must equal branch word length")
            if not lo <= br.return_time <= hi:
                raise ValueError(f"return time {br.return_time} outside window {self.window}")
            if w[:len(self.base)] != self.base.symbols:
                raise ValueError("branch word must start with the base")
            if not self.sft.transitions[w[-1], self.base.symbols[0]]:
                raise ValueError("branch does not return admissibly to the base")
            if w in seen:
                raise ValueError("duplicate branch word")
            seen.add(w)
            if prev is not None and not prev < w:
                raise ValueError("branches must be sorted lexicographically")
            prev = w

    def return_times(self) -> np.ndarray:
        return np.array([b.return_time for b in self.branches])

    def weights(self) -> np.ndarray:
        return np.array([b.weight for b in self.branches])

    def with_weights(self, weights: Sequence[float]) -> "BranchSystem":
        if len(weights) != len(self.branches):
            raise ValueError("one weight per branch required")
        branches = tuple(Branch(b.word, b.return_time, float(w))
                         for b, w in zip(self.branches, weights))
        return BranchSystem(self.sft, self.base, branches, self.window)


def cyclic_extension(symbols: Sequence[int], length: int) -> tuple:
    """The first ``length`` symbols of the periodic point (symbols)^inf."""
    syms = tuple(symbols)
    reps = -(-length // len(syms))
    return (syms * reps)[:length]


def first_return_horseshoe(sft: SubshiftOfFiniteType, base: Word | Sequence[int],
                           n: int, rho: float, *, cap: int | None = None,
                           max_return: int | None = None) -> BranchSystem:
    """Branches through the base cylinder with return times in [n, (1+rho)n].

    A branch of return time R is a word w of length R beginning with the base
    such that w + base is admissible, the base occurs in w + base at position
    R, and at no position in [n, R): R is the first return at or after the
    window start. Returns before time n are allowed inside a branch, which is
    what makes window families rich. Distinct branches are distinct words and
    the corresponding sub-cylinders [w + base] are pairwise disjoint.

    ``rho = math.inf`` is the sentinel for an unbounded window; it enumerates
    the plain first-return family truncated at ``max_return`` (or at the
    enumeration cap if ``max_return`` is omitted, recording the window
    actually reached).
    """
    if not isinstance(base, Word):
        base = sft.word(base)
    if base.sft is not sft and base.sft.transitions.shape != sft.transitions.shape:
        raise ValueError("base word must belong to the subshift")
    if n < 1:
        raise ValueError("window start must be >= 1")
    ell = len(base)
    if math.isinf(rho):
        hi = max_return if max_return is not None else None
    else:
        if rho <= 0:
            raise ValueError("rho must be positive")
        hi = int(math.floor((1 + rho) * n))
        if hi < n:
            raise ValueError("empty return-time window")
    limit = _effective_cap(cap)

    base_arr = np.array(base.symbols, dtype=np.int8).reshape(1, -1)
    frontier = base_arr
    collected: list[tuple[int, np.ndarray]] = []
    total = 0
    t = ell
    while frontier.shape[0] and (hi is None or t < hi + ell):
        grown = _extend_words(sft, frontier)
        t += 1
        p = t - ell
        if grown.shape[0] + total > limit:
            if hi is None:
                # sentinel truncation: stop at the last fully processed time
                hi = p - 1
                break
            raise CapExceededError(
                f"horseshoe frontier exceeds cap {limit} at length {t}")
        if p >= 1:
            hits = (grown[:, p:t] == base_arr).all(axis=1)
        else:
            hits = np.zeros(grown.shape[0], dtype=bool)
        if p >= n:
            emitted = grown[hits]
            if emitted.shape[0]:
                collected.append((p, emitted[:, :p].copy()))
                total += emitted.shape[0]
            frontier = grown[~hits]
        else:
            frontier = grown
    if hi is None:
        hi = max(p for p, _ in collected) if collected else n
    branches = []
    for p, block in collected:
        if p > hi:
            continue
        for row in block:
            syms = tuple(int(s) for s in row)
            branches.append(Branch(Word._trusted(sft, syms), p, 0.0))
    if not branches:
        raise EmptyBranchSetError(
            f"no first return to {base.symbols} lands in window [{n}, {hi}]")
    branches.sort(key=lambda b: b.word.symbols)
    return BranchSystem(sft, base, tuple(branches), (n, hi))


def branch_weights(bs: BranchSystem, potential) -> np.ndarray:
    """Per-branch weights: the potential summed along the branch loop.

    For an additive potential this is the cyclic Birkhoff sum over the branch
    word (exact on the periodic point the branch codes); for a potential
    sequence it is phi_R evaluated on the periodic extension of the word.
    """
    from .potentials import Potential, PotentialSequence

    if isinstance(potential, Potential):
        return np.array([potential.cyclic_birkhoff(b.word.symbols)
                         for b in bs.branches])
    if isinstance(potential, PotentialSequence):
        out = np.empty(len(bs.branches))
        for i, b in enumerate(bs.branches):
            r = b.return_time
            ext = cyclic_extension(b.word.symbols, r + potential.lookahead)
            out[i] = potential.evaluate(ext, r)
        return out
    raise TypeError("potential must be a Potential or PotentialSequence")


def saturate_pressure(bs: BranchSystem, potential=None, *,
                      residual_tol: float = 1e-12) -> float:
    """Pressure of the shift-invariant saturate of the horseshoe.

    Solves sum_i exp(w_i - s R_i) = 1 for the unique root s*, where w_i is
    the branch weight and R_i the return time; the left side is strictly
    decreasing in s. For the untruncated first-return family of a mixing
    subshift with zero potential the root is the subshift's entropy.
    """
    from scipy.special import logsumexp

    if not bs.branches:
        raise EmptyBranchSetError("branch system has no branches")
    weights = bs.weights() if potential is None else branch_weights(bs, potential)
    if not np.isfinite(weights).all():
        raise ValueError("branch weights must be finite")
    times = bs.return_times().astype(float)

    def log_total(s: float) -> float:
        return float(logsumexp(weights - s * times))

    ratios = weights / times
    lo = float(ratios.min())
    hi = float(ratios.max()) + math.log(len(weights)) / float(times.min()) + 1.0
    root, _ = bisect_decreasing(log_total, lo, hi)
    residual = abs(math.exp(log_total(root)) - 1.0)
    if residual > residual_tol:
        raise RuntimeError(f"saturate pressure residual {residual} above tolerance")
    return root
