"""Locally constant potentials, sub/superadditive sequences, matrix cocycles.

Potentials are finite-range tables on admissible words, the dense subalgebra
stand-in for continuous functions: everything downstream can then be computed
by exact arithmetic on cylinders. Potential sequences are tagged additive,
subadditive or superadditive by the caller and audited at construction; the
audit can refute a declared kind but never prove it, so tags are declarations,
not inferences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import SingularMatrixError
from .numerics import spectral_norm
from .symbolic import (SubshiftOfFiniteType, Word, _effective_cap,
                       ensure_within_cap, word_matrix)


@dataclass(frozen=True, eq=False)
class Potential:
    """A range-r potential: a table of values on the admissible r-words."""

    sft: SubshiftOfFiniteType
    r: int
    table: dict

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("range must be >= 1")
        admissible = {tuple(int(s) for s in row)
                      for row in word_matrix(self.sft, self.r)}
        keys = set(self.table)
        if keys != admissible:
            missing = admissible - keys
            extra = keys - admissible
            raise ValueError(
                f"table must cover exactly the admissible {self.r}-words "
                f"(missing {len(missing)}, extraneous {len(extra)})")
        if not all(math.isfinite(v) for v in self.table.values()):
            raise ValueError("potential values must be finite")

    @cached_property
    def _flat(self) -> np.ndarray:
        k = self.sft.alphabet_size
        out = np.full(k ** self.r, np.nan)
        for word, value in self.table.items():
            code = 0
            for s in word:
                code = code * k + s
            out[code] = value
        return out

    @property
    def sup_norm(self) -> float:
        return max(abs(v) for v in self.table.values())

    def value(self, window: Sequence[int]) -> float:
        try:
            return self.table[tuple(window)]
        except KeyError:
            raise ValueError(f"window {tuple(window)} is not admissible") from None

    def _window_codes(self, rows: np.ndarray) -> np.ndarray:
        # rows: (M, n + r - 1) of symbols; returns (M, n) window codes
        k = self.sft.alphabet_size
        n = rows.shape[1] - self.r + 1
        codes = np.zeros((rows.shape[0], n), dtype=np.int64)
        for i in range(self.r):
            codes = codes * k + rows[:, i:i + n]
        return codes

    def birkhoff_batch(self, rows: np.ndarray, cyclic: bool = False) -> np.ndarray:
        """Birkhoff sums over every row of a word array.

        With ``cyclic=True`` each row is read as a periodic word of its full
        length; otherwise the first ``len - r + 1`` windows are summed.
        """
        rows = np.asarray(rows, dtype=np.int64)
        if cyclic and self.r > 1:
            rows = np.hstack([rows, rows[:, :self.r - 1]])
        values = self._flat[self._window_codes(rows)]
        if np.isnan(values).any():
            raise ValueError("word contains an inadmissible window")
        return values.sum(axis=1)

    def cyclic_birkhoff(self, symbols: Sequence[int]) -> float:
        """Birkhoff sum of the periodic point coded by ``symbols``."""
        row = np.asarray(tuple(symbols), dtype=np.int64).reshape(1, -1)
        return float(self.birkhoff_batch(row, cyclic=True)[0])

    def linear_birkhoff(self, symbols: Sequence[int], n: int) -> float:
        """Sum of the first n windows; needs ``len(symbols) >= n + r - 1``."""
        syms = tuple(symbols)
        if len(syms) < n + self.r - 1:
            raise ValueError("word too short for a linear Birkhoff sum")
        row = np.asarray(syms[:n + self.r - 1], dtype=np.int64).reshape(1, -1)
        return float(self.birkhoff_batch(row)[0])

    def shifted(self, c: float) -> "Potential":
        return Potential(self.sft, self.r, {w: v + c for w, v in self.table.items()})

    def scaled(self, t: float) -> "Potential":
        return Potential(self.sft, self.r, {w: t * v for w, v in self.table.items()})


def constant_potential(sft: SubshiftOfFiniteType, c: float, r: int = 1) -> Potential:
    table = {tuple(int(s) for s in row): float(c)
             for row in word_matrix(sft, r)}
    return Potential(sft, r, table)


def random_potential(sft: SubshiftOfFiniteType, r: int, amplitude: float,
                     seed: int) -> Potential:
    """Seeded uniform table in [-amplitude, amplitude], for tests and demos."""
    rng = np.random.default_rng(seed)
    table = {tuple(int(s) for s in row): float(rng.uniform(-amplitude, amplitude))
             for row in word_matrix(sft, r)}
    return Potential(sft, r, table)


def birkhoff_sum(phi: Potential, word: Word | Sequence[int]) -> float:
    """Birkhoff sum along the full word, read cyclically (n = word length)."""
    symbols = word.symbols if isinstance(word, Word) else tuple(word)
    if len(symbols) < phi.r:
        raise ValueError(
            f"word of length {len(symbols)} shorter than potential range {phi.r}")
    return phi.cyclic_birkhoff(symbols)


class PotentialSequence:
    """A family phi_n tagged additive / subadditive / superadditive.

    ``evaluator(symbols, n)`` must return phi_n given at least
    ``n + lookahead`` symbols (``lookahead`` extra symbols cover evaluators
    that read slightly past position n, such as Birkhoff sums of range-r
    tables). ``bound`` is the declared uniform bound L with |phi_n| <= n L,
    checked on every evaluation. A seeded spot-check of the declared
    inequality runs at construction; pass ``audit_samples=0`` to skip it for
    sequences known not to satisfy any of the three kinds (adversarial test
    inputs, restrictions of already-audited sequences).
    """

    KINDS = ("additive", "subadditive", "superadditive")

    def __init__(self, sft: SubshiftOfFiniteType, kind: str,
                 evaluator: Callable[[tuple, int], float], bound: float,
                 lookahead: int = 0, name: str = "sequence",
                 audit_samples: int = 128, audit_seed: int = 0):
        if kind not in self.KINDS:
            raise ValueError(f"kind must be one of {self.KINDS}")
        if bound < 0 or not math.isfinite(bound):
            raise ValueError("bound must be finite and nonnegative")
        self.sft = sft
        self.kind = kind
        self.bound = float(bound)
        self.lookahead = int(lookahead)
        self.name = name
        self._evaluator = evaluator
        # set by additive_sequence(); lets estimators batch-evaluate exactly
        self.additive_table: Potential | None = None
        if audit_samples:
            self._audit(audit_samples, audit_seed)

    def evaluate(self, symbols: Sequence[int], n: int) -> float:
        syms = symbols.symbols if isinstance(symbols, Word) else tuple(symbols)
        if n < 1:
            raise ValueError("n must be >= 1")
        if len(syms) < n:
            raise ValueError(f"need at least {n} symbols, got {len(syms)}")
        value = float(self._evaluator(syms, n))
        if abs(value) > n * self.bound + 1e-12:
            raise ValueError(
                f"uniform bound violated: |phi_{n}| = {abs(value)} > n*L = {n * self.bound}")
        return value

    def _random_word(self, rng, length: int) -> tuple:
        s = int(rng.integers(self.sft.alphabet_size))
        out = [s]
        for _ in range(length - 1):
            succ = self.sft._successors[out[-1]]
            out.append(int(succ[rng.integers(len(succ))]))
        return tuple(out)

    def _audit(self, samples: int, seed: int) -> None:
        rng = np.random.default_rng(seed)
        slack = 1e-12
        for _ in range(samples):
            n = int(rng.integers(1, 9))
            m = int(rng.integers(1, 9))
            w = self._random_word(rng, n + m + self.lookahead)
            total = float(self._evaluator(w, n + m))
            head = float(self._evaluator(w, n))
            tail = float(self._evaluator(w[n:], m))
            for value, length in ((total, n + m), (head, n), (tail, m)):
                if abs(value) > length * self.bound + slack:
                    raise ValueError(
                        f"audit: |phi_{length}| = {abs(value)} exceeds n*L")
            gap = total - head - tail
            if self.kind == "additive" and abs(gap) > slack:
                raise ValueError(f"audit: additivity violated by {gap}")
            if self.kind == "subadditive" and gap > slack:
                raise ValueError(f"audit: subadditivity violated by {gap}")
            if self.kind == "superadditive" and gap < -slack:
                raise ValueError(f"audit: superadditivity violated by {-gap}")

    def __repr__(self):
        return (f"PotentialSequence({self.name}, kind={self.kind}, "
                f"L={self.bound}, lookahead={self.lookahead})")


def additive_sequence(phi: Potential, name: str | None = None) -> PotentialSequence:
    """Embed a potential as the additive sequence of its Birkhoff sums.

    Given ``n + r - 1`` symbols the sum is the exact linear one; given a word
    of length exactly n the windows wrap cyclically, so evaluating on an
    n-word reproduces :func:`birkhoff_sum`.
    """
    r = phi.r

    def evaluator(symbols: tuple, n: int) -> float:
        if len(symbols) >= n + r - 1:
            return phi.linear_birkhoff(symbols, n)
        return phi.cyclic_birkhoff(symbols[:n])

    seq = PotentialSequence(
        phi.sft, "additive", evaluator, bound=phi.sup_norm, lookahead=r - 1,
        name=name or f"birkhoff(range-{r})")
    seq.additive_table = phi
    return seq


def zero_sequence(sft: SubshiftOfFiniteType) -> PotentialSequence:
    return additive_sequence(constant_potential(sft, 0.0), name="zero")


@dataclass(frozen=True, eq=False)
class MatrixCocycle:
    """One square matrix per symbol, multiplied along orbits (latest on the left)."""

    sft: SubshiftOfFiniteType
    matrices: tuple

    def __post_init__(self):
        if len(self.matrices) != self.sft.alphabet_size:
            raise ValueError("one matrix per symbol required")
        mats = tuple(np.asarray(m, dtype=float) for m in self.matrices)
        d = mats[0].shape[0]
        for m in mats:
            if m.shape != (d, d):
                raise ValueError("matrices must be square and of equal dimension")
            if not np.isfinite(m).all():
                raise ValueError("matrix entries must be finite")
        object.__setattr__(self, "matrices", mats)

    @property
    def dimension(self) -> int:
        return self.matrices[0].shape[0]

    def log_norm_product(self, symbols: Sequence[int], n: int) -> float:
        """log of the spectral norm of A(w_{n-1}) ... A(w_0), overflow-safe."""
        product = np.eye(self.dimension)
        log_scale = 0.0
        for s in tuple(symbols)[:n]:
            product = self.matrices[s] @ product
            peak = float(np.abs(product).max())
            if peak > 1e100 or (0.0 < peak < 1e-100):
                product = product / peak
                log_scale += math.log(peak)
        norm = spectral_norm(product)
        if norm == 0.0:
            raise ValueError("cocycle product has zero norm")
        return math.log(norm) + log_scale


def cocycle_norm_sequence(cocycle: MatrixCocycle, sign: str,
                          audit_samples: int = 128) -> PotentialSequence:
    """phi_n = +/- log |A_w| for the ordered product along the word.

    Sign '+' gives the subadditive log-norm sequence (submultiplicativity),
    sign '-' the superadditive one. Scalar (1x1) cocycles commute, so their
    '+' sequence is exactly additive and is tagged as such. The declared
    uniform bound is max over symbols of |log|A|| + |log|A^-1||, which
    dominates |phi_n|/n in both directions; singular matrices make that bound
    meaningless and are rejected.
    """
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    bound = 0.0
    for i, m in enumerate(cocycle.matrices):
        norm = spectral_norm(m)
        if norm == 0.0:
            raise SingularMatrixError(f"matrix for symbol {i} is zero")
        try:
            inverse = np.linalg.inv(m)
        except np.linalg.LinAlgError:
            raise SingularMatrixError(
                f"matrix for symbol {i} is singular") from None
        inv_norm = spectral_norm(inverse)
        if not np.isfinite(inv_norm) or inv_norm == 0.0:
            raise SingularMatrixError(f"matrix for symbol {i} is singular")
        bound = max(bound, abs(math.log(norm)) + abs(math.log(inv_norm)))

    factor = 1.0 if sign == "+" else -1.0

    def evaluator(symbols: tuple, n: int) -> float:
        return factor * cocycle.log_norm_product(symbols, n)

    if cocycle.dimension == 1:
        kind = "additive"
    else:
        kind = "subadditive" if sign == "+" else "superadditive"
    return PotentialSequence(
        cocycle.sft, kind, evaluator, bound=bound,
        name=f"{sign}log-norm(d={cocycle.dimension})",
        audit_samples=audit_samples)


@dataclass(frozen=True)
class KingmanRate:
    """Integral averages a_n = (1/n) integral of phi_n and their running bound.

    For a subadditive sequence the running infima are rigorous upper bounds on
    the Kingman rate integral, decreasing to it; dually for superadditive.
    """

    kind: str
    entries: tuple            # (n, a_n)
    running: tuple            # (n, best bound so far)
    direction: str            # "upper" or "lower"

    @property
    def bound(self) -> float:
        return self.running[-1][1]


def kingman_rate_integral(seq: PotentialSequence, mu, n_max: int,
                          cap: int | None = None) -> KingmanRate:
    """Cylinder-exact averages (1/n) integral of phi_n d(mu) for n <= n_max.

    ``mu`` is a Markov measure on the sequence's subshift. Sums run over
    (n + lookahead)-cylinders so additive embeddings integrate exactly.
    """
    entries = []
    running = []
    best = math.inf if seq.kind != "superadditive" else -math.inf
    for n in range(1, n_max + 1):
        rows = word_matrix(seq.sft, n + seq.lookahead, cap)
        masses = mu.cylinder_masses(rows)
        keep = masses > 0
        total = 0.0
        for row, mass in zip(rows[keep], masses[keep]):
            total += mass * seq.evaluate(tuple(int(s) for s in row), n)
        a_n = total / n
        entries.append((n, a_n))
        if seq.kind == "superadditive":
            best = max(best, a_n)
        else:
            best = min(best, a_n)
        running.append((n, best))
    direction = "lower" if seq.kind == "superadditive" else "upper"
    return KingmanRate(seq.kind, tuple(entries), tuple(running), direction)


@dataclass(frozen=True)
class TemperedVariationProfile:
    rows: tuple               # (n, gamma_n, gamma_n / n)
    tempered: bool
    tolerance: float
    mode: str                 # "exact" or "sampled"


def tempered_variation_profile(seq: PotentialSequence, n_max: int, depth: int,
                               tolerance: float = 0.05,
                               sample_budget: int = 10_000, seed: int = 0,
                               cap: int | None = None
                               ) -> TemperedVariationProfile:
    """Oscillation gamma_n of phi_n within n-cylinders refined to ``depth``.

    gamma_n is the maximum over admissible n-words of (max - min) of phi_n on
    extensions of the word to length ``depth``. Extensions are enumerated
    exhaustively when the full depth enumeration fits under the cap; otherwise
    each cylinder is probed with ``sample_budget`` seeded uniform extensions,
    which lower-bounds the oscillation (flagged in ``mode``).
    """
    if depth < n_max + seq.lookahead:
        raise ValueError("depth must cover n_max plus the evaluator lookahead")
    k = seq.sft.alphabet_size
    exact = k ** depth <= _effective_cap(cap)
    rows_out = []
    rng = np.random.default_rng(seed)
    if exact:
        deep = word_matrix(seq.sft, depth, cap)
    for n in range(1, n_max + 1):
        gamma = 0.0
        if exact:
            # deep rows are lex sorted, so rows sharing an n-prefix are contiguous
            prefixes = deep[:, :n]
            change = np.any(prefixes[1:] != prefixes[:-1], axis=1)
            starts = np.concatenate(([0], np.flatnonzero(change) + 1,
                                     [deep.shape[0]]))
            for a, b in zip(starts[:-1], starts[1:]):
                vals = [seq.evaluate(tuple(int(s) for s in deep[i]), n)
                        for i in range(a, b)]
                gamma = max(gamma, max(vals) - min(vals))
        else:
            for row in word_matrix(seq.sft, n, cap):
                prefix = tuple(int(s) for s in row)
                vals = []
                for _ in range(sample_budget):
                    ext = list(prefix)
                    while len(ext) < depth:
                        succ = seq.sft._successors[ext[-1]]
                        ext.append(int(succ[rng.integers(len(succ))]))
                    vals.append(seq.evaluate(tuple(ext), n))
                gamma = max(gamma, max(vals) - min(vals))
        rows_out.append((n, gamma, gamma / n))
    tempered = rows_out[-1][2] <= tolerance
    return TemperedVariationProfile(tuple(rows_out), tempered, tolerance,
                                    "exact" if exact else "sampled")
