"""Topological pressure by four independent routes, plus sequence pressure.

The Perron route is the exact oracle for locally constant potentials; the
spanning / separated / periodic-orbit estimators and the Caratheodory cover
pressure are finite-stage realizations of the defining limits, kept
independent of the Perron route so they can check each other.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.special import logsumexp

from .errors import CapExceededError, ReducibleSystemError
from .numerics import bisect_decreasing, expand_bracket, perron_value_vector
from .potentials import Potential, PotentialSequence, additive_sequence
from .symbolic import (SubshiftOfFiniteType, count_words, ensure_within_cap,
                       word_matrix, periodic_matrix)


@dataclass(frozen=True)
class PressureEstimate:
    """A pressure value with its method tag, parameters and diagnostics."""

    value: float
    method: str
    params: dict
    bracket: tuple | None = None
    diagnostics: tuple = ()

    def __post_init__(self):
        if self.bracket is not None:
            lo, hi = self.bracket
            if not (lo <= self.value <= hi):
                raise ValueError("value must lie inside its bracket")
        keys = [d[0] for d in self.diagnostics]
        if keys != sorted(keys):
            raise ValueError("diagnostics must be sorted by their index")


# ---------------------------------------------------------------------------
# Perron route


def _block_codes(words: np.ndarray, k: int) -> np.ndarray:
    codes = np.zeros(words.shape[0], dtype=np.int64)
    for i in range(words.shape[1]):
        codes = codes * k + words[:, i]
    return codes


def weighted_block_matrix(sft: SubshiftOfFiniteType, phi: Potential,
                          cap: int | None = None):
    """Transfer matrix on (r-1)-blocks with entries exp(phi(r-word)).

    For r = 1 the states are the symbols and an edge out of symbol i carries
    weight exp(phi(i)). Returns ``(matrix, state_words)`` with the states in
    lexicographic order.
    """
    k = sft.alphabet_size
    b = max(phi.r - 1, 1)
    states = word_matrix(sft, b, cap)
    state_codes = _block_codes(states, k)
    words = word_matrix(sft, b + 1, cap)
    src = np.searchsorted(state_codes, _block_codes(words[:, :b], k))
    dst = np.searchsorted(state_codes, _block_codes(words[:, 1:], k))
    if phi.r == 1:
        weights = np.exp(phi._flat[words[:, 0]])
    else:
        weights = np.exp(phi._flat[_block_codes(words.astype(np.int64), k)])
    matrix = sp.coo_matrix((weights, (src, dst)),
                           shape=(states.shape[0], states.shape[0])).tocsr()
    return matrix, states


def perron_pressure(sft: SubshiftOfFiniteType, phi: Potential,
                    tol: float = 1e-13, cap: int | None = None) -> float:
    """log of the spectral radius of the weighted transfer matrix.

    Reducible systems contribute the maximum over their irreducible
    components; components with no cycle carry no invariant measure and are
    skipped. Raises :class:`ReducibleSystemError` when no component has a
    cycle at all.
    """
    matrix, _ = weighted_block_matrix(sft, phi, cap)
    n_comp, labels = connected_components(matrix, connection="strong")
    best = None
    for comp in range(n_comp):
        idx = np.flatnonzero(labels == comp)
        sub = matrix[np.ix_(idx, idx)]
        if sub.nnz == 0:
            continue
        value, _ = perron_value_vector(sub, tol)
        best = value if best is None else max(best, value)
    if best is None:
        raise ReducibleSystemError("no component carries a cycle")
    return math.log(best)


# ---------------------------------------------------------------------------
# spanning / separated estimators


def snap_epsilon(epsilon: float) -> tuple[float, int]:
    """Snap epsilon down to the dyadic grid 2^-m, m >= 0."""
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    m = int(math.ceil(-math.log2(epsilon) - 1e-12))
    snapped = 2.0 ** (-m)
    if abs(snapped - epsilon) > 1e-12:
        warnings.warn(f"epsilon {epsilon} snapped down to dyadic {snapped}",
                      stacklevel=3)
    return snapped, m


def _as_sequence(potential) -> PotentialSequence:
    if isinstance(potential, Potential):
        return additive_sequence(potential)
    if isinstance(potential, PotentialSequence):
        return potential
    raise TypeError("expected a Potential or PotentialSequence")


def _lexmin_extension(sft: SubshiftOfFiniteType, rows: np.ndarray,
                      extra: int) -> np.ndarray:
    if extra <= 0:
        return rows
    min_succ = np.array([s[0] for s in sft._successors], dtype=np.int8)
    out = rows
    for _ in range(extra):
        out = np.hstack([out, min_succ[out[:, -1]].reshape(-1, 1)])
    return out


def _evaluate_rows(seq: PotentialSequence, rows: np.ndarray, n: int) -> np.ndarray:
    table = getattr(seq, "additive_table", None)
    if table is not None:
        return table.birkhoff_batch(rows[:, :n + table.r - 1])
    return np.array([seq.evaluate(tuple(int(s) for s in row), n)
                     for row in rows])


def _cylinder_sup(seq: PotentialSequence, sft: SubshiftOfFiniteType,
                  rows: np.ndarray, n: int, extra: int,
                  n_samples: int, seed: int) -> np.ndarray:
    """Per-row sup of phi_n over extensions by ``extra`` symbols."""
    from .symbolic import _extend_words

    if extra <= 0:
        return _evaluate_rows(seq, rows, n)
    k = sft.alphabet_size
    if k ** extra <= 64:
        ids = np.arange(rows.shape[0])
        ext = rows
        for _ in range(extra):
            counts = np.array([len(sft._successors[s]) for s in ext[:, -1]])
            ids = np.repeat(ids, counts)
            ext = _extend_words(sft, ext)
        vals = _evaluate_rows(seq, ext, n)
        out = np.full(rows.shape[0], -np.inf)
        np.maximum.at(out, ids, vals)
        return out
    rng = np.random.default_rng(seed)
    best = _evaluate_rows(seq, _lexmin_extension(sft, rows, extra), n)
    max_succ = np.array([s[-1] for s in sft._successors], dtype=np.int8)
    lexmax = rows
    for _ in range(extra):
        lexmax = np.hstack([lexmax, max_succ[lexmax[:, -1]].reshape(-1, 1)])
    best = np.maximum(best, _evaluate_rows(seq, lexmax, n))
    for _ in range(n_samples):
        ext = rows
        for _ in range(extra):
            col = np.array([sft._successors[s][rng.integers(len(sft._successors[s]))]
                            for s in ext[:, -1]], dtype=np.int8)
            ext = np.hstack([ext, col.reshape(-1, 1)])
        best = np.maximum(best, _evaluate_rows(seq, ext, n))
    return best


def _partition_sums(sft, seq, epsilon, n, cap, sup_mode, n_samples, seed):
    """log of Sigma_i = sum over (i+m)-cylinders of exp(phi_i) for i <= n."""
    snapped, m = snap_epsilon(epsilon)
    logs = []
    for i in range(1, n + 1):
        rows = word_matrix(sft, i + m, cap)
        extra = seq.lookahead - m
        if sup_mode:
            vals = _cylinder_sup(seq, sft, rows, i, extra, n_samples, seed)
        else:
            reps = _lexmin_extension(sft, rows, extra)
            vals = _evaluate_rows(seq, reps, i)
        logs.append(float(logsumexp(vals)))
    return snapped, m, logs


def _spanning_like(sft, potential, epsilon, n, cap, *, method, sup_mode,
                   n_samples=0, seed=0, extra_params=None):
    if n < 1:
        raise ValueError("n must be >= 1")
    seq = _as_sequence(potential)
    snapped, m, logs = _partition_sums(sft, seq, epsilon, n, cap,
                                       sup_mode, n_samples, seed)
    value = logs[-1] - logs[-2] if n >= 2 else logs[0]
    diagnostics = tuple((i, logs[i - 1] / i) for i in range(1, n + 1))
    params = {"n": n, "epsilon": snapped, "m": m, "estimator": "log-ratio"}
    if extra_params:
        params.update(extra_params)
    return PressureEstimate(value=value, method=method, params=params,
                            diagnostics=diagnostics)


def spanning_pressure(sft: SubshiftOfFiniteType, potential, epsilon: float,
                      n: int, cap: int | None = None) -> PressureEstimate:
    """Pressure from minimal (epsilon, n)-spanning families.

    In the dyadic metric with epsilon = 2^-m the minimal spanning family has
    one representative per (n+m)-cylinder (the lexicographically minimal
    extension). ``value`` is the successive log-ratio of the weighted family
    sums at n-1 and n, which converges without the (m/n) log k excess of the
    raw normalization; the raw profile (1/i) log Sigma_i is kept in
    ``diagnostics``.
    """
    return _spanning_like(sft, potential, epsilon, n, cap,
                          method="spanning", sup_mode=False)


def separated_pressure(sft: SubshiftOfFiniteType, potential, epsilon: float,
                       n: int, cap: int | None = None, n_samples: int = 64,
                       seed: int = 0) -> PressureEstimate:
    """Dual bound from maximal (epsilon, n)-separated families.

    Same cylinder family as :func:`spanning_pressure` but each cylinder
    contributes the sup of phi_n over its extensions (enumerated exactly when
    few, otherwise lexicographic extremes plus seeded samples), so at every
    (epsilon, n) the separated family sum dominates the spanning one.
    """
    return _spanning_like(sft, potential, epsilon, n, cap,
                          method="separated", sup_mode=True,
                          n_samples=n_samples, seed=seed,
                          extra_params={"samples": n_samples, "seed": seed})


# ---------------------------------------------------------------------------
# periodic orbits


def periodic_orbit_pressure(sft: SubshiftOfFiniteType, phi: Potential,
                            N_max: int, cap: int | None = None,
                            tail_fraction: float = 1 / 3) -> PressureEstimate:
    """Weighted periodic-orbit sums (1/N) log sum over Per(N) of exp(S_N phi).

    Birkhoff sums are cyclic, so the N-sum equals the trace of the N-th power
    of the weighted transfer matrix. ``value`` is the max over the final
    ceil(N_max * tail_fraction) computed entries, a limsup surrogate.
    """
    diagnostics = []
    for N in range(1, N_max + 1):
        rows = periodic_matrix(sft, N, cap)
        if rows.shape[0] == 0:
            continue
        sums = phi.birkhoff_batch(rows, cyclic=True)
        diagnostics.append((N, float(logsumexp(sums)) / N))
    if not diagnostics:
        raise ReducibleSystemError(f"no periodic points up to period {N_max}")
    tail = max(1, math.ceil(N_max * tail_fraction))
    value = max(v for _, v in diagnostics[-tail:])
    return PressureEstimate(value=value, method="periodic-orbit",
                            params={"N_max": N_max, "tail": tail},
                            diagnostics=tuple(diagnostics))


# ---------------------------------------------------------------------------
# Caratheodory cover pressure


def caratheodory_pressure(Z: SubshiftOfFiniteType, seq, depth: int,
                          ambient: SubshiftOfFiniteType | None = None,
                          cap: int | None = None, width_tol: float = 1e-8,
                          n_samples: int = 32, seed: int = 0
                          ) -> PressureEstimate:
    """Critical value of the prefix-free cylinder-cover sums over Z.

    For a trial value ``a`` the infimum over prefix-free covers of Z by
    cylinders of length <= depth of sum exp(-a * m(U) + phi(U)) is computed
    exactly by backward recursion over the cylinder tree (each cylinder is
    covered either by itself or by the best covers of its children); phi(U)
    is the sup of phi_m over the cylinder. The pressure is the unique ``a``
    where that infimum crosses 1, bisected to a bracket of width
    ``width_tol`` (<= 1e-6 by contract).

    ``Z`` sits inside ``ambient`` through its labels; when ``ambient`` is
    omitted Z covers itself. The ``separates`` flag in the result params
    reports whether the chosen depth distinguishes Z from the ambient system
    at all (too-small depths are reported, not fatal).
    """
    seq = _as_sequence(seq)
    ambient = ambient if ambient is not None else Z
    if depth < 1:
        raise ValueError("depth must be >= 1")
    k = Z.alphabet_size
    ensure_within_cap(sum(k ** m for m in range(1, depth + 1)), cap,
                      "cylinder tree")
    label = np.array(Z.labels, dtype=np.int8)

    levels = []     # per level: (ambient_rows, phi_values)
    separates = False
    for m in range(1, depth + 1):
        z_rows = word_matrix(Z, m, cap)
        rows = label[z_rows]
        if count_words(ambient, m) != rows.shape[0]:
            separates = True
        phi_vals = _cylinder_sup(seq, ambient, rows, m, seq.lookahead,
                                 n_samples, seed)
        levels.append((z_rows, phi_vals))

    parent_index = []
    for m in range(2, depth + 1):
        child_codes = _block_codes(levels[m - 1][0][:, :m - 1], k)
        parent_codes = _block_codes(levels[m - 2][0], k)
        parent_index.append(np.searchsorted(parent_codes, child_codes))

    def min_cover_total(a: float) -> float:
        cost = np.exp(-a * depth + levels[depth - 1][1])
        for m in range(depth - 1, 0, -1):
            sums = np.zeros(levels[m - 1][0].shape[0])
            np.add.at(sums, parent_index[m - 1], cost)
            cost = np.minimum(np.exp(-a * m + levels[m - 1][1]), sums)
        return float(cost.sum())

    bound = seq.bound + math.log(max(k, 2)) + 1.0
    lo, hi = expand_bracket(lambda a: min_cover_total(a) - 1.0, -bound, bound)
    value, bracket = bisect_decreasing(lambda a: min_cover_total(a) - 1.0,
                                       lo, hi, width_tol=width_tol)
    diagnostics = tuple(
        (m, float(logsumexp(levels[m - 1][1])) / m) for m in range(1, depth + 1))
    return PressureEstimate(value=value, method="caratheodory",
                            params={"depth": depth, "separates": separates},
                            bracket=bracket, diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# sequence pressure


def sequence_table(sft: SubshiftOfFiniteType, seq: PotentialSequence, n: int,
                   cap: int | None = None) -> Potential:
    """phi_n / n materialized as an exact range-(n + lookahead) table."""
    r = n + seq.lookahead
    rows = word_matrix(sft, r, cap)
    vals = _evaluate_rows(seq, rows, n) / n
    table = {tuple(int(s) for s in row): float(v)
             for row, v in zip(rows, vals)}
    return Potential(sft, r, table)


def sequence_pressure(sft: SubshiftOfFiniteType, seq: PotentialSequence,
                      n_max: int, cap: int | None = None) -> PressureEstimate:
    """P*(Phi) as the monotone limit of the additive pressures P(phi_n / n).

    Diagnostics hold (n, P(phi_n / n)) computed by the Perron oracle on exact
    range-n tables. The value is the running infimum at n_max for subadditive
    sequences (supremum for superadditive; additive sequences are constant).
    The bracket is the coarse horizon defect L from the quantitative
    subadditivity estimate P(phi_m / m) <= P(phi_n / n) + nL/m at m = n_max.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    diagnostics = []
    for n in range(1, n_max + 1):
        table = sequence_table(sft, seq, n, cap)
        diagnostics.append((n, perron_pressure(sft, table, cap=cap)))
    values = [v for _, v in diagnostics]
    if seq.kind == "superadditive":
        value = max(values)
        bracket = (value, value + seq.bound)
    elif seq.kind == "subadditive":
        value = min(values)
        bracket = (value - seq.bound, value)
    else:
        value = min(values)
        bracket = (min(values), max(values))
    return PressureEstimate(value=value, method="sequence",
                            params={"n_max": n_max, "kind": seq.kind,
                                    "bound": seq.bound},
                            bracket=bracket, diagnostics=tuple(diagnostics))
