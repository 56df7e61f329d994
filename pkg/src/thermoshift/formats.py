"""Parsers for the plain-text spec files the CLI consumes.

All formats are line oriented; blank lines and lines starting with '#' are
ignored. Symbols are written as single digits, which bounds file-described
alphabets at 10 symbols (construct larger systems programmatically).

System file (.sft)::

    alphabet 2
    transitions
    11
    10
    labels 0 1          # optional

Potential table (.pot)::

    range 2
    00 0.25
    01 -0.5
    ...                 # exactly the admissible range-words

Cocycle file (.coc)::

    dimension 2
    symbol 0
    1.0 0.0
    0.0 2.0
    symbol 1
    ...

Markov measure file (.mkv)::

    transition
    0.5 0.5
    0.5 0.5
    stationary 0.5 0.5  # optional; recomputed and verified when absent

IFS file (.ifs)::

    branch 0.3333333333333333 0.0
    branch 0.3333333333333333 0.6666666666666666
    separated 1
    expanding-dim 1     # optional
    coding              # optional 0/1 block, one row per branch
    11
    10
"""

from __future__ import annotations

import numpy as np

from .errors import SpecFileError
from .geometry import ConformalIFS, IFSBranch
from .potentials import MatrixCocycle, Potential
from .symbolic import SubshiftOfFiniteType
from .variational import MarkovMeasure


def _lines(text: str) -> list[str]:
    out = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append(line)
    return out


def _read(path) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise SpecFileError(f"cannot read {path}: {exc}") from None


def parse_subshift(text: str) -> SubshiftOfFiniteType:
    lines = _lines(text)
    if not lines or not lines[0].startswith("alphabet"):
        raise SpecFileError("system file must start with 'alphabet K'")
    try:
        k = int(lines[0].split()[1])
    except (IndexError, ValueError):
        raise SpecFileError("malformed alphabet line") from None
    if len(lines) < 2 or lines[1] != "transitions":
        raise SpecFileError("expected a 'transitions' block")
    rows = lines[2:2 + k]
    if len(rows) != k or any(len(r) != k for r in rows):
        raise SpecFileError(f"transition block must be {k} rows of {k} flags")
    if any(c not in "01" for r in rows for c in r):
        raise SpecFileError("transition flags must be 0 or 1")
    matrix = np.array([[int(c) for c in r] for r in rows], dtype=np.int8)
    labels = None
    rest = lines[2 + k:]
    if rest:
        if not rest[0].startswith("labels"):
            raise SpecFileError(f"unexpected trailing line: {rest[0]!r}")
        labels = tuple(rest[0].split()[1:])
        if len(labels) != k:
            raise SpecFileError("label count must match alphabet size")
    try:
        return SubshiftOfFiniteType.from_matrix(matrix, labels)
    except ValueError as exc:
        raise SpecFileError(str(exc)) from None


def read_subshift(path) -> SubshiftOfFiniteType:
    return parse_subshift(_read(path))


def parse_potential(text: str, sft: SubshiftOfFiniteType) -> Potential:
    lines = _lines(text)
    if not lines or not lines[0].startswith("range"):
        raise SpecFileError("potential file must start with 'range R'")
    try:
        r = int(lines[0].split()[1])
    except (IndexError, ValueError):
        raise SpecFileError("malformed range line") from None
    table = {}
    for line in lines[1:]:
        parts = line.split()
        if len(parts) != 2:
            raise SpecFileError(f"expected 'WORD VALUE', got {line!r}")
        word, value = parts
        if len(word) != r or any(not c.isdigit() for c in word):
            raise SpecFileError(f"bad word {word!r} for range {r}")
        try:
            table[tuple(int(c) for c in word)] = float(value)
        except ValueError:
            raise SpecFileError(f"bad value in line {line!r}") from None
    try:
        return Potential(sft, r, table)
    except ValueError as exc:
        raise SpecFileError(str(exc)) from None


def read_potential(path, sft: SubshiftOfFiniteType) -> Potential:
    return parse_potential(_read(path), sft)


def parse_cocycle(text: str, sft: SubshiftOfFiniteType) -> MatrixCocycle:
    lines = _lines(text)
    if not lines or not lines[0].startswith("dimension"):
        raise SpecFileError("cocycle file must start with 'dimension D'")
    try:
        d = int(lines[0].split()[1])
    except (IndexError, ValueError):
        raise SpecFileError("malformed dimension line") from None
    mats: dict[int, np.ndarray] = {}
    i = 1
    while i < len(lines):
        if not lines[i].startswith("symbol"):
            raise SpecFileError(f"expected 'symbol S', got {lines[i]!r}")
        try:
            s = int(lines[i].split()[1])
        except (IndexError, ValueError):
            raise SpecFileError("malformed symbol line") from None
        block = lines[i + 1:i + 1 + d]
        if len(block) != d:
            raise SpecFileError(f"matrix block for symbol {s} must have {d} rows")
        try:
            mats[s] = np.array([[float(x) for x in row.split()] for row in block])
        except ValueError:
            raise SpecFileError(f"bad matrix entry for symbol {s}") from None
        if mats[s].shape != (d, d):
            raise SpecFileError(f"matrix for symbol {s} is not {d}x{d}")
        i += 1 + d
    if sorted(mats) != list(range(sft.alphabet_size)):
        raise SpecFileError("cocycle must define one matrix per symbol")
    return MatrixCocycle(sft, tuple(mats[s] for s in range(sft.alphabet_size)))


def read_cocycle(path, sft: SubshiftOfFiniteType) -> MatrixCocycle:
    return parse_cocycle(_read(path), sft)


def parse_markov_measure(text: str, sft: SubshiftOfFiniteType) -> MarkovMeasure:
    lines = _lines(text)
    if not lines or lines[0] != "transition":
        raise SpecFileError("measure file must start with 'transition'")
    k = sft.alphabet_size
    rows = lines[1:1 + k]
    if len(rows) != k:
        raise SpecFileError(f"transition block must have {k} rows")
    try:
        p = np.array([[float(x) for x in row.split()] for row in rows])
    except ValueError:
        raise SpecFileError("bad transition entry") from None
    if p.shape != (k, k):
        raise SpecFileError(f"transition block must be {k}x{k}")
    stationary = None
    rest = lines[1 + k:]
    if rest:
        if not rest[0].startswith("stationary"):
            raise SpecFileError(f"unexpected trailing line: {rest[0]!r}")
        try:
            stationary = np.array([float(x) for x in rest[0].split()[1:]])
        except ValueError:
            raise SpecFileError("bad stationary entry") from None
    try:
        return MarkovMeasure.from_transition(sft, p, stationary)
    except ValueError as exc:
        raise SpecFileError(str(exc)) from None


def read_markov_measure(path, sft: SubshiftOfFiniteType) -> MarkovMeasure:
    return parse_markov_measure(_read(path), sft)


def parse_ifs(text: str) -> ConformalIFS:
    lines = _lines(text)
    branches = []
    separated = True
    expanding = 1
    coding_rows: list[str] | None = None
    i = 0
    while i < len(lines):
        line = lines[i]
        if line.startswith("branch"):
            parts = line.split()
            if len(parts) != 3:
                raise SpecFileError(f"expected 'branch RATIO OFFSET', got {line!r}")
            try:
                branches.append(IFSBranch(float(parts[1]), float(parts[2])))
            except ValueError as exc:
                raise SpecFileError(str(exc)) from None
            i += 1
        elif line.startswith("separated"):
            separated = line.split()[1] not in ("0", "false")
            i += 1
        elif line.startswith("expanding-dim"):
            expanding = int(line.split()[1])
            i += 1
        elif line == "coding":
            coding_rows = lines[i + 1:i + 1 + len(branches)]
            i += 1 + len(branches)
        else:
            raise SpecFileError(f"unexpected line: {line!r}")
    if not branches:
        raise SpecFileError("IFS file defines no branches")
    coding = None
    if coding_rows is not None:
        if len(coding_rows) != len(branches) or any(
                len(r) != len(branches) or any(c not in "01" for c in r)
                for r in coding_rows):
            raise SpecFileError("coding block must be a square 0/1 matrix")
        coding = SubshiftOfFiniteType(
            np.array([[int(c) for c in r] for r in coding_rows], dtype=np.int8))
    try:
        return ConformalIFS(tuple(branches), coding, separated, expanding)
    except ValueError as exc:
        raise SpecFileError(str(exc)) from None


def read_ifs(path) -> ConformalIFS:
    return parse_ifs(_read(path))
