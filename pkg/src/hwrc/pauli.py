"""Pauli propagation lookup tables and virtual-Z phase absorption.

Pauli codes are two bits: ``0=I, 1=X, 2=Y, 3=Z``. A pair packs as
``(first << 2) | second``; LFSR bit extraction relies on this encoding.

Both tables are generated from the matrix conventions in :mod:`hwrc.circuit`
and cached; nothing is hand-transcribed.
"""

from __future__ import annotations

import itertools
import math
from enum import IntEnum
from functools import lru_cache

import numpy as np

from .circuit import (
    CNOT,
    CZ,
    GATE_KINDS,
    I2,
    IDENTITY,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    normalize_angle,
    two_qubit_matrix,
    zxzxz,
)


class Pauli(IntEnum):
    I = 0
    X = 1
    Y = 2
    Z = 3

    @property
    def matrix(self) -> np.ndarray:
        return PAULI_MATRICES[self]


PAULI_MATRICES = (I2, PAULI_X, PAULI_Y, PAULI_Z)
LABELS = "IXYZ"


def pair_code(first: int, second: int) -> int:
    return (int(first) << 2) | int(second)


def split_pair(code: int) -> tuple[Pauli, Pauli]:
    return Pauli((code >> 2) & 3), Pauli(code & 3)


def pair_label(code: int) -> str:
    a, b = split_pair(code)
    return LABELS[a] + LABELS[b]


def pair_from_label(label: str) -> int:
    label = label.upper()
    if len(label) != 2 or any(ch not in LABELS for ch in label):
        raise ValueError(f"not a two-qubit Pauli label: {label!r}")
    return pair_code(LABELS.index(label[0]), LABELS.index(label[1]))


def pair_matrix(code: int) -> np.ndarray:
    a, b = split_pair(code)
    return np.kron(PAULI_MATRICES[a], PAULI_MATRICES[b])


class TableConstructionError(RuntimeError):
    """A generated table could not be completed; the gate conventions are broken."""


# -- propagation --------------------------------------------------------------


def conjugate_pair(kind: str, code: int) -> tuple[int, int]:
    """Brute force: find ``(P', s)`` with ``G P G^dag = s P'`` by matching all 32 signed pairs."""
    g = two_qubit_matrix(kind)
    target = g @ pair_matrix(code) @ g.conj().T
    for out in range(16):
        m = pair_matrix(out)
        for sign in (1, -1):
            if np.allclose(target, sign * m, atol=1e-12):
                return out, sign
    raise TableConstructionError(f"{kind} does not map {pair_label(code)} to a signed Pauli pair")


@lru_cache(maxsize=None)
def build_propagation_table(kind: str) -> tuple[tuple[int, int], ...]:
    """16 entries ``(output pair code, sign)`` indexed by input pair code."""
    if kind not in GATE_KINDS:
        raise ValueError(f"unknown gate kind {kind!r}")
    table = tuple(conjugate_pair(kind, code) for code in range(16))
    if sorted(out for out, _ in table) != list(range(16)):
        raise TableConstructionError(f"{kind} table is not a bijection")
    return table


PROPAGATION = {kind: build_propagation_table(kind) for kind in GATE_KINDS}


def propagate(kind: str, pair: int, table=None) -> tuple[int, int]:
    """Image of the Pauli pair ``pair`` through gate ``kind``: ``(pair', sign)``."""
    return (table or PROPAGATION[kind])[pair]


def propagate_qubits(kind: str, first: int, second: int) -> tuple[Pauli, Pauli]:
    """Unsigned per-qubit images; signs only contribute a global phase."""
    out, _ = PROPAGATION[kind][pair_code(first, second)]
    return split_pair(out)


# -- phase absorption ---------------------------------------------------------


class PhaseFn(IntEnum):
    IDENT = 0  # phi
    NEG = 1  # -phi
    PI_MINUS = 2  # pi - phi
    PI_PLUS = 3  # pi + phi

    def __call__(self, phi: float) -> float:
        if self is PhaseFn.IDENT:
            return normalize_angle(phi)
        if self is PhaseFn.NEG:
            return normalize_angle(-phi)
        if self is PhaseFn.PI_MINUS:
            return normalize_angle(math.pi - phi)
        return normalize_angle(math.pi + phi)

    def compose(self, other: "PhaseFn") -> "PhaseFn":
        """``self(other(phi))`` as a single tag, modulo 2 pi."""
        sign = _FN_SIGN[self] * _FN_SIGN[other]
        offset = (_FN_SIGN[self] * _FN_OFFSET[other] + _FN_OFFSET[self]) % 2
        return _FN_FROM[(sign, offset)]


_FN_SIGN = {PhaseFn.IDENT: 1, PhaseFn.NEG: -1, PhaseFn.PI_MINUS: -1, PhaseFn.PI_PLUS: 1}
_FN_OFFSET = {PhaseFn.IDENT: 0, PhaseFn.NEG: 0, PhaseFn.PI_MINUS: 1, PhaseFn.PI_PLUS: 1}
_FN_FROM = {(s, o): fn for fn in PhaseFn for s, o in [(_FN_SIGN[fn], _FN_OFFSET[fn])]}

# probe triples used to pin down each table entry; chosen generic (no special angles)
_PROBE_TRIPLES = np.random.default_rng(20240601).uniform(-math.pi, math.pi, size=(8, 3))


def _phase_distance(u: np.ndarray, v: np.ndarray) -> float:
    # 1 - |<u, v>| / 2 vanishes iff the 2x2 unitaries agree up to global phase
    return 1.0 - abs(np.vdot(u, v)) / 2.0


def _search_assignment(post: Pauli, pre: Pauli) -> tuple[PhaseFn, PhaseFn, PhaseFn]:
    p_post, p_pre = PAULI_MATRICES[post], PAULI_MATRICES[pre]
    targets = [p_post @ zxzxz(*t) @ p_pre for t in _PROBE_TRIPLES]
    # several assignments can work; prefer the one touching the fewest slots
    candidates = sorted(
        itertools.product(PhaseFn, repeat=3),
        key=lambda fns: (sum(fn is not PhaseFn.IDENT for fn in fns), fns),
    )
    for fns in candidates:
        if all(
            _phase_distance(zxzxz(*(fn(phi) for fn, phi in zip(fns, t))), target) < 1e-12
            for t, target in zip(_PROBE_TRIPLES, targets)
        ):
            _verify_assignment(post, pre, fns)
            return fns
    raise TableConstructionError(
        f"no phase-function assignment absorbs ({LABELS[post]}, {LABELS[pre]})"
    )


def _verify_assignment(post: Pauli, pre: Pauli, fns, n: int = 128, tol: float = 1e-10) -> None:
    rng = np.random.default_rng(1000 + 4 * post + pre)
    p_post, p_pre = PAULI_MATRICES[post], PAULI_MATRICES[pre]
    for t in rng.uniform(-4 * math.pi, 4 * math.pi, size=(n, 3)):
        got = zxzxz(*(fn(phi) for fn, phi in zip(fns, t)))
        want = p_post @ zxzxz(*t) @ p_pre
        if _phase_distance(got, want) > tol:
            raise TableConstructionError(
                f"assignment for ({LABELS[post]}, {LABELS[pre]}) fails verification"
            )


@lru_cache(maxsize=None)
def build_absorption_table() -> tuple[tuple[tuple[PhaseFn, PhaseFn, PhaseFn], ...], ...]:
    """``table[post][pre] = (f0, f1, f2)``; 4 x 4 x 3 entries covering the 64-slot map."""
    return tuple(tuple(_search_assignment(post, pre) for pre in Pauli) for post in Pauli)


ABSORPTION = build_absorption_table()


def absorption_index(post: int, pre: int, slot: int) -> int:
    """Flat address in the 64-entry map: 4 bits of Paulis, 2 bits of slot."""
    return (int(post) << 4) | (int(pre) << 2) | int(slot)


def absorb(post: int, pre: int, slot: int, phi: float, table=None) -> float:
    """Phase for ``slot`` after absorbing ``post`` (applied after) and ``pre`` (applied before)."""
    return (table or ABSORPTION)[post][pre][slot](phi)


def absorb_triple(post: int, pre: int, phases, table=None) -> tuple[float, float, float]:
    fns = (table or ABSORPTION)[post][pre]
    return fns[0](phases[0]), fns[1](phases[1]), fns[2](phases[2])


def tables_as_json() -> dict:
    """Both tables in a stable, human-readable form."""
    prop = {}
    for kind in GATE_KINDS:
        prop[kind] = [
            {"in": pair_label(code), "out": pair_label(out), "sign": sign}
            for code, (out, sign) in enumerate(PROPAGATION[kind])
        ]
    absorption = []
    for post, pre, slot in itertools.product(Pauli, Pauli, range(3)):
        absorption.append(
            {
                "index": absorption_index(post, pre, slot),
                "post": LABELS[post],
                "pre": LABELS[pre],
                "slot": slot,
                "fn": ABSORPTION[post][pre][slot].name,
            }
        )
    return {"encoding": {"I": 0, "X": 1, "Y": 2, "Z": 3}, "propagation": prop, "absorption": absorption}


__all__ = [
    "ABSORPTION",
    "CNOT",
    "CZ",
    "IDENTITY",
    "LABELS",
    "PROPAGATION",
    "Pauli",
    "PhaseFn",
    "TableConstructionError",
    "absorb",
    "absorb_triple",
    "absorption_index",
    "build_absorption_table",
    "build_propagation_table",
    "conjugate_pair",
    "pair_code",
    "pair_from_label",
    "pair_label",
    "pair_matrix",
    "propagate",
    "propagate_qubits",
    "split_pair",
    "tables_as_json",
]
