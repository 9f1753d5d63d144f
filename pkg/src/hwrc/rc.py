"""Reference software randomized compiling.

Before every two-qubit cycle a Pauli is drawn per qubit (idle qubits included),
propagated through the cycle, and both the twirl and the resulting inversion
are folded into the neighbouring single-qubit cycles by rewriting virtual-Z
phases. The pulse structure never changes.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .circuit import Circuit, PhaseTriple, SingleCycle, TwoCycle, circuit_to_json, require_valid
from .pauli import absorb_triple, propagate_qubits


@dataclass(frozen=True)
class CycleTwirl:
    twirl: tuple[int, ...]
    inverse: tuple[int, ...]


@dataclass(frozen=True)
class RandomizedCircuit:
    circuit: Circuit
    record: tuple[CycleTwirl, ...]

    @property
    def twirl_words(self) -> list[tuple[int, ...]]:
        return [c.twirl for c in self.record]


def invert_cycle(cycle: TwoCycle, twirl: Sequence[int]) -> tuple[int, ...]:
    """Per-qubit inversion Paulis for ``twirl`` pushed through ``cycle`` (signs dropped)."""
    inverse = list(twirl)
    for g in cycle.gates:
        a, b = g.qubits
        inverse[a], inverse[b] = propagate_qubits(g.kind, twirl[a], twirl[b])
    return tuple(int(p) for p in inverse)


def rewrite_single(cycle: SingleCycle, width: int, post: Sequence[int], pre: Sequence[int]) -> SingleCycle:
    return SingleCycle(
        {q: PhaseTriple(*absorb_triple(post[q], pre[q], cycle.triple(q))) for q in range(width)}
    )


def randomize(
    circuit: Circuit,
    rng: np.random.Generator | None = None,
    twirls: Sequence[Sequence[int]] | None = None,
) -> RandomizedCircuit:
    """One randomization of ``circuit``.

    Twirls are drawn from ``rng`` (one Pauli code per qubit per two-qubit
    cycle) unless ``twirls`` forces them explicitly.
    """
    require_valid(circuit)
    depth = circuit.depth
    if depth == 0:
        return RandomizedCircuit(circuit, ())
    if twirls is None:
        if rng is None:
            raise ValueError("need an rng or explicit twirls")
        twirls = [tuple(int(p) for p in rng.integers(0, 4, size=circuit.width)) for _ in range(depth)]
    elif len(twirls) != depth:
        raise ValueError(f"expected {depth} twirl words, got {len(twirls)}")

    width = circuit.width
    identity = (0,) * width
    inverse = identity
    singles = []
    record = []
    two_cycles = circuit.two_cycles
    for k, cycle in enumerate(circuit.single_cycles):
        twirl = tuple(int(p) for p in twirls[k]) if k < depth else identity
        singles.append(rewrite_single(cycle, width, twirl, inverse))
        if k < depth:
            inverse = invert_cycle(two_cycles[k], twirl)
            record.append(CycleTwirl(twirl, inverse))
    return RandomizedCircuit(circuit.with_single_cycles(singles), tuple(record))


def substream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for member ``index`` of an ensemble seeded by ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))


def exhaustive_twirls(width: int, depth: int) -> Iterable[list[tuple[int, ...]]]:
    """Every twirl assignment in lexicographic order (qubit 0 of cycle 0 most significant)."""
    for flat in itertools.product(range(4), repeat=width * depth):
        yield [tuple(flat[k * width : (k + 1) * width]) for k in range(depth)]


def rc_ensemble(circuit: Circuit, n: int, seed: int = 0, exhaustive: bool = False) -> list[RandomizedCircuit]:
    if n < 1:
        raise ValueError("n must be at least 1")
    require_valid(circuit)
    if exhaustive:
        words = itertools.islice(exhaustive_twirls(circuit.width, circuit.depth), n)
        return [randomize(circuit, twirls=w) for w in words]
    return [randomize(circuit, substream(seed, i)) for i in range(n)]


def merge_counts(results: Sequence[Mapping[str, int]]) -> dict[str, int]:
    """Sum per-randomization outcome counts into one histogram."""
    widths = {len(k) for r in results for k in r}
    if len(widths) > 1:
        raise ValueError(f"outcome strings have mismatched widths {sorted(widths)}")
    total: Counter[str] = Counter()
    for r in results:
        total.update(r)
    return dict(sorted(total.items()))


def ensemble_to_json(ensemble: Sequence[RandomizedCircuit]) -> list[dict]:
    return [
        {
            "circuit": circuit_to_json(r.circuit),
            "twirls": [list(c.twirl) for c in r.record],
            "inverses": [list(c.inverse) for c in r.record],
        }
        for r in ensemble
    ]
