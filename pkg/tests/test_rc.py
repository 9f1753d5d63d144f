import json
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import circuit_oracle
from hwrc.circuit import (
    CZ,
    Circuit,
    CircuitError,
    PhaseTriple,
    materialize,
    overlap,
    random_circuit,
    single,
    two,
    unitary,
)
from hwrc.pauli import absorb_triple, propagate_qubits
from hwrc.rc import (
    ensemble_to_json,
    exhaustive_twirls,
    invert_cycle,
    merge_counts,
    randomize,
    rc_ensemble,
    substream,
)
from hwrc.sim import Simulator


def hs_overlap(a, b):
    return abs(np.trace(a.conj().T @ b)) / a.shape[0]


def test_depth_zero_is_unchanged(rng):
    c = random_circuit(2, 0, rng)
    out = randomize(c, rng)
    assert out.circuit == c and out.record == ()


def test_identity_twirl_preserves_phases(rng):
    c = random_circuit(3, 4, rng)
    out = randomize(c, twirls=[(0, 0, 0)] * 4)
    assert out.circuit == c


def test_seed_42_depth_3():
    c = random_circuit(2, 3, np.random.default_rng(7))
    out = randomize(c, np.random.default_rng(42))
    assert hs_overlap(circuit_oracle(c), circuit_oracle(out.circuit)) == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.integers(0, 10), st.integers(0, 2**32 - 1))
def test_logical_equivalence_property(width, depth, seed):
    c = random_circuit(width, depth, np.random.default_rng(seed), fill=0.8)
    out = randomize(c, substream(seed, 1))
    assert hs_overlap(unitary(c), unitary(out.circuit)) == pytest.approx(1.0, abs=1e-9)


def test_logical_equivalence_many(rng):
    for _ in range(300):
        c = random_circuit(int(rng.integers(1, 4)), int(rng.integers(0, 11)), rng, fill=0.8)
        out = randomize(c, rng)
        assert overlap(unitary(c), unitary(out.circuit)) == pytest.approx(1.0, abs=1e-9)


def test_pulse_structure_preserved(rng):
    c = random_circuit(4, 6, rng, fill=0.6)
    out = randomize(c, rng).circuit
    assert len(out.cycles) == len(c.cycles)
    assert out.two_cycles == c.two_cycles
    assert [x.tag for x in out.cycles] == [x.tag for x in c.cycles]


def test_absorption_sites_follow_the_rule(rng):
    c = materialize(random_circuit(3, 3, rng, fill=0.5))
    out = randomize(c, rng)
    for k, cyc in enumerate(out.record):
        assert cyc.inverse == invert_cycle(c.two_cycles[k], cyc.twirl)
        for q in range(3):
            g = c.two_cycles[k].gate_on(q)
            if g is None:
                # idle qubits propagate through the identity
                assert cyc.inverse[q] == cyc.twirl[q]
            else:
                a, b = g.qubits
                assert cyc.inverse[q] == propagate_qubits(g.kind, cyc.twirl[a], cyc.twirl[b])[g.qubits.index(q)]
    assert len(out.record) == c.depth
    # cycle k absorbs (twirl_k, inverse_{k-1}); the last cycle absorbs (I, inverse_last)
    posts = [r.twirl for r in out.record] + [(0, 0, 0)]
    pres = [(0, 0, 0)] + [r.inverse for r in out.record]
    for k, (before, after) in enumerate(zip(c.single_cycles, out.circuit.single_cycles)):
        for q in range(3):
            expect = PhaseTriple(*absorb_triple(posts[k][q], pres[k][q], before.triple(q)))
            assert after.triple(q) == expect


def test_invalid_circuit_rejected(rng):
    with pytest.raises(CircuitError):
        randomize(Circuit(2, (two((CZ, 0, 1)), single())), rng)


def test_wrong_twirl_count():
    c = Circuit(2, (single(), two((CZ, 0, 1)), single()))
    with pytest.raises(ValueError):
        randomize(c, twirls=[(0, 0), (0, 0)])


def test_ensemble_determinism_and_substreams(rng):
    c = random_circuit(2, 4, rng)
    a = rc_ensemble(c, 100, seed=3)
    b = rc_ensemble(c, 100, seed=3)
    assert json.dumps(ensemble_to_json(a)) == json.dumps(ensemble_to_json(b))
    assert rc_ensemble(c, 1, seed=3)[0] == randomize(c, substream(3, 0))
    # member i does not depend on how many members were requested
    assert rc_ensemble(c, 5, seed=3)[4] == a[4]
    with pytest.raises(ValueError):
        rc_ensemble(c, 0)


def test_exhaustive_depth_one_visits_every_pair_once():
    c = Circuit(2, (single(), two((CZ, 0, 1)), single()))
    members = rc_ensemble(c, 16, exhaustive=True)
    words = [m.record[0].twirl for m in members]
    assert len(set(words)) == 16
    assert Counter(words) == Counter((a, b) for a in range(4) for b in range(4))
    assert sum(1 for _ in exhaustive_twirls(2, 1)) == 16


def test_merge_counts():
    assert merge_counts([{"00": 3}]) == {"00": 3}
    assert merge_counts([{"00": 3}, {"00": 1, "11": 2}]) == {"00": 4, "11": 2}
    with pytest.raises(ValueError):
        merge_counts([{"00": 1}, {"000": 1}])


def test_merge_is_order_free():
    parts = [{"00": 1, "01": 2}, {"11": 5}, {"00": 4}]
    assert merge_counts(parts) == merge_counts(parts[::-1])
    assert sum(merge_counts(parts).values()) == 12


def test_exhaustive_noiseless_distribution_matches_bare(rng):
    c = random_circuit(2, 1, rng)
    sim = Simulator(None, 2)
    bare = sim.run(c).probabilities()
    members = rc_ensemble(c, 16, exhaustive=True)
    mixed = np.mean([sim.run(m.circuit).probabilities() for m in members], axis=0)
    assert np.max(np.abs(mixed - bare)) < 1e-12
