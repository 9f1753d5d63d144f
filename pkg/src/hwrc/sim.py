"""Exact density-matrix simulation, Pauli transfer matrices and error generators.

Noise attaches *after* each two-qubit gate, in the order
coherent -> stochastic Pauli -> depolarizing -> amplitude damping. The same
convention is used for bare and twirled evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.linalg

from .circuit import (
    I2,
    IDENTITY,
    MAX_SIM_WIDTH,
    SINGLE,
    CapacityError,
    Circuit,
    embed,
    two_qubit_matrix,
    zxzxz,
)
from .pauli import LABELS, PAULI_MATRICES, pair_from_label, pair_matrix, propagate

POSITIVITY_TOL = 1e-10
HERMITIAN_TOL = 1e-12


class StateError(ValueError):
    """A density matrix violated trace, Hermiticity or positivity beyond tolerance."""


class GeneratorUndefined(ValueError):
    """No principal logarithm: the error channel is too far from the identity."""


# -- noise model --------------------------------------------------------------


@dataclass(frozen=True)
class CoherentTerm:
    pauli: str = "ZZ"
    theta: float = 0.0

    def __post_init__(self):
        pair_from_label(self.pauli)
        if not math.isfinite(self.theta):
            raise ValueError("coherent angle must be finite")

    def unitary(self) -> np.ndarray:
        h = pair_matrix(pair_from_label(self.pauli))
        return math.cos(self.theta / 2) * np.eye(4) - 1j * math.sin(self.theta / 2) * h


@dataclass(frozen=True)
class GateNoise:
    coherent: CoherentTerm | None = None
    stochastic: Mapping[str, float] = field(default_factory=dict)
    damping: float = 0.0
    depolarizing: float | None = None  # lambda in rho -> lambda rho + (1 - lambda) I/4

    def __post_init__(self):
        probs = {k.upper(): float(v) for k, v in self.stochastic.items()}
        for label, p in probs.items():
            if pair_from_label(label) == 0:
                raise ValueError("stochastic term 'II' is implied by the remaining probability")
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability for {label} outside [0, 1]")
        if sum(probs.values()) > 1.0 + 1e-12:
            raise ValueError("stochastic probabilities sum to more than 1")
        object.__setattr__(self, "stochastic", dict(sorted(probs.items())))
        if not 0.0 <= self.damping <= 1.0:
            raise ValueError("damping rate outside [0, 1]")
        if self.depolarizing is not None and not 0.0 <= self.depolarizing <= 1.0:
            raise ValueError("depolarizing parameter outside [0, 1]")

    def kraus_terms(self) -> list[list[np.ndarray]]:
        """Each element is one channel (a Kraus list) on the gate's two qubits, in order."""
        terms = []
        if self.coherent is not None and self.coherent.theta:
            terms.append([self.coherent.unitary()])
        if self.stochastic:
            p_id = 1.0 - sum(self.stochastic.values())
            ops = [math.sqrt(max(p_id, 0.0)) * np.eye(4, dtype=complex)]
            ops += [math.sqrt(p) * pair_matrix(pair_from_label(l)) for l, p in self.stochastic.items() if p]
            terms.append(ops)
        if self.depolarizing is not None and self.depolarizing != 1.0:
            p = (1.0 - self.depolarizing) / 16.0
            ops = [math.sqrt(1.0 - 15.0 * p) * np.eye(4, dtype=complex)]
            ops += [math.sqrt(p) * pair_matrix(c) for c in range(1, 16)]
            terms.append(ops)
        if self.damping:
            k = amplitude_damping_kraus(self.damping)
            terms.append([np.kron(a, I2) for a in k])
            terms.append([np.kron(I2, a) for a in k])
        return terms


@dataclass(frozen=True)
class NoiseModel:
    gates: Mapping[str, GateNoise] = field(default_factory=dict)
    x90_overrotation: float = 0.0

    def for_kind(self, kind: str) -> GateNoise | None:
        return self.gates.get(kind)

    @property
    def noiseless(self) -> bool:
        return not self.x90_overrotation and not any(g.kraus_terms() for g in self.gates.values())


NOISELESS = NoiseModel()


def amplitude_damping_kraus(gamma: float) -> list[np.ndarray]:
    return [
        np.array([[1, 0], [0, math.sqrt(1 - gamma)]], dtype=complex),
        np.array([[0, math.sqrt(gamma)], [0, 0]], dtype=complex),
    ]


def noise_from_json(data: Mapping) -> NoiseModel:
    gates = {}
    overrotation = 0.0
    for key, entry in data.items():
        key = key.lower()
        if key == "x90":
            overrotation = float(entry.get("overrotation", 0.0))
            continue
        if key not in ("cz", "cnot", "id"):
            raise ValueError(f"unknown noise key {key!r}")
        coherent = entry.get("coherent")
        gates[key] = GateNoise(
            coherent=CoherentTerm(coherent.get("pauli", "ZZ"), float(coherent["theta"])) if coherent else None,
            stochastic=entry.get("stochastic", {}),
            damping=float(entry.get("damping", 0.0)),
            depolarizing=None if entry.get("depolarizing") is None else float(entry["depolarizing"]),
        )
    return NoiseModel(gates, overrotation)


def noise_to_json(noise: NoiseModel) -> dict:
    out: dict = {}
    for kind, g in sorted(noise.gates.items()):
        entry: dict = {}
        if g.coherent is not None:
            entry["coherent"] = {"pauli": g.coherent.pauli, "theta": g.coherent.theta}
        if g.stochastic:
            entry["stochastic"] = dict(g.stochastic)
        if g.damping:
            entry["damping"] = g.damping
        if g.depolarizing is not None:
            entry["depolarizing"] = g.depolarizing
        out[kind] = entry
    if noise.x90_overrotation:
        out["x90"] = {"overrotation": noise.x90_overrotation}
    return out


# -- states -------------------------------------------------------------------


@dataclass(frozen=True)
class DensityState:
    width: int
    rho: np.ndarray

    @classmethod
    def zero(cls, width: int) -> "DensityState":
        if width > MAX_SIM_WIDTH:
            raise CapacityError(f"width {width} exceeds dense limit {MAX_SIM_WIDTH}")
        rho = np.zeros((2**width, 2**width), dtype=complex)
        rho[0, 0] = 1.0
        return cls(width, rho)

    def check(self) -> "DensityState":
        rho = self.rho
        if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
            raise StateError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1.0) > HERMITIAN_TOL:
            raise StateError(f"trace is {np.trace(rho).real!r}, not 1")
        if np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))) < -POSITIVITY_TOL:
            raise StateError("density matrix has a negative eigenvalue")
        return self

    def probabilities(self) -> np.ndarray:
        p = np.real(np.diag(self.rho)).copy()
        if p.min() < -POSITIVITY_TOL:
            raise StateError("negative outcome probability")
        p = np.clip(p, 0.0, None)
        return p / p.sum()

    def expectation(self, label: str) -> float:
        """Expectation of a Pauli string like ``"IZ"`` (qubit 0 first)."""
        if len(label) != self.width:
            raise ValueError(f"label {label!r} does not match width {self.width}")
        op = reduce(np.kron, [PAULI_MATRICES[LABELS.index(ch)] for ch in label.upper()])
        return float(np.real(np.trace(op @ self.rho)))


def _apply_kraus(rho: np.ndarray, ops: np.ndarray) -> np.ndarray:
    # ops: (r, d, d)
    return np.einsum("rij,jk,rlk->il", ops, rho, ops.conj(), optimize=True)


class Simulator:
    """Noisy circuit evaluation with per-gate channels cached on the full register."""

    def __init__(self, noise: NoiseModel | None = None, width: int = 2, twirl: bool = False):
        """``twirl=True`` replaces every two-qubit gate by its exhaustively twirled channel."""
        if width > MAX_SIM_WIDTH:
            raise CapacityError(f"width {width} exceeds dense limit {MAX_SIM_WIDTH}")
        self.noise = noise or NOISELESS
        self.width = width
        self.twirl = twirl
        self._gate_cache: dict = {}

    def _gate_channel(self, kind: str, qubits: tuple[int, int]) -> np.ndarray:
        key = (kind, qubits)
        if key not in self._gate_cache:
            gate_noise = self.noise.for_kind(kind)
            if self.twirl:
                ops = kraus_from_channel(twirled_channel(kind, gate_noise))
            else:
                ops = noisy_gate_kraus(kind, gate_noise)
            self._gate_cache[key] = np.stack([embed(k, qubits, self.width) for k in ops])
        return self._gate_cache[key]

    def single_unitary(self, cycle) -> np.ndarray:
        eps = self.noise.x90_overrotation
        return reduce(
            np.kron,
            [zxzxz(*cycle.gates[q], overrotation=eps) if q in cycle.gates else I2 for q in range(self.width)],
        )

    def run(self, circuit: Circuit, state: DensityState | None = None) -> DensityState:
        if circuit.width != self.width:
            raise ValueError("simulator width does not match circuit")
        rho = (state or DensityState.zero(self.width)).rho
        for cycle in circuit.cycles:
            if cycle.tag == SINGLE:
                u = self.single_unitary(cycle)
                rho = u @ rho @ u.conj().T
            else:
                for g in cycle.gates:
                    if g.kind == IDENTITY and self.noise.for_kind(IDENTITY) is None:
                        continue
                    rho = _apply_kraus(rho, self._gate_channel(g.kind, g.qubits))
        return DensityState(self.width, rho)


def apply_circuit(state: DensityState, circuit: Circuit, noise: NoiseModel | None = None) -> DensityState:
    return Simulator(noise, circuit.width).run(circuit, state)


def sample(state: DensityState, shots: int, rng: np.random.Generator) -> dict[str, int]:
    """Computational-basis counts keyed by bitstring (qubit 0 first)."""
    counts = rng.multinomial(shots, state.probabilities())
    return {format(i, f"0{state.width}b"): int(c) for i, c in enumerate(counts) if c}


def sample_outcomes(probabilities: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Per-shot outcome indices, in shot order."""
    return rng.choice(len(probabilities), size=shots, p=probabilities)


def z_parity(outcome: int, width: int, qubits: Sequence[int]) -> int:
    """+1/-1 eigenvalue of the Z string on ``qubits`` for a basis-state index."""
    bits = sum((outcome >> (width - 1 - q)) & 1 for q in qubits)
    return -1 if bits & 1 else 1


def expectation_from_counts(counts: Mapping[str, int], qubits: Sequence[int]) -> float:
    total = sum(counts.values())
    acc = 0
    for bits, c in counts.items():
        acc += c * (-1 if sum(int(bits[q]) for q in qubits) & 1 else 1)
    return acc / total


# -- channels and PTMs --------------------------------------------------------


def noisy_gate_kraus(kind: str, noise: GateNoise | None) -> list[np.ndarray]:
    """Kraus operators of (noise after gate) on the pair, compressed to Choi rank."""
    ops = [two_qubit_matrix(kind)]
    for term in (noise.kraus_terms() if noise else []):
        ops = [k @ o for k in term for o in ops]
    return compress_kraus(ops)


def compress_kraus(ops: Sequence[np.ndarray], tol: float = 1e-14) -> list[np.ndarray]:
    if len(ops) <= 1:
        return list(ops)
    d = ops[0].shape[0]
    vecs = np.stack([o.reshape(-1) for o in ops], axis=1)  # columns: vec(K)
    choi = vecs @ vecs.conj().T
    w, v = np.linalg.eigh(choi)
    return [math.sqrt(x) * v[:, i].reshape(d, d) for i, x in enumerate(w) if x > tol]


def kraus_from_channel(channel: Callable[[np.ndarray], np.ndarray], d: int = 4) -> list[np.ndarray]:
    """Minimal Kraus set of a linear map given as a callable, via its Choi matrix."""
    choi = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1.0
            choi += np.kron(channel(e), e)  # sum_ij Lambda(|i><j|) (x) |i><j|
    w, v = np.linalg.eigh(0.5 * (choi + choi.conj().T))
    if w.min() < -POSITIVITY_TOL:
        raise StateError("channel is not completely positive")
    # each eigenvector is sum_i K|i> (x) |i>, i.e. vec(K) in row-major order
    return [math.sqrt(x) * v[:, n].reshape(d, d) for n, x in enumerate(w) if x > 1e-14]


def kraus_channel(ops: Sequence[np.ndarray]) -> Callable[[np.ndarray], np.ndarray]:
    return lambda rho: sum(k @ rho @ k.conj().T for k in ops)


def unitary_channel(u: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    return lambda rho: u @ rho @ u.conj().T


PAULI_BASIS_2Q = tuple(pair_matrix(c) for c in range(16))


def ptm_of(channel: Callable[[np.ndarray], np.ndarray] | Sequence[np.ndarray]) -> np.ndarray:
    """16x16 PTM ``R[i, j] = Tr[P_i channel(P_j)] / 4`` in II, IX, ..., ZZ order.

    ``channel`` is a callable on 4x4 matrices or a list of Kraus operators.
    """
    if not callable(channel):
        channel = kraus_channel(channel)
    r = np.empty((16, 16))
    for j, pj in enumerate(PAULI_BASIS_2Q):
        out = channel(pj)
        for i, pi in enumerate(PAULI_BASIS_2Q):
            r[i, j] = np.real(np.trace(pi @ out)) / 4.0
    return r


def ideal_ptm(kind: str) -> np.ndarray:
    return ptm_of(unitary_channel(two_qubit_matrix(kind)))


def noisy_ptm(kind: str, noise: GateNoise | None) -> np.ndarray:
    return ptm_of(noisy_gate_kraus(kind, noise))


def depolarizing_ptm(lam: float) -> np.ndarray:
    return np.diag([1.0] + [lam] * 15)


def twirled_channel(kind: str, noise: GateNoise | None) -> Callable[[np.ndarray], np.ndarray]:
    """Exact 16-term average of inversion . noisy gate . twirl."""
    noisy = kraus_channel(noisy_gate_kraus(kind, noise))
    terms = []
    for code in range(16):
        inv, _ = propagate(kind, code)
        terms.append((pair_matrix(code), pair_matrix(inv)))

    def channel(rho: np.ndarray) -> np.ndarray:
        acc = np.zeros_like(rho, dtype=complex)
        for t, inv in terms:
            acc += inv @ noisy(t @ rho @ t) @ inv
        return acc / 16.0

    return channel


def error_ptm(noisy: np.ndarray, ideal: np.ndarray) -> np.ndarray:
    """``noisy @ ideal^-1``: the error acting after the ideal gate."""
    return noisy @ np.linalg.inv(ideal)


def twirl_average(kind: str, noise: GateNoise | None) -> np.ndarray:
    """Error PTM of the exhaustively Pauli-twirled noisy gate."""
    return error_ptm(ptm_of(twirled_channel(kind, noise)), ideal_ptm(kind))


def untwirled_error_ptm(kind: str, noise: GateNoise | None) -> np.ndarray:
    return error_ptm(noisy_ptm(kind, noise), ideal_ptm(kind))


def off_diagonal_max(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - np.diag(np.diag(m)))))


def principal_log(m: np.ndarray, cond_limit: float = 1e8, axis_tol: float = 1e-9) -> np.ndarray:
    """Principal matrix logarithm by eigendecomposition, refusing ill-posed inputs."""
    w, v = np.linalg.eig(m)
    if np.linalg.cond(v) > cond_limit:
        raise GeneratorUndefined("error channel is (nearly) defective; eigenbasis ill-conditioned")
    if np.any(np.abs(w) < axis_tol):
        raise GeneratorUndefined("error channel is singular")
    if np.any((w.real < 0) & (np.abs(w.imag) < axis_tol)):
        raise GeneratorUndefined("generator undefined at this noise strength (eigenvalue on the branch cut)")
    log = v @ np.diag(np.log(w)) @ np.linalg.inv(v)
    if np.max(np.abs(log.imag)) > 1e-8:
        raise GeneratorUndefined("principal logarithm is not real")
    return log.real


def error_generator(noisy: np.ndarray, ideal: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """``L`` with ``expm(L) @ ideal == noisy``; checked against ``tol``."""
    gen = principal_log(error_ptm(noisy, ideal))
    if np.max(np.abs(scipy.linalg.expm(gen) @ ideal - noisy)) > tol:
        raise GeneratorUndefined("reconstructed gate misses the noisy PTM")
    return gen


def process_infidelity_of_ptm(err: np.ndarray) -> float:
    """Process infidelity ``1 - Tr(R)/d^2`` of an error PTM."""
    return 1.0 - float(np.trace(err)) / err.shape[0]
