"""Circuit model: alternating single/two-qubit cycles with ZXZXZ single-qubit gates.

Conventions (every lookup table in :mod:`hwrc.pauli` depends on them):

* ``Z(phi) = diag(exp(-i phi/2), exp(+i phi/2))``
* ``X90 = exp(-i (pi/4) X)``
* a single-qubit gate with phases ``(phi0, phi1, phi2)`` is the matrix
  ``Z(phi2) @ X90 @ Z(phi1) @ X90 @ Z(phi0)`` (``phi0`` acts first)
* qubit 0 is the leftmost tensor factor; bitstrings list qubit 0 first
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

MAX_SIM_WIDTH = 6
TWO_PI = 2.0 * math.pi

SINGLE = "single"
TWO = "two"

CZ = "cz"
CNOT = "cnot"
IDENTITY = "id"
GATE_KINDS = (CZ, CNOT, IDENTITY)


class CircuitError(ValueError):
    """Raised when an operation receives a circuit that fails validation."""


class CapacityError(ValueError):
    """Raised when a dense simulation would exceed the supported width."""


def normalize_angle(phi: float) -> float:
    """Wrap ``phi`` into (-pi, pi]. Values already in range are returned untouched."""
    phi = float(phi)
    if not math.isfinite(phi):
        raise ValueError(f"angle must be finite, got {phi!r}")
    if -math.pi < phi <= math.pi:
        return phi
    r = math.remainder(phi, TWO_PI)
    if r <= -math.pi:
        r += TWO_PI
    return r


# -- matrices -----------------------------------------------------------------

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
X90 = (I2 - 1j * PAULI_X) / math.sqrt(2.0)


def z_rotation(phi: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * phi), np.exp(0.5j * phi)])


def zxzxz(phi0: float, phi1: float, phi2: float, overrotation: float = 0.0) -> np.ndarray:
    """2x2 unitary of the virtual-Z decomposition, optionally with over-rotated X90 pulses."""
    x90 = X90
    if overrotation:
        a = 0.5 * (math.pi / 2 + overrotation)
        x90 = math.cos(a) * I2 - 1j * math.sin(a) * PAULI_X
    return z_rotation(phi2) @ x90 @ z_rotation(phi1) @ x90 @ z_rotation(phi0)


CZ_MATRIX = np.diag([1, 1, 1, -1]).astype(complex)
# first qubit is the control
CNOT_MATRIX = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def two_qubit_matrix(kind: str) -> np.ndarray:
    """4x4 matrix of ``kind`` acting on (first, second) with first as the left factor."""
    if kind == CZ:
        return CZ_MATRIX
    if kind == CNOT:
        return CNOT_MATRIX
    if kind == IDENTITY:
        return np.eye(4, dtype=complex)
    raise ValueError(f"unknown two-qubit gate kind {kind!r}")


# -- data model ---------------------------------------------------------------


@dataclass(frozen=True)
class PhaseTriple:
    """Phases of ``Z(phi2) X90 Z(phi1) X90 Z(phi0)``, each wrapped into (-pi, pi]."""

    phi0: float = 0.0
    phi1: float = math.pi
    phi2: float = math.pi

    def __post_init__(self):
        for name in ("phi0", "phi1", "phi2"):
            object.__setattr__(self, name, normalize_angle(getattr(self, name)))

    def __iter__(self):
        return iter((self.phi0, self.phi1, self.phi2))

    def __getitem__(self, slot: int) -> float:
        return (self.phi0, self.phi1, self.phi2)[slot]

    def matrix(self) -> np.ndarray:
        return zxzxz(self.phi0, self.phi1, self.phi2)


# Z(pi) X90 Z(pi) X90 = Z(pi) Z(pi) up to phase, i.e. the identity.
IDENTITY_TRIPLE = PhaseTriple(0.0, math.pi, math.pi)


@dataclass(frozen=True)
class TwoQubitGate:
    kind: str
    qubits: tuple[int, int]

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown two-qubit gate kind {self.kind!r}")
        a, b = (int(q) for q in self.qubits)
        # CZ and IDENTITY are symmetric; CNOT keeps (control, target)
        if self.kind != CNOT and a > b:
            a, b = b, a
        object.__setattr__(self, "qubits", (a, b))


@dataclass(frozen=True)
class SingleCycle:
    gates: Mapping[int, PhaseTriple] = field(default_factory=dict)
    tag = SINGLE

    def __post_init__(self):
        object.__setattr__(self, "gates", dict(sorted((int(q), t) for q, t in self.gates.items())))

    def triple(self, qubit: int) -> PhaseTriple:
        return self.gates.get(qubit, IDENTITY_TRIPLE)

    def __hash__(self):
        return hash(tuple(self.gates.items()))


@dataclass(frozen=True)
class TwoCycle:
    gates: tuple[TwoQubitGate, ...] = ()
    tag = TWO

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))

    def gate_on(self, qubit: int) -> TwoQubitGate | None:
        for g in self.gates:
            if qubit in g.qubits:
                return g
        return None


Cycle = Union[SingleCycle, TwoCycle]


@dataclass(frozen=True)
class Circuit:
    width: int
    cycles: tuple[Cycle, ...]

    def __post_init__(self):
        object.__setattr__(self, "cycles", tuple(self.cycles))

    @property
    def depth(self) -> int:
        """Number of two-qubit cycles."""
        return sum(1 for c in self.cycles if c.tag == TWO)

    @property
    def single_cycles(self) -> list[SingleCycle]:
        return [c for c in self.cycles if c.tag == SINGLE]

    @property
    def two_cycles(self) -> list[TwoCycle]:
        return [c for c in self.cycles if c.tag == TWO]

    def with_single_cycles(self, singles: Sequence[SingleCycle]) -> "Circuit":
        """Copy of this circuit with its SINGLE cycles replaced in order."""
        it = iter(singles)
        cycles = tuple(next(it) if c.tag == SINGLE else c for c in self.cycles)
        return Circuit(self.width, cycles)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    message: str | None = None

    def __bool__(self):
        return self.ok


def validate(circuit: Circuit) -> ValidationReport:
    if circuit.width < 1:
        return ValidationReport(False, "width must be at least 1")
    if not circuit.cycles:
        return ValidationReport(False, "circuit has no cycles")
    if circuit.cycles[0].tag != SINGLE:
        return ValidationReport(False, "cycles[0]: circuit must begin with SINGLE")
    if circuit.cycles[-1].tag != SINGLE:
        return ValidationReport(False, f"cycles[{len(circuit.cycles) - 1}]: circuit must end with SINGLE")
    for i, (a, b) in enumerate(zip(circuit.cycles, circuit.cycles[1:])):
        if a.tag == b.tag:
            return ValidationReport(False, f"cycles[{i + 1}]: follows another {a.tag.upper()} cycle")
    for i, c in enumerate(circuit.cycles):
        if c.tag == SINGLE:
            for q in c.gates:
                if not 0 <= q < circuit.width:
                    return ValidationReport(False, f"cycles[{i}]: qubit {q} outside width {circuit.width}")
            continue
        seen: set[int] = set()
        for g in c.gates:
            a, b = g.qubits
            if a == b:
                return ValidationReport(False, f"cycles[{i}]: gate {g.kind} acts twice on qubit {a}")
            for q in g.qubits:
                if not 0 <= q < circuit.width:
                    return ValidationReport(False, f"cycles[{i}]: qubit {q} outside width {circuit.width}")
                if q in seen:
                    return ValidationReport(False, f"cycles[{i}]: qubit {q} used by more than one gate")
                seen.add(q)
    return ValidationReport(True)


def require_valid(circuit: Circuit) -> None:
    report = validate(circuit)
    if not report.ok:
        raise CircuitError(report.message)


# -- dense evaluation ---------------------------------------------------------


def embed(op: np.ndarray, qubits: Sequence[int], width: int) -> np.ndarray:
    """Lift a k-qubit operator on ``qubits`` (in the operator's own order) to ``width`` qubits."""
    k = len(qubits)
    dim = 2**width
    t = op.reshape((2,) * (2 * k))
    full = np.eye(dim, dtype=complex).reshape((2,) * (2 * width))
    # contract op's input legs with the identity's output legs on the target qubits
    full = np.tensordot(t, full, axes=(list(range(k, 2 * k)), list(qubits)))
    full = np.moveaxis(full, list(range(k)), list(qubits))
    return full.reshape(dim, dim)


def single_cycle_matrix(cycle: SingleCycle, width: int) -> np.ndarray:
    # absent qubits are exactly I; the identity triple itself evaluates to -I
    return reduce(np.kron, [cycle.gates[q].matrix() if q in cycle.gates else I2 for q in range(width)])


def two_cycle_matrix(cycle: TwoCycle, width: int) -> np.ndarray:
    u = np.eye(2**width, dtype=complex)
    for g in cycle.gates:
        if g.kind != IDENTITY:
            u = embed(two_qubit_matrix(g.kind), g.qubits, width) @ u
    return u


def cycle_matrix(cycle: Cycle, width: int) -> np.ndarray:
    if cycle.tag == SINGLE:
        return single_cycle_matrix(cycle, width)
    return two_cycle_matrix(cycle, width)


def unitary(circuit: Circuit) -> np.ndarray:
    """Dense unitary of the whole circuit, first cycle applied first."""
    if circuit.width > MAX_SIM_WIDTH:
        raise CapacityError(f"width {circuit.width} exceeds dense limit {MAX_SIM_WIDTH}")
    u = np.eye(2**circuit.width, dtype=complex)
    for c in circuit.cycles:
        u = cycle_matrix(c, circuit.width) @ u
    return u


def overlap(u: np.ndarray, v: np.ndarray) -> float:
    """Normalized Hilbert-Schmidt overlap magnitude; 1 iff equal up to global phase."""
    return float(abs(np.vdot(u, v)) / u.shape[0])


def equal_up_to_phase(u: np.ndarray, v: np.ndarray) -> float:
    """Max elementwise deviation between ``u`` and ``v`` after aligning global phase."""
    k = int(np.argmax(np.abs(v)))
    phase = u.flat[k] / v.flat[k]
    phase /= abs(phase)
    return float(np.max(np.abs(u - phase * v)))


# -- constructors -------------------------------------------------------------

_NAMED = {
    "i": I2,
    "id": I2,
    "x": PAULI_X,
    "y": PAULI_Y,
    "z": PAULI_Z,
    "h": np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2.0),
    "s": np.diag([1, 1j]),
    "sdg": np.diag([1, -1j]),
    "t": np.diag([1, np.exp(0.25j * math.pi)]),
    "tdg": np.diag([1, np.exp(-0.25j * math.pi)]),
    "x90": X90,
    "sx": X90,
    "sxdg": X90.conj().T,
    "y90": np.array([[1, -1], [1, 1]], dtype=complex) / math.sqrt(2.0),
    "ym90": np.array([[1, 1], [-1, 1]], dtype=complex) / math.sqrt(2.0),
}


def zyz_angles(u: np.ndarray) -> tuple[float, float, float]:
    """Angles (theta, phi, lam) with ``u ~ Rz(phi) Ry(theta) Rz(lam)`` up to global phase."""
    u = np.asarray(u, dtype=complex)
    u = u / np.sqrt(np.linalg.det(u))
    theta = 2.0 * math.atan2(abs(u[1, 0]), abs(u[0, 0]))
    s = math.atan2(u[1, 1].imag, u[1, 1].real)  # (phi + lam) / 2
    d = math.atan2(u[1, 0].imag, u[1, 0].real)  # (phi - lam) / 2
    if abs(u[0, 0]) < 1e-12:
        s = 0.0
    if abs(u[1, 0]) < 1e-12:
        d = 0.0
    return theta, s + d, s - d


def phases_from_unitary(u: np.ndarray) -> PhaseTriple:
    theta, phi, lam = zyz_angles(u)
    return phases_from_euler(theta, phi, lam)


def phases_from_euler(theta: float, phi: float, lam: float) -> PhaseTriple:
    """Triple for ``Rz(phi) Ry(theta) Rz(lam)`` (the usual U3)."""
    for a in (theta, phi, lam):
        if not math.isfinite(a):
            raise ValueError("Euler angles must be finite")
    return PhaseTriple(lam, theta + math.pi, phi + math.pi)


def phases_from_standard_gate(gate) -> PhaseTriple:
    """Triple for a named gate (``"h"``, ``"x90"``, ...), a 2x2 matrix, or a (theta, phi, lam) tuple."""
    if isinstance(gate, str):
        try:
            return phases_from_unitary(_NAMED[gate.lower()])
        except KeyError:
            raise ValueError(f"unknown gate name {gate!r}") from None
    arr = np.asarray(gate)
    if arr.shape == (2, 2):
        return phases_from_unitary(arr)
    if arr.shape == (3,):
        return phases_from_euler(*(float(a) for a in arr))
    raise ValueError(f"cannot interpret {gate!r} as a single-qubit gate")


def z_phase_gate(theta: float) -> PhaseTriple:
    """Z(theta) with theta carried only by the virtual-Z slots."""
    return PhaseTriple(theta, math.pi, math.pi)


# -- building circuits --------------------------------------------------------


def single(gates: Mapping[int, PhaseTriple | Iterable[float]] | None = None) -> SingleCycle:
    out = {}
    for q, t in (gates or {}).items():
        out[int(q)] = t if isinstance(t, PhaseTriple) else PhaseTriple(*t)
    return SingleCycle(out)


def two(*gates: tuple[str, int, int] | TwoQubitGate) -> TwoCycle:
    out = []
    for g in gates:
        out.append(g if isinstance(g, TwoQubitGate) else TwoQubitGate(g[0], (g[1], g[2])))
    return TwoCycle(tuple(out))


def materialize(circuit: Circuit) -> Circuit:
    """Give every qubit an explicit triple in every SINGLE cycle."""
    singles = [
        SingleCycle({q: c.triple(q) for q in range(circuit.width)}) for c in circuit.single_cycles
    ]
    return circuit.with_single_cycles(singles)


def random_circuit(
    width: int,
    depth: int,
    rng: np.random.Generator,
    kinds: Sequence[str] = (CZ, CNOT),
    fill: float = 1.0,
) -> Circuit:
    """Random alternating circuit: uniform phases, random disjoint pairs of ``kinds``.

    ``fill`` is the probability that each candidate pair actually gets a gate,
    so values below 1 leave some qubits idle.
    """
    cycles: list[Cycle] = []
    for layer in range(depth + 1):
        cycles.append(
            SingleCycle({q: PhaseTriple(*rng.uniform(-math.pi, math.pi, 3)) for q in range(width)})
        )
        if layer == depth:
            break
        order = rng.permutation(width)
        gates = []
        for a, b in zip(order[::2], order[1::2]):
            if rng.random() < fill:
                kind = kinds[int(rng.integers(len(kinds)))]
                gates.append(TwoQubitGate(kind, (int(a), int(b))))
        cycles.append(TwoCycle(tuple(gates)))
    return Circuit(width, tuple(cycles))


# -- JSON ---------------------------------------------------------------------


def circuit_to_json(circuit: Circuit) -> dict:
    cycles = []
    for c in circuit.cycles:
        if c.tag == SINGLE:
            cycles.append(
                {"type": "single", "gates": {str(q): [t.phi0, t.phi1, t.phi2] for q, t in c.gates.items()}}
            )
        else:
            cycles.append(
                {"type": "two", "gates": [{"kind": g.kind, "qubits": list(g.qubits)} for g in c.gates]}
            )
    return {"width": circuit.width, "cycles": cycles}


def circuit_from_json(data: Mapping) -> Circuit:
    """Parse the circuit JSON schema; raises ``CircuitError`` naming the offending field."""
    try:
        width = data["width"]
    except (KeyError, TypeError):
        raise CircuitError("missing field 'width'") from None
    if not isinstance(width, int) or isinstance(width, bool):
        raise CircuitError("field 'width' must be an integer")
    raw = data.get("cycles")
    if not isinstance(raw, list):
        raise CircuitError("field 'cycles' must be an array")
    cycles: list[Cycle] = []
    for i, entry in enumerate(raw):
        where = f"cycles[{i}]"
        if not isinstance(entry, Mapping):
            raise CircuitError(f"{where} must be an object")
        kind = entry.get("type")
        gates = entry.get("gates", {} if kind == "single" else [])
        if kind == "single":
            if not isinstance(gates, Mapping):
                raise CircuitError(f"{where}.gates must be an object")
            triples = {}
            for q, phases in gates.items():
                try:
                    qi = int(q)
                    vals = [float(p) for p in phases]
                    if len(vals) != 3:
                        raise ValueError
                    triples[qi] = PhaseTriple(*vals)
                except (TypeError, ValueError):
                    raise CircuitError(f"{where}.gates[{q!r}] must be three finite angles") from None
            cycles.append(SingleCycle(triples))
        elif kind == "two":
            if not isinstance(gates, list):
                raise CircuitError(f"{where}.gates must be an array")
            out = []
            for j, g in enumerate(gates):
                try:
                    qa, qb = g["qubits"]
                    out.append(TwoQubitGate(str(g["kind"]).lower(), (int(qa), int(qb))))
                except (KeyError, TypeError, ValueError):
                    raise CircuitError(f"{where}.gates[{j}] must have 'kind' in {GATE_KINDS} and two 'qubits'") from None
            cycles.append(TwoCycle(tuple(out)))
        else:
            raise CircuitError(f"{where}.type must be 'single' or 'two'")
    return Circuit(width, tuple(cycles))
