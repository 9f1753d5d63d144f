"""Cycle benchmarking of a dressed two-qubit cycle, software RC vs gateware FRC.

Each (Pauli, depth) circuit prepares a +1 eigenstate of ``P``, applies the
target cycle ``m`` times with a single-qubit twirl site before each repetition,
undoes the preparation in the basis of the propagated Pauli and measures Z on
its support. Software mode compiles ``n_rand`` randomizations per circuit;
gateware mode compiles one circuit and randomizes every shot in the emulator.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
import numpy as np

from ..circuit import (
    CZ,
    Circuit,
    PhaseTriple,
    SingleCycle,
    TwoCycle,
    TwoQubitGate,
    phases_from_standard_gate,
    require_valid,
)
from ..gateware import GateDurations, compile_to_cores, execute_shot, lfsr_width_for, shot_start
from ..pauli import pair_from_label, pair_label, propagate
from ..rc import rc_ensemble, substream
from ..sim import NoiseModel, Simulator, noise_from_json, noise_to_json, z_parity
from . import parallel_map
from .fitting import ExpFit, FitError, Infidelity, fit_exponential, process_infidelity

SOFTWARE = "software-rc"
GATEWARE = "gateware-frc"
MODES = (SOFTWARE, GATEWARE)

DEFAULT_PAULIS = tuple(a + b for a in "XYZ" for b in "XYZ")
ALL_PAULIS = tuple(pair_label(c) for c in range(1, 16))

# single-qubit rotation taking |0> to the +1 eigenstate of each Pauli
_PREP = {"I": "i", "Z": "i", "X": "y90", "Y": "sxdg"}
_UNPREP = {"I": "i", "Z": "i", "X": "ym90", "Y": "sx"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CbConfig:
    kind: str = CZ
    pair: tuple[int, int] = (0, 1)
    paulis: tuple[str, ...] = DEFAULT_PAULIS
    depths: tuple[int, ...] = (2, 8, 32)
    shots: int = 1000
    mode: str = GATEWARE
    n_rand: int = 30
    seed: int = 0
    noise: NoiseModel = field(default_factory=NoiseModel)
    durations: GateDurations = field(default_factory=GateDurations)
    lfsr_width: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "paulis", tuple(p.upper() for p in self.paulis))
        object.__setattr__(self, "depths", tuple(int(m) for m in self.depths))
        object.__setattr__(self, "pair", tuple(int(q) for q in self.pair))
        for p in self.paulis:
            try:
                code = pair_from_label(p)
            except ValueError:
                raise ConfigError(f"unsupported Pauli term {p!r}") from None
            if code == 0:
                raise ConfigError("the identity is not a decay term")
        if not self.paulis:
            raise ConfigError("need at least one Pauli decay term")
        if any(m < 2 or m % 2 for m in self.depths):
            raise ConfigError("depths must be even and at least 2")
        if self.shots < 1:
            raise ConfigError("shots must be at least 1")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.mode == SOFTWARE and not 1 <= self.n_rand <= self.shots:
            raise ConfigError("n_rand must be between 1 and shots")

    @property
    def width(self) -> int:
        return max(self.pair) + 1

    def to_json(self) -> dict:
        d = asdict(self)
        d["noise"] = noise_to_json(self.noise)
        d["durations"] = asdict(self.durations)
        return d

    @classmethod
    def from_json(cls, data: dict) -> "CbConfig":
        data = dict(data)
        if "noise" in data:
            data["noise"] = noise_from_json(data["noise"])
        if "durations" in data:
            data["durations"] = GateDurations(**data["durations"])
        for key in ("pair", "paulis", "depths"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)


@dataclass(frozen=True)
class CbCircuit:
    pauli: str
    depth: int
    circuit: Circuit
    final_pauli: str
    sign: int  # ideal expectation of final_pauli
    measured: tuple[int, ...]  # qubits whose Z parity estimates the final Pauli


def _basis_cycle(width: int, pair: tuple[int, int], label: str, table: dict) -> SingleCycle:
    gates = {q: PhaseTriple() for q in range(width)}
    for q, ch in zip(pair, label):
        gates[q] = phases_from_standard_gate(table[ch])
    return SingleCycle(gates)


def propagated(kind: str, label: str, depth: int) -> tuple[str, int]:
    """Pauli and sign after ``depth`` conjugations by the target gate."""
    code, sign = pair_from_label(label), 1
    for _ in range(depth):
        code, s = propagate(kind, code)
        sign *= s
    return pair_label(code), sign


def build_cb_circuit(config: CbConfig, pauli: str, depth: int) -> CbCircuit:
    width = config.width
    target = TwoCycle((TwoQubitGate(config.kind, config.pair),))
    final, sign = propagated(config.kind, pauli, depth)
    cycles: list = [_basis_cycle(width, config.pair, pauli, _PREP)]
    for _ in range(depth):
        cycles.append(target)
        cycles.append(SingleCycle({q: PhaseTriple() for q in range(width)}))
    cycles[-1] = _basis_cycle(width, config.pair, final, _UNPREP)
    circuit = Circuit(width, tuple(cycles))
    require_valid(circuit)
    measured = tuple(q for q, ch in zip(config.pair, final) if ch != "I")
    return CbCircuit(pauli, depth, circuit, final, sign, measured)


@dataclass(frozen=True)
class CbCircuitSet:
    config: CbConfig
    bare: tuple[CbCircuit, ...]
    # software mode: the randomized circuits compiled for each bare circuit
    randomized: tuple[tuple[Circuit, ...], ...] = ()

    @property
    def n_compiled(self) -> int:
        if self.config.mode == GATEWARE:
            return len(self.bare)
        return sum(len(r) for r in self.randomized)


def build_cb_circuits(config: CbConfig) -> CbCircuitSet:
    bare = tuple(build_cb_circuit(config, p, m) for p in config.paulis for m in config.depths)
    if config.mode == GATEWARE:
        return CbCircuitSet(config, bare)
    randomized = tuple(
        tuple(r.circuit for r in rc_ensemble(c.circuit, config.n_rand, seed=_circuit_seed(config.seed, i)))
        for i, c in enumerate(bare)
    )
    return CbCircuitSet(config, bare, randomized)


def _circuit_seed(seed: int, index: int) -> int:
    return int(substream(seed, index).integers(2**63))


class _ProbabilityCache:
    def __init__(self, sim: Simulator):
        self.sim = sim
        self._cache: dict = {}

    def __call__(self, circuit: Circuit) -> np.ndarray:
        key = tuple(tuple(c.gates.items()) for c in circuit.single_cycles)
        if key not in self._cache:
            self._cache[key] = self.sim.run(circuit).probabilities()
        return self._cache[key]


@dataclass(frozen=True)
class CbPoint:
    pauli: str
    depth: int
    mean: float
    stderr: float
    samples: tuple[float, ...]  # per-circuit means (software) or per-shot +-1 values (gateware)


@dataclass(frozen=True)
class CbResult:
    config: CbConfig
    points: tuple[CbPoint, ...]
    fits: dict[str, ExpFit]
    infidelity: Infidelity
    n_compiled: int

    def to_json(self) -> dict:
        return {
            "config": self.config.to_json(),
            "n_compiled_circuits": self.n_compiled,
            "points": [
                {"pauli": p.pauli, "depth": p.depth, "mean": p.mean, "stderr": p.stderr}
                for p in self.points
            ],
            "fits": {k: asdict(v) for k, v in self.fits.items()},
            "process_infidelity": {
                "value": self.infidelity.value,
                "stderr": self.infidelity.stderr,
                "per_pauli": {k: {"infidelity": e, "stderr": s} for k, (e, s) in self.infidelity.per_pauli.items()},
            },
        }

    def rows(self) -> list[dict]:
        out = []
        for p in self.points:
            f = self.fits[p.pauli]
            out.append(
                {
                    "mode": self.config.mode,
                    "pauli": p.pauli,
                    "depth": p.depth,
                    "mean": p.mean,
                    "stderr": p.stderr,
                    "amplitude": f.amplitude,
                    "decay": f.decay,
                    "decay_err": f.decay_err,
                }
            )
        return out


def _point(task: tuple[CbConfig, int, CbCircuit, tuple[Circuit, ...]]) -> CbPoint:
    config, i, cb, randomized = task
    probs = _ProbabilityCache(Simulator(config.noise, config.width))
    # separate sampling streams per mode keep the two estimates independent
    rng = substream(config.seed, 10_000 * (1 + MODES.index(config.mode)) + i)
    if config.mode == GATEWARE:
        values = _gateware_shots(cb, config, probs, _circuit_seed(config.seed, i), rng)
    else:
        per = config.shots // config.n_rand
        values = []
        for circuit in randomized:
            p = probs(circuit)
            outcomes = rng.choice(len(p), size=per, p=p)
            values.append(float(np.mean([cb.sign * z_parity(o, config.width, cb.measured) for o in outcomes])))
    stderr = float(np.std(values, ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
    return CbPoint(cb.pauli, cb.depth, float(np.mean(values)), stderr, tuple(values))


def run_cb(config: CbConfig, workers: int | None = None) -> CbResult:
    """Simulate every CB circuit, fit each Pauli decay and combine into a process infidelity.

    The error bar at each (P, m) is the standard error over randomizations
    (software) or over single shots (gateware).
    """
    circuits = build_cb_circuits(config)
    tasks = [
        (config, i, cb, circuits.randomized[i] if circuits.randomized else ())
        for i, cb in enumerate(circuits.bare)
    ]
    points = parallel_map(_point, tasks, workers)
    fits = {}
    for label in config.paulis:
        pts = [p for p in points if p.pauli == label]
        fits[label] = fit_exponential([p.depth for p in pts], [p.mean for p in pts], [p.stderr for p in pts])
    return CbResult(config, tuple(points), fits, process_infidelity(fits), circuits.n_compiled)


def _gateware_shots(cb: CbCircuit, config: CbConfig, probs, seed: int, rng) -> list[float]:
    program = compile_to_cores(cb.circuit, config.durations, rc=True)
    lfsr_width = config.lfsr_width or lfsr_width_for(config.width)
    values = []
    for s in range(config.shots):
        shot = execute_shot(program, shot_start(seed, s, lfsr_width))
        p = probs(shot.circuit)
        outcome = int(rng.choice(len(p), p=p))
        values.append(float(cb.sign * z_parity(outcome, config.width, cb.measured)))
    return values


def exact_cb_expectations(config: CbConfig, twirl: bool = True) -> dict[tuple[str, int], float]:
    """Noise-exact expectations of every CB circuit in the infinite-randomization limit."""
    sim = Simulator(config.noise, config.width, twirl=twirl)
    out = {}
    for p in config.paulis:
        for m in config.depths:
            cb = build_cb_circuit(config, p, m)
            state = sim.run(cb.circuit)
            label = ["I"] * config.width
            for q in cb.measured:
                label[q] = "Z"
            out[(p, m)] = cb.sign * state.expectation("".join(label))
    return out


__all__ = [
    "ALL_PAULIS",
    "CbCircuit",
    "CbCircuitSet",
    "CbConfig",
    "CbResult",
    "ConfigError",
    "DEFAULT_PAULIS",
    "FitError",
    "GATEWARE",
    "SOFTWARE",
    "build_cb_circuit",
    "build_cb_circuits",
    "exact_cb_expectations",
    "propagated",
    "run_cb",
]
