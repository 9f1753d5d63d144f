"""Error in measured observables with and without per-shot randomization.

For each random two-qubit circuit the error ``<O>_ideal - <O>_measured`` is
computed for IZ, ZI and ZZ from computational-basis shots. Modes:

* ``bare``: the circuit as written, every shot identical
* ``gateware-frc``: one emulator randomization per shot
* ``software-rc``: ``n_rand`` software randomizations, shots split evenly
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
import numpy as np

from ..circuit import CZ, Circuit, random_circuit
from ..gateware import GateDurations, compile_to_cores, execute_shot, lfsr_width_for, shot_start
from ..rc import rc_ensemble, substream
from ..sim import NoiseModel, Simulator, noise_from_json, noise_to_json
from . import parallel_map

BARE = "bare"
FRC = "gateware-frc"
SOFTWARE = "software-rc"
MODES = (BARE, FRC, SOFTWARE)
OBSERVABLES = ("IZ", "ZI", "ZZ")


@dataclass(frozen=True)
class VarianceConfig:
    n_circuits: int = 100
    width: int = 2
    depth: int = 4
    shots: int = 1000
    modes: tuple[str, ...] = (BARE, FRC)
    n_rand: int = 20
    subsample_shots: int = 100
    subsample_repeats: int = 100
    seed: int = 0
    noise: NoiseModel = field(default_factory=NoiseModel)
    durations: GateDurations = field(default_factory=GateDurations)
    lfsr_width: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        if self.width != 2:
            raise ValueError("the observable set IZ, ZI, ZZ needs width 2")
        if any(m not in MODES for m in self.modes):
            raise ValueError(f"modes must be drawn from {MODES}")
        if self.subsample_shots > self.shots:
            raise ValueError("cannot subsample more shots than were taken")

    def to_json(self) -> dict:
        d = asdict(self)
        d["noise"] = noise_to_json(self.noise)
        d["durations"] = asdict(self.durations)
        return d

    @classmethod
    def from_json(cls, data: dict) -> "VarianceConfig":
        data = dict(data)
        if "noise" in data:
            data["noise"] = noise_from_json(data["noise"])
        if "durations" in data:
            data["durations"] = GateDurations(**data["durations"])
        if "modes" in data:
            data["modes"] = tuple(data["modes"])
        return cls(**data)


# Z parity of (IZ, ZI, ZZ) for each 2-qubit basis index 00, 01, 10, 11 (qubit 0 first)
_PARITY = np.array([[1, 1, 1], [-1, 1, -1], [1, -1, -1], [-1, -1, 1]], dtype=float)


def ideal_expectations(circuit: Circuit) -> np.ndarray:
    p = Simulator(None, circuit.width).run(circuit).probabilities()
    return p @ _PARITY


def _probabilities(sim: Simulator, cache: dict, circuit: Circuit) -> np.ndarray:
    key = tuple(tuple(c.gates.items()) for c in circuit.single_cycles)
    if key not in cache:
        cache[key] = sim.run(circuit).probabilities()
    return cache[key]


def shot_outcomes(circuit: Circuit, mode: str, config: VarianceConfig, index: int, sim: Simulator) -> np.ndarray:
    """Per-shot basis-state indices for one circuit in one mode."""
    rng = substream(config.seed, 1_000_000 * (MODES.index(mode) + 1) + index)
    cache: dict = {}
    if mode == BARE:
        p = _probabilities(sim, cache, circuit)
        return rng.choice(4, size=config.shots, p=p)
    if mode == SOFTWARE:
        members = rc_ensemble(circuit, config.n_rand, seed=int(rng.integers(2**63)))
        split = np.array_split(np.arange(config.shots), config.n_rand)
        out = []
        for member, idx in zip(members, split):
            out.append(rng.choice(4, size=len(idx), p=_probabilities(sim, cache, member.circuit)))
        return np.concatenate(out)
    program = compile_to_cores(circuit, config.durations, rc=True)
    lfsr_width = config.lfsr_width or lfsr_width_for(config.width)
    lfsr_seed = int(rng.integers(2**63))
    out = np.empty(config.shots, dtype=int)
    for s in range(config.shots):
        shot = execute_shot(program, shot_start(lfsr_seed, s, lfsr_width))
        out[s] = rng.choice(4, p=_probabilities(sim, cache, shot.circuit))
    return out


def subsample_errors(
    outcomes: np.ndarray, ideal: np.ndarray, n: int, repeats: int, rng: np.random.Generator
) -> np.ndarray:
    """``repeats`` x 3 errors, each from ``n`` shots drawn without replacement."""
    out = np.empty((repeats, len(ideal)))
    for r in range(repeats):
        pick = rng.choice(len(outcomes), size=n, replace=False)
        out[r] = ideal - _PARITY[outcomes[pick]].mean(axis=0)
    return out


@dataclass
class VarianceResult:
    config: VarianceConfig
    ideal: np.ndarray  # (n_circuits, 3)
    errors: dict[str, np.ndarray]  # mode -> (n_circuits, 3) full-shot errors
    sub_mean: dict[str, np.ndarray]  # mode -> (n_circuits, 3)
    sub_var: dict[str, np.ndarray]
    average_case: int
    worst_case: int
    case_distributions: dict[str, dict[str, np.ndarray]]  # "average"/"worst" -> mode -> (repeats, 3)

    def summary(self) -> dict:
        out = {}
        for mode, err in self.errors.items():
            flat = err.ravel()
            out[mode] = {"mean": float(flat.mean()), "variance": float(flat.var(ddof=1))}
        if BARE in self.errors:
            for mode in self.errors:
                if mode != BARE:
                    better = np.abs(self.errors[mode]) <= np.abs(self.errors[BARE])
                    out[mode]["fraction_not_worse_than_bare"] = float(better.mean())
        return out

    def to_json(self) -> dict:
        return {
            "config": self.config.to_json(),
            "observables": list(OBSERVABLES),
            "summary": self.summary(),
            "ideal": self.ideal.tolist(),
            "errors": {m: e.tolist() for m, e in self.errors.items()},
            "subsample_mean": {m: e.tolist() for m, e in self.sub_mean.items()},
            "subsample_variance": {m: e.tolist() for m, e in self.sub_var.items()},
            "average_case_circuit": self.average_case,
            "worst_case_circuit": self.worst_case,
            "case_distributions": {
                case: {m: d.tolist() for m, d in by_mode.items()}
                for case, by_mode in self.case_distributions.items()
            },
        }

    def rows(self) -> list[dict]:
        rows = []
        for mode, err in self.errors.items():
            for c in range(err.shape[0]):
                for k, obs in enumerate(OBSERVABLES):
                    rows.append(
                        {
                            "mode": mode,
                            "circuit": c,
                            "observable": obs,
                            "ideal": self.ideal[c, k],
                            "error": err[c, k],
                            "subsample_mean": self.sub_mean[mode][c, k],
                            "subsample_variance": self.sub_var[mode][c, k],
                        }
                    )
        return rows


def variance_circuits(config: VarianceConfig) -> list[Circuit]:
    rng = substream(config.seed, 0)
    return [random_circuit(config.width, config.depth, rng, kinds=(CZ,)) for _ in range(config.n_circuits)]


def _circuit_outcomes(task: tuple[VarianceConfig, int, Circuit]) -> dict[str, np.ndarray]:
    config, index, circuit = task
    sim = Simulator(config.noise, config.width)
    return {mode: shot_outcomes(circuit, mode, config, index, sim) for mode in config.modes}


def variance_study(config: VarianceConfig, workers: int | None = None) -> VarianceResult:
    circuits = variance_circuits(config)
    ideal = np.array([ideal_expectations(c) for c in circuits])
    outcomes = parallel_map(_circuit_outcomes, [(config, i, c) for i, c in enumerate(circuits)], workers)

    def resample(mode: str, i: int) -> np.ndarray:
        return subsample_errors(
            outcomes[i][mode], ideal[i], config.subsample_shots, config.subsample_repeats,
            substream(config.seed, 2_000_000 + i),
        )

    errors, sub_mean, sub_var = {}, {}, {}
    for mode in config.modes:
        errors[mode] = np.array([ideal[i] - _PARITY[o[mode]].mean(axis=0) for i, o in enumerate(outcomes)])
        subs = [resample(mode, i) for i in range(len(circuits))]
        sub_mean[mode] = np.array([s.mean(axis=0) for s in subs])
        sub_var[mode] = np.array([s.var(axis=0, ddof=1) for s in subs])

    # representative circuits, ranked by the bare (or first) mode's mean absolute error
    ref = BARE if BARE in errors else config.modes[0]
    order = np.argsort(np.abs(errors[ref]).mean(axis=1), kind="stable")
    average_case = int(order[len(order) // 2])
    worst_case = int(order[-1])
    cases = {
        name: {mode: resample(mode, idx) for mode in config.modes}
        for name, idx in (("average", average_case), ("worst", worst_case))
    }
    return VarianceResult(config, ideal, errors, sub_mean, sub_var, average_case, worst_case, cases)


def exact_errors(config: VarianceConfig, twirl: bool) -> np.ndarray:
    """Shot-noise-free errors: bare noisy channel, or the infinite-randomization limit."""
    circuits = variance_circuits(config)
    sim = Simulator(config.noise, config.width, twirl=twirl)
    return np.array([ideal_expectations(c) - sim.run(c).probabilities() @ _PARITY for c in circuits])
