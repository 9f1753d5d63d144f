"""Pipeline time profile of software RC vs gateware FRC.

Pre-compile and compile-and-assemble are wall-clock timings of this package's
own pipeline. Run-circuit comes from the emulator timing model. Load, get-data
and client-server are modeled per-circuit constants (zero unless configured).
"""

from __future__ import annotations

import gc
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from ..circuit import CZ, Circuit, random_circuit, require_valid
from ..gateware import GateDurations, assemble, compile_to_cores, shot_duration
from ..rc import rc_ensemble, substream
from .cb import GATEWARE, SOFTWARE

MODES = (SOFTWARE, GATEWARE)
STAGES = ("pre_compile", "compile_and_assemble", "load_circuit", "run_circuit", "get_data", "client_server")


@dataclass(frozen=True)
class StageConstants:
    """Modeled per-circuit costs in seconds for stages this package cannot measure."""

    load_circuit_s: float = 0.0
    get_data_s: float = 0.0
    client_server_s: float = 0.0


@dataclass(frozen=True)
class ProfileRow:
    width: int
    depth: int
    mode: str
    n_randomizations: int
    n_compiled: int
    pre_compile: float
    compile_and_assemble: float
    load_circuit: float
    run_circuit: float
    get_data: float
    client_server: float

    @property
    def total(self) -> float:
        return sum(getattr(self, s) for s in STAGES)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["total"] = self.total
        return d


@dataclass(frozen=True)
class ProfileConfig:
    widths: tuple[int, ...] = (4,)
    depths: tuple[int, ...] = (10, 50, 100)
    modes: tuple[str, ...] = MODES
    n_rand: int = 100
    shots: int = 1000
    repeats: int = 3
    seed: int = 0
    constants: StageConstants = field(default_factory=StageConstants)
    durations: GateDurations = field(default_factory=GateDurations)

    def __post_init__(self):
        for key in ("widths", "depths", "modes"):
            object.__setattr__(self, key, tuple(getattr(self, key)))
        if any(m not in MODES for m in self.modes):
            raise ValueError(f"modes must be drawn from {MODES}")
        if self.n_rand < 1 or self.repeats < 1 or self.shots < 1:
            raise ValueError("n_rand, repeats and shots must be at least 1")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "ProfileConfig":
        data = dict(data)
        if "constants" in data:
            data["constants"] = StageConstants(**data["constants"])
        if "durations" in data:
            data["durations"] = GateDurations(**data["durations"])
        return cls(**data)


def _timed(fn) -> tuple[float, object]:
    # like timeit: keep the cyclic collector out of the measurement
    enabled = gc.isenabled()
    gc.disable()
    try:
        t0 = time.perf_counter()
        out = fn()
        return time.perf_counter() - t0, out
    finally:
        if enabled:
            gc.enable()


def pre_compile(circuit: Circuit, mode: str, n_rand: int, seed: int) -> list[Circuit]:
    if mode == GATEWARE:
        require_valid(circuit)
        return [circuit]
    return [r.circuit for r in rc_ensemble(circuit, n_rand, seed=seed)]


def compile_and_assemble(circuits: Sequence[Circuit], mode: str, durations: GateDurations):
    rc = mode == GATEWARE
    programs = [compile_to_cores(c, durations, rc=rc) for c in circuits]
    return programs, [assemble(p) for p in programs]


def profile_point(
    circuit: Circuit, mode: str, n_rand: int, shots: int, seed: int,
    constants: StageConstants, durations: GateDurations, repeats: int = 3,
) -> ProfileRow:
    """Best-of-``repeats`` stage timings for one circuit."""
    pre = comp = float("inf")
    for _ in range(repeats):
        t, circuits = _timed(lambda: pre_compile(circuit, mode, n_rand, seed))
        pre = min(pre, t)
        t, (programs, _) = _timed(lambda: compile_and_assemble(circuits, mode, durations))
        comp = min(comp, t)
    n = len(programs)
    # software mode runs shots/n_rand shots of each compiled circuit; the total is the same
    run = shot_duration(programs[0]).total_ns * shots * 1e-9
    return ProfileRow(
        width=circuit.width,
        depth=circuit.depth,
        mode=mode,
        n_randomizations=n_rand if mode == SOFTWARE else shots,
        n_compiled=n,
        pre_compile=pre,
        compile_and_assemble=comp,
        load_circuit=constants.load_circuit_s * n,
        run_circuit=run,
        get_data=constants.get_data_s * n,
        client_server=constants.client_server_s * n,
    )


def time_profile(config: ProfileConfig) -> list[ProfileRow]:
    rows = []
    for i, w in enumerate(config.widths):
        for j, d in enumerate(config.depths):
            circuit = random_circuit(w, d, substream(config.seed, i * 1000 + j), kinds=(CZ,))
            for mode in config.modes:
                rows.append(
                    profile_point(
                        circuit, mode, config.n_rand, config.shots, config.seed,
                        config.constants, config.durations, config.repeats,
                    )
                )
    return rows


def compile_ratio(rows: Sequence[ProfileRow], width: int, depth: int) -> float:
    """Software over gateware compile-and-assemble time at one grid point."""
    by_mode = {r.mode: r for r in rows if r.width == width and r.depth == depth}
    return by_mode[SOFTWARE].compile_and_assemble / by_mode[GATEWARE].compile_and_assemble


def depth_scaling(rows: Sequence[ProfileRow], mode: str, width: int) -> list[tuple[int, float]]:
    """(depth, compile time per unit depth) pairs; constant for linear scaling."""
    pts = sorted((r.depth, r.compile_and_assemble) for r in rows if r.mode == mode and r.width == width)
    return [(d, t / d) for d, t in pts]


def profile_summary(rows: Sequence[ProfileRow]) -> dict:
    out = []
    for r in rows:
        out.append(r.as_dict())
    totals = np.array([r.total for r in rows]) if rows else np.zeros(0)
    return {"rows": out, "max_total_s": float(totals.max()) if len(totals) else 0.0}
