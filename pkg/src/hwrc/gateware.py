"""Cycle-level emulator of gateware randomized compiling.

A global LFSR produces one ``2 * n_qubit``-bit word per FPGA clock. Each qubit
core owns an :class:`RcModule` that latches the word at the start of every
single-qubit cycle (``latch_rc_cycle``) and rewrites virtual-Z phases on
request (``rc_alu``) using the Pauli propagation and absorption tables.

Timing model: ``latch_rc_cycle`` takes 6 ns and ``rc_alu`` 12 ns and both run
underneath the X90 pulses, so a single-qubit cycle of length ``t`` is
stretched by ``max(0, 18 - t)`` ns when RC is on. Nothing finer is modelled.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Iterator, Sequence, Union

import numpy as np

from .circuit import (
    CNOT,
    CZ,
    IDENTITY,
    SINGLE,
    Circuit,
    PhaseTriple,
    SingleCycle,
    TwoCycle,
    require_valid,
)
from .lfsr import Lfsr
from .pauli import absorb, propagate_qubits

LATCH_NS = 6.0
RC_ALU_NS = 12.0
RC_OVERHEAD_NS = LATCH_NS + RC_ALU_NS


class SchedulingError(RuntimeError):
    """Latch timestamps out of order: the compiler produced a bad schedule."""


class ProtocolError(RuntimeError):
    """An rc_module was used before it latched a twirl word."""


@dataclass(frozen=True)
class GateDurations:
    x90_ns: float = 16.0
    two_qubit_ns: float = 40.0
    measure_ns: float = 1000.0
    clock_ns: float = 2.0

    def __post_init__(self):
        for name in ("x90_ns", "two_qubit_ns", "measure_ns", "clock_ns"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def single_cycle_ns(self) -> float:
        return 2.0 * self.x90_ns


def added_latency(single_cycle_ns: float) -> float:
    """Extra time per single-qubit cycle needed to hide the RC instructions."""
    return max(0.0, RC_OVERHEAD_NS - single_cycle_ns)


# -- instructions -------------------------------------------------------------


@dataclass(frozen=True)
class RcMeta:
    """What ``rc_alu`` needs to know about the preceding two-qubit cycle."""

    kind: str = IDENTITY
    pair: tuple[int, int] = (0, 0)
    role: int = 0  # 0 = first qubit of the pair (control), 1 = second
    terminal: bool = False  # last cycle: no twirl follows, post Pauli is I


@dataclass(frozen=True)
class LatchRcCycle:
    timestamp: float
    qubits: tuple[int, ...]


@dataclass(frozen=True)
class RcAlu:
    slot: int
    phase: float
    meta: RcMeta


@dataclass(frozen=True)
class PhaseWrite:
    register: int
    value: float


@dataclass(frozen=True)
class PulseX90:
    timestamp: float
    duration: float


@dataclass(frozen=True)
class PulseTwoQubit:
    timestamp: float
    kind: str
    qubits: tuple[int, int]
    duration: float


@dataclass(frozen=True)
class Measure:
    timestamp: float
    duration: float


Instruction = Union[LatchRcCycle, RcAlu, PhaseWrite, PulseX90, PulseTwoQubit, Measure]


@dataclass(frozen=True)
class CoreProgram:
    qubit: int
    instructions: tuple[Instruction, ...]


@dataclass(frozen=True)
class CompiledProgram:
    """Per-core programs for one circuit plus the shared two-qubit skeleton."""

    width: int
    cores: tuple[CoreProgram, ...]
    two_cycles: tuple[TwoCycle, ...]
    durations: GateDurations
    rc: bool

    @property
    def latch_times(self) -> list[float]:
        return [i.timestamp for i in self.cores[0].instructions if isinstance(i, LatchRcCycle)]


def compile_to_cores(
    circuit: Circuit, durations: GateDurations | None = None, rc: bool = True
) -> CompiledProgram:
    """Lower ``circuit`` to one instruction stream per qubit.

    Every single-qubit cycle becomes ``[Latch, Z0, X90, Z1, X90, Z2]`` where each
    ``Z`` is an ``RcAlu`` (RC on) or a plain ``PhaseWrite`` (RC off). Latches of
    the same cycle carry identical timestamps on every core.
    """
    require_valid(circuit)
    durations = durations or GateDurations()
    x90 = durations.x90_ns
    latency = added_latency(durations.single_cycle_ns) if rc else 0.0
    streams: list[list[Instruction]] = [[] for _ in range(circuit.width)]
    two_cycles = circuit.two_cycles
    depth = len(two_cycles)
    t = 0.0
    k = 0
    for cycle in circuit.cycles:
        if cycle.tag == SINGLE:
            for q, stream in enumerate(streams):
                triple = cycle.triple(q)
                if rc:
                    meta = _meta_for(two_cycles[k - 1] if k else None, q, terminal=k == depth)
                    stream.append(LatchRcCycle(t, tuple(range(circuit.width))))
                start = t + latency
                for slot in range(3):
                    if rc:
                        stream.append(RcAlu(slot, triple[slot], meta))
                    else:
                        stream.append(PhaseWrite(slot, triple[slot]))
                    if slot < 2:
                        stream.append(PulseX90(start + slot * x90, x90))
            t += latency + 2 * x90
            k += 1
        else:
            for g in cycle.gates:
                for q in g.qubits:
                    streams[q].append(PulseTwoQubit(t, g.kind, g.qubits, durations.two_qubit_ns))
            t += durations.two_qubit_ns
    for stream in streams:
        stream.append(Measure(t, durations.measure_ns))
    return CompiledProgram(
        circuit.width,
        tuple(CoreProgram(q, tuple(s)) for q, s in enumerate(streams)),
        tuple(two_cycles),
        durations,
        rc,
    )


# -- assembler ------------------------------------------------------------------

# one 16-byte word per instruction: opcode, arg0, arg1 (u16), time in clock ticks, value
_WORD = struct.Struct("<BBHId")
_OPCODES = {LatchRcCycle: 1, RcAlu: 2, PhaseWrite: 3, PulseX90: 4, PulseTwoQubit: 5, Measure: 6}
_KIND_CODES = {IDENTITY: 0, CZ: 1, CNOT: 2}


def _encode(ins: Instruction, clock_ns: float) -> bytes:
    op = _OPCODES[type(ins)]
    if isinstance(ins, RcAlu):
        m = ins.meta
        flags = _KIND_CODES[m.kind] | m.role << 2 | int(m.terminal) << 3
        return _WORD.pack(op, ins.slot, flags | m.pair[0] << 4 | m.pair[1] << 10, 0, ins.phase)
    if isinstance(ins, PhaseWrite):
        return _WORD.pack(op, ins.register, 0, 0, ins.value)
    ticks = round(ins.timestamp / clock_ns)
    if isinstance(ins, LatchRcCycle):
        mask = sum(1 << q for q in ins.qubits) & 0xFFFF
        return _WORD.pack(op, 0, mask, ticks, 0.0)
    if isinstance(ins, PulseTwoQubit):
        a, b = ins.qubits
        return _WORD.pack(op, _KIND_CODES[ins.kind], a | b << 8, ticks, round(ins.duration / clock_ns))
    return _WORD.pack(op, 0, 0, ticks, round(ins.duration / clock_ns))


def assemble(program: CompiledProgram) -> list[bytes]:
    """Binary image of each core's instruction stream, ready to upload."""
    clock = program.durations.clock_ns
    return [b"".join(_encode(i, clock) for i in core.instructions) for core in program.cores]


def _meta_for(prev: TwoCycle | None, qubit: int, terminal: bool) -> RcMeta:
    gate = prev.gate_on(qubit) if prev is not None else None
    if gate is None or gate.kind == IDENTITY:
        return RcMeta(IDENTITY, (qubit, qubit), 0, terminal)
    return RcMeta(gate.kind, gate.qubits, gate.qubits.index(qubit), terminal)


# -- rc_module ----------------------------------------------------------------


@dataclass
class RcModule:
    """Per-qubit latch state. Words are full LFSR words so partner bits are visible."""

    qubit: int
    current: int = 0
    previous: int = 0
    last_latch: float = -math.inf
    latched: bool = False

    @property
    def twirl(self) -> int:
        return (self.current >> (2 * self.qubit)) & 3

    @property
    def previous_twirl(self) -> int:
        return (self.previous >> (2 * self.qubit)) & 3


def latch(modules: Sequence[RcModule], word: int, timestamp: float, qubits: Sequence[int]) -> None:
    """Trigger ``latch_rc_cycle`` on the modules of ``qubits``: previous <- current <- word."""
    by_qubit = {m.qubit: m for m in modules}
    for q in qubits:
        m = by_qubit[q]
        if not timestamp > m.last_latch:
            raise SchedulingError(
                f"qubit {q}: latch at {timestamp} ns not after previous latch at {m.last_latch} ns"
            )
        m.previous = m.current
        m.current = word
        m.last_latch = timestamp
        m.latched = True


def rc_alu(module: RcModule, slot: int, phase: float, meta: RcMeta) -> float:
    """Phase for ``slot`` with the current twirl and the previous cycle's inversion absorbed."""
    if not module.latched:
        raise ProtocolError(f"rc_alu on qubit {module.qubit} before any latch")
    post = 0 if meta.terminal else module.twirl
    if meta.kind == IDENTITY:
        pre = module.previous_twirl
    else:
        a, b = meta.pair
        prev = module.previous
        images = propagate_qubits(meta.kind, (prev >> (2 * a)) & 3, (prev >> (2 * b)) & 3)
        pre = images[meta.role]
    return absorb(post, pre, slot, phase)


# -- execution ----------------------------------------------------------------


class LfsrClock:
    """Global free-running LFSR sampled at latch timestamps within one shot."""

    def __init__(self, start: Lfsr, clock_ns: float):
        self.start = start
        self.clock_ns = clock_ns
        self._cache: dict[int, int] = {}
        self._cursor = (0, start)

    def word_at(self, timestamp: float) -> int:
        tick = int(round(timestamp / self.clock_ns))
        if tick not in self._cache:
            at, state = self._cursor
            state = state.advance(tick - at) if tick >= at else self.start.advance(tick)
            self._cursor = (tick, state)
            self._cache[tick] = state.state
        return self._cache[tick]


class ForcedWords:
    """Stand-in for the LFSR: the k-th distinct latch time gets ``words[k]``."""

    def __init__(self, words: Sequence[int], latch_times: Sequence[float]):
        times = sorted(set(latch_times))
        if len(words) < len(times):
            words = list(words) + [0] * (len(times) - len(words))
        self._map = dict(zip(times, words))

    def word_at(self, timestamp: float) -> int:
        return self._map[timestamp]


def words_from_twirls(twirls: Sequence[Sequence[int]]) -> list[int]:
    """Pack per-qubit Pauli codes into LFSR words (qubit q in bits 2q, 2q+1)."""
    return [sum(int(p) << (2 * q) for q, p in enumerate(tw)) for tw in twirls]


def twirls_from_word(word: int, width: int) -> tuple[int, ...]:
    return tuple((word >> (2 * q)) & 3 for q in range(width))


@dataclass(frozen=True)
class CycleTiming:
    cycle: int
    added_latency_ns: float
    end_ns: float


@dataclass(frozen=True)
class ShotTiming:
    total_ns: float
    single_ns: float
    two_qubit_ns: float
    added_latency_ns: float
    measure_ns: float
    cycles: tuple[CycleTiming, ...] = ()


@dataclass(frozen=True)
class ShotResult:
    circuit: Circuit
    words: tuple[int, ...]
    timing: ShotTiming

    def twirls(self) -> list[tuple[int, ...]]:
        """Per two-qubit cycle twirl codes actually used."""
        depth = self.circuit.depth
        return [twirls_from_word(w, self.circuit.width) for w in self.words[:depth]]


def execute_shot(program: CompiledProgram, source) -> ShotResult:
    """Run every core against a shared word source; returns the effective circuit.

    ``source`` is anything with ``word_at(timestamp)``: an :class:`LfsrClock`,
    :class:`ForcedWords`, or an :class:`Lfsr` (start state of this shot).
    """
    if isinstance(source, Lfsr):
        source = LfsrClock(source, program.durations.clock_ns)
    n_single = len(program.two_cycles) + 1
    phases = [[[0.0, 0.0, 0.0] for _ in range(program.width)] for _ in range(n_single)]
    latched_words: list[int] = []
    for core in program.cores:
        module = RcModule(core.qubit)
        registers = [0.0, 0.0, 0.0]
        k = -1
        for ins in core.instructions:
            if isinstance(ins, LatchRcCycle):
                word = source.word_at(ins.timestamp)
                latch([module], word, ins.timestamp, [core.qubit])
                if core.qubit == 0:
                    latched_words.append(word)
            elif isinstance(ins, RcAlu):
                if ins.slot == 0:
                    k += 1
                registers[ins.slot] = rc_alu(module, ins.slot, ins.phase, ins.meta)
                if ins.slot == 2:
                    phases[k][core.qubit] = list(registers)
            elif isinstance(ins, PhaseWrite):
                if ins.register == 0:
                    k += 1
                registers[ins.register] = ins.value
                if ins.register == 2:
                    phases[k][core.qubit] = list(registers)
    singles = [SingleCycle({q: PhaseTriple(*p) for q, p in enumerate(cyc)}) for cyc in phases]
    cycles: list = []
    for k, s in enumerate(singles):
        cycles.append(s)
        if k < len(program.two_cycles):
            cycles.append(program.two_cycles[k])
    return ShotResult(Circuit(program.width, tuple(cycles)), tuple(latched_words), shot_duration(program))


def shot_duration(program: CompiledProgram, durations: GateDurations | None = None) -> ShotTiming:
    """Shot length: cycles + RC latency (if enabled) + measurement."""
    d = durations or program.durations
    latency = added_latency(d.single_cycle_ns) if program.rc else 0.0
    depth = len(program.two_cycles)
    t = 0.0
    cycles = []
    for k in range(depth + 1):
        t += latency + d.single_cycle_ns
        cycles.append(CycleTiming(k, latency, t))
        if k < depth:
            t += d.two_qubit_ns
    total = t + d.measure_ns
    return ShotTiming(
        total_ns=total,
        single_ns=(depth + 1) * d.single_cycle_ns,
        two_qubit_ns=depth * d.two_qubit_ns,
        added_latency_ns=(depth + 1) * latency,
        measure_ns=d.measure_ns,
        cycles=tuple(cycles),
    )


def lfsr_width_for(n_qubits: int) -> int:
    return max(2, 2 * n_qubits)


def shot_start(seed: int, shot: int, width: int, taps: tuple[int, ...] = ()) -> Lfsr:
    """LFSR state at the start of ``shot``.

    The register free-runs between shots; the clock offset of each shot is a
    hash of (seed, shot), so shots can be emulated in any order.
    """
    base = Lfsr.from_seed(seed, width, taps)
    offset = np.random.SeedSequence(int(seed), spawn_key=(int(shot),)).generate_state(1, dtype=np.uint64)[0]
    return base.advance(int(offset))


def execute_shots(
    program: CompiledProgram,
    shots: int,
    seed: int,
    lfsr_width: int | None = None,
    taps: tuple[int, ...] = (),
    first_shot: int = 0,
) -> Iterator[ShotResult]:
    width = lfsr_width or lfsr_width_for(program.width)
    if width < 2 * program.width:
        raise ValueError(f"LFSR width {width} too narrow for {program.width} qubits")
    for s in range(first_shot, first_shot + shots):
        yield execute_shot(program, shot_start(seed, s, width, taps))
