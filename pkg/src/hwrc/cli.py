"""Command line entry point: ``hwrc <subcommand> [options]``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import os
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__, schemas
from .circuit import CapacityError, CircuitError, circuit_from_json, circuit_to_json, require_valid
from .experiments import THREADS_ENV
from .experiments.cb import CbConfig, ConfigError, run_cb
from .experiments.profile import ProfileConfig, time_profile
from .experiments.variance import VarianceConfig, variance_study
from .gateware import (
    GateDurations,
    ProtocolError,
    SchedulingError,
    compile_to_cores,
    execute_shot,
    lfsr_width_for,
    shot_start,
)
from .lfsr import LfsrError
from .pauli import LABELS, pair_label, tables_as_json
from .rc import ensemble_to_json, rc_ensemble
from .sim import (
    GeneratorUndefined,
    error_ptm,
    ideal_ptm,
    noise_from_json,
    noise_to_json,
    noisy_ptm,
    off_diagonal_max,
    principal_log,
    process_infidelity_of_ptm,
    twirl_average,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_CAPACITY = 4
EXIT_HARDWARE = 5
EXIT_IO = 6

EXIT_CODES = """exit codes:
  0  success
  1  unexpected internal error
  2  usage error (unknown subcommand or bad flag)
  3  invalid input: schema violation, malformed JSON, invalid circuit or config
  4  capacity exceeded (e.g. more qubits than the exact simulator supports)
  5  emulator scheduling/protocol error (including LFSR misconfiguration)
  6  file could not be read or written

On failure a JSON error report is written to stderr.
environment:
  {env}  worker processes for the cb and variance grids (default 1)
""".format(env=THREADS_ENV)


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code = code
        self.kind = kind


def _error_code(exc: BaseException) -> int:
    if isinstance(exc, CapacityError):
        return EXIT_CAPACITY
    if isinstance(exc, (SchedulingError, ProtocolError, LfsrError)):
        return EXIT_HARDWARE
    if isinstance(exc, (schemas.SchemaError, CircuitError, ConfigError, json.JSONDecodeError)):
        return EXIT_CONFIG
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_ERROR


# -- inputs ---------------------------------------------------------------------


def _read_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_CONFIG, "JSONDecodeError", f"{path}: {exc}") from None


def _load_config(path: str | None, schema: str) -> dict:
    data = {} if path is None else _read_json(path)
    schemas.validate(data, schema)
    return data


def _load_circuit(path: str):
    data = _read_json(path)
    schemas.validate(data, "circuit")
    circuit = circuit_from_json(data)
    require_valid(circuit)
    return circuit


# -- outputs --------------------------------------------------------------------


def _plain(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    if dataclasses.is_dataclass(x):
        return dataclasses.asdict(x)
    raise TypeError(f"cannot serialise {type(x).__name__}")


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, default=_plain) + "\n"


def config_digest(config: dict) -> str:
    """sha256 of the config; independent of key order."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=_plain)
    return hashlib.sha256(blob.encode()).hexdigest()


def csv_text(rows) -> str:
    """Rows are dicts (header from the first row) or a matrix with a label header."""
    buf = io.StringIO()
    if isinstance(rows, dict) and "matrix" in rows:
        w = csv.writer(buf, lineterminator="\n")
        labels = rows["labels"]
        w.writerow([""] + labels)
        for label, row in zip(labels, rows["matrix"]):
            w.writerow([label] + [repr(float(v)) for v in row])
        return buf.getvalue()
    rows = list(rows)
    if not rows:
        return ""
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in r.items()})
    return buf.getvalue()


def atomic_write(path: Path, text: str) -> None:
    """Write-then-rename so readers never observe a partial file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclasses.dataclass
class Output:
    payload: dict
    tables: dict[str, Any] = dataclasses.field(default_factory=dict)


def emit(command: str, config: dict, seed: int, out: Output, args, started: str) -> None:
    files: dict[str, str] = {}
    if args.format == "json":
        files[f"{command}.json"] = canonical_json(dict(out.payload, manifest=f"{command}.manifest.json"))
    for name, rows in out.tables.items():
        files[f"{command}_{name}.csv" if name else f"{command}.csv"] = csv_text(rows)

    if args.out is None:
        if args.format == "json":
            sys.stdout.write(canonical_json(out.payload))
        else:
            for name, text in files.items():
                if len(files) > 1:
                    sys.stdout.write(f"# {name}\n")
                sys.stdout.write(text)
        return

    out_dir = Path(args.out)
    staged = []
    for name, text in files.items():
        atomic_write(out_dir / name, text)
        staged.append(
            {"path": name, "sha256": hashlib.sha256(text.encode()).hexdigest()}
        )
    manifest = {
        "subcommand": command,
        "config": config,
        "config_digest": config_digest(config),
        "seed": seed,
        "version": __version__,
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "outputs": staged,
    }
    atomic_write(out_dir / f"{command}.manifest.json", canonical_json(manifest))
    sys.stdout.write(canonical_json(manifest))


# -- subcommands ------------------------------------------------------------------


def _seed(args, config: dict) -> int:
    if args.seed is not None:
        return args.seed
    return int(config.get("seed", 0))


def cmd_tables(args) -> tuple[dict, int, Output]:
    t = tables_as_json()
    rows = [
        {"kind": kind, "in": e["in"], "out": e["out"], "sign": e["sign"]}
        for kind, entries in t["propagation"].items()
        for e in entries
    ]
    return {}, 0, Output(t, {"propagation": rows, "absorption": t["absorption"]})


def cmd_rc(args) -> tuple[dict, int, Output]:
    circuit = _load_circuit(args.circuit)
    seed = args.seed or 0
    if args.n < 1:
        raise CliError(EXIT_CONFIG, "ConfigError", "--n must be at least 1")
    members = rc_ensemble(circuit, args.n, seed=seed, exhaustive=args.exhaustive)
    config = {"circuit": circuit_to_json(circuit), "n": args.n, "exhaustive": args.exhaustive, "seed": seed}
    rows = [
        {"member": i, "cycle": k, "qubit": q, "twirl": LABELS[c.twirl[q]], "inverse": LABELS[c.inverse[q]]}
        for i, m in enumerate(members)
        for k, c in enumerate(m.record)
        for q in range(circuit.width)
    ]
    return config, seed, Output({"config": config, "randomizations": ensemble_to_json(members)}, {"twirls": rows})


def cmd_emulate(args) -> tuple[dict, int, Output]:
    circuit = _load_circuit(args.circuit)
    cfg = _load_config(args.config, "emulate")
    seed = _seed(args, cfg)
    durations = GateDurations(**cfg.get("durations", {}))
    if args.gate_ns is not None:
        if args.gate_ns <= 0:
            raise CliError(EXIT_CONFIG, "ConfigError", "--gate-ns must be positive")
        durations = dataclasses.replace(durations, x90_ns=args.gate_ns)
    rc = cfg.get("rc", True) if args.rc is None else args.rc == "on"
    shots = args.shots if args.shots is not None else cfg.get("shots", 1)
    if shots < 1:
        raise CliError(EXIT_CONFIG, "ConfigError", "--shots must be at least 1")
    lfsr_width = cfg.get("lfsr_width") or lfsr_width_for(circuit.width)
    if lfsr_width < 2 * circuit.width:
        raise LfsrError(f"LFSR width {lfsr_width} cannot feed {circuit.width} qubits (needs {2 * circuit.width})")
    config = {
        "circuit": circuit_to_json(circuit),
        "shots": shots,
        "seed": seed,
        "rc": rc,
        "durations": dataclasses.asdict(durations),
        "lfsr_width": lfsr_width,
    }
    program = compile_to_cores(circuit, durations, rc=rc)
    records, timing_rows = [], []
    for s in range(shots):
        result = execute_shot(program, shot_start(seed, s, lfsr_width))
        record = {"shot": s, "words": list(result.words), "total_ns": result.timing.total_ns}
        if args.resolved:
            record["circuit"] = circuit_to_json(result.circuit)
            record["twirls"] = [list(t) for t in result.twirls()] if rc else []
        records.append(record)
        for c in result.timing.cycles:
            timing_rows.append(
                {"shot": s, "cycle": c.cycle, "added_latency_ns": c.added_latency_ns, "total_ns": c.end_ns}
            )
    payload = {"config": config, "shots": records}
    return config, seed, Output(payload, {"timing": timing_rows})


def _labelled(m: np.ndarray) -> dict:
    return {"labels": [pair_label(c) for c in range(16)], "matrix": np.asarray(m).real.tolist()}


def cmd_ptm(args) -> tuple[dict, int, Output]:
    cfg = _load_config(args.config, "noise")
    noise = noise_from_json(cfg)
    kinds = sorted(noise.gates) or ["cz"]
    payload: dict = {"config": noise_to_json(noise), "gates": {}}
    tables: dict = {}
    for kind in kinds:
        g = noise.gates.get(kind)
        ideal = ideal_ptm(kind)
        noisy = noisy_ptm(kind, g)
        err = error_ptm(noisy, ideal)
        twirled = twirl_average(kind, g)
        entry = {
            "ideal": _labelled(ideal),
            "noisy": _labelled(noisy),
            "error": _labelled(err),
            "twirled_error": _labelled(twirled),
            "error_off_diagonal_max": off_diagonal_max(err),
            "twirled_off_diagonal_max": off_diagonal_max(twirled),
            "process_infidelity": process_infidelity_of_ptm(err),
        }
        for name, m in (("generator", err), ("twirled_generator", twirled)):
            try:
                entry[name] = _labelled(principal_log(m))
            except GeneratorUndefined as exc:
                entry[name] = {"undefined": str(exc)}
        payload["gates"][kind] = entry
        for name in ("ideal", "noisy", "error", "twirled_error", "generator", "twirled_generator"):
            if "matrix" in entry[name]:
                tables[f"{kind}_{name}"] = entry[name]
    return {"noise": payload["config"]}, 0, Output(payload, tables)


def cmd_cb(args) -> tuple[dict, int, Output]:
    cfg = _load_config(args.config, "cb")
    seed = _seed(args, cfg)
    config = CbConfig.from_json(dict(cfg, seed=seed))
    result = run_cb(config)
    return config.to_json(), seed, Output(result.to_json(), {"": result.rows()})


def cmd_variance(args) -> tuple[dict, int, Output]:
    cfg = _load_config(args.config, "variance")
    seed = _seed(args, cfg)
    try:
        config = VarianceConfig.from_json(dict(cfg, seed=seed))
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, "ConfigError", str(exc)) from None
    result = variance_study(config)
    return config.to_json(), seed, Output(result.to_json(), {"": result.rows()})


def cmd_profile(args) -> tuple[dict, int, Output]:
    cfg = _load_config(args.config, "profile")
    seed = _seed(args, cfg)
    config = ProfileConfig.from_json(dict(cfg, seed=seed))
    rows = [r.as_dict() for r in time_profile(config)]
    return config.to_json(), seed, Output({"config": config.to_json(), "rows": rows}, {"": rows})


COMMANDS: dict[str, Callable] = {
    "tables": cmd_tables,
    "rc": cmd_rc,
    "emulate": cmd_emulate,
    "ptm": cmd_ptm,
    "cb": cmd_cb,
    "variance": cmd_variance,
    "profile": cmd_profile,
}


# -- parser -------------------------------------------------------------------------


def _schema_help(*names: str) -> str:
    return "\n".join(f"{name} schema:\n{schemas.describe(name)}" for name in names)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config file (schema below)")
    common.add_argument("--seed", type=int, metavar="U64", help="master seed; overrides the config's seed")
    common.add_argument("--out", metavar="DIR", help="write results and a manifest here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json", help="output format (default json)")

    parser = argparse.ArgumentParser(
        prog="hwrc",
        description="Randomized compiling in software and emulated gateware.",
        epilog=EXIT_CODES,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")

    def add(name, help, schema_names=(), **kw):
        return sub.add_parser(
            name,
            help=help,
            description=help,
            parents=[common],
            epilog=(_schema_help(*schema_names) + "\n\n" if schema_names else "") + EXIT_CODES,
            formatter_class=argparse.RawDescriptionHelpFormatter,
            **kw,
        )

    add("tables", "dump the Pauli propagation and phase absorption tables")

    p = add("rc", "randomize a circuit in software", ("circuit",))
    p.add_argument("circuit", help="circuit JSON file")
    p.add_argument("--n", type=int, default=1, help="number of randomizations (default 1)")
    p.add_argument("--exhaustive", action="store_true", help="enumerate twirls in lexicographic order")

    p = add("emulate", "run shots through the gateware emulator", ("circuit", "emulate"))
    p.add_argument("circuit", help="circuit JSON file")
    p.add_argument("--shots", type=int, help="number of shots (default 1)")
    p.add_argument("--gate-ns", type=float, help="X90 pulse duration in ns (default 16)")
    p.add_argument("--rc", choices=("on", "off"), help="randomize every shot (default on)")
    p.add_argument("--resolved", action="store_true", help="include each shot's resolved circuit")

    add("ptm", "PTMs and error generators of noisy two-qubit gates", ("noise",))
    add("cb", "cycle benchmarking with per-Pauli decay fits", ("cb", "noise"))
    add("variance", "observable error distributions with and without randomization", ("variance", "noise"))
    add("profile", "compile pipeline timings, software vs gateware", ("profile",))
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = datetime.now(timezone.utc).isoformat()
    try:
        config, seed, out = COMMANDS[args.command](args)
        emit(args.command, config, seed, out, args, started)
    except CliError as exc:
        return _report(exc.code, exc.kind, str(exc))
    except Exception as exc:  # mapped to a documented exit code
        return _report(_error_code(exc), type(exc).__name__, str(exc))
    return EXIT_OK


def _report(code: int, kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": {"type": kind, "message": message, "exit_code": code}}) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
