"""JSON schemas for every file the command line reads."""

from __future__ import annotations

import json

import jsonschema

PAULI_PAIR = {"type": "string", "pattern": "^[IXYZixyz]{2}$"}
PROBABILITY = {"type": "number", "minimum": 0, "maximum": 1}
SEED = {"type": "integer", "minimum": 0, "maximum": 2**64 - 1}

_angles = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}

_SINGLE = {
    "additionalProperties": False,
    "properties": {
        "type": True,
        "gates": {
            "type": "object",
            "propertyNames": {"pattern": "^[0-9]+$"},
            "additionalProperties": _angles,
        },
    },
}

_TWO = {
    "required": ["gates"],
    "additionalProperties": False,
    "properties": {
        "type": True,
        "gates": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["kind", "qubits"],
                "additionalProperties": False,
                "properties": {
                    "kind": {"enum": ["cz", "cnot", "id"]},
                    "qubits": {
                        "type": "array",
                        "items": {"type": "integer", "minimum": 0},
                        "minItems": 2,
                        "maxItems": 2,
                    },
                },
            },
        },
    },
}

CIRCUIT = {
    "$id": "circuit",
    "type": "object",
    "required": ["width", "cycles"],
    "additionalProperties": False,
    "properties": {
        "width": {"type": "integer", "minimum": 1},
        "cycles": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["type"],
                "properties": {"type": {"enum": ["single", "two"]}},
                "allOf": [
                    {"if": {"properties": {"type": {"const": "single"}}}, "then": _SINGLE},
                    {"if": {"properties": {"type": {"const": "two"}}}, "then": _TWO},
                ],
            },
        },
    },
}

_gate_noise = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "coherent": {
            "type": "object",
            "required": ["theta"],
            "additionalProperties": False,
            "properties": {"pauli": PAULI_PAIR, "theta": {"type": "number"}},
        },
        "stochastic": {
            "type": "object",
            "propertyNames": {"pattern": "^[IXYZixyz]{2}$"},
            "additionalProperties": PROBABILITY,
        },
        "damping": PROBABILITY,
        "depolarizing": {"type": "number", "minimum": -1 / 15, "maximum": 1},
    },
}

NOISE = {
    "$id": "noise",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "cz": _gate_noise,
        "cnot": _gate_noise,
        "id": _gate_noise,
        "x90": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"overrotation": {"type": "number"}},
        },
    },
}

DURATIONS = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "x90_ns": {"type": "number", "exclusiveMinimum": 0},
        "two_qubit_ns": {"type": "number", "minimum": 0},
        "measure_ns": {"type": "number", "minimum": 0},
        "clock_ns": {"type": "number", "exclusiveMinimum": 0},
    },
}

_lfsr_width = {"type": ["integer", "null"], "minimum": 2, "maximum": 64}
_pos_int = {"type": "integer", "minimum": 1}

EMULATE = {
    "$id": "emulate",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "shots": _pos_int,
        "seed": SEED,
        "rc": {"type": "boolean"},
        "durations": DURATIONS,
        "lfsr_width": _lfsr_width,
    },
}

CB = {
    "$id": "cb",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["cz", "cnot"]},
        "pair": {
            "type": "array",
            "items": {"type": "integer", "minimum": 0},
            "minItems": 2,
            "maxItems": 2,
        },
        "paulis": {"type": "array", "items": PAULI_PAIR, "minItems": 1},
        "depths": {"type": "array", "items": {"type": "integer", "minimum": 2, "multipleOf": 2}, "minItems": 2},
        "shots": _pos_int,
        "mode": {"enum": ["software-rc", "gateware-frc"]},
        "n_rand": _pos_int,
        "seed": SEED,
        "noise": NOISE,
        "durations": DURATIONS,
        "lfsr_width": _lfsr_width,
    },
}

VARIANCE = {
    "$id": "variance",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "n_circuits": _pos_int,
        "width": {"const": 2},
        "depth": _pos_int,
        "shots": _pos_int,
        "modes": {
            "type": "array",
            "items": {"enum": ["bare", "gateware-frc", "software-rc"]},
            "minItems": 1,
            "uniqueItems": True,
        },
        "n_rand": _pos_int,
        "subsample_shots": _pos_int,
        "subsample_repeats": {"type": "integer", "minimum": 2},
        "seed": SEED,
        "noise": NOISE,
        "durations": DURATIONS,
        "lfsr_width": _lfsr_width,
    },
}

PROFILE = {
    "$id": "profile",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "widths": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "depths": {"type": "array", "items": _pos_int, "minItems": 1},
        "modes": {
            "type": "array",
            "items": {"enum": ["software-rc", "gateware-frc"]},
            "minItems": 1,
            "uniqueItems": True,
        },
        "n_rand": _pos_int,
        "shots": _pos_int,
        "repeats": _pos_int,
        "seed": SEED,
        "constants": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                k: {"type": "number", "minimum": 0}
                for k in ("load_circuit_s", "get_data_s", "client_server_s")
            },
        },
        "durations": DURATIONS,
    },
}

SCHEMAS = {
    "circuit": CIRCUIT,
    "noise": NOISE,
    "emulate": EMULATE,
    "cb": CB,
    "variance": VARIANCE,
    "profile": PROFILE,
}


class SchemaError(ValueError):
    """A document failed validation; ``path`` locates the offending field."""

    def __init__(self, name: str, path: str, message: str):
        super().__init__(f"{name}: {path or '<root>'}: {message}")
        self.name = name
        self.path = path


def _path(error: jsonschema.ValidationError) -> str:
    out = ""
    for p in error.absolute_path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out


def validate(document, name: str) -> None:
    """Raise :class:`SchemaError` for the most specific violation, if any."""
    validator = jsonschema.Draft202012Validator(SCHEMAS[name])
    error = jsonschema.exceptions.best_match(validator.iter_errors(document))
    if error is not None:
        raise SchemaError(name, _path(error), error.message)


def describe(name: str) -> str:
    return json.dumps(SCHEMAS[name], indent=1)
