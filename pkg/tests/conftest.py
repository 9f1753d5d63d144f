"""Shared oracles built from first principles, independent of the package internals."""

import math
import sys
from functools import reduce
from pathlib import Path

import numpy as np
import pytest
from scipy.linalg import expm

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

I = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": I, "X": X, "Y": Y, "Z": Z}
X90 = expm(-1j * math.pi / 4 * X)


def rz(phi):
    return np.diag([np.exp(-0.5j * phi), np.exp(0.5j * phi)])


def u3(phi0, phi1, phi2):
    return rz(phi2) @ X90 @ rz(phi1) @ X90 @ rz(phi0)


def phase_distance(a, b):
    """max |a - e^{i t} b| minimised over t, i.e. distance up to global phase."""
    k = np.vdot(b, a)
    t = k / abs(k) if abs(k) > 1e-15 else 1.0
    return float(np.max(np.abs(a - t * b)))


def kron_all(ops):
    return reduce(np.kron, ops)


def cz_oracle():
    return np.diag([1, 1, 1, -1]).astype(complex)


def cnot_oracle(control, target, width):
    """Permutation matrix of CNOT on basis states; qubit 0 is the most significant bit."""
    d = 2**width
    m = np.zeros((d, d), dtype=complex)
    for i in range(d):
        bits = [(i >> (width - 1 - q)) & 1 for q in range(width)]
        if bits[control]:
            bits[target] ^= 1
        j = sum(b << (width - 1 - q) for q, b in enumerate(bits))
        m[j, i] = 1
    return m


def cz_full(a, b, width):
    d = 2**width
    diag = [(-1) ** (((i >> (width - 1 - a)) & 1) & ((i >> (width - 1 - b)) & 1)) for i in range(d)]
    return np.diag(diag).astype(complex)


def circuit_oracle(circuit):
    """Dense unitary from per-cycle Kronecker products, written without the package helpers."""
    w = circuit.width
    total = np.eye(2**w, dtype=complex)
    for c in circuit.cycles:
        if c.tag == "single":
            m = kron_all([u3(*c.gates[q]) if q in c.gates else I for q in range(w)])
        else:
            m = np.eye(2**w, dtype=complex)
            for g in c.gates:
                a, b = g.qubits
                if g.kind == "cz":
                    m = cz_full(a, b, w) @ m
                elif g.kind == "cnot":
                    m = cnot_oracle(a, b, w) @ m
        total = m @ total
    return total


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
