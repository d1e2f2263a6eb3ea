"""Controlled-U^p fragments for U = exp(2*pi*i*A).

Two realizations are provided. :class:`DiagonalPhaseProvider` builds the
fragment from relative phase gates, one multi-controlled ``PHASE`` per basis
state of ``G`` with a nonzero diagonal entry (open controls via ``X``
conjugation). :class:`DenseExponentialProvider` emits a single opaque gate
computed from the eigendecomposition of ``A``.

The fragment length is the cost unit ``h(A)``; it does not depend on the
power, so every fragment of a given provider has the same size.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

from .circuit import Gate, opaque
from .statevector import SimulationError


class ControlledUProvider:
    tag = "abstract"

    def __init__(self, A):
        A = np.asarray(A, dtype=complex)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] & (A.shape[0] - 1):
            raise SimulationError(f"A must be square with power-of-two size, got {A.shape}")
        if not np.allclose(A, A.conj().T, atol=1e-12, rtol=0):
            raise SimulationError("A must be Hermitian")
        self.A = A
        self.g_qubits = int(round(np.log2(A.shape[0])))

    def fragment(self, power: int, control: int, g_targets: Sequence[int], fragment_id: int) -> list[Gate]:
        raise NotImplementedError

    @property
    def cost(self) -> int:
        """Gates per fragment, i.e. h(A)."""
        return len(self.fragment(1, 1, list(range(2, 2 + self.g_qubits)), 0))

    def unitary_power(self, power: int) -> np.ndarray:
        w, v = np.linalg.eigh(self.A)
        return (v * np.exp(2j * np.pi * _turns(power, w))) @ v.conj().T


def _turns(power: int, values) -> np.ndarray:
    """(power * values) mod 1, exact for values that are dyadic rationals."""
    values = np.asarray(values, dtype=float)
    return np.array([float((Fraction(power) * Fraction(float(v))) % 1) for v in values.ravel()]).reshape(values.shape)


class DiagonalPhaseProvider(ControlledUProvider):
    tag = "diagonal-phase"

    def __init__(self, A):
        super().__init__(A)
        if not np.allclose(self.A, np.diag(np.diag(self.A)), atol=1e-12, rtol=0):
            raise SimulationError("diagonal-phase provider needs a diagonal A")
        self.diagonal = np.diag(self.A).real

    def fragment(self, power, control, g_targets, fragment_id):
        g = len(g_targets)
        if g != self.g_qubits:
            raise SimulationError(f"provider acts on {self.g_qubits} qubits, got {g}")
        tag = (fragment_id, power)
        turns = _turns(power, self.diagonal)
        gates: list[Gate] = []
        target = g_targets[-1]
        for basis, value in enumerate(self.diagonal):
            if value == 0:
                continue
            zeros = [g_targets[i] for i in range(g) if not basis >> i & 1]
            flips = [Gate("X", (q,), query=tag) for q in zeros]
            others = [q for q in g_targets if q != target]
            gates += flips
            gates.append(Gate("PHASE", (target,), (control, *others), param=float(turns[basis]), query=tag))
            gates += flips
        return gates


class DenseExponentialProvider(ControlledUProvider):
    tag = "dense-exponential"

    def fragment(self, power, control, g_targets, fragment_id):
        if len(g_targets) != self.g_qubits:
            raise SimulationError(f"provider acts on {self.g_qubits} qubits, got {len(g_targets)}")
        return [opaque(f"U^{power}", self.unitary_power(power), g_targets, (control,), query=(fragment_id, power))]


def default_provider(A) -> ControlledUProvider:
    A = np.asarray(A, dtype=complex)
    if np.allclose(A, np.diag(np.diag(A)), atol=1e-12, rtol=0):
        return DiagonalPhaseProvider(A)
    return DenseExponentialProvider(A)


def phase_provider(phase) -> DiagonalPhaseProvider:
    """Single-qubit U = diag(1, exp(2*pi*i*phase)); its eigenstate |1> carries ``phase``."""
    return DiagonalPhaseProvider(np.diag([0.0, float(phase)]))
