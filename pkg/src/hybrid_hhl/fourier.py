"""QFT, QFT with the SWAP layer, and the swapless inverse IQFT'.

Position ``k`` of an ``n``-qubit transform lives on ``qubits[k - 1]``.
Without swaps, the QFT leaves qubit ``k`` holding the phase
``0.j_k j_{k+1} ... j_n`` of the input bits ``j``; IQFT' undoes exactly that.
"""
from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .circuit import Circuit, Gate, run
from .statevector import SimulationError, new_basis_state


def _check_n(n: int) -> None:
    if n < 1:
        raise SimulationError("transform width must be >= 1")


def qft_gates(qubits: Sequence[int], include_swaps: bool = False) -> list[Gate]:
    n = len(qubits)
    gates = []
    for k in range(1, n + 1):
        gates.append(Gate("H", (qubits[k - 1],)))
        for l in range(k + 1, n + 1):
            gates.append(Gate("RK", (qubits[k - 1],), (qubits[l - 1],), param=l - k + 1))
    if include_swaps:
        for k in range(1, n // 2 + 1):
            gates.append(Gate("SWAP", (qubits[k - 1], qubits[n - k])))
    return gates


def iqft_prime_gates(qubits: Mapping[int, int] | Sequence[int], n: int | None = None,
                     known: Mapping[int, int] | None = None) -> list[Gate]:
    """IQFT' over positions 1..n, optionally punctured at ``known`` positions.

    ``qubits`` maps position -> global qubit (a sequence is read 1-based).
    Known positions have no qubit: a known bit 1 turns the controlled
    R^dagger it would have driven into an unconditional one, a known bit 0
    drops it.
    """
    if not isinstance(qubits, Mapping):
        qubits = {k: q for k, q in enumerate(qubits, start=1)}
    n = len(qubits) + len(known or {}) if n is None else n
    known = dict(known or {})
    gates = []
    if n not in known:
        gates.append(Gate("H", (qubits[n],)))
    for k in range(n - 1, 0, -1):
        if k in known:
            continue
        for l in range(n, k, -1):
            if l in known:
                if known[l] == 1:
                    gates.append(Gate("RKDAG", (qubits[k],), param=l - k + 1))
            else:
                gates.append(Gate("RKDAG", (qubits[k],), (qubits[l],), param=l - k + 1))
        gates.append(Gate("H", (qubits[k],)))
    return gates


def build_qft(n: int, include_swaps: bool = False) -> Circuit:
    _check_n(n)
    return Circuit((("F", n),), qft_gates(list(range(1, n + 1)), include_swaps))


def build_iqft_prime(n: int) -> Circuit:
    _check_n(n)
    return Circuit((("F", n),), iqft_prime_gates(list(range(1, n + 1))))


def bit_reverse(j: int, n: int) -> int:
    return int(format(j, f"0{n}b")[::-1], 2)


def verify_bit_reversal(n: int) -> bool:
    """Check on every basis input that IQFT' followed by the full QFT is a bit reversal.

    Removing the SWAP layer from IQFT means IQFT' = QFT^-1 . SWAP, so the
    full QFT (with swaps) composed after IQFT' leaves only the reversal.
    """
    _check_n(n)
    circuit = build_iqft_prime(n) + build_qft(n, include_swaps=True)
    for j in range(2**n):
        out = run(circuit, new_basis_state(n, j)).amplitudes
        expected = np.zeros(2**n)
        expected[bit_reverse(j, n)] = 1
        if not np.allclose(out, expected, atol=1e-10):
            return False
    return True
