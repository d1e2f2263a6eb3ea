"""Dense state-vector simulation.

Qubits are numbered from 1. Qubit ``q`` is bit ``q - 1`` of the amplitude
index, so qubit 1 is the least-significant bit. Every other module inherits
this convention.

Outcome strings returned by :func:`probabilities` and :func:`sample` list the
bit of each requested qubit in the order the qubits were requested.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 24
UNITARY_ATOL = 1e-10
NORM_ATOL = 1e-10
IMPOSSIBLE_BRANCH = 1e-12

Distribution = dict  # bitstring -> probability


class SimulationError(ValueError):
    """Invalid input to a simulation primitive (domain or validation error)."""


class ImpossibleOutcome(SimulationError):
    """Post-selection on a branch whose probability is numerically zero."""


@dataclass
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2**self.num_qubits,):
            raise SimulationError(
                f"expected {2**self.num_qubits} amplitudes, got shape {self.amplitudes.shape}"
            )

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())

    @classmethod
    def from_amplitudes(cls, amplitudes) -> "StateVector":
        amplitudes = np.asarray(amplitudes, dtype=complex)
        n = int(round(np.log2(len(amplitudes))))
        return cls(n, amplitudes)


def new_basis_state(num_qubits: int, basis_index: int = 0) -> StateVector:
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise SimulationError(f"num_qubits must be in [1, {MAX_QUBITS}], got {num_qubits}")
    if not 0 <= basis_index < 2**num_qubits:
        raise SimulationError(f"basis index {basis_index} out of range for {num_qubits} qubits")
    amps = np.zeros(2**num_qubits, dtype=complex)
    amps[basis_index] = 1.0
    return StateVector(num_qubits, amps)


def tensor(*states: StateVector) -> StateVector:
    """Tensor product; the first argument occupies the lowest-numbered qubits."""
    amps = np.ones(1, dtype=complex)
    n = 0
    for s in states:
        amps = np.kron(s.amplitudes, amps)
        n += s.num_qubits
    return StateVector(n, amps)


def check_unitary(u: np.ndarray, atol: float = UNITARY_ATOL) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1] or u.shape[0] & (u.shape[0] - 1):
        raise SimulationError(f"unitary must be square with power-of-two size, got {u.shape}")
    if not np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=atol, rtol=0):
        raise SimulationError("matrix is not unitary")
    return u


def _check_qubits(n: int, qubits: Iterable[int]) -> None:
    for q in qubits:
        if not 1 <= q <= n:
            raise SimulationError(f"qubit {q} out of range 1..{n}")


def apply_inplace(
    psi: np.ndarray,
    n: int,
    u: np.ndarray,
    controls: Sequence[int],
    targets: Sequence[int],
) -> None:
    """Apply ``u`` to a batch of states in place.

    ``psi`` has shape ``(batch, 2, ..., 2)`` with qubit ``q`` on axis ``n - q + 1``.
    ``targets[0]`` is the least-significant bit of the row index of ``u``.
    No validation; callers are expected to have checked their inputs.
    """
    idx: list = [slice(None)] * (n + 1)
    for c in controls:
        idx[n - c + 1] = 1
    idx = tuple(idx)
    view = psi[idx]
    t = len(targets)
    if t == 1:
        # two strided slices instead of moveaxis + matmul
        remaining = [q for q in range(n, 0, -1) if q not in controls]
        ax = 1 + remaining.index(targets[0])
        s0 = [slice(None)] * view.ndim
        s1 = [slice(None)] * view.ndim
        s0[ax], s1[ax] = 0, 1
        a0 = view[tuple(s0)]
        a1 = view[tuple(s1)]
        if u[0, 1] == 0 and u[1, 0] == 0:
            if u[0, 0] != 1:
                a0 *= u[0, 0]
            if u[1, 1] != 1:
                a1 *= u[1, 1]
            return
        new0 = u[0, 0] * a0 + u[0, 1] * a1
        a1[...] = u[1, 0] * a0 + u[1, 1] * a1
        a0[...] = new0
        return
    remaining = [q for q in range(n, 0, -1) if q not in controls]
    tpos = [1 + remaining.index(q) for q in reversed(targets)]
    dest = list(range(view.ndim - t, view.ndim))
    moved = np.moveaxis(view, tpos, dest)
    shape = moved.shape
    new = moved.reshape(shape[:-t] + (2**t,)) @ u.T
    view[...] = np.moveaxis(new.reshape(shape), dest, tpos)


def as_batch(amplitudes: np.ndarray, n: int) -> np.ndarray:
    return np.asarray(amplitudes, dtype=complex).reshape((-1,) + (2,) * n)


def apply_controlled(
    state: StateVector,
    u: np.ndarray,
    controls: Iterable[int],
    targets: Sequence[int],
) -> StateVector:
    """Apply ``u`` to ``targets`` on the subspace where every control is 1."""
    controls = tuple(sorted(set(controls)))
    targets = tuple(targets)
    n = state.num_qubits
    _check_qubits(n, controls + targets)
    if len(set(targets)) != len(targets):
        raise SimulationError("duplicate target qubits")
    if set(controls) & set(targets):
        raise SimulationError("control and target sets overlap")
    u = check_unitary(u)
    if u.shape[0] != 2 ** len(targets):
        raise SimulationError(f"{u.shape[0]}x{u.shape[0]} unitary does not act on {len(targets)} targets")
    psi = as_batch(state.amplitudes.copy(), n)
    apply_inplace(psi, n, u, controls, targets)
    return StateVector(n, psi.reshape(-1))


def apply_1q(state: StateVector, u: np.ndarray, target: int) -> StateVector:
    return apply_controlled(state, u, (), (target,))


def _marginal(amplitudes: np.ndarray, n: int, qubits: Sequence[int]) -> np.ndarray:
    """Probability tensor over ``qubits``; axis i belongs to ``qubits[i]``."""
    p = (np.abs(amplitudes) ** 2).reshape((2,) * n) if n else np.abs(amplitudes) ** 2
    axes = [n - q for q in qubits]
    others = tuple(a for a in range(n) if a not in axes)
    p = p.sum(axis=others) if others else p
    kept = sorted(axes)
    return np.transpose(p, [kept.index(a) for a in axes])


def _check_distinct(n: int, qubits: Sequence[int]) -> None:
    _check_qubits(n, qubits)
    if len(set(qubits)) != len(qubits):
        raise SimulationError("duplicate qubits in measurement list")


def probabilities(state: StateVector, qubits: Sequence[int], *, cutoff: float = 1e-14) -> Distribution:
    """Exact marginal distribution over ``qubits`` (outcomes below ``cutoff`` dropped)."""
    qubits = list(qubits)
    _check_distinct(state.num_qubits, qubits)
    p = _marginal(state.amplitudes, state.num_qubits, qubits).reshape(-1)
    k = len(qubits)
    return {format(i, f"0{k}b") if k else "": float(v) for i, v in enumerate(p) if v > cutoff}


def sample(state: StateVector, qubits: Sequence[int], shots: int, seed: int) -> Distribution:
    """Empirical frequencies of ``shots`` measurements drawn with a seeded PCG64 stream."""
    if shots < 1:
        raise SimulationError("shots must be >= 1")
    qubits = list(qubits)
    _check_distinct(state.num_qubits, qubits)
    p = _marginal(state.amplitudes, state.num_qubits, qubits).reshape(-1)
    p = np.clip(p, 0, None)
    counts = np.random.default_rng(seed).multinomial(shots, p / p.sum())
    k = len(qubits)
    return {format(i, f"0{k}b"): c / shots for i, c in enumerate(counts) if c}


def post_select(state: StateVector, qubit: int, value: int) -> tuple[StateVector, float]:
    """Condition on ``qubit`` reading ``value``; the qubit is removed from the returned state."""
    n = state.num_qubits
    _check_qubits(n, [qubit])
    if value not in (0, 1):
        raise SimulationError("post-selected value must be 0 or 1")
    psi = state.amplitudes.reshape((2,) * n)
    branch = np.take(psi, value, axis=n - qubit).reshape(-1)
    prob = float(np.vdot(branch, branch).real)
    if prob < IMPOSSIBLE_BRANCH:
        raise ImpossibleOutcome(f"qubit {qubit} = {value} has probability {prob:.3e}")
    return StateVector(n - 1, branch / np.sqrt(prob)), prob


def tvd(p: Distribution, q: Distribution) -> float:
    """Total variation distance between two outcome distributions."""
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
