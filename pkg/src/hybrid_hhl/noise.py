"""Depolarizing noise by Pauli trajectories, and the Hybrid19 vs Hybrid25 comparison.

After every gate, with probability ``p`` (``p1`` for one-qubit gates, ``p2``
for controlled, two-qubit and opaque gates) a Pauli drawn uniformly from all
``4^k`` Paulis on the noised qubits is applied. Including the identity makes
``p`` the depolarizing parameter: ``p = 1`` fully randomizes those qubits.
Opaque gates are noised on their targets only.

Each trajectory is simulated exactly and contributes its outcome
distribution; the average over trajectories is an unbiased estimate of the
noisy channel's distribution. Error-free trajectories reuse the ideal run.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, Gate, count_gates, run
from .hhl import (
    DEFAULT_C,
    HhlCircuit,
    LinearSystem,
    _readout_qubits,
    build_method,
    condition_on_e,
    exact_binary_matrix,
    solve,
)
from .statevector import ImpossibleOutcome, SimulationError, apply_inplace, new_basis_state, tvd

CHUNK = 2048

_PAULIS = (
    None,
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True)
class NoiseModel:
    p1: float = 0.001
    p2: float = 0.005
    seed: int = 0

    def __post_init__(self):
        for name in ("p1", "p2"):
            p = getattr(self, name)
            if not 0 <= p <= 1:
                raise SimulationError(f"{name} must lie in [0, 1], got {p}")

    def channel(self, gate: Gate) -> tuple[float, tuple[int, ...]]:
        """(probability, noised qubits) for ``gate``."""
        if gate.kind == "OPAQUE":
            return self.p2, gate.targets
        if gate.controls or len(gate.targets) > 1:
            return self.p2, gate.qubits
        return self.p1, gate.targets


def expected_insertions(circuit: Circuit, noise: NoiseModel) -> float:
    """Mean number of non-identity Paulis inserted per trajectory."""
    total = 0.0
    for g in circuit.gates:
        p, qs = noise.channel(g)
        total += p * (1 - 4.0 ** -len(qs))
    return total


@dataclass
class TrajectoryRun:
    """Per-trajectory outcome distributions over ``readout`` (rows) and insertion counts."""

    readout: list[int]
    distributions: np.ndarray
    insertions: np.ndarray

    @property
    def trajectories(self) -> int:
        return len(self.insertions)

    def mean(self, weights: np.ndarray | None = None) -> np.ndarray:
        if weights is None:
            return self.distributions.mean(axis=0)
        return weights @ self.distributions / weights.sum(axis=-1, keepdims=True)


def _batched_marginal(psi: np.ndarray, n: int, readout: list[int]) -> np.ndarray:
    p = np.abs(psi) ** 2
    axes = [n - q + 1 for q in readout]
    others = tuple(a for a in range(1, n + 1) if a not in axes)
    p = p.sum(axis=others) if others else p
    kept = sorted(axes)
    p = np.transpose(p, [0] + [1 + kept.index(a) for a in axes])
    return p.reshape(p.shape[0], -1)


def _draw_errors(circuit: Circuit, noise: NoiseModel, trajectories: int, rng: np.random.Generator):
    """Per gate: (trajectory indices, Pauli codes) for the insertions that happen."""
    events = []
    counts = np.zeros(trajectories, dtype=np.int64)
    for g in circuit.gates:
        p, qs = noise.channel(g)
        if p == 0:
            events.append(None)
            continue
        rows = np.flatnonzero(rng.random(trajectories) < p)
        codes = rng.integers(0, 4 ** len(qs), size=rows.size)
        keep = codes != 0
        rows, codes = rows[keep], codes[keep]
        np.add.at(counts, rows, 1)
        events.append((rows, codes, qs) if rows.size else None)
    return events, counts


def _apply_paulis(psi: np.ndarray, n: int, rows: np.ndarray, codes: np.ndarray, qubits) -> None:
    sub = psi[rows]
    for j, q in enumerate(qubits):
        digit = (codes // 4**j) % 4
        for kind in (1, 2, 3):
            sel = np.flatnonzero(digit == kind)
            if sel.size:
                part = sub[sel]
                apply_inplace(part, n, _PAULIS[kind], (), (q,))
                sub[sel] = part
    psi[rows] = sub


def simulate_trajectories(
    circuit: Circuit,
    noise: NoiseModel,
    trajectories: int,
    readout: list[int],
    shots_per_traj: int | None = None,
) -> TrajectoryRun:
    """Run ``trajectories`` noisy copies of ``circuit`` from |0...0>."""
    if trajectories < 1:
        raise SimulationError("trajectories must be >= 1")
    n = circuit.num_qubits
    rng = np.random.default_rng(noise.seed)
    events, counts = _draw_errors(circuit, noise, trajectories, rng)
    ideal = _batched_marginal(
        run(circuit, new_basis_state(n)).amplitudes.reshape((1,) + (2,) * n), n, readout
    )[0]
    dists = np.tile(ideal, (trajectories, 1))
    noisy = np.flatnonzero(counts)
    for start in range(0, noisy.size, CHUNK):
        ids = noisy[start:start + CHUNK]
        psi = np.zeros((ids.size,) + (2,) * n, dtype=complex)
        psi.reshape(ids.size, -1)[:, 0] = 1
        for g, ev in zip(circuit.gates, events):
            apply_inplace(psi, n, g.unitary(), g.controls, g.targets)
            if ev is None:
                continue
            rows, codes, qs = ev
            lo, hi = np.searchsorted(rows, [ids[0], ids[-1] + 1])
            if lo == hi:
                continue
            r, cd = rows[lo:hi], codes[lo:hi]
            local = np.searchsorted(ids, r)
            hit = ids[np.minimum(local, ids.size - 1)] == r
            if hit.any():
                _apply_paulis(psi, n, local[hit], cd[hit], qs)
        dists[ids] = _batched_marginal(psi, n, readout)
    if shots_per_traj is not None:
        srng = np.random.default_rng([noise.seed, 1])
        p = np.clip(dists, 0, None)
        p /= p.sum(axis=1, keepdims=True)
        dists = np.array([srng.multinomial(shots_per_traj, row) for row in p]) / shots_per_traj
    return TrajectoryRun(list(readout), dists, counts)


def _labels(k: int) -> list[str]:
    return [format(i, f"0{k}b") for i in range(2**k)]


def _conditional(joint: np.ndarray, k: int) -> tuple[dict[str, float], float]:
    return condition_on_e(dict(zip(_labels(k), joint)))


@dataclass
class NoisyOutcome:
    g_distribution: dict[str, float]
    success_probability: float
    run: TrajectoryRun


def run_noisy(hc: HhlCircuit, noise: NoiseModel, trajectories: int,
              shots_per_traj: int | None = None) -> NoisyOutcome:
    """Noisy G distribution conditioned on E=1, averaged over trajectories."""
    circuit = hc.circuit
    readout = _readout_qubits(circuit)
    tr = simulate_trajectories(circuit, noise, trajectories, readout, shots_per_traj)
    try:
        dist, p = _conditional(tr.mean(), len(readout))
    except ImpossibleOutcome as exc:
        raise ImpossibleOutcome(
            f"no trajectory weight on E=1 after {trajectories} trajectories "
            f"(p1={noise.p1}, p2={noise.p2}): {exc}"
        ) from exc
    return NoisyOutcome(dist, p, tr)


@dataclass
class ErrorReport:
    method: str
    tvd_to_ideal: float
    ci_low: float
    ci_high: float
    trajectories: int
    mean_insertions: float
    expected_insertions: float
    total_gates: int
    total_qubits: int

    @property
    def half_width(self) -> float:
        return (self.ci_high - self.ci_low) / 2

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "tvd_to_ideal": self.tvd_to_ideal,
            "ci95": [self.ci_low, self.ci_high],
            "half_width": self.half_width,
            "trajectories": self.trajectories,
            "mean_insertions": self.mean_insertions,
            "expected_insertions": self.expected_insertions,
            "total_gates": self.total_gates,
            "total_qubits": self.total_qubits,
        }


def bootstrap_tvd(tr: TrajectoryRun, ideal: dict[str, float], resamples: int = 200,
                  seed: int = 0, level: float = 0.95) -> tuple[float, float]:
    """Percentile interval of TVD(ideal, noisy) resampling trajectories."""
    rng = np.random.default_rng([seed, 2])
    k = len(tr.readout)
    T = tr.trajectories
    vals = []
    for _ in range(resamples):
        w = rng.multinomial(T, np.full(T, 1 / T)).astype(float)
        dist, _ = _conditional(tr.mean(w), k)
        vals.append(tvd(dist, ideal))
    a = (1 - level) / 2
    return float(np.quantile(vals, a)), float(np.quantile(vals, 1 - a))


def error_report(hc: HhlCircuit, noise: NoiseModel, trajectories: int,
                 resamples: int = 200) -> ErrorReport:
    ideal = solve(hc).g_distribution
    out = run_noisy(hc, noise, trajectories)
    lo, hi = bootstrap_tvd(out.run, ideal, resamples, noise.seed)
    full = count_gates(hc.circuit)
    return ErrorReport(
        method=hc.method,
        tvd_to_ideal=tvd(out.g_distribution, ideal),
        ci_low=lo,
        ci_high=hi,
        trajectories=trajectories,
        mean_insertions=float(out.run.insertions.mean()),
        expected_insertions=expected_insertions(hc.circuit, noise),
        total_gates=full.total,
        total_qubits=hc.circuit.num_qubits,
    )


def compare_methods(system: LinearSystem, noise: NoiseModel, trajectories: int, n: int = 6,
                    c: float = DEFAULT_C, methods=("hybrid19", "hybrid25"),
                    resamples: int = 200) -> dict[str, ErrorReport]:
    """Error reports for each method under the same noise model and seed."""
    B = exact_binary_matrix(system, n)
    return {m: error_report(build_method(system, m, n, c, B=B), noise, trajectories, resamples)
            for m in sorted(methods)}
