"""Phase estimation circuits: plain, shifted and punctured.

All three share one construction. For a register of ``n`` bit positions,
shift ``s`` and a set of known bits ``P``:

* every position ``k`` not in ``P`` gets an ``F`` qubit, a Hadamard and a
  controlled-U^(2^(s+k-1)) with that qubit as control;
* IQFT' then runs over positions ``1..n`` with the known bits folded in
  (unconditional R^dagger for a known 1, nothing for a known 0).

Measuring ``F`` qubit ``k`` yields bit ``s + k`` of the phase. With ``s = 0``
and ``P`` empty this is ordinary QPE, gate for gate. Hadamards are applied
as one layer before the controlled powers in every variant so the
reductions hold exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .circuit import Circuit, Gate, run
from .fourier import iqft_prime_gates
from .providers import ControlledUProvider
from .statevector import (
    SimulationError,
    StateVector,
    new_basis_state,
    probabilities,
    sample,
    tensor,
)


@dataclass(frozen=True)
class PunctureSpec:
    """Known phase bits, position -> bit value."""

    known_bits: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "known_bits", {int(p): int(b) for p, b in dict(self.known_bits).items()})
        for b in self.known_bits.values():
            if b not in (0, 1):
                raise SimulationError("known bits must be 0 or 1")

    def validate(self, n: int) -> None:
        for p in self.known_bits:
            if not 1 <= p <= n:
                raise SimulationError(f"puncture position {p} outside 1..{n}")
        if len(self.known_bits) >= n:
            raise SimulationError("cannot puncture every position")

    @classmethod
    def parse(cls, text: str) -> "PunctureSpec":
        """Parse ``"2=0,4=1"``."""
        known = {}
        for item in filter(None, (t.strip() for t in text.split(","))):
            pos, _, bit = item.partition("=")
            if not bit:
                raise SimulationError(f"bad puncture entry {item!r}, expected pos=bit")
            known[int(pos)] = int(bit)
        return cls(known)


@dataclass
class PhaseEstimateResult:
    bits: dict[int, int]
    shots_histogram: dict[str, float]
    positions_measured: list[int]

    @property
    def top_outcome(self) -> str:
        return max(self.shots_histogram, key=self.shots_histogram.get)


def required_register_size(n_bits: int, epsilon: float, punctured: int = 0) -> int:
    """Qubits needed for ``n_bits`` of precision with failure probability at most ``epsilon``.

    ``punctured`` known bits reduce the count one for one.
    """
    if n_bits < 1:
        raise SimulationError("n_bits must be >= 1")
    if not 0 < epsilon < 1:
        raise SimulationError("epsilon must lie in (0, 1)")
    if not 0 <= punctured < n_bits:
        raise SimulationError("punctured count must be in [0, n_bits)")
    ratio = 2 + 1 / (2 * Fraction(epsilon))
    extra = 0
    while 2**extra < ratio:  # exact ceil(log2(ratio))
        extra += 1
    return n_bits - punctured + extra


def query_count_qpe(n: int) -> int:
    return 2**n - 1


def query_count_qspe(n: int, s: int) -> int:
    """Black-box queries charged to shifted estimation: (2^n - 1) + 2^s * n."""
    if n < 1 or s < 0:
        raise SimulationError("need n >= 1 and s >= 0")
    return (2**n - 1) + 2**s * n


def estimation_gates(
    n: int,
    provider: ControlledUProvider,
    f_qubits: Mapping[int, int],
    g_targets: list[int],
    shift: int = 0,
    known: Mapping[int, int] | None = None,
) -> list[Gate]:
    """PE gates for positions 1..n; ``f_qubits`` maps each unknown position to its qubit."""
    known = dict(known or {})
    active = [k for k in range(1, n + 1) if k not in known]
    gates = [Gate("H", (f_qubits[k],)) for k in active]
    for k in active:
        gates += provider.fragment(2 ** (shift + k - 1), f_qubits[k], g_targets, fragment_id=k)
    gates += iqft_prime_gates(f_qubits, n, known)
    return gates


def build_phase_estimation(
    n: int,
    provider: ControlledUProvider,
    g_qubits: int | None = None,
    shift: int = 0,
    puncture: PunctureSpec | None = None,
) -> Circuit:
    if n < 1:
        raise SimulationError("n must be >= 1")
    if shift < 0:
        raise SimulationError("shift must be >= 0")
    g_qubits = provider.g_qubits if g_qubits is None else g_qubits
    if g_qubits != provider.g_qubits:
        raise SimulationError(f"provider acts on {provider.g_qubits} G qubits, circuit has {g_qubits}")
    puncture = puncture or PunctureSpec()
    puncture.validate(n)
    known = puncture.known_bits
    active = [k for k in range(1, n + 1) if k not in known]
    f_qubits = {k: i for i, k in enumerate(active, start=1)}
    g_targets = list(range(len(active) + 1, len(active) + g_qubits + 1))
    gates = estimation_gates(n, provider, f_qubits, g_targets, shift, known)
    registers = (("F", len(active)), ("G", g_qubits))
    return Circuit(registers, gates, positions=tuple(shift + k for k in active))


def build_qpe(n: int, provider: ControlledUProvider, g_qubits: int | None = None) -> Circuit:
    return build_phase_estimation(n, provider, g_qubits)


def build_qspe(n: int, s: int, provider: ControlledUProvider, g_qubits: int | None = None) -> Circuit:
    return build_phase_estimation(n, provider, g_qubits, shift=s)


def build_qppe(n: int, puncture: PunctureSpec, provider: ControlledUProvider, g_qubits: int | None = None) -> Circuit:
    return build_phase_estimation(n, provider, g_qubits, puncture=puncture)


def initial_state(circuit: Circuit, g_state: StateVector | int | None = None) -> StateVector:
    """|0...0>_F tensor the given ``G`` state (basis index or vector)."""
    g = circuit.size("G")
    if g_state is None:
        g_state = 0
    if isinstance(g_state, (int, np.integer)):
        g_state = new_basis_state(g, int(g_state))
    if g_state.num_qubits != g:
        raise SimulationError(f"G state has {g_state.num_qubits} qubits, register has {g}")
    f = circuit.size("F")
    if f == 0:
        return g_state.copy()
    return tensor(new_basis_state(f, 0), g_state)


def run_estimation(
    circuit: Circuit,
    g_state: StateVector | int | None = None,
    shots: int | None = None,
    seed: int | None = None,
) -> PhaseEstimateResult:
    """Run a phase-estimation circuit; ``shots=None`` gives exact probabilities."""
    final = run(circuit, initial_state(circuit, g_state))
    f = circuit.qubits("F")
    if shots is None:
        hist = probabilities(final, f)
    else:
        if seed is None:
            raise SimulationError("sampling needs a seed")
        hist = sample(final, f, shots, seed)
    positions = list(circuit.positions) or list(range(1, len(f) + 1))
    top = max(hist, key=hist.get)
    return PhaseEstimateResult({p: int(b) for p, b in zip(positions, top)}, hist, positions)


def phase_bits(phase, count: int, start: int = 1) -> str:
    """Binary digits ``start .. start + count - 1`` of ``phase`` (truncated)."""
    frac = Fraction(phase) % 1
    out = []
    for k in range(1, start + count):
        frac *= 2
        bit = int(frac >= 1)
        frac -= bit
        if k >= start:
            out.append(str(bit))
    return "".join(out)


def estimate_from_bits(bits: str, start: int = 1) -> Fraction:
    """Phase value encoded by ``bits`` read as binary digits ``start, start+1, ...``."""
    return sum((Fraction(int(b), 2 ** (start + i)) for i, b in enumerate(bits)), Fraction(0))
