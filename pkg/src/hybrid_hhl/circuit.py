"""Gate-level circuit IR over named registers.

A circuit owns an ordered register layout (for HHL circuits: ``E``, ``F``,
``G``). Registers occupy contiguous global qubit indices in declaration
order, starting at qubit 1. Gates address global indices; the text format
uses register-local names such as ``F3``.

Gates that belong to a controlled-U^p fragment carry a ``query`` tag
``(fragment_id, p)`` so resource counting can report both the number of
fragments and the weighted number of black-box queries.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .statevector import (
    SimulationError,
    StateVector,
    apply_inplace,
    as_batch,
    check_unitary,
)

KINDS = ("H", "X", "SWAP", "RK", "RKDAG", "RY", "PHASE", "OPAQUE")

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


class CircuitError(SimulationError):
    pass


def rk_matrix(k: int) -> np.ndarray:
    """R_k = diag(1, exp(2*pi*i / 2^k))."""
    return np.diag([1, np.exp(2j * np.pi / 2**k)])


def ry_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def phase_matrix(turns: float) -> np.ndarray:
    """P(theta) = diag(1, exp(2*pi*i*theta)); theta is a fraction of a full turn."""
    return np.diag([1, np.exp(2j * np.pi * turns)])


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple[int, ...]
    controls: tuple[int, ...] = ()
    param: float | int | None = None
    label: str = ""
    matrix: tuple | None = None
    query: tuple[int, int] | None = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))
        object.__setattr__(self, "controls", tuple(sorted(int(q) for q in self.controls)))
        if self.kind not in KINDS:
            raise CircuitError(f"unknown gate kind {self.kind!r}")
        if set(self.controls) & set(self.targets):
            raise CircuitError(f"{self.kind}: controls and targets overlap")
        if len(set(self.targets)) != len(self.targets) or len(set(self.controls)) != len(self.controls):
            raise CircuitError(f"{self.kind}: repeated qubit")
        arity = {"SWAP": 2}.get(self.kind, 1)
        if self.kind == "OPAQUE":
            if self.matrix is None:
                raise CircuitError("opaque gate needs a matrix")
            m = self.unitary()
            check_unitary(m)
            if m.shape[0] != 2 ** len(self.targets):
                raise CircuitError("opaque matrix size does not match its targets")
        elif len(self.targets) != arity:
            raise CircuitError(f"{self.kind} acts on {arity} qubit(s)")
        if self.kind in ("RK", "RKDAG") and (not isinstance(self.param, int) or self.param < 1):
            raise CircuitError("R_k needs an integer k >= 1")
        if self.kind == "PHASE" and not 0 <= float(self.param) < 1:
            raise CircuitError("phase parameter is a turn fraction in [0, 1)")

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.controls + self.targets

    def unitary(self) -> np.ndarray:
        """Matrix acting on ``targets`` (targets[0] is the least-significant bit)."""
        u = self.__dict__.get("_u")
        if u is None:
            u = self._build_unitary()
            object.__setattr__(self, "_u", u)
        return u

    def _build_unitary(self) -> np.ndarray:
        k = self.kind
        if k == "H":
            return _H
        if k == "X":
            return _X
        if k == "SWAP":
            return _SWAP
        if k == "RK":
            return rk_matrix(self.param)
        if k == "RKDAG":
            return rk_matrix(self.param).conj()
        if k == "RY":
            return ry_matrix(self.param)
        if k == "PHASE":
            return phase_matrix(self.param)
        return np.array(self.matrix, dtype=complex)

    def inverse(self) -> "Gate":
        k = self.kind
        if k in ("H", "X", "SWAP"):
            return self
        if k == "RK":
            return replace(self, kind="RKDAG")
        if k == "RKDAG":
            return replace(self, kind="RK")
        if k == "RY":
            return replace(self, param=-self.param)
        if k == "PHASE":
            turns = (-self.param) % 1.0
            # a tiny positive angle wraps to exactly 1.0 in floating point
            return replace(self, param=0.0 if turns >= 1.0 else turns)
        adj = self.unitary().conj().T
        label = self.label[:-1] if self.label.endswith("†") else self.label + "†"
        return replace(self, label=label, matrix=_freeze(adj))


def _freeze(m: np.ndarray) -> tuple:
    return tuple(tuple(complex(v) for v in row) for row in np.asarray(m))


def opaque(label: str, matrix: np.ndarray, targets: Sequence[int], controls: Iterable[int] = (), query=None) -> Gate:
    return Gate("OPAQUE", tuple(targets), tuple(controls), label=label, matrix=_freeze(matrix), query=query)


@dataclass(frozen=True)
class Circuit:
    """Register layout plus an ordered gate list.

    ``positions`` optionally records which phase-bit position each ``F`` qubit
    estimates (``F1`` holds ``positions[0]``); phase-estimation builders fill
    it so punctured or shifted registers stay interpretable.
    """

    registers: tuple[tuple[str, int], ...]
    gates: tuple[Gate, ...] = ()
    positions: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "registers", tuple((str(r), int(s)) for r, s in self.registers))
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "positions", tuple(int(p) for p in self.positions))
        names = [r for r, _ in self.registers]
        if len(set(names)) != len(names):
            raise CircuitError("duplicate register name")
        for g in self.gates:
            self._check(g)

    def _check(self, gate: Gate) -> None:
        for q in gate.qubits:
            if not 1 <= q <= self.num_qubits:
                raise CircuitError(f"{gate.kind} touches qubit {q} outside the layout (1..{self.num_qubits})")

    @cached_property
    def offsets(self) -> dict[str, int]:
        out, base = {}, 0
        for name, size in self.registers:
            out[name] = base
            base += size
        return out

    @property
    def num_qubits(self) -> int:
        return sum(s for _, s in self.registers)

    def size(self, register: str) -> int:
        return dict(self.registers)[register]

    def qubit(self, register: str, index: int) -> int:
        """Global qubit number of ``register[index]`` (1-based)."""
        if not 1 <= index <= self.size(register):
            raise CircuitError(f"{register}{index} is not in the layout")
        return self.offsets[register] + index

    def qubits(self, register: str) -> list[int]:
        return [self.offsets[register] + i for i in range(1, self.size(register) + 1)]

    def name_of(self, q: int) -> str:
        for name, size in self.registers:
            off = self.offsets[name]
            if off < q <= off + size:
                return f"{name}{q - off}"
        raise CircuitError(f"qubit {q} outside layout")

    def __len__(self) -> int:
        return len(self.gates)

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.registers != self.registers:
            raise CircuitError("cannot compose circuits with different layouts")
        return Circuit(self.registers, self.gates + other.gates, self.positions or other.positions)


def append(circuit: Circuit, gate: Gate) -> Circuit:
    circuit._check(gate)
    return Circuit(circuit.registers, circuit.gates + (gate,), circuit.positions)


def invert(circuit: Circuit) -> Circuit:
    return Circuit(circuit.registers, tuple(g.inverse() for g in reversed(circuit.gates)), circuit.positions)


def run_batch(circuit: Circuit, psi: np.ndarray) -> np.ndarray:
    """Apply every gate in place to a ``(batch, 2, ..., 2)`` tensor and return it."""
    n = circuit.num_qubits
    for g in circuit.gates:
        apply_inplace(psi, n, g.unitary(), g.controls, g.targets)
    return psi


def run(circuit: Circuit, state: StateVector) -> StateVector:
    if state.num_qubits != circuit.num_qubits:
        raise CircuitError(f"state has {state.num_qubits} qubits, circuit needs {circuit.num_qubits}")
    psi = as_batch(state.amplitudes.copy(), state.num_qubits)
    run_batch(circuit, psi)
    return StateVector(state.num_qubits, psi.reshape(-1))


def unitary_of(circuit: Circuit) -> np.ndarray:
    """Full matrix of the circuit, built column by column (small circuits only)."""
    n = circuit.num_qubits
    psi = as_batch(np.eye(2**n, dtype=complex), n)
    run_batch(circuit, psi)
    return psi.reshape(2**n, 2**n).T


# -- resource counting ------------------------------------------------------


@dataclass(frozen=True)
class GateCountReport:
    hadamard: int = 0
    controlled_rk: int = 0
    controlled_u: int = 0
    ry: int = 0
    other: int = 0
    controlled_u_fragments: int = 0
    controlled_u_queries: int = 0
    qubits_used: dict = field(default_factory=dict)

    @property
    def total(self) -> int:
        return self.hadamard + self.controlled_rk + self.controlled_u + self.ry + self.other

    def as_dict(self) -> dict:
        return {
            "hadamard": self.hadamard,
            "controlled_rk": self.controlled_rk,
            "controlled_u": self.controlled_u,
            "ry": self.ry,
            "other": self.other,
            "total": self.total,
            "controlled_u_fragments": self.controlled_u_fragments,
            "controlled_u_queries": self.controlled_u_queries,
            "qubits_used": dict(self.qubits_used),
        }


def count_gates(circuit: Circuit) -> GateCountReport:
    """Partition the gate list into report categories.

    Gates inside a controlled-U fragment count as ``controlled_u`` whatever
    their kind. A fragment is a maximal run of consecutive gates with the same
    query tag; each run adds one fragment and ``p`` weighted queries.
    """
    c = dict(hadamard=0, controlled_rk=0, controlled_u=0, ry=0, other=0)
    fragments = queries = 0
    prev = None
    touched: set[int] = set()
    for g in circuit.gates:
        touched.update(g.qubits)
        if g.query is not None:
            c["controlled_u"] += 1
            if g.query != prev:
                fragments += 1
                queries += g.query[1]
        elif g.kind == "H" and not g.controls:
            c["hadamard"] += 1
        elif g.kind in ("RK", "RKDAG") and g.controls:
            c["controlled_rk"] += 1
        elif g.kind == "RY":
            c["ry"] += 1
        else:
            c["other"] += 1
        prev = g.query
    used = {}
    for name, size in circuit.registers:
        off = circuit.offsets[name]
        used[name] = sum(1 for q in touched if off < q <= off + size)
    return GateCountReport(**c, controlled_u_fragments=fragments, controlled_u_queries=queries, qubits_used=used)


# -- text serialization -----------------------------------------------------
#
#   REGISTER <name> <size>            one line per register, in layout order
#   POSITIONS <p1> <p2> ...           optional; phase-bit position of F1, F2, ...
#   <KIND> [params] [c1,c2] [t1,t2] [@<fragment>^<power>]
#
# params: RK/RKDAG -> k; RY -> radians; PHASE -> turns; OPAQUE -> label and a
# compact JSON matrix of [re, im] pairs. Floats use repr() so they round-trip.


def _fmt_qubits(circuit: Circuit, qs: Sequence[int]) -> str:
    return "[" + ",".join(circuit.name_of(q) for q in qs) + "]"


def export_text(circuit: Circuit) -> str:
    lines = [f"REGISTER {name} {size}" for name, size in circuit.registers]
    if circuit.positions:
        lines.append("POSITIONS " + " ".join(map(str, circuit.positions)))
    for g in circuit.gates:
        parts = [g.kind]
        if g.kind in ("RK", "RKDAG"):
            parts.append(str(g.param))
        elif g.kind in ("RY", "PHASE"):
            parts.append(repr(float(g.param)))
        elif g.kind == "OPAQUE":
            parts.append(g.label.replace(" ", "_") or "U")
            parts.append(json.dumps([[[v.real, v.imag] for v in row] for row in g.matrix], separators=(",", ":")))
        parts.append(_fmt_qubits(circuit, g.controls))
        parts.append(_fmt_qubits(circuit, g.targets))
        if g.query is not None:
            parts.append(f"@{g.query[0]}^{g.query[1]}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def _parse_qubits(token: str, offsets: dict[str, int]) -> tuple[int, ...]:
    if not (token.startswith("[") and token.endswith("]")):
        raise CircuitError(f"bad qubit list {token!r}")
    body = token[1:-1]
    out = []
    for name in filter(None, body.split(",")):
        reg = name.rstrip("0123456789")
        if reg not in offsets or reg == name:
            raise CircuitError(f"unknown qubit {name!r}")
        out.append(offsets[reg] + int(name[len(reg):]))
    return tuple(out)


def parse_text(text: str) -> Circuit:
    registers = []
    positions: tuple[int, ...] = ()
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        if tok[0] == "REGISTER":
            registers.append((tok[1], int(tok[2])))
        elif tok[0] == "POSITIONS":
            positions = tuple(int(t) for t in tok[1:])
        else:
            rows.append(tok)
    layout = Circuit(tuple(registers))
    offsets = layout.offsets
    gates = []
    for tok in rows:
        kind, rest = tok[0], tok[1:]
        query = None
        if rest and rest[-1].startswith("@"):
            fid, power = rest.pop()[1:].split("^")
            query = (int(fid), int(power))
        kw: dict = {}
        if kind in ("RK", "RKDAG"):
            kw["param"] = int(rest.pop(0))
        elif kind in ("RY", "PHASE"):
            kw["param"] = float(rest.pop(0))
        elif kind == "OPAQUE":
            kw["label"] = rest.pop(0)
            kw["matrix"] = tuple(tuple(complex(re, im) for re, im in row) for row in json.loads(rest.pop(0)))
        if len(rest) != 2:
            raise CircuitError(f"malformed gate line: {' '.join(tok)}")
        controls = _parse_qubits(rest[0], offsets)
        targets = _parse_qubits(rest[1], offsets)
        gates.append(Gate(kind, targets, controls, query=query, **kw))
    return Circuit(layout.registers, tuple(gates), positions)
