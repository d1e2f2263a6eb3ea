"""HHL circuits: the original construction and the two hybrid variants.

Layout is ``E`` (rotation ancilla, qubit 1), then ``F`` (phase register),
then ``G`` (solution register). ``G`` outcomes are written most significant
qubit first, so the label ``"10"`` is basis index 2 of ``b``.

Every builder returns an :class:`HhlCircuit` holding its four steps
(state preparation, PE, CR, IPE) separately so resources can be audited per
step; :func:`solve` runs the composed circuit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .circuit import Circuit, Gate, count_gates, invert, opaque, run
from .eigeninfo import (
    BinaryMatrix,
    QubitClassification,
    QubitTag,
    classify,
    is_distinguishing,
    min_distinguishing_set_exact,
    row_value,
    step_plan,
)
from .phase_estimation import build_qpe, estimation_gates, run_estimation
from .providers import ControlledUProvider, default_provider
from .statevector import (
    ImpossibleOutcome,
    SimulationError,
    StateVector,
    new_basis_state,
    probabilities,
    sample,
)

METHODS = ("original", "hybrid19", "hybrid25")
DEFAULT_C = 0.2
MIN_SUCCESS = 1e-12
SUPPORT_ATOL = 1e-12


class HhlError(SimulationError):
    pass


PrepBuilder = Callable[[Sequence[int]], list]


@dataclass
class LinearSystem:
    """Hermitian ``A`` with spectrum in (0, 1) on the support of unit vector ``b``.

    Eigenvalues whose eigenvectors ``b`` does not touch are unconstrained, so
    a zero eigenvalue on an unused component is accepted.

    ``prep`` optionally builds the gates that load ``b`` into ``G`` (given the
    global ``G`` qubits, least significant first); by default an opaque
    unitary with ``b`` as its first column is used. ``distinguishing_hint``
    is a preferred distinguishing column set for the hybrid pipeline.
    """

    A: np.ndarray
    b: np.ndarray
    name: str = "custom"
    prep: PrepBuilder | None = None
    distinguishing_hint: tuple[int, ...] | None = None

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=complex)
        self.b = np.asarray(self.b, dtype=complex).reshape(-1)
        d = self.A.shape[0]
        if self.A.ndim != 2 or self.A.shape != (d, d) or d < 2 or d & (d - 1):
            raise HhlError(f"A must be d x d with d a power of two >= 2, got {self.A.shape}")
        if self.b.shape != (d,):
            raise HhlError(f"b has dimension {self.b.size}, A has {d}")
        if np.linalg.norm(self.A - self.A.conj().T) >= 1e-12:
            raise HhlError("A is not Hermitian")
        if abs(np.linalg.norm(self.b) - 1) > 1e-12:
            raise HhlError("b must be a unit vector")
        lam, _ = self.support_spectrum()
        if np.any(lam <= 0) or np.any(lam >= 1):
            raise HhlError(f"eigenvalues on the support of b must lie in (0, 1), got {lam.tolist()}")

    @property
    def g_qubits(self) -> int:
        return int(self.A.shape[0]).bit_length() - 1

    def support_spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues and overlaps alpha_j = <u_j|b> for the eigenvectors ``b`` touches."""
        w, v = np.linalg.eigh(self.A)
        alpha = v.conj().T @ self.b
        keep = np.abs(alpha) > SUPPORT_ATOL
        return w[keep], alpha[keep]

    def prep_gates(self, g_targets: Sequence[int]) -> list[Gate]:
        if self.prep is not None:
            return list(self.prep(g_targets))
        return [opaque("prep(b)", completion_unitary(self.b), g_targets)]

    @classmethod
    def from_json(cls, doc: dict, name: str = "file") -> "LinearSystem":
        A = _complex_array(doc, "A")
        b = _complex_array(doc, "b")
        if doc.get("normalize", False):
            b = b / np.linalg.norm(b)
        hint = doc.get("distinguishing_hint")
        return cls(A, b, name=name, distinguishing_hint=tuple(hint) if hint else None)


def _complex_array(doc: dict, key: str) -> np.ndarray:
    """Real part under ``key``, optional imaginary part under ``key + '_imag'``."""
    re_ = np.asarray(doc[key], dtype=float)
    im = np.asarray(doc.get(key + "_imag", np.zeros_like(re_)), dtype=float)
    if im.shape != re_.shape:
        raise HhlError(f"{key}_imag has shape {im.shape}, {key} has {re_.shape}")
    return re_ + 1j * im


def completion_unitary(b: np.ndarray) -> np.ndarray:
    """A unitary whose first column is ``b`` (QR completion)."""
    b = np.asarray(b, dtype=complex)
    d = b.size
    # keep the basis vectors least aligned with b so the matrix stays full rank
    order = np.argsort(np.abs(b))
    cols = [b] + [np.eye(d)[:, i] for i in order[: d - 1]]
    q, r = np.linalg.qr(np.column_stack(cols))
    q[:, 0] *= r[0, 0] / abs(r[0, 0])
    return q


def _paper_prep(g_targets: Sequence[int]) -> list[Gate]:
    g1, g2 = g_targets
    theta = 2 * math.asin(math.sqrt(2 / 3))
    return [Gate("RY", (g2,), param=theta), Gate("H", (g1,), (g2,))]


def paper_example_system() -> LinearSystem:
    """diag(7/16, 0, 17/64, 53/64) with b = (1, 0, 1, 1)/sqrt(3).

    The published distinguishing set {3, 4} rides along as the hint.
    """
    A = np.diag([7 / 16, 0.0, 17 / 64, 53 / 64])
    b = np.array([1, 0, 1, 1]) / math.sqrt(3)
    return LinearSystem(A, b, name="paper", prep=_paper_prep, distinguishing_hint=(3, 4))


@dataclass(frozen=True)
class ReferenceSolution:
    amplitudes: np.ndarray
    probabilities: dict[str, float]


def g_label(index: int, g: int) -> str:
    return format(index, f"0{g}b")


def reference_solution(system: LinearSystem) -> ReferenceSolution:
    """Normalized A^-1 b on the support of ``b``, plus outcome probabilities of ``G``."""
    w, v = np.linalg.eigh(system.A)
    alpha = v.conj().T @ system.b
    keep = np.abs(alpha) > SUPPORT_ATOL
    x = v[:, keep] @ (alpha[keep] / w[keep])
    x = x / np.linalg.norm(x)
    g = system.g_qubits
    probs = {g_label(i, g): float(abs(a) ** 2) for i, a in enumerate(x)}
    return ReferenceSolution(x, probs)


def theoretical_success_probability(system: LinearSystem, c: float, estimates=None) -> float:
    """c^2 * sum_j |alpha_j|^2 / lambda_j^2 (``estimates`` replaces the exact eigenvalues)."""
    lam, alpha = system.support_spectrum()
    lam = lam if estimates is None else np.asarray(estimates, dtype=float)
    return float(c**2 * np.sum(np.abs(alpha) ** 2 / lam**2))


# -- controlled rotation ----------------------------------------------------


def rotation_angle(c: float, estimate: float) -> float:
    if estimate <= 0:
        raise HhlError("cannot invert a zero eigenvalue estimate")
    if c > estimate + 1e-15:
        raise HhlError(f"c = {c} exceeds eigenvalue estimate {estimate}")
    return 2 * math.asin(min(1.0, c / estimate))


def _open_controlled_ry(theta: float, target: int, controls: Sequence[int], pattern: Sequence[int]) -> list[Gate]:
    flips = [Gate("X", (q,)) for q, bit in zip(controls, pattern) if bit == 0]
    return flips + [Gate("RY", (target,), tuple(controls), param=theta)] + flips


def additive_rotations(target: int, controls: Sequence[int], angles: dict[tuple[int, ...], float]) -> list[Gate]:
    """Ry on ``target`` with angle ``angles[pattern]`` for each listed control pattern.

    Rotations about one axis add, so the map pattern -> angle is written as a
    sum over subsets of the set bits (Moebius inversion) and each nonzero
    coefficient becomes one Ry controlled on that subset. Unlisted patterns
    take whatever angle makes their own coefficient vanish, so at most
    ``len(angles)`` rotations are emitted.
    """
    w = len(controls)
    coeff: dict[int, float] = {}
    for mask in sorted(range(2**w), key=lambda m: (bin(m).count("1"), m)):
        pattern = tuple((mask >> (w - 1 - i)) & 1 for i in range(w))
        below = sum(a for sub, a in coeff.items() if sub & mask == sub and sub != mask)
        if pattern in angles:
            coeff[mask] = angles[pattern] - below
        else:
            coeff[mask] = 0.0
    gates = []
    for mask, a in sorted(coeff.items(), key=lambda kv: (bin(kv[0]).count("1"), kv[0])):
        if abs(a) < 1e-15:
            continue
        ctrl = tuple(controls[i] for i in range(w) if (mask >> (w - 1 - i)) & 1)
        gates.append(Gate("RY", (target,), ctrl, param=a))
    return gates


# -- circuits ---------------------------------------------------------------


@dataclass(frozen=True)
class HhlCircuit:
    method: str
    n: int
    c: float
    prep: Circuit
    pe: Circuit
    cr: Circuit
    ipe: Circuit
    f_positions: tuple[int, ...]
    cr_controls: tuple[int, ...]
    rows: tuple[str, ...] = ()
    provider_cost: int = 0

    @property
    def registers(self):
        return self.pe.registers

    @property
    def circuit(self) -> Circuit:
        full = self.prep + self.pe + self.cr + self.ipe
        return Circuit(full.registers, full.gates, self.f_positions)

    @property
    def f_width(self) -> int:
        return self.pe.size("F")

    @property
    def cr_control_width(self) -> int:
        """Distinct F qubits the rotation step conditions on."""
        f = set(self.cr.qubits("F"))
        return len({q for g in self.cr.gates if g.kind == "RY" for q in g.controls if q in f})

    def resources(self) -> dict:
        """Table III quantities for PE + IPE, plus whole-circuit totals."""
        steps = count_gates(self.pe + self.ipe)
        full = count_gates(self.circuit)
        return {
            "f_qubits": self.f_width,
            "hadamard": steps.hadamard,
            "controlled_u_fragments": steps.controlled_u_fragments,
            "controlled_u_gates": steps.controlled_u,
            "controlled_rk": steps.controlled_rk,
            "cr_control_width": self.cr_control_width,
            "cr_controls": list(self.cr_controls),
            "h_A": self.provider_cost,
            "total_gates": full.total,
            "total_qubits": self.circuit.num_qubits,
            "full": full.as_dict(),
        }


def _layout(f_width: int, g: int):
    registers = (("E", 1), ("F", f_width), ("G", g))
    e = 1
    f = list(range(2, 2 + f_width))
    gq = list(range(2 + f_width, 2 + f_width + g))
    return registers, e, f, gq


def _provider(system: LinearSystem, provider: ControlledUProvider | None) -> ControlledUProvider:
    provider = provider or default_provider(system.A)
    if provider.g_qubits != system.g_qubits:
        raise HhlError("provider does not match the system size")
    return provider


def _check_c(c: float) -> None:
    if not 0 < c < 1:
        raise HhlError(f"c must lie in (0, 1), got {c}")


def _assemble(method, n, c, registers, prep, pe, cr, positions, controls, rows, provider) -> HhlCircuit:
    pe_c = Circuit(registers, pe, positions)
    return HhlCircuit(
        method=method,
        n=n,
        c=c,
        prep=Circuit(registers, prep, positions),
        pe=pe_c,
        cr=Circuit(registers, cr, positions),
        ipe=invert(pe_c),
        f_positions=tuple(positions),
        cr_controls=tuple(controls),
        rows=tuple(rows),
        provider_cost=provider.cost,
    )


def build_original_hhl(system: LinearSystem, n: int, c: float = DEFAULT_C,
                       provider: ControlledUProvider | None = None) -> HhlCircuit:
    """Full n-qubit PE, a rotation for every F value with estimate >= c, then IPE."""
    if n < 1:
        raise HhlError("n must be >= 1")
    _check_c(c)
    provider = _provider(system, provider)
    registers, e, f, g = _layout(n, system.g_qubits)
    fq = {k: f[k - 1] for k in range(1, n + 1)}
    pe = estimation_gates(n, provider, fq, g)
    cr = []
    for v in range(1, 2**n):
        est = Fraction(v, 2**n)
        if est < Fraction(c):
            continue
        pattern = [int(b) for b in format(v, f"0{n}b")]
        cr += _open_controlled_ry(rotation_angle(c, float(est)), e, f, pattern)
    return _assemble("original", n, c, registers, system.prep_gates(g), pe, cr,
                     range(1, n + 1), range(1, n + 1), (), provider)


def _rows_angles(rows: Sequence[str], c: float) -> dict[str, float]:
    return {r: rotation_angle(c, row_value(r)) for r in rows}


def hybrid19_controls(B: BinaryMatrix) -> tuple[int, ...]:
    """Lexicographically first minimum distinguishing set among non-constant columns."""
    candidates = [k for k in range(1, B.n + 1) if len(set(B.column(k))) > 1]
    return min_distinguishing_set_exact(B, candidates)


def build_hybrid19(system: LinearSystem, B: BinaryMatrix, c: float = DEFAULT_C,
                   controls: Sequence[int] | None = None,
                   provider: ControlledUProvider | None = None) -> HhlCircuit:
    """Original PE/IPE; the rotation conditions only on a distinguishing subset of F."""
    _check_c(c)
    provider = _provider(system, provider)
    n = B.n
    controls = tuple(sorted(controls)) if controls is not None else hybrid19_controls(B)
    if not is_distinguishing(B, controls):
        raise HhlError(f"controls {list(controls)} do not distinguish the rows of B")
    registers, e, f, g = _layout(n, system.g_qubits)
    fq = {k: f[k - 1] for k in range(1, n + 1)}
    pe = estimation_gates(n, provider, fq, g)
    angles = _rows_angles(B.rows, c)
    pattern_angles = {tuple(int(r[k - 1]) for k in controls): a for r, a in angles.items()}
    cr = additive_rotations(e, [fq[k] for k in controls], pattern_angles)
    return _assemble("hybrid19", n, c, registers, system.prep_gates(g), pe, cr,
                     range(1, n + 1), controls, B.rows, provider)


def choose_distinguishing_set(B: BinaryMatrix, hint: Sequence[int] | None = None) -> tuple[int, ...]:
    """``hint`` if it is a minimum distinguishing set of ``B``, else the exact solver's answer."""
    exact = min_distinguishing_set_exact(B)
    if hint is not None:
        hint = tuple(sorted(hint))
        if len(hint) == len(exact) and all(1 <= k <= B.n for k in hint) and is_distinguishing(B, hint):
            return hint
    return exact


def build_hybrid25(system: LinearSystem, B: BinaryMatrix, D: Sequence[int] | None = None,
                   classification: QubitClassification | None = None, c: float = DEFAULT_C,
                   provider: ControlledUProvider | None = None) -> HhlCircuit:
    """Shifted and punctured PE', rotations on the distinguishing qubits only, IPE' = PE'^-1."""
    _check_c(c)
    provider = _provider(system, provider)
    if D is None:
        D = classification.distinguishing if classification else choose_distinguishing_set(B, system.distinguishing_hint)
    expected = classify(B, D)
    if classification is not None and (classification.tags != expected.tags
                                       or classification.constant_values != expected.constant_values):
        raise HhlError("classification does not match B and D")
    cls = expected
    plan = step_plan(cls)
    s = cls.s
    keep = sorted(plan.pe_keep)
    width = len(keep)
    registers, e, f, g = _layout(width, system.g_qubits)
    pos_qubit = dict(zip(keep, f))
    # positions relative to the shift
    rel_qubits = {p - s: q for p, q in pos_qubit.items()}
    known = {p - s: cls.constant_values[p] for p in cls.positions(QubitTag.CONSTANT_AFTER_LEADING)}
    pe = estimation_gates(B.n - s, provider, rel_qubits, g, shift=s, known=known) if width else []
    controls = sorted(plan.cr_controls)
    angles = _rows_angles(B.rows, c)
    pattern_angles = {tuple(int(r[k - 1]) for k in controls): a for r, a in angles.items()}
    cr = additive_rotations(e, [pos_qubit[k] for k in controls], pattern_angles)
    return _assemble("hybrid25", B.n, c, registers, system.prep_gates(g), pe, cr,
                     keep, controls, B.rows, provider)


# -- binary matrix from the system -----------------------------------------


def qpe_runner(system: LinearSystem, n: int, provider: ControlledUProvider | None = None):
    """``runner(shots, seed)`` sampling n-qubit QPE with ``b`` loaded into G."""
    provider = _provider(system, provider)
    circuit = build_qpe(n, provider)
    g_state = StateVector(system.g_qubits, system.b)

    def runner(shots: int, seed: int) -> dict:
        return run_estimation(circuit, g_state, shots=shots, seed=seed).shots_histogram

    return runner


def exact_binary_matrix(system: LinearSystem, n: int, threshold: float = 1e-9,
                        provider: ControlledUProvider | None = None) -> BinaryMatrix:
    """Rows are the F outcomes of n-qubit QPE on ``b`` with probability above ``threshold``."""
    provider = _provider(system, provider)
    hist = run_estimation(build_qpe(n, provider), StateVector(system.g_qubits, system.b)).shots_histogram
    return BinaryMatrix.from_outcomes(k for k, p in hist.items() if p > threshold)


# -- running ----------------------------------------------------------------


@dataclass
class HhlOutcome:
    method: str
    n: int
    c: float
    success_probability: float
    g_distribution: dict[str, float]
    resources: dict
    f_width_used: int
    mode: str = "exact"
    shots: int | None = None
    seed: int | None = None
    f_residual: float = 0.0

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "n": self.n,
            "c": self.c,
            "success_probability": self.success_probability,
            "g_distribution": dict(self.g_distribution),
            "resources": self.resources,
            "f_width_used": self.f_width_used,
            "mode": self.mode,
            "shots": self.shots,
            "seed": self.seed,
        }


def joint_distribution(hc: HhlCircuit, state: StateVector | None = None) -> dict[str, float]:
    """Exact probabilities over E followed by G (G most significant first)."""
    circuit = hc.circuit
    state = run(circuit, new_basis_state(circuit.num_qubits)) if state is None else state
    return probabilities(state, _readout_qubits(circuit))


def _readout_qubits(circuit: Circuit) -> list[int]:
    return [circuit.qubit("E", 1)] + circuit.qubits("G")[::-1]


def condition_on_e(joint: dict[str, float]) -> tuple[dict[str, float], float]:
    """Split a distribution over E+G into P(G | E=1) and P(E=1)."""
    sel = {k[1:]: v for k, v in joint.items() if k[0] == "1"}
    total = sum(sel.values())
    if total < MIN_SUCCESS:
        raise ImpossibleOutcome(f"E=1 has probability {total:.3g}; nothing to post-select")
    return {k: float(v / total) for k, v in sorted(sel.items())}, float(total)


def solve(hc: HhlCircuit, shots: int | None = None, seed: int | None = None) -> HhlOutcome:
    """Run ``hc`` and condition G on E=1; ``shots=None`` gives exact probabilities."""
    circuit = hc.circuit
    final = run(circuit, new_basis_state(circuit.num_qubits))
    readout = _readout_qubits(circuit)
    if shots is None:
        joint = probabilities(final, readout)
        mode = "exact"
    else:
        if seed is None:
            raise HhlError("shot mode needs a seed")
        joint = sample(final, readout, shots, seed)
        mode = "shots"
    dist, p = condition_on_e(joint)
    g = circuit.size("G")
    for i in range(2**g):
        dist.setdefault(g_label(i, g), 0.0)
    dist = dict(sorted(dist.items()))
    f_residual = 0.0
    if hc.f_width:
        fe = probabilities(final, [circuit.qubit("E", 1)] + circuit.qubits("F"))
        zero = "1" + "0" * hc.f_width
        f_residual = sum(v for k, v in fe.items() if k[0] == "1" and k != zero) / max(p, MIN_SUCCESS)
    return HhlOutcome(hc.method, hc.n, hc.c, p, dist, hc.resources(), hc.f_width, mode, shots, seed, f_residual)


def build_method(system: LinearSystem, method: str, n: int, c: float = DEFAULT_C,
                 B: BinaryMatrix | None = None, D: Sequence[int] | None = None,
                 controls: Sequence[int] | None = None,
                 provider: ControlledUProvider | None = None) -> HhlCircuit:
    """Build any method; hybrids collect ``B`` exactly from n-qubit QPE when not given."""
    if method not in METHODS:
        raise HhlError(f"unknown method {method!r}; choose from {METHODS}")
    if method == "original":
        return build_original_hhl(system, n, c, provider)
    B = B if B is not None else exact_binary_matrix(system, n, provider=provider)
    if method == "hybrid19":
        return build_hybrid19(system, B, c, controls, provider)
    return build_hybrid25(system, B, D, c=c, provider=provider)


# -- Table III --------------------------------------------------------------

RESOURCE_FIELDS = ("f_qubits", "hadamard", "controlled_u_fragments", "controlled_rk", "cr_control_width")


def resource_table(n: int, hA: int) -> dict[str, dict[str, int]]:
    """Closed-form PE+IPE resources of each method for an n-qubit phase register.

    ``controlled_u`` is in elementary gates (fragments times ``hA``).
    """
    if n < 6:
        raise HhlError("the resource formulas assume n >= 6")
    if hA < 1:
        raise HhlError("hA must be >= 1")
    full = {"f_qubits": n, "hadamard": 4 * n, "controlled_u_fragments": 2 * n,
            "controlled_u": 2 * n * hA, "controlled_rk": n * n - n}
    return {
        "original": {**full, "cr_control_width": n},
        "hybrid19": {**full, "cr_control_width": 2},
        "hybrid25": {"f_qubits": 3, "hadamard": 12, "controlled_u_fragments": 6,
                     "controlled_u": 6 * hA, "controlled_rk": 6, "cr_control_width": 2},
    }


def paper_matrix(n: int) -> BinaryMatrix:
    """The paper system's three estimates padded with zeros to width n."""
    return BinaryMatrix(tuple(r.ljust(n, "0") for r in ("110101", "011100", "010001")))


def audit_resources(n: int, system: LinearSystem | None = None) -> dict:
    """Build all three methods for the paper system at width ``n`` and compare with the formulas."""
    system = system or paper_example_system()
    B = paper_matrix(n)
    builds = {
        "original": build_original_hhl(system, n),
        "hybrid19": build_hybrid19(system, B),
        "hybrid25": build_hybrid25(system, B),
    }
    hA = next(iter(builds.values())).provider_cost
    formula = resource_table(n, hA)
    measured = {}
    for name, hc in builds.items():
        r = hc.resources()
        measured[name] = {k: r[k] for k in RESOURCE_FIELDS} | {"controlled_u": r["controlled_u_gates"]}
    return {"n": n, "h_A": hA, "formula": formula, "measured": measured,
            "match": all(measured[m] == formula[m] for m in formula)}
