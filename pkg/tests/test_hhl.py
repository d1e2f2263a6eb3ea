import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybrid_hhl.eigeninfo import BinaryMatrix, classify
from hybrid_hhl.hhl import (
    METHODS,
    HhlError,
    LinearSystem,
    additive_rotations,
    audit_resources,
    build_hybrid19,
    build_hybrid25,
    build_method,
    build_original_hhl,
    completion_unitary,
    exact_binary_matrix,
    hybrid19_controls,
    paper_example_system,
    paper_matrix,
    qpe_runner,
    reference_solution,
    resource_table,
    solve,
    theoretical_success_probability,
)
from hybrid_hhl.circuit import Circuit, run, unitary_of
from hybrid_hhl.eigeninfo import collect_binary_matrix
from hybrid_hhl.statevector import ImpossibleOutcome, new_basis_state, probabilities, tvd
from oracle import random_unitary

LAMBDAS = [Fraction(7, 16), Fraction(17, 64), Fraction(53, 64)]
# squares of 1/lambda normalized, by exact rational arithmetic
_W = [1 / l**2 for l in LAMBDAS]
REF = {"00": float(_W[0] / sum(_W)), "01": 0.0, "10": float(_W[1] / sum(_W)), "11": float(_W[2] / sum(_W))}
P_SUCCESS = float(Fraction(1, 25) * Fraction(1, 3) * sum(_W))


@pytest.fixture(scope="module")
def paper():
    return paper_example_system()


@pytest.fixture(scope="module")
def outcomes(paper):
    return {m: solve(build_method(paper, m, 6)) for m in METHODS}


def random_system(seed, n=5, g=2):
    rng = np.random.default_rng(seed)
    d = 2**g
    lam = rng.choice(np.arange(2 ** (n - 2), 2**n), size=d, replace=False) / 2**n
    v = random_unitary(rng, d)
    A = (v * lam) @ v.conj().T
    A = (A + A.conj().T) / 2
    b = rng.normal(size=d) + 1j * rng.normal(size=d)
    return LinearSystem(A, b / np.linalg.norm(b))


def test_reference_paper(paper):
    ref = reference_solution(paper)
    # published values are 4-decimal truncations (0.82436 prints as 0.8243)
    assert np.allclose(ref.amplitudes.real, [0.5005, 0, 0.8243, 0.2644], atol=5e-4)
    assert ref.probabilities == pytest.approx(REF, abs=1e-12)
    assert [round(ref.probabilities[k], 5) for k in ("00", "01", "10", "11")] == [0.25051, 0, 0.67958, 0.06992]


def test_reference_scalar_matrix():
    b = np.array([0.6, 0.8j])
    ref = reference_solution(LinearSystem(np.eye(2) / 2, b))
    assert np.allclose(ref.amplitudes, b)


def test_paper_system_properties(paper):
    w, v = np.linalg.eigh(paper.A)
    assert sorted(w) == pytest.approx([0, 17 / 64, 7 / 16, 53 / 64])
    assert np.linalg.norm(paper.b) == pytest.approx(1)
    assert abs(paper.b[1]) == 0


def test_paper_prep_loads_b(paper):
    c = Circuit((("G", 2),), paper.prep_gates([1, 2]))
    out = run(c, new_basis_state(2)).amplitudes
    assert np.allclose(out, paper.b, atol=1e-12)


@given(st.integers(0, 10_000), st.integers(1, 3))
def test_completion_unitary(seed, g):
    rng = np.random.default_rng(seed)
    b = rng.normal(size=2**g) + 1j * rng.normal(size=2**g)
    b /= np.linalg.norm(b)
    u = completion_unitary(b)
    assert np.allclose(u.conj().T @ u, np.eye(2**g), atol=1e-10)
    assert np.allclose(u[:, 0], b, atol=1e-12)


@pytest.mark.parametrize("kwargs", [
    dict(A=np.eye(3) / 2, b=np.ones(3) / math.sqrt(3)),
    dict(A=np.array([[0.5, 0.1], [0.2, 0.5]]), b=np.array([1, 0])),
    dict(A=np.eye(2) / 2, b=np.array([1, 1])),
    dict(A=np.diag([0.5, 1.5]), b=np.array([0, 1])),
])
def test_system_validation(kwargs):
    with pytest.raises(HhlError):
        LinearSystem(**kwargs)


def test_zero_eigenvalue_off_support_is_accepted():
    LinearSystem(np.diag([0.5, 0.0]), np.array([1, 0]))


@pytest.mark.parametrize("method", METHODS)
def test_paper_distribution(outcomes, method):
    o = outcomes[method]
    assert o.g_distribution == pytest.approx(REF, abs=1e-9)
    assert o.success_probability == pytest.approx(P_SUCCESS, abs=1e-9)
    assert round(o.success_probability, 5) == 0.27808
    assert o.f_residual < 1e-9


def test_paper_widths(outcomes):
    assert outcomes["original"].f_width_used == 6
    assert outcomes["hybrid19"].f_width_used == 6
    assert outcomes["hybrid25"].f_width_used == 3
    r = outcomes["hybrid25"].resources
    assert (r["hadamard"], r["controlled_rk"], r["controlled_u_fragments"], r["cr_control_width"]) == (12, 6, 6, 2)
    assert r["total_qubits"] == 6
    assert outcomes["hybrid19"].resources["total_qubits"] == 9


def test_paper_binary_matrix(paper):
    B = exact_binary_matrix(paper, 6)
    assert B.rows == ("110101", "011100", "010001")
    sampled = collect_binary_matrix(qpe_runner(paper, 6), 256, 3, seed=5)
    assert sampled == B


def test_hybrid19_controls_from_non_constant_columns(paper):
    B = paper_matrix(6)
    assert hybrid19_controls(B) == (1, 3)
    hc = build_hybrid19(paper, B, controls=(3, 4))
    assert hc.cr_controls == (3, 4)
    assert solve(hc).g_distribution == pytest.approx(REF, abs=1e-9)
    with pytest.raises(HhlError):
        build_hybrid19(paper, B, controls=(2, 5))


def test_hybrid25_paper_layout(paper):
    hc = build_hybrid25(paper, paper_matrix(6))
    assert hc.f_positions == (3, 4, 6)
    assert hc.cr_controls == (3, 4)
    # CR' is one plain Ry plus two controlled ones
    widths = sorted(len(g.controls) for g in hc.cr.gates)
    assert widths == [0, 1, 2]


def test_hybrid25_other_minimal_sets(paper):
    B = paper_matrix(6)
    for D in [(1, 3), (4, 6)]:
        hc = build_hybrid25(paper, B, D)
        assert solve(hc).g_distribution == pytest.approx(REF, abs=1e-9)
    assert build_hybrid25(paper, B, (4, 6)).f_width == 2


def test_hybrid25_rejects_wrong_classification(paper):
    B = paper_matrix(6)
    wrong = classify(B, (1, 3))
    with pytest.raises(HhlError):
        build_hybrid25(paper, B, (3, 4), classification=wrong)


def test_degenerate_single_eigenvalue():
    system = LinearSystem(np.diag([0.375, 0.5]), np.array([1, 0]))
    B = exact_binary_matrix(system, 4)
    assert B.rows == ("0110",)
    hc = build_hybrid25(system, B)
    assert hc.f_width == 0
    assert [len(g.controls) for g in hc.cr.gates] == [0]
    o = solve(hc)
    assert o.g_distribution == pytest.approx({"0": 1.0, "1": 0.0})
    assert o.success_probability == pytest.approx((0.2 / 0.375) ** 2)


@settings(max_examples=15)
@given(st.integers(0, 100_000), st.sampled_from(METHODS))
def test_method_equivalence_random_systems(seed, method):
    system = random_system(seed)
    o = solve(build_method(system, method, 5))
    ref = reference_solution(system).probabilities
    assert o.g_distribution == pytest.approx(ref, abs=1e-9)
    assert o.success_probability == pytest.approx(theoretical_success_probability(system, 0.2), abs=1e-9)
    assert o.f_residual < 1e-9


@pytest.mark.parametrize("c", [0.05, 0.1, 0.2, 0.25])
def test_distribution_independent_of_c(paper, c):
    o = solve(build_method(paper, "hybrid25", 6, c=c))
    assert o.g_distribution == pytest.approx(REF, abs=1e-9)
    assert o.success_probability == pytest.approx(c**2 / 3 * float(sum(_W)), abs=1e-9)


def test_c_above_smallest_estimate_is_rejected(paper):
    with pytest.raises(HhlError):
        build_hybrid25(paper, paper_matrix(6), c=0.3)
    with pytest.raises(HhlError):
        build_original_hhl(paper, 6, c=1.5)


def test_original_skips_small_estimates(paper):
    # with c = 1/2 only F values >= 32/64 rotate; lambda_3 = 53/64 survives alone
    o = solve(build_original_hhl(paper, 6, c=0.5))
    assert o.g_distribution == pytest.approx({"00": 0, "01": 0, "10": 0, "11": 1}, abs=1e-9)


def test_original_all_skipped_fails():
    system = LinearSystem(np.diag([0.25, 0.5]), np.array([1, 0]))
    with pytest.raises(ImpossibleOutcome):
        solve(build_original_hhl(system, 3, c=0.3))


def test_shot_mode(paper):
    hc = build_method(paper, "hybrid25", 6)
    a = solve(hc, shots=4096, seed=7)
    assert a.g_distribution == solve(hc, shots=4096, seed=7).g_distribution
    assert tvd(a.g_distribution, REF) < 0.03
    assert abs(a.success_probability - P_SUCCESS) < 0.03
    with pytest.raises(HhlError):
        solve(hc, shots=10)


def test_resource_dominance(outcomes):
    t = {m: o.resources["total_gates"] for m, o in outcomes.items()}
    assert t["hybrid25"] < t["hybrid19"] < t["original"]


@pytest.mark.parametrize("n", range(6, 11))
def test_resource_audit(n):
    a = audit_resources(n)
    assert a["match"], a
    assert a["measured"]["original"]["controlled_rk"] == n * n - n


def test_resource_table_values():
    t = resource_table(6, 1)
    assert t["original"]["controlled_rk"] == 30
    assert t["hybrid25"] == {"f_qubits": 3, "hadamard": 12, "controlled_u_fragments": 6,
                             "controlled_u": 6, "controlled_rk": 6, "cr_control_width": 2}
    assert resource_table(9, 4)["hybrid25"] == resource_table(6, 4)["hybrid25"]
    with pytest.raises(HhlError):
        resource_table(5, 1)


@given(st.integers(1, 4), st.data())
def test_additive_rotations_hit_every_listed_pattern(w, data):
    patterns = data.draw(st.lists(st.tuples(*[st.integers(0, 1)] * w), min_size=1, max_size=2**w, unique=True))
    angles = {p: data.draw(st.floats(-3, 3, allow_nan=False)) for p in patterns}
    gates = additive_rotations(1, list(range(2, 2 + w)), angles)
    assert len(gates) <= len(angles)
    u = unitary_of(Circuit((("E", 1), ("F", w)), gates))
    for p, theta in angles.items():
        idx = sum(bit << (1 + i) for i, bit in enumerate(p))
        col = u[:, idx]
        assert col[idx | 1] == pytest.approx(math.sin(theta / 2), abs=1e-9)
        assert col[idx] == pytest.approx(math.cos(theta / 2), abs=1e-9)


def test_outcome_json(outcomes):
    doc = outcomes["hybrid25"].to_json()
    assert set(doc) >= {"method", "n", "c", "success_probability", "g_distribution", "resources", "f_width_used"}
    assert sum(doc["g_distribution"].values()) == pytest.approx(1)
