from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hybrid_hhl.circuit import count_gates
from hybrid_hhl.phase_estimation import (
    PunctureSpec,
    build_qpe,
    build_qppe,
    build_qspe,
    estimate_from_bits,
    phase_bits,
    query_count_qpe,
    query_count_qspe,
    required_register_size,
    run_estimation,
)
from hybrid_hhl.providers import phase_provider
from hybrid_hhl.statevector import SimulationError
from oracle import close_dist, qpe_distribution


def dist(circuit):
    return run_estimation(circuit, g_state=1).shots_histogram


def marginal(d, keep):
    out = {}
    for k, v in d.items():
        key = "".join(k[i] for i in keep)
        out[key] = out.get(key, 0) + v
    return out


@pytest.mark.parametrize("phase,bits", [
    (Fraction(7, 16), "011100"),
    (Fraction(17, 64), "010001"),
    (Fraction(53, 64), "110101"),
])
def test_qpe_paper_eigenvalues(phase, bits):
    d = dist(build_qpe(6, phase_provider(phase)))
    assert d == pytest.approx({bits: 1.0}, abs=1e-9)


@given(st.floats(0, 1, exclude_max=True, allow_nan=False), st.integers(1, 6))
def test_qpe_matches_textbook_distribution(phase, n):
    d = dist(build_qpe(n, phase_provider(phase)))
    assert close_dist(d, qpe_distribution(phase, n), atol=1e-9)


def test_qpe_one_third_beats_bound():
    d = dist(build_qpe(3, phase_provider(Fraction(1, 3))))
    assert max(d, key=d.get) == "011"
    assert d["011"] > 4 / np.pi**2


def test_qspe_examples():
    c = build_qspe(2, 2, phase_provider(Fraction(7, 16)))
    assert c.positions == (3, 4)
    assert dist(c) == pytest.approx({"11": 1.0}, abs=1e-9)
    res = run_estimation(build_qspe(4, 2, phase_provider(Fraction(53, 64))), g_state=1)
    assert res.top_outcome == "0101"
    assert res.bits == {3: 0, 4: 1, 5: 0, 6: 1}


def test_qppe_examples():
    c = build_qppe(6, PunctureSpec({5: 0}), phase_provider(Fraction(7, 16)))
    assert c.positions == (1, 2, 3, 4, 6)
    assert dist(c) == pytest.approx({"01110": 1.0}, abs=1e-9)
    c = build_qppe(4, PunctureSpec.parse("2=0,4=1"), phase_provider(Fraction(11, 16)))
    assert c.positions == (1, 3)
    assert dist(c) == pytest.approx({"11": 1.0}, abs=1e-9)


@pytest.mark.parametrize("j", range(16))
def test_qspe_equals_qpe_marginal(j):
    phase = Fraction(j, 16)
    full = dist(build_qpe(4, phase_provider(phase)))
    assert close_dist(dist(build_qspe(2, 2, phase_provider(phase))), marginal(full, [2, 3]), 1e-10)


@pytest.mark.parametrize("j", range(16))
def test_qppe_equals_conditioned_qpe(j):
    phase = Fraction(j, 16)
    bits = phase_bits(phase, 4)
    known = {2: int(bits[1]), 4: int(bits[3])}
    full = dist(build_qpe(4, phase_provider(phase)))
    cond = {k: v for k, v in full.items() if k[1] == bits[1] and k[3] == bits[3]}
    total = sum(cond.values())
    cond = marginal({k: v / total for k, v in cond.items()}, [0, 2])
    assert close_dist(dist(build_qppe(4, PunctureSpec(known), phase_provider(phase))), cond, 1e-10)


@pytest.mark.parametrize("n", range(1, 9))
def test_reductions_are_gate_identical(n):
    p = phase_provider(Fraction(5, 7))
    assert build_qspe(n, 0, p).gates == build_qpe(n, p).gates
    assert build_qppe(n, PunctureSpec(), p).gates == build_qpe(n, p).gates


@pytest.mark.parametrize("n", range(1, 13))
def test_query_count_qpe(n):
    circuit = build_qpe(n, phase_provider(0.3))
    assert count_gates(circuit).controlled_u_queries == query_count_qpe(n) == 2**n - 1
    assert count_gates(circuit).controlled_u_fragments == n


def test_query_count_qspe_formula():
    assert query_count_qspe(6, 0) == 63 + 6
    assert query_count_qspe(4, 2) == 15 + 16
    with pytest.raises(SimulationError):
        query_count_qspe(0, 1)


def test_qspe_weighted_queries_scale_with_shift():
    # the circuit itself applies U^(2^(s+k-1)); its weighted count is 2^s (2^n - 1)
    for n, s in [(2, 2), (4, 3), (3, 0)]:
        r = count_gates(build_qspe(n, s, phase_provider(0.3)))
        assert r.controlled_u_queries == 2**s * (2**n - 1)


@pytest.mark.parametrize("n_bits,eps,want", [(4, 0.25, 6), (3, 0.5, 5), (3, 0.1, 6), (1, 0.9, 3)])
def test_required_register_size(n_bits, eps, want):
    assert required_register_size(n_bits, eps) == want


def test_required_register_size_punctured():
    assert required_register_size(6, 0.25, punctured=2) == required_register_size(6, 0.25) - 2
    with pytest.raises(SimulationError):
        required_register_size(3, 0.0)
    with pytest.raises(SimulationError):
        required_register_size(3, 0.1, punctured=3)


def test_puncture_spec_validation():
    with pytest.raises(SimulationError):
        PunctureSpec({1: 2})
    with pytest.raises(SimulationError):
        PunctureSpec({5: 0}).validate(4)
    with pytest.raises(SimulationError):
        PunctureSpec({1: 0, 2: 1}).validate(2)
    with pytest.raises(SimulationError):
        PunctureSpec.parse("2")


def test_punctured_iqft_uses_unconditional_rotations():
    c = build_qppe(4, PunctureSpec({2: 0, 4: 1}), phase_provider(0.5))
    r = count_gates(c)
    # active pair (1,3) keeps one controlled R; known bit 1 at position 4 adds two plain R^dagger
    assert r.controlled_rk == 1
    assert sum(g.kind == "RKDAG" and not g.controls for g in c.gates) == 2


def test_shot_mode_seeded():
    c = build_qpe(3, phase_provider(Fraction(1, 3)))
    a = run_estimation(c, 1, shots=500, seed=3).shots_histogram
    assert a == run_estimation(c, 1, shots=500, seed=3).shots_histogram
    with pytest.raises(SimulationError):
        run_estimation(c, 1, shots=10)


def test_bit_helpers():
    assert phase_bits(Fraction(53, 64), 6) == "110101"
    assert phase_bits(Fraction(53, 64), 4, start=3) == "0101"
    assert estimate_from_bits("011100") == Fraction(7, 16)
    assert estimate_from_bits("11", start=3) == Fraction(3, 16)


def test_qppe_wrong_prior_runs_without_detection():
    # 11/16 = 0.1011; asserting bit 4 is 0 corrupts the estimate of the kept bits
    c = build_qppe(4, PunctureSpec({4: 0}), phase_provider(Fraction(11, 16)))
    d = dist(c)
    assert sum(d.values()) == pytest.approx(1.0, abs=1e-12)
    assert d.get("101", 0.0) < 1.0 - 1e-6
