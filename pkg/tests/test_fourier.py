import numpy as np
import pytest
from hypothesis import given, strategies as st

from hybrid_hhl.circuit import Circuit, count_gates, invert, run, unitary_of
from hybrid_hhl.fourier import (
    bit_reverse,
    build_iqft_prime,
    build_qft,
    iqft_prime_gates,
    verify_bit_reversal,
)
from hybrid_hhl.statevector import new_basis_state
from oracle import bit_reversal_matrix, dft


def _msb_first(n):
    """Permutation taking position-k-is-qubit-k order to the integer j = j_1 ... j_n."""
    return bit_reversal_matrix(n)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_qft_with_swaps_is_dft(n):
    # amplitude index has qubit 1 as LSB; the transform reads qubit 1 as the MSB j_1
    P = _msb_first(n)
    u = unitary_of(build_qft(n, include_swaps=True))
    assert np.allclose(P @ u @ P, dft(n), atol=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_swapless_qft_product_form(n):
    # qubit k ends in (|0> + exp(2 pi i 0.j_k ... j_n)|1>)/sqrt2
    qft = build_qft(n)
    for j in range(2**n):
        bits = [int(b) for b in format(j, f"0{n}b")]  # bits[k-1] = j_k
        idx = sum(b << (k) for k, b in enumerate(bits))  # qubit k holds j_k
        out = run(qft, new_basis_state(n, idx)).amplitudes
        want = np.ones(1, dtype=complex)
        for k in range(1, n + 1):
            phase = sum(bits[l - 1] * 2.0 ** -(l - k + 1) for l in range(k, n + 1))
            qk = np.array([1, np.exp(2j * np.pi * phase)]) / np.sqrt(2)
            want = np.kron(qk, want)
        assert np.allclose(out, want, atol=1e-10)


@pytest.mark.parametrize("n", range(1, 13))
def test_iqft_prime_gate_count(n):
    r = count_gates(build_iqft_prime(n))
    assert r.hadamard + r.controlled_rk == n * (n + 1) // 2
    assert r.hadamard == n
    assert r.total == n * (n + 1) // 2


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_iqft_prime_inverts_swapless_qft(n):
    assert np.allclose(unitary_of(build_qft(n) + build_iqft_prime(n)), np.eye(2**n), atol=1e-10)
    assert invert(build_qft(n)).gates == build_iqft_prime(n).gates


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_bit_reversal(n):
    assert verify_bit_reversal(n)


def test_bit_reverse_values():
    assert bit_reverse(0b0011, 4) == 0b1100
    assert bit_reverse(0b101, 3) == 0b101
    assert bit_reverse(1, 1) == 1


@given(st.integers(2, 6), st.data())
def test_punctured_iqft_matches_conditioned_full(n, data):
    # a punctured IQFT' on a product state with known bits equals the full IQFT'
    # restricted to those bits
    known_pos = data.draw(st.sets(st.integers(1, n), max_size=n - 1))
    known = {p: data.draw(st.integers(0, 1)) for p in known_pos}
    active = [k for k in range(1, n + 1) if k not in known]
    j = data.draw(st.integers(0, 2**n - 1))
    bits = {k: (j >> (n - k)) & 1 for k in range(1, n + 1)}
    for p, b in known.items():
        bits[p] = b
    full_in = sum(bits[k] << (k - 1) for k in range(1, n + 1))
    qft = build_qft(n)
    state = run(qft, new_basis_state(n, full_in))
    full_out = run(build_iqft_prime(n), state)
    assert abs(full_out.amplitudes[full_in]) == pytest.approx(1, abs=1e-10)
    # rebuild the reduced input: product of the active qubits' states
    m = len(active)
    amps = np.ones(1, dtype=complex)
    for k in active:
        phase = sum(bits[l] * 2.0 ** -(l - k + 1) for l in range(k, n + 1))
        amps = np.kron(np.array([1, np.exp(2j * np.pi * phase)]) / np.sqrt(2), amps)
    qmap = {k: i + 1 for i, k in enumerate(active)}
    c = Circuit((("F", m),), iqft_prime_gates(qmap, n, known))
    from hybrid_hhl.statevector import StateVector
    out = run(c, StateVector(m, amps))
    want = sum(bits[k] << (qmap[k] - 1) for k in active)
    assert abs(out.amplitudes[want]) == pytest.approx(1, abs=1e-10)
