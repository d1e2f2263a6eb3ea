"""Independent dense-matrix oracles; none of this touches the simulator internals."""
import cmath
import math

import numpy as np


def bit(index, qubit):
    return (index >> (qubit - 1)) & 1


def embed(u, controls, targets, n):
    """2^n x 2^n matrix of ``u`` on ``targets`` (targets[0] = low bit) when all controls are 1."""
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        if not all(bit(col, c) for c in controls):
            out[col, col] = 1
            continue
        sub = sum(bit(col, t) << i for i, t in enumerate(targets))
        base = col
        for t in targets:
            base &= ~(1 << (t - 1))
        for row_sub in range(2 ** len(targets)):
            row = base
            for i, t in enumerate(targets):
                if (row_sub >> i) & 1:
                    row |= 1 << (t - 1)
            out[row, col] += u[row_sub, sub]
    return out


def random_unitary(rng, d):
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def qpe_distribution(phase, n):
    """Textbook n-bit QPE outcome probabilities, keyed by the n-bit estimate j (MSB first)."""
    N = 2**n
    out = {}
    for j in range(N):
        delta = phase - j / N
        amp = sum(cmath.exp(2j * math.pi * k * delta) for k in range(N)) / N
        out[format(j, f"0{n}b")] = abs(amp) ** 2
    return out


def dft(n):
    N = 2**n
    return np.array([[cmath.exp(2j * math.pi * j * k / N) for k in range(N)] for j in range(N)]) / math.sqrt(N)


def bit_reversal_matrix(n):
    N = 2**n
    P = np.zeros((N, N))
    for j in range(N):
        P[int(format(j, f"0{n}b")[::-1], 2), j] = 1
    return P


def close_dist(p, q, atol):
    keys = set(p) | set(q)
    return all(abs(p.get(k, 0.0) - q.get(k, 0.0)) <= atol for k in keys)
