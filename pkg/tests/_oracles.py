"""Independent brute-force oracles used to pin expected values.

Everything here is deliberately naive (explicit index loops, SVD ranks)
and shares no code with the package under test.
"""

from __future__ import annotations

import numpy as np


def kron_oracle(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product by explicit index arithmetic."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    ra, ca = a.shape
    rb, cb = b.shape
    out = np.zeros((ra * rb, ca * cb), dtype=complex)
    for i in range(ra):
        for j in range(ca):
            for k in range(rb):
                for l in range(cb):
                    out[i * rb + k, j * cb + l] = a[i, j] * b[k, l]
    return out


def partial_trace_oracle(m: np.ndarray, dims: tuple[int, ...], keep: tuple[int, ...]) -> np.ndarray:
    """Partial trace over the factors not in ``keep`` by explicit summation."""
    n = len(dims)
    keep = tuple(sorted(keep))
    kept_dims = [dims[i] for i in keep]
    d_out = int(np.prod(kept_dims))
    out = np.zeros((d_out, d_out), dtype=complex)

    def flat(multi):
        idx = 0
        for i in range(n):
            idx = idx * dims[i] + multi[i]
        return idx

    def flat_kept(multi):
        idx = 0
        for pos, i in enumerate(keep):
            idx = idx * kept_dims[pos] + multi[i]
        return idx

    traced = [i for i in range(n) if i not in keep]
    for row_multi in np.ndindex(*dims):
        for col_multi in np.ndindex(*dims):
            if any(row_multi[i] != col_multi[i] for i in traced):
                continue
            out[flat_kept(row_multi), flat_kept(col_multi)] += m[flat(row_multi), flat(col_multi)]
    return out


def span_rank(vectors: list[np.ndarray], tol: float = 1e-9) -> int:
    stack = np.array([v.reshape(-1) for v in vectors])
    s = np.linalg.svd(stack, compute_uv=False)
    return int(np.sum(s > tol * s[0]))


def in_span(vectors: list[np.ndarray], candidate: np.ndarray, tol: float = 1e-9) -> bool:
    return span_rank(vectors + [candidate], tol) == span_rank(vectors, tol)


def closure_dimension_oracle(generators: list[np.ndarray], tol: float = 1e-9) -> tuple[int, bool]:
    """Dimension and commutativity of the smallest unital *-closed span
    containing the generators, found by blunt span growth with SVD ranks.
    """
    d = generators[0].shape[0]
    ops: list[np.ndarray] = [np.eye(d, dtype=complex)]
    for g in generators:
        for candidate in (np.asarray(g, dtype=complex), np.asarray(g, dtype=complex).conj().T):
            if not in_span(ops, candidate, tol):
                ops.append(candidate)
    while True:
        grew = False
        snapshot = list(ops)
        for a in snapshot:
            for b in snapshot:
                p = a @ b
                if not in_span(ops, p, tol):
                    ops.append(p)
                    grew = True
        if not grew:
            break
        if len(ops) > d * d:
            raise AssertionError("oracle closure exceeded the d^2 bound")
    commutative = all(
        np.max(np.abs(a @ b - b @ a)) <= 1e-9 for a in ops for b in ops
    )
    return span_rank(ops, tol), commutative


def expm_series(h: np.ndarray, t: float, terms: int = 60) -> np.ndarray:
    """exp(-i h t) by straightforward Taylor summation."""
    d = h.shape[0]
    acc = np.eye(d, dtype=complex)
    term = np.eye(d, dtype=complex)
    x = -1j * t * np.asarray(h, dtype=complex)
    for k in range(1, terms):
        term = term @ x / k
        acc = acc + term
    return acc
