"""Finite-dimensional *-algebras of operators on a labeled space.

An :class:`OperatorAlgebra` is the smallest unital, adjoint- and
product-closed linear span containing its generators, represented by an
orthonormal Hilbert-Schmidt basis.  Commutative algebras additionally
carry a joint spectral structure: a minimal family of joint
eigenprojectors on which every algebra element acts as a scalar, which is
what makes such an algebra isomorphic to an algebra of classical
observables (one function value per projector).

Closure algorithm: seed the span with {I} + generators + adjoints,
orthonormalize with Gram-Schmidt under the Hilbert-Schmidt inner product,
then repeatedly adjoin all pairwise products until the dimension
stabilizes.  The dimension is bounded by dim(H)^2; exceeding that bound
signals numerical breakdown, not mathematics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import (
    ALGEBRA_TOL,
    CHARACTER_ATOL,
    InvariantViolation,
    RECONSTRUCTION_ATOL,
    VALUE_MERGE_ATOL,
)
from .linalg import SpaceLayout, degenerate_clusters

__all__ = [
    "OperatorAlgebra",
    "SpectralResolution",
    "contains",
    "generate_algebra",
    "is_commutative",
    "joint_spectral_resolution",
]


class OperatorAlgebra:
    """Unital *-closed operator span with an orthonormal basis.

    Instances are immutable by convention; the joint spectral resolution is
    computed lazily and cached.  Construct through :func:`generate_algebra`.
    """

    def __init__(
        self,
        layout: SpaceLayout,
        generators: tuple[np.ndarray, ...],
        basis: tuple[np.ndarray, ...],
        commutative: bool,
        tol: float,
    ) -> None:
        self.layout = layout
        self.generators = generators
        self.basis = basis
        self.commutative = commutative
        self.tol = tol
        # Orthonormal rows of vectorized basis elements, for fast projections.
        self._basis_vec = np.array([b.reshape(-1) for b in basis])
        self._resolution: SpectralResolution | None = None
        self._characters = None

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def project_coefficients(self, a: np.ndarray) -> np.ndarray:
        """Hilbert-Schmidt components <B_j, a> of ``a`` against the basis."""
        a = np.asarray(a, dtype=complex)
        d = self.layout.dim
        if a.shape != (d, d):
            raise ValueError(f"operator shape {a.shape} does not match algebra dim {d}")
        return self._basis_vec.conj() @ a.reshape(-1)

    def project(self, a: np.ndarray) -> np.ndarray:
        """Orthogonal projection of ``a`` onto the algebra span."""
        coeffs = self.project_coefficients(a)
        return (self._basis_vec.T @ coeffs).reshape(a.shape)

    def membership_residual(self, a: np.ndarray) -> float:
        """Relative distance of ``a`` from the span (0 for members)."""
        a = np.asarray(a, dtype=complex)
        norm = float(np.linalg.norm(a))
        if norm == 0.0:
            return 0.0
        residual = float(np.linalg.norm(a - self.project(a)))
        return residual / norm

    def __repr__(self) -> str:
        kind = "commutative" if self.commutative else "non-commutative"
        return f"OperatorAlgebra(dim={self.dimension}, {kind}, on {self.layout.labels})"


def _orthonormal_append(rows: np.ndarray, op: np.ndarray, tol: float) -> np.ndarray | None:
    """Residual of ``op`` against the orthonormal rows, or None if in span."""
    v = op.reshape(-1)
    norm_in = float(np.linalg.norm(v))
    if norm_in == 0.0:
        return None
    r = v.astype(complex)
    for _ in range(2):  # second pass controls Gram-Schmidt cancellation error
        if rows.shape[0]:
            r = r - rows.T @ (rows.conj() @ r)
    norm_r = float(np.linalg.norm(r))
    if norm_r <= tol * norm_in:
        return None
    return r / norm_r


def generate_algebra(
    generators: list[np.ndarray] | tuple[np.ndarray, ...],
    layout: SpaceLayout,
    tol: float = ALGEBRA_TOL,
) -> OperatorAlgebra:
    """Close the generators into the smallest unital *-algebra span."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    d = layout.dim
    gens = tuple(np.asarray(g, dtype=complex) for g in generators)
    for g in gens:
        if g.shape != (d, d):
            raise ValueError(f"generator shape {g.shape} does not match layout dim {d}")
    max_dim = d * d

    rows = np.zeros((0, d * d), dtype=complex)
    seed = [np.eye(d, dtype=complex), *gens, *[g.conj().T for g in gens]]
    for op in seed:
        r = _orthonormal_append(rows, op, tol)
        if r is not None:
            rows = np.vstack([rows, r])

    passes = 0
    while True:
        ops = [rows[i].reshape(d, d) for i in range(rows.shape[0])]
        grew = False
        for a in ops:
            for b in ops:
                r = _orthonormal_append(rows, a @ b, tol)
                if r is not None:
                    rows = np.vstack([rows, r])
                    grew = True
        if not grew:
            break
        passes += 1
        if rows.shape[0] > max_dim or passes > max_dim:
            raise InvariantViolation(
                f"algebra closure did not stabilize within the dim^2 = {max_dim} bound; "
                "numerical breakdown (tol too small for this data?)"
            )

    basis = tuple(rows[i].reshape(d, d).copy() for i in range(rows.shape[0]))
    commutative = _max_commutator(basis) <= tol
    return OperatorAlgebra(layout, gens, basis, commutative, tol)


def _max_commutator(basis: tuple[np.ndarray, ...]) -> float:
    # Basis elements have unit HS norm, so this is already relative scale.
    worst = 0.0
    for i, a in enumerate(basis):
        for b in basis[i + 1 :]:
            worst = max(worst, float(np.linalg.norm(a @ b - b @ a)))
    return worst


def is_commutative(alg: OperatorAlgebra) -> bool:
    """True iff all basis pairs commute within the algebra tolerance."""
    return alg.commutative


def contains(alg: OperatorAlgebra, a: np.ndarray) -> bool:
    """Membership test: relative span residual at most the algebra tolerance."""
    return alg.membership_residual(a) <= alg.tol


@dataclass(frozen=True, eq=False)
class SpectralResolution:
    """Minimal joint eigenprojectors of a commutative algebra.

    ``generator_values[k, g]`` is the (real) eigenvalue of generator ``g``
    on projector ``k``; ``basis_values[k, j]`` the scalar the j-th basis
    element takes there.  Projectors are ordered by their generator value
    vectors (lexicographic ascending), which is deterministic.
    """

    projectors: tuple[np.ndarray, ...]
    generator_values: np.ndarray
    basis_values: np.ndarray
    ranks: tuple[int, ...]

    def element_values(self, op: np.ndarray) -> np.ndarray:
        """Scalar each projector assigns to an algebra element."""
        return np.array(
            [np.trace(p @ op) / rank for p, rank in zip(self.projectors, self.ranks)]
        )


def joint_spectral_resolution(
    alg: OperatorAlgebra,
    max_trials: int = 12,
    rng: np.random.Generator | None = None,
) -> SpectralResolution:
    """Joint diagonalization of a commutative algebra.

    Diagonalizes a generic Hermitian combination of the basis, merges
    eigenspaces whose per-element value vectors agree within
    ``VALUE_MERGE_ATOL``, and retries with fresh coefficients when an
    accidental eigenvalue collision leaves the projector count different
    from the algebra dimension.  The projector family does not depend on
    the draw (up to its deterministic ordering); the default-draw result
    is cached on the algebra.
    """
    if not alg.commutative:
        raise ValueError("joint spectral resolution requires a commutative algebra")
    cacheable = rng is None
    if cacheable and alg._resolution is not None:
        return alg._resolution

    d = alg.layout.dim
    if rng is None:
        rng = np.random.default_rng(0x5E6A1)  # fixed seed: deterministic resolutions
    last_error = ""
    for _ in range(max_trials):
        h = np.zeros((d, d), dtype=complex)
        for m in alg.basis:
            c_re, c_im = rng.standard_normal(2)
            h += c_re * (m + m.conj().T) / 2.0 + c_im * (m - m.conj().T) / 2.0j
        norm = float(np.linalg.norm(h))
        if norm < 1e-12:
            continue
        h /= norm
        values, vectors = np.linalg.eigh(h)
        fine = degenerate_clusters(values, gap=1e-10)
        projs = [vectors[:, idx] @ vectors[:, idx].conj().T for idx in fine]

        merged = _merge_by_basis_values(alg, projs)
        if merged is None:
            last_error = "projector family inconsistent with the algebra"
            continue
        projs, basis_vals = merged
        if len(projs) != alg.dimension:
            last_error = (
                f"found {len(projs)} joint eigenspaces for an algebra of dimension {alg.dimension}"
            )
            continue

        resolution = _assemble_resolution(alg, projs, basis_vals)
        if resolution is not None:
            if cacheable:
                alg._resolution = resolution
            return resolution
        last_error = "projector consistency check failed"

    raise InvariantViolation(f"joint diagonalization failed after {max_trials} trials: {last_error}")


def _merge_by_basis_values(alg, projs):
    """Merge projectors whose basis value vectors coincide; None on failure."""
    vals = []
    for p in projs:
        rank = float(np.trace(p).real)
        vals.append(np.array([np.trace(p @ m) / rank for m in alg.basis]))
    groups: list[list[int]] = []
    for i in range(len(projs)):
        for group in groups:
            if np.max(np.abs(vals[i] - vals[group[0]])) <= VALUE_MERGE_ATOL:
                group.append(i)
                break
        else:
            groups.append([i])
    out_projs = []
    out_vals = []
    for group in groups:
        p = np.sum([projs[i] for i in group], axis=0)
        rank = float(np.trace(p).real)
        out_projs.append(p)
        out_vals.append(np.array([np.trace(p @ m) / rank for m in alg.basis]))
    return out_projs, out_vals


def _assemble_resolution(alg, projs, basis_vals):
    d = alg.layout.dim
    total = np.sum(projs, axis=0)
    if np.max(np.abs(total - np.eye(d))) > RECONSTRUCTION_ATOL:
        return None
    for k, p in enumerate(projs):
        if np.max(np.abs(p @ p - p)) > RECONSTRUCTION_ATOL:
            return None
        for m, lam in zip(alg.basis, basis_vals[k]):
            if np.max(np.abs(p @ m @ p - lam * p)) > CHARACTER_ATOL:
                return None

    gen_vals = np.zeros((len(projs), len(alg.generators)))
    for k, p in enumerate(projs):
        rank = float(np.trace(p).real)
        for g_idx, g in enumerate(alg.generators):
            lam = complex(np.trace(p @ g) / rank)
            if abs(lam.imag) > CHARACTER_ATOL:
                raise ValueError(
                    f"generator {g_idx} has non-real joint eigenvalue {lam!r}; "
                    "the spectral value table covers Hermitian generators"
                )
            gen_vals[k, g_idx] = lam.real

    order = sorted(
        range(len(projs)),
        key=lambda k: tuple(np.round(gen_vals[k], 9)),
    )
    projectors = tuple(projs[k] for k in order)
    ranks = tuple(int(round(np.trace(p).real)) for p in projectors)
    return SpectralResolution(
        projectors=projectors,
        generator_values=gen_vals[order],
        basis_values=np.array([basis_vals[k] for k in order]),
        ranks=ranks,
    )
