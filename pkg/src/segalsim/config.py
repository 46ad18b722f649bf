"""Global numerical tolerances and error types.

Every validation threshold used across the package lives here so that the
contracts are auditable in one place.  Values are absolute unless noted.
"""

# Hermiticity: max |M - M^dag| entrywise for matrices required to be Hermitian.
HERMITIAN_ATOL = 1e-12

# Unit trace / normalization checks (state vectors, density matrices, Gemenge
# probabilities, algebraic-state normalization).
TRACE_ATOL = 1e-10

# Eigenvalue floor for positive-semidefinite checks on density matrices.
PSD_ATOL = 1e-10

# Reconstruction error allowed for eigendecompositions and propagators
# (V diag(w) V^dag and U U^dag = I checks).
RECONSTRUCTION_ATOL = 1e-9

# Pairwise orthonormality of eigenvector columns and algebra bases.
ORTHONORMALITY_ATOL = 1e-10

# Eigenvalues closer than this are treated as one degenerate cluster.
DEGENERACY_GAP = 1e-8

# Relative rank / membership cutoff for algebra closures (Gram-Schmidt).
ALGEBRA_TOL = 1e-9

# Joint eigenvalue vectors agreeing within this are merged into one character.
VALUE_MERGE_ATOL = 1e-7

# Character multiplicativity and projector-consistency checks.
CHARACTER_ATOL = 1e-8

# Default entrywise tolerance when comparing algebraic states (observer
# indistinguishability verdicts).
STATE_EQUALITY_ATOL = 1e-8

# Probabilities below this are treated as structurally zero.
PROBABILITY_FLOOR = 1e-12


class InvariantViolation(ValueError):
    """A numerical invariant failed (non-Hermitian state, trace drift,
    negative probability, closure breakdown).

    Subclasses ``ValueError`` so generic input validation handlers catch it,
    but remains distinguishable: the CLI maps it to a dedicated exit code.
    """
