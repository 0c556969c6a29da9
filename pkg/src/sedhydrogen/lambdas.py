"""The eight real 3x3 matrices used for the order-r part of the vector potential.

Each matrix is stored as an integer pattern times the square root of an
integer scale, so the completeness identity can be checked in exact integer
arithmetic.
"""

import numpy as np

# squared prefactors of lambda^1 .. lambda^8
SCALE_SQ = np.array([3, 5, 3, 3, 5, 3, 5, 1], dtype=np.int64)

PATTERNS = np.array(
    [
        [[0, 1, 0], [1, 0, 0], [0, 0, 0]],
        [[0, -1, 0], [1, 0, 0], [0, 0, 0]],
        [[1, 0, 0], [0, -1, 0], [0, 0, 0]],
        [[0, 0, 1], [0, 0, 0], [1, 0, 0]],
        [[0, 0, -1], [0, 0, 0], [1, 0, 0]],
        [[0, 0, 0], [0, 0, 1], [0, 1, 0]],
        [[0, 0, 0], [0, 0, -1], [0, 1, 0]],
        [[1, 0, 0], [0, 1, 0], [0, 0, -2]],
    ],
    dtype=np.int64,
)

# zero-based indices of the antisymmetric matrices (lambda^2, lambda^5, lambda^7)
ANTISYMMETRIC = (1, 4, 6)
SYMMETRIC = (0, 2, 3, 5, 7)


def lambda_matrices() -> np.ndarray:
    """Float array of shape (8, 3, 3) holding lambda^1..lambda^8."""
    return np.sqrt(SCALE_SQ.astype(float))[:, None, None] * PATTERNS


def completeness_lhs(patterns=None, scale_sq=None) -> np.ndarray:
    """sum_a lambda^a_ik lambda^a_jl as an exact integer tensor indexed [i, j, k, l]."""
    patterns = PATTERNS if patterns is None else patterns
    scale_sq = SCALE_SQ if scale_sq is None else scale_sq
    return np.einsum("a,aik,ajl->ijkl", scale_sq, patterns, patterns)


def completeness_rhs() -> np.ndarray:
    """2(4 d_ij d_kl - d_ik d_jl - d_il d_jk) indexed [i, j, k, l]."""
    d = np.eye(3, dtype=np.int64)
    return 2 * (
        4 * np.einsum("ij,kl->ijkl", d, d)
        - np.einsum("ik,jl->ijkl", d, d)
        - np.einsum("il,jk->ijkl", d, d)
    )


def check_completeness(patterns=None, scale_sq=None) -> tuple[bool, int]:
    """Return (holds, number of mismatching index tuples out of 81)."""
    diff = completeness_lhs(patterns, scale_sq) - completeness_rhs()
    bad = int(np.count_nonzero(diff))
    return bad == 0, bad
