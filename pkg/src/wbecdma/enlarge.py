"""Kronecker enlargement of a core code by a real orthogonal matrix."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codebook import CodeMatrix, KronInfo, hadamard
from .matcore import as_matrix, is_unitary, kron

UNITARY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Enlargement:
    """The pair ``(q, core)`` standing for the code ``q (x) core``."""

    q: np.ndarray
    core: CodeMatrix

    def __post_init__(self):
        q = as_matrix(self.q, "q")
        if q.shape[0] != q.shape[1]:
            raise ValueError("q must be square")
        q = q.copy()
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    @property
    def d(self) -> int:
        return self.q.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.d * self.core.L, self.d * self.core.K

    def materialize(self) -> CodeMatrix:
        return enlarge(self.q, self.core)

    def kron_info(self) -> KronInfo:
        return KronInfo(self.d, self.core.L, self.core.K)

    @classmethod
    def from_code(cls, code: CodeMatrix, info: KronInfo) -> "Enlargement":
        """Recover an equivalent ``(q, core)`` from a materialized Kronecker code.

        Each ``L x K`` block equals ``q[i, j] * core``; the block with the
        largest norm fixes the core up to sign.
        """
        d, L, K = info.d, info.core_L, info.core_K
        if code.shape != (d * L, d * K):
            raise ValueError("sidecar does not match the code shape")
        blocks = code.mat.reshape(d, L, d, K).transpose(0, 2, 1, 3)
        norms = np.linalg.norm(blocks, axis=(2, 3))
        i, j = np.unravel_index(int(np.argmax(norms)), norms.shape)
        ref = blocks[i, j]
        if code.signs is not None:
            sref = code.signs.reshape(d, L, d, K).transpose(0, 2, 1, 3)[i, j]
            core = CodeMatrix.from_signs(sref)
        else:
            core = CodeMatrix.from_matrix(ref / (norms[i, j] / math.sqrt(K)))
        q = np.einsum("ijlk,lk->ij", blocks, core.mat) / K
        if np.max(np.abs(np.kron(q, core.mat) - code.mat)) > 1e-9:
            raise ValueError("code is not a Kronecker product with the stated sidecar")
        return cls(q, core)


def enlarge(q, core: CodeMatrix) -> CodeMatrix:
    """Materialize ``q (x) core`` as a ``dL x dK`` code.

    TSC scales by exactly ``d`` and the Welch bound is preserved.
    """
    q = as_matrix(q, "q")
    if q.shape[0] != q.shape[1] or not is_unitary(q, UNITARY_TOL):
        raise ValueError("enlargement needs a real orthogonal (unitary) q")
    return CodeMatrix.from_matrix(kron(q, core.mat))


def enlarge_hadamard(d: int, core: CodeMatrix) -> CodeMatrix:
    """Binary enlargement ``(H_d / sqrt(d)) (x) core``; keeps entries +-1/sqrt(dL)."""
    h = hadamard(d)
    if core.signs is None:
        raise ValueError("Hadamard enlargement needs a binary antipodal core")
    return CodeMatrix.from_signs(np.kron(h, core.signs))


def hadamard_enlargement(d: int, core: CodeMatrix) -> Enlargement:
    return Enlargement(hadamard(d) / math.sqrt(d), core)


def gram_structure_check(e: Enlargement, tol: float = 1e-9) -> bool:
    """True iff the Gram of ``q (x) C`` equals ``I_d (x) C^T C`` entrywise within ``tol``."""
    big = np.kron(e.q, e.core.mat)
    gram = big.T @ big
    expected = np.kron(np.eye(e.d), e.core.mat.T @ e.core.mat)
    return bool(np.max(np.abs(gram - expected)) <= tol)
