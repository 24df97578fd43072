"""Signature codebooks: construction, total squared correlation and bounds.

A code is an ``L x K`` matrix whose ``K`` unit-norm columns are the user
signatures (``L`` chips each).  Binary antipodal codes are stored as an
integer sign pattern with an implied ``1/sqrt(L)`` scale so that Gram
matrices and collision checks are exact integer arithmetic.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import IO, Optional, Union

import numpy as np

from .matcore import as_matrix

NORM_TOL = 1e-9
MAX_ENUM_USERS = 24


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CodeMatrix:
    """``L x K`` signature matrix with unit-norm columns.

    Build with :meth:`from_signs` for binary antipodal codes or
    :meth:`from_matrix` for real-valued ones.
    """

    mat: np.ndarray
    signs: Optional[np.ndarray] = None

    def __post_init__(self):
        mat = as_matrix(self.mat, "code matrix")
        norms = np.linalg.norm(mat, axis=0)
        if np.max(np.abs(norms - 1.0)) > NORM_TOL:
            raise ValueError("code columns must have unit Euclidean norm")
        if self.signs is not None:
            s = np.asarray(self.signs)
            if s.shape != mat.shape or not np.all(np.abs(s) == 1):
                raise ValueError("sign pattern must be a +-1 array matching the code shape")
            object.__setattr__(self, "signs", _readonly(s.astype(np.int64)))
        object.__setattr__(self, "mat", _readonly(mat.copy()))

    @classmethod
    def from_signs(cls, signs) -> "CodeMatrix":
        s = np.asarray(signs)
        if s.ndim == 1:
            s = s.reshape(-1, 1)
        if s.ndim != 2 or not np.all(np.abs(s) == 1):
            raise ValueError("binary code needs a 2-D array with entries in {-1, +1}")
        s = s.astype(np.int64)
        return cls(s / math.sqrt(s.shape[0]), signs=s)

    @classmethod
    def from_matrix(cls, mat, normalize: bool = False) -> "CodeMatrix":
        m = as_matrix(mat, "code matrix")
        if normalize:
            m = m / np.linalg.norm(m, axis=0)
        return cls(m)

    @property
    def L(self) -> int:
        return self.mat.shape[0]

    @property
    def K(self) -> int:
        return self.mat.shape[1]

    @property
    def binary_antipodal(self) -> bool:
        return self.signs is not None

    @property
    def shape(self) -> tuple[int, int]:
        return self.mat.shape

    def gram(self) -> np.ndarray:
        """``C^T C``; exact (integer Gram over ``L``) for binary codes."""
        if self.signs is not None:
            return (self.signs.T @ self.signs) / self.L
        return self.mat.T @ self.mat

    def __repr__(self) -> str:
        kind = "binary" if self.binary_antipodal else "real"
        return f"CodeMatrix(L={self.L}, K={self.K}, {kind})"


@dataclass(frozen=True)
class TscReport:
    tsc: float
    welch: float
    kp: float
    is_wbe: bool
    is_bwbe_candidate: bool
    binary: bool = False

    @property
    def is_bwbe(self) -> bool:
        return self.binary and self.is_wbe

    @property
    def is_abwbe(self) -> bool:
        """Binary, above the Welch bound, but at the binary (KP) bound."""
        return self.binary and not self.is_wbe and self.is_bwbe_candidate


@dataclass
class InjectivityReport:
    injective: bool
    colliding_pairs: list = field(default_factory=list)
    noiseless_floor: float = 0.0

    @property
    def n_pairs(self) -> int:
        return len(self.colliding_pairs)


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def hadamard(d: int) -> np.ndarray:
    """Sylvester Hadamard matrix of order ``d`` (integer entries)."""
    if not _is_pow2(int(d)):
        raise ValueError(f"Sylvester construction needs a power of 2, got {d}")
    h = np.ones((1, 1), dtype=np.int64)
    while h.shape[0] < d:
        h = np.block([[h, h], [h, -h]])
    return h


def tsc(c: CodeMatrix) -> float:
    """Total squared correlation, the squared Frobenius norm of the Gram matrix."""
    if c.signs is not None:
        g = c.signs.T @ c.signs
        return float(np.sum(g * g)) / c.L**2
    d = c.mat.T @ c.mat
    return float(np.sum(d * d))


def welch_bound(L: int, K: int) -> float:
    if L < 1 or K < 1:
        raise ValueError("L and K must be positive")
    return float(K) if K <= L else K * K / L


def _kp_underloaded(L: int, K: int) -> float:
    if L % 4 == 0:
        return float(K)
    if L % 4 == 2:
        if K % 2 == 0:
            return K + 2 * K * (K - 2) / L**2
        return K + 2 * ((K - 1) / L) ** 2
    return K + K * (K - 1) / L**2


def _kp_overloaded(L: int, K: int) -> float:
    if K % 4 == 0:
        return K * K / L
    if K % 4 == 2:
        if L % 2 == 0:
            return K * K / L + 2 * (L - 2) / L
        return K * K / L + 2 * ((L - 1) / L) ** 2
    return K * K / L + (L - 1) / L


def kp_bound(L: int, K: int) -> float:
    """Karystinos-Pados lower bound on the TSC of binary antipodal codes."""
    if L < 1 or K < 1:
        raise ValueError("L and K must be positive")
    if K < L:
        return _kp_underloaded(L, K)
    if K > L:
        return _kp_overloaded(L, K)
    under, over = _kp_underloaded(L, K), _kp_overloaded(L, K)
    assert abs(under - over) <= 1e-12 * max(1.0, under), (L, K, under, over)
    return under


def _sign_tsc_int(s: np.ndarray) -> int:
    g = s @ s.T
    return int(np.sum(g * g))


def min_tsc_search(
    L: int,
    K: int,
    budget: int,
    seed: int,
    init: Optional[np.ndarray] = None,
    trace: Optional[list] = None,
) -> tuple[CodeMatrix, float]:
    """Greedy best-improvement sign-flip search for a low-TSC binary code.

    Every step flips the single entry with the most negative TSC change.
    At a local minimum the search restarts from a fresh random pattern
    (each restart costs one unit of ``budget``).  Stops once the KP bound
    is reached or the budget is spent.  If ``trace`` is given, the
    best-so-far TSC is appended after every step.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    rng = np.random.default_rng(seed)
    if init is None:
        s = rng.choice(np.array([-1, 1]), size=(L, K))
    else:
        s = np.array(init, dtype=np.int64)
        if s.shape != (L, K):
            raise ValueError(f"init must have shape {(L, K)}")
    s = s.astype(np.int64)
    # integer scale: TSC * L^2 == ||S S^T||_F^2
    target = kp_bound(L, K) * L * L + 1e-9 * L * L
    cur = _sign_tsc_int(s)
    best, best_s = cur, s.copy()
    spent = 0
    while spent < budget and best > target:
        g = s @ s.T
        np.fill_diagonal(g, 0)
        delta = 8 * ((L - 1) - s * (g @ s))
        i, j = np.unravel_index(int(np.argmin(delta)), delta.shape)
        if delta[i, j] < 0:
            s[i, j] = -s[i, j]
            cur += int(delta[i, j])
        else:
            s = rng.choice(np.array([-1, 1]), size=(L, K))
            cur = _sign_tsc_int(s)
        spent += 1
        if cur < best:
            best, best_s = cur, s.copy()
        if trace is not None:
            trace.append(best / L**2)
    return CodeMatrix.from_signs(best_s), best / L**2


def default_extra_column(L: int) -> np.ndarray:
    """Appended column for ``[H_L | b]`` that keeps the code injective.

    ``b = (h0 + h1 + h2 - h3) / 2`` has Hadamard correlations
    ``(L/2, L/2, L/2, -L/2, 0, ...)``, so it is not ``+-`` any Hadamard
    column.  For ``L < 4`` every +-1 vector is a Hadamard column, and the
    first column is returned.
    """
    h = hadamard(L)
    if L < 4:
        return h[:, 0].copy()
    return (h[:, 0] + h[:, 1] + h[:, 2] - h[:, 3]) // 2


VARIANTS = ("auto", "collide", "search")


def build_core(
    L: int,
    K: int,
    seed: int = 0,
    variant: str = "auto",
    deleted_row: int = 0,
    budget: int = 20000,
) -> CodeMatrix:
    """Construct a small binary antipodal core code.

    ``variant="auto"`` uses a closed form when one applies:

    * ``K == L`` and ``L`` a power of 2: ``H_L / sqrt(L)``;
    * ``K == L + 1`` a power of 2: ``H_K`` with row ``deleted_row`` removed;
    * ``L`` a power of 2, ``K == L + 1``: ``[H_L | b]`` with
      :func:`default_extra_column` (injective on binary inputs);
    * ``L`` a power of 2, ``K > L + 1``: ``[H_L | random]`` refined by
      :func:`min_tsc_search`;

    and falls back to a pure search otherwise.  ``variant="collide"``
    builds ``[H_L | h_1]`` (a repeated Hadamard column, same TSC but not
    injective); ``variant="search"`` always searches from random.
    """
    if L < 1 or K < 1:
        raise ValueError("L and K must be positive")
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if variant == "collide":
        if not (_is_pow2(L) and K == L + 1):
            raise ValueError("collide variant needs L a power of 2 and K == L + 1")
        h = hadamard(L)
        return CodeMatrix.from_signs(np.hstack([h, h[:, :1]]))
    if variant == "search":
        return min_tsc_search(L, K, budget, seed)[0]

    if K == L and _is_pow2(L):
        return CodeMatrix.from_signs(hadamard(L))
    if K == L + 1 and _is_pow2(K):
        if not 0 <= deleted_row < K:
            raise ValueError(f"deleted_row must be in [0, {K})")
        return CodeMatrix.from_signs(np.delete(hadamard(K), deleted_row, axis=0))
    if _is_pow2(L) and K == L + 1:
        b = default_extra_column(L)
        return CodeMatrix.from_signs(np.column_stack([hadamard(L), b]))
    if _is_pow2(L) and K > L:
        rng = np.random.default_rng(seed)
        extra = rng.choice(np.array([-1, 1]), size=(L, K - L))
        init = np.hstack([hadamard(L), extra])
        return min_tsc_search(L, K, budget, seed, init=init)[0]
    return min_tsc_search(L, K, budget, seed)[0]


def _enumerate_inputs(K: int) -> np.ndarray:
    """All of {-1,+1}^K in lexicographic order (-1 < +1), as int8 rows."""
    n = np.arange(2**K, dtype=np.int64)
    bits = (n[:, None] >> np.arange(K - 1, -1, -1)) & 1
    return (2 * bits - 1).astype(np.int8)


def check_binary_injectivity(c: CodeMatrix) -> InjectivityReport:
    """Exhaustively test whether ``x -> C x`` is one-to-one on {-1,+1}^K.

    Images are compared exactly on the integer sign pattern.  The noiseless
    floor is the bit-error fraction of an ML decoder that picks uniformly
    among inputs sharing the transmitted image.
    """
    if c.signs is None:
        raise ValueError("injectivity oracle needs a binary antipodal code")
    K = c.K
    if K > MAX_ENUM_USERS:
        raise ValueError(f"K={K} exceeds the enumeration limit {MAX_ENUM_USERS}")
    xs = _enumerate_inputs(K)
    images = np.ascontiguousarray((xs.astype(np.int16) @ c.signs.T.astype(np.int16)))
    keys = images.view(np.dtype((np.void, images.dtype.itemsize * images.shape[1]))).ravel()
    _, inverse, counts = np.unique(keys, return_inverse=True, return_counts=True)
    inverse = inverse.ravel()
    amb = np.flatnonzero(counts[inverse] > 1)
    if amb.size == 0:
        return InjectivityReport(True, [], 0.0)

    cls = inverse[amb]
    order = np.argsort(cls, kind="stable")
    amb, cls = amb[order], cls[order]
    uniq, start, size = np.unique(cls, return_index=True, return_counts=True)
    plus = np.zeros((uniq.size, K), dtype=np.int64)
    np.add.at(plus, np.searchsorted(uniq, cls), xs[amb] > 0)
    # sum over inputs of expected Hamming errors = sum_b 2 p_b (m - p_b) / m per class
    m = size[:, None].astype(float)
    total_errors = float(np.sum(2.0 * plus * (m - plus) / m))
    floor = total_errors / (2**K * K)

    pairs = []
    for st, sz in zip(start, size):
        members = [tuple(int(v) for v in xs[i]) for i in amb[st : st + sz]]
        for a in range(sz):
            for b in range(a + 1, sz):
                pairs.append((members[a], members[b]))
    return InjectivityReport(False, pairs, floor)


def classify(c: CodeMatrix) -> TscReport:
    t = tsc(c)
    w = welch_bound(c.L, c.K)
    kp = kp_bound(c.L, c.K)
    is_wbe = t <= w + 1e-9 * c.K**2
    return TscReport(
        tsc=t,
        welch=w,
        kp=kp,
        is_wbe=is_wbe,
        is_bwbe_candidate=c.binary_antipodal and t <= kp + 1e-6,
        binary=c.binary_antipodal,
    )


# --- text file format -------------------------------------------------------


class CodeFormatError(ValueError):
    pass


@dataclass(frozen=True)
class KronInfo:
    """Sidecar describing an enlarged code as ``d`` copies of an ``L x K`` core."""

    d: int
    core_L: int
    core_K: int

    def line(self) -> str:
        return f"kron d={self.d} core={self.core_L}x{self.core_K}"

    @classmethod
    def parse(cls, line: str) -> "KronInfo":
        parts = line.split()
        if len(parts) != 3 or parts[0] != "kron" or not parts[1].startswith("d=") or not parts[2].startswith("core="):
            raise CodeFormatError(f"bad sidecar line: {line!r}")
        try:
            d = int(parts[1][2:])
            cl, ck = (int(v) for v in parts[2][5:].split("x"))
        except ValueError as exc:
            raise CodeFormatError(f"bad sidecar line: {line!r}") from exc
        if d < 1 or cl < 1 or ck < 1:
            raise CodeFormatError(f"bad sidecar line: {line!r}")
        return cls(d, cl, ck)


PathOrFile = Union[str, os.PathLike, IO[str]]


def format_code(c: CodeMatrix, kron: Optional[KronInfo] = None) -> str:
    lines = [f"{c.L} {c.K} binary:{int(c.binary_antipodal)}"]
    if c.signs is not None:
        lines += [" ".join(str(int(v)) for v in row) for row in c.signs]
    else:
        lines += [" ".join(repr(float(v)) for v in row) for row in c.mat]
    if kron is not None:
        lines.append(kron.line())
    return "\n".join(lines) + "\n"


def write_code(c: CodeMatrix, dest: PathOrFile, kron: Optional[KronInfo] = None) -> None:
    text = format_code(c, kron)
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w", newline="\n") as fh:
            fh.write(text)


def parse_code(text: str) -> tuple[CodeMatrix, Optional[KronInfo]]:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise CodeFormatError("empty code file")
    head = lines[0].split()
    if len(head) != 3 or head[2] not in ("binary:0", "binary:1"):
        raise CodeFormatError(f"bad header line: {lines[0]!r}")
    try:
        L, K = int(head[0]), int(head[1])
    except ValueError as exc:
        raise CodeFormatError(f"bad header line: {lines[0]!r}") from exc
    if L < 1 or K < 1:
        raise CodeFormatError("L and K must be positive")
    binary = head[2] == "binary:1"
    if len(lines) not in (L + 1, L + 2):
        raise CodeFormatError(f"expected {L} matrix rows (plus optional sidecar), got {len(lines) - 1} lines")
    rows = []
    for ln in lines[1 : L + 1]:
        toks = ln.split(" ")
        if len(toks) != K:
            raise CodeFormatError(f"expected {K} values per row: {ln!r}")
        if binary:
            if any(t not in ("1", "-1") for t in toks):
                raise CodeFormatError(f"binary rows must hold 1/-1 only: {ln!r}")
            rows.append([int(t) for t in toks])
        else:
            try:
                rows.append([float(t) for t in toks])
            except ValueError as exc:
                raise CodeFormatError(f"non-numeric entry in {ln!r}") from exc
    kron = KronInfo.parse(lines[L + 1]) if len(lines) == L + 2 else None
    try:
        code = CodeMatrix.from_signs(np.array(rows)) if binary else CodeMatrix.from_matrix(np.array(rows))
    except ValueError as exc:
        raise CodeFormatError(str(exc)) from exc
    if kron is not None and (kron.d * kron.core_L != L or kron.d * kron.core_K != K):
        raise CodeFormatError("sidecar dimensions do not match the matrix")
    return code, kron


def read_code(src: PathOrFile) -> tuple[CodeMatrix, Optional[KronInfo]]:
    """Read a code file; returns the code and its optional Kronecker sidecar."""
    if hasattr(src, "read"):
        return parse_code(src.read())
    with open(src, "r", newline="") as fh:
        return parse_code(fh.read())
