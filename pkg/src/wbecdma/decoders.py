"""Multiuser detectors for binary inputs on a known signature code.

Four detectors are provided, each as a single-frame function and as a
scikit-learn style estimator (``fit`` on a code, ``predict`` on received
vectors, one frame per row):

* brute-force ML over all ``2^K`` candidates (:func:`decode_ml`,
  :class:`MLDecoder`);
* decoupled ML for Kronecker codes ``q (x) C``: rotate by ``q^T (x) I_L``
  and solve ``d`` independent core problems (:func:`decode_decoupled`,
  :class:`DecoupledDecoder`);
* AML, a reduced search over the ``2^(K-L)`` tail inputs with the head
  recovered by a sign map (:func:`decode_aml`, :class:`AMLDecoder`);
* a clamped-gradient iterative interference canceller
  (:func:`decode_iterative`, :class:`IterativeDecoder`).

Candidates are enumerated in lexicographic order with -1 < +1 and exact
ties go to the first (smallest) candidate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils import check_array
from sklearn.utils.validation import check_is_fitted

from .codebook import MAX_ENUM_USERS, CodeMatrix, _enumerate_inputs
from .enlarge import UNITARY_TOL, Enlargement
from .matcore import SingularMatrixError, invert, is_unitary, sign_vec

# bound on frames x candidates held in memory at once
_CHUNK_CELLS = 1 << 22


@dataclass
class DecoderOutcome:
    """Decisions for one frame (1-D ``x_hat``) or a batch (2-D ``x_hat``).

    ``distance_evals`` is per frame.  ``objective`` is ``||y - C x_hat||^2``.
    AML additionally reports ``reduced_cost``, the value of its own search
    objective ``||A^-1 y - x1 - A^-1 B x2||^2``.
    """

    x_hat: np.ndarray
    distance_evals: int
    objective: np.ndarray
    reduced_cost: Optional[np.ndarray] = None


@dataclass(frozen=True, eq=False)
class AmlSplit:
    perm: np.ndarray
    a: np.ndarray
    b: np.ndarray
    a_inv: np.ndarray
    a_is_unitary: bool

    @property
    def n_head(self) -> int:
        return self.a.shape[0]


def _candidates(K: int) -> np.ndarray:
    return _enumerate_inputs(K).astype(float)


def _check_enum(K: int):
    if K > MAX_ENUM_USERS:
        raise ValueError(f"exhaustive search over 2^{K} candidates exceeds the limit 2^{MAX_ENUM_USERS}")


def _as_code(code) -> CodeMatrix:
    if isinstance(code, CodeMatrix):
        return code
    if isinstance(code, Enlargement):
        return code.materialize()
    return CodeMatrix.from_matrix(code)


def _residual_sq(Y: np.ndarray, mat: np.ndarray, X: np.ndarray) -> np.ndarray:
    r = Y - X @ mat.T
    return np.einsum("ij,ij->i", r, r)


def _ml_batch(code: CodeMatrix, Y: np.ndarray, tie_rng: Optional[np.random.Generator] = None):
    K = code.K
    _check_enum(K)
    cands = _candidates(K)
    if code.signs is not None:
        # exact integer images so that colliding candidates tie bit-for-bit
        images = (cands @ code.signs.T) / np.sqrt(code.L)
    else:
        images = cands @ code.mat.T
    energy = np.einsum("ij,ij->i", images, images)
    n = Y.shape[0]
    idx = np.empty(n, dtype=np.int64)
    step = max(1, _CHUNK_CELLS // cands.shape[0])
    for lo in range(0, n, step):
        score = energy[None, :] - 2.0 * (Y[lo : lo + step] @ images.T)
        if tie_rng is None:
            idx[lo : lo + step] = np.argmin(score, axis=1)
        else:
            best = score.min(axis=1, keepdims=True)
            for r, row in enumerate(score == best):
                idx[lo + r] = tie_rng.choice(np.flatnonzero(row))
    return cands[idx]


def _rotate(q: np.ndarray, Y: np.ndarray, L: int) -> np.ndarray:
    """Apply ``q^T (x) I_L`` to each row of ``Y`` without forming the big matrix."""
    d = q.shape[0]
    blocks = Y.reshape(Y.shape[0], d, L)
    return np.einsum("ji,njl->nil", q, blocks).reshape(Y.shape[0], d * L)


def _check_received(Y, n_chips: int) -> tuple[np.ndarray, bool]:
    single = np.ndim(Y) == 1
    Y = check_array(np.atleast_2d(np.asarray(Y, dtype=float)), ensure_all_finite=True)
    if Y.shape[1] != n_chips:
        raise ValueError(f"received vectors have length {Y.shape[1]}, expected {n_chips}")
    return Y, single


def _unbatch(out: DecoderOutcome, single: bool) -> DecoderOutcome:
    if not single:
        return out
    rc = None if out.reduced_cost is None else float(out.reduced_cost[0])
    return DecoderOutcome(out.x_hat[0], out.distance_evals, float(out.objective[0]), rc)


# --- brute-force ML ---------------------------------------------------------


def decode_ml_batch(code: CodeMatrix, Y: np.ndarray, tie_rng=None) -> DecoderOutcome:
    X = _ml_batch(code, Y, tie_rng)
    return DecoderOutcome(X, 2**code.K, _residual_sq(Y, code.mat, X))


def decode_ml(c, y, tie_break: str = "lex", rng: Optional[np.random.Generator] = None) -> DecoderOutcome:
    """Exhaustive ML: ``argmin ||y - C x||^2`` over ``x`` in {-1,+1}^K.

    ``tie_break="random"`` picks uniformly among exact ties using ``rng``.
    """
    code = _as_code(c)
    Y, single = _check_received(y, code.L)
    if tie_break not in ("lex", "random"):
        raise ValueError("tie_break must be 'lex' or 'random'")
    tie_rng = None
    if tie_break == "random":
        tie_rng = rng if rng is not None else np.random.default_rng()
    return _unbatch(decode_ml_batch(code, Y, tie_rng), single)


# --- decoupled ML for Kronecker codes ---------------------------------------


def decode_decoupled_batch(e: Enlargement, Y: np.ndarray, inner: str = "ml", split=None) -> DecoderOutcome:
    d, core = e.d, e.core
    n = Y.shape[0]
    Yr = _rotate(e.q, Y, core.L).reshape(n * d, core.L)
    if inner == "ml":
        sub = decode_ml_batch(core, Yr)
    elif inner == "aml":
        sub = decode_aml_batch(core, Yr, split if split is not None else choose_split(core))
    else:
        raise ValueError(f"unknown inner decoder {inner!r}")
    X = sub.x_hat.reshape(n, d * core.K)
    obj = sub.objective.reshape(n, d).sum(axis=1)
    rc = None if sub.reduced_cost is None else sub.reduced_cost.reshape(n, d).sum(axis=1)
    return DecoderOutcome(X, d * sub.distance_evals, obj, rc)


def decode_decoupled(e: Enlargement, y) -> DecoderOutcome:
    """ML for ``q (x) C`` as ``d`` independent core ML problems (``d * 2^K`` distances).

    The objective is computed in the rotated domain, which preserves
    distances because ``q`` is orthogonal.
    """
    if not is_unitary(e.q, UNITARY_TOL):
        raise ValueError("decoupled decoding needs an orthogonal q")
    Y, single = _check_received(y, e.d * e.core.L)
    return _unbatch(decode_decoupled_batch(e, Y), single)


# --- AML --------------------------------------------------------------------


def choose_split(c, rank_tol: float = 1e-10) -> AmlSplit:
    """Pick ``L`` columns forming an invertible head block ``A``.

    Greedy column pivoting: at each step take the column with the largest
    residual after projecting out the columns already chosen (the lowest
    index wins ties).  Orthonormal column sets are therefore kept intact.
    """
    code = _as_code(c)
    L, K = code.shape
    if K < L:
        raise ValueError(f"AML split needs K >= L, got L={L}, K={K}")
    R = code.mat.copy()
    remaining = list(range(K))
    chosen = []
    for _ in range(L):
        norms = np.linalg.norm(R[:, remaining], axis=0)
        top = norms.max()
        if top < rank_tol:
            raise SingularMatrixError("code is rank deficient; no invertible head block exists")
        pick = remaining[int(np.flatnonzero(norms >= top * (1 - 1e-9))[0])]
        v = R[:, pick] / np.linalg.norm(R[:, pick])
        R -= np.outer(v, v @ R)
        chosen.append(pick)
        remaining.remove(pick)
    head = sorted(chosen)
    perm = np.array(head + remaining, dtype=np.int64)
    a = code.mat[:, head]
    b = code.mat[:, remaining]
    return AmlSplit(perm, a, b, invert(a), is_unitary(a, 1e-9))


def decode_aml_batch(code: CodeMatrix, Y: np.ndarray, split: AmlSplit) -> DecoderOutcome:
    L, K = code.shape
    tail = K - L
    _check_enum(tail)
    W = Y @ split.a_inv.T
    n = Y.shape[0]
    if tail == 0:
        X1 = sign_vec(W)
        Xp = X1
        cost = np.einsum("ij,ij->i", W - X1, W - X1)
        evals = 1
    else:
        cands = _candidates(tail)
        offsets = cands @ (split.a_inv @ split.b).T
        Xp = np.empty((n, K))
        cost = np.empty(n)
        step = max(1, _CHUNK_CELLS // (cands.shape[0] * L))
        for lo in range(0, n, step):
            Z = W[lo : lo + step, None, :] - offsets[None, :, :]
            dev = Z - sign_vec(Z)
            c = np.einsum("nml,nml->nm", dev, dev)
            best = np.argmin(c, axis=1)
            rows = np.arange(best.size)
            Xp[lo : lo + step, :L] = sign_vec(Z[rows, best])
            Xp[lo : lo + step, L:] = cands[best]
            cost[lo : lo + step] = c[rows, best]
        evals = 2**tail
    X = np.empty_like(Xp)
    X[:, split.perm] = Xp
    return DecoderOutcome(X, evals, _residual_sq(Y, code.mat, X), cost)


def decode_aml(c, y, split: Optional[AmlSplit] = None) -> DecoderOutcome:
    """AML decision: search the ``2^(K-L)`` tails, head is ``sign(A^-1 y - A^-1 B x2)``.

    Equals :func:`decode_ml` whenever ``split.a_is_unitary``.
    """
    code = _as_code(c)
    if split is None:
        split = choose_split(code)
    Y, single = _check_received(y, code.L)
    return _unbatch(decode_aml_batch(code, Y, split), single)


# --- iterative soft-limiter canceller ---------------------------------------


def max_eigenvalue(gram: np.ndarray, iterations: int = 50, tol: float = 1e-6) -> float:
    """Largest eigenvalue of a PSD matrix by power iteration."""
    v = np.linspace(1.0, 2.0, gram.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iterations):
        w = gram @ v
        new = float(np.linalg.norm(w))
        if new == 0.0:
            return 0.0
        v = w / new
        if abs(new - lam) <= tol * new:
            lam = new
            break
        lam = new
    return lam


def decode_iterative_batch(code: CodeMatrix, Y: np.ndarray, mu: float, iterations: int) -> DecoderOutcome:
    C = code.mat
    S = np.zeros((Y.shape[0], code.K))
    for _ in range(iterations):
        S = np.clip(S + mu * ((Y - S @ C.T) @ C), -1.0, 1.0)
    X = sign_vec(S)
    return DecoderOutcome(X, iterations, _residual_sq(Y, C, X))


def decode_iterative(c, y, mu: Optional[float] = None, iterations: int = 20) -> DecoderOutcome:
    """Clamped gradient descent on ``||y - C s||^2`` over the box [-1, 1]^K.

    ``s <- clip(s + mu C^T (y - C s), -1, 1)`` from ``s = 0``; the decision
    is ``sign(s)`` after ``iterations`` steps.  ``mu`` defaults to
    ``1 / lambda_max(C^T C)``.
    """
    code = _as_code(c)
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if mu is None:
        mu = 1.0 / max_eigenvalue(code.mat.T @ code.mat)
    if mu <= 0:
        raise ValueError("mu must be positive")
    Y, single = _check_received(y, code.L)
    return _unbatch(decode_iterative_batch(code, Y, mu, iterations), single)


# --- estimator wrappers -----------------------------------------------------


class _DecoderBase(BaseEstimator):
    def predict(self, Y) -> np.ndarray:
        """Hard decisions in {-1, +1}, one row per received frame."""
        return self.decode(Y).x_hat

    def decode(self, Y) -> DecoderOutcome:
        check_is_fitted(self, "code_")
        Y, _ = _check_received(Y, self.code_.L)
        return self._decode(Y)

    def score(self, Y, X) -> float:
        """Fraction of correctly detected bits."""
        return float(np.mean(self.predict(Y) == np.asarray(X)))

    @property
    def distance_evals(self) -> int:
        """Distance evaluations per frame."""
        check_is_fitted(self, "code_")
        return self._evals()


class MLDecoder(_DecoderBase):
    def __init__(self, tie_break: str = "lex", random_state=None):
        self.tie_break = tie_break
        self.random_state = random_state

    def fit(self, code, y=None):
        self.code_ = _as_code(code)
        _check_enum(self.code_.K)
        return self

    def _decode(self, Y):
        rng = None
        if self.tie_break == "random":
            rng = np.random.default_rng(self.random_state)
        elif self.tie_break != "lex":
            raise ValueError("tie_break must be 'lex' or 'random'")
        return decode_ml_batch(self.code_, Y, rng)

    def _evals(self):
        return 2**self.code_.K


class DecoupledDecoder(_DecoderBase):
    """Blockwise detector for ``q (x) C`` codes.

    ``fit`` takes an :class:`Enlargement`, or a materialized code together
    with ``d`` (and optional ``core_K``) so the factors can be recovered.
    ``inner`` selects the per-block detector: ``"ml"`` or ``"aml"``.
    """

    def __init__(self, inner: str = "ml", d: Optional[int] = None, core_K: Optional[int] = None):
        self.inner = inner
        self.d = d
        self.core_K = core_K

    def fit(self, code, y=None):
        from .codebook import KronInfo

        if isinstance(code, Enlargement):
            e = code
        else:
            c = _as_code(code)
            if self.d is None:
                raise ValueError("d is required to factor a materialized code")
            if c.L % self.d or c.K % self.d:
                raise ValueError(f"code shape {c.shape} is not divisible by d={self.d}")
            e = Enlargement.from_code(c, KronInfo(self.d, c.L // self.d, self.core_K or c.K // self.d))
        if not is_unitary(e.q, UNITARY_TOL):
            raise ValueError("decoupled decoding needs an orthogonal q")
        if self.inner not in ("ml", "aml"):
            raise ValueError(f"unknown inner decoder {self.inner!r}")
        self.enlargement_ = e
        self.code_ = e.materialize()
        self.split_ = choose_split(e.core) if self.inner == "aml" else None
        return self

    def _decode(self, Y):
        return decode_decoupled_batch(self.enlargement_, Y, self.inner, self.split_)

    def _evals(self):
        core = self.enlargement_.core
        tail = core.K if self.inner == "ml" else core.K - core.L
        return self.enlargement_.d * (2**tail if tail else 1)


class AMLDecoder(_DecoderBase):
    def fit(self, code, y=None):
        self.code_ = _as_code(code)
        self.split_ = choose_split(self.code_)
        _check_enum(self.code_.K - self.code_.L)
        return self

    def _decode(self, Y):
        return decode_aml_batch(self.code_, Y, self.split_)

    def _evals(self):
        tail = self.code_.K - self.code_.L
        return 2**tail if tail else 1


class IterativeDecoder(_DecoderBase):
    def __init__(self, mu: Optional[float] = None, iterations: int = 20):
        self.mu = mu
        self.iterations = iterations

    def fit(self, code, y=None):
        self.code_ = _as_code(code)
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        mu = self.mu
        if mu is None:
            mu = 1.0 / max_eigenvalue(self.code_.mat.T @ self.code_.mat)
        if mu <= 0:
            raise ValueError("mu must be positive")
        self.mu_ = mu
        return self

    def _decode(self, Y):
        return decode_iterative_batch(self.code_, Y, self.mu_, self.iterations)

    def _evals(self):
        return self.iterations
