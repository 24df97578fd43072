import itertools

import numpy as np
import pytest

from wbecdma.codebook import (
    CodeMatrix,
    KronInfo,
    build_core,
    check_binary_injectivity,
    hadamard,
    tsc,
    welch_bound,
)
from wbecdma.enlarge import (
    Enlargement,
    enlarge,
    enlarge_hadamard,
    gram_structure_check,
    hadamard_enlargement,
)
from wbecdma.matcore import random_orthogonal


def wbe_real(L, K, rng):
    """A rotated real WBE code.

    Orthonormal columns when underloaded; otherwise a 2-D harmonic frame
    (L == 2) or the row-deleted H_4 (L, K == 3, 4), both tight frames.
    """
    rot = random_orthogonal(L, rng)
    if K <= L:
        return CodeMatrix.from_matrix(rot[:, :K])
    if L == 2:
        ang = 2 * np.pi * np.arange(K) / K
        frame = np.vstack([np.cos(ang), np.sin(ang)])
    elif (L, K) == (3, 4):
        frame = np.delete(hadamard(4), 0, axis=0) / np.sqrt(3)
    else:
        raise ValueError((L, K))
    return CodeMatrix.from_matrix(rot @ frame)


C78 = CodeMatrix.from_signs(np.delete(hadamard(8), 0, axis=0))


def test_enlarge_h8_c78():
    big = enlarge(hadamard(8) / np.sqrt(8), C78)
    assert big.shape == (56, 64)
    assert tsc(big) == pytest.approx(512 / 7, abs=1e-9)
    assert tsc(big) == pytest.approx(welch_bound(56, 64), abs=1e-9)


def test_enlarge_identity_is_block_diagonal():
    c = build_core(7, 8)
    big = enlarge(np.eye(3), c).mat
    for i in range(3):
        for j in range(3):
            block = big[7 * i : 7 * i + 7, 8 * j : 8 * j + 8]
            assert np.array_equal(block, c.mat if i == j else np.zeros((7, 8)))


def test_enlarge_random_orthogonal_wbe():
    rng = np.random.default_rng(0)
    for _ in range(20):
        q, c = random_orthogonal(4, rng), wbe_real(2, 3, rng)
        assert tsc(c) == pytest.approx(welch_bound(2, 3), abs=1e-9)
        big = enlarge(q, c)
        assert abs(tsc(big) - 4 * tsc(c)) < 1e-9
        assert abs(tsc(big) - welch_bound(8, 12)) < 1e-9


def test_enlarge_rejects_non_unitary():
    with pytest.raises(ValueError):
        enlarge(2 * np.eye(2), C78)


def test_tsc_scaling_on_arbitrary_cores():
    rng = np.random.default_rng(1)
    for _ in range(50):
        d = int(rng.integers(1, 9))
        L, K = (int(v) for v in rng.integers(1, 7, size=2))
        c = CodeMatrix.from_matrix(rng.standard_normal((L, K)), normalize=True)
        big = enlarge(random_orthogonal(d, rng), c)
        assert abs(tsc(big) - d * tsc(c)) < 1e-9
        assert np.allclose(np.linalg.norm(big.mat, axis=0), 1.0, atol=1e-12)


def test_wbe_preserved_in_both_regimes():
    rng = np.random.default_rng(2)
    for L, K in [(4, 2), (3, 3), (2, 5), (3, 4), (2, 3)]:
        c = wbe_real(L, K, rng)
        for d in (2, 3, 5):
            big = enlarge(random_orthogonal(d, rng), c)
            assert abs(tsc(big) - welch_bound(d * L, d * K)) < 1e-9


def test_enlarge_hadamard_examples():
    big = enlarge_hadamard(8, C78)
    assert big.binary_antipodal and big.shape == (56, 64)
    assert np.allclose(np.abs(big.mat), 1 / np.sqrt(56), atol=1e-15)
    assert np.array_equal(big.signs, np.kron(hadamard(8), C78.signs))
    one = enlarge_hadamard(1, C78)
    assert np.array_equal(one.signs, C78.signs)
    h2 = CodeMatrix.from_signs(hadamard(2))
    assert np.array_equal(enlarge_hadamard(2, h2).signs, hadamard(4))


def test_enlarge_hadamard_matches_real_enlarge():
    c = build_core(8, 9)
    a = enlarge_hadamard(4, c)
    b = enlarge(hadamard(4) / 2, c)
    assert np.max(np.abs(a.mat - b.mat)) < 1e-15


def test_enlarge_hadamard_needs_binary_core():
    with pytest.raises(ValueError):
        enlarge_hadamard(3, C78)
    with pytest.raises(ValueError):
        enlarge_hadamard(2, CodeMatrix.from_matrix(np.eye(2)))


def test_gram_structure_examples():
    rng = np.random.default_rng(3)
    c = CodeMatrix.from_matrix(rng.standard_normal((3, 4)), normalize=True)
    assert gram_structure_check(Enlargement(hadamard(2) / np.sqrt(2), c))
    assert not gram_structure_check(Enlargement(2 * np.eye(2), c))
    for _ in range(100):
        d = int(rng.integers(1, 9))
        L, K = (int(v) for v in rng.integers(1, 6, size=2))
        c = CodeMatrix.from_matrix(rng.standard_normal((L, K)), normalize=True)
        assert gram_structure_check(Enlargement(random_orthogonal(d, rng), c))


def test_enlargement_roundtrip_from_materialized():
    rng = np.random.default_rng(4)
    for _ in range(20):
        d = int(rng.integers(1, 6))
        c = CodeMatrix.from_matrix(rng.standard_normal((3, 4)), normalize=True)
        e = Enlargement(random_orthogonal(d, rng), c)
        back = Enlargement.from_code(e.materialize(), KronInfo(d, 3, 4))
        assert np.max(np.abs(back.materialize().mat - e.materialize().mat)) < 1e-12
    e = hadamard_enlargement(8, C78)
    back = Enlargement.from_code(enlarge_hadamard(8, C78), e.kron_info())
    assert np.array_equal(back.core.signs, C78.signs)
    assert np.allclose(back.q, e.q, atol=1e-15)


def test_from_code_rejects_non_kronecker():
    rng = np.random.default_rng(5)
    c = CodeMatrix.from_matrix(rng.standard_normal((4, 6)), normalize=True)
    with pytest.raises(ValueError):
        Enlargement.from_code(c, KronInfo(2, 2, 3))


def _injective_bruteforce(mat):
    images = {}
    for x in itertools.product((-1, 1), repeat=mat.shape[1]):
        key = tuple(np.round(mat @ np.array(x), 9))
        if key in images:
            return False
        images[key] = x
    return True


def test_injectivity_transfers_through_enlargement():
    rng = np.random.default_rng(6)
    seen = set()
    for trial in range(40):
        L, K = int(rng.integers(1, 4)), int(rng.integers(2, 6))
        core = CodeMatrix.from_signs(rng.choice([-1, 1], size=(L, K)))
        core_inj = check_binary_injectivity(core).injective
        big_h = enlarge_hadamard(2, core)
        assert check_binary_injectivity(big_h).injective == core_inj
        q = random_orthogonal(2, rng)
        assert _injective_bruteforce(enlarge(q, core).mat) == core_inj
        seen.add(core_inj)
    assert seen == {True, False}
