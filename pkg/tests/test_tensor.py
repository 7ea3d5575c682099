# tests/test_tensor.py
"""
🧪 اختبار الجبر الموتري: الانكماش، دلتا كرونيكر المعممة، ومتعددات حدود Pf_ℓ
"""

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import math

import numpy as np
import pytest

from core.errors import TensorError
from core.tensor import (DenseTensor, antisymmetrize, contract, double_factorial, generalized_kronecker,
                         is_symmetric, kulkarni_nomizu, kulkarni_nomizu_array, pfaffian_field, pfaffian_multilinear,
                         pfaffian_poly, lower_index, raise_index, scaled_generalized_kronecker, symmetrize,
                         tensor_product)


def sphere_curvature(n: int) -> DenseTensor:
    """R_ab^cd = δ_a^c δ_b^d − δ_a^d δ_b^c للكرة الواحدية"""
    eye = np.eye(n)
    comps = np.einsum('ac,bd->abcd', eye, eye) - np.einsum('ad,bc->abcd', eye, eye)
    return DenseTensor.from_array(comps, 'lluu')


def test_contract_requires_opposite_variance():
    """الانكماش بين فتحتين من النوع نفسه مرفوض"""
    T = DenseTensor.from_array(np.eye(3), 'll')
    with pytest.raises(TensorError):
        contract(T, 0, 1)

    mixed = DenseTensor.from_array(np.diag([1.0, 2.0, 3.0]), 'lu')
    assert contract(mixed, 0, 1).scalar() == pytest.approx(6.0)


def test_raise_index_with_diagonal_metric():
    g_inv = np.diag([1.0, 0.25])
    T = DenseTensor.from_array([[1.0, 2.0], [3.0, 4.0]], 'll')
    raised = raise_index(T, 0, g_inv)
    assert raised.variance == 'ul'
    assert np.allclose(raised.components, [[1.0, 2.0], [0.75, 1.0]])
    lowered = lower_index(raised, 0, np.diag([1.0, 4.0]))
    assert lowered.variance == 'll'
    assert lowered.allclose(T)
    with pytest.raises(TensorError):
        lower_index(T, 0, np.eye(2))


def test_tensor_product_and_components():
    v = DenseTensor.from_array([1.0, 2.0, 3.0], 'u')
    w = DenseTensor.from_array([0.0, -1.0, 4.0], 'l')
    vw = tensor_product(v, w)
    assert vw.variance == 'ul'
    assert vw.component(2, 1) == -3.0
    assert contract(vw, 0, 1).scalar() == pytest.approx(10.0)
    with pytest.raises(TensorError):
        tensor_product(v, DenseTensor.from_array([1.0, 1.0], 'l'))


def test_symmetrize_and_antisymmetrize_split_a_matrix():
    rng = np.random.default_rng(3)
    A = DenseTensor.from_array(rng.normal(size=(4, 4)), 'll')
    S = symmetrize(A, [0, 1])
    W = antisymmetrize(A, [0, 1])
    assert is_symmetric(S)
    assert (S + W).allclose(A)


def test_double_factorial_convention():
    test_cases = [(-1, 1), (0, 1), (1, 1), (3, 3), (5, 15), (7, 105)]
    for m, expected in test_cases:
        result = double_factorial(m)
        print(f"{'✅' if result == expected else '❌'} {m}!! = {result} (متوقع: {expected})")
        assert result == expected
    with pytest.raises(TensorError):
        double_factorial(-3)


def test_kronecker_trace_identity_is_exact():
    """أثر آخر فتحة علوية وسفلية من k!δ_k يساوي (n−k+1)·(k−1)!δ_{k−1} بالأعداد الصحيحة"""
    for n in range(1, 6):
        for k in range(1, n + 1):
            big = scaled_generalized_kronecker(k, n)
            traced = np.trace(big, axis1=k - 1, axis2=2 * k - 1)
            expected = (n - k + 1) * scaled_generalized_kronecker(k - 1, n)
            assert big.dtype == np.int64
            assert np.array_equal(traced, expected), f"k={k}, n={n}"


def test_kronecker_vanishes_above_dimension():
    assert not scaled_generalized_kronecker(3, 2).any()
    assert generalized_kronecker(3, 2).max_abs() == 0.0


def test_sphere_pfaffians():
    """Pf_ℓ لموتر الكرة = C(n,2ℓ)·(2ℓ−1)!!"""
    for n in range(2, 7):
        R = sphere_curvature(n)
        for ell in range(0, n // 2 + 1):
            expected = math.comb(n, 2 * ell) * double_factorial(2 * ell - 1)
            assert pfaffian_poly(ell, R, method='matching') == pytest.approx(expected), f"n={n}, ℓ={ell}"
    assert pfaffian_poly(1, sphere_curvature(2)) == pytest.approx(1.0)
    assert pfaffian_poly(2, sphere_curvature(4)) == pytest.approx(3.0)


def test_explicit_and_matching_paths_agree():
    """المسار الصريح والسريع على S∧g العشوائي في البعد 4"""
    rng = np.random.default_rng(11)
    a = rng.normal(size=(4, 4))
    S = DenseTensor.from_array(a + a.T, 'll')
    identity = DenseTensor.from_array(np.eye(4), 'll')
    # مع المقياس الإقليدي لا فرق بين الفتحات العلوية والسفلية
    R = DenseTensor.from_array(kulkarni_nomizu(S, identity).components, 'lluu')
    for ell in (1, 2):
        explicit = pfaffian_poly(ell, R, method='explicit')
        fast = pfaffian_poly(ell, R, method='matching')
        assert explicit == pytest.approx(fast, rel=1e-10, abs=1e-10)


def test_pfaffian_above_half_dimension_is_zero():
    assert pfaffian_poly(2, sphere_curvature(3)) == 0.0
    assert pfaffian_poly(0, sphere_curvature(3)) == 1.0


def test_pfaffian_rejects_bad_input():
    with pytest.raises(TensorError):
        pfaffian_poly(1, DenseTensor.from_array(np.zeros((2, 2, 2, 2)), 'llll'))
    with pytest.raises(TensorError):
        pfaffian_multilinear(2, [sphere_curvature(4)])
    with pytest.raises(TensorError):
        pfaffian_poly(1, sphere_curvature(4), method='bogus')


def test_pfaffian_field_matches_scalar_path():
    R = sphere_curvature(4).components
    batch = np.stack([R, 2.0 * R, -R])
    values = pfaffian_field(2, batch)
    assert np.allclose(values, [3.0, 12.0, 3.0])
    assert np.allclose(pfaffian_field(1, batch), [6.0, 12.0, -6.0])


def test_multilinear_is_symmetric_in_factors():
    rng = np.random.default_rng(5)
    factors = []
    for _ in range(2):
        a = rng.normal(size=(4, 4))
        S = DenseTensor.from_array(a + a.T, 'll')
        identity = DenseTensor.from_array(np.eye(4), 'll')
        factors.append(DenseTensor.from_array(kulkarni_nomizu(S, identity).components, 'lluu'))
    forward = pfaffian_multilinear(2, factors)
    backward = pfaffian_multilinear(2, factors[::-1])
    assert forward == pytest.approx(backward)


def test_contract_matches_explicit_loops():
    rng = np.random.default_rng(17)
    T = DenseTensor.from_array(rng.normal(size=(3, 3, 3, 3)), 'ulul')
    expected = np.zeros((3, 3))
    for b in range(3):
        for c in range(3):
            for a in range(3):
                expected[b, c] += T.components[a, b, c, a]
    traced = contract(T, 0, 3)
    assert traced.variance == 'lu'
    assert np.allclose(traced.components, expected, atol=1e-14)


def test_contracted_kronecker_drops_one_rank():
    """δ^{a₁…a_k}_{b₁…b_k} منكمشاً على زوج واحد = ((n−k+1)/k)·δ_{k−1}"""
    for n in range(1, 6):
        for k in range(1, n + 1):
            delta = generalized_kronecker(k, n)
            expected = (n - k + 1) / k * generalized_kronecker(k - 1, n).components
            for upper, lower in ((k - 1, 2 * k - 1), (0, k)):
                traced = contract(delta, upper, lower)
                assert np.allclose(traced.components, expected, atol=1e-12), (k, n, upper)


def _raised_kulkarni(S: np.ndarray, g: np.ndarray) -> DenseTensor:
    g_inv = np.linalg.inv(g)
    comps = np.einsum('abef,ec,fd->abcd', kulkarni_nomizu_array(S, g), g_inv, g_inv)
    return DenseTensor.from_array(comps, 'lluu')


def test_pfaffian_polarization_with_explicit_metric():
    """Pf₂(T + tG) = Pf(T,T) + 2t·Pf(T,G) + t²·Pf(G,G) مع G = ½g∧g ومقياس غير إقليدي"""
    rng = np.random.default_rng(23)
    a = rng.normal(size=(4, 4))
    S = a + a.T
    b = rng.normal(size=(4, 4))
    g = b @ b.T + 4.0 * np.eye(4)
    T = _raised_kulkarni(S, g)
    G = _raised_kulkarni(g, g).scale(0.5)
    assert G.allclose(sphere_curvature(4), atol=1e-12)

    mixed = {s: pfaffian_multilinear(2, [T] * (2 - s) + [G] * s) for s in range(3)}
    assert mixed[2] == pytest.approx(3.0)
    for t in (-1.5, 0.5, 2.0):
        expected = mixed[0] + 2.0 * t * mixed[1] + t * t * mixed[2]
        assert pfaffian_poly(2, T + G.scale(t)) == pytest.approx(expected, rel=1e-9, abs=1e-9), t

    # في إطار متعامد لـ g يصبح S هو C⁻¹SC⁻ᵀ والمقياس هو δ
    C = np.linalg.cholesky(g)
    C_inv = np.linalg.inv(C)
    frame = _raised_kulkarni(C_inv @ S @ C_inv.T, np.eye(4))
    for s in range(3):
        value = pfaffian_multilinear(2, [frame] * (2 - s) + [G] * s)
        print(f"{'✅' if value == pytest.approx(mixed[s], rel=1e-9) else '❌'} s={s}: {value:.10f}")
        assert value == pytest.approx(mixed[s], rel=1e-9, abs=1e-9)
    assert pfaffian_poly(1, T) == pytest.approx(3.0 * np.trace(np.linalg.solve(g, S)), rel=1e-10)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
