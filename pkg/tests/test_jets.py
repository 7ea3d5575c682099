# tests/test_jets.py
"""
🧪 اختبار المتسلسلات المقطوعة: الحساب الكسري الدقيق، المقلوب، والتماثل
"""

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from fractions import Fraction

import pytest

from core import exprlang as ex
from core.errors import JetError, NonInvertibleError, NonPolynomialError, ParityError
from core.jets import (EVEN, ODD, Jet, JetMatrix, Poly, jet_diff_rho, jet_diff_x, jet_invert, jet_matrix_invert,
                       jet_mul, to_fraction)


def test_to_fraction_is_exact():
    test_cases = [
        (0.1, Fraction(1, 10)),
        (3, Fraction(3)),
        ("2/7", Fraction(2, 7)),
        (Fraction(5, 3), Fraction(5, 3)),
    ]
    for value, expected in test_cases:
        result = to_fraction(value)
        print(f"{'✅' if result == expected else '❌'} {value!r} -> {result}")
        assert result == expected
    with pytest.raises(JetError):
        to_fraction(True)
    with pytest.raises(JetError):
        to_fraction(float('nan'))


def test_poly_from_expression():
    p = Poly.from_expr('x1^2 - 3*x1*x2 + 1/2', ['x1', 'x2'])
    assert p.terms == {(2, 0): 1, (1, 1): -3, (0, 0): Fraction(1, 2)}
    assert p.degree == 2
    assert p.evaluate_exact([1, 1]) == Fraction(-3, 2)
    for bad in ('sin(x1)', 'x1/x2', 'x1^0.5', 'x1^-1', 'y'):
        with pytest.raises(NonPolynomialError):
            Poly.from_expr(bad, ['x1', 'x2'])


def test_poly_truncated_inverse():
    x = Poly.variable(0, 1, order=4)
    one_plus_x = Poly.constant(1, 1, order=4) + x
    inv = one_plus_x.inverse()
    assert inv.terms == {(0,): 1, (1,): -1, (2,): 1, (3,): -1, (4,): 1}
    assert (inv * one_plus_x) == 1
    with pytest.raises(NonInvertibleError):
        x.inverse()
    with pytest.raises(NonInvertibleError):
        (Poly.constant(1, 1) + Poly.variable(0, 1)).inverse()


def test_poly_derivatives():
    p = Poly.from_expr('x1^3*x2 + x2^2', ['x1', 'x2'])
    assert p.diff(0) == Poly.from_expr('3*x1^2*x2', ['x1', 'x2'])
    assert p.laplacian() == Poly.from_expr('6*x1*x2 + 2', ['x1', 'x2'])
    with pytest.raises(JetError):
        p.diff(2)


def test_jet_product_and_inverse():
    one = Jet.constant(1, 0, 5)
    rho = Jet.monomial(1, 1, 0, 5)
    geometric = jet_invert(one - rho)
    assert all(c == 1 for c in geometric.coeffs)
    assert jet_mul(geometric, one - rho) == one
    with pytest.raises(NonInvertibleError):
        jet_invert(rho)


def test_shift_lower_and_derivatives():
    nvars = 1
    x = Poly.variable(0, nvars)
    jet = Jet([Poly.zero(nvars), Poly.zero(nvars), x, x * x])
    lowered = jet.lower(2)
    assert lowered.coeffs == (x, x * x)
    assert jet.shift(1).coeffs[3] == x
    with pytest.raises(JetError):
        Jet([x, x]).lower(1)
    d_rho = jet_diff_rho(jet)
    assert d_rho.coeffs == (Poly.zero(nvars), x * 2, x * x * 3)
    d_x = jet_diff_x(jet, 0)
    assert d_x.coeffs[3] == x * 2


def test_parity_tracking():
    even = Jet.monomial(2, 2, 0, 4)
    odd = Jet.monomial(1, 1, 0, 4)
    assert even.parity == EVEN and odd.parity == ODD
    assert (even * odd).parity == ODD
    assert (odd * odd).parity == EVEN
    assert (even + odd).parity is None
    with pytest.raises(ParityError):
        odd.assert_parity(EVEN)
    mixed = even + odd
    with pytest.raises(ParityError) as info:
        mixed.with_parity(EVEN)
    assert info.value.details == {'power': 1}
    # above the horizon odd terms are allowed
    assert mixed.with_parity(EVEN, horizon=0).parity == EVEN


def test_jet_matrix_inverse():
    nvars, order = 1, 4
    x = Poly.variable(0, nvars)
    a = Jet([Poly.constant(2, nvars), x, Poly.zero(nvars), Poly.zero(nvars), Poly.zero(nvars)])
    b = Jet.monomial(1, 1, nvars, order)
    c = Jet.monomial(3, 2, nvars, order)
    d = Jet.constant(1, nvars, order)
    M = JetMatrix([[a, b], [c, d]])
    inv = jet_matrix_invert(M)
    assert (M @ inv).equals_identity()
    assert (inv @ M).equals_identity()

    singular = JetMatrix([[Jet.monomial(1, 1, nvars, order), b], [c, Jet.monomial(1, 2, nvars, order)]])
    with pytest.raises(NonInvertibleError):
        jet_matrix_invert(singular)

    D = JetMatrix.diagonal([a, d])
    assert D[0, 1].is_zero()
    assert (D @ jet_matrix_invert(D)).equals_identity()


def test_jet_to_expression_round_trip_values():
    x = Poly.variable(0, 1)
    jet = Jet([x, Poly.zero(1), x * x * Fraction(1, 2)])
    value = ex.evaluate(jet.to_expr('rho', ['x1']), {'rho': 0.5, 'x1': 2.0})
    assert value == pytest.approx(jet.evaluate(0.5, [2.0]))
    assert value == pytest.approx(2.0 + 0.25 * 2.0)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
