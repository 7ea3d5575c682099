# tests/test_renorm.py
"""
🧪 اختبار التنظيم: ملاءمة ε، القطع بالتنصيف، واستقلال دالة التعريف
"""

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import math

import numpy as np
import pytest

from core import catalog
from core.errors import CutoffError, FitError, RenormalizationError
from core.renorm import (DEFAULT_LADDER, CutoffIntegralSamples, convergent_integral, cutoff_integral,
                         defining_function_invariance, epsilon_fit, parity_report, renormalized_integral,
                         solve_cutoff)
from core.submanifold import divergence_field

LADDER = np.asarray(DEFAULT_LADDER)


def test_samples_validation():
    with pytest.raises(FitError):
        CutoffIntegralSamples([0.1, 0.2], [1.0, 2.0], 2)
    with pytest.raises(FitError):
        CutoffIntegralSamples([0.2, 0.1], [1.0], 2)
    with pytest.raises(FitError):
        CutoffIntegralSamples([0.2, -0.1], [1.0, 2.0], 2)
    test_cases = [
        (2, [-1]),
        (3, [-2]),
        (4, [-3, -1]),
        (5, [-4, -2]),
    ]
    for k, powers in test_cases:
        assert CutoffIntegralSamples(LADDER, LADDER, k).singular_powers() == powers, k


def test_even_dimension_fit_recovers_finite_part():
    values = 3.0 / LADDER - 2.0 * math.pi + 0.5 * LADDER - 0.25 * LADDER ** 2
    fit = epsilon_fit(CutoffIntegralSamples(LADDER, values, 2))
    print(f"✅ الجزء المنتهي: {fit.finite_part:.12f} (متوقع: {-2.0 * math.pi:.12f})")
    assert fit.finite_part == pytest.approx(-2.0 * math.pi, abs=1e-8)
    assert fit.coefficient(-1) == pytest.approx(3.0, abs=1e-8)
    assert fit.log_coefficient is None
    assert fit.reliable
    assert fit.residual < 1e-10
    assert set(fit.tail) == {'tail^1', 'tail^2', 'tail^3'}


def test_odd_dimension_fit_separates_log_term():
    values = 2.0 / LADDER ** 2 + 0.7 * np.log(LADDER) + 1.5 + LADDER
    fit = epsilon_fit(CutoffIntegralSamples(LADDER, values, 3))
    assert fit.finite_part == pytest.approx(1.5, abs=1e-7)
    assert fit.log_coefficient == pytest.approx(0.7, abs=1e-7)
    assert fit.coefficient(-2) == pytest.approx(2.0, abs=1e-8)


def test_fit_needs_enough_samples():
    eps = LADDER[:4]
    with pytest.raises(FitError) as info:
        epsilon_fit(CutoffIntegralSamples(eps, 1.0 / eps, 2))
    assert 'basis' in info.value.details
    # a tail-free fit fits in the same four samples
    fit = epsilon_fit(CutoffIntegralSamples(eps, 1.0 / eps + 4.0, 2), tail_order=0)
    assert fit.finite_part == pytest.approx(4.0, abs=1e-10)


def test_unreliable_fit_is_flagged():
    values = 1.0 / LADDER
    fit = epsilon_fit(CutoffIntegralSamples(LADDER, values, 2), condition_limit=1.0)
    assert not fit.reliable


def test_hyperbolic_plane_renormalized_area():
    """|{ρ > ε}| = 2π/ε − 2π + πε/2 في كرة H²"""
    imm = catalog.totally_geodesic_hyperbolic(2, 3)
    assert cutoff_integral(imm, 1.0, None, 0.1) == pytest.approx(20.0 * math.pi - 2.0 * math.pi + 0.05 * math.pi,
                                                                 rel=1e-8)
    fit = renormalized_integral(imm)
    assert fit.finite_part == pytest.approx(-2.0 * math.pi, abs=1e-4)
    assert fit.coefficient(-1) == pytest.approx(2.0 * math.pi, rel=1e-6)
    threaded = renormalized_integral(imm, threads=2)
    assert threaded.finite_part == pytest.approx(fit.finite_part, abs=1e-12)
    data = fit.to_dict()
    assert len(data['samples']) == len(DEFAULT_LADDER)


def test_hyperbolic_three_space_has_log_term():
    """H³ ⊂ H⁴: 4π∫(ρ⁻³ − ρ⁻¹/2 + ρ/16) يعطي 𝓛 = 2π والجزء المنتهي −2π log 2"""
    fit = renormalized_integral(catalog.totally_geodesic_hyperbolic(3, 4), grid=16)
    assert fit.log_coefficient == pytest.approx(2.0 * math.pi, abs=1e-5)
    assert fit.finite_part == pytest.approx(-2.0 * math.pi * math.log(2.0), abs=1e-4)
    assert fit.coefficient(-2) == pytest.approx(2.0 * math.pi, rel=1e-6)


def test_cutoff_roots_are_relatively_accurate_near_the_boundary():
    imm = catalog.totally_geodesic_hyperbolic(3, 4)
    base = imm.box.samples(count=3, seed=5)[:, 1:]
    for eps in DEFAULT_LADDER:
        assert np.array_equal(solve_cutoff(imm, None, eps, base), np.full(3, eps))
        roots = solve_cutoff(imm, 'rho', eps, base)
        assert np.max(np.abs(roots - eps)) < 1e-13 * eps, eps
    with pytest.raises(CutoffError):
        solve_cutoff(imm, None, 5.0, base)


def test_cutoff_errors():
    with pytest.raises(CutoffError):
        cutoff_integral(catalog.clifford_torus(), 1.0, None, 0.1)
    imm = catalog.totally_geodesic_hyperbolic(2, 3)
    with pytest.raises(CutoffError):
        cutoff_integral(imm, 1.0, None, 1e-12)
    with pytest.raises(CutoffError):
        cutoff_integral(imm, 1.0, 'rho + q', 0.1)
    base = np.array([[0.5], [2.0]])
    roots = solve_cutoff(imm, 'rho*(1 + rho^2/8)', 0.1, base)
    assert np.allclose(roots * (1.0 + roots ** 2 / 8.0), 0.1, atol=1e-10)
    with pytest.raises(CutoffError):
        solve_cutoff(imm, 'rho', 5.0, base)


def test_parity_reports():
    imm = catalog.totally_geodesic_hyperbolic(2, 3)
    test_cases = [
        # (defining function, even)
        ('rho', True),
        ('rho*exp(rho^2)', True),
        ('rho*(1 + rho^3)', True),
        ('rho + rho^2', False),
    ]
    for fn, even in test_cases:
        report = parity_report(imm, fn)
        print(f"{'✅' if report.even == even else '❌'} {fn}: odd_order = {report.odd_order}")
        assert report.even is even, fn
        assert report.positive


def test_defining_function_invariance_on_even_dimension():
    imm = catalog.totally_geodesic_hyperbolic(2, 3)
    report = defining_function_invariance(imm, 1.0, ['rho', 'rho*(1 + rho^2/8)'])
    assert report.spread < 1e-3
    assert report.rejected == []
    with pytest.raises(RenormalizationError):
        defining_function_invariance(imm, 1.0, ['rho', 'rho + rho^2'])
    relaxed = defining_function_invariance(imm, 1.0, ['rho', 'rho + rho^2'], strict=False)
    assert len(relaxed.rejected) == 1
    assert len(relaxed.finite_parts) == 2


def test_convergent_integral_of_weight_minus_k_density():
    """∫ ρ² darea = ∫₀² (1 − ρ²/4)·2π dρ = 8π/3"""
    imm = catalog.totally_geodesic_hyperbolic(2, 3)
    assert convergent_integral(imm, 'rho^2') == pytest.approx(8.0 * math.pi / 3.0, rel=1e-6)


def test_renormalized_divergence_vanishes():
    """على القمع: ∫_{ρ>ε} div ω = ω_ρ(1) − ω_ρ(ε)، فالحقل 1/ρ − ρ يعطي −1/ε + ε بجزء منتهٍ صفري"""
    imm = catalog.totally_geodesic_hyperbolic(2, 3, model='cusp')
    test_cases = [
        # (one-form, finite part)
        (['1/rho - rho', 'rho*cos(2*pi*x1)'], 0.0),
        (['1/rho - rho^3', 0.0], 0.0),
        (['1 - rho', 0.0], -1.0),
    ]
    for one_form, expected in test_cases:
        fit = renormalized_integral(imm, lambda p, w=one_form: divergence_field(imm, w, p), grid=12)
        print(f"{'✅' if abs(fit.finite_part - expected) < 1e-3 else '❌'} {one_form}: {fit.finite_part:.3e}")
        assert fit.finite_part == pytest.approx(expected, abs=1e-3), one_form


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
