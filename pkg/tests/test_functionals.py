# tests/test_functionals.py
"""
🧪 اختبار المتطابقات الرئيسية: GBC المضغوط والمنظم، طاقة ويلمور، وتكاملات الصلابة
"""

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import math

import pytest

from core import catalog
from core.errors import GateError, NotMinimalError
from core.expansion import solve_minimal_expansion
from core.functionals import (codim_one_weyl_residual, compact_gbc_check, edge_term, einstein_gap_residual,
                              gbc_weight, renormalized_area, renormalized_gbc_check, renormalized_willmore_energy,
                              rigidity_coefficient, rigidity_functionals, square_coefficient)

GRID = 12
COARSE_GRID = 8


def test_gbc_weights():
    test_cases = [
        # (k, r, weight)
        (2, 1, 1.0),
        (4, 1, 0.5),
        (4, 2, 1.0),
        (6, 1, 0.125),
        (6, 3, 1.0),
    ]
    for k, r, expected in test_cases:
        assert gbc_weight(k, r) == pytest.approx(expected), (k, r)


def test_compact_gbc_identity():
    test_cases = [
        # (immersion, χ, area)
        (catalog.equator_sphere(2, 3), 2, 4.0 * math.pi),
        (catalog.clifford_torus(), 0, 2.0 * math.pi ** 2),
        (catalog.generalized_clifford(2, 2), 4, 4.0 * math.pi ** 2),
    ]
    for imm, chi, area in test_cases:
        report = compact_gbc_check(imm, grid=GRID)
        print(f"{'✅' if report.relative_residual < 1e-8 else '❌'} {imm.name}: "
              f"LHS={report.lhs:.8f} RHS={report.rhs:.8f}")
        assert report.chi == chi
        assert report.chi_recovered == pytest.approx(chi, abs=1e-8)
        assert report.area == pytest.approx(area, rel=1e-8)
        assert report.relative_residual < 1e-8


def test_s2_times_s2_pfaffian_integrals():
    # the integrands are constant, so a coarse grid and its refinement already agree
    report = compact_gbc_check(catalog.generalized_clifford(2, 2), grid=COARSE_GRID, refine=True)
    area = 4.0 * math.pi ** 2
    # 2λ·Pf₁(Ŵ) = −4 و Pf₂(Ŵ) = 3
    assert report.pfaffian_integrals[1] == pytest.approx(-4.0 * area, rel=1e-8)
    assert report.pfaffian_integrals[2] == pytest.approx(3.0 * area, rel=1e-8)
    assert report.refinement['grid'] == 2 * COARSE_GRID
    data = report.to_dict()
    assert set(data['pfaffian_integrals']) == {'1', '2'}


def test_compact_gbc_rejections():
    with pytest.raises(GateError):
        compact_gbc_check(catalog.generalized_clifford(1, 2), grid=GRID)
    with pytest.raises(GateError):
        compact_gbc_check(catalog.totally_geodesic_hyperbolic(2, 3), grid=GRID)
    with pytest.raises(NotMinimalError):
        compact_gbc_check(catalog.sphere_in_euclidean(2), grid=GRID)


def test_renormalized_gbc_on_hyperbolic_plane():
    imm = catalog.totally_geodesic_hyperbolic(2, 3)
    report = renormalized_gbc_check(imm)
    assert report.kind == 'renormalized'
    assert report.area == pytest.approx(-2.0 * math.pi, abs=1e-4)
    assert report.chi_recovered == pytest.approx(1.0, abs=1e-4)
    assert report.edge_term == 0.0
    assert report.relative_residual < 1e-4


def test_renormalized_gbc_with_cusp_edge():
    """𝒜 = −1 والحافة ρ = 1 تساهم بـ ∮κ_g = −1"""
    imm = catalog.totally_geodesic_hyperbolic(2, 3, model='cusp')
    assert edge_term(imm, grid=GRID) == pytest.approx(-1.0, abs=1e-5)
    report = renormalized_gbc_check(imm, grid=GRID)
    assert report.area == pytest.approx(-1.0, abs=1e-4)
    assert report.chi == 0
    assert report.chi_recovered == pytest.approx(0.0, abs=1e-4)
    assert abs(report.lhs - report.rhs) < 1e-4


def test_renormalized_gbc_on_hyperbolic_four_space():
    """H⁴ ⊂ H⁵: 𝒜 = 4π²/3 و (2π)²·1 = 3·𝒜 والتكاملات 𝒫 تنعدم"""
    imm = catalog.totally_geodesic_hyperbolic(4, 5)
    report = renormalized_gbc_check(imm, grid=GRID)
    print(f"{'✅' if report.relative_residual < 1e-2 else '❌'} {imm.name}: "
          f"𝒜={report.area:.8f} LHS={report.lhs:.8f} RHS={report.rhs:.8f}")
    assert report.area == pytest.approx(4.0 * math.pi ** 2 / 3.0, rel=1e-3)
    assert report.chi_recovered == pytest.approx(1.0, abs=1e-2)
    for r, value in report.pfaffian_integrals.items():
        assert abs(value) < 1e-2, r
    assert report.relative_residual < 1e-2


def test_renormalized_gbc_on_perturbed_graph():
    """رسم أصغري تقاربياً بمعامل حر 0.1·cos(2πx₁): χ = 0 على القمع المقطوع"""
    imm = solve_minimal_expansion(['0'], 2, 3).to_immersion(free=['0.1*cos(2*pi*x1)'])
    residuals = []
    for grid in (GRID, 2 * GRID):
        report = renormalized_gbc_check(imm, grid=grid)
        print(f"{'✅' if report.relative_residual < 1e-2 else '❌'} grid={grid}: "
              f"LHS={report.lhs:.8f} RHS={report.rhs:.8f} residual={report.relative_residual:.3e}")
        assert report.chi == 0
        assert report.willmore_defect > 0
        residuals.append(report.relative_residual)
    assert residuals[-1] < 1e-2


def test_renormalized_area_and_willmore_energy():
    imm = catalog.totally_geodesic_hyperbolic(2, 3)
    assert renormalized_area(imm).finite_part == pytest.approx(-2.0 * math.pi, abs=1e-4)
    # λ + |H|² = −1 على سطح أصغري، فالطاقة تساوي −𝒜
    assert renormalized_willmore_energy(imm).finite_part == pytest.approx(2.0 * math.pi, abs=1e-4)
    with pytest.raises(GateError):
        renormalized_willmore_energy(catalog.totally_geodesic_hyperbolic(3, 4))


def test_reduction_coefficients():
    test_cases = [
        # (k, ℓ, λ, coefficient)
        (2, 1, -1.0, 1.0),
        (4, 1, -1.0, 2.0),
        (4, 2, -1.0, 1.0),
        (6, 1, -1.0, 24.0),
        (4, 1, 1.0, -2.0),
    ]
    for k, ell, lam, expected in test_cases:
        assert rigidity_coefficient(k, ell, lam) == pytest.approx(expected), (k, ell, lam)
    assert square_coefficient(4, 1.0) == pytest.approx(1.0)


def test_rigidity_on_clifford_torus():
    report = rigidity_functionals(catalog.clifford_torus(), grid=GRID)
    assert report.straightened[1] == pytest.approx(4.0 * math.pi ** 2, rel=1e-6)
    assert report.max_relative_mismatch() < 1e-6
    assert report.gaps['totally_geodesic_l1'] > 0
    assert report.einstein_gap_residual < 1e-8
    with pytest.raises(GateError):
        rigidity_functionals(catalog.clifford_torus(), ells=[2], grid=GRID)


def test_rigidity_on_s2_times_s2():
    report = rigidity_functionals(catalog.generalized_clifford(2, 2), grid=8)
    area = 4.0 * math.pi ** 2
    assert report.direct[2] == pytest.approx(16.0 * area, rel=1e-6)
    assert report.straightened[1] == pytest.approx(-8.0 * area, rel=1e-4)
    assert report.max_relative_mismatch() < 1e-4
    assert report.square_direct == pytest.approx(4.0 * area, rel=1e-6)
    # S²×S² أينشتاين لكنه ليس مسطحاً تطابقياً
    assert report.gaps['einstein'] == pytest.approx(0.0, abs=1e-4 * area)
    assert report.gaps['locally_conformally_flat'] == pytest.approx(64.0 * area / 3.0 - 16.0 * area, rel=1e-4)
    assert report.codim_one_weyl_residual < 1e-8
    assert set(report.to_dict()) >= {'straightened', 'reduced', 'direct', 'gaps', 'max_relative_mismatch'}


def test_pointwise_rigidity_identities():
    imm = catalog.generalized_clifford(1, 2)
    pts = imm.box.samples(6, 1)
    assert einstein_gap_residual(imm, pts) < 1e-8
    assert codim_one_weyl_residual(imm, pts) < 1e-8
    with pytest.raises(GateError):
        codim_one_weyl_residual(catalog.clifford_torus(), catalog.clifford_torus().box.samples(2))
    with pytest.raises(GateError):
        codim_one_weyl_residual(catalog.equator_sphere(3, 5), catalog.equator_sphere(3, 5).box.samples(2))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
