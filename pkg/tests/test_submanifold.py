# tests/test_submanifold.py
"""
🧪 اختبار الهندسة الخارجية: الشكل الأساسي الثاني، متطابقات غاوس، والتغاير المطابق
"""

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import math

import numpy as np
import pytest

from core import catalog
from core.chartgeom import DomainBox
from core.errors import ImmersionError, RankDeficiencyError
from core.submanifold import (ImmersionChart, SubmanifoldGeometry, area, conformal_covariance_residual,
                              divergence_field, extrinsic_schouten, fialkow, field_values, frame_at,
                              gauss_residual, gauss_weyl_residual, integrate, laplacian_field, residual_over,
                              second_fundamental_form, willmore_energy)

GRID = 24


def test_round_sphere_scalars():
    imm = catalog.sphere_in_euclidean(2, radius=2.0)
    pts = imm.box.samples(count=10, seed=0)
    geo = SubmanifoldGeometry.at(imm, pts)
    test_cases = [
        ('mean_curvature_squared', geo.mean_curvature_squared, 0.25),
        ('second_squared', geo.second_squared, 0.5),
        ('trace_free_squared', geo.trace_free_squared, 0.0),
        ('intrinsic_scalar', geo.intrinsic.scalar, 0.5),
        ('fialkow_scalar', geo.fialkow_scalar(), 0.0),
    ]
    for name, values, expected in test_cases:
        ok = np.allclose(values, expected, atol=1e-9)
        print(f"{'✅' if ok else '❌'} {name}: {float(np.mean(values)):.6f} (متوقع: {expected})")
        assert ok, name


def test_clifford_torus_scalars():
    imm = catalog.clifford_torus()
    geo = SubmanifoldGeometry.at(imm, imm.box.samples(count=10, seed=1))
    assert np.allclose(geo.mean_curvature_squared, 0.0, atol=1e-10)
    assert np.allclose(geo.second_squared, 2.0, atol=1e-9)
    assert np.allclose(geo.trace_free_squared, 2.0, atol=1e-9)
    assert np.allclose(geo.intrinsic.scalar, 0.0, atol=1e-9)
    # S^3 is conformally flat
    assert np.allclose(geo.weyl_full_trace, 0.0, atol=1e-9)


def test_pointwise_operations_on_unit_sphere():
    imm = catalog.sphere_in_euclidean(2)
    x = [1.1, 0.4]
    frame = frame_at(imm, x)
    assert frame.tangent.shape == (3, 2)
    assert frame.normals.shape == (1, 3)
    assert frame.orthonormality_residual(np.eye(3)) < 1e-12

    data = second_fundamental_form(imm, x)
    assert data.L.shape == (2, 2, 1)
    assert np.allclose(np.abs(data.L[:, :, 0]), np.abs(frame.induced_metric), atol=1e-10)
    assert data.second_squared == pytest.approx(2.0)
    assert data.trace_free_squared == pytest.approx(0.0, abs=1e-12)

    assert gauss_residual(imm, x) < 1e-10
    # the Fialkow tensor needs k ≥ 3
    with pytest.raises(ImmersionError):
        gauss_weyl_residual(imm, x)
    assert gauss_weyl_residual(catalog.sphere_in_euclidean(3), [1.1, 0.4, 2.0]) < 1e-10


def test_extrinsic_schouten_is_half_the_metric_for_round_spheres():
    """𝒫 = ½h على كرة جيوديسية في S³ وعلى الكرة الواحدية في R³"""
    for imm in (catalog.equator_sphere(2, 3), catalog.sphere_in_euclidean(2)):
        x = [0.9, 2.0]
        P = extrinsic_schouten(imm, x).components
        h = frame_at(imm, x).induced_metric
        assert np.allclose(P, 0.5 * h, atol=1e-9), imm.name


def test_fialkow_trace_equals_scalar():
    imm = catalog.generalized_clifford(1, 2)
    x = [0.3, 1.2, 2.5]
    G, F = fialkow(imm, x)
    # |L̊|² = 3 والهدف مسطح تطابقياً: G = 3/(2(k−1))
    assert G == pytest.approx(0.75, abs=1e-9)
    h_inv = second_fundamental_form(imm, x).induced_inverse
    assert np.einsum('ab,ab->', h_inv, F.components) == pytest.approx(G, abs=1e-9)
    G2, F2 = fialkow(catalog.clifford_torus(), [0.5, 0.5])
    assert F2 is None
    assert G2 == pytest.approx(1.0, abs=1e-9)


def test_totally_geodesic_has_no_second_fundamental_form():
    imm = catalog.equator_sphere(2, 4)
    geo = SubmanifoldGeometry.at(imm, imm.box.samples(count=6, seed=2))
    assert np.max(np.abs(geo.second)) < 1e-10
    assert np.allclose(geo.intrinsic.scalar, 2.0, atol=1e-9)


def test_gauss_equation_residuals():
    test_cases = [
        (catalog.sphere_in_euclidean(2), 'gauss'),
        (catalog.clifford_torus(), 'gauss'),
        (catalog.generalized_clifford(1, 2), 'gauss'),
        (catalog.generalized_clifford(1, 2), 'gauss_weyl'),
        (catalog.sphere_in_euclidean(3), 'gauss_weyl'),
        (catalog.totally_geodesic_hyperbolic(3, 4, model='ball'), 'gauss_weyl'),
    ]
    for imm, which in test_cases:
        residual = residual_over(imm, imm.box.samples(count=6, seed=3), which)
        print(f"{'✅' if residual < 1e-8 else '❌'} {imm.name} {which}: {residual:.2e}")
        assert residual < 1e-8, f"{imm.name} {which}"
    with pytest.raises(ImmersionError):
        residual_over(catalog.clifford_torus(), np.array([[1.0, 1.0]]), 'codazzi')


def test_fialkow_tensor_requires_three_dimensions():
    imm = catalog.clifford_torus()
    geo = SubmanifoldGeometry.at(imm, np.array([[1.0, 2.0]]))
    with pytest.raises(ImmersionError):
        geo.fialkow_tensor()


def test_areas_and_willmore_energy():
    test_cases = [
        (catalog.sphere_in_euclidean(2), 4.0 * math.pi),
        (catalog.sphere_in_euclidean(2, radius=3.0), 36.0 * math.pi),
        (catalog.clifford_torus(), 2.0 * math.pi ** 2),
        (catalog.equator_sphere(2, 3), 4.0 * math.pi),
    ]
    for imm, expected in test_cases:
        assert area(imm, grid=GRID) == pytest.approx(expected, rel=1e-8), imm.name
    # the Willmore energy is conformally invariant, equal to the sphere area for round spheres
    assert willmore_energy(catalog.sphere_in_euclidean(2, radius=3.0), grid=GRID) == pytest.approx(4.0 * math.pi)
    assert willmore_energy(catalog.clifford_torus(), grid=GRID) == pytest.approx(2.0 * math.pi ** 2)
    with pytest.raises(ImmersionError):
        willmore_energy(catalog.sphere_in_euclidean(3), grid=8)


def test_integrate_expression_field():
    imm = catalog.sphere_in_euclidean(2)
    # ∫ z² = 4π/3
    assert integrate(imm, 'cos(th1)^2', grid=GRID) == pytest.approx(4.0 * math.pi / 3.0, rel=1e-8)
    with pytest.raises(ImmersionError):
        field_values(imm, 'q + 1', imm.box.samples(count=2))


def test_laplacian_of_first_eigenfunction():
    """Δ̄ بالإشارة الموجبة: Δ̄z = k·z على الكرة الواحدية"""
    imm = catalog.sphere_in_euclidean(2)
    pts = imm.box.samples(count=8, seed=4)
    expected = 2.0 * np.cos(pts[:, 0])
    assert np.allclose(laplacian_field(imm, 'cos(th1)', pts), expected, atol=1e-9)
    numeric = laplacian_field(imm, lambda p: np.cos(p[..., 0]), pts)
    assert np.allclose(numeric, expected, atol=1e-6)
    # ∇^a∇_a f = −Δ̄f
    div = divergence_field(imm, ['-sin(th1)', 0.0], pts)
    assert np.allclose(div, -expected, atol=1e-6)


def test_conformal_covariance_of_trace_free_form():
    imm = catalog.sphere_in_euclidean(2, radius=0.5)
    pts = imm.box.samples(count=6, seed=5)
    residual = conformal_covariance_residual(imm, '0.3*x1 - 0.2*x3^2', pts)
    assert residual < 1e-8


def test_immersion_validation():
    target = catalog.euclidean(3)
    box = DomainBox.from_intervals([(0.0, 1.0)] * 2)
    with pytest.raises(ImmersionError):
        ImmersionChart.from_expressions('short', target, ['u', 'v'], ['u', 'v'], box)
    with pytest.raises(ImmersionError):
        ImmersionChart.from_expressions('free', target, ['u', 'v'], ['u', 'v', 'w'], box)
    with pytest.raises(ImmersionError):
        ImmersionChart.from_expressions('full', target, ['u', 'v', 'w'], ['u', 'v', 'w'],
                                        DomainBox.from_intervals([(0.0, 1.0)] * 3))
    degenerate = ImmersionChart.from_expressions('fold', target, ['u', 'v'], ['u', 'u', 'v^2'], box)
    with pytest.raises(RankDeficiencyError) as info:
        SubmanifoldGeometry.at(degenerate, np.array([[0.5, 0.0]]))
    assert info.value.smallest_singular_value == pytest.approx(0.0, abs=1e-12)


def test_callable_immersion_matches_symbolic():
    symbolic = catalog.sphere_in_euclidean(2)

    def sphere_map(p):
        th, ph = p[..., 0], p[..., 1]
        return np.stack([np.cos(th), np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph)], axis=-1)

    numeric = ImmersionChart.from_callable('sphere_fd', symbolic.target, symbolic.coordinates, sphere_map,
                                           symbolic.box, info=symbolic.info)
    pts = symbolic.box.samples(count=5, seed=6)
    exact = SubmanifoldGeometry.at(symbolic, pts)
    approx = SubmanifoldGeometry.at(numeric, pts)
    assert np.allclose(exact.mean_curvature_squared, approx.mean_curvature_squared, atol=1e-5)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
