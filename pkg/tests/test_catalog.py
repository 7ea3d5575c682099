# tests/test_catalog.py
"""
🧪 اختبار الكتالوج: البحث بالاسم، الاقتراحات، والبيانات الوصفية
"""

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import pytest

from core import catalog
from core.chartgeom import DerivativeBackend
from core.errors import ChartError, ImmersionError


def test_every_listed_entry_builds():
    defaults = {
        'euclidean': {'n': 3},
        'round_sphere': {'n': 2},
        'hyperbolic_half_space': {'n': 3},
        'hyperbolic_ball': {'n': 3},
        'product_spheres': {'p': 1, 'r1': 1.0, 'q': 2, 'r2': 1.0},
        'sphere_join': {'p': 1, 'q': 1},
        'canonical_ambient': {'base': {'name': 'round_sphere', 'params': {'n': 2}}, 'lam': 1.0},
        'affine_plane': {'k': 2, 'n': 3},
        'equator_sphere': {'k': 2, 'n': 3},
        'sphere_in_euclidean': {'k': 2},
        'clifford_torus': {},
        'generalized_clifford': {'p': 2, 'q': 2},
        'totally_geodesic_hyperbolic': {'k': 2, 'n': 3},
        'hyperbolic_graph': {'k': 2, 'n': 3},
    }
    for row in catalog.listing():
        params = dict(defaults[row['name']])
        if row['kind'] == 'chart':
            obj = catalog.get_chart(row['name'], **params)
        else:
            obj = catalog.get_immersion(row['name'], **params)
        print(f"✅ {row['kind']} '{row['name']}' -> {obj!r}")
        assert row['description']


def test_unknown_names_suggest_close_matches():
    with pytest.raises(ChartError) as info:
        catalog.get_chart('round_spere', n=2)
    assert 'round_sphere' in info.value.details['suggestions']

    with pytest.raises(ImmersionError) as info:
        catalog.get_immersion('cliford_torus')
    assert 'clifford_torus' in info.value.details['suggestions']


def test_bad_parameters_become_catalog_errors():
    with pytest.raises(ChartError):
        catalog.get_chart('round_sphere', dim=2)
    with pytest.raises(ImmersionError):
        catalog.get_immersion('equator_sphere', k=3, n=3)
    with pytest.raises(ImmersionError):
        catalog.get_immersion('totally_geodesic_hyperbolic', k=2, n=3, model='disk')


def test_topological_metadata():
    test_cases = [
        # (name, params, euler characteristic, compact, λ, minimal)
        ('equator_sphere', {'k': 2, 'n': 4}, 2, True, 1.0, True),
        ('sphere_in_euclidean', {'k': 3}, 0, True, 0.0, False),
        ('clifford_torus', {}, 0, True, 1.0, True),
        ('generalized_clifford', {'p': 2, 'q': 2}, 4, True, 1.0, True),
        ('totally_geodesic_hyperbolic', {'k': 2, 'n': 3}, 1, False, -1.0, True),
        ('totally_geodesic_hyperbolic', {'k': 2, 'n': 3, 'model': 'cusp'}, 0, False, -1.0, True),
    ]
    for name, params, chi, compact, lam, minimal in test_cases:
        info = catalog.get_immersion(name, **params).info
        assert info.euler_characteristic == chi, name
        assert info.compact is compact, name
        assert info.einstein_lambda == lam, name
        assert info.minimal is minimal, name


def test_conformally_compact_entries_mark_boundary_axis():
    ball = catalog.totally_geodesic_hyperbolic(2, 3)
    cusp = catalog.totally_geodesic_hyperbolic(2, 3, model='cusp')
    assert ball.info.conformally_compact and ball.info.boundary_axis == 0
    assert cusp.info.edge == {'axis': 0, 'value': 1.0}
    assert cusp.box.periodic == (False, True)
    assert not catalog.clifford_torus().info.conformally_compact


def test_canonical_ambient_layout():
    base = catalog.round_sphere(2)
    ambient = catalog.canonical_ambient(base, 1.0)
    assert ambient.coordinates == ('t', 'th1', 'th2', 'r')
    assert ambient.dim == base.dim + 2
    assert ambient.box.lower[-1] == pytest.approx(-0.1)
    with pytest.raises(ChartError):
        catalog.canonical_ambient(catalog.euclidean(2).with_backend(DerivativeBackend.CENTRAL_DIFFERENCE), 0.0)


def test_listing_rows():
    rows = catalog.listing()
    kinds = {row['kind'] for row in rows}
    assert kinds == {'chart', 'immersion'}
    names = [row['name'] for row in rows]
    assert len(names) == len(set(names))
    assert 'canonical_ambient' in names


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
