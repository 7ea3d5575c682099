# core/scenario_runner.py
"""
🎯 تشغيل سيناريو واحد: بناء الكائنات من الإعدادات ثم توجيه المهمة إلى وحداتها
"""

import logging
import math
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from . import __version__
from . import catalog
from . import exprlang as ex
from .ambient import (CanonicalAmbient, StraightInvariantSpec, ambient_laplacian_field, einstein_constant,
                      intrinsic_straightening, pfaffian_decomposition_residual, straightened_field,
                      tau_power_laplacian, willmore_field)
from .chartgeom import DomainBox, MetricChart, einstein_residual
from .errors import CutoffError, GeometryError, ScenarioError
from .expansion import minimality_order, solve_minimal_expansion
from .functionals import compact_gbc_check, renormalized_gbc_check, rigidity_functionals
from .renorm import (DEFAULT_LADDER, DEFAULT_TAIL_ORDER, FIT_CONDITION_LIMIT, MIN_CUTOFF_EPS,
                     defining_function_invariance, parity_report, renormalized_integral)
from .submanifold import (FieldLike, ImmersionChart, ImmersionInfo, SubmanifoldGeometry,
                          conformal_covariance_residual, residual_over)
from reporting.report import CheckResult, Report
from utils.time_utils import timed

logger = logging.getLogger(__name__)

DEFAULT_POINTS = 16

DEFAULT_TOLERANCES = {
    'pointwise': 1e-6,
    'ambient': 1e-5,
    'gbc': 1e-4,
    'renorm': 1e-4,
    'rigidity': 1e-4,
}

# حقول نقطية يمكن مقارنتها بقيمة متوقعة في verify.expected
POINTWISE_FIELDS = {
    'mean_curvature_squared': lambda geo: geo.mean_curvature_squared,
    'second_squared': lambda geo: geo.second_squared,
    'trace_free_squared': lambda geo: geo.trace_free_squared,
    'second_square_norm': lambda geo: geo.second_square_norm,
    'trace_free_square_norm': lambda geo: geo.trace_free_square_norm,
    'weyl_full_trace': lambda geo: geo.weyl_full_trace,
    'fialkow_scalar': lambda geo: geo.fialkow_scalar(),
    'intrinsic_scalar': lambda geo: geo.intrinsic.scalar,
    'intrinsic_pfaffian': lambda geo: geo.intrinsic.pfaffian(),
}

# أخطاء عددية تصبح فحوصات فاشلة بدلاً من إيقاف التشغيل
RECOVERABLE = (GeometryError, ArithmeticError, np.linalg.LinAlgError)


# ---------------------------------------------------------------------------
# Building objects from the scenario
# ---------------------------------------------------------------------------

def _box(spec: Dict[str, Any]) -> DomainBox:
    return DomainBox.from_intervals([tuple(iv) for iv in spec['box']], spec.get('periodic'))


def build_target(spec: Dict[str, Any]) -> MetricChart:
    if 'metric' in spec:
        return MetricChart.from_expressions(spec.get('name', 'custom'), spec['coordinates'], spec['metric'],
                                            _box(spec), riemannian=spec.get('riemannian', True))
    return catalog.get_chart(spec['name'], **dict(spec.get('params') or {}))


def build_immersion(config: Dict[str, Any]) -> ImmersionChart:
    spec = config.get('immersion')
    if spec is None:
        raise ScenarioError("❌ السيناريو لا يحدد غمراً", {'path': '$.immersion'})
    if 'components' not in spec:
        return catalog.get_immersion(spec['name'], **dict(spec.get('params') or {}))
    if config.get('target') is None:
        raise ScenarioError("❌ الغمر بالتعابير يتطلب هدفاً", {'path': '$.target'})
    target = build_target(config['target'])
    info = ImmersionInfo(**dict(spec.get('info') or {}))
    return ImmersionChart.from_expressions(spec.get('name', 'custom'), target, spec['coordinates'],
                                           spec['components'], _box(spec), info)


def build_invariant(config: Dict[str, Any]) -> Optional[StraightInvariantSpec]:
    spec = config.get('invariant')
    if spec is None:
        return None
    return StraightInvariantSpec.preset(spec['preset'], c=spec.get('c', 0), ell=spec.get('ell'), r=spec.get('r'))


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------

class ScenarioRunner:
    """🎯 منفذ السيناريو: كل مهمة تضيف فحوصات إلى التقرير"""

    def __init__(self, config: Dict[str, Any], settings: Optional[Dict[str, float]] = None):
        self.config = config
        settings = settings or {}
        self.condition_limit = float(settings.get('condition_limit', FIT_CONDITION_LIMIT))
        self.min_cutoff_eps = float(settings.get('min_cutoff_eps', MIN_CUTOFF_EPS))
        self.task = config['task']
        self.grid = config.get('grid', 48)
        self.seed = int(config.get('seed', 0))
        self.threads = int(config.get('threads', 1))
        self.tolerances: Dict[str, float] = dict(config.get('tolerances') or {})
        self.lam: Optional[float] = config.get('lam')
        self.ladder: List[float] = list(config.get('ladder') or DEFAULT_LADDER)
        self.report = Report(self.task, config, __version__)
        self.handlers: Dict[str, Callable[[], None]] = {
            'verify': self.run_verify,
            'gbc': self.run_gbc,
            'renorm': self.run_renorm,
            'expand': self.run_expand,
            'rigidity': self.run_rigidity,
        }

    def tol(self, key: str) -> float:
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key]))

    def attempt(self, name: str, fn: Callable[[], Any]) -> None:
        """يشغل فحصاً؛ الفشل الهندسي يصبح مدخلاً في التقرير"""
        with timed(self.report.timings, name):
            try:
                result = fn()
            except RECOVERABLE as e:
                logger.debug(f"⚠️ {name}: {type(e).__name__}", exc_info=True)
                self.report.add(CheckResult.failure(name, e))
                return
        checks = result if isinstance(result, list) else [result]
        for check in checks:
            if check is not None:
                self.report.add(check)

    def run(self) -> Report:
        handler = self.handlers.get(self.task)
        if handler is None:
            raise ScenarioError(f"❌ مهمة غير معروفة: '{self.task}'", {'tasks': sorted(self.handlers)})
        logger.info(f"🚀 بدء المهمة '{self.task}' (grid={self.grid}, seed={self.seed}, threads={self.threads})")
        with timed(self.report.timings, 'total'):
            handler()
        summary = self.report.summary()
        logger.info(f"📊 انتهت المهمة '{self.task}': {summary['passed']}/{summary['total']} فحص ناجح")
        return self.report

    def _immersion(self) -> Optional[ImmersionChart]:
        holder: Dict[str, ImmersionChart] = {}

        def build() -> None:
            holder['imm'] = build_immersion(self.config)

        self.attempt('build_immersion', build)
        imm = holder.get('imm')
        if imm is not None:
            logger.info(f"🔧 الغمر '{imm.name}': k={imm.dim}, n={imm.target.dim}")
        return imm

    # ------------------------------------------------------------------
    # verify
    # ------------------------------------------------------------------

    def run_verify(self) -> None:
        imm = self._immersion()
        if imm is None:
            return
        block = self.config.get('verify') or {}
        points = imm.box.samples(int(block.get('points', DEFAULT_POINTS)), self.seed)
        requested = block.get('checks')
        info = imm.info
        einstein = info.einstein_lambda is not None or self.lam is not None
        hypotheses = einstein and info.minimal

        def wanted(name: str, applicable: bool = True) -> bool:
            return name in requested if requested is not None else applicable

        pointwise = self.tol('pointwise')
        if wanted('gauss'):
            self.attempt('gauss_residual', lambda: CheckResult.against(
                'gauss_residual', residual_over(imm, points, 'gauss'), pointwise))
        if wanted('gauss_weyl', imm.dim >= 3):
            self.attempt('gauss_weyl_residual', lambda: CheckResult.against(
                'gauss_weyl_residual', residual_over(imm, points, 'gauss_weyl'), pointwise))
        if wanted('mean_curvature', info.minimal):
            self.attempt('mean_curvature', lambda: self._mean_curvature(imm, points))
        if wanted('expected', bool(block.get('expected'))):
            for key, value in (block.get('expected') or {}).items():
                self.attempt(f"expected_{key}", lambda k=key, v=value: self._expected(imm, points, k, v))
        if wanted('einstein', einstein):
            self.attempt('einstein_residual', lambda: self._einstein(imm, points))
        if wanted('pfaffian_decomposition', hypotheses and imm.dim % 2 == 0):
            self.attempt('pfaffian_decomposition', lambda: CheckResult.against(
                'pfaffian_decomposition', pfaffian_decomposition_residual(imm, points, self.lam), pointwise))
        if wanted('conformal_covariance', 'upsilon' in block):
            self.attempt('conformal_covariance', lambda: CheckResult.against(
                'conformal_covariance', conformal_covariance_residual(imm, block['upsilon'], points), pointwise,
                upsilon=ex.to_text(ex.as_expr(block['upsilon']))))
        if wanted('ambient', hypotheses):
            self.attempt('ambient', lambda: self._ambient(imm))
        if wanted('straightening', hypotheses):
            self.attempt('straightening', lambda: self._straightening(imm, points))
        if wanted('ambient_laplacian', hypotheses and 'probe' in block):
            self.attempt('ambient_laplacian', lambda: self._ambient_laplacian(imm, points, block['probe']))

    def _mean_curvature(self, imm: ImmersionChart, points: np.ndarray) -> CheckResult:
        geo = SubmanifoldGeometry.at(imm, points)
        norm = float(np.max(np.sqrt(np.abs(geo.mean_curvature_squared))))
        return CheckResult.against('mean_curvature', norm, self.tol('pointwise'), max_norm=norm)

    def _expected(self, imm: ImmersionChart, points: np.ndarray, key: str, value: float) -> CheckResult:
        if key not in POINTWISE_FIELDS:
            raise ScenarioError(f"❌ حقل نقطي غير معروف: '{key}'", {'fields': sorted(POINTWISE_FIELDS)})
        values = np.asarray(POINTWISE_FIELDS[key](SubmanifoldGeometry.at(imm, points)), dtype=float)
        residual = float(np.max(np.abs(values - value)))
        return CheckResult.against(f"expected_{key}", residual, self.tol('pointwise'), expected=value,
                                   mean=float(np.mean(values)))

    def _einstein(self, imm: ImmersionChart, points: np.ndarray) -> CheckResult:
        lam = einstein_constant(imm, self.lam)
        residual = einstein_residual(imm.target, imm.map(points), lam)
        return CheckResult.against('einstein_residual', residual, self.tol('pointwise'), lam=lam)

    def _ambient(self, imm: ImmersionChart) -> List[CheckResult]:
        amb = CanonicalAmbient(imm, self.lam)
        tol = self.tol('ambient')
        source = amb.samples(DEFAULT_POINTS, self.seed)
        return [
            CheckResult.against('ambient_pullback', amb.pullback_residual(source), tol, ambient=amb.to_dict()),
            CheckResult.against('ambient_mean_curvature', amb.mean_curvature_residual(source), tol),
            CheckResult.against('ambient_ricci', amb.ricci_residual(amb.ambient_samples(DEFAULT_POINTS, self.seed)),
                                tol),
        ]

    def _straightening(self, imm: ImmersionChart, points: np.ndarray) -> List[CheckResult]:
        lam = einstein_constant(imm, self.lam)
        spec = build_invariant(self.config)
        w = spec.weight if spec is not None else -2
        coefficient = tau_power_laplacian(imm.dim, w, lam)
        values = ambient_laplacian_field(imm, 1.0, w, points, lam)
        residual = float(np.max(np.abs(values - coefficient)))
        checks = [CheckResult.against('tau_power_laplacian', residual, self.tol('ambient'), w=w,
                                      coefficient=coefficient)]
        if spec is not None:
            straightened = straightened_field(spec, imm, lam)(points)
            finite = bool(np.all(np.isfinite(straightened)))
            checks.append(CheckResult('straightened_values', finite,
                                      {'invariant': spec.to_dict(), 'descends': spec.descends(imm.dim),
                                       'mean': float(np.mean(straightened)),
                                       'max_abs': float(np.max(np.abs(straightened)))}))
        return checks

    def _ambient_laplacian(self, imm: ImmersionChart, points: np.ndarray, probe: Dict[str, Any]) -> CheckResult:
        lam = einstein_constant(imm, self.lam)
        w = float(probe['w'])
        direct = ambient_laplacian_field(imm, probe['u'], w, points, lam)
        intrinsic = intrinsic_straightening(imm, probe['u'], w, points, lam)
        scale = max(1.0, float(np.max(np.abs(intrinsic))))
        residual = float(np.max(np.abs(direct - intrinsic))) / scale
        return CheckResult.against('ambient_laplacian', residual, self.tol('ambient'),
                                   u=ex.to_text(ex.as_expr(probe['u'])), w=w)

    # ------------------------------------------------------------------
    # gbc
    # ------------------------------------------------------------------

    def _renorm_block(self) -> Dict[str, Any]:
        return self.config.get('renorm') or {}

    def _check_ladder(self) -> None:
        smallest = min(self.ladder)
        if smallest < self.min_cutoff_eps:
            raise CutoffError(f"❌ أصغر ε في السلم {smallest:g} أصغر من MIN_CUTOFF_EPS={self.min_cutoff_eps:g}",
                              {'eps': smallest})

    def run_gbc(self) -> None:
        imm = self._immersion()
        if imm is None:
            return
        if imm.info.compact:
            self.attempt('gbc', lambda: self._compact_gbc(imm))
        else:
            self.attempt('gbc', lambda: self._renormalized_gbc(imm))

    def _compact_gbc(self, imm: ImmersionChart) -> List[CheckResult]:
        rep = compact_gbc_check(imm, self.lam, self.grid, self.threads)
        tol = self.tol('gbc')
        checks = [CheckResult.against('gbc_identity', rep.relative_residual, tol, report=rep.to_dict())]
        if rep.chi_recovered is not None and rep.chi is not None:
            checks.append(CheckResult.against('gbc_euler_characteristic', abs(rep.chi_recovered - rep.chi), tol,
                                              chi=rep.chi, chi_recovered=rep.chi_recovered))
        return checks

    def _renormalized_gbc(self, imm: ImmersionChart) -> List[CheckResult]:
        self._check_ladder()
        block = self._renorm_block()
        rep = renormalized_gbc_check(imm, self.lam, block.get('defining_fn'), self.ladder, self.grid,
                                     self.threads, int(block.get('tail_order', DEFAULT_TAIL_ORDER)))
        tol = self.tol('gbc')
        fit = rep.fit or {}
        if fit.get('samples'):
            self.report.add_table('gbc_area_samples', fit['samples'])
        checks = [
            CheckResult.against('gbc_identity', rep.relative_residual, tol,
                                report={k: v for k, v in rep.to_dict().items() if k != 'fit'}),
            CheckResult('renormalized_area', bool(fit.get('reliable', False)),
                        {'finite_part': rep.area, 'condition_number': fit.get('condition_number'),
                         'fit_residual': fit.get('residual')}),
        ]
        if rep.chi_recovered is not None:
            checks.append(CheckResult.against('gbc_euler_characteristic', abs(rep.chi_recovered - rep.chi),
                                              self.tol('renorm'), chi=rep.chi, chi_recovered=rep.chi_recovered))
        return checks

    # ------------------------------------------------------------------
    # renorm
    # ------------------------------------------------------------------

    def _integrand(self, imm: ImmersionChart) -> FieldLike:
        spec = build_invariant(self.config)
        if spec is not None:
            return straightened_field(spec, imm, self.lam)
        integrand = self._renorm_block().get('integrand', 'area')
        if integrand == 'area':
            return 1.0
        if integrand == 'willmore':
            return willmore_field(imm, self.lam)
        return ex.as_expr(integrand)

    def run_renorm(self) -> None:
        imm = self._immersion()
        if imm is None:
            return
        block = self._renorm_block()
        self.attempt('renormalized_integral', lambda: self._renormalized(imm, block))
        if block.get('defining_fn') is not None:
            self.attempt('parity', lambda: self._parity(imm, block['defining_fn']))
        if block.get('family'):
            self.attempt('defining_function_invariance', lambda: self._invariance(imm, block))

    def _renormalized(self, imm: ImmersionChart, block: Dict[str, Any]) -> List[CheckResult]:
        self._check_ladder()
        fit = renormalized_integral(imm, self._integrand(imm), block.get('defining_fn'), self.ladder, self.grid,
                                    self.threads, int(block.get('tail_order', DEFAULT_TAIL_ORDER)),
                                    self.condition_limit)
        if fit.samples is not None and block.get('csv', True):
            self.report.add_table('renorm_samples', fit.samples.rows())
        values = fit.to_dict()
        values.pop('samples', None)
        checks = [CheckResult('fit_reliable', fit.reliable, values)]
        expected = block.get('expected') or {}
        tol = self.tol('renorm')
        if 'finite_part' in expected:
            checks.append(CheckResult.against('finite_part', abs(fit.finite_part - expected['finite_part']), tol,
                                              value=fit.finite_part, expected=expected['finite_part']))
        if 'log_coefficient' in expected:
            value = fit.log_coefficient if fit.log_coefficient is not None else math.nan
            checks.append(CheckResult.against('log_coefficient', abs(value - expected['log_coefficient']), tol,
                                              value=fit.log_coefficient, expected=expected['log_coefficient']))
        return checks

    def _parity(self, imm: ImmersionChart, defining_fn: Any) -> CheckResult:
        rep = parity_report(imm, defining_fn, seed=self.seed)
        return CheckResult('defining_function_parity', rep.even and rep.positive, rep.to_dict())

    def _invariance(self, imm: ImmersionChart, block: Dict[str, Any]) -> CheckResult:
        self._check_ladder()
        rep = defining_function_invariance(imm, self._integrand(imm), block['family'], self.ladder, self.grid,
                                           self.threads, bool(block.get('strict', True)),
                                           int(block.get('tail_order', DEFAULT_TAIL_ORDER)))
        check = CheckResult.against('defining_function_invariance', rep.spread, self.tol('renorm'), report=rep.to_dict())
        if rep.rejected:
            check.values['flagged'] = list(rep.rejected)
        return check

    # ------------------------------------------------------------------
    # expand
    # ------------------------------------------------------------------

    def run_expand(self) -> None:
        block = self.config['expand']
        k, n = int(block['k']), int(block['n'])
        self.attempt('minimal_expansion', lambda: self._expand(block, k, n))

    def _expand(self, block: Dict[str, Any], k: int, n: int) -> List[CheckResult]:
        boundary = block.get('boundary') or ['0'] * (n - k)
        ansatz = solve_minimal_expansion(boundary, k, n, order=block.get('order'), free=block.get('free'),
                                         x_order=block.get('x_order'))
        reached = minimality_order(ansatz)
        needed = min(ansatz.order, k) - 1
        checks = [CheckResult('minimal_expansion', reached >= needed,
                              {'ansatz': ansatz.to_dict(), 'minimality_order': reached, 'required_order': needed})]
        if 'expected_obstruction_zero' in block:
            zero = all(p.is_zero() for p in ansatz.obstruction())
            checks.append(CheckResult('obstruction', zero == bool(block['expected_obstruction_zero']),
                                      {'obstruction_zero': zero,
                                       'obstruction': ansatz.to_dict()['obstruction']}))
        return checks

    # ------------------------------------------------------------------
    # rigidity
    # ------------------------------------------------------------------

    def run_rigidity(self) -> None:
        imm = self._immersion()
        if imm is None:
            return
        ells = (self.config.get('rigidity') or {}).get('ells')
        self.attempt('rigidity', lambda: self._rigidity(imm, ells))

    def _rigidity(self, imm: ImmersionChart, ells: Optional[List[int]]) -> List[CheckResult]:
        rep = rigidity_functionals(imm, ells, self.lam, self.grid, self.threads, seed=self.seed)
        tol = self.tol('rigidity')
        data = rep.to_dict()
        checks = [CheckResult.against('rigidity_identity', rep.max_relative_mismatch(), tol, report=data)]
        negative = {name: gap for name, gap in rep.gaps.items() if gap < -tol * max(1.0, abs(gap))}
        # the inequalities hold for λ < 0 only; otherwise the gaps are informational
        assessed = rep.lam < 0
        if negative and not assessed:
            logger.info(f"📊 فجوات سالبة عند λ = {rep.lam:g} (غير مقيمة): {sorted(negative)}")
        checks.append(CheckResult('rigidity_inequalities', not (assessed and negative),
                                  {'gaps': dict(rep.gaps), 'assessed': assessed,
                                   'violations': negative if assessed else {}}))
        pointwise = self.tol('pointwise')
        if rep.einstein_gap_residual is not None:
            checks.append(CheckResult.against('einstein_gap_pointwise', rep.einstein_gap_residual, pointwise))
        if rep.codim_one_weyl_residual is not None:
            checks.append(CheckResult.against('codim_one_weyl_pointwise', rep.codim_one_weyl_residual, pointwise))
        return checks


def run(config: Dict[str, Any], settings: Optional[Dict[str, float]] = None) -> Report:
    """🎯 run(config) → Report"""
    return ScenarioRunner(config, settings).run()
