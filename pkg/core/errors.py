# core/errors.py
"""
🧯 شجرة الاستثناءات الموحدة للمكتبة الهندسية
"""

from typing import Any, Dict, Optional


class GeometryError(Exception):
    """❌ الجذر المشترك لكل أخطاء الحساب الهندسي"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.details = dict(details or {})

    def to_dict(self) -> Dict[str, Any]:
        return {'error': type(self).__name__, 'message': str(self), 'details': self.details}


# Tensor algebra
class TensorError(GeometryError):
    pass


# Expression language
class ExprError(GeometryError):
    pass


class ParseError(ExprError):
    """خطأ تحليل مع موضع البايت"""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}", {'offset': offset})
        self.offset = offset


class ExprDomainError(ExprError):
    pass


# Charts and immersions
class ChartError(GeometryError):
    pass


class SingularMetricError(ChartError):
    pass


class ImmersionError(GeometryError):
    pass


class RankDeficiencyError(ImmersionError):
    def __init__(self, message: str, smallest_singular_value: float):
        super().__init__(message, {'smallest_singular_value': smallest_singular_value})
        self.smallest_singular_value = smallest_singular_value


# Jets
class JetError(GeometryError):
    pass


class NonInvertibleError(JetError):
    pass


class ParityError(JetError):
    pass


class NonPolynomialError(JetError):
    pass


# Gates on minimality / Einstein hypotheses
class GateError(GeometryError):
    pass


class NotMinimalError(GateError):
    pass


class NotEinsteinError(GateError):
    pass


# Renormalization
class RenormalizationError(GeometryError):
    pass


class CutoffError(RenormalizationError):
    pass


class FitError(RenormalizationError):
    pass


# Scenario configuration
class ScenarioError(GeometryError):
    pass
