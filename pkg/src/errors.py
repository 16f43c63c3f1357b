"""
Error Types

Exception hierarchy shared by the library, the CLI and the HTTP app.
Usage, domain and data errors subclass ValueError so the app's ValueError
handler turns them into 400 responses.
"""

from typing import Any, Dict, List, Optional, Tuple


class ReplisumError(Exception):
    """Base class for all errors raised by replisum."""


class UsageError(ReplisumError, ValueError):
    """Missing or contradictory inputs (e.g. meta-analysis without c)."""


class DomainError(ReplisumError, ValueError):
    """Argument outside the mathematical domain of a function."""


class SuccessImpossibleError(DomainError):
    """The replication significance level implied by the original study is 0."""

    def __init__(self, method: str, po: float):
        self.method = method
        self.po = po
        super().__init__(
            f"Replication success is impossible with method '{getattr(method, 'value', method)}' for po={po:g}"
        )


class UnattainableError(DomainError):
    """Target power exceeds what any replication sample size can reach."""

    def __init__(self, target: float, bound: float):
        self.target = target
        self.bound = bound
        super().__init__(
            f"Target power {target:g} is unattainable: predictive power is bounded by {bound:.6g}"
        )


class DataError(ReplisumError, ValueError):
    """Dataset rows failed validation."""

    def __init__(self, message: str, rows: Optional[List[Tuple[int, str]]] = None):
        self.rows = rows or []
        super().__init__(message)


class NumericalError(ReplisumError, ArithmeticError):
    """Quadrature or root finding did not converge."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)
