"""
Exception Hierarchy
Structured errors carrying an error code and details, mirroring ErrorResponse
"""

from typing import Any, Dict, Optional


class LineGuardError(Exception):
    """Base error with a machine-readable code"""

    error_code = "lineguard_error"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        """Convert error to an ErrorResponse-shaped dictionary"""
        return {
            "success": False,
            "error": self.message,
            "error_code": self.error_code,
            "details": self.details,
        }


class ConfigurationError(LineGuardError):
    error_code = "configuration_error"


class RunnerNotFoundError(ConfigurationError):
    """The runner command template names an executable that does not exist"""

    error_code = "runner_not_found"


class NoDivergenceError(LineGuardError):
    error_code = "no_divergence"


class SliceError(LineGuardError):
    error_code = "slice_out_of_range"


class LocalizationAnswerError(LineGuardError):
    """Rejected localization answer; the raw text is kept for audit"""

    error_code = "localization_answer_rejected"

    def __init__(self, message: str, raw: str):
        super().__init__(message, details={"raw": raw})
        self.raw = raw


class ScenarioExhaustedError(LineGuardError):
    error_code = "no_alternative"


class TransportError(LineGuardError):
    """Retriable transport failure talking to a remote model"""

    error_code = "transport_error"


class EvaluatorTransportError(TransportError):
    error_code = "evaluator_transport_error"


class GeneratorTransportError(TransportError):
    error_code = "generator_transport_error"


class MetricsError(LineGuardError):
    error_code = "metrics_error"
