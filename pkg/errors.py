# errors.py
from __future__ import annotations

from typing import Any, Dict


class SpinorInputError(ValueError):
    """Invalid argument; the CLI reports it with exit code 2."""


class NumericalFailure(RuntimeError):
    """A numerical routine could not deliver a trustworthy result (exit code 3)."""

    def __init__(self, message: str, **diagnostics: Any):
        super().__init__(message)
        self.diagnostics: Dict[str, Any] = diagnostics

    def describe(self) -> str:
        if not self.diagnostics:
            return str(self)
        details = ", ".join(f"{k}={v}" for k, v in sorted(self.diagnostics.items()))
        return f"{self} ({details})"

    def __reduce__(self):
        # keeps diagnostics when raised inside a worker process
        return (self.__class__, (str(self),), {"diagnostics": self.diagnostics})


class SpectrumError(NumericalFailure):
    pass


class PropagationError(NumericalFailure):
    pass


class IdentityViolation(ArithmeticError):
    """An exact combinatorial identity evaluated to unequal sides."""


class WorkerError(NumericalFailure):
    """A sweep point raised something other than a known input or numerical error."""
