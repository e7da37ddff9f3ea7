"""Exception types."""

import numpy as np


class DomainError(ValueError):
    """An argument lies outside the domain where a formula is defined."""


class FactorizationError(np.linalg.LinAlgError):
    """Cholesky factorization hit a non-positive pivot."""

    def __init__(self, pivot: int, value: float):
        self.pivot = pivot
        self.value = value
        super().__init__(f"matrix is not positive definite: pivot {pivot} = {value!r}")
