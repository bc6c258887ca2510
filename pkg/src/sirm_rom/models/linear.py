"""
Linear test systems x' = B x + A x.

``A`` is integrated implicitly and ``B`` explicitly; both may be dense or sparse. These models
carry closed-form solutions and known invariant subspaces, so they anchor the iteration tests.
"""

from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp

from .base import ExplicitClosure, FullModel


class LinearModel(FullModel):
    """Linear system with an implicit matrix and an optional explicit matrix."""

    name = "linear"

    def __init__(
        self,
        initial_state: np.ndarray,
        stiff_matrix: Optional[np.ndarray] = None,
        explicit_matrix: Optional[np.ndarray] = None,
    ):
        initial = np.asarray(initial_state, dtype=float).reshape(-1)
        stiff = None if stiff_matrix is None else sp.csr_matrix(np.asarray(stiff_matrix, float))
        super().__init__(initial.size, initial, stiff)
        self.explicit_matrix = (
            None if explicit_matrix is None else np.asarray(explicit_matrix, dtype=float)
        )

    def explicit_part(self, t: float, x: np.ndarray) -> np.ndarray:
        if self.explicit_matrix is None:
            return np.zeros(self.dim)
        return self.explicit_matrix @ x

    def full_matrix(self) -> np.ndarray:
        """Dense matrix of the whole vector field."""
        total = np.zeros((self.dim, self.dim))
        if self.stiff_operator is not None:
            total += self.stiff_operator.toarray()
        if self.explicit_matrix is not None:
            total += self.explicit_matrix
        return total

    def galerkin(self, phi: np.ndarray) -> Tuple[ExplicitClosure, np.ndarray]:
        reduced_stiff = phi.T @ self.stiff_apply_matrix(phi)
        reduced_explicit = (
            np.zeros((phi.shape[1], phi.shape[1]))
            if self.explicit_matrix is None
            else phi.T @ (self.explicit_matrix @ phi)
        )

        def closure(t: float, z: np.ndarray) -> np.ndarray:
            return reduced_explicit @ z

        return closure, reduced_stiff
