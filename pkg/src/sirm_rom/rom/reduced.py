"""
Galerkin reduced models z' = phi^T f(t, phi z).
"""

from dataclasses import dataclass

import numpy as np

from ..core.exceptions import ShapeMismatchError
from ..models.base import ExplicitClosure, FullModel
from .basis import Basis


@dataclass
class ReducedModel:
    """Projected explicit closure plus the dense reduced stiff matrix phi^T L phi."""

    basis: Basis
    explicit: ExplicitClosure
    stiff: np.ndarray
    model_name: str = ""

    @property
    def k(self) -> int:
        return self.basis.k

    def eval_field(self, t: float, z: np.ndarray) -> np.ndarray:
        return self.explicit(t, z) + self.stiff @ z


def build_reduced_model(basis: Basis, model: FullModel) -> ReducedModel:
    """
    Project a full model onto a basis.

    Args:
        basis: Column-orthonormal basis with model.dim rows
        model: Full model

    Returns:
        ReducedModel for integrate_reduced
    """
    if basis.n != model.dim:
        raise ShapeMismatchError("Basis rows differ from model dimension", model.dim, basis.n)
    closure, stiff = model.galerkin(basis.phi)
    return ReducedModel(
        basis=basis, explicit=closure, stiff=np.asarray(stiff), model_name=model.name
    )
