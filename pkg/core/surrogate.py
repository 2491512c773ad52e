"""
Surrogate view of a trained GP over unit-cube candidates.

The BO loop works in unit-cube coordinates (the affine image of the search
space). A Surrogate maps those candidates through the optional input scaling
into the coordinates the GP was trained on, and answers the questions the
acquisition step asks: moments, moment gradients and proximity.
"""

import math
from typing import Optional, Tuple

import numpy as np

from core.gp_model import GPModel
from core.testbed import SearchSpace
from core.transforms import InputScaling, scaling_apply


PROXIMITY_THRESHOLD = 1e-6
FD_STEP = 1e-6


class Surrogate:
    """
    A trained GP together with the search space and input scaling.

    Attributes:
        model: GP trained on model coordinates
        space: Search space S of the objective
        scaling: Input scaling, or None
    """

    def __init__(self, model: GPModel, space: SearchSpace, scaling: Optional[InputScaling] = None):
        if model.d != space.dim:
            raise ValueError(f"Model dimension {model.d} does not match space dimension {space.dim}")
        self.model = model
        self.space = space
        self.scaling = scaling if scaling is not None and not scaling.is_identity else None

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def output_scale(self) -> float:
        return self.model.output_scale

    @property
    def analytic_gradient(self) -> bool:
        """True if moment gradients are computed in closed form."""
        return self.model.family.smooth and self.scaling is None

    def to_model(self, U: np.ndarray) -> np.ndarray:
        U = np.clip(np.atleast_2d(np.asarray(U, dtype=float)), 0.0, 1.0)
        return U if self.scaling is None else scaling_apply(self.scaling, U)

    def to_box(self, u: np.ndarray) -> np.ndarray:
        return self.space.clip(self.space.lower + np.asarray(u, dtype=float) * self.space.widths)

    def predict(self, U: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Posterior mean and variance at unit-cube points (m, d)."""
        return self.model.predict(self.to_model(U))

    def predict_gradient(self, u: np.ndarray) -> Tuple[float, float, np.ndarray, np.ndarray]:
        """
        Mean, variance and their gradients w.r.t. the unit-cube point u.

        Central differences with step FD_STEP * sqrt(d) when no closed form
        exists; steps are shortened at the cube faces.
        """
        u = np.clip(np.asarray(u, dtype=float).ravel(), 0.0, 1.0)
        if self.analytic_gradient:
            return self.model.predict_gradient(u)

        d = u.size
        h = FD_STEP * math.sqrt(d)
        plus = np.minimum(u + h * np.eye(d), 1.0)
        minus = np.maximum(u - h * np.eye(d), 0.0)
        steps = np.diag(plus) - np.diag(minus)

        mean, var = self.predict(np.vstack([u[None, :], plus, minus]))
        dmean = (mean[1:d + 1] - mean[d + 1:]) / steps
        dvar = (var[1:d + 1] - var[d + 1:]) / steps
        return float(mean[0]), float(var[0]), dmean, dvar

    def proximity_ratios(self, u: np.ndarray) -> np.ndarray:
        """
        Ratios [c(x_i, x_i) + c(x*, x*) - 2 c(x_i, x*)] / k(x*, x*) over training points.
        """
        x_star = self.to_model(u)
        X = self.model.inputs
        _, var_train = self.model.predict(X)
        _, var_star = self.model.predict(x_star)
        cross = self.model.covariance(X, x_star)[:, 0]
        return (var_train + var_star[0] - 2.0 * cross) / self.model.variance

    def proximity_check(self, u: np.ndarray, threshold: float = PROXIMITY_THRESHOLD) -> bool:
        """True iff the candidate is far enough from every training point."""
        return bool(np.min(self.proximity_ratios(u)) >= threshold)
