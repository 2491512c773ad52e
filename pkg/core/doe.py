"""
Initial designs of experiments.

Maximin Latin hypercube designs built by seeded column-swap hill climbing,
the DoE size policy of the configurations, and the affine map between the
unit cube and a search space.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.spatial.distance import pdist, squareform

from core.testbed import SearchSpace


class DoeClass(Enum):
    """Initial DoE size classes."""
    S = "S"
    M = "M"
    L = "L"
    QUAD_MEAN = "QuadMean"


def doe_size(doe_class: DoeClass, d: int) -> int:
    """
    Number of initial design points for a size class.

    S is d + 4, M is 7.5 d rounded half up, L is 20 d and the QuadMean
    class is 2 d + 1.

    Examples:
        >>> doe_size(DoeClass.S, 5)
        9
        >>> doe_size(DoeClass.M, 10)
        75
        >>> doe_size(DoeClass.L, 3)
        60
        >>> doe_size(DoeClass.QUAD_MEAN, 5)
        11
    """
    if d < 1:
        raise ValueError(f"Dimension must be positive, got {d}")
    if doe_class is DoeClass.S:
        return d + 4
    if doe_class is DoeClass.M:
        return int(math.floor(7.5 * d + 0.5))
    if doe_class is DoeClass.L:
        return 20 * d
    if doe_class is DoeClass.QUAD_MEAN:
        return 2 * d + 1
    raise ValueError(f"Unknown DoE class: {doe_class!r}")


@dataclass(frozen=True, eq=False)
class Design:
    """
    A design of n points in the unit cube [0, 1]^d.

    Attributes:
        points: Array of shape (n, d)
    """
    points: np.ndarray

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    @property
    def d(self) -> int:
        return int(self.points.shape[1])

    def bins(self) -> np.ndarray:
        """Bin index floor(n * x) of every coordinate, clipped to n - 1."""
        return np.minimum(np.floor(self.points * self.n).astype(int), self.n - 1)

    def is_latin(self) -> bool:
        """True if every column of bins is a permutation of 0 .. n-1."""
        expected = np.arange(self.n)
        bins = self.bins()
        return all(np.array_equal(np.sort(bins[:, j]), expected) for j in range(self.d))

    def min_distance(self) -> float:
        """Smallest pairwise Euclidean distance."""
        if self.n < 2:
            return math.inf
        return float(np.min(pdist(self.points)))


def latin_hypercube(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """
    Plain Latin hypercube with jittered positions inside the bins.

    Returns:
        Array of shape (n, d) in the unit cube
    """
    perms = np.column_stack([rng.permutation(n) for _ in range(d)])
    jitter = rng.uniform(size=(n, d)) * (1.0 - 1e-9)
    return (perms + jitter) / n


def maximin_lhs(n: int, d: int, seed: int, n_improve_iters: Optional[int] = None) -> Design:
    """
    Latin hypercube design optimized for the maximin criterion.

    Starts from a jittered LHS and performs random swaps of one coordinate
    between two rows, keeping a swap when the smallest pairwise distance does
    not decrease. Swaps move whole coordinates, so the Latin property is
    preserved.

    Args:
        n: Number of points (n >= 2)
        d: Dimension
        seed: Random seed
        n_improve_iters: Number of swap trials (None = 10 * n * d)

    Returns:
        Design deterministic in (n, d, seed, n_improve_iters)
    """
    if n < 2:
        raise ValueError(f"A maximin design needs at least 2 points, got {n}")
    if d < 1:
        raise ValueError(f"Dimension must be positive, got {d}")
    if n_improve_iters is None:
        n_improve_iters = 10 * n * d

    rng = np.random.default_rng(seed)
    points = latin_hypercube(n, d, rng)
    if n_improve_iters <= 0:
        return Design(points)

    sq = squareform(pdist(points, "sqeuclidean"))
    np.fill_diagonal(sq, np.inf)
    current = float(np.min(sq))

    for _ in range(n_improve_iters):
        a, b = rng.choice(n, size=2, replace=False)
        j = int(rng.integers(d))

        trial = points[[a, b]].copy()
        trial[0, j], trial[1, j] = trial[1, j], trial[0, j]
        row_a = np.sum((points - trial[0]) ** 2, axis=1)
        row_b = np.sum((points - trial[1]) ** 2, axis=1)
        row_a[a] = row_a[b] = np.inf
        row_b[a] = row_b[b] = np.inf
        pair = float(np.sum((trial[0] - trial[1]) ** 2))

        saved_a, saved_b = sq[a].copy(), sq[b].copy()
        sq[a, :] = sq[:, a] = row_a
        sq[b, :] = sq[:, b] = row_b
        sq[a, b] = sq[b, a] = pair
        sq[a, a] = sq[b, b] = np.inf

        candidate = float(np.min(sq))
        if candidate >= current:
            points[[a, b]] = trial
            current = candidate
        else:
            sq[a, :] = sq[:, a] = saved_a
            sq[b, :] = sq[:, b] = saved_b

    return Design(points)


def scale_to_box(design: Design, space: SearchSpace) -> np.ndarray:
    """
    Map unit-cube points affinely into a search space.

    Examples:
        >>> space = SearchSpace.box(1)
        >>> scale_to_box(Design(np.array([[0.0], [0.5], [1.0]])), space).ravel().tolist()
        [-5.0, 0.0, 5.0]
    """
    points = design.points if isinstance(design, Design) else np.atleast_2d(design)
    return space.clip(space.lower + points * space.widths)


def unit_from_box(points: np.ndarray, space: SearchSpace) -> np.ndarray:
    """Inverse of scale_to_box."""
    return (np.atleast_2d(points) - space.lower) / space.widths
