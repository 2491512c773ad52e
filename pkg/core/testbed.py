"""
Benchmark testbed: search spaces, test functions, randomized instances,
targets and evaluation bookkeeping.

Twelve noiseless functions are implemented in their canonical forms and
cover the five function groups of the BBOB suite:

    separable            f1 Sphere, f2 Ellipsoidal, f3 Rastrigin
    low_conditioning     f6 AttractiveSector, f8 Rosenbrock
    high_conditioning    f10 RotatedEllipsoidal, f12 BentCigar, f13 SharpRidge
    multimodal_global    f15 RotatedRastrigin, f17 SchaffersF7
    multimodal_weak      f20 Schwefel, f21 Gallagher101

An instance applies a random translation of the optimum and, outside the
separable group, a random rotation: z = R (x - shift), f(x) = g(z) + f_opt.
"""

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.seeding import Stream, component_rng


SUPPORTED_DIMS = (2, 3, 5, 10)
DEFAULT_BOUND = 5.0
TARGET_PRECISIONS = (1e2, 1e1, 1e0, 1e-1, 1e-2, 1e-3)

# Schwefel optimum of -u sin(sqrt(|u|)) per coordinate on [-500, 500]
_SCHWEFEL_PEAK = 420.9687462275036
_SCHWEFEL_BOUND = 500.0
_SCHWEFEL_OFFSET = float(_SCHWEFEL_PEAK * np.sin(np.sqrt(_SCHWEFEL_PEAK)))

_GALLAGHER_PEAKS = 101
_GALLAGHER_TOP_WEIGHT = 10.0


class OutOfBoundsError(ValueError):
    """Raised when a point outside the search space is evaluated."""


class UnknownFunctionError(ValueError):
    """Raised for unsupported function ids or dimensions."""


class FunctionGroup(Enum):
    """Function groups of the noiseless BBOB testbed."""
    SEPARABLE = "separable"
    LOW_CONDITIONING = "low_conditioning"
    HIGH_CONDITIONING = "high_conditioning"
    MULTIMODAL_GLOBAL = "multimodal_global"
    MULTIMODAL_WEAK = "multimodal_weak"


class TestFunctionId(Enum):
    """Implemented test functions, valued by their BBOB number."""
    __test__ = False

    F1 = 1
    F2 = 2
    F3 = 3
    F6 = 6
    F8 = 8
    F10 = 10
    F12 = 12
    F13 = 13
    F15 = 15
    F17 = 17
    F20 = 20
    F21 = 21

    @property
    def label(self) -> str:
        """Short label such as 'f3'."""
        return f"f{self.value}"

    @property
    def title(self) -> str:
        return _TITLES[self]

    @property
    def group(self) -> FunctionGroup:
        return _GROUPS[self]

    @property
    def separable(self) -> bool:
        return self.group is FunctionGroup.SEPARABLE

    @classmethod
    def parse(cls, text: str) -> "TestFunctionId":
        """
        Parse 'f3', 'F3' or '3' into a TestFunctionId.

        Raises:
            UnknownFunctionError: If the id is not implemented
        """
        raw = str(text).strip().lower().lstrip("f")
        try:
            return cls(int(raw))
        except ValueError as e:
            raise UnknownFunctionError(f"Unknown test function: {text!r}") from e


_TITLES = {
    TestFunctionId.F1: "Sphere",
    TestFunctionId.F2: "Ellipsoidal",
    TestFunctionId.F3: "Rastrigin",
    TestFunctionId.F6: "AttractiveSector",
    TestFunctionId.F8: "Rosenbrock",
    TestFunctionId.F10: "RotatedEllipsoidal",
    TestFunctionId.F12: "BentCigar",
    TestFunctionId.F13: "SharpRidge",
    TestFunctionId.F15: "RotatedRastrigin",
    TestFunctionId.F17: "SchaffersF7",
    TestFunctionId.F20: "Schwefel",
    TestFunctionId.F21: "Gallagher101",
}

_GROUPS = {
    TestFunctionId.F1: FunctionGroup.SEPARABLE,
    TestFunctionId.F2: FunctionGroup.SEPARABLE,
    TestFunctionId.F3: FunctionGroup.SEPARABLE,
    TestFunctionId.F6: FunctionGroup.LOW_CONDITIONING,
    TestFunctionId.F8: FunctionGroup.LOW_CONDITIONING,
    TestFunctionId.F10: FunctionGroup.HIGH_CONDITIONING,
    TestFunctionId.F12: FunctionGroup.HIGH_CONDITIONING,
    TestFunctionId.F13: FunctionGroup.HIGH_CONDITIONING,
    TestFunctionId.F15: FunctionGroup.MULTIMODAL_GLOBAL,
    TestFunctionId.F17: FunctionGroup.MULTIMODAL_GLOBAL,
    TestFunctionId.F20: FunctionGroup.MULTIMODAL_WEAK,
    TestFunctionId.F21: FunctionGroup.MULTIMODAL_WEAK,
}


@dataclass(frozen=True, eq=False)
class SearchSpace:
    """
    Hyper-rectangle S = [lower, upper].

    Attributes:
        lower: Lower bounds L (length d)
        upper: Upper bounds U (length d)
    """
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).ravel()
        upper = np.asarray(self.upper, dtype=float).ravel()
        if lower.size == 0 or lower.shape != upper.shape:
            raise ValueError("Bounds must be non-empty vectors of equal length")
        if not np.all(lower < upper):
            raise ValueError("Each lower bound must be strictly below its upper bound")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return int(self.lower.size)

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @classmethod
    def box(cls, dim: int, bound: float = DEFAULT_BOUND) -> "SearchSpace":
        """The symmetric box [-bound, bound]^dim."""
        if dim < 1:
            raise ValueError(f"Dimension must be positive, got {dim}")
        return cls(np.full(dim, -bound), np.full(dim, bound))

    @classmethod
    def unit_cube(cls, dim: int) -> "SearchSpace":
        if dim < 1:
            raise ValueError(f"Dimension must be positive, got {dim}")
        return cls(np.zeros(dim), np.ones(dim))

    def contains(self, x: np.ndarray) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SearchSpace):
            return False
        return (np.array_equal(self.lower, other.lower)
                and np.array_equal(self.upper, other.upper))

    def __hash__(self):
        return hash((self.lower.tobytes(), self.upper.tobytes()))


# --- Canonical functions, vectorised over the rows of z ---

def _ellipsoid_weights(d: int) -> np.ndarray:
    if d == 1:
        return np.ones(1)
    return 10.0 ** (6.0 * np.arange(d) / (d - 1))


def _sphere(z, params):
    return np.sum(z ** 2, axis=1)


def _ellipsoidal(z, params):
    return (z ** 2) @ _ellipsoid_weights(z.shape[1])


def _rastrigin(z, params):
    d = z.shape[1]
    return 10.0 * d + np.sum(z ** 2 - 10.0 * np.cos(2.0 * np.pi * z), axis=1)


def _attractive_sector(z, params):
    s = np.where(z > 0.0, 100.0, 1.0)
    return np.sum((s * z) ** 2, axis=1) ** 0.9


def _rosenbrock(z, params):
    d = z.shape[1]
    w = max(1.0, math.sqrt(d) / 8.0) * z + 1.0
    head, tail = w[:, :-1], w[:, 1:]
    return np.sum(100.0 * (head ** 2 - tail) ** 2 + (head - 1.0) ** 2, axis=1)


def _bent_cigar(z, params):
    return z[:, 0] ** 2 + 1e6 * np.sum(z[:, 1:] ** 2, axis=1)


def _sharp_ridge(z, params):
    return z[:, 0] ** 2 + 100.0 * np.sqrt(np.sum(z[:, 1:] ** 2, axis=1))


def _schaffers_f7(z, params):
    d = z.shape[1]
    w = z * params["conditioning"]
    s = np.sqrt(w[:, :-1] ** 2 + w[:, 1:] ** 2)
    terms = np.sqrt(s) + np.sqrt(s) * np.sin(50.0 * s ** 0.2) ** 2
    return (np.sum(terms, axis=1) / (d - 1)) ** 2


def _schwefel(z, params):
    d = z.shape[1]
    u = _SCHWEFEL_PEAK + 100.0 * z
    # the sine term is only bounded below by the peak inside [-500, 500]
    inner = np.clip(u, -_SCHWEFEL_BOUND, _SCHWEFEL_BOUND)
    core = np.sum(_SCHWEFEL_OFFSET - inner * np.sin(np.sqrt(np.abs(inner))), axis=1) / d
    penalty = 100.0 * np.sum(np.maximum(0.0, np.abs(u) / 100.0 - 5.0) ** 2, axis=1)
    return core + penalty


def _gallagher(z, params):
    d = z.shape[1]
    best = np.zeros(z.shape[0])
    for peak, scale, weight in zip(params["peaks"], params["peak_scales"], params["weights"]):
        quad = np.sum(scale * (z - peak) ** 2, axis=1)
        np.maximum(best, weight * np.exp(-quad / (2.0 * d)), out=best)
    return (_GALLAGHER_TOP_WEIGHT - np.minimum(best, _GALLAGHER_TOP_WEIGHT)) ** 2


_CANONICAL = {
    TestFunctionId.F1: _sphere,
    TestFunctionId.F2: _ellipsoidal,
    TestFunctionId.F3: _rastrigin,
    TestFunctionId.F6: _attractive_sector,
    TestFunctionId.F8: _rosenbrock,
    TestFunctionId.F10: _ellipsoidal,
    TestFunctionId.F12: _bent_cigar,
    TestFunctionId.F13: _sharp_ridge,
    TestFunctionId.F15: _rastrigin,
    TestFunctionId.F17: _schaffers_f7,
    TestFunctionId.F20: _schwefel,
    TestFunctionId.F21: _gallagher,
}


@dataclass(frozen=True, eq=False)
class FunctionInstance:
    """
    A rotated and translated test function with a known optimum.

    Immutable after construction, so instances can be shared read-only
    between concurrent runs.

    Attributes:
        function: Test function id
        dim: Dimension d
        rotation: d x d orthogonal matrix (identity for separable functions)
        shift: Optimum location, strictly inside the search space
        seed: Instance seed
        f_opt: Value at the optimum
        space: Search space, [-5, 5]^d
        params: Extra per-instance parameters (Gallagher peaks, ...)
    """
    function: TestFunctionId
    dim: int
    rotation: np.ndarray
    shift: np.ndarray
    seed: int
    f_opt: float
    space: SearchSpace
    params: Dict[str, np.ndarray] = field(default_factory=dict)

    def transform(self, X: np.ndarray) -> np.ndarray:
        """Map rows of X to the canonical frame z = R (x - shift)."""
        return (np.atleast_2d(X) - self.shift) @ self.rotation.T

    def values(self, X: np.ndarray) -> np.ndarray:
        """
        Evaluate a batch of points without recording them.

        Args:
            X: Array of shape (n, d) or (d,)

        Returns:
            Array of n function values
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise ValueError(f"Expected points of dimension {self.dim}, got {X.shape[1]}")
        z = self.transform(X)
        return _CANONICAL[self.function](z, self.params) + self.f_opt

    def value(self, x: np.ndarray) -> float:
        return float(self.values(x)[0])

    @property
    def name(self) -> str:
        return instance_name(self.function, self.dim, self.seed)

    def to_descriptor(self) -> Dict[str, Any]:
        """JSON-ready descriptor sufficient for exact replay."""
        return {
            "function": self.function.label,
            "dim": self.dim,
            "seed": self.seed,
            "shift": [float(v) for v in self.shift],
            "rotation": [float(v) for v in self.rotation.ravel()],
            "f_opt": float(self.f_opt),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_descriptor(), sort_keys=True)


def instance_name(fid: TestFunctionId, d: int, seed: int) -> str:
    """
    Name of a function instance.

    Examples:
        >>> instance_name(TestFunctionId.F3, 5, 12)
        'f3_d5_i12'
    """
    return f"{fid.label}_d{d}_i{seed}"


def _random_rotation(rng: np.random.Generator, d: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    signs = np.sign(np.diag(r))
    signs[signs == 0.0] = 1.0
    return q * signs


def _gallagher_params(rng: np.random.Generator, d: int, space: SearchSpace,
                      shift: np.ndarray, rotation: np.ndarray) -> Dict[str, np.ndarray]:
    m = _GALLAGHER_PEAKS
    others = space.lower + rng.uniform(size=(m - 1, d)) * space.widths
    locations = np.vstack([shift, others])
    peaks = (locations - shift) @ rotation.T

    alphas = np.empty(m)
    alphas[0] = 1000.0
    alphas[1:] = 1000.0 ** (2.0 * rng.permutation(m - 1) / (m - 2))
    exponent = np.arange(d) / (d - 1) if d > 1 else np.zeros(1)
    scales = np.empty((m, d))
    for i in range(m):
        diag = alphas[i] ** (0.5 * exponent)
        scales[i] = rng.permutation(diag) / alphas[i] ** 0.25

    weights = np.empty(m)
    weights[0] = _GALLAGHER_TOP_WEIGHT
    weights[1:] = 1.1 + 8.0 * np.arange(m - 1) / (m - 2)
    return {"peaks": peaks, "peak_scales": scales, "weights": weights}


def make_instance(fid: TestFunctionId, d: int, seed: int) -> FunctionInstance:
    """
    Build a randomized instance of a test function.

    Deterministic in (fid, d, seed). Separable functions are only translated;
    all others are also rotated.

    Args:
        fid: Test function id
        d: Dimension, one of 2, 3, 5, 10
        seed: Instance seed

    Returns:
        FunctionInstance with f_opt = 0 (for Gallagher, the value at its
        highest peak, which is 0 in the squared form used here)

    Raises:
        UnknownFunctionError: For unsupported fid or d
    """
    if not isinstance(fid, TestFunctionId):
        raise UnknownFunctionError(f"Unknown test function: {fid!r}")
    if d not in SUPPORTED_DIMS:
        raise UnknownFunctionError(f"Unsupported dimension {d}; expected one of {SUPPORTED_DIMS}")

    rng = component_rng(seed, Stream.INSTANCE, fid.value, d)
    space = SearchSpace.box(d)
    rotation = np.eye(d) if fid.separable else _random_rotation(rng, d)
    shift = space.lower + (0.1 + 0.8 * rng.uniform(size=d)) * space.widths

    params: Dict[str, np.ndarray] = {}
    if fid is TestFunctionId.F17:
        exponent = np.arange(d) / (d - 1)
        params["conditioning"] = 10.0 ** (0.5 * exponent)
    elif fid is TestFunctionId.F21:
        params = _gallagher_params(rng, d, space, shift, rotation)

    rotation.setflags(write=False)
    shift.setflags(write=False)
    for value in params.values():
        value.setflags(write=False)
    return FunctionInstance(function=fid, dim=d, rotation=rotation, shift=shift,
                            seed=int(seed), f_opt=0.0, space=space, params=params)


def instance_from_descriptor(descriptor: Dict[str, Any]) -> FunctionInstance:
    """
    Rebuild an instance from its JSON descriptor.

    The instance is re-derived from (function, dim, seed) and checked against
    the stored shift and rotation.

    Raises:
        ValueError: If the descriptor does not match the re-derived instance
    """
    fid = TestFunctionId.parse(descriptor["function"])
    instance = make_instance(fid, int(descriptor["dim"]), int(descriptor["seed"]))
    shift = np.asarray(descriptor["shift"], dtype=float)
    rotation = np.asarray(descriptor["rotation"], dtype=float).reshape(instance.dim, instance.dim)
    if not (np.array_equal(shift, instance.shift) and np.array_equal(rotation, instance.rotation)):
        raise ValueError(f"Descriptor does not match instance {instance.name}")
    return instance


@dataclass(frozen=True)
class Problem:
    """A pair (instance, absolute target value to reach)."""
    instance: FunctionInstance
    target: float
    precision: float

    def __post_init__(self):
        if not self.target > self.instance.f_opt:
            raise ValueError("Target must lie strictly above f_opt")


def targets_for(instance: FunctionInstance) -> List[Problem]:
    """
    The six problems of an instance, targets f_opt + 10^k for k = 2 .. -3.

    Examples:
        >>> inst = make_instance(TestFunctionId.F1, 2, 1)
        >>> [p.target for p in targets_for(inst)]
        [100.0, 10.0, 1.0, 0.1, 0.01, 0.001]
    """
    return [Problem(instance=instance, target=instance.f_opt + delta, precision=delta)
            for delta in TARGET_PRECISIONS]


class EvaluationLedger:
    """
    Append-only record of (x, f) evaluations of one run.

    Owned by a single run; not thread-safe.
    """

    def __init__(self):
        self._points: List[np.ndarray] = []
        self._values: List[float] = []

    @property
    def count(self) -> int:
        return len(self._values)

    def __len__(self) -> int:
        return self.count

    def append(self, x: np.ndarray, f: float):
        point = np.array(x, dtype=float)
        point.setflags(write=False)
        self._points.append(point)
        self._values.append(float(f))

    @property
    def points(self) -> np.ndarray:
        if not self._points:
            return np.empty((0, 0))
        return np.vstack(self._points)

    @property
    def values(self) -> np.ndarray:
        return np.array(self._values, dtype=float)

    def best_so_far(self) -> np.ndarray:
        """Running minimum of the recorded values."""
        if not self._values:
            return np.empty(0)
        return np.minimum.accumulate(self.values)

    def best(self) -> Tuple[np.ndarray, float]:
        """Best recorded point and value."""
        if not self._values:
            raise ValueError("Ledger is empty")
        i = int(np.argmin(self._values))
        return self._points[i], self._values[i]

    def first_hit(self, target: float) -> Optional[int]:
        """1-based index of the first evaluation with f <= target, or None."""
        return first_hit_index(self._values, target)


def first_hit_index(values: Sequence[float], target: float) -> Optional[int]:
    """1-based index of the first value <= target, or None."""
    for i, f in enumerate(values):
        if f <= target:
            return i + 1
    return None


def evaluate(instance: FunctionInstance, ledger: EvaluationLedger, x: np.ndarray) -> float:
    """
    Evaluate an instance at x and record the evaluation.

    Args:
        instance: Function instance
        ledger: Ledger of the calling run
        x: Point inside the search space

    Returns:
        f(x)

    Raises:
        OutOfBoundsError: If x lies outside the search space
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size != instance.dim:
        raise ValueError(f"Expected a point of dimension {instance.dim}, got {x.size}")
    if not instance.space.contains(x):
        raise OutOfBoundsError(f"Point {x.tolist()} lies outside the search space")
    f = instance.value(x)
    ledger.append(x, f)
    return f
