"""
Sequences of small real vectors (R^1 or R^2) and their inner products.
"""
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

from banddensity.errors import DimensionMismatchError
from banddensity.scalars import Scalar

Vector = Tuple[Scalar, ...]

ROLES = ("r", "u", "v", "u_star", "v_star", "w", "w_star", "rows", "cols")


def inner(x: Sequence, y: Sequence):
    if len(x) != len(y):
        raise DimensionMismatchError(f"cannot pair vectors of dimension {len(x)} and {len(y)}")
    return sum((p * q for p, q in zip(x, y)), 0)


def squared_norm(x: Sequence):
    return inner(x, x)


def is_zero_vector(x: Sequence) -> bool:
    return all(component == 0 for component in x)


def perp(x: Sequence) -> Vector:
    """Quarter-turn counterclockwise of a planar vector."""
    return (-x[1], x[0])


def scale(factor, x: Sequence) -> Vector:
    return tuple(factor * component for component in x)


@dataclass(frozen=True)
class VecSeq:
    """
    Finite sequence of vectors in R^dim.

    Indices below ``start`` are zero vectors (normalization trims a prefix);
    ``vectors[0]`` is the vector at index ``start``.

    Attributes:
        dim: 1 or 2
        vectors: Coordinates, one tuple per index
        role: One of ROLES
        start: First stored index
    """

    dim: int
    vectors: Tuple[Vector, ...]
    role: str = "r"
    start: int = 0

    @classmethod
    def of(cls, dim: int, vectors: Iterable[Sequence], role: str = "r", start: int = 0) -> "VecSeq":
        stored = tuple(tuple(vector) for vector in vectors)
        for index, vector in enumerate(stored):
            if len(vector) != dim:
                raise DimensionMismatchError(
                    f"vector {index + start} of {role} has dimension {len(vector)}, expected {dim}")
        return cls(dim, stored, role, start)

    def __len__(self) -> int:
        """Number of addressable indices (start included)."""
        return self.start + len(self.vectors)

    def __getitem__(self, n: int) -> Vector:
        if n < 0 or n >= len(self):
            raise IndexError(f"index {n} outside 0..{len(self) - 1} of {self.role}")
        if n < self.start:
            return (0,) * self.dim
        return self.vectors[n - self.start]

    def __iter__(self):
        for n in range(len(self)):
            yield self[n]

    def squared_length(self, n: int):
        return squared_norm(self[n])

    def length(self, n: int) -> float:
        return math.sqrt(float(self.squared_length(n)))

    def squared_lengths(self) -> Tuple[float, ...]:
        return tuple(float(self.squared_length(n)) for n in range(len(self)))

    def first_nonzero(self) -> int:
        """Index of the first nonzero vector, or -1."""
        for n in range(len(self)):
            if not is_zero_vector(self[n]):
                return n
        return -1

    def truncated(self, count: int) -> "VecSeq":
        """The first ``count`` indices."""
        return VecSeq.of(self.dim, [self[n] for n in range(min(count, len(self)))], self.role)

    def with_role(self, role: str) -> "VecSeq":
        return VecSeq(self.dim, self.vectors, role, self.start)
