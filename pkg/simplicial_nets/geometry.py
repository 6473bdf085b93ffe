"""
Geometry Module
Barycentric coordinates through small factorized linear systems, affine
independence testing and point location in a simplicial complex.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from simplicial_nets.error_handling import (
    DegenerateSimplexError,
    OffAffineHullError,
    TooManyPointsError,
    get_logger,
    log_and_raise,
)

if TYPE_CHECKING:
    from simplicial_nets.simplicial_complex import SimplicialComplex

logger = get_logger(__name__)

DEFAULT_TOL = 1e-9
DEFAULT_MAX_CONDITION = 1e12
RANK_TOL = 1e-9


def _as_points(points: ArrayLike) -> NDArray[np.float64]:
    array = np.asarray(points, dtype=np.float64)
    if array.ndim == 1:
        array = array.reshape(1, -1)
    return array


def homogeneous_matrix(simplex_vertices: ArrayLike) -> NDArray[np.float64]:
    """Columns are the simplex vertices with a row of ones appended."""
    vertices = _as_points(simplex_vertices)
    return np.vstack([vertices.T, np.ones(vertices.shape[0])])


def is_affinely_independent(
    points: ArrayLike, ambient_dim: int | None = None, rank_tol: float = RANK_TOL
) -> bool:
    """
    Check whether the points are affinely independent.

    Args:
        points: (count, ambient_dim) array of points
        ambient_dim: Dimension of the ambient space (defaults to the point length)
        rank_tol: Singular values below rank_tol * largest count as zero

    Returns:
        True iff the difference vectors from the first point have full rank
    """
    array = _as_points(points)
    count, width = array.shape
    ambient = width if ambient_dim is None else ambient_dim
    if count > ambient + 1:
        log_and_raise(
            TooManyPointsError(
                f"{count} points cannot be affinely independent in dimension {ambient}",
                context={"count": count, "ambient_dim": ambient},
            ),
            logger=logger,
        )
    if count == 1:
        return True

    differences = array[1:] - array[0]
    singular_values = np.linalg.svd(differences, compute_uv=False)
    largest = float(singular_values.max()) if singular_values.size else 0.0
    if largest == 0.0:
        return False
    rank = int(np.sum(singular_values > rank_tol * largest))
    return rank == count - 1


@dataclass(frozen=True, eq=False)
class SolveCache:
    """
    Per maximal simplex, the (pseudo-)inverse of its homogeneous vertex matrix.

    For full-dimensional simplices the inverse comes from an LU factorization
    with partial pivoting; for lower-dimensional simplices it is the
    Moore-Penrose pseudo-inverse, so coordinates are the least-squares
    solution on the affine hull.
    """

    matrices: NDArray[np.float64]  # (k, D+1, d+1)
    inverses: NDArray[np.float64]  # (k, d+1, D+1)

    @property
    def full_dimensional(self) -> bool:
        return bool(self.matrices.shape[1] == self.matrices.shape[2])

    def __len__(self) -> int:
        return int(self.inverses.shape[0])

    def coordinates(self, points: ArrayLike) -> NDArray[np.float64]:
        """Barycentric coordinates of every point in every simplex, (N, k, d+1)."""
        array = _as_points(points)
        homogeneous = np.hstack([array, np.ones((array.shape[0], 1))])
        return np.einsum("kij,nj->nki", self.inverses, homogeneous)

    def hull_residuals(
        self, points: ArrayLike, coordinates: NDArray[np.float64]
    ) -> NDArray[np.float64]:
        """Distance between each point and its reconstruction, (N, k)."""
        array = _as_points(points)
        if self.full_dimensional:
            return np.zeros(coordinates.shape[:2])
        homogeneous = np.hstack([array, np.ones((array.shape[0], 1))])
        rebuilt = np.einsum("kij,nkj->nki", self.matrices, coordinates)
        return np.linalg.norm(rebuilt - homogeneous[:, None, :], axis=2)


def build_solve_cache(
    simplices: ArrayLike, max_condition: float = DEFAULT_MAX_CONDITION
) -> SolveCache:
    """
    Factorize the homogeneous vertex matrix of every simplex.

    Args:
        simplices: (k, d+1, D) array, vertex coordinates per simplex
        max_condition: Reject simplices whose matrix condition number exceeds this

    Returns:
        SolveCache with one inverse per simplex
    """
    stack = np.asarray(simplices, dtype=np.float64)
    if stack.ndim != 3:
        raise ValueError("simplices must be a (k, d+1, D) array")
    count, size, ambient = stack.shape
    matrices = np.empty((count, ambient + 1, size))
    inverses = np.empty((count, size, ambient + 1))
    identity = np.eye(size)

    for index in range(count):
        matrix = homogeneous_matrix(stack[index])
        matrices[index] = matrix
        condition = float(np.linalg.cond(matrix))
        if not np.isfinite(condition) or condition > max_condition:
            log_and_raise(
                DegenerateSimplexError(
                    f"Simplex {index} is degenerate (condition number {condition:.3e})",
                    context={"simplex": index, "condition": condition},
                ),
                logger=logger,
            )
        if size == ambient + 1:
            factorization = scipy.linalg.lu_factor(matrix)
            inverses[index] = scipy.linalg.lu_solve(factorization, identity)
        else:
            inverses[index] = scipy.linalg.pinv(matrix)

    logger.debug(f"Built solve cache for {count} simplices of size {size}")
    return SolveCache(matrices=matrices, inverses=inverses)


def barycentric_coordinates(
    simplex_vertices: ArrayLike, x: ArrayLike, tol: float = DEFAULT_TOL
) -> NDArray[np.float64]:
    """
    Unique affine coordinates of x with respect to one simplex.

    Coordinates may be negative when x lies outside the simplex. When the
    simplex has lower dimension than the ambient space, x must lie on its
    affine hull within tol.
    """
    vertices = _as_points(simplex_vertices)
    point = np.asarray(x, dtype=np.float64).reshape(-1)
    if point.shape[0] != vertices.shape[1]:
        raise ValueError(
            f"Point has dimension {point.shape[0]}, simplex lives in {vertices.shape[1]}"
        )
    if not is_affinely_independent(vertices):
        log_and_raise(
            DegenerateSimplexError(
                "Simplex vertices are affinely dependent",
                context={"vertices": vertices.tolist()},
            ),
            logger=logger,
        )
    cache = build_solve_cache(vertices[None, :, :])
    coordinates = cache.coordinates(point)
    residual = float(cache.hull_residuals(point, coordinates)[0, 0])
    if residual > tol * max(1.0, float(np.linalg.norm(point))):
        log_and_raise(
            OffAffineHullError(
                f"Point is {residual:.3e} away from the simplex affine hull",
                context={"point": point.tolist(), "residual": residual},
            ),
            logger=logger,
        )
    return coordinates[0, 0]


@dataclass(frozen=True, eq=False)
class BarycentricLocation:
    """A point together with every maximal simplex containing it."""

    point: NDArray[np.float64]
    hits: tuple[tuple[int, NDArray[np.float64]], ...]

    @property
    def inside(self) -> bool:
        return bool(self.hits)

    @property
    def simplex_indices(self) -> list[int]:
        return [index for index, _ in self.hits]


def membership_mask(
    cache: SolveCache, points: ArrayLike, tol: float = DEFAULT_TOL
) -> tuple[NDArray[np.bool_], NDArray[np.float64]]:
    """
    Which simplices contain which points.

    Returns:
        (mask, coordinates) with mask of shape (N, k) and coordinates (N, k, d+1)
    """
    array = _as_points(points)
    coordinates = cache.coordinates(array)
    mask = np.all(coordinates >= -tol, axis=2)
    if not cache.full_dimensional:
        scale = np.maximum(1.0, np.linalg.norm(array, axis=1))[:, None]
        mask &= cache.hull_residuals(array, coordinates) <= tol * scale
    return mask, coordinates


def locate(
    complex_: SimplicialComplex, x: ArrayLike, tol: float = DEFAULT_TOL
) -> BarycentricLocation:
    """
    Find every maximal simplex of the complex containing x.

    Args:
        complex_: The complex to search
        x: Query point of length ambient_dim
        tol: Coordinates >= -tol count as inside

    Returns:
        BarycentricLocation whose hits are empty iff x is outside |K|
    """
    point = np.asarray(x, dtype=np.float64).reshape(-1)
    if point.shape[0] != complex_.ambient_dim:
        raise ValueError(
            f"Point has dimension {point.shape[0]}, complex lives in {complex_.ambient_dim}"
        )
    mask, coordinates = membership_mask(complex_.solve_cache, point, tol)
    hits = tuple(
        (int(index), coordinates[0, index].copy())
        for index in np.flatnonzero(mask[0])
    )
    return BarycentricLocation(point=point, hits=hits)


def barycentric_grid(dim: int, resolution: int) -> NDArray[np.float64]:
    """
    All barycentric coordinate vectors whose entries are multiples of 1/resolution.

    Args:
        dim: Simplex dimension (vectors have dim+1 entries)
        resolution: Grid resolution r >= 1

    Returns:
        (C(r+dim, dim), dim+1) array, vertices included
    """
    if resolution < 1:
        raise ValueError("resolution must be a positive integer")
    rows = []
    # Stars and bars: choose dim bar positions among resolution+dim slots
    for bars in itertools.combinations(range(resolution + dim), dim):
        previous = -1
        counts = []
        for bar in bars:
            counts.append(bar - previous - 1)
            previous = bar
        counts.append(resolution + dim - previous - 1)
        rows.append(counts)
    return np.asarray(rows, dtype=np.float64) / resolution


def barycentric_coordinates_batch(
    complex_: SimplicialComplex, points: ArrayLike
) -> NDArray[np.float64]:
    """Coordinates of every point in every maximal simplex, (N, k, dim+1)."""
    return complex_.solve_cache.coordinates(points)


def locate_batch(
    complex_: SimplicialComplex, points: ArrayLike, tol: float = DEFAULT_TOL
) -> NDArray[np.bool_]:
    """Boolean membership matrix (N, k) of points in maximal simplices."""
    mask, _ = membership_mask(complex_.solve_cache, points, tol)
    return mask


DEFAULT_GRID_RESOLUTION = 4
DEFAULT_BLOCK_SIZE = 256


def grid_points(complex_: SimplicialComplex, resolution: int) -> NDArray[np.float64]:
    """The barycentric grid mapped into every maximal simplex, simplex-major."""
    grid = barycentric_grid(complex_.dim, resolution)
    points = np.einsum("mj,kjd->kmd", grid, complex_.simplex_vertices)
    return points.reshape(-1, complex_.ambient_dim)


def block_count(samples: int, block_size: int = DEFAULT_BLOCK_SIZE) -> int:
    return -(-max(0, samples) // block_size)


def sample_block(
    complex_: SimplicialComplex,
    seed: int,
    block: int,
    block_size: int = DEFAULT_BLOCK_SIZE,
    count: int | None = None,
) -> NDArray[np.float64]:
    """
    Uniform random points of one sample block.

    Block b always draws block_size barycentric vectors from a generator
    seeded with (seed, b); global sample i lands in maximal simplex i mod k.
    Truncating to count keeps every prefix of the sample stream identical.
    """
    if complex_.dim == 0:
        # dirichlet on one weight may return 1 - ulp
        weights = np.ones((block_size, 1))
    else:
        rng = np.random.default_rng([seed, block])
        weights = rng.dirichlet(np.ones(complex_.dim + 1), size=block_size)
    owners = (block * block_size + np.arange(block_size)) % complex_.num_maximal
    points = np.einsum("nj,njd->nd", weights, complex_.simplex_vertices[owners])
    return points if count is None else points[:count]


def sample_simplex_points(
    complex_: SimplicialComplex,
    samples: int,
    seed: int,
    grid_resolution: int | None = DEFAULT_GRID_RESOLUTION,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> NDArray[np.float64]:
    """
    Seeded nested sample of |K|: the barycentric grid (when requested) followed
    by the first `samples` points of the block stream.
    """
    parts = []
    if grid_resolution:
        parts.append(grid_points(complex_, grid_resolution))
    for block in range(block_count(samples, block_size)):
        remaining = samples - block * block_size
        parts.append(
            sample_block(complex_, seed, block, block_size, min(block_size, remaining))
        )
    if not parts:
        return np.empty((0, complex_.ambient_dim))
    return np.vstack(parts)
