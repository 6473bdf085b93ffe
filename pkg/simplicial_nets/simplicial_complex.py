"""
Simplicial Complex Module
Finite pure geometric simplicial complexes: validated construction, faces,
stars, skeleta, mesh and iterated barycentric subdivision.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, NoReturn

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import linprog

from simplicial_nets.error_handling import (
    AffinelyDependentError,
    BadIntersectionError,
    DuplicateSimplexError,
    FormatError,
    IndexOutOfRangeError,
    InvalidComplexError,
    NonPositiveEpsilonError,
    NonPureError,
    NotASimplexError,
    get_logger,
    log_and_raise,
    with_error_context,
)
from simplicial_nets.geometry import (
    DEFAULT_MAX_CONDITION,
    SolveCache,
    build_solve_cache,
    is_affinely_independent,
)
from simplicial_nets.report_generator import JSONReportGenerator, load_json_document

logger = get_logger(__name__)

DEFAULT_INTERSECTION_TOL = 1e-9


@dataclass(frozen=True)
class SimplexRef:
    """A face of some maximal simplex, identified by its sorted vertex indices."""

    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.indices:
            raise ValueError("A simplex needs at least one vertex")
        if any(b <= a for a, b in itertools.pairwise(self.indices)):
            raise ValueError(f"Simplex indices must be strictly increasing: {self.indices}")

    @classmethod
    def of(cls, indices: Iterable[int]) -> SimplexRef:
        return cls(tuple(sorted(int(i) for i in indices)))

    @property
    def dim(self) -> int:
        return len(self.indices) - 1

    def sort_key(self) -> tuple[int, tuple[int, ...]]:
        return (len(self.indices), self.indices)

    def is_face_of(self, other: SimplexRef) -> bool:
        return set(self.indices).issubset(other.indices)

    def faces(self) -> Iterator[SimplexRef]:
        """Every non-empty face, itself included."""
        for size in range(1, len(self.indices) + 1):
            for combo in itertools.combinations(self.indices, size):
                yield SimplexRef(combo)

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices)

    def __len__(self) -> int:
        return len(self.indices)

    def to_list(self) -> list[int]:
        return list(self.indices)


def canonical_order(simplices: Iterable[SimplexRef]) -> list[SimplexRef]:
    """Sort by dimension, then lexicographically."""
    return sorted(set(simplices), key=SimplexRef.sort_key)


@dataclass(frozen=True, eq=False)
class SimplicialComplex:
    """
    A finite pure simplicial complex embedded in R^ambient_dim.

    Instances are immutable; construct them through build_complex (validated)
    or barycentric_subdivide.
    """

    ambient_dim: int
    vertices: NDArray[np.float64]
    maximal_simplices: tuple[tuple[int, ...], ...]
    dim: int
    max_condition: float = field(default=DEFAULT_MAX_CONDITION, repr=False)

    def __post_init__(self) -> None:
        self.vertices.setflags(write=False)

    @property
    def num_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def num_maximal(self) -> int:
        return len(self.maximal_simplices)

    @property
    def is_full_dimensional(self) -> bool:
        return self.dim == self.ambient_dim

    def to_dict(self) -> dict[str, Any]:
        return {
            "ambient_dim": self.ambient_dim,
            "vertices": self.vertices.tolist(),
            "maximal_simplices": [list(s) for s in self.maximal_simplices],
        }

    @cached_property
    def complex_id(self) -> str:
        """Fingerprint of the canonical JSON payload."""
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    @cached_property
    def simplex_vertices(self) -> NDArray[np.float64]:
        """(k, dim+1, ambient_dim) vertex coordinates of every maximal simplex."""
        index = np.asarray(self.maximal_simplices, dtype=np.intp)
        return self.vertices[index]

    @cached_property
    def solve_cache(self) -> SolveCache:
        return build_solve_cache(self.simplex_vertices, self.max_condition)

    @cached_property
    def maximal_refs(self) -> tuple[SimplexRef, ...]:
        return tuple(SimplexRef(s) for s in self.maximal_simplices)

    @cached_property
    def vertex_to_maximal(self) -> dict[int, tuple[int, ...]]:
        table: dict[int, list[int]] = {v: [] for v in range(self.num_vertices)}
        for position, simplex in enumerate(self.maximal_simplices):
            for v in simplex:
                table[v].append(position)
        return {v: tuple(positions) for v, positions in table.items()}

    @cached_property
    def all_simplices(self) -> tuple[SimplexRef, ...]:
        faces: set[SimplexRef] = set()
        for simplex in self.maximal_refs:
            faces.update(simplex.faces())
        return tuple(canonical_order(faces))

    def simplex(self, indices: Iterable[int]) -> SimplexRef:
        """Return the SimplexRef for indices, checking it is a face of K."""
        if isinstance(indices, SimplexRef):
            ref = indices
        else:
            requested = list(indices)
            try:
                ref = SimplexRef.of(requested)
            except ValueError as e:
                log_and_raise(
                    NotASimplexError(str(e), context={"indices": requested}),
                    logger=logger,
                )
        if not self.maximal_containing(ref):
            log_and_raise(
                NotASimplexError(
                    f"{ref.to_list()} is not a simplex of the complex",
                    context={"indices": ref.to_list(), "complex_id": self.complex_id},
                ),
                logger=logger,
            )
        return ref

    def maximal_containing(self, sigma: SimplexRef) -> tuple[int, ...]:
        """Positions of the maximal simplices having sigma as a face."""
        first = sigma.indices[0]
        if first < 0 or first >= self.num_vertices:
            return ()
        candidates = self.vertex_to_maximal.get(first, ())
        wanted = set(sigma.indices)
        return tuple(
            p for p in candidates if wanted.issubset(self.maximal_simplices[p])
        )

    def spans_simplex(self, indices: Iterable[int]) -> bool:
        """True iff the vertex set is a face of some maximal simplex."""
        return bool(self.maximal_containing(SimplexRef.of(set(indices))))


def _fail(error: Exception) -> NoReturn:
    log_and_raise(error, logger=logger)


def _check_intersections(
    vertices: NDArray[np.float64],
    simplices: Sequence[tuple[int, ...]],
    cache: SolveCache,
    full_dimensional: bool,
    tol: float,
) -> None:
    """Pairwise intersection property of the maximal simplices."""
    stack = vertices[np.asarray(simplices, dtype=np.intp)]
    lows = stack.min(axis=1) - tol
    highs = stack.max(axis=1) + tol
    order = np.argsort(lows[:, 0], kind="stable")
    dim = len(simplices[0]) - 1

    for position, i in enumerate(order):
        for j in order[position + 1 :]:
            if lows[j, 0] > highs[i, 0]:
                break
            if np.any(lows[j] > highs[i]) or np.any(lows[i] > highs[j]):
                continue
            a, b = (int(i), int(j)) if i < j else (int(j), int(i))
            shared = set(simplices[a]) & set(simplices[b])
            if full_dimensional and len(shared) == dim:
                if _opposite_across_facet(simplices, cache, a, b, shared, tol):
                    continue
                _fail(_bad_intersection(simplices, a, b))
            if _overlap_weight(vertices, simplices[a], simplices[b], shared) > tol:
                _fail(_bad_intersection(simplices, a, b))


def _opposite_across_facet(
    simplices: Sequence[tuple[int, ...]],
    cache: SolveCache,
    a: int,
    b: int,
    shared: set[int],
    tol: float,
) -> bool:
    (apex_a,) = set(simplices[a]) - shared
    (apex_b,) = set(simplices[b]) - shared
    slot = simplices[a].index(apex_a)
    homogeneous_apex = cache.matrices[b][:, simplices[b].index(apex_b)]
    coordinate = cache.inverses[a][slot] @ homogeneous_apex
    return bool(coordinate < -tol)


def _overlap_weight(
    vertices: NDArray[np.float64],
    first: tuple[int, ...],
    second: tuple[int, ...],
    shared: set[int],
) -> float:
    """
    Largest barycentric weight on non-shared vertices over common points.

    Zero (or infeasible) iff the hulls meet exactly in the hull of the shared
    vertices.
    """
    p, q = len(first), len(second)
    ambient = vertices.shape[1]
    a_eq = np.zeros((ambient + 2, p + q))
    a_eq[:ambient, :p] = vertices[list(first)].T
    a_eq[:ambient, p:] = -vertices[list(second)].T
    a_eq[ambient, :p] = 1.0
    a_eq[ambient + 1, p:] = 1.0
    b_eq = np.zeros(ambient + 2)
    b_eq[ambient:] = 1.0
    objective = np.array(
        [0.0 if v in shared else -1.0 for v in first]
        + [0.0 if v in shared else -1.0 for v in second]
    )
    result = linprog(
        objective,
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=(0, None),
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10},
    )
    if result.status == 2:
        return 0.0
    if not result.success:
        logger.warning(f"Intersection test inconclusive: {result.message}")
        return 0.0
    return float(-result.fun)


def _bad_intersection(
    simplices: Sequence[tuple[int, ...]], a: int, b: int
) -> BadIntersectionError:
    return BadIntersectionError(
        f"Maximal simplices {list(simplices[a])} and {list(simplices[b])} "
        "overlap outside their shared face",
        context={"first": list(simplices[a]), "second": list(simplices[b])},
    )


def build_complex(
    ambient_dim: int,
    vertices: ArrayLike,
    maximal_simplices: Sequence[Sequence[int]],
    intersection_tol: float = DEFAULT_INTERSECTION_TOL,
    max_condition: float = DEFAULT_MAX_CONDITION,
) -> SimplicialComplex:
    """
    Build and validate a pure simplicial complex.

    Args:
        ambient_dim: Dimension n of the ambient Euclidean space
        vertices: Vertex coordinates, one row of length ambient_dim per vertex
        maximal_simplices: Vertex index lists of the maximal simplices
        intersection_tol: Tolerance of the interior-overlap test
        max_condition: Condition number above which a simplex is degenerate

    Returns:
        The validated complex; dim is inferred from the simplex length
    """
    if int(ambient_dim) < 1:
        _fail(InvalidComplexError("ambient_dim must be a positive integer"))
    ambient = int(ambient_dim)

    try:
        coords = np.array(vertices, dtype=np.float64)
    except (TypeError, ValueError) as e:
        _fail(InvalidComplexError(f"Vertex coordinates are not numeric: {e}"))
    if coords.size == 0 or coords.ndim != 2 or coords.shape[1] != ambient:
        _fail(
            InvalidComplexError(
                f"Expected a non-empty list of {ambient}-dimensional vertices",
                context={"shape": list(coords.shape)},
            )
        )
    if not np.all(np.isfinite(coords)):
        _fail(InvalidComplexError("Vertex coordinates must be finite"))
    if not maximal_simplices:
        _fail(InvalidComplexError("At least one maximal simplex is required"))

    count = coords.shape[0]
    simplices: list[tuple[int, ...]] = []
    for raw in maximal_simplices:
        try:
            indices = [int(i) for i in raw]
        except (TypeError, ValueError) as e:
            _fail(InvalidComplexError(f"Simplex {raw!r} is not a list of indices: {e}"))
        bad = [i for i in indices if i < 0 or i >= count]
        if bad:
            _fail(
                IndexOutOfRangeError(
                    f"Vertex indices {bad} out of range for {count} vertices",
                    context={"simplex": indices, "num_vertices": count},
                )
            )
        if not indices or len(set(indices)) != len(indices):
            _fail(
                InvalidComplexError(
                    f"Simplex {indices} must list distinct vertices",
                    context={"simplex": indices},
                )
            )
        simplices.append(tuple(sorted(indices)))

    sizes = {len(s) for s in simplices}
    if len(sizes) != 1:
        _fail(
            NonPureError(
                f"Maximal simplices have mixed sizes {sorted(sizes)}",
                context={"sizes": sorted(sizes)},
            )
        )
    dim = sizes.pop() - 1
    if dim > ambient:
        _fail(
            AffinelyDependentError(
                f"{dim + 1} vertices cannot be affinely independent in R^{ambient}"
            )
        )

    seen: set[tuple[int, ...]] = set()
    for simplex in simplices:
        if simplex in seen:
            _fail(
                DuplicateSimplexError(
                    f"Duplicate maximal simplex {list(simplex)}",
                    context={"simplex": list(simplex)},
                )
            )
        seen.add(simplex)

    used = {v for simplex in simplices for v in simplex}
    if len(used) != count:
        unused = sorted(set(range(count)) - used)
        _fail(
            NonPureError(
                f"Vertices {unused} belong to no maximal simplex",
                context={"unused": unused},
            )
        )

    for simplex in simplices:
        if not is_affinely_independent(coords[list(simplex)], ambient):
            _fail(
                AffinelyDependentError(
                    f"Simplex {list(simplex)} is affinely dependent",
                    context={"simplex": list(simplex)},
                )
            )

    complex_ = SimplicialComplex(
        ambient_dim=ambient,
        vertices=coords,
        maximal_simplices=tuple(simplices),
        dim=dim,
        max_condition=max_condition,
    )
    _check_intersections(
        coords,
        simplices,
        complex_.solve_cache,
        complex_.is_full_dimensional,
        intersection_tol,
    )
    logger.debug(
        f"Built complex {complex_.complex_id}: dim {dim}, {count} vertices, "
        f"{len(simplices)} maximal simplices"
    )
    return complex_


def star(complex_: SimplicialComplex, sigma: SimplexRef | Iterable[int]) -> list[SimplexRef]:
    """
    All simplices mu sharing a maximal cofacet with sigma.

    Returns:
        The star in canonical order (dimension, then lexicographic)
    """
    ref = complex_.simplex(sigma)
    faces: set[SimplexRef] = set()
    for position in complex_.maximal_containing(ref):
        faces.update(complex_.maximal_refs[position].faces())
    return canonical_order(faces)


def vertex_star_simplices(complex_: SimplicialComplex, vertex: int) -> tuple[int, ...]:
    """Positions of the maximal simplices whose union is |st(v)|."""
    return complex_.maximal_containing(complex_.simplex([vertex]))


def skeleton(complex_: SimplicialComplex, j: int) -> list[SimplexRef]:
    """The j-skeleton: every simplex of dimension j or less."""
    return [s for s in complex_.all_simplices if s.dim <= j]


def all_simplices(complex_: SimplicialComplex) -> list[SimplexRef]:
    return list(complex_.all_simplices)


def simplex_diameter(complex_: SimplicialComplex, sigma: SimplexRef | Iterable[int]) -> float:
    ref = complex_.simplex(sigma)
    points = complex_.vertices[list(ref.indices)]
    if len(points) < 2:
        return 0.0
    diffs = points[:, None, :] - points[None, :, :]
    return float(np.linalg.norm(diffs, axis=2).max())


def mesh(complex_: SimplicialComplex) -> float:
    """Largest vertex-to-vertex distance within a maximal simplex."""
    if complex_.dim == 0:
        return 0.0
    stack = complex_.simplex_vertices
    diffs = stack[:, :, None, :] - stack[:, None, :, :]
    return float(np.linalg.norm(diffs, axis=3).max())


@dataclass(frozen=True, eq=False)
class SubdivisionRecord:
    """
    Result of t iterated barycentric subdivisions.

    vertex_provenance[i] is the simplex of the previous level, Sd^(t-1) K,
    whose barycenter is vertex i of the new complex. source_carrier[i] chains
    that back to K: the smallest simplex of K containing vertex i. levels
    holds K, Sd K, ..., Sd^t K.
    """

    source_id: str
    complex: SimplicialComplex
    t: int
    vertex_provenance: tuple[SimplexRef, ...]
    source_carrier: tuple[SimplexRef, ...]
    levels: tuple[SimplicialComplex, ...]

    @property
    def source(self) -> SimplicialComplex:
        return self.levels[0]


def _subdivide_once(
    complex_: SimplicialComplex,
) -> tuple[SimplicialComplex, tuple[SimplexRef, ...]]:
    faces = complex_.all_simplices
    new_index = {face: position for position, face in enumerate(faces)}
    coordinates = np.array(
        [complex_.vertices[list(face.indices)].mean(axis=0) for face in faces]
    )

    maximal: list[tuple[int, ...]] = []
    for simplex in complex_.maximal_simplices:
        for order in itertools.permutations(simplex):
            chain = [
                new_index[SimplexRef(tuple(sorted(order[: size + 1])))]
                for size in range(len(order))
            ]
            maximal.append(tuple(sorted(chain)))

    subdivided = SimplicialComplex(
        ambient_dim=complex_.ambient_dim,
        vertices=coordinates,
        maximal_simplices=tuple(maximal),
        dim=complex_.dim,
        max_condition=complex_.max_condition,
    )
    return subdivided, faces


def barycentric_subdivide(complex_: SimplicialComplex, t: int = 1) -> SubdivisionRecord:
    """
    Iterated barycentric subdivision Sd^t K.

    New vertices are the barycenters of the simplices of the previous level,
    identified combinatorially; new maximal simplices are the flags
    s_0 < s_1 < ... < s_dim of each maximal simplex.
    """
    if int(t) < 1:
        _fail(InvalidComplexError(f"Number of subdivisions must be >= 1, got {t}"))

    levels = [complex_]
    provenance: tuple[SimplexRef, ...] = ()
    carriers = tuple(SimplexRef((v,)) for v in range(complex_.num_vertices))
    current = complex_
    for step in range(int(t)):
        current, provenance = _subdivide_once(current)
        # the vertices of a face form a chain, so their carriers nest
        carriers = tuple(
            SimplexRef.of(set[int]().union(*(carriers[v].indices for v in face.indices)))
            for face in provenance
        )
        levels.append(current)
        logger.debug(
            f"Subdivision step {step + 1}: {current.num_vertices} vertices, "
            f"{current.num_maximal} maximal simplices"
        )
    return SubdivisionRecord(
        source_id=complex_.complex_id,
        complex=current,
        t=int(t),
        vertex_provenance=provenance,
        source_carrier=carriers,
        levels=tuple(levels),
    )


def subdivide(complex_: SimplicialComplex, t: int) -> SimplicialComplex:
    """Sd^t K, with Sd^0 K = K."""
    if t == 0:
        return complex_
    return barycentric_subdivide(complex_, t).complex


def subdivision_count_for_mesh(complex_: SimplicialComplex, epsilon: float) -> int:
    """
    Number of barycentric subdivisions guaranteeing mesh <= epsilon.

    Uses the contraction m(Sd^t K) <= m(K) (n/(n+1))^t, so the answer is the
    ceiling of (log m(K) - log eps) / (log(n+1) - log n), or 0 when eps >= m(K).
    """
    if not epsilon > 0:
        _fail(
            NonPositiveEpsilonError(
                f"epsilon must be positive, got {epsilon}",
                context={"epsilon": epsilon},
            )
        )
    current = mesh(complex_)
    n = complex_.dim
    if n == 0 or epsilon >= current:
        return 0
    bound = (math.log(current) - math.log(epsilon)) / (math.log(n + 1) - math.log(n))
    return max(1, math.ceil(bound - 1e-12))


@with_error_context({"stage": "load_complex"})
def load_complex(
    filename: str | Path,
    intersection_tol: float = DEFAULT_INTERSECTION_TOL,
    max_condition: float = DEFAULT_MAX_CONDITION,
) -> SimplicialComplex:
    """Read a complex file and validate it through build_complex."""
    data = load_json_document(filename)
    missing = [
        key for key in ("ambient_dim", "vertices", "maximal_simplices") if key not in data
    ]
    if missing:
        _fail(
            FormatError(
                f"Complex file {filename} is missing fields {missing}",
                context={"filename": str(filename), "missing": missing},
            )
        )
    try:
        ambient = int(data["ambient_dim"])
        simplices = [list(s) for s in data["maximal_simplices"]]
    except (TypeError, ValueError) as e:
        _fail(FormatError(f"Malformed complex file {filename}: {e}"))
    return build_complex(
        ambient,
        data["vertices"],
        simplices,
        intersection_tol=intersection_tol,
        max_condition=max_condition,
    )


def save_complex(complex_: SimplicialComplex, filename: str | Path) -> Path:
    return JSONReportGenerator().save_report(complex_.to_dict(), filename)
