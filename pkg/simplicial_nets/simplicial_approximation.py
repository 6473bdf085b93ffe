"""
Simplicial Approximation Module
Vertex maps, evaluation of the induced simplicial map, a sampled star
condition check and the vertex-map construction that escalates barycentric
subdivisions of the source until every vertex star fits a target star.
"""

from __future__ import annotations

import os
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from tqdm import tqdm

from simplicial_nets.error_handling import (
    FormatError,
    InvalidVertexMapError,
    NotASimplexImageError,
    OutsideDomainError,
    SamplerFailureError,
    StarConditionUnsatisfiedError,
    get_logger,
    log_and_raise,
    with_error_context,
)
from simplicial_nets.geometry import DEFAULT_TOL, barycentric_grid, membership_mask
from simplicial_nets.report_generator import JSONReportGenerator, load_json_document
from simplicial_nets.simplicial_complex import (
    SimplicialComplex,
    barycentric_subdivide,
    load_complex,
    subdivide,
    subdivision_count_for_mesh,
)

logger = get_logger(__name__)

TIE_BREAK_SMALLEST = "smallest_index"
TIE_BREAK_NEAREST = "nearest"
TIE_BREAKS = (TIE_BREAK_SMALLEST, TIE_BREAK_NEAREST)
DEFAULT_RESOLUTION = 5
SIMPLEX_CHUNK = 512


@dataclass(frozen=True)
class VertexMap:
    """Assignment of a target vertex index to every source vertex index."""

    source_id: str
    target_id: str
    assignment: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.assignment)

    def __getitem__(self, vertex: int) -> int:
        return self.assignment[vertex]

    @classmethod
    def between(
        cls, source: SimplicialComplex, target: SimplicialComplex, assignment: ArrayLike
    ) -> VertexMap:
        values = tuple(int(w) for w in np.asarray(assignment).reshape(-1))
        return cls(source.complex_id, target.complex_id, values)

    @classmethod
    def identity(cls, complex_: SimplicialComplex) -> VertexMap:
        return cls.between(complex_, complex_, range(complex_.num_vertices))


@dataclass(frozen=True)
class FunctionSampler:
    """
    A continuous function from the source ambient space to the target one.

    fn takes an (N, source_dim) array; when vectorized is False it is called
    once per row with a 1-D vector instead.
    """

    fn: Callable[[NDArray[np.float64]], Any]
    source_dim: int
    target_dim: int
    vectorized: bool = True
    name: str = "g"

    def evaluate(self, points: ArrayLike) -> NDArray[np.float64]:
        array = np.asarray(points, dtype=np.float64).reshape(-1, self.source_dim)
        try:
            if self.vectorized:
                values = np.asarray(self.fn(array), dtype=np.float64)
            else:
                values = np.asarray(
                    [np.asarray(self.fn(row), dtype=np.float64) for row in array]
                )
        except Exception as e:
            log_and_raise(
                SamplerFailureError(
                    f"Function {self.name} failed: {e}",
                    context={"function": self.name, "error": str(e)},
                ),
                logger=logger,
            )
        if values.size == array.shape[0] * self.target_dim:
            values = values.reshape(array.shape[0], self.target_dim)
        if values.shape != (array.shape[0], self.target_dim):
            log_and_raise(
                SamplerFailureError(
                    f"Function {self.name} returned shape {values.shape}, "
                    f"expected {(array.shape[0], self.target_dim)}",
                    context={"function": self.name},
                ),
                logger=logger,
            )
        if not np.all(np.isfinite(values)):
            log_and_raise(
                SamplerFailureError(
                    f"Function {self.name} returned non-finite values",
                    context={"function": self.name},
                ),
                logger=logger,
            )
        return values

    def __call__(self, points: ArrayLike) -> NDArray[np.float64]:
        return self.evaluate(points)


@dataclass(frozen=True)
class VertexStarResult:
    vertex: int
    target: int | None
    samples: int
    violated: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "vertex": self.vertex,
            "target": self.target,
            "samples": self.samples,
            "violated": self.violated,
        }


@dataclass(frozen=True)
class StarConditionReport:
    """
    Outcome of the sampled star condition check.

    Sampling is necessary, not sufficient: a pass means no grid sample of
    any vertex star left the star of its assigned target vertex.
    """

    resolution: int
    vertices: tuple[VertexStarResult, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(not entry.violated for entry in self.vertices)

    @property
    def violations(self) -> list[int]:
        return [entry.vertex for entry in self.vertices if entry.violated]

    def to_dict(self) -> dict[str, Any]:
        return {
            "resolution": self.resolution,
            "passed": self.passed,
            "samples": sum(entry.samples for entry in self.vertices),
            "violations": self.violations,
            "vertices": [entry.to_dict() for entry in self.vertices],
        }


def validate_vertex_map(
    source: SimplicialComplex, target: SimplicialComplex, phi: VertexMap
) -> None:
    """
    Check that phi is a vertex map from source to target.

    Raises:
        InvalidVertexMapError: ids, length or target indices do not fit
        NotASimplexImageError: some maximal simplex maps onto a non-simplex
    """
    if phi.source_id != source.complex_id or phi.target_id != target.complex_id:
        log_and_raise(
            InvalidVertexMapError(
                "Vertex map was built for different complexes",
                context={
                    "map_source": phi.source_id,
                    "map_target": phi.target_id,
                    "source": source.complex_id,
                    "target": target.complex_id,
                },
            ),
            logger=logger,
        )
    if len(phi) != source.num_vertices:
        log_and_raise(
            InvalidVertexMapError(
                f"Assignment has {len(phi)} entries for {source.num_vertices} vertices",
                context={"entries": len(phi), "vertices": source.num_vertices},
            ),
            logger=logger,
        )
    bad = [w for w in phi.assignment if w < 0 or w >= target.num_vertices]
    if bad:
        log_and_raise(
            InvalidVertexMapError(
                f"Target indices {sorted(set(bad))} out of range",
                context={"bad_targets": sorted(set(bad))},
            ),
            logger=logger,
        )
    for simplex in source.maximal_simplices:
        image = {phi.assignment[v] for v in simplex}
        if not target.spans_simplex(image):
            log_and_raise(
                NotASimplexImageError(
                    f"Simplex {list(simplex)} maps to {sorted(image)}, "
                    "which spans no simplex of the target",
                    context={"simplex": list(simplex), "image": sorted(image)},
                ),
                logger=logger,
            )


def image_coordinates(target: SimplicialComplex, phi: VertexMap) -> NDArray[np.float64]:
    """Coordinates of phi(v) for every source vertex v."""
    return target.vertices[np.asarray(phi.assignment, dtype=np.intp)]


def evaluate_simplicial_map(
    source: SimplicialComplex,
    target: SimplicialComplex,
    phi: VertexMap,
    x: ArrayLike,
    tol: float = DEFAULT_TOL,
) -> NDArray[np.float64]:
    """
    phi_c(x) = sum_j lambda_j phi(v_j) in a maximal simplex containing x.

    Every containing simplex gives the same value; disagreement beyond
    tolerance is logged.
    """
    point = np.asarray(x, dtype=np.float64).reshape(1, -1)
    mask, coordinates = membership_mask(source.solve_cache, point, tol)
    hits = np.flatnonzero(mask[0])
    if hits.size == 0:
        log_and_raise(
            OutsideDomainError(
                "Point lies outside the source complex",
                context={"point": point[0].tolist()},
            ),
            logger=logger,
        )
    images = image_coordinates(target, phi)
    simplices = np.asarray(source.maximal_simplices, dtype=np.intp)
    values = np.array(
        [coordinates[0, h] @ images[simplices[h]] for h in hits]
    )
    spread = float(np.abs(values - values[0]).max())
    if spread > 1e3 * tol * max(1.0, float(np.abs(values).max())):
        logger.warning(
            f"Simplicial map disagrees by {spread:.3e} across containing simplices",
            extra={"point": point[0].tolist(), "hits": hits.tolist()},
        )
    return values[0]


def evaluate_simplicial_map_batch(
    source: SimplicialComplex,
    target: SimplicialComplex,
    phi: VertexMap,
    points: ArrayLike,
    tol: float = DEFAULT_TOL,
) -> NDArray[np.float64]:
    """Vectorized phi_c over an (N, n) array, using the first containing simplex."""
    array = np.asarray(points, dtype=np.float64).reshape(-1, source.ambient_dim)
    mask, coordinates = membership_mask(source.solve_cache, array, tol)
    inside = mask.any(axis=1)
    if not inside.all():
        outside = np.flatnonzero(~inside)
        log_and_raise(
            OutsideDomainError(
                f"{outside.size} points lie outside the source complex",
                context={"rows": outside[:10].tolist()},
            ),
            logger=logger,
        )
    first = mask.argmax(axis=1)
    rows = np.arange(array.shape[0])
    simplices = np.asarray(source.maximal_simplices, dtype=np.intp)
    images = image_coordinates(target, phi)[simplices[first]]  # (N, d+1, m)
    return np.einsum("nj,njm->nm", coordinates[rows, first], images)


def _incidence(complex_: SimplicialComplex) -> NDArray[np.int64]:
    """(k, V) 0/1 matrix: maximal simplex p contains vertex v."""
    table = np.zeros((complex_.num_maximal, complex_.num_vertices), dtype=np.int64)
    for position, simplex in enumerate(complex_.maximal_simplices):
        table[position, list(simplex)] = 1
    return table


def star_membership(
    target: SimplicialComplex, images: ArrayLike, tol: float = DEFAULT_TOL
) -> NDArray[np.bool_]:
    """
    (N, V_L) boolean matrix: image point lies in |st(w)|.

    In a pure complex |st(w)| is the union of the maximal simplices containing
    w, so a point is in |st(w)| iff some maximal simplex containing the point
    has w as a vertex.
    """
    mask, _ = membership_mask(target.solve_cache, images, tol)
    return (mask.astype(np.int64) @ _incidence(target)) > 0


def allowed_targets_per_simplex(
    source: SimplicialComplex,
    target: SimplicialComplex,
    g: FunctionSampler,
    resolution: int,
    tol: float = DEFAULT_TOL,
    show_progress: bool = False,
) -> tuple[NDArray[np.bool_], int]:
    """
    For every maximal source simplex, the target vertices whose star contains
    the image of every grid sample of that simplex.

    Returns:
        (allowed, samples_per_simplex) with allowed of shape (k, V_L)
    """
    grid = barycentric_grid(source.dim, resolution)
    allowed = np.empty((source.num_maximal, target.num_vertices), dtype=bool)
    starts = range(0, source.num_maximal, SIMPLEX_CHUNK)
    for start in tqdm(starts, desc="star samples", disable=not show_progress):
        block = source.simplex_vertices[start : start + SIMPLEX_CHUNK]
        points = np.einsum("mj,kjd->kmd", grid, block).reshape(-1, source.ambient_dim)
        membership = star_membership(target, g.evaluate(points), tol)
        allowed[start : start + block.shape[0]] = membership.reshape(
            block.shape[0], grid.shape[0], -1
        ).all(axis=1)
    return allowed, int(grid.shape[0])


def check_star_condition(
    source: SimplicialComplex,
    target: SimplicialComplex,
    phi: VertexMap,
    g: FunctionSampler,
    resolution: int = DEFAULT_RESOLUTION,
    tol: float = DEFAULT_TOL,
    show_progress: bool = False,
) -> StarConditionReport:
    """
    Sampled check of g(|st(v)|) inside |st(phi(v))| for every source vertex.

    Each maximal simplex of st(v) is sampled on the barycentric grid of the
    given resolution (its vertices included).
    """
    validate_vertex_map(source, target, phi)
    allowed, per_simplex = allowed_targets_per_simplex(
        source, target, g, resolution, tol, show_progress
    )
    entries = []
    for v in range(source.num_vertices):
        positions = list(source.vertex_to_maximal[v])
        w = phi.assignment[v]
        violated = not bool(allowed[positions, w].all())
        entries.append(
            VertexStarResult(
                vertex=v,
                target=w,
                samples=per_simplex * len(positions),
                violated=violated,
            )
        )
    report = StarConditionReport(resolution=resolution, vertices=tuple(entries))
    logger.info(
        f"Star condition {'passed' if report.passed else 'failed'} "
        f"({len(report.violations)} violating vertices, resolution {resolution})"
    )
    return report


def _choose_targets(
    source: SimplicialComplex,
    target: SimplicialComplex,
    allowed: NDArray[np.bool_],
    g: FunctionSampler,
    tie_break: str,
) -> list[int] | None:
    """One target per source vertex, or None when some vertex has no candidate."""
    candidates = np.ones((source.num_vertices, target.num_vertices), dtype=bool)
    for v in range(source.num_vertices):
        candidates[v] = allowed[list(source.vertex_to_maximal[v])].all(axis=0)
    if not candidates.any(axis=1).all():
        return None
    if tie_break == TIE_BREAK_SMALLEST:
        return [int(i) for i in candidates.argmax(axis=1)]

    vertex_images = g.evaluate(source.vertices)
    distances = np.linalg.norm(
        vertex_images[:, None, :] - target.vertices[None, :, :], axis=2
    )
    distances[~candidates] = np.inf
    return [int(i) for i in distances.argmin(axis=1)]


class MapBuild(NamedTuple):
    """t, the vertex map, and the subdivided source Sd^t K it is defined on."""

    t: int
    vertex_map: VertexMap
    source: SimplicialComplex


@with_error_context({"stage": "build_vertex_map"})
def build_vertex_map(
    source: SimplicialComplex,
    target: SimplicialComplex,
    g: FunctionSampler,
    max_t: int,
    resolution: int = DEFAULT_RESOLUTION,
    tol: float = DEFAULT_TOL,
    tie_break: str = TIE_BREAK_SMALLEST,
    start_t: int = 0,
    show_progress: bool = False,
) -> MapBuild:
    """
    Subdivide the source until the sampled star condition holds, then assign.

    For t = start_t, ..., max_t every vertex v of Sd^t K gets the first target
    vertex w (by the tie-break policy) with g(|st(v)|) inside |st(w)|.

    Raises:
        StarConditionUnsatisfiedError: no t up to max_t works
        NotASimplexImageError: the sampled assignment is not a vertex map
            (resolution too coarse)
    """
    if tie_break not in TIE_BREAKS:
        raise ValueError(f"Unknown tie-break policy {tie_break!r}; use one of {TIE_BREAKS}")
    if start_t > max_t:
        raise ValueError(f"start_t {start_t} exceeds max_t {max_t}")

    current = subdivide(source, start_t)
    for t in range(start_t, max_t + 1):
        if t > start_t:
            current = barycentric_subdivide(current, 1).complex
        allowed, _ = allowed_targets_per_simplex(
            current, target, g, resolution, tol, show_progress
        )
        assignment = _choose_targets(current, target, allowed, g, tie_break)
        if assignment is None:
            logger.info(
                f"Star condition fails at t={t} "
                f"({current.num_maximal} maximal simplices); subdividing"
            )
            continue

        phi = VertexMap.between(current, target, assignment)
        try:
            validate_vertex_map(current, target, phi)
        except NotASimplexImageError as e:
            e.context.update({"t": t, "resolution": resolution})
            raise
        logger.info(f"Vertex map found at t={t} with {len(phi)} source vertices")
        return MapBuild(t=t, vertex_map=phi, source=current)

    log_and_raise(
        StarConditionUnsatisfiedError(
            f"Star condition not satisfied for any t <= {max_t}",
            context={"max_t": max_t, "resolution": resolution},
        ),
        logger=logger,
    )


class ApproximationPlan(NamedTuple):
    t1: int
    t2: int
    vertex_map: VertexMap
    source: SimplicialComplex
    target: SimplicialComplex


def approximate_function(
    source: SimplicialComplex,
    target: SimplicialComplex,
    g: FunctionSampler,
    epsilon: float,
    max_t: int,
    resolution: int = DEFAULT_RESOLUTION,
    tol: float = DEFAULT_TOL,
    tie_break: str = TIE_BREAK_SMALLEST,
    show_progress: bool = False,
) -> ApproximationPlan:
    """
    Simplicial approximation of g within epsilon.

    First t2 is chosen so that mesh(Sd^t2 L) <= epsilon, then the source is
    subdivided until the star condition holds against Sd^t2 L.
    """
    t2 = subdivision_count_for_mesh(target, epsilon)
    refined_target = subdivide(target, t2)
    logger.info(f"Target subdivided {t2} times to reach mesh <= {epsilon}")
    build = build_vertex_map(
        source,
        refined_target,
        g,
        max_t=max_t,
        resolution=resolution,
        tol=tol,
        tie_break=tie_break,
        show_progress=show_progress,
    )
    return ApproximationPlan(
        t1=build.t,
        t2=t2,
        vertex_map=build.vertex_map,
        source=build.source,
        target=refined_target,
    )


class LoadedVertexMap(NamedTuple):
    vertex_map: VertexMap
    source: SimplicialComplex
    target: SimplicialComplex


def _relative_to(path: Path, base: Path) -> str:
    try:
        return os.path.relpath(path.resolve(), base.resolve())
    except ValueError:
        return str(path.resolve())


def save_vertex_map(
    phi: VertexMap,
    filename: str | Path,
    source_path: str | Path,
    target_path: str | Path,
) -> Path:
    """Write the map file; complex paths are stored relative to its directory."""
    output = Path(filename)
    base = output.parent if str(output.parent) else Path(".")
    payload = {
        "source": _relative_to(Path(source_path), base),
        "target": _relative_to(Path(target_path), base),
        "assignment": list(phi.assignment),
    }
    return JSONReportGenerator().save_report(payload, output)


@with_error_context({"stage": "load_vertex_map"})
def load_vertex_map(filename: str | Path) -> LoadedVertexMap:
    """Read a map file together with the complexes it names, and validate it."""
    path = Path(filename)
    data = load_json_document(path)
    missing = [key for key in ("source", "target", "assignment") if key not in data]
    if missing:
        log_and_raise(
            FormatError(
                f"Vertex map file {path} is missing fields {missing}",
                context={"filename": str(path), "missing": missing},
            ),
            logger=logger,
        )
    try:
        assignment = [int(w) for w in data["assignment"]]
    except (TypeError, ValueError) as e:
        log_and_raise(
            FormatError(f"Malformed assignment in {path}: {e}"), logger=logger
        )
    source = load_complex(path.parent / str(data["source"]))
    target = load_complex(path.parent / str(data["target"]))
    phi = VertexMap.between(source, target, assignment)
    validate_vertex_map(source, target, phi)
    return LoadedVertexMap(vertex_map=phi, source=source, target=target)


def simplicial_map_sampler(
    source: SimplicialComplex,
    target: SimplicialComplex,
    phi: VertexMap,
    tol: float = DEFAULT_TOL,
) -> FunctionSampler:
    """phi_c as a FunctionSampler, for the sampled estimators."""
    validate_vertex_map(source, target, phi)
    return FunctionSampler(
        fn=lambda points: evaluate_simplicial_map_batch(source, target, phi, points, tol),
        source_dim=source.ambient_dim,
        target_dim=target.ambient_dim,
        name="simplicial_map",
    )
