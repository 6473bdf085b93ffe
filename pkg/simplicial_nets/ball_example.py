"""
Ball Example Module
The tetrahedron-to-triangle approximation of the projection B^3 -> B^2: the
homeomorphisms between standard simplices and unit balls, the builtin
function registry used by the CLI, and the end-to-end scenario report.
"""

from __future__ import annotations

import importlib
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from simplicial_nets.error_analysis import (
    ApproximationReport,
    check_modulus_bound,
    complexity,
    estimate_modulus,
    estimate_sup_distance,
    verify_equivalence,
)
from simplicial_nets.error_handling import (
    OutsideBallError,
    OutsideSimplexError,
    get_logger,
    log_and_raise,
)
from simplicial_nets.geometry import (
    DEFAULT_BLOCK_SIZE,
    DEFAULT_GRID_RESOLUTION,
    DEFAULT_TOL,
    build_solve_cache,
)
from simplicial_nets.network_generator import network_sampler, synthesize_network
from simplicial_nets.simplicial_approximation import (
    DEFAULT_RESOLUTION,
    TIE_BREAK_SMALLEST,
    FunctionSampler,
    VertexMap,
    build_vertex_map,
    check_star_condition,
)
from simplicial_nets.simplicial_complex import (
    SimplicialComplex,
    build_complex,
    mesh,
    subdivide,
)

logger = get_logger(__name__)

BALL_CENTERS: dict[int, tuple[float, ...]] = {
    2: (0.25, 0.25),
    3: (0.25, 0.25, 0.25),
}

# Worked-example assignment: the origin to (0,0), e1 to (1,0), e2 and e3 to (0,1)
REFERENCE_ASSIGNMENT = (0, 1, 2, 2)


def standard_simplex(dim: int) -> SimplicialComplex:
    """The complex of the simplex spanned by the origin and the unit vectors."""
    vertices = np.vstack([np.zeros(dim), np.eye(dim)])
    return build_complex(dim, vertices, [list(range(dim + 1))])


class BallHomeomorphism:
    """
    Radial homeomorphism between the standard simplex and the closed unit ball.

    A point P maps to (P - c) / s, where s is the distance from the center c
    to the simplex boundary along the direction of P - c; c maps to the origin.
    """

    def __init__(self, dim: int, tol: float = DEFAULT_TOL) -> None:
        if dim not in BALL_CENTERS:
            raise ValueError(f"Ball homeomorphisms are defined for dim 2 and 3, got {dim}")
        self.dim = dim
        self.tol = tol
        self.center = np.asarray(BALL_CENTERS[dim], dtype=np.float64)
        vertices = np.vstack([np.zeros(dim), np.eye(dim)])
        inverse = build_solve_cache(vertices[None, :, :]).inverses[0]
        self._linear = inverse[:, :dim]
        self._offset = inverse[:, dim]
        self._center_coordinates = self._coordinates(self.center[None, :])[0]

    def _coordinates(self, points: NDArray[np.float64]) -> NDArray[np.float64]:
        return points @ self._linear.T + self._offset

    def exit_distance(self, directions: NDArray[np.float64]) -> NDArray[np.float64]:
        """Distance from the center to the boundary along each unit direction."""
        rates = directions @ self._linear.T
        with np.errstate(divide="ignore", invalid="ignore"):
            limits = np.where(rates < 0, self._center_coordinates / -rates, np.inf)
        return limits.min(axis=1)

    def to_ball(self, points: ArrayLike) -> NDArray[np.float64]:
        """tau^-1: simplex to ball."""
        array = np.asarray(points, dtype=np.float64).reshape(-1, self.dim)
        outside = np.flatnonzero(np.any(self._coordinates(array) < -self.tol, axis=1))
        if outside.size:
            log_and_raise(
                OutsideSimplexError(
                    f"{outside.size} points lie outside the standard {self.dim}-simplex",
                    context={"first": array[outside[0]].tolist()},
                ),
                logger=logger,
            )
        offsets = array - self.center
        lengths = np.linalg.norm(offsets, axis=1)
        result = np.zeros_like(array)
        moving = lengths > 0
        directions = offsets[moving] / lengths[moving, None]
        result[moving] = offsets[moving] / self.exit_distance(directions)[:, None]
        return result

    def from_ball(self, points: ArrayLike) -> NDArray[np.float64]:
        """tau: ball to simplex."""
        array = np.asarray(points, dtype=np.float64).reshape(-1, self.dim)
        radii = np.linalg.norm(array, axis=1)
        outside = np.flatnonzero(radii > 1.0 + self.tol)
        if outside.size:
            log_and_raise(
                OutsideBallError(
                    f"{outside.size} points lie outside the unit ball",
                    context={"first": array[outside[0]].tolist()},
                ),
                logger=logger,
            )
        result = np.tile(self.center, (array.shape[0], 1))
        moving = radii > 0
        directions = array[moving] / radii[moving, None]
        scale = np.minimum(radii[moving], 1.0) * self.exit_distance(directions)
        result[moving] += directions * scale[:, None]
        return result


def tau_inverse_ball(point: ArrayLike, dim: int) -> NDArray[np.float64]:
    """Map a point (or rows of points) of the standard simplex into the unit ball."""
    array = np.asarray(point, dtype=np.float64)
    result = BallHomeomorphism(dim).to_ball(array)
    return result[0] if array.ndim == 1 else result


def tau_ball(point: ArrayLike, dim: int) -> NDArray[np.float64]:
    """Map a point (or rows of points) of the unit ball onto the standard simplex."""
    array = np.asarray(point, dtype=np.float64)
    result = BallHomeomorphism(dim).from_ball(array)
    return result[0] if array.ndim == 1 else result


def ball_projection_sampler(reflected: bool = False) -> FunctionSampler:
    """
    g = tau_L o projection o tau_K^-1 from the tetrahedron to the triangle.

    The reflected variant negates the projected point, so its image is the
    reflected triangle and leaves |L|.
    """
    source, target = BallHomeomorphism(3), BallHomeomorphism(2)

    def g(points: NDArray[np.float64]) -> NDArray[np.float64]:
        projected = source.to_ball(points)[:, :2]
        image = target.from_ball(projected)
        return -image if reflected else image

    name = "reflected-ball-projection" if reflected else "ball-projection"
    return FunctionSampler(fn=g, source_dim=3, target_dim=2, name=name)


def _constant_sampler(target: SimplicialComplex, vertex: int, source_dim: int) -> FunctionSampler:
    if not 0 <= vertex < target.num_vertices:
        raise ValueError(f"constant:{vertex} names no vertex of the target complex")
    value = target.vertices[vertex]
    return FunctionSampler(
        fn=lambda points: np.tile(value, (points.shape[0], 1)),
        source_dim=source_dim,
        target_dim=target.ambient_dim,
        name=f"constant:{vertex}",
    )


def resolve_function(
    choice: str, source: SimplicialComplex, target: SimplicialComplex
) -> FunctionSampler:
    """
    Turn a --fn value into a FunctionSampler.

    Builtins: identity, ball-projection, reflected-ball-projection and
    constant:<target vertex index>. Anything else of the form module:attribute
    is imported; the attribute is either a FunctionSampler or a callable taking
    one point.
    """
    n, m = source.ambient_dim, target.ambient_dim
    if choice == "identity":
        if n != m:
            raise ValueError(f"identity needs equal dimensions, got {n} and {m}")
        return FunctionSampler(fn=lambda points: points, source_dim=n, target_dim=m, name=choice)
    if choice in ("ball-projection", "reflected-ball-projection"):
        if (n, m) != (3, 2):
            raise ValueError(f"{choice} maps R^3 to R^2, got R^{n} to R^{m}")
        return ball_projection_sampler(reflected=choice.startswith("reflected"))
    if choice.startswith("constant:"):
        try:
            vertex = int(choice.split(":", 1)[1])
        except ValueError as e:
            raise ValueError(f"Invalid constant function {choice!r}") from e
        return _constant_sampler(target, vertex, n)
    if ":" in choice:
        module_name, attribute = choice.split(":", 1)
        try:
            obj = getattr(importlib.import_module(module_name), attribute)
        except (ImportError, AttributeError) as e:
            raise ValueError(f"Cannot import function {choice!r}: {e}") from e
        if isinstance(obj, FunctionSampler):
            return obj
        if not callable(obj):
            raise ValueError(f"{choice!r} is not callable")
        return FunctionSampler(fn=obj, source_dim=n, target_dim=m, vectorized=False, name=choice)
    raise ValueError(f"Unknown function {choice!r}")


@dataclass(frozen=True)
class BallExampleConfig:
    """
    Settings of the ball example.

    t1 is where the vertex-map search starts; it escalates up to max_t1.
    """

    t1: int = 0
    t2: int = 0
    samples: int = 2000
    seed: int = 0
    tol: float = DEFAULT_TOL
    max_t1: int = 3
    resolution: int = DEFAULT_RESOLUTION
    deltas: tuple[float, ...] = (0.1,)
    tie_break: str = TIE_BREAK_SMALLEST
    workers: int = 1
    show_progress: bool = False
    reflected: bool = False
    grid_resolution: int = DEFAULT_GRID_RESOLUTION
    block_size: int = DEFAULT_BLOCK_SIZE

    def __post_init__(self) -> None:
        if self.t1 < 0 or self.t2 < 0:
            raise ValueError(f"t1 and t2 must be non-negative, got {self.t1}, {self.t2}")
        if self.grid_resolution < 1 or self.block_size < 1:
            raise ValueError("grid_resolution and block_size must be positive")
        if self.samples < 0:
            raise ValueError(f"samples must be non-negative, got {self.samples}")
        if any(not delta > 0 for delta in self.deltas):
            raise ValueError(f"deltas must be positive, got {self.deltas}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "t1": self.t1,
            "t2": self.t2,
            "samples": self.samples,
            "seed": self.seed,
            "tol": self.tol,
            "max_t1": max(self.max_t1, self.t1),
            "resolution": self.resolution,
            "deltas": list(self.deltas),
            "tie_break": self.tie_break,
            "grid_resolution": self.grid_resolution,
            "block_size": self.block_size,
        }


def _reference_block(
    g: FunctionSampler, resolution: int, tol: float
) -> dict[str, Any]:
    """Network of the worked-example assignment on the unsubdivided complexes."""
    source, target = standard_simplex(3), standard_simplex(2)
    phi = VertexMap.between(source, target, REFERENCE_ASSIGNMENT)
    star = check_star_condition(source, target, phi, g, resolution, tol)
    block: dict[str, Any] = {
        "assignment": list(REFERENCE_ASSIGNMENT),
        "star_condition": star.passed,
    }
    if star.passed:
        block["network"] = synthesize_network(source, target, phi, tol).to_dict()
    return block


def run_ball_example(cfg: BallExampleConfig) -> ApproximationReport:
    """
    Approximate the ball projection with a synthesized network.

    Subdivides the triangle t2 times, finds a vertex map from the
    tetrahedron (starting at t1 subdivisions), synthesizes the network,
    checks it against the simplicial map and measures it against g.
    """
    source, target = standard_simplex(3), standard_simplex(2)
    g = ball_projection_sampler(reflected=cfg.reflected)
    refined_target = subdivide(target, cfg.t2)
    logger.info(
        f"Ball example: t2={cfg.t2}, target has {refined_target.num_maximal} simplices"
    )

    build = build_vertex_map(
        source,
        refined_target,
        g,
        max_t=max(cfg.max_t1, cfg.t1),
        resolution=cfg.resolution,
        tol=cfg.tol,
        tie_break=cfg.tie_break,
        start_t=cfg.t1,
        show_progress=cfg.show_progress,
    )
    net = synthesize_network(build.source, refined_target, build.vertex_map, cfg.tol)
    star = check_star_condition(
        build.source, refined_target, build.vertex_map, g, cfg.resolution, cfg.tol
    )
    equivalence = verify_equivalence(
        build.source,
        refined_target,
        build.vertex_map,
        net,
        samples=cfg.samples,
        seed=cfg.seed,
        workers=cfg.workers,
        grid_resolution=cfg.grid_resolution,
        block_size=cfg.block_size,
    )

    estimate = estimate_sup_distance(
        g,
        network_sampler(net),
        source,
        samples=cfg.samples,
        seed=cfg.seed,
        grid_resolution=cfg.grid_resolution,
        block_size=cfg.block_size,
        workers=cfg.workers,
        show_progress=cfg.show_progress,
    )
    target_mesh = mesh(refined_target)
    modulus = {}
    for delta in cfg.deltas:
        rho_g, rho_net = (
            estimate_modulus(
                f,
                source,
                delta,
                cfg.samples,
                cfg.seed,
                grid_resolution=cfg.grid_resolution,
                block_size=cfg.block_size,
                workers=cfg.workers,
                tol=cfg.tol,
            )
            for f in (g, network_sampler(net))
        )
        modulus[repr(delta)] = check_modulus_bound(rho_g, rho_net, target_mesh)

    figure = complexity(
        k=source.num_maximal,
        n=source.dim,
        t1=build.t,
        l=target.num_maximal,
        m=target.dim,
        t2=cfg.t2,
    )
    widths = net.widths
    details: dict[str, Any] = {
        "config": cfg.to_dict(),
        "function": g.name,
        "t1": build.t,
        "t2": cfg.t2,
        "vertex_map": list(build.vertex_map.assignment),
        "widths": list(widths),
        "widths_match_complexity": (
            widths[1] == figure.source_width and widths[2] == figure.target_width
        ),
        "equivalence": equivalence.to_dict(),
    }
    if build.t == 0 and cfg.t2 == 0:
        reference = _reference_block(g, cfg.resolution, cfg.tol)
        reference["matches_vertex_map"] = (
            tuple(build.vertex_map.assignment) == REFERENCE_ASSIGNMENT
        )
        details["reference"] = reference

    report = ApproximationReport(
        samples=estimate.samples,
        seed=cfg.seed,
        sup_error=estimate.value,
        argmax=estimate.argmax,
        target_mesh=target_mesh,
        star_condition=star,
        complexity=figure,
        modulus=modulus,
        network=net.to_dict(),
        details=details,
    )
    logger.info(
        f"Ball example finished: t1={build.t}, sup error {estimate.value:.6g}, "
        f"target mesh {target_mesh:.6g}"
    )
    return report
