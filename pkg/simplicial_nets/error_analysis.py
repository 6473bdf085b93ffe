"""
Error Analysis Module
Architecture complexity, seeded sampled estimators for the sup distance, the
modulus of continuity and the extended mesh, and the modulus bound check.

Every sampled estimate is a maximum over evaluated samples and therefore a
lower bound on the exact quantity.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, NamedTuple, TypeVar

import numpy as np
from numpy.typing import NDArray
from tqdm import tqdm

from simplicial_nets.error_handling import (
    ComplexityOverflowError,
    ExtendedMeshNotReachedError,
    NonPositiveEpsilonError,
    get_logger,
    log_and_raise,
)
from simplicial_nets.geometry import (
    DEFAULT_BLOCK_SIZE,
    DEFAULT_GRID_RESOLUTION,
    DEFAULT_TOL,
    barycentric_grid,
    block_count,
    grid_points,
    membership_mask,
    sample_block,
)
from simplicial_nets.network_generator import SynthesizedNetwork, network_sampler
from simplicial_nets.simplicial_approximation import (
    FunctionSampler,
    StarConditionReport,
    VertexMap,
    simplicial_map_sampler,
)
from simplicial_nets.simplicial_complex import SimplicialComplex, barycentric_subdivide

logger = get_logger(__name__)

T = TypeVar("T")

MAX_EXACT_WIDTH = 2**63 - 1
GRID_CHUNK = -1
PAIR_ROWS = 128

Metric = Callable[[NDArray[np.float64], NDArray[np.float64]], NDArray[np.float64]]


def euclidean_metric(a: NDArray[np.float64], b: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.linalg.norm(a - b, axis=-1)


@dataclass(frozen=True)
class ComplexityFigure:
    """C(t1, t2) = max{k((n+1)!)^t1 (n+1), l((m+1)!)^t2 (m+1)}."""

    k: int
    n: int
    t1: int
    l: int  # noqa: E741
    m: int
    t2: int
    source_width: int
    target_width: int

    @property
    def value(self) -> int:
        return max(self.source_width, self.target_width)

    def to_dict(self) -> dict[str, Any]:
        return {
            "k": self.k,
            "n": self.n,
            "t1": self.t1,
            "l": self.l,
            "m": self.m,
            "t2": self.t2,
            "source_width": self.source_width,
            "target_width": self.target_width,
            "value": self.value,
        }


def _layer_width(count: int, dim: int, t: int, limit: int) -> int:
    # log-space guard so huge t never builds a giant integer
    estimate = math.log(count) + t * math.lgamma(dim + 2) + math.log(dim + 1)
    if estimate > math.log(limit) + 1.0:
        raise OverflowError
    width = count * math.factorial(dim + 1) ** t * (dim + 1)
    if width > limit:
        raise OverflowError
    return width


def complexity(
    k: int, n: int, t1: int, l: int, m: int, t2: int, limit: int = MAX_EXACT_WIDTH  # noqa: E741
) -> ComplexityFigure:
    """
    Exact width of the widest hidden layer after t1 and t2 subdivisions.

    Raises:
        ValueError: negative inputs or k, l < 1
        ComplexityOverflowError: a width exceeds limit
    """
    if min(n, m, t1, t2) < 0 or min(k, l) < 1:
        raise ValueError(
            f"Invalid complexity inputs k={k} n={n} t1={t1} l={l} m={m} t2={t2}"
        )
    try:
        source_width = _layer_width(k, n, t1, limit)
        target_width = _layer_width(l, m, t2, limit)
    except OverflowError:
        log_and_raise(
            ComplexityOverflowError(
                f"Layer width exceeds {limit}",
                context={"k": k, "n": n, "t1": t1, "l": l, "m": m, "t2": t2},
            ),
            logger=logger,
        )
    return ComplexityFigure(
        k=k,
        n=n,
        t1=t1,
        l=l,
        m=m,
        t2=t2,
        source_width=source_width,
        target_width=target_width,
    )


def _run_chunks(
    task: Callable[[int], T],
    chunks: Sequence[int],
    workers: int,
    show_progress: bool,
    desc: str,
) -> list[T]:
    """Evaluate task per chunk, in chunk order, optionally on a thread pool."""
    if workers <= 1:
        return [task(c) for c in tqdm(chunks, desc=desc, disable=not show_progress)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(
            tqdm(
                pool.map(task, chunks),
                total=len(chunks),
                desc=desc,
                disable=not show_progress,
            )
        )


def _chunks(samples: int, grid_resolution: int | None, block_size: int) -> list[int]:
    chunks = [GRID_CHUNK] if grid_resolution else []
    return chunks + list(range(block_count(samples, block_size)))


def _chunk_points(
    domain: SimplicialComplex,
    chunk: int,
    samples: int,
    seed: int,
    grid_resolution: int | None,
    block_size: int,
) -> NDArray[np.float64]:
    if chunk == GRID_CHUNK:
        return grid_points(domain, grid_resolution or DEFAULT_GRID_RESOLUTION)
    count = min(block_size, samples - chunk * block_size)
    return sample_block(domain, seed, chunk, block_size, count)


def _reduce_max(
    results: Sequence[tuple[float, NDArray[np.float64] | None]],
) -> tuple[float, NDArray[np.float64] | None]:
    # first strict maximum in chunk order, independent of worker count
    best_value, best_point = 0.0, None
    for value, point in results:
        if point is not None and (best_point is None or value > best_value):
            best_value, best_point = value, point
    return best_value, best_point


class SupEstimate(NamedTuple):
    value: float
    argmax: NDArray[np.float64] | None
    samples: int


def estimate_sup_distance(
    f: FunctionSampler,
    h: FunctionSampler,
    domain: SimplicialComplex,
    samples: int,
    seed: int,
    grid_resolution: int | None = DEFAULT_GRID_RESOLUTION,
    block_size: int = DEFAULT_BLOCK_SIZE,
    workers: int = 1,
    show_progress: bool = False,
) -> SupEstimate:
    """
    max |f(x) - h(x)| over the barycentric grid and `samples` seeded points.

    Sample sets are nested in `samples`, so the estimate never decreases as
    samples grow; sharded runs return exactly the single-threaded result.
    """

    def task(chunk: int) -> tuple[float, NDArray[np.float64] | None]:
        points = _chunk_points(domain, chunk, samples, seed, grid_resolution, block_size)
        if points.shape[0] == 0:
            return 0.0, None
        distances = np.linalg.norm(f.evaluate(points) - h.evaluate(points), axis=1)
        best = int(np.argmax(distances))
        return float(distances[best]), points[best]

    chunks = _chunks(samples, grid_resolution, block_size)
    results = _run_chunks(task, chunks, workers, show_progress, "sup distance")
    value, argmax = _reduce_max(results)
    grid_size = math.comb(grid_resolution + domain.dim, domain.dim) if grid_resolution else 0
    evaluated = samples + grid_size * domain.num_maximal
    logger.debug(f"Sup distance {f.name} vs {h.name}: {value:.6g} over {evaluated} points")
    return SupEstimate(value=value, argmax=argmax, samples=evaluated)


@dataclass(frozen=True)
class EquivalenceReport:
    """Sampled agreement between a network and the simplicial map it realizes."""

    max_error: float
    argmax: NDArray[np.float64] | None
    samples: int
    seed: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tol

    def to_dict(self) -> dict[str, Any]:
        return {
            "max_error": self.max_error,
            "argmax": None if self.argmax is None else self.argmax.tolist(),
            "samples": self.samples,
            "seed": self.seed,
            "tol": self.tol,
            "passed": self.passed,
        }


def verify_equivalence(
    source: SimplicialComplex,
    target: SimplicialComplex,
    phi: VertexMap,
    net: SynthesizedNetwork,
    samples: int,
    seed: int,
    tol: float = DEFAULT_TOL,
    workers: int = 1,
    show_progress: bool = False,
    grid_resolution: int | None = DEFAULT_GRID_RESOLUTION,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> EquivalenceReport:
    """Largest Euclidean gap between the network and phi_c over seeded samples of |source|."""
    estimate = estimate_sup_distance(
        simplicial_map_sampler(source, target, phi, net.tol),
        network_sampler(net),
        source,
        samples=samples,
        seed=seed,
        grid_resolution=grid_resolution,
        block_size=block_size,
        workers=workers,
        show_progress=show_progress,
    )
    report = EquivalenceReport(
        max_error=estimate.value,
        argmax=estimate.argmax,
        samples=estimate.samples,
        seed=seed,
        tol=tol,
    )
    logger.info(
        f"Equivalence {'passed' if report.passed else 'failed'}: "
        f"max error {report.max_error:.3e} over {report.samples} points"
    )
    return report


def _shrink_into_simplex(
    domain: SimplicialComplex,
    x: NDArray[np.float64],
    y: NDArray[np.float64],
    tol: float,
) -> NDArray[np.float64]:
    """
    Move every y lying outside |domain| toward its x until it re-enters the
    maximal simplex containing x; distances to x never grow.
    """
    inside_y = membership_mask(domain.solve_cache, y, tol)[0].any(axis=1)
    if inside_y.all():
        return y
    rows = np.flatnonzero(~inside_y)
    mask_x, coords_x = membership_mask(domain.solve_cache, x[rows], tol)
    owner = mask_x.argmax(axis=1)
    lam = coords_x[np.arange(rows.size), owner]
    mu = domain.solve_cache.coordinates(y[rows])[np.arange(rows.size), owner]
    drop = lam - mu
    with np.errstate(divide="ignore", invalid="ignore"):
        limits = np.where(drop > 0, np.maximum(lam, 0.0) / drop, np.inf)
    scale = np.clip(limits.min(axis=1), 0.0, 1.0)
    clipped = y.copy()
    clipped[rows] = x[rows] + scale[:, None] * (y[rows] - x[rows])
    return clipped


def _perturbations(
    dim: int, count: int, delta: float, seed: int, chunk: int
) -> NDArray[np.float64]:
    """Uniform points of the closed delta-ball, one per sample."""
    rng = np.random.default_rng([seed, chunk + 1, 1])
    directions = rng.standard_normal((count, dim))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    radii = delta * rng.random((count, 1)) ** (1.0 / dim)
    return directions / norms * radii


def estimate_modulus(
    f: FunctionSampler,
    domain: SimplicialComplex,
    delta: float,
    samples: int,
    seed: int,
    grid_resolution: int | None = DEFAULT_GRID_RESOLUTION,
    block_size: int = DEFAULT_BLOCK_SIZE,
    workers: int = 1,
    tol: float = DEFAULT_TOL,
    show_progress: bool = False,
) -> float:
    """
    Sampled modulus of continuity: max |f(x) - f(y)| over pairs with |x - y| <= delta.

    Each sample x is paired with x plus a uniform perturbation in the
    delta-ball, pulled back into |domain| when it leaves it.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")

    def task(chunk: int) -> tuple[float, NDArray[np.float64] | None]:
        x = _chunk_points(domain, chunk, samples, seed, grid_resolution, block_size)
        if x.shape[0] == 0:
            return 0.0, None
        y = x + _perturbations(domain.ambient_dim, x.shape[0], delta, seed, chunk)
        y = _shrink_into_simplex(domain, x, y, tol)
        changes = np.linalg.norm(f.evaluate(x) - f.evaluate(y), axis=1)
        best = int(np.argmax(changes))
        return float(changes[best]), x[best]

    chunks = _chunks(samples, grid_resolution, block_size)
    value, _ = _reduce_max(_run_chunks(task, chunks, workers, show_progress, "modulus"))
    logger.debug(f"Modulus of {f.name} at delta={delta}: {value:.6g}")
    return value


def _pairwise_max(images: NDArray[np.float64], metric: Metric) -> float:
    """Largest pairwise distance, PAIR_ROWS rows against the rest at a time."""
    count = images.shape[0]
    best = 0.0
    for start in range(0, count - 1, PAIR_ROWS):
        rows = images[start : start + PAIR_ROWS, None, :]
        distances = metric(rows, images[None, start:, :])
        best = max(best, float(np.max(distances)))
    return best


def estimate_extended_mesh(
    complex_: SimplicialComplex,
    tau_inverse: FunctionSampler,
    metric: Metric | None = None,
    samples: int = 0,
    seed: int = 0,
    grid_resolution: int | None = DEFAULT_GRID_RESOLUTION,
    block_size: int = DEFAULT_BLOCK_SIZE,
    workers: int = 1,
    show_progress: bool = False,
) -> float:
    """
    Sampled extended mesh: the largest metric diameter of tau_inverse(sigma)
    over maximal simplices, each diameter estimated from pairwise distances of
    its grid points and its share of the seeded samples.

    The metric must broadcast over leading axes and reduce the last one.
    Simplices are sharded over `workers` threads.
    """
    distance = metric or euclidean_metric
    k = complex_.num_maximal
    per_simplex: list[list[NDArray[np.float64]]] = [[] for _ in range(k)]
    if grid_resolution:
        grid = barycentric_grid(complex_.dim, grid_resolution)
        stacked = np.einsum("mj,kjd->kmd", grid, complex_.simplex_vertices)
        for position in range(k):
            per_simplex[position].append(stacked[position])
    for block in range(block_count(samples, block_size)):
        count = min(block_size, samples - block * block_size)
        points = sample_block(complex_, seed, block, block_size, count)
        owners = (block * block_size + np.arange(count)) % k
        for position in np.unique(owners):
            per_simplex[int(position)].append(points[owners == position])

    def task(position: int) -> float:
        chunks = per_simplex[position]
        if not chunks:
            return 0.0
        return _pairwise_max(tau_inverse.evaluate(np.vstack(chunks)), distance)

    diameters = _run_chunks(task, range(k), workers, show_progress, "extended mesh")
    estimate = max(diameters, default=0.0)
    logger.debug(f"Extended mesh estimate {estimate:.6g} over {k} simplices")
    return estimate


class ExtendedMeshResult(NamedTuple):
    t: int
    estimate: float
    complex: SimplicialComplex


def subdivide_until_extended_mesh(
    complex_: SimplicialComplex,
    tau_inverse: FunctionSampler,
    epsilon: float,
    max_t: int,
    metric: Metric | None = None,
    samples: int = 0,
    seed: int = 0,
    grid_resolution: int | None = DEFAULT_GRID_RESOLUTION,
    workers: int = 1,
) -> ExtendedMeshResult:
    """
    Subdivide until the sampled extended mesh drops to epsilon.

    The result relies on sampling density: it certifies the estimate, not
    the exact extended mesh.
    """
    if not epsilon > 0:
        log_and_raise(
            NonPositiveEpsilonError(
                f"epsilon must be positive, got {epsilon}", context={"epsilon": epsilon}
            ),
            logger=logger,
        )
    current = complex_
    estimate = math.inf
    for t in range(max_t + 1):
        if t > 0:
            current = barycentric_subdivide(current, 1).complex
        estimate = estimate_extended_mesh(
            current,
            tau_inverse,
            metric,
            samples,
            seed,
            grid_resolution,
            workers=workers,
        )
        logger.info(f"Extended mesh estimate at t={t}: {estimate:.6g}")
        if estimate <= epsilon:
            return ExtendedMeshResult(t=t, estimate=estimate, complex=current)
    log_and_raise(
        ExtendedMeshNotReachedError(
            f"Extended mesh estimate {estimate:.6g} still above {epsilon} at t={max_t}",
            context={"epsilon": epsilon, "max_t": max_t, "estimate": estimate},
        ),
        logger=logger,
    )


@dataclass(frozen=True)
class ModulusBoundCheck:
    """Sampled form rho(delta, N) <= 2 rho(delta, g) + 4 mesh of the target."""

    rho_g: float
    rho_net: float
    target_mesh: float

    @property
    def bound(self) -> float:
        return 2.0 * self.rho_g + 4.0 * self.target_mesh

    @property
    def holds(self) -> bool:
        return self.rho_net <= self.bound

    @property
    def precondition_met(self) -> bool:
        """Whether the target mesh is at most rho(delta, g) / 2."""
        return self.target_mesh <= self.rho_g / 2.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "rho_g": self.rho_g,
            "rho_network": self.rho_net,
            "target_mesh": self.target_mesh,
            "bound": self.bound,
            "holds": self.holds,
            "precondition_met": self.precondition_met,
        }


def check_modulus_bound(rho_g: float, rho_net: float, target_mesh: float) -> ModulusBoundCheck:
    check = ModulusBoundCheck(rho_g=rho_g, rho_net=rho_net, target_mesh=target_mesh)
    if not check.holds:
        logger.warning(
            f"Modulus bound violated: {rho_net:.6g} > {check.bound:.6g}",
            extra=check.to_dict(),
        )
    return check


@dataclass(frozen=True)
class ApproximationReport:
    """
    Measured quality of a network approximation.

    sup_error is a sampled lower bound on the sup distance; target_mesh is the
    matching upper bound when the star condition holds.
    """

    samples: int
    seed: int
    sup_error: float
    argmax: NDArray[np.float64] | None
    target_mesh: float
    star_condition: StarConditionReport | None
    complexity: ComplexityFigure
    modulus: dict[str, ModulusBoundCheck] = field(default_factory=dict)
    network: dict[str, Any] | None = None
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def within_mesh_bound(self) -> bool:
        return self.sup_error <= self.target_mesh + 1e-6

    def to_dict(self) -> dict[str, Any]:
        return {
            "samples": self.samples,
            "seed": self.seed,
            "sup_error": {
                "estimate": self.sup_error,
                "kind": "sampled lower bound",
                "argmax": None if self.argmax is None else self.argmax.tolist(),
            },
            "target_mesh": self.target_mesh,
            "within_mesh_bound": self.within_mesh_bound,
            "star_condition": (
                None if self.star_condition is None else self.star_condition.to_dict()
            ),
            "complexity": self.complexity.to_dict(),
            "modulus": {delta: check.to_dict() for delta, check in self.modulus.items()},
            "network": self.network,
            "details": self.details,
        }
