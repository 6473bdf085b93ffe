"""Random complex and vertex-map generators for property tests."""

import itertools

import numpy as np

from simplicial_nets.simplicial_approximation import VertexMap
from simplicial_nets.simplicial_complex import SimplicialComplex, build_complex


def freudenthal_grid(
    sizes: tuple[int, ...], rng: np.random.Generator | None = None, jitter: float = 0.0
) -> tuple[dict[tuple[int, ...], int], SimplicialComplex]:
    """
    Freudenthal triangulation of the box prod [0, size_i].

    Each unit cube at p is split into one simplex per permutation pi with
    vertices p, p + e_pi1, ..., p + (1, ..., 1). Returns the grid-point index
    table and the complex.
    """
    dim = len(sizes)
    points = list(itertools.product(*(range(s + 1) for s in sizes)))
    index = {p: i for i, p in enumerate(points)}
    coordinates = np.asarray(points, dtype=np.float64)
    if rng is not None and jitter > 0:
        coordinates = coordinates + rng.uniform(-jitter, jitter, size=coordinates.shape)

    simplices = []
    for base in itertools.product(*(range(s) for s in sizes)):
        for order in itertools.permutations(range(dim)):
            current = list(base)
            chain = [index[tuple(current)]]
            for axis in order:
                current[axis] += 1
                chain.append(index[tuple(current)])
            simplices.append(chain)
    return index, build_complex(dim, coordinates, simplices)


def monotone_vertex_map(
    source_index: dict[tuple[int, ...], int],
    source: SimplicialComplex,
    target_index: dict[tuple[int, ...], int],
    target: SimplicialComplex,
    target_sizes: tuple[int, ...],
    rng: np.random.Generator,
) -> VertexMap:
    """
    q_j = clamp(p_c(j) - offset_j, 0, size_j): every Kuhn chain maps onto a
    chain with 0/1 steps, which is a face of the target triangulation.
    """
    source_dim = len(next(iter(source_index)))
    axes = rng.integers(0, source_dim, size=len(target_sizes))
    offsets = [int(rng.integers(-1, size + 1)) for size in target_sizes]
    assignment = [0] * source.num_vertices
    for point, vertex in source_index.items():
        image = tuple(
            int(min(max(point[axis] - offset, 0), size))
            for axis, offset, size in zip(axes, offsets, target_sizes, strict=True)
        )
        assignment[vertex] = target_index[image]
    return VertexMap.between(source, target, assignment)


def random_sizes(rng: np.random.Generator, dim: int, max_simplices: int) -> tuple[int, ...]:
    """Grid sizes whose Freudenthal triangulation has at most max_simplices simplices."""
    factorial = int(np.prod(range(1, dim + 1)))
    budget = max(1, max_simplices // factorial)
    sizes = [1] * dim
    for axis in rng.permutation(dim):
        room = budget // int(np.prod(sizes))
        if room > 1:
            sizes[axis] = int(rng.integers(1, room + 1))
    return tuple(sizes)


def simplicial_map_oracle(
    source: SimplicialComplex,
    target: SimplicialComplex,
    phi: VertexMap,
    simplex: int,
    weights: np.ndarray,
) -> np.ndarray:
    """sum_t lambda_t phi(v_t) straight from the definition."""
    vertices = source.maximal_simplices[simplex]
    images = target.vertices[[phi.assignment[v] for v in vertices]]
    return weights @ images
