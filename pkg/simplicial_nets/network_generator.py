"""
Network Generator Module
Synthesis of the two-hidden-layer network realizing a simplicial map, its
forward pass, and network file I/O.

Weight matrices are stored with rows indexing the destination layer and
columns the source layer, so a layer computes W @ input.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from simplicial_nets.error_handling import (
    FormatError,
    InvariantViolationError,
    NotFullDimensionalError,
    OutsideDomainError,
    get_logger,
    log_and_raise,
    with_error_context,
)
from simplicial_nets.geometry import DEFAULT_TOL
from simplicial_nets.report_generator import JSONReportGenerator, load_json_document
from simplicial_nets.simplicial_approximation import (
    FunctionSampler,
    VertexMap,
    validate_vertex_map,
)
from simplicial_nets.simplicial_complex import SimplicialComplex

logger = get_logger(__name__)

INVERSE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SynthesizedNetwork:
    """Weights of the network N_phi; both hidden-layer biases beyond b1 are zero."""

    n: int
    m: int
    k: int
    l: int  # noqa: E741
    w1: NDArray[np.float64]  # (k(n+1), n)
    b1: NDArray[np.float64]  # (k(n+1),)
    w2: NDArray[np.float64]  # (l(m+1), k(n+1))
    w3: NDArray[np.float64]  # (m, l(m+1))
    tol: float = DEFAULT_TOL

    def __post_init__(self) -> None:
        for array in (self.w1, self.b1, self.w2, self.w3):
            array.setflags(write=False)

    @property
    def widths(self) -> tuple[int, int, int, int]:
        return network_widths(self)

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "m": self.m,
            "k": self.k,
            "l": self.l,
            "tol": self.tol,
            "w1": self.w1.tolist(),
            "b1": self.b1.tolist(),
            "w2": self.w2.astype(np.int64).tolist(),
            "w3": self.w3.tolist(),
        }

    def __call__(self, points: ArrayLike) -> NDArray[np.float64]:
        return forward_batch(self, points)


@dataclass(frozen=True, eq=False)
class ForwardTrace:
    """Intermediate values of one forward pass."""

    x: NDArray[np.float64]
    layer1: NDArray[np.float64]  # (k, n+1) source barycentric blocks
    source_gate: NDArray[np.bool_]  # (k,)
    layer2: NDArray[np.float64]  # (l, m+1) target barycentric blocks
    psi: NDArray[np.bool_]  # (l,)
    block_outputs: NDArray[np.float64]  # (l, m) z^j
    output: NDArray[np.float64]  # (m,)

    def to_dict(self) -> dict[str, Any]:
        return {
            "x": self.x,
            "layer1": self.layer1,
            "source_gate": self.source_gate,
            "layer2": self.layer2,
            "psi": self.psi,
            "block_outputs": self.block_outputs,
            "output": self.output,
        }


def network_widths(net: SynthesizedNetwork) -> tuple[int, int, int, int]:
    """(n, k(n+1), l(m+1), m)."""
    return (net.n, net.k * (net.n + 1), net.l * (net.m + 1), net.m)


@with_error_context({"stage": "synthesize_network"})
def synthesize_network(
    source: SimplicialComplex,
    target: SimplicialComplex,
    phi: VertexMap,
    tol: float = DEFAULT_TOL,
) -> SynthesizedNetwork:
    """
    Build the network whose forward pass equals the simplicial map phi_c.

    Block i of (w1 | b1) is the inverse of the homogeneous vertex matrix of the
    i-th maximal source simplex; w2[j(m+1)+r, i(n+1)+t] = 1 iff phi sends
    vertex t of sigma_i to vertex r of mu_j; block j of w3 holds the vertex
    coordinates of mu_j.

    Raises:
        NotFullDimensionalError: either complex has dim < ambient_dim
        InvalidVertexMapError, NotASimplexImageError: phi is not a vertex map
    """
    for role, complex_ in (("source", source), ("target", target)):
        if not complex_.is_full_dimensional:
            log_and_raise(
                NotFullDimensionalError(
                    f"The {role} complex has dimension {complex_.dim} "
                    f"in R^{complex_.ambient_dim}",
                    context={"role": role, "dim": complex_.dim},
                ),
                logger=logger,
            )
    validate_vertex_map(source, target, phi)

    n, m = source.ambient_dim, target.ambient_dim
    k, l = source.num_maximal, target.num_maximal  # noqa: E741
    inverses = source.solve_cache.inverses  # (k, n+1, n+1)
    w1 = inverses[:, :, :n].reshape(k * (n + 1), n).copy()
    b1 = inverses[:, :, n].reshape(k * (n + 1)).copy()

    w2 = np.zeros((l * (m + 1), k * (n + 1)))
    slots = [
        {w: r for r, w in enumerate(simplex)} for simplex in target.maximal_simplices
    ]
    for i, simplex in enumerate(source.maximal_simplices):
        for t, v in enumerate(simplex):
            image = phi.assignment[v]
            for j, slot in enumerate(slots):
                r = slot.get(image)
                if r is not None:
                    w2[j * (m + 1) + r, i * (n + 1) + t] = 1.0

    w3 = target.simplex_vertices.reshape(l * (m + 1), m).T.copy()
    net = SynthesizedNetwork(n=n, m=m, k=k, l=l, w1=w1, b1=b1, w2=w2, w3=w3, tol=tol)
    logger.info(f"Synthesized network with widths {net.widths}")
    return net


def _propagate(net: SynthesizedNetwork, points: ArrayLike) -> dict[str, NDArray[Any]]:
    array = np.asarray(points, dtype=np.float64)
    if array.ndim == 1:
        array = array.reshape(1, -1)
    if array.shape[1] != net.n:
        raise ValueError(f"Inputs have dimension {array.shape[1]}, network expects {net.n}")
    count = array.shape[0]

    # Layer 1: barycentric coordinates in every source simplex, gated to the
    # simplices containing x and averaged over them.
    layer1 = array @ net.w1.T + net.b1
    blocks1 = layer1.reshape(count, net.k, net.n + 1)
    source_gate = np.all(blocks1 >= -net.tol, axis=2)
    active = source_gate.sum(axis=1)
    outside = np.flatnonzero(active == 0)
    if outside.size:
        log_and_raise(
            OutsideDomainError(
                f"{outside.size} inputs lie outside the source complex",
                context={"rows": outside[:10].tolist()},
            ),
            logger=logger,
        )
    gated = (blocks1 * source_gate[:, :, None]).reshape(count, -1)
    layer2 = (gated @ net.w2.T) / active[:, None]

    # Layer 3: psi keeps the target blocks that are barycentric coordinates of
    # a point of their simplex.
    blocks2 = layer2.reshape(count, net.l, net.m + 1)
    psi = np.all(blocks2 >= -net.tol, axis=2) & (
        np.abs(blocks2.sum(axis=2) - 1.0) <= net.tol * (net.m + 1)
    )
    weights = psi.sum(axis=1)
    empty = np.flatnonzero(weights == 0)
    if empty.size:
        log_and_raise(
            OutsideDomainError(
                f"No target block is active for {empty.size} inputs",
                context={"rows": empty[:10].tolist()},
            ),
            logger=logger,
        )
    w3_blocks = net.w3.reshape(net.m, net.l, net.m + 1)
    block_outputs = np.einsum("ajr,njr->nja", w3_blocks, blocks2)
    output = (block_outputs * psi[:, :, None]).sum(axis=1) / weights[:, None]
    return {
        "x": array,
        "layer1": blocks1,
        "source_gate": source_gate,
        "layer2": blocks2,
        "psi": psi,
        "block_outputs": block_outputs,
        "output": output,
    }


def forward_batch(net: SynthesizedNetwork, points: ArrayLike) -> NDArray[np.float64]:
    """Forward pass on an (N, n) array; OutsideDomainError names the offending rows."""
    return _propagate(net, points)["output"]


def forward(net: SynthesizedNetwork, x: ArrayLike) -> NDArray[np.float64]:
    """Forward pass on one input vector."""
    point = np.asarray(x, dtype=np.float64).reshape(1, -1)
    return forward_batch(net, point)[0]


def trace_forward(net: SynthesizedNetwork, x: ArrayLike) -> ForwardTrace:
    """Forward pass on one input vector, keeping every intermediate layer."""
    values = _propagate(net, np.asarray(x, dtype=np.float64).reshape(1, -1))
    return ForwardTrace(**{name: array[0] for name, array in values.items()})


def network_sampler(net: SynthesizedNetwork, name: str = "network") -> FunctionSampler:
    return FunctionSampler(
        fn=lambda points: forward_batch(net, points),
        source_dim=net.n,
        target_dim=net.m,
        name=name,
    )


def save_network(net: SynthesizedNetwork, filename: str | Path) -> Path:
    return JSONReportGenerator().save_report(net.to_dict(), filename)


def _violation(message: str, **context: Any) -> InvariantViolationError:
    return InvariantViolationError(message, context=context)


def check_network_invariants(net: SynthesizedNetwork) -> None:
    """
    Raise InvariantViolationError unless the weights have the synthesized form.

    Checks widths, 0/1 entries of w2 (at most one 1 per target block in every
    column and at least one overall) and that every (w1 | b1) block inverts
    to a homogeneous vertex matrix.
    """
    n, m, k, l = net.n, net.m, net.k, net.l  # noqa: E741
    expected = {
        "w1": (k * (n + 1), n),
        "b1": (k * (n + 1),),
        "w2": (l * (m + 1), k * (n + 1)),
        "w3": (m, l * (m + 1)),
    }
    for name, shape in expected.items():
        actual = getattr(net, name).shape
        if actual != shape:
            log_and_raise(
                _violation(f"{name} has shape {actual}, expected {shape}", matrix=name),
                logger=logger,
            )
    if not net.tol >= 0:
        log_and_raise(_violation(f"tol must be non-negative, got {net.tol}"), logger=logger)

    if not np.all((net.w2 == 0.0) | (net.w2 == 1.0)):
        log_and_raise(_violation("w2 entries must be 0 or 1", matrix="w2"), logger=logger)
    per_block = net.w2.reshape(l, m + 1, k * (n + 1)).sum(axis=1)
    if np.any(per_block > 1):
        log_and_raise(
            _violation("A w2 column has two ones in one target block", matrix="w2"),
            logger=logger,
        )
    if np.any(per_block.sum(axis=0) == 0):
        log_and_raise(
            _violation("A source vertex has no image in w2", matrix="w2"),
            logger=logger,
        )

    stacked = np.concatenate(
        [net.w1.reshape(k, n + 1, n), net.b1.reshape(k, n + 1, 1)], axis=2
    )
    for i, block in enumerate(stacked):
        try:
            homogeneous = np.linalg.inv(block)
        except np.linalg.LinAlgError:
            log_and_raise(
                _violation(f"Layer-1 block {i} is singular", block=i), logger=logger
            )
        if np.abs(homogeneous[-1] - 1.0).max() > INVERSE_TOL * max(
            1.0, float(np.abs(homogeneous).max())
        ):
            log_and_raise(
                _violation(
                    f"Layer-1 block {i} is not a barycentric coordinate map", block=i
                ),
                logger=logger,
            )


@with_error_context({"stage": "load_network"})
def load_network(filename: str | Path) -> SynthesizedNetwork:
    """Read a network file and validate every structural invariant."""
    path = Path(filename)
    data = load_json_document(path)
    fields = ("n", "m", "k", "l", "tol", "w1", "b1", "w2", "w3")
    missing = [name for name in fields if name not in data]
    if missing:
        log_and_raise(
            FormatError(
                f"Network file {path} is missing fields {missing}",
                context={"filename": str(path), "missing": missing},
            ),
            logger=logger,
        )
    try:
        sizes = {name: int(data[name]) for name in ("n", "m", "k", "l")}
        tol = float(data["tol"])
        matrices = {
            name: np.asarray(data[name], dtype=np.float64)
            for name in ("w1", "b1", "w2", "w3")
        }
    except (TypeError, ValueError) as e:
        log_and_raise(
            FormatError(f"Malformed network file {path}: {e}", context={"filename": str(path)}),
            logger=logger,
        )
    if min(sizes.values()) < 1:
        log_and_raise(
            FormatError(f"Network sizes must be positive: {sizes}"), logger=logger
        )
    for name, array in matrices.items():
        if not np.all(np.isfinite(array)):
            log_and_raise(
                FormatError(f"{name} contains non-finite values", context={"matrix": name}),
                logger=logger,
            )
    net = SynthesizedNetwork(
        n=sizes["n"],
        m=sizes["m"],
        k=sizes["k"],
        l=sizes["l"],
        w1=matrices["w1"],
        b1=matrices["b1"],
        w2=matrices["w2"],
        w3=matrices["w3"],
        tol=tol,
    )
    check_network_invariants(net)
    logger.info(f"Loaded network {path} with widths {net.widths}")
    return net
