import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simplicial_nets.error_handling import (
    FormatError,
    InvariantViolationError,
    NotASimplexImageError,
    NotFullDimensionalError,
    OutsideDomainError,
)
from simplicial_nets.geometry import sample_simplex_points
from simplicial_nets.network_generator import (
    SynthesizedNetwork,
    check_network_invariants,
    forward,
    forward_batch,
    load_network,
    network_sampler,
    save_network,
    synthesize_network,
    trace_forward,
)
from simplicial_nets.simplicial_approximation import (
    VertexMap,
    evaluate_simplicial_map_batch,
)
from simplicial_nets.simplicial_complex import build_complex, subdivide

from .helpers import freudenthal_grid, monotone_vertex_map, random_sizes


@pytest.fixture
def pinched(tetrahedron, triangle):
    phi = VertexMap.between(tetrahedron, triangle, [0, 1, 2, 2])
    return synthesize_network(tetrahedron, triangle, phi)


def test_pinched_tetrahedron_weights(pinched):
    np.testing.assert_allclose(
        pinched.w1, [[-1, -1, -1], [1, 0, 0], [0, 1, 0], [0, 0, 1]], atol=1e-12
    )
    np.testing.assert_allclose(pinched.b1, [1, 0, 0, 0], atol=1e-12)
    np.testing.assert_array_equal(pinched.w2, [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 1]])
    np.testing.assert_array_equal(pinched.w3, [[0, 1, 0], [0, 0, 1]])
    assert pinched.widths == (3, 4, 3, 2)


def test_pinched_tetrahedron_forward(pinched):
    np.testing.assert_allclose(forward(pinched, [0.25, 0.25, 0.25]), [0.25, 0.5], atol=1e-12)
    with pytest.raises(OutsideDomainError):
        forward(pinched, [1.0, 1.0, 1.0])


def test_trace(pinched):
    trace = trace_forward(pinched, [0.25, 0.25, 0.25])
    np.testing.assert_allclose(trace.layer1, [[0.25, 0.25, 0.25, 0.25]], atol=1e-12)
    np.testing.assert_allclose(trace.layer2, [[0.25, 0.25, 0.5]], atol=1e-12)
    assert trace.source_gate.tolist() == [True]
    assert trace.psi.tolist() == [True]
    assert set(trace.to_dict()) == {
        "x", "layer1", "source_gate", "layer2", "psi", "block_outputs", "output",
    }


def test_forward_rejects_wrong_dimension(pinched):
    with pytest.raises(ValueError):
        forward(pinched, [0.1, 0.1])


def test_weights_are_read_only(pinched):
    with pytest.raises(ValueError):
        pinched.w2[0, 0] = 0.0


def test_shared_edge_is_averaged(strip):
    net = synthesize_network(strip, strip, VertexMap.identity(strip))
    trace = trace_forward(net, [0.5, 0.5])
    assert trace.source_gate.tolist() == [True, True]
    np.testing.assert_allclose(trace.output, [0.5, 0.5], atol=1e-12)


def test_lower_dimensional_complexes_are_rejected(unit_interval):
    segment = build_complex(2, [[0, 0], [1, 1]], [[0, 1]])
    with pytest.raises(NotFullDimensionalError):
        synthesize_network(segment, unit_interval, VertexMap.between(segment, unit_interval, [0, 1]))


def test_synthesis_validates_the_map(unit_interval):
    disjoint = build_complex(1, [[0.0], [1.0], [3.0], [4.0]], [[0, 1], [2, 3]])
    with pytest.raises(NotASimplexImageError):
        synthesize_network(
            unit_interval, disjoint, VertexMap.between(unit_interval, disjoint, [1, 2])
        )


def test_save_and_load(pinched, tmp_path):
    path = save_network(pinched, tmp_path / "net.json")
    data = json.loads(path.read_text(encoding="utf-8"))
    assert data["w2"] == [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 1]]
    loaded = load_network(path)
    np.testing.assert_array_equal(loaded.w1, pinched.w1)
    np.testing.assert_array_equal(
        forward(loaded, [0.1, 0.2, 0.3]), forward(pinched, [0.1, 0.2, 0.3])
    )


def test_load_truncated_file(pinched, tmp_path):
    text = save_network(pinched, tmp_path / "net.json").read_text(encoding="utf-8")
    truncated = tmp_path / "truncated.json"
    truncated.write_text(text[: len(text) // 2], encoding="utf-8")
    with pytest.raises(FormatError) as info:
        load_network(truncated)
    assert info.value.context["stage"] == "load_network"


def test_load_rejects_fractional_w2(pinched, write_json):
    payload = pinched.to_dict()
    payload["w2"][2][3] = 0.5
    with pytest.raises(InvariantViolationError):
        load_network(write_json("net.json", payload))


@pytest.mark.parametrize(
    ("field", "value", "error"),
    [
        ("w1", [[1.0, 0.0, 0.0]], InvariantViolationError),
        ("b1", [0.0, 0.0, 0.0, 0.0], InvariantViolationError),
        ("tol", -1.0, InvariantViolationError),
        ("k", 0, FormatError),
        ("w3", [[0, 1, 0], [0, 0, "x"]], FormatError),
        ("w3", [[0, 1, 0], [0, 0, float("inf")]], FormatError),
    ],
)
def test_load_rejects_broken_networks(pinched, write_json, field, value, error):
    payload = pinched.to_dict()
    payload[field] = value
    with pytest.raises(error):
        load_network(write_json("net.json", payload))


def test_load_rejects_missing_fields(pinched, write_json):
    payload = pinched.to_dict()
    del payload["w3"]
    with pytest.raises(FormatError):
        load_network(write_json("net.json", payload))


def test_w2_column_without_image(pinched):
    w2 = pinched.w2.copy()
    w2[0, 0] = 0.0
    broken = SynthesizedNetwork(
        n=3,
        m=2,
        k=1,
        l=1,
        w1=pinched.w1.copy(),
        b1=pinched.b1.copy(),
        w2=w2,
        w3=pinched.w3.copy(),
    )
    with pytest.raises(InvariantViolationError):
        check_network_invariants(broken)


def test_network_sampler(pinched):
    sampler = network_sampler(pinched)
    np.testing.assert_allclose(sampler([[0.25, 0.25, 0.25]]), [[0.25, 0.5]], atol=1e-12)


def test_widths_of_a_subdivided_pair(triangle):
    fine = subdivide(triangle, 1)
    net = synthesize_network(fine, triangle, VertexMap.between(fine, triangle, [0] * 7))
    assert net.widths == (2, 18, 3, 2)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dims=st.sampled_from([(1, 1), (1, 2), (2, 1), (2, 2), (3, 2)]))
def test_network_realizes_the_simplicial_map(seed, dims):
    rng = np.random.default_rng(seed)
    source_index, source = freudenthal_grid(random_sizes(rng, dims[0], 12), rng, jitter=0.05)
    target_sizes = random_sizes(rng, dims[1], 8)
    target_index, target = freudenthal_grid(target_sizes, rng, jitter=0.05)
    phi = monotone_vertex_map(source_index, source, target_index, target, target_sizes, rng)
    net = synthesize_network(source, target, phi)
    check_network_invariants(net)

    points = sample_simplex_points(source, 64, seed=seed, grid_resolution=2)
    expected = evaluate_simplicial_map_batch(source, target, phi, points)
    np.testing.assert_allclose(forward_batch(net, points), expected, atol=1e-7)


def test_partial_target_block_tolerance_scales_with_target_dimension(tetrahedron, strip):
    # vertex 3 folds onto strip vertex 1, so the second strip block sums to 1 - lambda_0
    phi = VertexMap.between(tetrahedron, strip, [0, 1, 2, 1])
    net = synthesize_network(tetrahedron, strip, phi)
    trace = trace_forward(net, [0.3, 0.3, 0.4 - 3.5e-9])
    assert trace.psi.tolist() == [True, False]
    np.testing.assert_allclose(trace.output, [0.7, 0.3], atol=1e-8)


DIMENSION_PAIRS = [(n, m) for n in range(1, 4) for m in range(1, 4)]


@pytest.mark.slow
@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dims=st.sampled_from(DIMENSION_PAIRS))
def test_network_equals_the_simplicial_map_at_full_scale(seed, dims):
    rng = np.random.default_rng(seed)
    source_index, source = freudenthal_grid(random_sizes(rng, dims[0], 30), rng, jitter=0.05)
    target_sizes = random_sizes(rng, dims[1], 30)
    target_index, target = freudenthal_grid(target_sizes, rng, jitter=0.05)
    phi = monotone_vertex_map(source_index, source, target_index, target, target_sizes, rng)
    net = synthesize_network(source, target, phi)
    assert net.widths == (
        dims[0],
        source.num_maximal * (dims[0] + 1),
        target.num_maximal * (dims[1] + 1),
        dims[1],
    )

    points = sample_simplex_points(source, 1000, seed=seed, grid_resolution=None)
    expected = evaluate_simplicial_map_batch(source, target, phi, points)
    np.testing.assert_allclose(forward_batch(net, points), expected, rtol=0, atol=1e-9)
