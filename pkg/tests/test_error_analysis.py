import math
import tracemalloc

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simplicial_nets.error_analysis import (
    ApproximationReport,
    ModulusBoundCheck,
    check_modulus_bound,
    complexity,
    estimate_extended_mesh,
    estimate_modulus,
    estimate_sup_distance,
    subdivide_until_extended_mesh,
    verify_equivalence,
)
from simplicial_nets.error_handling import (
    ComplexityOverflowError,
    ExtendedMeshNotReachedError,
    NonPositiveEpsilonError,
)
from simplicial_nets.geometry import sample_simplex_points
from simplicial_nets.network_generator import synthesize_network
from simplicial_nets.simplicial_approximation import FunctionSampler, VertexMap
from simplicial_nets.simplicial_complex import build_complex, mesh, subdivide


def sampler(fn, source_dim, target_dim, name="f"):
    return FunctionSampler(fn, source_dim, target_dim, name=name)


@pytest.mark.parametrize(
    ("args", "value"),
    [
        ((1, 3, 0, 1, 2, 0), 4),
        ((1, 3, 1, 1, 2, 1), 96),
        ((1, 0, 0, 1, 0, 0), 1),
        ((2, 1, 3, 5, 2, 0), 2 * 8 * 2),
    ],
)
def test_complexity(args, value):
    assert complexity(*args).value == value


def test_complexity_keeps_both_widths():
    figure = complexity(1, 3, 1, 1, 2, 1)
    assert (figure.source_width, figure.target_width) == (96, 18)
    assert figure.to_dict()["value"] == 96


def test_complexity_overflow():
    with pytest.raises(ComplexityOverflowError):
        complexity(1, 3, 100, 1, 2, 0)
    with pytest.raises(ComplexityOverflowError):
        complexity(1, 3, 2, 1, 2, 0, limit=100)


@pytest.mark.parametrize("args", [(0, 3, 0, 1, 2, 0), (1, -1, 0, 1, 2, 0), (1, 3, 0, 1, 2, -1)])
def test_complexity_rejects_bad_inputs(args):
    with pytest.raises(ValueError):
        complexity(*args)


@pytest.mark.parametrize("t", [0, 1, 2])
def test_complexity_matches_synthesized_width(tetrahedron, triangle, t):
    fine = subdivide(tetrahedron, t)
    phi = VertexMap.between(fine, triangle, [0] * fine.num_vertices)
    net = synthesize_network(fine, triangle, phi)
    assert net.widths[1] == complexity(1, 3, t, 1, 2, 0).source_width


def test_sup_distance_of_a_function_with_itself(strip):
    f = sampler(lambda x: np.sin(x), 2, 2)
    estimate = estimate_sup_distance(f, f, strip, samples=300, seed=1)
    assert estimate.value == 0.0
    assert estimate.samples == 300 + 15 * 2


def test_sup_distance_finds_the_worst_vertex(triangle):
    f = sampler(lambda x: x, 2, 2)
    h = sampler(lambda x: 0.5 * x, 2, 2)
    estimate = estimate_sup_distance(f, h, triangle, samples=100, seed=0)
    assert estimate.value == pytest.approx(0.5)
    assert np.linalg.norm(estimate.argmax) == pytest.approx(1.0)


def test_sup_distance_without_samples(triangle):
    f = sampler(lambda x: x, 2, 2)
    estimate = estimate_sup_distance(f, f, triangle, samples=0, seed=0, grid_resolution=None)
    assert estimate.value == 0.0
    assert estimate.argmax is None
    assert estimate.samples == 0


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), small=st.integers(1, 400), extra=st.integers(0, 400))
def test_sup_distance_is_monotone_in_samples(seed, small, extra):
    strip = build_complex(2, [[0, 0], [1, 0], [0, 1], [1, 1]], [[0, 1, 2], [1, 2, 3]])
    f = sampler(lambda x: np.sin(3 * x), 2, 2)
    h = sampler(lambda x: x, 2, 2)
    first = estimate_sup_distance(f, h, strip, samples=small, seed=seed, grid_resolution=None)
    second = estimate_sup_distance(
        f, h, strip, samples=small + extra, seed=seed, grid_resolution=None
    )
    assert second.value >= first.value


def test_sharded_runs_agree_exactly(strip):
    f = sampler(lambda x: np.sin(3 * x), 2, 2)
    h = sampler(lambda x: x, 2, 2)
    single = estimate_sup_distance(f, h, strip, samples=2000, seed=5, block_size=64)
    sharded = estimate_sup_distance(f, h, strip, samples=2000, seed=5, block_size=64, workers=4)
    assert single.value == sharded.value
    np.testing.assert_array_equal(single.argmax, sharded.argmax)
    assert estimate_modulus(f, strip, 0.1, 2000, 5, block_size=64) == estimate_modulus(
        f, strip, 0.1, 2000, 5, block_size=64, workers=4
    )


def test_verify_equivalence(tetrahedron, triangle):
    phi = VertexMap.between(tetrahedron, triangle, [0, 1, 2, 2])
    net = synthesize_network(tetrahedron, triangle, phi)
    report = verify_equivalence(tetrahedron, triangle, phi, net, samples=500, seed=0)
    assert report.passed
    assert report.max_error <= 1e-9
    assert report.to_dict()["samples"] == 500 + 35


def test_modulus_of_a_linear_map(unit_interval):
    double = sampler(lambda x: 2 * x, 1, 1)
    value = estimate_modulus(double, unit_interval, 0.1, samples=1000, seed=0)
    assert value <= 0.2 + 1e-12
    assert value == pytest.approx(0.2, rel=0.05)


def test_modulus_of_a_constant(strip):
    constant = sampler(lambda x: np.ones_like(x), 2, 2)
    assert estimate_modulus(constant, strip, 0.5, samples=200, seed=3) == 0.0


def test_modulus_pairs_stay_in_the_domain(triangle):
    def checked(x):
        assert np.all(x >= -1e-9) and np.all(x.sum(axis=1) <= 1 + 1e-9)
        return x

    value = estimate_modulus(sampler(checked, 2, 2), triangle, 0.3, samples=500, seed=2)
    assert 0.0 < value <= 0.3 + 1e-12


def test_modulus_rejects_non_positive_delta(strip):
    with pytest.raises(ValueError):
        estimate_modulus(sampler(lambda x: x, 2, 2), strip, 0.0, samples=10, seed=0)


def test_extended_mesh_of_the_identity(triangle, strip):
    identity = sampler(lambda x: x, 2, 2, "tau_inverse")
    assert estimate_extended_mesh(triangle, identity) == pytest.approx(math.sqrt(2))
    assert estimate_extended_mesh(strip, identity, samples=300) <= mesh(strip) + 1e-12


def test_extended_mesh_with_a_metric(triangle):
    identity = sampler(lambda x: x, 2, 2)

    def chebyshev(a, b):
        return np.abs(a - b).max(axis=-1)

    assert estimate_extended_mesh(triangle, identity, metric=chebyshev) == pytest.approx(1.0)


def test_extended_mesh_of_a_point():
    point = build_complex(2, [[0.5, 0.5]], [[0]])
    identity = sampler(lambda x: x, 2, 2)
    assert estimate_extended_mesh(point, identity, samples=10) == 0.0


def test_subdivide_until_extended_mesh(triangle):
    identity = sampler(lambda x: x, 2, 2)
    result = subdivide_until_extended_mesh(triangle, identity, epsilon=1.0, max_t=3)
    assert result.t == 1
    assert result.estimate == pytest.approx(math.sqrt(5) / 3)
    assert result.complex.num_maximal == 6
    with pytest.raises(ExtendedMeshNotReachedError):
        subdivide_until_extended_mesh(triangle, identity, epsilon=0.01, max_t=1)
    with pytest.raises(NonPositiveEpsilonError):
        subdivide_until_extended_mesh(triangle, identity, epsilon=0.0, max_t=1)


def test_modulus_bound_check():
    check = check_modulus_bound(rho_g=0.1, rho_net=0.3, target_mesh=0.05)
    assert check.bound == pytest.approx(0.4)
    assert check.holds
    assert check.precondition_met
    failing = ModulusBoundCheck(rho_g=0.1, rho_net=0.5, target_mesh=0.06)
    assert not failing.holds
    assert not failing.precondition_met


def test_approximation_report_labels_the_estimate():
    report = ApproximationReport(
        samples=10,
        seed=0,
        sup_error=0.5,
        argmax=np.array([0.1, 0.2]),
        target_mesh=math.sqrt(2),
        star_condition=None,
        complexity=complexity(1, 3, 0, 1, 2, 0),
        modulus={"0.1": check_modulus_bound(0.1, 0.1, 0.05)},
    )
    data = report.to_dict()
    assert report.within_mesh_bound
    assert data["sup_error"] == {"estimate": 0.5, "kind": "sampled lower bound", "argmax": [0.1, 0.2]}
    assert data["complexity"]["value"] == 4
    assert data["modulus"]["0.1"]["holds"]


def test_extended_mesh_matches_all_pairs(strip):
    bend = sampler(lambda x: np.column_stack([np.sin(3 * x[:, 0]), x[:, 1] ** 2]), 2, 2)
    points = sample_simplex_points(strip, 400, seed=9, grid_resolution=None, block_size=64)
    expected = 0.0
    for position in range(strip.num_maximal):
        images = bend(points[position :: strip.num_maximal])
        gaps = np.linalg.norm(images[:, None, :] - images[None, :, :], axis=-1)
        expected = max(expected, float(gaps.max()))
    single = estimate_extended_mesh(
        strip, bend, samples=400, seed=9, grid_resolution=None, block_size=64
    )
    sharded = estimate_extended_mesh(
        strip, bend, samples=400, seed=9, grid_resolution=None, block_size=64, workers=2
    )
    assert single == pytest.approx(expected, abs=1e-15)
    assert sharded == single


def test_extended_mesh_memory_stays_linear(triangle):
    identity = sampler(lambda x: x, 2, 2)
    tracemalloc.start()
    try:
        estimate = estimate_extended_mesh(triangle, identity, samples=8000, seed=0)
        _, peak = tracemalloc.get_traced_memory()
    finally:
        tracemalloc.stop()
    assert estimate <= math.sqrt(2) + 1e-12
    assert peak < 100 * 2**20
