"""Shared fixtures: small complexes and a JSON file writer."""

import json
from pathlib import Path

import pytest

from simplicial_nets.simplicial_complex import SimplicialComplex, build_complex

TRIANGLE = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
TETRAHEDRON = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]


@pytest.fixture
def triangle() -> SimplicialComplex:
    return build_complex(2, TRIANGLE, [[0, 1, 2]])


@pytest.fixture
def tetrahedron() -> SimplicialComplex:
    return build_complex(3, TETRAHEDRON, [[0, 1, 2, 3]])


@pytest.fixture
def strip() -> SimplicialComplex:
    """Two triangles (a,b,c), (b,c,d) sharing the edge (b,c)."""
    return build_complex(
        2, [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], [[0, 1, 2], [1, 2, 3]]
    )


@pytest.fixture
def unit_interval() -> SimplicialComplex:
    return build_complex(1, [[0.0], [1.0]], [[0, 1]])


@pytest.fixture
def write_json(tmp_path: Path):
    def _write(name: str, payload) -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        return path

    return _write
