import json
import math
import shutil
from pathlib import Path

import pytest

from simplicial_nets.cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main
from simplicial_nets.simplicial_complex import build_complex, load_complex, save_complex

from .conftest import TETRAHEDRON, TRIANGLE

REPO_CONFIG = Path(__file__).resolve().parents[1] / "config.yml"


@pytest.fixture
def workspace(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("SIMPLICIAL_NETS_CONFIG", raising=False)
    monkeypatch.delenv("SIMPLICIAL_NETS_WORKERS", raising=False)
    save_complex(build_complex(2, TRIANGLE, [[0, 1, 2]]), tmp_path / "triangle.json")
    save_complex(build_complex(3, TETRAHEDRON, [[0, 1, 2, 3]]), tmp_path / "tetrahedron.json")
    save_complex(
        build_complex(2, [[0, 0], [1, 0], [0, 1], [1, 1]], [[0, 1, 2], [1, 2, 3]]),
        tmp_path / "strip.json",
    )
    save_complex(build_complex(1, [[0.0], [1.0]], [[0, 1]]), tmp_path / "interval.json")
    save_complex(
        build_complex(1, [[0.0], [1 / 3], [2 / 3], [1.0]], [[0, 1], [1, 2], [2, 3]]),
        tmp_path / "thirds.json",
    )
    return tmp_path


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_complex_validate(workspace, capsys):
    code, document = run(capsys, "complex", "validate", "strip.json")
    assert code == EXIT_OK
    assert document["valid"] is True
    assert document["num_maximal"] == 2


def test_complex_validate_reports_bad_geometry(workspace, capsys):
    (workspace / "bad.json").write_text(
        json.dumps({"ambient_dim": 2, "vertices": [[0, 0], [1, 1], [2, 2]], "maximal_simplices": [[0, 1, 2]]}),
        encoding="utf-8",
    )
    code, document = run(capsys, "complex", "validate", "bad.json")
    assert code == EXIT_FAILURE
    assert document is None


def test_complex_subdivide_and_mesh(workspace, capsys):
    code, document = run(capsys, "complex", "subdivide", "triangle.json", "--t", "1", "--out", "sd.json")
    assert code == EXIT_OK
    assert document["num_vertices"] == 7
    assert load_complex(workspace / "sd.json").num_maximal == 6
    code, document = run(capsys, "complex", "mesh", "triangle.json")
    assert document["mesh"] == pytest.approx(math.sqrt(2))


def test_negative_subdivision_is_a_usage_error(workspace, capsys):
    code, _ = run(capsys, "complex", "subdivide", "triangle.json", "--t", "-1", "--out", "x.json")
    assert code == EXIT_USAGE


def test_pipeline_on_the_strip(workspace, capsys):
    code, document = run(
        capsys,
        "approx", "build-map",
        "--source", "strip.json", "--target", "strip.json",
        "--fn", "identity", "--max-t", "0", "--tie-break", "nearest",
        "--out", "maps/phi.json",
    )
    assert code == EXIT_OK
    assert document["assignment"] == [0, 1, 2, 3]
    assert document["star_condition"]["passed"]

    code, document = run(
        capsys,
        "net", "synth",
        "--source", "strip.json", "--target", "strip.json",
        "--map", "maps/phi.json", "--out", "net.json",
    )
    assert code == EXIT_OK
    assert document["widths"] == [2, 6, 6, 2]

    code, document = run(capsys, "net", "eval", "--net", "net.json", "--point", "0.2,0.3")
    assert code == EXIT_OK
    assert document["output"] == pytest.approx([0.2, 0.3])

    code, _ = run(capsys, "net", "eval", "--net", "net.json", "--point", "2,2")
    assert code == EXIT_FAILURE
    code, _ = run(capsys, "net", "eval", "--net", "net.json", "--point", "0.1")
    assert code == EXIT_USAGE


def test_build_map_saves_the_subdivided_source(workspace, capsys):
    code, document = run(
        capsys,
        "approx", "build-map",
        "--source", "interval.json", "--target", "thirds.json",
        "--fn", "identity", "--max-t", "4", "--out", "phi.json",
    )
    assert code == EXIT_OK
    assert document["t"] == 3
    assert document["source"] == "phi.source_t3.json"
    assert load_complex(workspace / "phi.source_t3.json").num_vertices == 9

    code, document = run(
        capsys,
        "net", "synth",
        "--source", "phi.source_t3.json", "--target", "thirds.json",
        "--map", "phi.json", "--out", "net.json",
    )
    assert code == EXIT_OK
    assert document["widths"] == [1, 16, 6, 1]


def test_build_map_failure(workspace, capsys):
    code, _ = run(
        capsys,
        "approx", "build-map",
        "--source", "interval.json", "--target", "thirds.json",
        "--fn", "identity", "--max-t", "1", "--out", "phi.json",
    )
    assert code == EXIT_FAILURE


def test_unknown_function_is_a_usage_error(workspace, capsys):
    code, _ = run(
        capsys,
        "approx", "build-map",
        "--source", "strip.json", "--target", "strip.json",
        "--fn", "mystery", "--out", "phi.json",
    )
    assert code == EXIT_USAGE


def _pinched_pipeline(capsys):
    run(
        capsys,
        "approx", "build-map",
        "--source", "tetrahedron.json", "--target", "triangle.json",
        "--fn", "ball-projection", "--max-t", "0", "--out", "phi.json",
    )
    run(
        capsys,
        "net", "synth",
        "--source", "tetrahedron.json", "--target", "triangle.json",
        "--map", "phi.json", "--out", "net.json",
    )


def test_verify_equivalence_reports_are_byte_identical(workspace, capsys):
    _pinched_pipeline(capsys)
    arguments = [
        "verify", "equivalence", "--net", "net.json",
        "--source", "tetrahedron.json", "--target", "triangle.json", "--map", "phi.json",
        "--samples", "300", "--seed", "4",
    ]
    code, document = run(capsys, *arguments, "--report", "first.json")
    assert code == EXIT_OK
    assert document["passed"]
    assert document["samples"] == 335
    code, _ = run(capsys, "--workers", "3", *arguments, "--report", "second.json")
    assert code == EXIT_OK
    assert (workspace / "first.json").read_bytes() == (workspace / "second.json").read_bytes()


def test_map_for_other_complexes_is_rejected(workspace, capsys):
    _pinched_pipeline(capsys)
    code, _ = run(
        capsys,
        "net", "synth",
        "--source", "tetrahedron.json", "--target", "strip.json",
        "--map", "phi.json", "--out", "other.json",
    )
    assert code == EXIT_FAILURE


def test_example_ball(workspace, capsys):
    code, document = run(
        capsys, "example", "ball", "--t1", "0", "--t2", "0", "--samples", "200",
        "--seed", "0", "--report", "ball.json",
    )
    assert code == EXIT_OK
    network = document["details"]["reference"]["network"]
    assert network["w1"] == [[-1, -1, -1], [1, 0, 0], [0, 1, 0], [0, 0, 1]]
    assert network["b1"] == [1, 0, 0, 0]
    assert network["w2"] == [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 1]]
    assert network["w3"] == [[0, 1, 0], [0, 0, 1]]
    assert document["sup_error"]["kind"] == "sampled lower bound"
    assert document["sup_error"]["estimate"] <= math.sqrt(2)
    assert json.loads((workspace / "ball.json").read_text(encoding="utf-8")) == document


def test_config_from_the_environment(workspace, capsys, monkeypatch):
    (workspace / "custom.yml").write_text("approximation:\n  tie_break: nearest\n", encoding="utf-8")
    monkeypatch.setenv("SIMPLICIAL_NETS_CONFIG", "custom.yml")
    code, document = run(
        capsys,
        "approx", "build-map", "--source", "strip.json", "--target", "strip.json",
        "--fn", "identity", "--max-t", "0", "--out", "phi.json",
    )
    assert code == EXIT_OK
    assert document["assignment"] == [0, 1, 2, 3]


def test_invalid_config_is_a_usage_error(workspace, capsys):
    (workspace / "bad.yml").write_text("analysis:\n  workers: 0\n", encoding="utf-8")
    code, _ = run(capsys, "--config", "bad.yml", "complex", "mesh", "triangle.json")
    assert code == EXIT_USAGE
    code, _ = run(capsys, "--config", "absent.yml", "complex", "mesh", "triangle.json")
    assert code == EXIT_USAGE


def test_argparse_usage_errors(workspace):
    with pytest.raises(SystemExit) as info:
        main(["complex"])
    assert info.value.code == EXIT_USAGE


def test_commands_run_with_the_repository_config(workspace, capsys):
    shutil.copy(REPO_CONFIG, workspace / "config.yml")
    code, document = run(capsys, "complex", "validate", "triangle.json")
    assert code == EXIT_OK
    assert document["valid"] is True
