"""
Command line interface: complex tools, vertex-map construction, network
synthesis and evaluation, equivalence verification and the ball example.

Exit codes: 0 pass, 1 validation or verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

from colorama import Fore, Style, just_fix_windows_console

from simplicial_nets.ball_example import BallExampleConfig, resolve_function, run_ball_example
from simplicial_nets.config_manager import ConfigManager, create_config_manager
from simplicial_nets.env_manager import get_env_manager
from simplicial_nets.error_analysis import verify_equivalence
from simplicial_nets.error_handling import (
    ConfigError,
    InvalidVertexMapError,
    SimplicialNetsError,
    get_logger,
    setup_global_exception_handling,
    setup_logging,
    validate_log_level,
)
from simplicial_nets.network_generator import (
    forward,
    load_network,
    save_network,
    synthesize_network,
)
from simplicial_nets.report_generator import JSONReportGenerator
from simplicial_nets.simplicial_approximation import (
    TIE_BREAKS,
    build_vertex_map,
    check_star_condition,
    load_vertex_map,
    save_vertex_map,
)
from simplicial_nets.simplicial_complex import (
    SimplicialComplex,
    load_complex,
    mesh,
    save_complex,
    subdivide,
)

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class CommandContext:
    """Configuration shared by every subcommand."""

    def __init__(self, config: ConfigManager, workers: int) -> None:
        self.config = config
        self.workers = workers
        self.tol = config.get_tolerance()

    def load(self, path: str | Path) -> SimplicialComplex:
        return load_complex(
            path,
            intersection_tol=self.config.get_intersection_tolerance(),
            max_condition=self.config.get_max_condition(),
        )


def _emit(document: Any) -> None:
    sys.stdout.write(JSONReportGenerator().render(document))


def _status(passed: bool, message: str) -> None:
    label = f"{Fore.GREEN}PASS" if passed else f"{Fore.RED}FAIL"
    print(f"{label}{Style.RESET_ALL} {message}", file=sys.stderr)


def _complex_summary(complex_: SimplicialComplex) -> dict[str, Any]:
    return {
        "complex_id": complex_.complex_id,
        "ambient_dim": complex_.ambient_dim,
        "dim": complex_.dim,
        "num_vertices": complex_.num_vertices,
        "num_maximal": complex_.num_maximal,
        "mesh": mesh(complex_),
    }


def _cmd_complex_validate(args: argparse.Namespace, ctx: CommandContext) -> int:
    complex_ = ctx.load(args.file)
    _emit({"valid": True, **_complex_summary(complex_)})
    _status(True, f"{args.file} is a valid pure simplicial complex")
    return EXIT_OK


def _cmd_complex_subdivide(args: argparse.Namespace, ctx: CommandContext) -> int:
    if args.t < 0:
        raise ValueError(f"--t must be non-negative, got {args.t}")
    refined = subdivide(ctx.load(args.file), args.t)
    save_complex(refined, args.out)
    _emit({"t": args.t, "out": str(args.out), **_complex_summary(refined)})
    _status(True, f"Sd^{args.t} written to {args.out}")
    return EXIT_OK


def _cmd_complex_mesh(args: argparse.Namespace, ctx: CommandContext) -> int:
    complex_ = ctx.load(args.file)
    _emit({"complex_id": complex_.complex_id, "mesh": mesh(complex_)})
    return EXIT_OK


def _cmd_build_map(args: argparse.Namespace, ctx: CommandContext) -> int:
    source, target = ctx.load(args.source), ctx.load(args.target)
    g = resolve_function(args.fn, source, target)
    max_t = ctx.config.get_max_t() if args.max_t is None else args.max_t
    resolution = ctx.config.get_resolution() if args.resolution is None else args.resolution
    tie_break = args.tie_break or ctx.config.get_tie_break()
    build = build_vertex_map(
        source,
        target,
        g,
        max_t=max_t,
        resolution=resolution,
        tol=ctx.tol,
        tie_break=tie_break,
        show_progress=ctx.config.get_show_progress(),
    )

    out = Path(args.out)
    source_path = Path(args.source)
    if build.t > 0:
        # the map always names the complex it is defined on
        source_path = out.with_name(f"{out.stem}.source_t{build.t}.json")
        save_complex(build.source, source_path)
    save_vertex_map(build.vertex_map, out, source_path, args.target)

    star = check_star_condition(
        build.source, target, build.vertex_map, g, resolution, ctx.tol
    )
    _emit(
        {
            "t": build.t,
            "function": g.name,
            "map": str(out),
            "source": str(source_path),
            "assignment": list(build.vertex_map.assignment),
            "star_condition": star.to_dict(),
        }
    )
    _status(star.passed, f"vertex map at t={build.t} written to {out}")
    return EXIT_OK if star.passed else EXIT_FAILURE


def _load_checked_map(
    args: argparse.Namespace, ctx: CommandContext
) -> tuple[SimplicialComplex, SimplicialComplex, Any]:
    loaded = load_vertex_map(args.map)
    source, target = ctx.load(args.source), ctx.load(args.target)
    if (
        loaded.source.complex_id != source.complex_id
        or loaded.target.complex_id != target.complex_id
    ):
        raise InvalidVertexMapError(
            f"{args.map} was built for other complexes than {args.source} and {args.target}",
            context={
                "map_source": loaded.source.complex_id,
                "map_target": loaded.target.complex_id,
                "source": source.complex_id,
                "target": target.complex_id,
            },
        )
    return source, target, loaded.vertex_map


def _cmd_net_synth(args: argparse.Namespace, ctx: CommandContext) -> int:
    source, target, phi = _load_checked_map(args, ctx)
    net = synthesize_network(source, target, phi, ctx.tol)
    save_network(net, args.out)
    _emit({"out": str(args.out), "widths": list(net.widths)})
    _status(True, f"network with widths {net.widths} written to {args.out}")
    return EXIT_OK


def _parse_point(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ValueError(f"--point must be comma-separated numbers, got {text!r}") from e


def _cmd_net_eval(args: argparse.Namespace, ctx: CommandContext) -> int:
    net = load_network(args.net)
    point = _parse_point(args.point)
    if len(point) != net.n:
        raise ValueError(f"--point has {len(point)} coordinates, the network expects {net.n}")
    _emit({"input": point, "output": forward(net, point)})
    return EXIT_OK


def _cmd_verify_equivalence(args: argparse.Namespace, ctx: CommandContext) -> int:
    net = load_network(args.net)
    source, target, phi = _load_checked_map(args, ctx)
    report = verify_equivalence(
        source,
        target,
        phi,
        net,
        samples=ctx.config.get_samples() if args.samples is None else args.samples,
        seed=ctx.config.get_seed() if args.seed is None else args.seed,
        tol=ctx.config.get_equivalence_tolerance(),
        workers=ctx.workers,
        show_progress=ctx.config.get_show_progress(),
        grid_resolution=ctx.config.get_grid_resolution(),
        block_size=ctx.config.get_block_size(),
    )
    if args.report:
        JSONReportGenerator().save_report(report.to_dict(), args.report)
    _emit(report.to_dict())
    _status(report.passed, f"max |network - simplicial map| = {report.max_error:.3e}")
    return EXIT_OK if report.passed else EXIT_FAILURE


def _cmd_example_ball(args: argparse.Namespace, ctx: CommandContext) -> int:
    settings = ctx.config.get_example_config()
    cfg = BallExampleConfig(
        t1=settings["t1"] if args.t1 is None else args.t1,
        t2=settings["t2"] if args.t2 is None else args.t2,
        samples=settings["samples"] if args.samples is None else args.samples,
        seed=settings["seed"] if args.seed is None else args.seed,
        tol=ctx.tol,
        max_t1=int(settings["max_t1"]),
        resolution=int(settings["resolution"]),
        deltas=tuple(float(delta) for delta in settings["deltas"]),
        tie_break=ctx.config.get_tie_break(),
        workers=ctx.workers,
        show_progress=ctx.config.get_show_progress(),
        grid_resolution=ctx.config.get_grid_resolution(),
        block_size=ctx.config.get_block_size(),
    )
    report = run_ball_example(cfg)
    document = report.to_dict()
    if args.report:
        JSONReportGenerator().save_report(document, args.report)
    _emit(document)

    equivalence = report.details["equivalence"]["passed"]
    star = report.star_condition is not None and report.star_condition.passed
    passed = bool(equivalence and star and report.within_mesh_bound)
    _status(
        passed,
        f"ball example t1={report.details['t1']} t2={report.details['t2']}: "
        f"sup error {report.sup_error:.6g} <= mesh {report.target_mesh:.6g}",
    )
    return EXIT_OK if passed else EXIT_FAILURE


Handler = Callable[[argparse.Namespace, CommandContext], int]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simplicial-nets",
        description="Two-hidden-layer networks realizing simplicial approximations",
    )
    parser.add_argument("--config", type=str, default=None, help="YAML configuration file")
    parser.add_argument("--log-level", type=str, default=None, help="DEBUG, INFO, WARNING, ...")
    parser.add_argument("--log-json", action="store_true", help="Structured JSON logs on stderr")
    parser.add_argument("--workers", type=int, default=None, help="Sampling threads")
    sub = parser.add_subparsers(dest="command", required=True)

    p_complex = sub.add_parser("complex", help="Validate, subdivide and measure complexes")
    complex_sub = p_complex.add_subparsers(dest="action", required=True)
    p_validate = complex_sub.add_parser("validate", help="Validate a complex file")
    p_validate.add_argument("file", type=str)
    p_validate.set_defaults(func=_cmd_complex_validate)
    p_subdivide = complex_sub.add_parser("subdivide", help="Iterated barycentric subdivision")
    p_subdivide.add_argument("file", type=str)
    p_subdivide.add_argument("--t", type=int, required=True)
    p_subdivide.add_argument("--out", type=str, required=True)
    p_subdivide.set_defaults(func=_cmd_complex_subdivide)
    p_mesh = complex_sub.add_parser("mesh", help="Largest simplex diameter")
    p_mesh.add_argument("file", type=str)
    p_mesh.set_defaults(func=_cmd_complex_mesh)

    p_approx = sub.add_parser("approx", help="Simplicial approximation")
    approx_sub = p_approx.add_subparsers(dest="action", required=True)
    p_build = approx_sub.add_parser("build-map", help="Build a vertex map by subdivision")
    p_build.add_argument("--source", type=str, required=True)
    p_build.add_argument("--target", type=str, required=True)
    p_build.add_argument(
        "--fn",
        type=str,
        required=True,
        help="identity | ball-projection | reflected-ball-projection | constant:<i> | module:attr",
    )
    p_build.add_argument("--max-t", type=int, default=None)
    p_build.add_argument("--resolution", type=int, default=None)
    p_build.add_argument("--tie-break", type=str, default=None, choices=list(TIE_BREAKS))
    p_build.add_argument("--out", type=str, required=True)
    p_build.set_defaults(func=_cmd_build_map)

    p_net = sub.add_parser("net", help="Network synthesis and evaluation")
    net_sub = p_net.add_subparsers(dest="action", required=True)
    p_synth = net_sub.add_parser("synth", help="Synthesize the network of a vertex map")
    p_synth.add_argument("--source", type=str, required=True)
    p_synth.add_argument("--target", type=str, required=True)
    p_synth.add_argument("--map", type=str, required=True)
    p_synth.add_argument("--out", type=str, required=True)
    p_synth.set_defaults(func=_cmd_net_synth)
    p_eval = net_sub.add_parser("eval", help="Forward pass on one point")
    p_eval.add_argument("--net", type=str, required=True)
    p_eval.add_argument("--point", type=str, required=True, help="x,y,...")
    p_eval.set_defaults(func=_cmd_net_eval)

    p_verify = sub.add_parser("verify", help="Check a network against its simplicial map")
    verify_sub = p_verify.add_subparsers(dest="action", required=True)
    p_equiv = verify_sub.add_parser("equivalence", help="Sampled network/map agreement")
    p_equiv.add_argument("--net", type=str, required=True)
    p_equiv.add_argument("--source", type=str, required=True)
    p_equiv.add_argument("--target", type=str, required=True)
    p_equiv.add_argument("--map", type=str, required=True)
    p_equiv.add_argument("--samples", type=int, default=None)
    p_equiv.add_argument("--seed", type=int, default=None)
    p_equiv.add_argument("--report", type=str, default="")
    p_equiv.set_defaults(func=_cmd_verify_equivalence)

    p_example = sub.add_parser("example", help="Built-in scenarios")
    example_sub = p_example.add_subparsers(dest="action", required=True)
    p_ball = example_sub.add_parser("ball", help="Approximate the projection B^3 -> B^2")
    p_ball.add_argument("--t1", type=int, default=None)
    p_ball.add_argument("--t2", type=int, default=None)
    p_ball.add_argument("--samples", type=int, default=None)
    p_ball.add_argument("--seed", type=int, default=None)
    p_ball.add_argument("--report", type=str, default="")
    p_ball.set_defaults(func=_cmd_example_ball)

    return parser


def _configure(args: argparse.Namespace) -> CommandContext:
    env = get_env_manager()
    config = create_config_manager(args.config or env.get_config_path())
    errors = config.validate_config()
    if errors:
        raise ConfigError(
            f"Invalid configuration: {'; '.join(errors)}", context={"errors": errors}
        )

    logging_config = config.get_logging_config()
    level_name = args.log_level or env.get_log_level() or str(logging_config["level"])
    setup_logging(
        log_level=validate_log_level(level_name),
        log_file=logging_config.get("file"),
        use_json=bool(args.log_json or logging_config.get("json")),
    )

    workers = args.workers or env.get_workers() or config.get_workers()
    if workers < 1:
        raise ValueError(f"--workers must be >= 1, got {workers}")
    return CommandContext(config, workers)


def main(argv: Sequence[str] | None = None) -> int:
    just_fix_windows_console()
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_global_exception_handling()
    handler: Handler = args.func

    try:
        ctx = _configure(args)
        return handler(args, ctx)
    except (ConfigError, ValueError) as e:
        _status(False, f"usage error: {e}")
        return EXIT_USAGE
    except SimplicialNetsError as e:
        _status(False, f"{e.error_code}: {e}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
