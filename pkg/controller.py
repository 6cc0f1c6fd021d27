import asyncio
import argparse
import sys
from typing import List, Optional

from cvqed.commands import cmd_dispersion, cmd_groundstate, cmd_renorm, cmd_scatter, cmd_validate
from cvqed.common.constants import EXIT_CONFIG, EXIT_OK, EXIT_UNEXPECTED
from cvqed.common.errors import ConfigError, CvqedError
from cvqed.common.logging import get_logger
from cvqed.config import RunConfig

L = get_logger(__name__)

COMMANDS = ("renorm", "groundstate", "scatter", "validate", "dispersion")


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got '{text}'")


def _load_config(args) -> RunConfig:
    config = RunConfig.load(args.config) if args.config else RunConfig()
    overrides = {
        "backend": args.backend,
        "n_max": args.n_max,
        "seed": args.seed,
        "out": args.out,
    }
    if args.command == "renorm":
        overrides.update(
            renorm_m=args.m,
            kernel=args.kernel,
            constant=args.constant,
            spacing=args.spacing,
            monte_carlo=args.monte_carlo,
            literal=args.literal,
        )
    else:
        overrides["m"] = args.m
    if args.command == "scatter":
        overrides.update(
            dt=args.dt[0] if args.dt else None,
            e=args.e[0] if args.e else None,
            strict=args.strict,
            frame=args.frame,
            sign=args.sign,
            coupling=args.coupling,
        )
    return config.with_overrides(**overrides)


def main():
    parser = argparse.ArgumentParser(
        description="Simulates the continuous-variable scalar QED scattering algorithm at desk scale.",
        allow_abbrev=False,
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, help="JSON run configuration. Defaults apply to missing keys.")
    common.add_argument("--out", type=str, help="Directory for report files. Prints to standard output if omitted.")
    common.add_argument(
        "--format",
        choices=("text", "json", "csv"),
        help="Output format. Defaults to the first entry of output.formats.",
    )
    common.add_argument("--seed", type=int, help="Seed of sampled outcomes.")
    common.add_argument("--m", type=float, help="Scalar mass in lattice units.")
    common.add_argument("--n-max", type=int, dest="n_max", help="Occupation cutoff of the Fock backend.")
    common.add_argument("--backend", choices=("gaussian", "fock"), help="Simulation backend.")

    subparsers = parser.add_subparsers(dest="command")

    renorm = subparsers.add_parser("renorm", parents=[common], help="Prints the one-loop constants table.")
    renorm.add_argument(
        "--constant",
        action="append",
        help="Constant to evaluate; repeatable. Use 'all' for the full table.",
    )
    renorm.add_argument("--kernel", choices=("lattice", "continuum"), help="Dispersion inside the Pi^(1) loop.")
    renorm.add_argument("--spacing", type=float, help="Lattice spacing used to restore physical units.")
    renorm.add_argument(
        "--monte-carlo",
        action="store_true",
        default=None,
        dest="monte_carlo",
        help="Adds quasi-Monte-Carlo cross-checks.",
    )
    renorm.add_argument(
        "--literal",
        action="store_true",
        default=None,
        help="Uses the literal Feynman-parameter denominator in Pi^(1).",
    )

    groundstate = subparsers.add_parser(
        "groundstate", parents=[common], help="Prepares the interaction-free ground state and checks it."
    )
    groundstate.add_argument(
        "--emit-circuit",
        action="store_true",
        help="Writes the ground-state optical circuit next to the report.",
    )
    groundstate.add_argument(
        "--emit-state",
        action="store_true",
        help="Writes the Gaussian ground-state snapshot (gaussian backend).",
    )

    scatter = subparsers.add_parser("scatter", parents=[common], help="Runs the scattering pipeline.")
    scatter.add_argument(
        "--dt",
        type=_float_list,
        help="Trotter step; several comma separated values print the Trotter-order table.",
    )
    scatter.add_argument(
        "--e",
        type=_float_list,
        help="Target coupling; several comma separated values run a concurrent sweep.",
    )
    scatter.add_argument("--frame", choices=("particle", "position"), help="Native frame of the Fock backend.")
    scatter.add_argument("--sign", choices=("literal", "physical"), help="Sign of the step exponentials.")
    scatter.add_argument(
        "--coupling",
        choices=("transverse", "full"),
        help="Photon components the scalar current couples to; full includes longitudinal photons.",
    )
    scatter.add_argument(
        "--strict",
        action="store_true",
        default=None,
        help="Fails instead of warning when the constraint trace exceeds its bound.",
    )

    validate = subparsers.add_parser("validate", parents=[common], help="Runs the invariant suite.")
    validate.add_argument(
        "--inject-symplectic-error",
        type=float,
        default=0.0,
        metavar="EPS",
        help="Perturbs the symplectic checks by EPS.",
    )
    validate.add_argument("--skip-renorm", action="store_true", help="Skips the cubature checks.")
    validate.add_argument("--skip-dynamics", action="store_true", help="Skips the short scattering runs.")

    subparsers.add_parser("dispersion", parents=[common], help="Prints the dispersion table.")

    args = parser.parse_args()
    if len(sys.argv) == 1 or args.command is None:
        parser.print_help()
        return

    sys.exit(asyncio.run(async_main(args)))


async def _dispatch(args, config: RunConfig):
    if args.command == "renorm":
        return await asyncio.to_thread(cmd_renorm, config)
    if args.command == "groundstate":
        return await asyncio.to_thread(cmd_groundstate, config, args.emit_circuit, args.emit_state)
    if args.command == "scatter":
        return await cmd_scatter(config, dts=args.dt, es=args.e)
    if args.command == "validate":
        return await asyncio.to_thread(
            cmd_validate,
            config,
            args.inject_symplectic_error,
            not args.skip_renorm,
            not args.skip_dynamics,
        )
    return await asyncio.to_thread(cmd_dispersion, config)


async def async_main(args) -> int:
    """Runs one subcommand and returns its exit code."""
    try:
        config = _load_config(args)
    except ConfigError as e:
        L.error(f"Configuration error: {e}")
        return EXIT_CONFIG

    try:
        result = await _dispatch(args, config)
        fmt: Optional[str] = args.format or config.formats[0]
        out_dir = config["output"]["dir"]
        if out_dir:
            formats = [fmt] if args.format else config.formats
            result.save(out_dir, args.command, formats)
        else:
            print(result.render(fmt), end="")
        if result.exit_code != EXIT_OK:
            L.warning(f"{args.command} finished with exit code {result.exit_code}")
        return result.exit_code
    except CvqedError as e:
        L.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except Exception as e:
        L.error(f"An error occurred: {e}")
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    main()
