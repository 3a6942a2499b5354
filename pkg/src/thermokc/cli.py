"""``thermokc`` command line."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import compressor
from .bitcore import BitString, read_bits_file
from .harness import ConfigError, load_config, run_experiment
from .machine import MachineConfig, exact_k, kraft_sum
from .thermal import Hamiltonian, LadderSchedule, anneal_ladder, exact_thermo
from .trajectory import format_trajectory

EXIT_OK, EXIT_ERROR, EXIT_THRESHOLD = 0, 1, 2


def _bits(text: str) -> BitString:
    return BitString.from_str(text)


def cmd_oracle(args) -> int:
    cfg = MachineConfig(step_budget=args.steps)
    res = exact_k(_bits(args.alpha), _bits(args.data), args.lmax, cfg)
    print(str(res))
    return EXIT_OK


def cmd_kraft(args) -> int:
    k = kraft_sum(args.lmax, _bits(args.data), MachineConfig(step_budget=args.steps))
    print(f"{k.numerator}/{k.denominator}")
    return EXIT_OK


def cmd_complexity(args) -> int:
    y = read_bits_file(args.y)
    x = read_bits_file(args.x) if args.x else BitString()
    method = compressor.PRIMED if args.method == "primed" else compressor.DIFF
    print(compressor.estimate(y, x, method).csv_row())
    return EXIT_OK


def cmd_simulate(args) -> int:
    H = Hamiltonian(args.rows, args.cols, args.J, args.h)
    ladder = LadderSchedule(args.T, args.beta_max, args.beta_min, args.sweeps)
    text = format_trajectory(anneal_ladder(H, ladder, args.seed, args.tag))
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_exact(args) -> int:
    res = exact_thermo(Hamiltonian(args.rows, args.cols, args.J, args.h), args.beta)
    print("beta,logZ,mean_energy,entropy_bits")
    print(res.csv_row())
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.out or cfg.output or ".")
    report = run_experiment(cfg)
    report.write(out)
    for name, value, bound, ok in report.threshold_results():
        print(f"{'PASS' if ok else 'FAIL'} {name}={value} (>= {bound})")
    return EXIT_OK if report.passed else EXIT_THRESHOLD


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="thermokc")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("oracle", help="exact bounded complexity by enumeration")
    p.add_argument("--alpha", required=True, help="target bits ('' for the empty string)")
    p.add_argument("--data", default="", help="conditioning bits")
    p.add_argument("--lmax", type=int, required=True)
    p.add_argument("--steps", type=int, default=10_000)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("kraft", help="exact Kraft sum of halting programs")
    p.add_argument("--lmax", type=int, required=True)
    p.add_argument("--data", default="")
    p.add_argument("--steps", type=int, default=10_000)
    p.set_defaults(func=cmd_kraft)

    p = sub.add_parser("complexity", help="LZ78 conditional complexity estimate")
    p.add_argument("--y", required=True)
    p.add_argument("--x")
    p.add_argument("--method", choices=("primed", "diff"), default="primed")
    p.set_defaults(func=cmd_complexity)

    p = sub.add_parser("simulate", help="anneal an Ising lattice up the temperature ladder")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--J", type=float, default=1.0)
    p.add_argument("--h", type=float, default=0.0)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--beta-max", type=float, default=2.0)
    p.add_argument("--beta-min", type=float, default=0.05)
    p.add_argument("--sweeps", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tag", default="t_i")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("exact", help="exact thermodynamics by enumeration")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--J", type=float, default=1.0)
    p.add_argument("--h", type=float, default=0.0)
    p.add_argument("--beta", type=float, required=True)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("experiment", help="run a configured experiment and write CSV reports")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"thermokc: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
