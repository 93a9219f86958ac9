"""Command line front end.

    helmbox solve --problem plane --leaves 4 --order 16 --ppw 24 \
        --digits 11 --out results/

Exit codes: 0 converged, 2 no convergence, 3 configuration error,
4 numerical failure.
"""

import argparse
import sys
from pathlib import Path

from .errors import ConfigError, NoConvergenceError, NumericalError
from .experiment import ExperimentConfig, run_experiment, run_sweep
from .problems import PROBLEM_KINDS

EXIT_OK = 0
EXIT_NO_CONVERGENCE = 2
EXIT_CONFIG = 3
EXIT_NUMERICAL = 4

_CONFIG_KEYS = {
    "problem": str, "leaves": int, "order": int, "ppw": str, "kappa": float,
    "tol": float, "digits": int, "threads": int, "restart": int,
    "max_iterations": int, "inner_tol": float, "inner_maxit": int,
    "flexible": bool, "deterministic": bool, "reference": bool, "out": str,
}


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"cannot parse boolean value {text!r}")


def read_config_file(path: str) -> dict:
    """Flat key = value text file; '#' starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, val = (p.strip() for p in line.partition("="))
        key = key.replace("-", "_")
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        typ = _CONFIG_KEYS[key]
        values[key] = _parse_bool(val) if typ is bool else typ(val)
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="helmbox",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("solve", help="solve one problem configuration")
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--problem", choices=PROBLEM_KINDS)
    p.add_argument("--leaves", type=int, metavar="L",
                   help="leaves per side (mesh is L x L x L)")
    p.add_argument("--order", type=int, metavar="N_C",
                   help="Chebyshev nodes per direction (default 16)")
    p.add_argument("--ppw", metavar="P",
                   help="points per wavelength; a comma list runs a sweep "
                        "writing table.csv")
    p.add_argument("--kappa", type=float, help="wave number (alternative to --ppw)")
    p.add_argument("--tol", type=float, help="residual reduction target")
    p.add_argument("--digits", type=int,
                   help="expected accuracy digits; sets tol = 1e-(digits+2)")
    p.add_argument("--threads", type=int)
    p.add_argument("--restart", type=int, metavar="M")
    p.add_argument("--maxit", dest="max_iterations", type=int)
    p.add_argument("--inner-tol", dest="inner_tol", type=float,
                   help="residual reduction of the leaf-local solves")
    p.add_argument("--flexible", action="store_true", default=None,
                   help="use flexible (right-preconditioned) GMRES")
    p.add_argument("--deterministic", action=argparse.BooleanOptionalAction,
                   default=None, help="thread-count-independent reductions")
    p.add_argument("--reference", action="store_true", default=None,
                   help="also solve to machine tolerance to report E_h")
    p.add_argument("--out", metavar="DIR", help="artifact output directory")
    return parser


def _assemble_config(args) -> tuple[ExperimentConfig, list | None]:
    values = {}
    if args.config:
        values.update(read_config_file(args.config))
    for key in _CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    ppw_sweep = None
    ppw = values.get("ppw")
    if isinstance(ppw, str):
        parts = [float(p) for p in ppw.split(",") if p.strip()]
        if not parts:
            raise ConfigError(f"cannot parse ppw value {ppw!r}")
        if len(parts) == 1:
            values["ppw"] = parts[0]
        else:
            ppw_sweep = parts
            values["ppw"] = parts[0]
    try:
        cfg = ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return cfg, ppw_sweep


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, ppw_sweep = _assemble_config(args)
        if ppw_sweep is not None:
            results = run_sweep(cfg, ppw_sweep)
        else:
            results = [run_experiment(cfg)]
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoConvergenceError as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    status = EXIT_OK
    for res in results:
        r = res.report
        err = res.errors
        line = (f"{res.config.problem} L={res.config.leaves} "
                f"order={res.config.order} kappa={res.config.kappa:.4f} "
                f"N={res.N}: {'converged' if r.converged else 'NOT converged'} "
                f"in {r.iterations} iterations "
                f"(reduction {r.achieved_reduction:.3e}, "
                f"{r.wall_time:.1f}s solve, {res.setup_time:.1f}s setup)")
        if err.E_h_it is not None:
            line += f", E_h_it={err.E_h_it:.3e}"
        if err.E_h is not None:
            line += f", E_h={err.E_h:.3e}"
        print(line)
        if not r.converged:
            status = EXIT_NO_CONVERGENCE
    return status


if __name__ == "__main__":
    sys.exit(main())
