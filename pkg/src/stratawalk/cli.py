"""Command line front end.

Subcommands
-----------
validate     check the standing hypotheses of an environment config
classify     run the recurrence/transience certificate cascade
chi-compare  continued-fraction characteristic function vs Monte Carlo
scan         classify a family across a sweep of one parameter
curve        tabulate diagnostic sequences (psi, phi variants, series terms)

All commands read the environment from a JSON config (--config) with the
schema accepted by ``environment_from_config``.  Numeric tables go to
--out as CSV (default) or JSON, floats rendered with 17 significant
digits so round-trips are exact; a ``<command>_manifest.json`` sidecar
records the inputs that produced them.

Exit codes: 0 success (an Inconclusive verdict is still a success),
1 domain failure (hypotheses violated, divergent vertical walk, bad
frequency window), 2 usage or config errors.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import os
import sys
from datetime import datetime, timezone

import numpy as np

from .chi import ChiEvaluator
from .criterion import (
    ClassifyOptions,
    CriterionEvaluator,
    _log_grid,
    classify,
)
from .environment import ConfigError, environment_from_config, validate
from .flux import Direction
from .montecarlo import empirical_chf, sample_excursions
from .sequences import build

__version__ = "0.1.0"

_CURVE_KINDS = ("psi", "phi_full", "phi_plus", "phi_pp", "phi_pm", "criterion_terms")


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _jsonable(x):
    if isinstance(x, bool):
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


def _write_table(path: str, header: list[str], rows: list[tuple], fmt: str) -> str:
    """Write one table; CSV always carries the header row."""
    if fmt == "json":
        payload = [
            {k: _jsonable(v) for k, v in zip(header, row)} for row in rows
        ]
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")
    else:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    return path


def _print_table(header: list[str], rows: list[tuple], title: str = "") -> None:
    if title:
        print(f"# {title}")
    print(",".join(header))
    for row in rows:
        print(",".join(_fmt(v) for v in row))


def _write_manifest(out_dir: str, command: str, args: argparse.Namespace,
                    outputs: list[str], extra: dict | None = None) -> str:
    skip = {"func", "out", "format"}
    options = {
        k: _jsonable(v)
        for k, v in sorted(vars(args).items())
        if k not in skip and not callable(v)
    }
    manifest = {
        "command": command,
        "version": __version__,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "options": options,
        "outputs": [os.path.basename(p) for p in outputs],
    }
    if extra:
        manifest.update(extra)
    path = os.path.join(out_dir, f"{command}_manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")
    return path


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def _load_env(path: str):
    return environment_from_config(_load_config(path))


def _direction(env, theta: float) -> Direction:
    if env.d == 1:
        return Direction.axis(1)
    if env.d == 2:
        return Direction.from_angle(theta)
    raise ValueError(f"direction curves need d <= 2, got d = {env.d}")


def _ensure_out(out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)


def _criterion_rows(env, n_max: int, nodes: int):
    """Series terms on the standard log grid.

    Shared by ``classify --out`` and ``curve criterion_terms`` so the two
    commands emit identical files for identical settings.
    """
    ev = CriterionEvaluator(env, nodes=nodes)
    ns = _log_grid(n_max)
    terms, provable = ev.series_terms(ns)
    header = ["n", "term", "provable"]
    rows = [
        (int(n), float(t), bool(p))
        for n, t, p in zip(ns, terms, provable)
    ]
    return header, rows


# ---------------------------------------------------------------- commands


def _cmd_validate(args: argparse.Namespace) -> int:
    env = _load_env(args.config)
    lo, hi = args.window
    report = validate(env, (int(lo), int(hi)))
    print(report.render())
    if args.out:
        _ensure_out(args.out)
        payload = {
            "passed": report.passed,
            "checked_range": list(report.checked_range),
            "delta": report.delta,
            "condition1": report.condition1.ok,
            "condition2": report.condition2.ok,
            "condition3": report.condition3.ok,
            "group_full_rank": report.group_full_rank,
        }
        path = os.path.join(args.out, "validate.json")
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")
        _write_manifest(args.out, "validate", args, [path])
    return 0 if report.passed else 1


def _cmd_classify(args: argparse.Namespace) -> int:
    env = _load_env(args.config)
    opts = ClassifyOptions(
        n_max=args.n_max, nodes=args.theta_nodes, margin=args.margin
    )
    result = classify(env, opts)
    print(result.render())
    det = result.details
    if "slope" in det:
        print(f"  fitted slope {det['slope']:.4f} vs -1 +/- {det['margin']:.2f}")
    if "quadrature_refinement" in det:
        print(f"  quadrature refinement {det['quadrature_refinement']:.3e}")
    print(f"  vertical walk: {det['vertical']}")
    if args.out:
        _ensure_out(args.out)
        outputs = []
        extra = {
            "verdict": result.verdict,
            "provenance": result.provenance,
        }
        if env.d <= 2:
            try:
                header, rows = _criterion_rows(env, args.n_max, args.theta_nodes)
            except (ValueError, RuntimeError):
                extra["criterion_terms"] = "unavailable"
            else:
                path = os.path.join(args.out, f"criterion_terms.{args.format}")
                outputs.append(_write_table(path, header, rows, args.format))
        _write_manifest(args.out, "classify", args, outputs, extra)
    return 0


def _cmd_chi_compare(args: argparse.Namespace) -> int:
    env = _load_env(args.config)
    u = _direction(env, args.theta)
    ts = np.geomspace(args.t_min, args.t_max, args.t_points)
    batch = sample_excursions(env, args.samples, seed=args.seed, cap=args.cap)
    evaluator = ChiEvaluator(env)
    header = [
        "t", "cf_re", "cf_im", "cf_tail",
        "mc_re", "mc_im", "mc_stderr", "abs_diff", "allowance",
    ]
    rows = []
    worst = 0.0
    for t in ts:
        res = evaluator.evaluate(float(t), u, with_surrogate=False)
        mc, err = empirical_chf(batch.displacements, float(t), u.u)
        diff = abs(res.value - mc)
        allowance = 3.0 * err + res.tail_bound + batch.bias_bound
        worst = max(worst, diff / allowance if allowance > 0 else np.inf)
        rows.append((
            float(t), res.value.real, res.value.imag, res.tail_bound,
            mc.real, mc.imag, err, diff, allowance,
        ))
    print(
        f"chi comparison on {len(ts)} frequencies, {len(batch.displacements)}"
        f" excursions (truncated fraction {batch.truncated_fraction:.3g})"
    )
    print(f"worst |cf - mc| / (3 stderr + tail + bias) = {worst:.4f}")
    if args.out:
        _ensure_out(args.out)
        path = os.path.join(args.out, f"chi_compare.{args.format}")
        _write_table(path, header, rows, args.format)
        _write_manifest(args.out, "chi-compare", args, [path],
                        {"worst_ratio": worst})
    else:
        _print_table(header, rows)
    return 0


def _cmd_scan(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    if "family" not in cfg:
        raise ConfigError("scan needs a family-based config")
    try:
        values = [float(s) for s in args.values.split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --values list: {exc}") from exc
    if not values:
        raise ConfigError("empty --values list")
    opts = ClassifyOptions(
        n_max=args.n_max, nodes=args.theta_nodes, margin=args.margin
    )
    header = [args.param, "verdict", "provenance"]
    rows = []
    for v in values:
        cfg2 = copy.deepcopy(cfg)
        param_value = int(v) if args.param in ("c", "m") and v == int(v) else v
        cfg2["family"][args.param] = param_value
        env = environment_from_config(cfg2)
        result = classify(env, opts)
        rows.append((v, result.verdict, result.provenance))
        print(f"{args.param} = {_fmt(v)}: {result.render()}")
    if args.out:
        _ensure_out(args.out)
        path = os.path.join(args.out, f"scan.{args.format}")
        _write_table(path, header, rows, args.format)
        _write_manifest(args.out, "scan", args, [path])
    return 0


def _curve_psi(env, ns):
    seq = build(env)
    header = ["n", "psi", "psi_plus", "psi_minus"]
    rows = [
        (int(n), seq.psi(int(n)), seq.psi_plus(int(n)), seq.psi_minus(int(n)))
        for n in ns
    ]
    return header, rows


def _curve_phi(env, ns, variant: str, theta: float):
    from .flux import FluxProfile

    seq = build(env)
    profile = FluxProfile(seq, _direction(env, theta))
    phi = profile.phi()
    header = ["n", f"phi_{variant}"]
    rows = [(int(n), phi.value(variant, int(n))) for n in ns]
    return header, rows


def _cmd_curve(args: argparse.Namespace) -> int:
    env = _load_env(args.config)
    kinds = [k.strip() for k in args.values.split(",") if k.strip()]
    for k in kinds:
        if k not in _CURVE_KINDS:
            raise ConfigError(
                f"unknown curve kind {k!r}; choose from {', '.join(_CURVE_KINDS)}"
            )
    ns = _log_grid(args.n_max)
    outputs = []
    if args.out:
        _ensure_out(args.out)
    for kind in kinds:
        if kind == "criterion_terms":
            header, rows = _criterion_rows(env, args.n_max, args.theta_nodes)
        elif kind == "psi":
            header, rows = _curve_psi(env, ns)
        else:
            header, rows = _curve_phi(env, ns, kind.removeprefix("phi_"), args.theta)
        if args.out:
            path = os.path.join(args.out, f"{kind}.{args.format}")
            outputs.append(_write_table(path, header, rows, args.format))
        else:
            _print_table(header, rows, title=kind)
    if args.out:
        _write_manifest(args.out, "curve", args, outputs)
    return 0


# ------------------------------------------------------------------ parser


def _add_common(p: argparse.ArgumentParser, n_max: int = 20_000) -> None:
    p.add_argument("--config", required=True, help="environment config (JSON)")
    p.add_argument("--n-max", type=int, default=n_max,
                   help="largest series level / curve abscissa")
    p.add_argument("--theta-nodes", type=int, default=64,
                   help="directional quadrature nodes for d = 2")
    p.add_argument("--margin", type=float, default=0.15,
                   help="decision margin around the critical slope -1")
    p.add_argument("--out", default=os.environ.get("STRATA_OUT"),
                   help="output directory (default $STRATA_OUT)")
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="table format for --out files")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stratawalk",
        description="recurrence and transience of walks on layered environments",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check the standing hypotheses")
    p.add_argument("--config", required=True)
    p.add_argument("--window", type=int, nargs=2, default=(-200, 200),
                   metavar=("LO", "HI"), help="stratum range to check")
    p.add_argument("--out", default=os.environ.get("STRATA_OUT"))
    p.set_defaults(func=_cmd_validate, format="json")

    p = sub.add_parser("classify", help="recurrence/transience verdict")
    _add_common(p)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("chi-compare",
                       help="characteristic function: continued fraction vs Monte Carlo")
    _add_common(p)
    p.add_argument("--t-min", type=float, default=0.05)
    p.add_argument("--t-max", type=float, default=0.45)
    p.add_argument("--t-points", type=int, default=9)
    p.add_argument("--theta", type=float, default=0.0,
                   help="direction angle for d = 2")
    p.add_argument("--seed", type=int,
                   default=int(os.environ.get("STRATA_SEED", "0")))
    p.add_argument("--samples", type=int, default=20_000,
                   help="completed excursions to sample")
    p.add_argument("--cap", type=int, default=100_000,
                   help="per-excursion step cap")
    p.set_defaults(func=_cmd_chi_compare)

    p = sub.add_parser("scan", help="classify across a parameter sweep")
    _add_common(p, n_max=4_000)
    p.add_argument("--param", default="alpha", help="family parameter to sweep")
    p.add_argument("--values", required=True,
                   help="comma separated parameter values")
    p.set_defaults(func=_cmd_scan)

    p = sub.add_parser("curve", help="tabulate diagnostic sequences")
    _add_common(p)
    p.add_argument("--values", default="criterion_terms",
                   help=f"comma separated kinds from: {', '.join(_CURVE_KINDS)}")
    p.add_argument("--theta", type=float, default=0.0,
                   help="direction angle for d = 2 phi curves")
    p.set_defaults(func=_cmd_curve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
