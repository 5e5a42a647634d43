"""Command-line front end.

Subcommands: ``mu`` (bifurcation exponent), ``profile`` (full pipeline),
``verify`` (tail bound suite on saved profiles), ``simulate`` (direct
time-dependent runs), ``sweep`` (family coverage table).

Exit codes: 0 success, 2 invalid parameters, 3 solver failure, 4 failed
verification bounds, 5 time-step collapse.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import dynamics, pipeline, tail
from .errors import (
    ConvergenceError,
    DiagcoagError,
    DomainError,
    RangeError,
    StepCollapseError,
)
from .expansion import default_z
from .mu import solve_mu
from .params import beta_from_rho, make_params
from .profile import (
    Profile,
    integrate,
    read_profile_csv,
    write_profile_csv,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_SOLVER = 3
EXIT_BOUNDS = 4
EXIT_STEP = 5


def _merge_config(args: argparse.Namespace, keys: list[str]) -> dict:
    """Start from config-file values, let explicit flags win."""
    merged: dict = {}
    if getattr(args, "config", None):
        merged.update(json.loads(Path(args.config).read_text()))
    for key in keys:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    return merged


def _resolve_beta(cfg: dict) -> tuple[float, float]:
    gamma = cfg.get("gamma")
    if gamma is None:
        raise DomainError("gamma is required")
    beta = cfg.get("beta")
    rho = cfg.get("rho")
    if (beta is None) == (rho is None):
        raise DomainError("exactly one of --beta/--rho must be supplied")
    if beta is None:
        beta = beta_from_rho(gamma, rho)
    return float(gamma), float(beta)


def _print_json(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    print(text)


def cmd_mu(args: argparse.Namespace) -> int:
    cfg = _merge_config(args, ["gamma", "beta", "rho", "out"])
    gamma, beta = _resolve_beta(cfg)
    report = solve_mu(gamma, beta)
    _print_json(report.to_dict(), cfg.get("out"))
    return EXIT_OK if report.residual <= 1e-13 else EXIT_SOLVER


def cmd_profile(args: argparse.Namespace) -> int:
    cfg = _merge_config(
        args, ["gamma", "beta", "rho", "c", "z", "m", "xmax", "tol", "out", "format"]
    )
    gamma, beta = _resolve_beta(cfg)
    params = make_params(gamma, beta)
    c = float(cfg.get("c", 1.0))
    if params.degenerate and c > 0.0 and not args.allow_degenerate:
        raise DomainError(
            "beta equals beta_star (degenerate, mass-conserving case); "
            "pass --allow-degenerate to proceed"
        )
    try:
        profile = pipeline.build_profile(
            params,
            c=c,
            z=cfg.get("z"),
            m=int(cfg.get("m", pipeline.DEFAULT_M)),
            x_max=cfg.get("xmax"),
            tol=float(cfg.get("tol", 1e-12)),
        )
    except DiagcoagError as exc:
        print(f"profile pipeline failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    out = cfg.get("out", "profile.csv")
    if cfg.get("format", "csv") == "json":
        payload = {
            "meta": {
                **params.to_dict(),
                "c": profile.c,
                "z": profile.z,
                "m": profile.m,
                "x_min": profile.x_min,
                "x_max": profile.x_max,
                "normalized": profile.normalized,
            },
            "x": profile.x_values.tolist(),
            "h": profile.h_values.tolist(),
            "g": profile.g_values.tolist(),
            "dhdx": profile.dh_values.tolist(),
        }
        Path(out).write_text(json.dumps(payload) + "\n")
    else:
        write_profile_csv(profile, out)
    print(f"wrote {out} ({len(profile.h_values)} nodes, "
          f"x in [{profile.x_min:.3g}, {profile.x_max:.3g}])")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    failures = []
    reports = {}
    for path in args.profiles:
        profile = read_profile_csv(path)
        try:
            report, details = tail.build_tail_report(profile)
        except (DomainError, RangeError) as exc:
            print(f"{path}: precondition failed: {exc}", file=sys.stderr)
            return EXIT_INVALID
        entry = report.to_dict()
        entry["details"] = {
            k: v for k, v in details.items() if isinstance(v, (bool, int, float, str))
        }
        reports[str(path)] = entry
        ok = (
            report.upper_bound_ok
            and report.lower_bound_ok
            and details.get("hineq_ok", True)
            and report.cauchy_max_violation <= tail.BOUND_SLACK
            and report.max_residual_sss4b <= 1e-6
        )
        if not ok:
            failures.append(str(path))
    _print_json(reports, args.out)
    if failures:
        print(f"verification failed for: {', '.join(failures)}", file=sys.stderr)
        return EXIT_BOUNDS
    return EXIT_OK


def _parse_init(spec: str, params, profile: Profile | None, field_kwargs: dict):
    kind, _, rest = spec.partition(":")
    if kind == "profile":
        prof = read_profile_csv(rest) if rest else profile
        if prof is None:
            raise DomainError("initial data 'profile' needs a profile CSV path")
        return dynamics.field_from_profile(prof, **field_kwargs), prof
    if kind == "powerlaw":
        if rest:
            amp_s, _, exp_s = rest.partition(",")
            amp, exp = float(amp_s), float(exp_s)
        else:
            amp, exp = 1.0, (3.0 + params.gamma) / 2.0
        return dynamics.power_law_field(params.kernel, amp, exp, **field_kwargs), None
    if kind == "pulse":
        node = int(rest) if rest else 320
        return dynamics.pulse_field(params.kernel, node, **field_kwargs), None
    raise DomainError(f"unknown initial data spec: {spec!r}")


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _merge_config(args, ["gamma", "beta", "rho", "out"])
    gamma, beta = _resolve_beta(cfg)
    params = make_params(gamma, beta)
    field_kwargs = dict(
        xi_min=args.xi_min,
        octaves=args.octaves,
        nodes_per_octave=args.md,
    )
    profile = None
    if args.init.startswith("profile"):
        field, profile = _parse_init(args.init, params, None, field_kwargs)
    else:
        field, _ = _parse_init(args.init, params, None, field_kwargs)
        if args.profile:
            profile = read_profile_csv(args.profile)

    out_prefix = cfg.get("out", "sim")
    try:
        if profile is not None:
            report, fields = dynamics.simulate_collapse(
                field, profile, params.beta, args.t_end,
                n_outputs=args.snapshots, collect_fields=True,
            )
            Path(f"{out_prefix}.collapse.json").write_text(
                json.dumps(report.to_dict(), indent=2) + "\n"
            )
            print(json.dumps(report.to_dict(), indent=2))
        else:
            times = np.geomspace(field.t, args.t_end, args.snapshots)
            fields = [field]
            for t_out in times[1:]:
                fields.append(dynamics.advance_to(fields[-1], float(t_out)))
    except StepCollapseError as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return EXIT_STEP

    for fld in fields:
        xi = fld.xi_grid
        scale = fld.t**params.beta
        resc = fld.t ** (1.0 + (1.0 + gamma) * params.beta) * fld.f_values
        lines = ["xi,f,x_rescaled,density_rescaled"]
        for a, b, cch, d in zip(xi, fld.f_values, xi / scale, resc):
            lines.append(f"{a:.17g},{b:.17g},{cch:.17g},{d:.17g}")
        path = f"{out_prefix}.t{fld.t:.6g}.csv"
        Path(path).write_text("\n".join(lines) + "\n")
    print(f"wrote {len(fields)} snapshots with prefix {out_prefix}")
    return EXIT_OK


_SWEEP_COLUMNS = [
    "gamma", "rho", "beta", "mu", "kappa", "d_estimate", "d_error_bound", "c0",
    "slope_fit", "slope_err_rel", "upper_margin", "lower_margin", "lower_margin_chain", "hineq_margin",
    "cauchy_max_violation", "max_residual_sss4b", "status",
]


def _sweep_cell(row: dict, key: str) -> str:
    val = row.get(key, "")
    if isinstance(val, float):
        return f"{val:.17g}"
    return str(val)


def cmd_sweep(args: argparse.Namespace) -> int:
    gammas = [float(v) for v in args.gammas.split(",") if v.strip() != ""]
    rhos = [float(v) for v in args.rhos.split(",") if v.strip() != ""]
    if not gammas or not rhos:
        print("sweep needs nonempty gamma and rho lists", file=sys.stderr)
        return EXIT_INVALID
    jobs = [(g, r) for g in gammas for r in rhos]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_star, jobs))
    else:
        rows = [pipeline.sweep_row(g, r) for g, r in jobs]
    lines = [",".join(_SWEEP_COLUMNS)]
    for row in rows:
        lines.append(",".join(_sweep_cell(row, k) for k in _SWEEP_COLUMNS))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")
    bad = [r for r in rows if r["status"] not in ("ok", "invalid")]
    return EXIT_BOUNDS if bad else EXIT_OK


def _sweep_star(job):
    return pipeline.sweep_row(*job)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gamma", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--config", type=str, help="JSON config merged under explicit flags")
    p.add_argument("--out", type=str)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="diagcoag",
        description="Self-similar profiles of the diagonal-kernel coagulation equation",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mu", help="solve the bifurcation exponent")
    _add_common(p)
    p.set_defaults(func=cmd_mu)

    p = sub.add_parser("profile", help="construct a profile (CSV + metadata)")
    _add_common(p)
    p.add_argument("--c", type=float)
    p.add_argument("--z", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--xmax", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--allow-degenerate", action="store_true")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("verify", help="run the tail bound suite on saved profiles")
    p.add_argument("profiles", nargs="+")
    p.add_argument("--out", type=str)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="direct simulation of the coagulation equation")
    _add_common(p)
    p.add_argument("--init", type=str, default="powerlaw",
                   help="profile[:path] | powerlaw[:B,a] | pulse[:k0]")
    p.add_argument("--profile", type=str, help="reference profile CSV for the collapse metric")
    p.add_argument("--t-end", type=float, default=4.0)
    p.add_argument("--snapshots", type=int, default=5)
    p.add_argument("--xi-min", type=float, default=2.0**-20)
    p.add_argument("--octaves", type=int, default=dynamics.DEFAULT_OCTAVES)
    p.add_argument("--md", type=int, default=dynamics.DEFAULT_NODES_PER_OCTAVE)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="profile family coverage table")
    p.add_argument("--gammas", type=str, required=True)
    p.add_argument("--rhos", type=str, required=True)
    p.add_argument("--out", type=str)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DomainError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INVALID
    except ConvergenceError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_SOLVER
    except StepCollapseError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_STEP


if __name__ == "__main__":
    sys.exit(main())
