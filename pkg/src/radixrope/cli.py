"""Command-line front end.

Subcommands: freqs, plan, bound, estimate, attn-sim, sweep. Geometry comes
from ``--config`` (a model ``config.json``) and/or the explicit
``--base/--head-dim/--trained-len`` flags, which override the config.

Exit status: 0 on success, 1 on invalid input or configuration, 2 on usage
errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Optional, Sequence

import numpy as np

from . import diagnostics as dg
from .documents import ConfigError, ModelConfigDoc, ScalePlanDoc
from .extensions import (
    DEFAULT_ALPHA,
    DEFAULT_BETA,
    DegeneratePartitionError,
    Method,
    compile_plan,
    hyperparams_for_band,
)
from .radix import rope_radix_of
from .rope_core import RopeParams, build_frequencies, rotation_progresses, wavelengths

fmt = dg.fmt


class UsageError(Exception):
    pass


# -- argument helpers --------------------------------------------------------

def parse_positions(text: str) -> np.ndarray:
    """``start:stop[:step]`` (stop inclusive) or a comma-separated list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (2, 3):
            raise argparse.ArgumentTypeError(f"bad range {text!r}; use start:stop[:step]")
        try:
            start, stop = float(parts[0]), float(parts[1])
            step = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"bad range {text!r}") from exc
        if step <= 0 or stop < start or start < 0:
            raise argparse.ArgumentTypeError(f"bad range {text!r}; need 0 <= start <= stop, step > 0")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return start + step * np.arange(count)
    try:
        vals = np.array([float(x) for x in text.split(",") if x.strip()])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad position list {text!r}") from exc
    if vals.size == 0 or np.any(vals < 0) or np.any(np.diff(vals) <= 0):
        raise argparse.ArgumentTypeError("positions must be nonnegative and strictly increasing")
    return vals


def parse_int_range(text: str) -> list[int]:
    vals = parse_positions(text)
    if np.any(vals != np.round(vals)):
        raise argparse.ArgumentTypeError(f"range {text!r} must contain integers")
    return [int(v) for v in vals]


def positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from exc
    if not v > 0:
        raise argparse.ArgumentTypeError(f"{text!r} must be positive")
    return v


def positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from exc
    if v < 1:
        raise argparse.ArgumentTypeError(f"{text!r} must be >= 1")
    return v


def base_list(text: str) -> list[float]:
    return [positive_float(x) for x in text.split(",") if x.strip()]


def method_list(text: str) -> list[Method]:
    try:
        return [Method.parse(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def method_arg(text: str) -> Method:
    return method_list(text)[0]


def _add_geometry(p, with_base=True):
    p.add_argument("--config", help="model config.json providing rope_theta, head_dim, ...")
    if with_base:
        p.add_argument("--base", type=positive_float, help="rotary base b (rope_theta)")
    p.add_argument("--head-dim", type=positive_int, help="attention head dimension")
    p.add_argument("--trained-len", type=positive_int, help="trained context length")
    p.add_argument("--out", help="output file (default: standard output)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _add_scaling(p, method_default=None):
    if method_default is None:
        p.add_argument("--method", type=method_arg, required=True,
                       help="pi | ntk | yarn | mrrope-uni | mrrope-pro | none")
    else:
        p.add_argument("--method", type=method_arg, default=method_default)
    p.add_argument("--scale", type=positive_float, default=1.0, help="extension factor S")
    p.add_argument("--alpha", type=positive_float, default=DEFAULT_ALPHA)
    p.add_argument("--beta", type=positive_float, default=DEFAULT_BETA)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="radixrope", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("freqs", help="per-pair frequency, wavelength and rotation progress")
    _add_geometry(p)

    p = sub.add_parser("plan", help="compile and write a scale plan")
    _add_geometry(p)
    _add_scaling(p)

    p = sub.add_parser("bound", help="cosine-sum bound function and its first root")
    _add_geometry(p)
    p.add_argument("--method", "--methods", dest="methods", type=method_list,
                   default=[Method.NONE, Method.YARN, Method.MRROPE_PRO])
    p.add_argument("--scale", type=positive_float, default=1.0)
    p.add_argument("--alpha", type=positive_float, default=DEFAULT_ALPHA)
    p.add_argument("--beta", type=positive_float, default=DEFAULT_BETA)
    p.add_argument("--m-max", type=positive_float, help="scan limit (default 16 S L_train)")
    p.add_argument("--grid-step", type=positive_float, help="scan step (default L_train/64)")
    p.add_argument("--band-only", action="store_true", help="restrict to middle dimensions")

    p = sub.add_parser("estimate", help="biased positional estimate and its linearity")
    p.add_argument("--base", type=base_list, default=[100.0, 10000.0, 1000000.0],
                   help="comma-separated bases")
    _add_geometry(p, with_base=False)

    p = sub.add_parser("attn-sim", help="seeded middle-band attention simulation")
    _add_geometry(p)
    _add_scaling(p)
    p.add_argument("--pairs", type=positive_int, default=50)
    p.add_argument("--positions", type=parse_positions, default=parse_positions("0:65536:1024"))
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("sweep", help="bound root over a grid of (d_low, d_high)")
    _add_geometry(p)
    _add_scaling(p, method_default=Method.MRROPE_PRO)
    p.add_argument("--dl-range", type=parse_int_range, required=True)
    p.add_argument("--dh-range", type=parse_int_range, required=True)
    p.add_argument("--m-max", type=positive_float)
    p.add_argument("--grid-step", type=positive_float)
    p.add_argument("--band-only", action="store_true")
    return parser


# -- geometry ---------------------------------------------------------------

def resolve_params(args) -> RopeParams:
    base = getattr(args, "base", None)
    head_dim, trained_len = args.head_dim, args.trained_len
    if args.config:
        cfg = ModelConfigDoc.load(args.config)
        base = cfg.rope_theta if base is None else base
        head_dim = cfg.resolved_head_dim() if head_dim is None else head_dim
        trained_len = cfg.max_position_embeddings if trained_len is None else trained_len
    missing = [name for name, v in (("--base", base), ("--head-dim", head_dim),
                                    ("--trained-len", trained_len)) if v is None]
    if missing:
        raise ConfigError(f"missing geometry: supply --config or {', '.join(missing)}")
    try:
        return RopeParams(base, head_dim, trained_len)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _degenerate(params: RopeParams, exc: Exception) -> ConfigError:
    alpha, beta = hyperparams_for_band(params, 1, params.num_pairs + 1)
    return ConfigError(f"{exc}; e.g. try --alpha {alpha:.6g} --beta {beta:.6g}")


def _compile(params, method, scale, alpha, beta, bounds=None):
    try:
        return compile_plan(params, method, scale, alpha, beta, bounds=bounds)
    except DegeneratePartitionError as exc:
        raise _degenerate(params, exc) from exc


def _bound_scan(params, args, scale):
    m_max, step = dg.default_scan(params, scale)
    m_max = args.m_max if args.m_max is not None else m_max
    step = args.grid_step if args.grid_step is not None else step
    if step > m_max / 100:
        raise UsageError(f"--grid-step {step:g} exceeds m_max/100 = {m_max / 100:g}")
    return m_max, step


# -- commands ----------------------------------------------------------------

def _table(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def cmd_freqs(args, err) -> str:
    params = resolve_params(args)
    sched = build_frequencies(params)
    rows = zip(range(1, params.num_pairs + 1), sched.thetas, wavelengths(sched),
               rotation_progresses(sched, params.trained_len))
    rows = [(j, float(t), float(w), float(r)) for j, t, w, r in rows]
    if args.format == "json":
        return json.dumps([dict(j=j, theta=t, wavelength=w, progress=r) for j, t, w, r in rows]) + "\n"
    return _table(["j", "theta", "wavelength", "progress"],
                  [(j, fmt(t), fmt(w), fmt(r)) for j, t, w, r in rows])


def cmd_plan(args, err) -> str:
    params = resolve_params(args)
    plan = _compile(params, args.method, args.scale, args.alpha, args.beta)
    print(f"d_low={plan.d_low} d_high={plan.d_high} "
          f"band_product={fmt(plan.band_product())} temperature={fmt(plan.temperature)}", file=err)
    return ScalePlanDoc.from_plan(plan, params).to_json()


def _roots_summary(pairs, err):
    print("method,root", file=err)
    for label, root in pairs:
        print(f"{label},{fmt(root) if root is not None else 'none'}", file=err)


def cmd_bound(args, err) -> str:
    params = resolve_params(args)
    m_max, step = _bound_scan(params, args, args.scale)
    profiles = []
    for method in args.methods:
        plan = _compile(params, method, args.scale, args.alpha, args.beta)
        profiles.append(dg.plan_bound_root(params, plan, m_max, step, band_only=args.band_only))
    _roots_summary([(p.series.label, p.root) for p in profiles], err)
    if args.format == "json":
        return json.dumps({"series": [p.series.to_dict() for p in profiles],
                           "roots": {p.series.label: p.root for p in profiles}}) + "\n"
    return dg.series_to_long_csv([p.series for p in profiles])


def cmd_estimate(args, err) -> str:
    head_dim = args.head_dim or 128
    L = args.trained_len or 8192
    if args.config:
        cfg = ModelConfigDoc.load(args.config)
        head_dim = args.head_dim or cfg.resolved_head_dim()
        L = args.trained_len or cfg.max_position_embeddings
    if not args.base:
        raise UsageError("--base needs at least one value")
    series, scores = [], {}
    for b in args.base:
        try:
            params = RopeParams(b, head_dim, L)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        sched = build_frequencies(params)
        s = dg.estimate_series(sched, rope_radix_of(params).beta, L, label=fmt(b))
        series.append(s)
        scores[s.label] = dg.r_squared(s.xs, s.ys)
    print("base,r_squared", file=err)
    for label, r2 in scores.items():
        print(f"{label},{fmt(r2)}", file=err)
    if args.format == "json":
        return json.dumps({"series": [s.to_dict() for s in series], "r_squared": scores}) + "\n"
    return dg.series_to_long_csv(series)


def cmd_attn_sim(args, err) -> str:
    params = resolve_params(args)
    plan = _compile(params, args.method, args.scale, args.alpha, args.beta)
    try:
        series = dg.middle_attention_sim(plan, params, args.pairs, args.positions, args.seed)
    except DegeneratePartitionError as exc:
        raise ConfigError(f"{exc}; attn-sim needs a banded method or ntk") from exc
    return series.to_json() + "\n" if args.format == "json" else series.to_csv()


def cmd_sweep(args, err) -> str:
    params = resolve_params(args)
    m_max, step = _bound_scan(params, args, args.scale)
    rows = []
    for d_low in args.dl_range:
        for d_high in args.dh_range:
            root = None
            valid = 1 <= d_low < d_high <= params.num_pairs + 1
            if valid:
                plan = compile_plan(params, args.method, args.scale, bounds=(d_low, d_high))
                root = dg.plan_bound_root(params, plan, m_max, step, band_only=args.band_only).root
            rows.append((d_low, d_high, root))
    if args.format == "json":
        return json.dumps([dict(d_low=a, d_high=b, root=r) for a, b, r in rows]) + "\n"
    return _table(["d_low", "d_high", "root"], [(a, b, fmt(r)) for a, b, r in rows])


COMMANDS = {
    "freqs": cmd_freqs,
    "plan": cmd_plan,
    "bound": cmd_bound,
    "estimate": cmd_estimate,
    "attn-sim": cmd_attn_sim,
    "sweep": cmd_sweep,
}


def main(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        text = COMMANDS[args.command](args, stderr)
    except UsageError as exc:
        print(f"radixrope {args.command}: usage error: {exc}", file=stderr)
        return 2
    except (ConfigError, DegeneratePartitionError, ValueError) as exc:
        print(f"radixrope {args.command}: error: {exc}", file=stderr)
        return 1
    try:
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        else:
            stdout.write(text)
            stdout.flush()
    except OSError as exc:
        print(f"radixrope {args.command}: cannot write output: {exc}", file=stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
