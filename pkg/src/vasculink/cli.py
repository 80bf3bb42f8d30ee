"""Command-line interface: one executable, one subcommand per analysis.

Every subcommand reads a network document, prints CSV (or JSON where noted)
to stdout or ``--out``, and is a pure function of (file, flags, seed):
repeated invocations are byte-identical.  When writing to a file, a
``<out>.manifest.json`` sidecar records the command, the network file
hash, the seed, the tool version, and all parameters.

Error reporting: usage problems exit 2 with a ``USAGE:`` line; unreadable
or malformed inputs exit 1 with ``PARSE:``; model invariant violations
exit 1 with ``MODEL:``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .errors import ModelError, SchemaError
from .network import parse_network
from .flow import solve_flow
from .channel import build_channel, cir, per_path_models
from .metrics import rms_delay_spread
from .spectrum import frequency_response, group_delay, phase_unwrapped
from .mcsim import simulate_particles
from .detect import (
    LinkConfig,
    SamplingStrategy,
    max_observation_probability,
    run_link,
    wilson_interval,
)

_STRATEGIES = {s.value: s for s in SamplingStrategy}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise _UsageError(message)


def _fmt(value: Any) -> str:
    """Full round-trip decimal text for numbers; plain text otherwise."""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (np.floating,)):
        return repr(float(value))
    return str(value)


def _table_text(rows: list[dict[str, Any]], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2, default=_json_default) + "\n"
    header = list(rows[0]) if rows else []
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(row[k]) for k in header) for row in rows)
    return "\n".join(lines) + "\n"


def _keyvalue_text(doc: dict[str, Any], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(doc, indent=2, default=_json_default) + "\n"
    lines = ["key,value"]
    lines.extend(f"{key},{_fmt(value)}" for key, value in doc.items())
    return "\n".join(lines) + "\n"


def _json_default(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    raise TypeError(f"not JSON-serializable: {type(value)}")


def _load(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SchemaError(f"cannot read network file {path!r}: {exc}") from exc
    network, placement = parse_network(text)
    return network, placement, solve_flow(network)


def _file_hash(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _deliver(text: str, args: argparse.Namespace, extra_files: dict[str, str] | None = None) -> None:
    manifest = {
        "command": args.command,
        "network_file_hash": _file_hash(args.network),
        "seed": getattr(args, "seed", None),
        "tool_version": __version__,
        "parameters": {
            key: value
            for key, value in sorted(vars(args).items())
            if key not in ("handler", "command") and not key.startswith("_")
        },
    }
    manifest_text = json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n"
    outputs = dict(extra_files or {})
    if args.out is not None:
        outputs[args.out] = text
    else:
        sys.stdout.write(text)
    for path, content in outputs.items():
        Path(path).write_text(content)
        Path(f"{path}.manifest.json").write_text(manifest_text)


# -- subcommand handlers ----------------------------------------------------


def _cmd_flow(args) -> tuple[str, dict[str, str]]:
    network, _, flow = _load(args.network)
    rows = [
        {
            "pipe_id": pipe.id,
            "Q_m3s": flow.flow_rate[pipe.id],
            "u_ms": flow.velocity[pipe.id],
            "Deff_m2s": flow.effective_diffusion[pipe.id],
        }
        for pipe in network.pipes
    ]
    return _table_text(rows, args.format), {}


def _cmd_paths(args) -> tuple[str, dict[str, str]]:
    network, placement, flow = _load(args.network)
    model = build_channel(network, flow, placement)
    rows = [
        {
            "pipes": "|".join(path.pipe_ids),
            "gamma": path.fraction,
            "mean_s": path.mean,
            "variance_s2": path.variance,
            "scale_s": path.scale,
            "weight": weight,
        }
        for path, weight in zip(model.ensemble.paths, model.ensemble.weights)
    ]
    return _table_text(rows, args.format), {}


def _cmd_cir(args) -> tuple[str, dict[str, str]]:
    network, placement, flow = _load(args.network)
    model = build_channel(network, flow, placement)
    metrics = rms_delay_spread(model.ensemble)
    t_max = args.t_max
    if t_max is None:
        t_max = metrics.mean_excess_delay + 8.0 * metrics.rms_delay_spread
    grid = np.linspace(0.0, t_max, args.samples)
    total = cir(model, grid)
    contributions = []
    if args.per_path:
        contributions = [cir(sub, grid) for sub in per_path_models(model)]
    rows = []
    for i, t in enumerate(grid):
        row: dict[str, Any] = {"t": float(t), "h": float(total[i])}
        for j, contrib in enumerate(contributions, start=1):
            row[f"h_path{j}"] = float(contrib[i])
        rows.append(row)
    return _table_text(rows, args.format), {}


def _cmd_metrics(args) -> tuple[str, dict[str, str]]:
    network, placement, flow = _load(args.network)
    model = build_channel(network, flow, placement)
    m = rms_delay_spread(model.ensemble)
    doc = {
        "mean_excess_delay_s": m.mean_excess_delay,
        "rms_delay_spread_s": m.rms_delay_spread,
        "diffusion_spread_s2": m.diffusion_spread_sq,
        "multipath_spread_s2": m.multipath_spread_sq,
        "coherence_bandwidth_hz": m.coherence_bandwidth,
        "reach_probability": model.ensemble.reach_probability,
        "path_count": len(model.ensemble.paths),
    }
    return _keyvalue_text(doc, args.format), {}


def _cmd_spectrum(args) -> tuple[str, dict[str, str]]:
    network, placement, flow = _load(args.network)
    model = build_channel(network, flow, placement)
    metrics = rms_delay_spread(model.ensemble)
    f_max = args.f_max
    if f_max is None:
        f_max = 50.0 * metrics.coherence_bandwidth
    grid = np.linspace(0.0, f_max, args.samples)
    response = frequency_response(model, grid)
    phase = phase_unwrapped(model, grid)
    delay = group_delay(model, grid)
    per_path_mags = []
    if args.per_path:
        per_path_mags = [np.abs(frequency_response(sub, grid)) for sub in per_path_models(model)]
    rows = []
    for i, f in enumerate(grid):
        row: dict[str, Any] = {
            "f": float(f),
            "re": float(response[i].real),
            "im": float(response[i].imag),
            "mag": float(abs(response[i])),
            "phase_unwrapped": float(phase[i]),
            "group_delay": float(delay[i]),
        }
        for j, mags in enumerate(per_path_mags, start=1):
            row[f"mag_path{j}"] = float(mags[i])
        rows.append(row)
    return _table_text(rows, args.format), {}


def _cmd_validate(args) -> tuple[str, dict[str, str]]:
    network, placement, flow = _load(args.network)
    model = build_channel(network, flow, placement)
    metrics = rms_delay_spread(model.ensemble)
    workers = int(os.environ.get("VASCULINK_THREADS", "1"))
    sim = simulate_particles(network, flow, placement, args.particles, seed=args.seed, workers=workers)
    times = sim.arrival_times
    chi = model.ensemble.reach_probability
    observed_chi = sim.reach_fraction
    doc = {
        "particles": args.particles,
        "seed": args.seed,
        "chi_analytic": chi,
        "chi_empirical": observed_chi,
        "chi_rel_err": abs(observed_chi - chi) / chi,
        "mean_delay_analytic_s": metrics.mean_excess_delay,
        "mean_delay_empirical_s": float(times.mean()),
        "mean_delay_rel_err": abs(float(times.mean()) - metrics.mean_excess_delay)
        / metrics.mean_excess_delay,
        "rms_spread_analytic_s": metrics.rms_delay_spread,
        "rms_spread_empirical_s": float(times.std(ddof=1)),
        "rms_spread_rel_err": abs(float(times.std(ddof=1)) - metrics.rms_delay_spread)
        / metrics.rms_delay_spread,
        "max_observation_probability": max_observation_probability(model),
    }
    extra: dict[str, str] = {}
    if args.histogram is not None:
        from .metrics import pdp

        counts, edges = sim.arrival_histogram(np.linspace(0.0, float(times.max()), args.bins + 1))
        centers = 0.5 * (edges[:-1] + edges[1:])
        widths = np.diff(edges)
        density = counts / (sim.reached_count * widths)
        hist_rows = [
            {
                "bin_lo": float(edges[i]),
                "bin_hi": float(edges[i + 1]),
                "count": int(counts[i]),
                "empirical_density": float(density[i]),
                "model_density": float(pdp(model.ensemble, centers[i])),
            }
            for i in range(len(counts))
        ]
        extra[args.histogram] = _table_text(hist_rows, "csv")
    return _keyvalue_text(doc, args.format), extra


def _parse_n_range(spec: str) -> list[int]:
    try:
        lo_text, hi_text, ppd_text = spec.split(":")
        lo, hi, ppd = float(lo_text), float(hi_text), float(ppd_text)
    except ValueError as exc:
        raise _UsageError(f"--n-range must be lo:hi:points-per-decade, got {spec!r}") from exc
    if lo <= 0 or hi < lo or ppd <= 0:
        raise _UsageError(f"invalid --n-range {spec!r}")
    points = int(round(math.log10(hi / lo) * ppd)) + 1
    values = np.unique(np.rint(np.logspace(math.log10(lo), math.log10(hi), points)).astype(int))
    return [int(v) for v in values]


def _cmd_ser(args) -> tuple[str, dict[str, str]]:
    network, placement, flow = _load(args.network)
    model = build_channel(network, flow, placement, background_rate=args.n_bar)
    metrics = rms_delay_spread(model.ensemble)
    symbol_duration = args.ts_factor * metrics.rms_delay_spread
    rows = []
    for n in _parse_n_range(args.n_range):
        config = LinkConfig(
            symbol_duration=symbol_duration,
            memory=args.memory,
            molecules_per_one=n,
            background=args.n_bar,
            strategy=_STRATEGIES[args.strategy],
            symbol_count=args.symbols,
            seed=args.seed,
            genie_aided=args.genie,
        )
        result = run_link(model, metrics, config)
        ci_lo, ci_hi = wilson_interval(result.errors, result.symbol_count)
        rows.append(
            {
                "N": n,
                "ser": result.ser,
                "ci_lo": ci_lo,
                "ci_hi": ci_hi,
                "t_s": result.resolved_sampling_time,
                "T_s": symbol_duration,
                "psi_mean": result.mean_threshold,
            }
        )
    return _table_text(rows, args.format), {}


# -- parser ------------------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog="vasculink", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: _Parser) -> None:
        p.add_argument("network", help="network document (JSON)")
        p.add_argument("--out", default=None, help="write output here instead of stdout")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p_flow = sub.add_parser("flow", help="per-pipe flow rate, velocity, effective diffusion")
    common(p_flow)
    p_flow.set_defaults(handler=_cmd_flow)

    p_paths = sub.add_parser("paths", help="Tx->Rx paths with fractions, moments, weights")
    common(p_paths)
    p_paths.set_defaults(handler=_cmd_paths)

    p_cir = sub.add_parser("cir", help="channel impulse response on a time grid")
    common(p_cir)
    p_cir.add_argument("--t-max", type=float, default=None, help="grid end (default E[T]+8 tau)")
    p_cir.add_argument("--samples", type=int, default=2048)
    p_cir.add_argument("--per-path", action="store_true", help="add one weighted column per path")
    p_cir.set_defaults(handler=_cmd_cir)

    p_metrics = sub.add_parser("metrics", help="delay-spread metrics and coherence bandwidth")
    common(p_metrics)
    p_metrics.set_defaults(handler=_cmd_metrics)

    p_spec = sub.add_parser("spectrum", help="frequency response, phase, group delay")
    common(p_spec)
    p_spec.add_argument("--f-max", type=float, default=None, help="grid end (default 50 B_c)")
    p_spec.add_argument("--samples", type=int, default=4096)
    p_spec.add_argument("--per-path", action="store_true", help="add per-path magnitude columns")
    p_spec.set_defaults(handler=_cmd_spectrum)

    p_val = sub.add_parser("validate", help="Monte Carlo particle check of the analytic model")
    common(p_val)
    p_val.add_argument("--particles", type=int, default=100_000)
    p_val.add_argument("--seed", type=int, default=0)
    p_val.add_argument("--histogram", default=None, help="also write the arrival histogram CSV here")
    p_val.add_argument("--bins", type=int, default=64)
    p_val.set_defaults(handler=_cmd_validate)

    p_ser = sub.add_parser("ser", help="symbol error rate sweep over released molecule counts")
    common(p_ser)
    p_ser.add_argument("--n-range", default="1e2:1e6:1", help="lo:hi:points-per-decade")
    p_ser.add_argument("--ts-factor", type=float, default=4.0, help="symbol duration as multiple of tau_rms")
    p_ser.add_argument("--memory", type=int, default=2)
    p_ser.add_argument("--strategy", choices=sorted(_STRATEGIES), default="strongest-path")
    p_ser.add_argument("--symbols", type=int, default=1_000_000)
    p_ser.add_argument("--seed", type=int, default=0)
    p_ser.add_argument("--n-bar", type=float, default=500.0, help="expected background molecules")
    p_ser.add_argument("--genie", action="store_true", help="use true symbols for ISI estimation")
    p_ser.set_defaults(handler=_cmd_ser)

    return parser


def dispatch(argv: list[str]) -> int:
    """Parse arguments, run the subcommand, and report errors by class."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        text, extra_files = args.handler(args)
        _deliver(text, args, extra_files)
    except _UsageError as exc:
        print(f"USAGE: {exc}", file=sys.stderr)
        return 2
    except SchemaError as exc:
        print(f"PARSE: {exc}", file=sys.stderr)
        return 1
    except ModelError as exc:
        print(f"MODEL: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv: list[str] | None = None) -> int:
    return dispatch(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
