"""Command-line front end: simulate | certify | observe | synth | regstudy.

Each command loads a bundle (``--config PATH`` or a built-in ``--example N``),
runs one pipeline, writes its CSV/SVG/report files plus a manifest listing
every output, and exits with 0 on success, 1 on a failed verdict, 2 on
usage/config errors, and 3 on numerical failure.  Reruns with identical
inputs produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .certify import certify_observer, certify_plant, certify_pwa_exact
from .config import Bundle, ConfigError, load_bundle
from .examples import load_example
from .measures import MeasureKind
from .observer import check_envelope, fit_envelope_gain, run_pair
from .regularize import TransitionFunction, order_study
from .simulate import IntegrationError, Trajectory, integrate
from .svgplot import line_plot
from .synth import SynthesisProblem, synthesize

EXIT_OK = 0
EXIT_VERDICT = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def _g17(v: float) -> str:
    return f"{float(v):.17g}"


def _parse_vector(text: str, n: int, what: str) -> np.ndarray:
    try:
        vals = [float(tok) for tok in text.split(",")]
    except ValueError:
        raise ConfigError(f"cannot parse {what}: {text!r}") from None
    if len(vals) != n:
        raise ConfigError(f"{what} needs {n} comma-separated values, got {len(vals)}")
    return np.array(vals)


def _parse_gains(text: str, n: int, p: int, what: str) -> np.ndarray:
    return _parse_vector(text, n * p, what).reshape(n, p)


class _Outputs:
    def __init__(self, outdir: Path):
        self.outdir = outdir
        self.files = []

    def path(self, name: str) -> Path:
        self.outdir.mkdir(parents=True, exist_ok=True)
        self.files.append(name)
        return self.outdir / name

    def write_manifest(self, command: str, args: argparse.Namespace, resolved: dict):
        manifest = {
            "command": command,
            "config": args.config,
            "example": args.example,
            "parameters": resolved,
            "tool_version": __version__,
            "outputs": sorted(set(self.files)),
        }
        path = self.path("manifest.json")
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _load(args) -> Bundle:
    if args.config is not None:
        return load_bundle(args.config)
    if args.example is not None:
        return load_example(args.example)
    raise ConfigError("either --config PATH or --example N is required")


def _measure(args, bundle: Bundle) -> MeasureKind:
    return MeasureKind.parse(args.measure) if args.measure else bundle.measure


def _write_trajectory_csv(path: Path, traj: Trajectory):
    n = traj.X.shape[1]
    lines = ["t," + ",".join(f"x{i + 1}" for i in range(n)) + ",mode"]
    for t, row, m in zip(traj.ts, traj.X, traj.modes):
        lines.append(_g17(t) + "," + ",".join(_g17(v) for v in row) + f",{int(m)}")
    path.write_text("\n".join(lines) + "\n")


def _write_events_csv(path: Path, traj: Trajectory):
    n = traj.X.shape[1]
    lines = ["t,kind," + ",".join(f"x{i + 1}" for i in range(n))]
    for e in traj.events:
        lines.append(_g17(e.t) + f",{e.kind}," + ",".join(_g17(v) for v in e.x))
    path.write_text("\n".join(lines) + "\n")


def _integrator_overrides(args) -> dict:
    out = {}
    for key in ("t0", "tf", "rel_tol", "abs_tol", "max_step", "tol_event", "sample_interval"):
        val = getattr(args, key, None)
        if val is not None:
            out[key] = val
    return out


def cmd_simulate(args) -> int:
    bundle = _load(args)
    block = bundle.simulate
    cfg = bundle.integrator_config(block, **_integrator_overrides(args))
    x0 = (_parse_vector(args.x0, bundle.system.n, "--x0")
          if args.x0 else np.asarray(block.get("x0"), dtype=float))
    if x0 is None or np.shape(x0) != (bundle.system.n,):
        raise ConfigError("initial state x0 missing or of wrong length")
    traj = integrate(bundle.system, x0, cfg)
    out = _Outputs(Path(args.out))
    _write_trajectory_csv(out.path("trajectory.csv"), traj)
    _write_events_csv(out.path("events.csv"), traj)
    states = block.get("plot_states", list(range(1, bundle.system.n + 1)))
    series = [(traj.ts, traj.X[:, int(i) - 1], f"x{int(i)}") for i in states]
    line_plot(out.path("states.svg"), series, title=f"{bundle.name}: state evolution",
              xlabel="t", ylabel="state")
    out.write_manifest("simulate", args, {
        "x0": list(map(float, x0)), "t_span": list(cfg.t_span),
        "rel_tol": cfg.rel_tol, "abs_tol": cfg.abs_tol, "tol_event": cfg.tol_event,
    })
    kinds = {}
    for e in traj.events:
        kinds[e.kind] = kinds.get(e.kind, 0) + 1
    print(f"simulated {bundle.name}: t in {cfg.t_span}, {len(traj.ts)} samples, "
          f"events {kinds if kinds else 'none'}")
    return EXIT_OK


def _resolve_gains(args, bundle: Bundle):
    n, p = bundle.system.n, bundle.system.p
    if args.gains:
        L = _parse_gains(args.gains, n, p, "--gains")
        return L, L.copy()
    Lp = _parse_gains(args.gains_plus, n, p, "--gains-plus") if args.gains_plus else None
    Lm = _parse_gains(args.gains_minus, n, p, "--gains-minus") if args.gains_minus else None
    return Lp, Lm


def _certificate(args, bundle: Bundle, kind: MeasureKind):
    cb = bundle.certify
    Lp, Lm = _resolve_gains(args, bundle)
    obs = bundle.observer(Lp, Lm)
    grid = [int(args.grid)] * bundle.system.n if args.grid else cb.get("grid", [41] * bundle.system.n)
    if bundle.system.pwa is not None and not args.sampled:
        return obs, certify_pwa_exact(
            obs, kind,
            sigma_region=cb.get("region"), sigma_grid=grid,
            output_range=cb.get("output_range"), output_grid=cb.get("output_grid"),
            sliding_tol=cb.get("sliding_tol", 1e-9),
        )
    region = cb.get("region")
    output_range = cb.get("output_range")
    if region is None or output_range is None:
        raise ConfigError("[certify] needs region and output_range for sampled checks")
    return obs, certify_observer(
        obs, kind, region, output_range, grid,
        output_grid=cb.get("output_grid"), sliding_tol=cb.get("sliding_tol", 1e-9),
    )


def cmd_certify(args) -> int:
    bundle = _load(args)
    kind = _measure(args, bundle)
    if args.plant:
        cb = bundle.certify
        if cb.get("region") is None:
            raise ConfigError("[certify] needs region for plant checks")
        cert = certify_plant(bundle.system, kind, cb["region"],
                             cb.get("grid", [41] * bundle.system.n),
                             sliding_tol=cb.get("sliding_tol", 1e-9))
    else:
        _, cert = _certificate(args, bundle, kind)
    out = _Outputs(Path(args.out))
    out.path("certificate.txt").write_text(cert.to_text() + "\n")
    out.path("certificate.csv").write_text(cert.CSV_HEADER + "\n" + cert.to_csv_row() + "\n")
    out.write_manifest("certify", args, {"measure": kind.value, "plant": bool(args.plant)})
    print(cert.to_text())
    return EXIT_OK if cert.verdict == "certified" else EXIT_VERDICT


def cmd_observe(args) -> int:
    bundle = _load(args)
    kind = _measure(args, bundle)
    obs_block = bundle.observe
    sim_block = bundle.simulate
    obs, cert = _certificate(args, bundle, kind)
    rate = args.rate if args.rate is not None else cert.rate
    if rate <= 0:
        print(cert.to_text())
        print("no positive certified rate; envelope undefined")
        return EXIT_VERDICT
    block = {**sim_block, **obs_block}
    cfg = bundle.integrator_config(block, **_integrator_overrides(args))
    x0 = (_parse_vector(args.x0, bundle.system.n, "--x0")
          if args.x0 else np.asarray(block.get("x0"), dtype=float))
    xhat0 = (_parse_vector(args.xhat0, bundle.system.n, "--xhat0")
             if args.xhat0 else np.asarray(block.get("xhat0", [0.0] * bundle.system.n), dtype=float))
    K = args.K if args.K is not None else float(block.get("K", 1.0))
    slack = args.slack if args.slack is not None else float(block.get("slack", 0.05))
    plant_traj, obs_traj, trace = run_pair(obs, x0, xhat0, cfg, kind)
    passed, violations = check_envelope(trace, K, rate, slack)
    fit_K = fit_envelope_gain(trace, rate)
    out = _Outputs(Path(args.out))
    out.path("error.csv").write_text(trace.to_csv(K, rate))
    bounds = K * np.exp(-rate * (trace.ts - trace.ts[0])) * trace.x0_norm
    line_plot(out.path("error.svg"),
              [(trace.ts, trace.errs, "error norm"), (trace.ts, bounds, "bound")],
              title=f"{bundle.name}: estimation error ({kind.value} norm)",
              xlabel="t", ylabel="log10", logy=True)
    summary = (
        f"certified rate: {cert.rate:.12g}\n"
        f"envelope check: K={K:g} c={rate:.12g} slack={slack:g} -> "
        f"{'pass' if passed else f'FAIL ({len(violations)} violations)'}\n"
        f"fitted K at this rate: {fit_K:.6g}\n"
        f"plant events: {len(plant_traj.events)}, observer events: {len(obs_traj.events)}\n"
    )
    out.path("observe.txt").write_text(summary)
    out.write_manifest("observe", args, {
        "measure": kind.value, "K": K, "slack": slack, "rate": rate,
        "x0": list(map(float, x0)), "xhat0": list(map(float, xhat0)),
        "t_span": list(cfg.t_span),
    })
    print(summary, end="")
    return EXIT_OK if passed else EXIT_VERDICT


_FREEZE_HELP = "comma list like l2p,l2m: gain row 2 of the plus/minus gain is frozen"


def _freeze_masks(spec_text: str, n: int, p: int):
    free_p = np.ones((n, p), dtype=bool)
    free_m = np.ones((n, p), dtype=bool)
    if not spec_text:
        return free_p, free_m
    for tok in spec_text.split(","):
        tok = tok.strip().lower()
        if not tok:
            continue
        if not (tok.startswith("l") and tok[-1] in "pm"):
            raise ConfigError(f"bad --freeze entry {tok!r}; {_FREEZE_HELP}")
        try:
            row = int(tok[1:-1])
        except ValueError:
            raise ConfigError(f"bad --freeze entry {tok!r}; {_FREEZE_HELP}") from None
        if not 1 <= row <= n:
            raise ConfigError(f"--freeze row {row} outside 1..{n}")
        (free_p if tok[-1] == "p" else free_m)[row - 1, :] = False
    return free_p, free_m


def cmd_synth(args) -> int:
    bundle = _load(args)
    kind = _measure(args, bundle)
    sb = bundle.synth
    cb = bundle.certify
    n, p = bundle.system.n, bundle.system.p
    if "box_plus" not in sb or "box_minus" not in sb:
        raise ConfigError("[synth] needs box_plus and box_minus gain boxes")
    region = sb.get("region", cb.get("region"))
    output_range = sb.get("output_range", cb.get("output_range"))
    if region is None or output_range is None:
        raise ConfigError("synthesis needs region and output_range ([synth] or [certify])")
    free_p, free_m = _freeze_masks(args.freeze or "", n, p)
    tie = args.tie or bool(sb.get("tie", False))
    Lp0 = bundle.L_plus if bundle.L_plus is not None else np.zeros((n, p))
    Lm0 = bundle.L_minus if bundle.L_minus is not None else np.zeros((n, p))
    prob = SynthesisProblem(
        base=bundle.system, kind=kind, L_plus0=Lp0, L_minus0=Lm0,
        box_plus=sb["box_plus"], box_minus=sb["box_minus"],
        region=region, output_range=output_range,
        grid=sb.get("grid", cb.get("grid", [41] * n)),
        output_grid=sb.get("output_grid", cb.get("output_grid")),
        free_plus=free_p, free_minus=free_m, tie=tie,
        sliding_tol=sb.get("sliding_tol", cb.get("sliding_tol", 1e-9)),
        seeds_per_dim=int(sb.get("seeds_per_dim", 5)),
    )
    budget = args.budget if args.budget is not None else int(sb.get("budget", 200))
    result = synthesize(prob, budget=budget, seed=args.seed)
    out = _Outputs(Path(args.out))
    report = (
        f"feasible: {result.feasible}\n"
        f"L_plus:  {result.L_plus.ravel().tolist()}\n"
        f"L_minus: {result.L_minus.ravel().tolist()}\n"
        f"evaluations: {result.evaluations} (seed {result.seed})\n"
        + result.certificate.to_text() + "\n"
    )
    out.path("synth.txt").write_text(report)
    out.write_manifest("synth", args, {
        "measure": kind.value, "budget": budget, "seed": args.seed,
        "tie": tie, "freeze": args.freeze or "",
    })
    print(report, end="")
    return EXIT_OK if result.feasible else EXIT_VERDICT


def cmd_regstudy(args) -> int:
    bundle = _load(args)
    kind = _measure(args, bundle)
    rb = {**bundle.simulate, **bundle.regstudy}
    eps = ([float(tok) for tok in args.eps.split(",")]
           if args.eps else [float(e) for e in rb.get("eps", [1e-2, 5e-3, 2.5e-3])])
    x0 = (_parse_vector(args.x0, bundle.system.n, "--x0")
          if args.x0 else np.asarray(rb.get("x0"), dtype=float))
    t0 = args.t0 if args.t0 is not None else float(rb.get("t0", 0.0))
    tf = args.tf if args.tf is not None else rb.get("tf")
    if tf is None:
        raise ConfigError("no final time: set tf in [regstudy] or pass --tf")
    study = order_study(bundle.system, TransitionFunction("cubic", eps[0]), x0,
                        (t0, float(tf)), eps, kind)
    out = _Outputs(Path(args.out))
    lines = ["epsilon,sup_deviation"]
    for e, d in study.rows():
        lines.append(f"{_g17(e)},{_g17(d)}")
    lines.append(f"slope,{_g17(study.slope)}")
    out.path("order.csv").write_text("\n".join(lines) + "\n")
    out.write_manifest("regstudy", args, {
        "measure": kind.value, "eps": eps, "x0": list(map(float, x0)),
        "t_span": [t0, float(tf)],
    })
    print(f"order study on {bundle.name}: slope {study.slope:.4f}; "
          f"deviations {['%.3e' % d for d in study.deviations]}")
    return EXIT_OK


def _add_common(sp):
    sp.add_argument("--config", help="path to a TOML system bundle")
    sp.add_argument("--example", type=int, choices=[1, 2, 3],
                    help="use a built-in example bundle")
    sp.add_argument("--out", default="out", help="output directory (default: out)")
    sp.add_argument("--measure", choices=["l1", "l2", "linf"],
                    help="override the bundle's measure kind")
    sp.add_argument("--seed", type=int, default=0, help="seed for randomized orderings")


def _add_integrator_flags(sp):
    sp.add_argument("--t0", type=float)
    sp.add_argument("--tf", type=float)
    sp.add_argument("--rel-tol", dest="rel_tol", type=float)
    sp.add_argument("--abs-tol", dest="abs_tol", type=float)
    sp.add_argument("--max-step", dest="max_step", type=float)
    sp.add_argument("--tol-event", dest="tol_event", type=float)
    sp.add_argument("--sample-interval", dest="sample_interval", type=float)


def _add_gain_flags(sp):
    sp.add_argument("--gains", help="shared gain entries, row-major, e.g. 1,1")
    sp.add_argument("--gains-plus", dest="gains_plus")
    sp.add_argument("--gains-minus", dest="gains_minus")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="swobs",
        description="simulate switched systems with sliding, certify contraction "
                    "rates, and design/verify switched observers",
    )
    ap.add_argument("--version", action="version", version=f"swobs {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="event-driven simulation, CSV + SVG output")
    _add_common(sp)
    _add_integrator_flags(sp)
    sp.add_argument("--x0", help="initial state override, comma separated")
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("certify", help="contraction certificate for the observer (or plant)")
    _add_common(sp)
    _add_gain_flags(sp)
    sp.add_argument("--plant", action="store_true", help="certify the plant instead")
    sp.add_argument("--grid", type=int, help="grid points per axis")
    sp.add_argument("--sampled", action="store_true",
                    help="force sampled certification even for PWA systems")
    sp.set_defaults(fn=cmd_certify)

    sp = sub.add_parser("observe", help="plant/observer run with envelope check")
    _add_common(sp)
    _add_integrator_flags(sp)
    _add_gain_flags(sp)
    sp.add_argument("--plant", action="store_true", help=argparse.SUPPRESS)
    sp.add_argument("--grid", type=int, help=argparse.SUPPRESS)
    sp.add_argument("--sampled", action="store_true", help=argparse.SUPPRESS)
    sp.add_argument("--x0")
    sp.add_argument("--xhat0")
    sp.add_argument("--K", type=float)
    sp.add_argument("--slack", type=float)
    sp.add_argument("--rate", type=float, help="override the envelope rate")
    sp.set_defaults(fn=cmd_observe)

    sp = sub.add_parser("synth", help="search observer gains maximizing the certified rate")
    _add_common(sp)
    sp.add_argument("--budget", type=int)
    sp.add_argument("--freeze", help=_FREEZE_HELP)
    sp.add_argument("--tie", action="store_true", help="share one gain across both modes")
    sp.set_defaults(fn=cmd_synth)

    sp = sub.add_parser("regstudy", help="smoothing order study: deviation vs layer width")
    _add_common(sp)
    sp.add_argument("--eps", help="comma list of layer half-widths")
    sp.add_argument("--x0")
    sp.add_argument("--t0", type=float)
    sp.add_argument("--tf", type=float)
    sp.set_defaults(fn=cmd_regstudy)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IntegrationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
