"""Command-line interface: ``camstable <command> [options]``.

Options may also come from a JSON file given with ``--config``; explicit
flags override file values.  Exit codes: 0 success, 2 domain or
configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import cam, experiments, oulp, sigma_est, stats
from .errors import DomainError, NumericalError
from .trajectory import Trajectory, _jsonable, stream, write_json, write_table

EXIT_OK, EXIT_DOMAIN, EXIT_NUMERICAL = 0, 2, 3


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--workers", type=int, help="worker threads (default 1)")
    p.add_argument("--config", type=Path, help="JSON file with option values")
    p.add_argument("--out", type=Path, help="output path")


def _cam_opts(p: argparse.ArgumentParser):
    g = p.add_argument_group("CAM parameters")
    g.add_argument("--L", type=float, help="drift rate (< 0)")
    g.add_argument("--E", type=float, help="multiplicative amplitude (> 0)")
    g.add_argument("--alpha-star", dest="alpha_star", type=float, help="set E from alpha* instead of --E")
    g.add_argument("--g", type=float, help="correlated additive amplitude")
    g.add_argument("--b", type=float, help="independent additive amplitude (> 0)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="camstable", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("derive-params", help="stable-law parameters of a CAM process")
    _common(p)
    _cam_opts(p)

    p = sub.add_parser("simulate-cam", help="simulate the CAM SDE (weak order 2.0)")
    _common(p)
    _cam_opts(p)
    p.add_argument("--dt", type=float)
    p.add_argument("--n-steps", dest="n_steps", type=int)
    p.add_argument("--y0", type=float, help="initial state (default: stationary draw)")
    p.add_argument("--eps", type=float, help="simulate y_{t/eps} on the slow clock")
    p.add_argument("--record-every", dest="record_every", type=int)

    p = sub.add_parser("simulate-oulp", help="simulate an Ornstein-Uhlenbeck-Levy process")
    _common(p)
    p.add_argument("--theta", type=float)
    p.add_argument("--sigma-z", dest="sigma_z", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--n-steps", dest="n_steps", type=int)
    p.add_argument("--z0", type=float)
    p.add_argument("--record-every", dest="record_every", type=int)

    for name, helptext in (("estimate-sigma", "estimate Sigma"), ("sweep-sigma", "sigma_Y over eps or Delta")):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        _cam_opts(p)
        p.add_argument("--eps", type=float)
        p.add_argument("--T", type=float)
        p.add_argument("--Delta", type=float)
        p.add_argument("--N-S", dest="N_S", type=int)
        p.add_argument("--dt", type=float)
        p.add_argument("--repeats", type=int)
        p.add_argument("--l-min", dest="l_min", type=float)
        p.add_argument("--l-max", dest="l_max", type=float)
        p.add_argument("--n-grid", dest="n_grid", type=int)
        p.add_argument("--min-partitions", dest="min_partitions", type=int)
        if name == "sweep-sigma":
            p.add_argument("--vary", choices=["eps", "Delta"])
            p.add_argument("--values", type=_floats, help="comma-separated values of the varied quantity")
            p.add_argument("--N-Y", dest="N_Y", type=int, help="partitions per integral when varying Delta")

    p = sub.add_parser("acd", help="autocodifference of simulated CAM or OULP paths")
    _common(p)
    _cam_opts(p)
    p.add_argument("--model", choices=["cam", "oulp"])
    p.add_argument("--theta", type=float)
    p.add_argument("--sigma-z", dest="sigma_z", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--n-paths", dest="n_paths", type=int)
    p.add_argument("--T", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--record-dt", dest="record_dt", type=float)
    p.add_argument("--max-lag", dest="max_lag", type=int, help="largest lag in recorded samples")

    p = sub.add_parser("codiff", help="codifference/cosum of neighbouring partitions")
    _common(p)
    _cam_opts(p)
    p.add_argument("--ratios", type=_floats, help="comma-separated Delta/eps values")
    p.add_argument("--n-pairs", dest="n_pairs", type=int)
    p.add_argument("--repeats", type=int)
    p.add_argument("--dt", type=float, help="fast-clock step")

    p = sub.add_parser("tails", help="tail exponent and skew of partition integrals")
    _common(p)
    _cam_opts(p)
    p.add_argument("--n-samples", dest="n_samples", type=int)
    p.add_argument("--Delta", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--quantile", type=float)
    p.add_argument("--n-bins", dest="n_bins", type=int)

    p = sub.add_parser("experiment", help="full versus reduced slow-system comparison")
    _common(p)
    p.add_argument("--system", choices=sorted(experiments.averaging.SYSTEMS))
    p.add_argument("--eps-list", dest="eps", type=_floats, help="comma-separated eps values")
    p.add_argument("--Sigma", type=float, help="skip the inline Sigma estimate")
    p.add_argument("--n-paths", dest="n_paths", type=int)
    p.add_argument("--T", type=float)
    return ap


DEFAULTS = {
    "common": {"seed": 0, "workers": 1, "out": None},
    "cam": {"L": -1.0, "E": None, "alpha_star": 1.5, "g": 0.1, "b": 0.5},
    "derive-params": {},
    "simulate-cam": {"dt": 0.01, "n_steps": 1000, "y0": None, "eps": None, "record_every": 1},
    "simulate-oulp": {
        "theta": 1.0,
        "sigma_z": 1.0,
        "alpha": 1.5,
        "beta": 0.0,
        "eps": 1.0,
        "dt": 0.01,
        "n_steps": 1000,
        "z0": 0.0,
        "record_every": 1,
    },
    "estimate-sigma": {
        "eps": 1e-5,
        "T": 1.0,
        "Delta": None,
        "N_S": 1000,
        "dt": None,
        "repeats": 1,
        "l_min": sigma_est.DEFAULT_L_MIN,
        "l_max": sigma_est.DEFAULT_L_MAX,
        "n_grid": sigma_est.DEFAULT_N_GRID,
        "min_partitions": sigma_est.MIN_PARTITIONS,
    },
    "acd": {
        "model": "cam",
        "theta": 1.0,
        "sigma_z": 1.0,
        "alpha": 1.5,
        "beta": 0.0,
        "n_paths": 100,
        "T": 1000.0,
        "dt": 0.01,
        "record_dt": 0.1,
        "max_lag": 200,
    },
    "codiff": {"ratios": [1.0, 2.0, 5.0, 10.0], "n_pairs": 10_000, "repeats": 20, "dt": 0.1},
    "tails": {"n_samples": 1_000_000, "Delta": 1.0, "eps": 1.0, "dt": None, "quantile": 0.99, "n_bins": 16},
}
DEFAULTS["sweep-sigma"] = {
    **DEFAULTS["estimate-sigma"],
    "eps": 1e-4,
    "vary": "Delta",
    "values": [5e-4, 1e-3, 2e-3, 4e-3],
    "N_Y": 100,
    "repeats": 10,
}


def _apply(opts: dict, layer: dict):
    # E and alpha_star are alternative ways to fix the same coefficient; the
    # later layer's choice replaces the earlier one
    given = [k for k in ("E", "alpha_star") if layer.get(k) is not None]
    if len(given) == 2:
        raise DomainError("give either E or alpha_star, not both")
    if given:
        opts["alpha_star" if given[0] == "E" else "E"] = None
    opts.update(layer)


def resolve(args: argparse.Namespace) -> dict:
    """Defaults, then the --config file, then explicit flags."""
    opts = {**DEFAULTS["common"]}
    if args.command != "experiment":
        if args.command not in ("simulate-oulp",):
            opts.update(DEFAULTS["cam"])
        opts.update(DEFAULTS.get(args.command, {}))
    if args.config is not None:
        try:
            layer = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DomainError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(layer, dict):
            raise DomainError(f"config {args.config} must hold a JSON object")
        _apply(opts, layer)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config") and v is not None}
    _apply(opts, flags)
    return opts


def _cam(opts) -> cam.CamParams:
    return experiments.cam_from_config(opts)


def _emit(payload, out):
    if out is not None:
        write_json(out, payload)
    print(json.dumps(_jsonable(payload), indent=2, sort_keys=True))


def cmd_derive(o):
    p = _cam(o)
    d = cam.derive(p)
    payload = {"cam": p.as_dict(), "nu": p.nu, **{k: getattr(d, k) for k in d.__dataclass_fields__}}
    _emit(payload, o["out"])


def cmd_simulate_cam(o):
    p = _cam(o)
    rng = stream(o["seed"])
    n = int(o["n_steps"])
    if n < 0:
        raise DomainError("n_steps must be non-negative")
    y0 = o["y0"]
    if y0 is None:
        y0 = float(cam.sample_stationary(p, rng, 1)[0])
    if n == 0:
        traj = Trajectory(0.0, o["dt"], np.empty(0), seed=o["seed"], params={"cam": p.as_dict(), "dt": o["dt"]})
    elif o["eps"] is not None:
        traj = cam.simulate_fast(p, o["eps"], y0, o["dt"], n, rng, record_every=o["record_every"], seed=o["seed"])
    else:
        cam.derive(p)
        traj = cam.simulate(p, y0, o["dt"], n, rng, record_every=o["record_every"], seed=o["seed"])
    path = traj.to_csv(o["out"] or "cam_trajectory.csv")
    for w in traj.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(path)


def cmd_simulate_oulp(o):
    q = oulp.OulpParams(o["theta"], o["sigma_z"], o["alpha"], o["beta"])
    rng = stream(o["seed"])
    n = int(o["n_steps"])
    if n < 0:
        raise DomainError("n_steps must be non-negative")
    if n == 0:
        traj = Trajectory(0.0, o["dt"], np.empty(0), seed=o["seed"], params={"oulp": q.as_dict(), "dt": o["dt"]})
    else:
        traj = oulp.simulate(q, o["eps"], o["z0"], o["dt"], n, rng, record_every=o["record_every"], seed=o["seed"])
    path = traj.to_csv(o["out"] or "oulp_trajectory.csv")
    for w in traj.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(path)


def _sigma_kwargs(o):
    return {
        "N_S": o["N_S"],
        "dt": o["dt"],
        "n_repeats": o["repeats"],
        "workers": o["workers"],
        "l_min": o["l_min"],
        "l_max": o["l_max"],
        "n_grid": o["n_grid"],
        "min_partitions": o["min_partitions"],
    }


def cmd_estimate_sigma(o):
    p = _cam(o)
    est = sigma_est.estimate_sigma(p, eps=o["eps"], T=o["T"], Delta=o["Delta"], seed=o["seed"], **_sigma_kwargs(o))
    _emit(est.as_dict(), o["out"])


def cmd_sweep_sigma(o):
    p = _cam(o)
    vals = list(o["values"])
    if o["vary"] == "Delta":
        points = [(o["eps"], o["N_Y"] * D, D) for D in vals]
    else:
        Delta = o["Delta"] if o["Delta"] is not None else o["T"] / o["N_Y"]
        points = [(e, o["T"], Delta) for e in vals]
    ests = sigma_est.sweep_sigma(p, points, seed=o["seed"], **_sigma_kwargs(o))
    x = [e.config[o["vary"]] for e in ests]
    slope = sigma_est.loglog_slope(x, [e.sigma_Y for e in ests])
    d = cam.derive(p)
    expected = 1.0 / d.alpha_star if o["vary"] == "Delta" else d.gamma_star
    out = Path(o["out"] or "sigma_sweep.csv")
    write_table(out, ["eps", "Delta", "sigma_Y", "q25", "q75", "Sigma"], sigma_est.sweep_rows(ests))
    _emit(
        {"vary": o["vary"], "slope": slope, "expected_slope": expected, "csv": str(out)},
        out.with_suffix(".json"),
    )


def cmd_acd(o):
    lags = np.arange(0, int(o["max_lag"]) + 1)
    kw = dict(n_paths=o["n_paths"], T=o["T"], dt=o["dt"], record_dt=o["record_dt"], seed=o["seed"], workers=o["workers"])
    if o["model"] == "cam":
        est = experiments.cam_acd(_cam(o), lags, **kw)
    else:
        q = oulp.OulpParams(o["theta"], o["sigma_z"], o["alpha"], o["beta"])
        est = experiments.oulp_acd(q, lags, **kw)
    rec_dt = max(1, round(o["record_dt"] / o["dt"])) * o["dt"]
    path = write_table(o["out"] or "acd.csv", ["lag", "re", "im", "q25", "q75"], est.rows(rec_dt))
    if np.any(est.flagged):
        print(f"warning: {int(est.flagged.sum())} lags have near-zero characteristic-function values", file=sys.stderr)
    print(path)


def cmd_codiff(o):
    rows = experiments.condition_a(
        _cam(o), o["ratios"], n_pairs=o["n_pairs"], n_repeats=o["repeats"], dt=o["dt"], seed=o["seed"], workers=o["workers"]
    )
    keys = list(rows[0])
    path = write_table(o["out"] or "codiff.csv", keys, ([r[k] for k in keys] for r in rows))
    print(path)


def cmd_tails(o):
    fit, exp_exponent, exp_skew = experiments.tail_experiment(
        _cam(o),
        int(o["n_samples"]),
        quantile=o["quantile"],
        n_bins=o["n_bins"],
        Delta=o["Delta"],
        eps=o["eps"],
        dt=o["dt"],
        seed=o["seed"],
        workers=o["workers"],
    )
    _emit({"fit": fit, "expected_exponent": exp_exponent, "expected_skew": exp_skew}, o["out"])


def cmd_experiment(o):
    cfg = {k: v for k, v in o.items() if k not in ("workers", "out")}
    out = Path(o["out"] or "experiment_out")
    summary = experiments.run_experiment(cfg, out_dir=out, workers=o["workers"])
    rows = [{k: r[k] for k in r if k.startswith("L1") or k == "eps"} for r in summary["per_eps"]]
    print(json.dumps({"Sigma": summary["Sigma"], "per_eps": rows, "converging": summary["converging"]}, indent=2))


COMMANDS = {
    "derive-params": cmd_derive,
    "simulate-cam": cmd_simulate_cam,
    "simulate-oulp": cmd_simulate_oulp,
    "estimate-sigma": cmd_estimate_sigma,
    "sweep-sigma": cmd_sweep_sigma,
    "acd": cmd_acd,
    "codiff": cmd_codiff,
    "tails": cmd_tails,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        opts = resolve(args)
        COMMANDS[args.command](opts)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
