"""Experiment drivers shared by the command line and the acceptance suite.

Every driver splits its Monte Carlo work into a fixed list of tasks, each
with its own stream ``(seed, *key, task)``, so results do not depend on
the number of worker threads.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from . import averaging, cam, oulp, sigma_est, stable, stats
from .errors import DomainError
from .trajectory import run_tasks, write_json, write_table


def cam_from_config(block: dict) -> cam.CamParams:
    """CamParams from {L, E, g, b} or {L, alpha_star, g, b}."""
    try:
        L, g, b = float(block["L"]), float(block["g"]), float(block["b"])
    except KeyError as exc:
        raise DomainError(f"cam parameters need L, g, b and one of E / alpha_star (missing {exc})") from None
    if block.get("E") is not None:
        return cam.CamParams(L=L, E=float(block["E"]), g=g, b=b)
    if block.get("alpha_star") is not None:
        return cam.CamParams.from_alpha(float(block["alpha_star"]), L, g, b)
    raise DomainError("cam parameters need E or alpha_star")


def _chunks(total: int, size: int) -> list[int]:
    size = max(1, int(size))
    n = max(1, math.ceil(total / size))
    out = [size] * (n - 1)
    out.append(total - size * (n - 1))
    return out


# ---------------------------------------------------------------------------
# codifference of neighbouring partitions
# ---------------------------------------------------------------------------


def condition_a(
    p: cam.CamParams,
    delta_over_eps,
    n_pairs: int = 10_000,
    n_repeats: int = 20,
    pairs_per_path: int = 20,
    dt: float = 0.1,
    seed: int = 0,
    workers: int = 1,
) -> list[dict]:
    """|CD| and |CS| of scale-normalized (Y_j, Y_{j+1}) versus Delta/eps.

    Runs on the fast clock (eps = 1).  Each repeat draws ``n_pairs``
    disjoint pairs, ``pairs_per_path`` from each stationary path, and
    normalizes by the stable scale fitted to its Y_j.
    """
    d = cam.derive(p)
    n_paths = math.ceil(n_pairs / pairs_per_path)
    rows = []
    for i, ratio in enumerate(np.atleast_1d(delta_over_eps)):

        def one(_, rng, ratio=float(ratio)):
            Y = sigma_est.partition_integrals(p, 1.0, ratio, n_paths, 2 * pairs_per_path, dt * 1.0, rng)
            first = Y[:, 0::2].ravel()[:n_pairs]
            second = Y[:, 1::2].ravel()[:n_pairs]
            s0 = sigma_est.robust_scale(first)
            s = sigma_est.fit_scale(first, d.alpha_star, d.beta_star, 0.05 / s0, 2.0 / s0)
            cd, cs = stats.codiff_cosum(first, second, scale=s)
            self_cd, _ = stats.codiff_cosum(first, first, scale=s)
            return abs(cd), abs(cs), self_cd.real

        res = np.array(run_tasks(one, n_repeats, seed, workers, key=(i,)))
        q_cd, q_cs, q_self = (stats.quartiles(res[:, c]) for c in range(3))
        rows.append(
            {
                "delta_over_eps": float(ratio),
                "cd_median": q_cd[1],
                "cd_q25": q_cd[0],
                "cd_q75": q_cd[2],
                "cs_median": q_cs[1],
                "cs_q25": q_cs[0],
                "cs_q75": q_cs[2],
                "cd_self_median": q_self[1],
            }
        )
    return rows


# ---------------------------------------------------------------------------
# tails of partition integrals
# ---------------------------------------------------------------------------


def partition_samples(
    p: cam.CamParams,
    n_samples: int,
    Delta: float = 1.0,
    eps: float = 1.0,
    dt: float | None = None,
    windows_per_path: int = 10,
    paths_per_task: int = 10_000,
    seed: int = 0,
    workers: int = 1,
) -> np.ndarray:
    """``n_samples`` realizations of Y_j (consecutive windows of stationary paths)."""
    n_paths = math.ceil(n_samples / windows_per_path)
    sizes = _chunks(n_paths, paths_per_task)

    def one(i, rng):
        return sigma_est.partition_integrals(p, eps, Delta, sizes[i], windows_per_path, dt, rng).ravel()

    return np.concatenate(run_tasks(one, len(sizes), seed, workers))[:n_samples]


def tail_experiment(p: cam.CamParams, n_samples: int, quantile: float = 0.99, n_bins: int = 16, **kwargs):
    """Tail fit of Y_j samples; returns (TailFit, expected exponent, expected skew)."""
    d = cam.derive(p)
    Y = partition_samples(p, n_samples, **kwargs)
    fit = stats.tail_fit(Y, quantile=quantile, n_bins=n_bins)
    return fit, -(1.0 + d.alpha_star), d.beta_star


# ---------------------------------------------------------------------------
# ACD of the fast processes
# ---------------------------------------------------------------------------


def cam_acd(
    p: cam.CamParams,
    lags,
    n_paths: int = 100,
    T: float = 1000.0,
    dt: float = 0.01,
    record_dt: float = 0.1,
    seed: int = 0,
    workers: int = 1,
) -> stats.AcdEstimate:
    """ACD of stationary CAM paths (one realization per path); ``lags`` in record steps."""
    every = max(1, int(round(record_dt / dt)))
    n_steps = int(round(T / dt))

    def one(_, rng):
        y = cam.sample_stationary(p, rng, 1)
        _, rec, _ = cam.advance(p, y, dt, n_steps, rng, record_every=every)
        return rec[0]

    series = np.stack(run_tasks(one, n_paths, seed, workers))
    return stats.acd_estimate(series, lags)


def oulp_acd(
    q: oulp.OulpParams,
    lags,
    n_paths: int = 100,
    T: float = 1000.0,
    dt: float = 0.01,
    record_dt: float = 0.1,
    seed: int = 0,
    workers: int = 1,
) -> stats.AcdEstimate:
    every = max(1, int(round(record_dt / dt)))
    n_steps = int(round(T / dt))

    def one(_, rng):
        z = oulp.sample_stationary(q, rng, 1)
        _, rec, _ = oulp.advance(q, 1.0, z, dt, n_steps, rng, record_every=every)
        return rec[0]

    series = np.stack(run_tasks(one, n_paths, seed, workers))
    return stats.acd_estimate(series, lags)


# ---------------------------------------------------------------------------
# full versus reduced slow systems
# ---------------------------------------------------------------------------

#: k grid on which the reduced linear model's ECF is compared with the OULP law
ECF_GRID = np.linspace(-2.0, 2.0, 81)

EXPERIMENT_DEFAULTS = {
    "system": "linear",
    "system_params": {},
    "rho": None,
    "cam": {"L": -1.0, "alpha_star": 1.5, "g": 0.1, "b": 0.5},
    "eps": [0.1, 0.01, 0.001],
    "Sigma": None,
    "sigma_estimate": {"eps": 1e-4, "T": 1.0, "N_S": 1000, "n_repeats": 5},
    "n_paths": 2000,
    "paths_per_task": 250,
    "T": 20.0,
    "t_burn": 5.0,
    "dt_slow": None,
    "dt_reduced": None,
    "record_dt": 0.1,
    "x0": None,
    "hist": None,
    "acd_lags": list(range(0, 31)),
    "acd_groups": 20,
    "mode_range": None,
    "seed": 0,
}


def _ensemble(fn, n_paths, per_task, seed, workers, key):
    sizes = _chunks(n_paths, per_task)
    parts = run_tasks(lambda i, rng: fn(sizes[i], rng), len(sizes), seed, workers, key=key)
    n_blown = sum(int(t.metadata.get("n_blown_up", 0)) for t in parts)
    values = np.concatenate([t.values for t in parts], axis=0)
    return values, n_blown


def _edges_from(samples, hist_cfg, domain):
    if hist_cfg:
        return stats.heavy_tail_edges(
            hist_cfg["core"][0],
            hist_cfg["core"][1],
            hist_cfg.get("n_core", 80),
            hist_cfg.get("reach"),
            hist_cfg.get("n_log", 10),
        )
    lo, hi = np.nanquantile(samples, [0.005, 0.995])
    if math.isfinite(domain[0]):
        lo = max(lo, domain[0])
    half = 0.5 * (hi - lo)
    return stats.heavy_tail_edges(lo, hi, 60, 50.0 * half, 8)


def _acd_groups(values, groups):
    # stopped (NaN) paths carry no usable serial information
    values = values[np.all(np.isfinite(values), axis=1)]
    g = max(1, min(groups, values.shape[0]))
    members = values.shape[0] // g
    return values[: g * members].reshape(g, members, values.shape[-1])


def _overlap(a: stats.AcdEstimate, b: stats.AcdEstimate) -> np.ndarray:
    return (a.q25.real <= b.q75.real) & (b.q25.real <= a.q75.real)


def run_experiment(config: dict, out_dir=None, workers: int = 1, Sigma_cache: dict | None = None) -> dict:
    """Full-versus-reduced comparison over a list of eps values.

    Returns the summary dict; with ``out_dir`` also writes per-eps
    histogram and ACD CSVs plus ``summary.json``.
    """
    cfg = {**EXPERIMENT_DEFAULTS, **(config or {})}
    p = cam_from_config(cfg["cam"])
    d = cam.derive(p)
    sysm = averaging.make_system(cfg["system"], rho=cfg["rho"], **cfg["system_params"])
    seed = int(cfg["seed"])

    Sigma = cfg["Sigma"]
    sigma_report = None
    if Sigma is None:
        key = (p, tuple(sorted(cfg["sigma_estimate"].items())))
        if Sigma_cache is not None and key in Sigma_cache:
            Sigma = Sigma_cache[key]
        else:
            est = sigma_est.estimate_sigma(p, seed=seed + 7919, workers=workers, **cfg["sigma_estimate"])
            Sigma, sigma_report = est.Sigma, est.as_dict()
            if Sigma_cache is not None:
                Sigma_cache[key] = Sigma
    Sigma = float(Sigma)

    x0 = cfg["x0"]
    if x0 is None:
        x0 = 1.0 if sysm.domain[0] >= 0.0 else 0.0
    record_dt = float(cfg["record_dt"])
    n_paths, per_task = int(cfg["n_paths"]), int(cfg["paths_per_task"])
    T, t_burn = float(cfg["T"]), float(cfg["t_burn"])
    lags = np.asarray(cfg["acd_lags"], dtype=int)
    eps_list = [float(e) for e in cfg["eps"]]

    def reduced_run(eps, key):
        rsys = averaging.reduce(sysm, p, Sigma, eps)
        dt = cfg["dt_reduced"] or sysm.tau_x / 100.0
        every = max(1, int(round(record_dt / dt)))

        def fn(n, rng):
            return averaging.simulate_reduced(rsys, np.full(n, x0), dt, T, rng, record_every=every, t_burn=t_burn)

        return _ensemble(fn, n_paths, per_task, seed, workers, key)

    # the reduced model does not depend on eps when rho = gamma*
    rho = d.gamma_star if sysm.rho is None else sysm.rho
    eps_free = abs(rho - d.gamma_star) < 1e-15
    reduced = {}
    if eps_free:
        shared = reduced_run(eps_list[0], (1, 0))
        reduced = {e: shared for e in eps_list}
    else:
        reduced = {e: reduced_run(e, (1, i)) for i, e in enumerate(eps_list)}

    first = next(iter(reduced.values()))[0]
    edges = _edges_from(first, cfg["hist"], sysm.domain)

    analytic = None
    if sysm.name == "linear":
        mu, zeta = sysm.params["mu"], sysm.params["zeta"]
        law = oulp.OulpParams(theta=mu, sigma_z=abs(zeta) * Sigma, alpha=d.alpha_star, beta=d.beta_star * np.sign(zeta))
        analytic = stats.analytic_masses(lambda x: stable.cdf_numeric(law.stationary, x), edges)

    out = Path(out_dir) if out_dir is not None else None
    per_eps = []
    for i, eps in enumerate(eps_list):
        dt_slow = cfg["dt_slow"] or averaging.default_dt_slow(sysm, eps)
        every = max(1, int(round(record_dt / dt_slow)))

        def fn(n, rng, eps=eps, dt_slow=dt_slow, every=every):
            return averaging.simulate_full(
                sysm, p, eps, np.full(n, x0), dt_slow, T, rng, record_every=every, t_burn=t_burn
            )

        full, full_blown = _ensemble(fn, n_paths, per_task, seed, workers, (0, i))
        red, red_blown = reduced[eps]
        h_full = stats.Histogram.from_samples(full, edges)
        h_red = stats.Histogram.from_samples(red, edges)
        acd_full = stats.acd_estimate(_acd_groups(full, cfg["acd_groups"]), lags[lags < full.shape[-1]])
        acd_red = stats.acd_estimate(_acd_groups(red, cfg["acd_groups"]), lags[lags < red.shape[-1]])
        row = {
            "eps": eps,
            "dt_slow": dt_slow,
            "L1_full_reduced": stats.l1_distance(h_full.masses, h_red.masses),
            "acd_overlap_fraction": float(np.mean(_overlap(acd_full, acd_red))),
            "full_min": float(np.nanmin(full)),
            "reduced_min": float(np.nanmin(red)),
            "n_blown_up_full": full_blown,
            "n_blown_up_reduced": red_blown,
            "blown_up": bool(full_blown or red_blown),
            "n_samples_full": int(full.size),
            "n_samples_reduced": int(red.size),
        }
        if cfg["mode_range"] is not None:
            lo, hi = cfg["mode_range"]
            row["modes_full"] = stats.modes(full, lo, hi).tolist()
            row["modes_reduced"] = stats.modes(red, lo, hi).tolist()
        if analytic is not None:
            row["L1_full_analytic"] = stats.l1_distance(h_full.masses, analytic)
            row["L1_reduced_analytic"] = stats.l1_distance(h_red.masses, analytic)
            row["ecf_sup_reduced_analytic"] = stats.sup_distance(
                stats.ecf(red[np.isfinite(red)], ECF_GRID), oulp.stationary_cf(law, ECF_GRID)
            )
        per_eps.append(row)
        if out is not None:
            tag = f"{eps:g}"
            write_table(out / f"hist_full_eps{tag}.csv", ["bin_lo", "bin_hi", "density"], h_full.rows())
            write_table(out / f"hist_reduced_eps{tag}.csv", ["bin_lo", "bin_hi", "density"], h_red.rows())
            hdr = ["lag", "re", "im", "q25", "q75"]
            write_table(out / f"acd_full_eps{tag}.csv", hdr, acd_full.rows(record_dt))
            write_table(out / f"acd_reduced_eps{tag}.csv", hdr, acd_red.rows(record_dt))

    # convergence ordering: L1 should not grow as eps decreases
    order = sorted(per_eps, key=lambda r: -r["eps"])
    l1 = [r["L1_full_reduced"] for r in order]
    violations = int(sum(b > a for a, b in zip(l1, l1[1:])))
    summary = {
        "config": cfg,
        "Sigma": Sigma,
        "sigma_estimate": sigma_report,
        "alpha_star": d.alpha_star,
        "beta_star": d.beta_star,
        "gamma_star": d.gamma_star,
        "edges": edges,
        "per_eps": per_eps,
        "l1_order_violations": violations,
        "converging": violations == 0,
        "flagged": violations == 1,
    }
    if out is not None:
        write_json(out / "summary.json", summary)
    return summary
