"""Command-line front end: sweeps, parameter scans, and figure data.

Configuration is one JSON object, read from --config (a path, or '-' for
stdin); the --method/--workers/--seed/--out flags override the matching
keys.  Every run writes CSV data plus a JSON sidecar that embeds the
effective configuration and a schema version, so any output can be
regenerated from its own metadata.  CSV cells carry 17 significant
digits, enough to round-trip binary64 exactly; identical configurations
therefore produce byte-identical CSV for the deterministic methods, and
the worker count never changes an emitted number.

Exit codes: 0 success, 2 configuration error, 3 numerical failure
(diagnostic JSON in the output directory), 4 scan with every row failed.
"""

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import dynamics, fock, meanfield, opensystem, phasespace, spectra, windows
from .protocol import SweepProtocol

SCHEMA = "lzsweep/1"

_METHODS = ("exact", "meanfield", "ensemble", "master")

# keys accepted per subcommand; anything else in the config is a typo and
# must fail loudly rather than be silently ignored
_PROTOCOL_KEYS = ("J", "g", "N", "alpha", "t_start", "t_end",
                  "initial_mode", "tol")
_COMMON_KEYS = _PROTOCOL_KEYS + ("method", "gamma", "members", "seed",
                                 "workers", "out", "samples")
_ALLOWED_KEYS = {
    "sweep": _COMMON_KEYS,
    "scan": _COMMON_KEYS + ("alphas", "gs", "Ns"),
    "spectrum": _PROTOCOL_KEYS + ("method", "workers", "out", "eps"),
    "husimi": _PROTOCOL_KEYS + ("method", "workers", "out", "times",
                                "theta_points", "phi_points"),
    "squeezing": _PROTOCOL_KEYS + ("method", "members", "seed", "workers",
                                   "out", "freeze_offset"),
}
_METHODS_FOR = {
    "sweep": _METHODS,
    "scan": _METHODS,
    "spectrum": ("exact",),
    "husimi": ("exact",),
    "squeezing": ("exact", "ensemble"),
}


class ConfigError(ValueError):
    """Invalid configuration; maps to exit code 2."""


@dataclass(frozen=True)
class RunConfig:
    """Effective configuration of one CLI invocation."""

    command: str
    method: str
    J: float = 1.0
    g: float = 0.0
    N: int = 50
    alpha: float = 1.0
    t_start: float = None
    t_end: float = None
    initial_mode: int = 1
    tol: float = 1e-10
    gamma: float = None
    members: int = None
    seed: int = None
    workers: int = 1
    out: str = "."
    samples: int = 257
    alphas: tuple = None
    gs: tuple = None
    Ns: tuple = None
    eps: tuple = None
    times: tuple = None
    theta_points: int = None
    phi_points: int = None
    freeze_offset: float = None

    def protocol(self, **over):
        kw = dict(J=self.J, g=self.g, N=self.N, alpha=self.alpha,
                  t_start=self.t_start, t_end=self.t_end,
                  initial_mode=self.initial_mode, tol=self.tol)
        kw.update(over)
        return SweepProtocol(**kw)

    def echo(self):
        """The round-trippable configuration: exactly the accepted keys."""
        keep = {k: getattr(self, k) for k in _ALLOWED_KEYS[self.command]}
        out = {}
        for k, v in keep.items():
            if v is None:
                continue
            out[k] = list(v) if isinstance(v, tuple) else v
        return out


def _as_float(key, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key} must be a number, got {v!r}")
    return float(v)


def _as_int(key, v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{key} must be an integer, got {v!r}")
    return v


def _as_list(key, v):
    if not isinstance(v, (list, tuple)) or len(v) == 0:
        raise ConfigError(f"{key} must be a non-empty list, got {v!r}")
    return tuple(_as_float(f"{key} entry", x) for x in v)


def _eps_grid(v):
    """Offset grid: either an explicit list or {min, max, points}."""
    if isinstance(v, (list, tuple)):
        return _as_list("eps", v)
    if isinstance(v, dict):
        extra = set(v) - {"min", "max", "points"}
        if extra:
            raise ConfigError(f"unknown eps keys {sorted(extra)}")
        try:
            lo, hi = _as_float("eps.min", v["min"]), _as_float("eps.max", v["max"])
            n = _as_int("eps.points", v["points"])
        except KeyError as missing:
            raise ConfigError(f"eps grid needs key {missing}") from None
        if n < 2 or not lo < hi:
            raise ConfigError(f"eps grid needs min < max and points >= 2, "
                              f"got [{lo}, {hi}] x {n}")
        return tuple(np.linspace(lo, hi, n))
    raise ConfigError(f"eps must be a list or a min/max/points object, got {v!r}")


def load_config(command, raw, overrides):
    """Merge the JSON document and flag overrides into a RunConfig."""
    if not isinstance(raw, dict):
        raise ConfigError(f"config must be a JSON object, got {type(raw).__name__}")
    merged = dict(raw)
    merged.update({k: v for k, v in overrides.items() if v is not None})

    allowed = _ALLOWED_KEYS[command]
    unknown = set(merged) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")

    method = merged.get("method", "exact")
    if method not in _METHODS_FOR[command]:
        raise ConfigError(f"{command} accepts methods {_METHODS_FOR[command]}, "
                          f"got {method!r}")

    kw = {"command": command, "method": method}
    for key in ("J", "g", "alpha", "t_start", "t_end", "tol", "gamma",
                "freeze_offset"):
        if key in allowed and merged.get(key) is not None:
            kw[key] = _as_float(key, merged[key])
    for key in ("N", "initial_mode", "members", "seed", "workers", "samples",
                "theta_points", "phi_points"):
        if key in allowed and merged.get(key) is not None:
            kw[key] = _as_int(key, merged[key])
    for key in ("alphas", "gs"):
        if key in allowed and merged.get(key) is not None:
            kw[key] = _as_list(key, merged[key])
    if "Ns" in allowed and merged.get("Ns") is not None:
        v = merged["Ns"]
        if not isinstance(v, (list, tuple)) or len(v) == 0:
            raise ConfigError(f"Ns must be a non-empty list, got {v!r}")
        kw["Ns"] = tuple(_as_int("Ns entry", x) for x in v)
    if merged.get("eps") is not None:
        kw["eps"] = _eps_grid(merged["eps"])
    if merged.get("times") is not None:
        v = merged["times"]
        if not isinstance(v, (list, tuple)):
            raise ConfigError(f"times must be a list, got {v!r}")
        kw["times"] = tuple(_as_float("times entry", x) for x in v)
    if merged.get("out") is not None:
        kw["out"] = str(merged["out"])

    # method-specific fields: required where the method consumes them,
    # rejected where it could not
    if method == "ensemble":
        if kw.get("members") is None:
            raise ConfigError("the ensemble method requires 'members'")
        if kw.get("members") < 2:
            raise ConfigError(f"members must be >= 2, got {kw['members']}")
        kw.setdefault("seed", 0)
    else:
        for key in ("members", "seed"):
            if kw.get(key) is not None:
                raise ConfigError(f"'{key}' only applies to the ensemble method")
    if method == "master":
        if kw.get("gamma") is None:
            raise ConfigError("the master method requires 'gamma'")
    elif method == "meanfield":
        kw.setdefault("gamma", 0.0)
    elif kw.get("gamma") is not None:
        raise ConfigError(f"'gamma' only applies to the master and meanfield "
                          f"methods, not {method!r}")
    if kw.get("gamma") is not None and kw["gamma"] < 0:
        raise ConfigError(f"gamma must be >= 0, got {kw['gamma']}")

    if kw.get("workers", 1) < 1:
        raise ConfigError(f"workers must be >= 1, got {kw['workers']}")
    if kw.get("samples", 257) < 2:
        raise ConfigError(f"samples must be >= 2, got {kw['samples']}")
    if command == "scan" and not any(kw.get(k) for k in ("alphas", "gs", "Ns")):
        raise ConfigError("scan needs at least one axis: alphas, gs, or Ns")
    if command == "spectrum" and kw.get("eps") is None:
        raise ConfigError("spectrum requires an 'eps' grid")
    if command == "husimi" and kw.get("times") is None:
        raise ConfigError("husimi requires a 'times' list (may be empty)")

    # resolve the protocol now so invalid fields fail before any compute;
    # for single-protocol commands the resolved default window also goes
    # into the echo.  A scan keeps the window keys as given: absent means
    # every point gets its own default window, so freezing one here would
    # change what a re-run of the echo computes.
    try:
        proto = SweepProtocol(**{k: kw[k] for k in _PROTOCOL_KEYS if k in kw})
    except ValueError as bad:
        raise ConfigError(str(bad)) from None
    if command != "scan":
        for key in _PROTOCOL_KEYS:
            kw[key] = getattr(proto, key)
    return RunConfig(**kw)


# ------------------------------------------------------------------ output

def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    x = float(x)
    return "nan" if np.isnan(x) else format(x, ".17g")


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(c) for c in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _write_json(path, payload):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True,
                               default=_jsonable) + "\n")


def _sidecar(cfg, csv_files, results, t_begin):
    return {"schema": SCHEMA, "command": cfg.command, "config": cfg.echo(),
            "csv": csv_files, "wall_time_s": round(time.time() - t_begin, 3),
            "results": results}


# ------------------------------------------------------------------- sweep

def _sample_times(cfg):
    return np.linspace(cfg.t_start, cfg.t_end, cfg.samples)


def _sweep_exact(cfg, ts):
    p = cfg.protocol()
    record, _ = dynamics.propagate_schrodinger(
        dynamics.dressed_initial_state(p), p, ts)
    rows = [(t,) + tuple(record.L[i]) + tuple(record.var_L[i])
            + tuple(record.populations[i]) + tuple(record.spdm_eigs[i])
            for i, t in enumerate(record.t)]
    header = ["t", "lx", "ly", "lz", "var_lx", "var_ly", "var_lz",
              "n1", "n2", "spdm_lo", "spdm_hi"]
    P = dynamics.plz_many_particle(p)
    final = {"L": record.L[-1], "populations": record.populations[-1],
             "spdm_eigs": record.spdm_eigs[-1]}
    return header, rows, P, None, final, {"norm_drift": record.norm_drift}


def _sweep_meanfield(cfg, ts):
    p = cfg.protocol()
    start = meanfield.dressed_initial_state(p)
    if cfg.gamma == 0.0:
        traj, _ = meanfield.propagate_gpe(start, p, ts)
        residuals = {"norm_drift": traj.norm_drift}
    else:
        traj, _ = meanfield.propagate_bloch_noisy(start, p, cfg.gamma, ts)
        # the damped flow must stay inside the Bloch ball
        radius = np.linalg.norm(traj.s, axis=1)
        residuals = {"bloch_radius_excess": max(float(radius.max()) - 0.5, 0.0)}
    rows = [(t,) + tuple(traj.s[i]) for i, t in enumerate(traj.t)]
    P = meanfield.plz_mean_field(p, gamma=cfg.gamma)
    return (["t", "sx", "sy", "sz"], rows, P, None,
            {"s": traj.s[-1]}, residuals)


def _sweep_ensemble(cfg, ts):
    p = cfg.protocol()
    base = phasespace.sample_initial_ensemble(p.N, cfg.members, cfg.seed)
    aligned = phasespace.aligned_ensemble(base, meanfield.dressed_initial_state(p))
    _, mom = phasespace.propagate_ensemble(aligned, p, ts, workers=cfg.workers)
    eigs = np.stack([np.linalg.eigvalsh(m) for m in mom.spdm])
    rows = [(t,) + tuple(mom.mean_L[i]) + tuple(mom.spread_L[i]) + tuple(eigs[i])
            for i, t in enumerate(mom.t)]
    header = ["t", "mean_lx", "mean_ly", "mean_lz", "spread_lx", "spread_ly",
              "spread_lz", "spdm_lo", "spdm_hi"]
    sv = phasespace.plz_ensemble(p, cfg.members, cfg.seed, workers=cfg.workers)
    final = {"mean_L": mom.mean_L[-1], "spread_L": mom.spread_L[-1],
             "spdm_eigs": eigs[-1]}
    return (header, rows, sv.probability, sv.stderr, final,
            {"n_failed": mom.n_failed})


def _sweep_master(cfg, ts):
    p = cfg.protocol()
    psi0 = dynamics.dressed_initial_state(p)
    record, _ = opensystem.propagate_master(np.outer(psi0, psi0.conj()), p,
                                            cfg.gamma, ts)
    rows = [(t,) + tuple(record.L[i]) + tuple(record.var_L[i])
            + tuple(record.populations[i])
            + (record.purity[i], record.trace[i]) + tuple(record.spdm_eigs[i])
            for i, t in enumerate(record.t)]
    header = ["t", "lx", "ly", "lz", "var_lx", "var_ly", "var_lz", "n1", "n2",
              "purity", "trace", "spdm_lo", "spdm_hi"]
    P = opensystem.plz_master(p, cfg.gamma)
    final = {"L": record.L[-1], "populations": record.populations[-1],
             "purity": record.purity[-1], "spdm_eigs": record.spdm_eigs[-1]}
    return (header, rows, P, None, final,
            {"trace_drift": record.trace_drift, "min_eig": record.min_eig})


def run_sweep(cfg):
    t_begin = time.time()
    runner = {"exact": _sweep_exact, "meanfield": _sweep_meanfield,
              "ensemble": _sweep_ensemble, "master": _sweep_master}[cfg.method]
    header, rows, P, stderr, final, residuals = runner(cfg, _sample_times(cfg))
    out = Path(cfg.out)
    _write_csv(out / "sweep.csv", header, rows)
    results = {"p_lz": P, "final": final, "residuals": residuals}
    if stderr is not None:
        results["stderr"] = stderr
    _write_json(out / "sweep.json", _sidecar(cfg, ["sweep.csv"], results, t_begin))
    return 0


# -------------------------------------------------------------------- scan

def _frozen_tail(p):
    """Sample plan for the settled readout: nominal end plus frozen tail."""
    ext = windows.freezeout_window(p)
    tail = windows.tail_times(ext)
    ts = np.unique(np.concatenate([[p.t_end], tail]))
    return ext, ts, np.searchsorted(ts, tail), int(np.searchsorted(ts, p.t_end))


def _tail_value(profile, idx_tail):
    block = profile[idx_tail]
    return float("nan") if np.any(np.isnan(block)) else windows.tail_mean(block)


def _scan_point(pt):
    """One scan row; runs in a worker process, so failures become status."""
    try:
        cfg = RunConfig(**pt)
        p = cfg.protocol()
        if cfg.method == "exact":
            P, se = dynamics.plz_many_particle(p), None
            ext, ts, idx_tail, i_end = _frozen_tail(p)
            rec, _ = dynamics.propagate_schrodinger(
                dynamics.dressed_initial_state(ext), ext, ts)
            xi = _tail_value(dynamics.squeezing_profiles(rec)[0], idx_tail)
            spdm = rec.spdm_eigs[i_end]
        elif cfg.method == "meanfield":
            P, se = meanfield.plz_mean_field(p, gamma=cfg.gamma), None
            start = meanfield.dressed_initial_state(p)
            one = np.array([p.t_end])
            if cfg.gamma == 0.0:
                traj, _ = meanfield.propagate_gpe(start, p, one)
                xi = 1.0  # a coherent product state, by construction
            else:
                traj, _ = meanfield.propagate_bloch_noisy(start, p, cfg.gamma, one)
                xi = float("nan")  # number fluctuations are not tracked
            spdm = np.linalg.eigvalsh(fock.spdm_from_L(p.N * traj.s[-1], p.N))
        elif cfg.method == "ensemble":
            sv = phasespace.plz_ensemble(p, cfg.members, cfg.seed, workers=1)
            P, se = sv.probability, sv.stderr
            ext, ts, idx_tail, i_end = _frozen_tail(p)
            base = phasespace.sample_initial_ensemble(p.N, cfg.members, cfg.seed)
            aligned = phasespace.aligned_ensemble(
                base, meanfield.dressed_initial_state(ext))
            _, mom = phasespace.propagate_ensemble(aligned, ext, ts, workers=1)
            xi = _tail_value(
                phasespace.number_squeezing_from_moments(mom, p.N), idx_tail)
            spdm = np.linalg.eigvalsh(mom.spdm[i_end])
        else:
            P, se = opensystem.plz_master(p, cfg.gamma), None
            ext, ts, idx_tail, i_end = _frozen_tail(p)
            psi0 = dynamics.dressed_initial_state(ext)
            rec, _ = opensystem.propagate_master(np.outer(psi0, psi0.conj()),
                                                 ext, cfg.gamma, ts)
            ref = rec.populations[:, 0] * rec.populations[:, 1] / p.N
            with np.errstate(divide="ignore", invalid="ignore"):
                prof = np.where(ref > p.N * 1e-12, rec.var_L[:, 2] / ref, np.nan)
            xi = _tail_value(prof, idx_tail)
            spdm = rec.spdm_eigs[i_end]
        return {"ok": True, "p_lz": P, "stderr": se,
                "spdm": (float(spdm[0]), float(spdm[1])), "xi_n2": xi}
    except Exception as exc:  # pragma: no branch - per-row isolation
        note = f"{type(exc).__name__}: {exc}".replace("\n", " ").replace(",", ";")
        return {"ok": False, "error": note}


def run_scan(cfg):
    t_begin = time.time()
    points = []
    # an explicit window applies to every point; an omitted one is resolved
    # per point from that point's own parameters
    for alpha in cfg.alphas or (cfg.alpha,):
        for g in cfg.gs or (cfg.g,):
            for N in cfg.Ns or (cfg.N,):
                points.append({"command": "sweep", "method": cfg.method,
                               "J": cfg.J, "g": g, "N": N, "alpha": alpha,
                               "t_start": cfg.t_start, "t_end": cfg.t_end,
                               "initial_mode": cfg.initial_mode,
                               "tol": cfg.tol, "gamma": cfg.gamma,
                               "members": cfg.members, "seed": cfg.seed})

    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(_scan_point, points, chunksize=1))
    else:
        outcomes = [_scan_point(pt) for pt in points]

    header = ["alpha", "g", "N", "p_lz", "spdm_lo", "spdm_hi", "xi_n2",
              "stderr", "status"]
    rows = []
    n_ok = 0
    for pt, res in zip(points, outcomes):
        axis = (pt["alpha"], pt["g"], pt["N"])
        if res["ok"]:
            n_ok += 1
            rows.append(axis + (res["p_lz"], res["spdm"][0], res["spdm"][1],
                                res["xi_n2"], res["stderr"], "ok"))
        else:
            rows.append(axis + (None, None, None, None, None, res["error"]))
    out = Path(cfg.out)
    _write_csv(out / "scan.csv", header, rows)
    _write_json(out / "scan.json", _sidecar(
        cfg, ["scan.csv"],
        {"points": len(points), "succeeded": n_ok}, t_begin))
    return 0 if n_ok else 4


# ------------------------------------------------- spectrum, husimi, squeezing

def run_spectrum(cfg):
    t_begin = time.time()
    p = cfg.protocol()
    grid = np.asarray(cfg.eps)
    levels = spectra.many_body_spectrum(p, grid)
    header = (["eps"] + [f"e_{k}" for k in range(p.N + 1)]
              + [f"mf_e_{k}" for k in range(1, 5)])
    rows = []
    for i, eps in enumerate(grid):
        # stationary energies are per particle; N e shares the many-body axis
        mf = sorted(p.N * fp.energy
                    for fp in spectra.mean_field_stationary_states(
                        eps, p.J, p.g).states)
        rows.append((eps,) + tuple(levels[i]) + tuple(mf) + (None,) * (4 - len(mf)))
    results = {"levels": p.N + 1}
    if abs(p.g) > 2.0 * p.J:
        results["swallow_tail_halfwidth"] = spectra.swallow_tail_boundary(p.J, p.g)
    out = Path(cfg.out)
    _write_csv(out / "spectrum.csv", header, rows)
    _write_json(out / "spectrum.json",
                _sidecar(cfg, ["spectrum.csv"], results, t_begin))
    return 0


def run_husimi(cfg):
    t_begin = time.time()
    p = cfg.protocol()
    times = np.unique(np.asarray(cfg.times, dtype=float))
    if times.size and (times[0] < p.t_start or times[-1] > p.t_end):
        raise ConfigError(f"frame times must lie inside the window "
                          f"[{p.t_start}, {p.t_end}]")
    out = Path(cfg.out)
    frames = []
    csv_files = []
    if times.size:
        record, _ = dynamics.propagate_schrodinger(
            dynamics.dressed_initial_state(p), p, times)
        for k, t in enumerate(times):
            grid = phasespace.husimi(record.state[k] /
                                     np.linalg.norm(record.state[k]),
                                     cfg.theta_points, cfg.phi_points)
            name = f"husimi_{k:03d}.csv"
            rows = [(th, ph, grid.Q[i, j])
                    for i, th in enumerate(grid.theta)
                    for j, ph in enumerate(grid.phi)]
            _write_csv(out / name, ["theta", "phi", "q"], rows)
            csv_files.append(name)
            frames.append({"time": float(t), "file": name,
                           "n_theta": int(grid.theta.size),
                           "n_phi": int(grid.phi.size),
                           "integral": grid.integral})
    _write_json(out / "husimi.json",
                _sidecar(cfg, csv_files, {"frames": frames}, t_begin))
    return 0


def run_squeezing(cfg):
    t_begin = time.time()
    p = cfg.protocol()
    out = Path(cfg.out)
    if cfg.method == "exact":
        value, record = dynamics.sweep_number_squeezing(p, cfg.freeze_offset)
        xi_n, xi_s = dynamics.squeezing_profiles(record)
        rows = list(zip(record.t, xi_n, xi_s))
        header = ["t", "xi_n2", "xi_s2"]
        results = {"xi_n2": value, "window": [record.t[0], record.t[-1]]}
    else:
        ext = windows.freezeout_window(p, cfg.freeze_offset)
        ts = windows.tail_times(ext)
        base = phasespace.sample_initial_ensemble(p.N, cfg.members, cfg.seed)
        aligned = phasespace.aligned_ensemble(
            base, meanfield.dressed_initial_state(ext))
        _, mom = phasespace.propagate_ensemble(aligned, ext, ts,
                                               workers=cfg.workers)
        xi_n = phasespace.number_squeezing_from_moments(mom, p.N)
        value = _tail_value(xi_n, np.arange(ts.size))
        rows = list(zip(mom.t, xi_n))
        header = ["t", "xi_n2"]
        results = {"xi_n2": value, "window": [ts[0], ts[-1]],
                   "n_failed": mom.n_failed}
    _write_csv(out / "squeezing.csv", header, rows)
    _write_json(out / "squeezing.json",
                _sidecar(cfg, ["squeezing.csv"], results, t_begin))
    return 0


# -------------------------------------------------------------------- main

_RUNNERS = {"sweep": run_sweep, "scan": run_scan, "spectrum": run_spectrum,
            "husimi": run_husimi, "squeezing": run_squeezing}

_NUMERICAL_ERRORS = (windows.WindowConvergenceError, opensystem.PositivityError,
                     dynamics.UndefinedSqueezingError, RuntimeError,
                     ArithmeticError, np.linalg.LinAlgError, ValueError)


def _parser():
    ap = argparse.ArgumentParser(
        prog="lzsweep",
        description="Sweep simulations of a driven two-mode condensate")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, blurb in (("sweep", "one sweep, time series plus summary"),
                        ("scan", "Cartesian parameter scan"),
                        ("spectrum", "offset-resolved spectrum data"),
                        ("husimi", "phase-space density frames"),
                        ("squeezing", "settled number-squeezing readout")):
        cmd = sub.add_parser(name, help=blurb)
        cmd.add_argument("--config", metavar="PATH",
                         help="JSON configuration file, or - for stdin")
        cmd.add_argument("--method", choices=_METHODS)
        cmd.add_argument("--workers", type=int,
                         help="parallel workers (default: LZ_WORKERS or 1)")
        cmd.add_argument("--seed", type=int, help="ensemble master seed")
        cmd.add_argument("--out", metavar="DIR",
                         help="output directory (default: .)")
    return ap


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.config:
            try:
                text = (sys.stdin.read() if args.config == "-"
                        else Path(args.config).read_text())
            except OSError as bad:
                raise ConfigError(f"cannot read config: {bad}") from None
            try:
                raw = json.loads(text)
            except json.JSONDecodeError as bad:
                raise ConfigError(f"config is not valid JSON: {bad}") from None
        else:
            raw = {}
        workers = args.workers
        if workers is None and os.environ.get("LZ_WORKERS"):
            try:
                workers = int(os.environ["LZ_WORKERS"])
            except ValueError:
                raise ConfigError(
                    f"LZ_WORKERS={os.environ['LZ_WORKERS']!r} is not an "
                    "integer") from None
        cfg = load_config(args.command, raw,
                          {"method": args.method, "workers": workers,
                           "seed": args.seed, "out": args.out})
        Path(cfg.out).mkdir(parents=True, exist_ok=True)
    except ConfigError as bad:
        print(f"lzsweep: config error: {bad}", file=sys.stderr)
        return 2
    try:
        return _RUNNERS[args.command](cfg)
    except ConfigError as bad:
        print(f"lzsweep: config error: {bad}", file=sys.stderr)
        return 2
    except _NUMERICAL_ERRORS as bad:
        diagnostic = {"schema": SCHEMA, "command": cfg.command,
                      "config": cfg.echo(), "error": type(bad).__name__,
                      "message": str(bad)}
        _write_json(Path(cfg.out) / "error.json", diagnostic)
        print(f"lzsweep: {type(bad).__name__}: {bad}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
