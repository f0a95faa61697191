"""Command line front end: sweeps, seeded simulations, stable tables.

Every subcommand reads an optional JSON config file, applies flag
overrides (flags win), runs the corresponding library operation over
the requested parameter grid, and writes one tidy table (CSV with a
`#`-prefixed provenance header, or JSON) whose rows are sorted
deterministically. Identical config and seed give byte-identical
output, independent of the worker count.

Physical inputs are accepted alongside dimensionless ones: any
quantity may be given either as `<name>_over_omega` or as `<name>_khz`
together with `omega_khz`, and only dimensionless columns are emitted.

Exit codes: 0 success, 1 config error, 2 numerical failure (flagged
rows are still written), 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .core import SystemParams
from .spectral import eigenvalues_closed_form, track_branches
from .epdetect import (
    EPTolerances,
    locate_ep2,
    locate_ep3,
    trace_exceptional_lines,
    ep_trajectory_vs_alpha,
)
from .dynamics import evolve_master, mc_trajectories, observable_series
from .expsim import (
    DECAY_CALIBRATION,
    DEPHASING_CALIBRATION,
    fit_exponential_decay,
    fit_dephasing_rabi,
    simulate_decay_survival,
    simulate_measurement,
    run_figure_pipeline,
)


class ConfigError(ValueError):
    """A config file or flag value the run cannot proceed with."""


class NumericalFailure(RuntimeError):
    """A computation failed outright (not a per-point flagged row)."""


# commands that draw random numbers and therefore need an explicit seed
STOCHASTIC = {"trajectories", "calibrate"}

GRID_CELL_CAP = 4_000_000


# ---------------------------------------------------------------------------
# config plumbing


def _load_config_file(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be a JSON object")
    return data


def _ratio_keys(*bases):
    out = set()
    for b in bases:
        out.add(f"{b}_over_omega")
        out.add(f"{b}_khz")
    return out


# accepted config keys per command; a typo'd key must fail loudly
# rather than silently fall back to defaults
ALLOWED_KEYS = {
    "spectrum": {"alpha", "n_gamma"}
        | _ratio_keys("delta", "gamma_min", "gamma_max"),
    "surface": {"plane", "nx", "ny", "x_min", "x_max", "y_min", "y_max",
                "alpha"} | _ratio_keys("delta"),
    "ep-locate": {"kind", "alphas"} | _ratio_keys("delta"),
    "ep-trace": {"alpha", "resolution"}
        | _ratio_keys("delta_min", "delta_max", "gamma_min", "gamma_max"),
    "ep-trajectory": {"kind", "alphas"} | _ratio_keys("delta"),
    "evolve": {"alpha", "t_max_omega", "n_times", "initial"}
        | _ratio_keys("delta", "gamma"),
    "trajectories": {"alpha", "t_max_omega", "n_times", "initial", "n_traj"}
        | _ratio_keys("delta", "gamma"),
    "expsim": {"alphas", "n_shots", "t_max_omega", "n_times"}
        | _ratio_keys("delta", "gammas"),
    "calibrate": {"n_reps", "decay_settings", "dephasing_settings",
                  "n_shots"},
}


def effective_config(args) -> dict:
    """Merge file config with flag overrides; flags win."""
    cfg = dict(_load_config_file(args.config)) if args.config else {}
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.workers is not None:
        cfg["workers"] = args.workers
    cmd = args.command if args.command != "ep" else f"ep-{args.mode}"
    allowed = ALLOWED_KEYS[cmd] | {"seed", "workers", "omega_khz"}
    unknown = sorted(set(cfg) - allowed)
    if unknown:
        raise ConfigError(
            f"unknown config keys for {cmd}: {', '.join(unknown)}")
    if cmd in STOCHASTIC or (cmd == "expsim"
                             and cfg.get("n_shots", 14000) is not None):
        if cfg.get("seed") is None:
            raise ConfigError(
                "seed: required for stochastic commands (no silent entropy)")
    cfg.setdefault("seed", 0)
    cfg.setdefault("workers", 1)
    if not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        raise ConfigError("seed: must be a nonnegative integer")
    if not isinstance(cfg["workers"], int) or cfg["workers"] < 1:
        raise ConfigError("workers: must be a positive integer")
    return cfg


def _num(cfg, key, default=None, lo=None, hi=None):
    val = cfg.get(key, default)
    if val is None:
        raise ConfigError(f"{key}: required")
    try:
        val = float(val)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a number, got {val!r}") from None
    if lo is not None and val < lo:
        raise ConfigError(f"{key}: must be >= {lo:g}, got {val:g}")
    if hi is not None and val > hi:
        raise ConfigError(f"{key}: must be <= {hi:g}, got {val:g}")
    return val


def _int(cfg, key, default=None, lo=None):
    val = cfg.get(key, default)
    if val is None:
        raise ConfigError(f"{key}: required")
    if not isinstance(val, (int, np.integer)) or isinstance(val, bool):
        raise ConfigError(f"{key}: expected an integer, got {val!r}")
    if lo is not None and val < lo:
        raise ConfigError(f"{key}: must be >= {lo}")
    return int(val)


def _ratio(cfg, base, default=None):
    """Dimensionless value: <base>_over_omega, or <base>_khz / omega_khz."""
    key_r = f"{base}_over_omega"
    key_k = f"{base}_khz"
    if key_r in cfg and key_k in cfg:
        raise ConfigError(f"{key_r}/{key_k}: give one, not both")
    if key_k in cfg:
        omega_khz = _num(cfg, "omega_khz", 40.0, lo=1e-12)
        return _num(cfg, key_k) / omega_khz
    return _num(cfg, key_r, default)


def _ratio_list(cfg, base, default):
    key_r = f"{base}_over_omega"
    key_k = f"{base}_khz"
    if key_k in cfg:
        omega_khz = _num(cfg, "omega_khz", 40.0, lo=1e-12)
        raw = cfg[key_k]
        scale = omega_khz
    else:
        raw = cfg.get(key_r, default)
        scale = 1.0
    if not isinstance(raw, (list, tuple)) or len(raw) == 0:
        raise ConfigError(f"{key_r}: expected a non-empty list")
    try:
        return [float(v) / scale for v in raw]
    except (TypeError, ValueError):
        raise ConfigError(f"{key_r}: expected numbers") from None


def _alpha_list(cfg, default):
    raw = cfg.get("alphas", default)
    if not isinstance(raw, (list, tuple)) or len(raw) == 0:
        raise ConfigError("alphas: expected a non-empty list")
    out = []
    for v in raw:
        v = float(v)
        if not (0.0 <= v <= 1.0):
            raise ConfigError(f"alphas: values must lie in [0, 1], got {v:g}")
        out.append(v)
    return out


def echo_config(cfg: dict) -> dict:
    """The config as echoed into output headers.

    The worker count steers execution only, never the data, so output
    files stay byte-identical across worker counts.
    """
    return {k: v for k, v in cfg.items() if k != "workers"}


def config_hash(cfg: dict) -> str:
    canon = json.dumps(echo_config(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _pmap(fn, items, workers):
    """Order-preserving map, threaded when workers > 1.

    Results depend only on the items, so the output is identical for
    any worker count; the executor just overlaps the numeric work.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# table container and writers


class Table:
    def __init__(self, name, columns, rows, comments=()):
        self.name = name
        self.columns = list(columns)
        self.rows = [list(r) for r in rows]
        self.comments = list(comments)


def _fmt_cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def _csv_text(table: Table, cfg: dict, command: str) -> str:
    buf = io.StringIO()
    buf.write(f"# liouvep {__version__}\n")
    buf.write(f"# command: {command}\n")
    buf.write(f"# config_hash: {config_hash(cfg)}\n")
    buf.write(f"# seed: {cfg.get('seed')}\n")
    canon = json.dumps(echo_config(cfg), sort_keys=True, separators=(",", ":"))
    buf.write(f"# config: {canon}\n")
    for line in table.comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_fmt_cell(v) for v in row])
    return buf.getvalue()


def _json_doc(tables, cfg: dict, command: str) -> str:
    doc = {
        "meta": {
            "tool": "liouvep",
            "version": __version__,
            "command": command,
            "config_hash": config_hash(cfg),
            "seed": cfg.get("seed"),
            "config": echo_config(cfg),
        },
        "tables": {},
    }

    def jsonable(v):
        if isinstance(v, bool):
            return v
        if isinstance(v, (int, np.integer)):
            return int(v)
        if isinstance(v, (float, np.floating)):
            v = float(v)
            if not np.isfinite(v):
                return None if np.isnan(v) else ("inf" if v > 0 else "-inf")
            # same 12-significant-digit discipline as the CSV writer
            return float(f"{v:.12g}")
        return v

    for t in tables:
        doc["tables"][t.name] = {
            "comments": t.comments,
            "columns": t.columns,
            "rows": [[jsonable(v) for v in row] for row in t.rows],
        }
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def write_output(tables, cfg, command, out, fmt):
    try:
        if fmt == "json":
            text = _json_doc(tables, cfg, command)
            if out in (None, "-"):
                sys.stdout.write(text)
            else:
                with open(out, "w", encoding="utf-8") as fh:
                    fh.write(text)
            return
        # CSV: first table at the requested path, any further table in
        # a sibling file named after it
        for k, t in enumerate(tables):
            text = _csv_text(t, cfg, command)
            if out in (None, "-"):
                sys.stdout.write(text)
                continue
            path = out
            if k > 0:
                stem, dot, ext = out.rpartition(".")
                path = (f"{stem}.{t.name}.{ext}" if dot
                        else f"{out}.{t.name}")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
    except OSError as exc:
        raise IOError(str(exc)) from exc


# ---------------------------------------------------------------------------
# subcommands


def cmd_spectrum(cfg):
    alpha = _num(cfg, "alpha", 0.0, lo=0.0, hi=1.0)
    delta = _ratio(cfg, "delta", 0.0)
    g_lo = _ratio(cfg, "gamma_min", 0.0)
    g_hi = _ratio(cfg, "gamma_max", 8.0)
    n_g = _int(cfg, "n_gamma", 161, lo=2)
    if not g_hi > g_lo:
        raise ConfigError("gamma_max: must exceed gamma_min")
    if g_lo < 0.0:
        raise ConfigError("gamma_min: must be nonnegative")
    gammas = np.linspace(g_lo, g_hi, n_g)
    params = [SystemParams(1.0, delta, float(g), alpha) for g in gammas]
    trk = track_branches(params)
    rows = []
    for k, g in enumerate(gammas):
        e = trk.energies[k, :3]
        rows.append([float(g), e[0].real, e[1].real, e[2].real,
                     e[0].imag, e[1].imag, e[2].imag])
    cols = ["gamma_over_omega", "re_E1", "re_E2", "re_E3",
            "im_E1", "im_E2", "im_E3"]
    return [Table("spectrum", cols, rows,
                  [f"alpha: {alpha:.12g}", f"delta_over_omega: {delta:.12g}"])], False


def cmd_surface(cfg, workers):
    plane = cfg.get("plane", "delta-gamma")
    if plane not in ("delta-gamma", "alpha-gamma"):
        raise ConfigError(f"plane: expected delta-gamma or alpha-gamma, got {plane!r}")
    nx = _int(cfg, "nx", 81, lo=2)
    ny = _int(cfg, "ny", 81, lo=2)
    if nx * ny > GRID_CELL_CAP:
        raise ConfigError(
            f"nx*ny: grid of {nx*ny} cells exceeds the cap of "
            f"{GRID_CELL_CAP}; reduce the resolution")
    x_lo = _num(cfg, "x_min", -1.0)
    x_hi = _num(cfg, "x_max", 1.0)
    y_lo = _num(cfg, "y_min", 2.0)
    y_hi = _num(cfg, "y_max", 6.0)
    if not (x_hi > x_lo and y_hi > y_lo):
        raise ConfigError("x_max/y_max: ranges must be non-empty")
    xs = np.linspace(x_lo, x_hi, nx)
    ys = np.linspace(y_lo, y_hi, ny)
    if plane == "delta-gamma":
        alpha = _num(cfg, "alpha", 0.0, lo=0.0, hi=1.0)

        def point(x, y):
            return SystemParams(1.0, float(x), float(y), alpha)
    else:
        delta = _ratio(cfg, "delta", 0.0)

        def point(x, y):
            return SystemParams(1.0, delta, float(y), float(x))

    def do_row(ix):
        out = []
        for iy, y in enumerate(ys):
            e = eigenvalues_closed_form(point(xs[ix], y)).values[:3]
            for br in (1, 2, 3):
                out.append([float(xs[ix]), float(y), br,
                            e[br - 1].real, e[br - 1].imag])
        return out

    chunks = _pmap(do_row, range(nx), workers)
    rows = [r for ch in chunks for r in ch]
    cols = ["x", "y", "branch", "re_E", "im_E"]
    label = ("x=delta_over_omega" if plane == "delta-gamma" else "x=alpha")
    return [Table("surface", cols, rows,
                  [f"plane: {plane} ({label}, y=gamma_over_omega)"])], False


EP_COLS = ["alpha", "delta_over_omega", "gamma_over_omega", "order",
           "re_Estar", "im_Estar", "diagnostics"]


def _ep_row(alpha, cand, status=""):
    if cand is None:
        return [alpha, float("nan"), float("nan"), 0,
                float("nan"), float("nan"), status]
    p = cand.params
    return [alpha, p.delta / p.omega, p.gamma / p.omega, cand.order,
            cand.e_star.real / p.omega, cand.e_star.imag / p.omega,
            status or "ok"]


def cmd_ep_locate(cfg, workers):
    kind = cfg.get("kind", "both")
    if kind not in ("ep2", "ep3", "both"):
        raise ConfigError(f"kind: expected ep2, ep3 or both, got {kind!r}")
    alphas = _alpha_list(cfg, [0.0, 0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9, 1.0])
    delta = _ratio(cfg, "delta", 0.0)
    tols = EPTolerances()
    kinds = ("ep2", "ep3") if kind == "both" else (kind,)

    def locate(task):
        knd, a = task
        try:
            if knd == "ep2":
                cand = locate_ep2(a, delta=delta, tols=tols)
            else:
                cand = locate_ep3(a, tols=tols)[1]
            return _ep_row(a, cand), False
        except ValueError as exc:
            return _ep_row(a, None, f"excluded: {exc}"), False
        except RuntimeError as exc:
            return _ep_row(a, None, f"failed: {exc}"), True

    results = _pmap(locate, [(k, a) for k in kinds for a in alphas], workers)
    rows = [r for r, _ in results]
    failed = any(f for _, f in results)
    return [Table("ep_locate", EP_COLS, rows)], failed


def cmd_ep_trace(cfg):
    alpha = _num(cfg, "alpha", 0.0, lo=0.0, hi=1.0)
    d_lo = _ratio(cfg, "delta_min", -1.0)
    d_hi = _ratio(cfg, "delta_max", 1.0)
    g_lo = _ratio(cfg, "gamma_min", 2.0)
    g_hi = _ratio(cfg, "gamma_max", 6.0)
    res = _int(cfg, "resolution", 200, lo=16)
    lines = trace_exceptional_lines(alpha, (d_lo, d_hi), (g_lo, g_hi),
                                    resolution=res)
    rows = []
    for li, line in enumerate(lines):
        m = len(line.points)
        for k in range(m):
            d, g = line.points[k]
            order = 2
            if (k == 0 and line.start_junction) or \
                    (k == m - 1 and line.end_junction):
                order = 3
            spec = eigenvalues_closed_form(SystemParams(1.0, d, g, alpha))
            tri = spec.values[:3]
            # E* of the coalescing pair: mean of the two closest values
            pairs = [(abs(tri[i] - tri[j]), i, j)
                     for i in range(3) for j in range(i + 1, 3)]
            _, i, j = min(pairs)
            e_star = 0.5 * (tri[i] + tri[j])
            tag = f"line={li}"
            if line.pair:
                tag += f";pair=E{line.pair[0]}-E{line.pair[1]}"
            rows.append([alpha, float(d), float(g), order,
                         e_star.real, e_star.imag, tag])
    comments = [f"lines: {len(lines)}"]
    if not lines:
        comments.append("no exceptional lines found in this window")
    return [Table("ep_trace", EP_COLS, rows, comments)], False


def cmd_ep_trajectory(cfg):
    kind = cfg.get("kind", "ep2")
    if kind not in ("ep2", "ep3"):
        raise ConfigError(f"kind: expected ep2 or ep3, got {kind!r}")
    alphas = _alpha_list(cfg, list(np.round(np.linspace(0.0, 1.0, 21), 12)))
    delta = _ratio(cfg, "delta", 0.0)
    records = ep_trajectory_vs_alpha(kind, alphas, delta=delta)
    rows = []
    failed = False
    for rec in records:
        if rec.status == "ok":
            rows.append(_ep_row(rec.alpha, rec.candidate))
        else:
            rows.append(_ep_row(rec.alpha, None,
                                f"{rec.status}: {rec.message}"))
            failed = failed or rec.status == "failed"
    return [Table("ep_trajectory", EP_COLS, rows)], failed


_INITIAL_STATES = {
    "ground": np.array([[0, 0], [0, 1]], dtype=complex),
    "excited": np.array([[1, 0], [0, 0]], dtype=complex),
    "plus_x": np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex),
}


def _dynamics_common(cfg):
    alpha = _num(cfg, "alpha", 0.0, lo=0.0, hi=1.0)
    delta = _ratio(cfg, "delta", 0.0)
    gamma = _ratio(cfg, "gamma", 2.0)
    if gamma < 0.0:
        raise ConfigError("gamma_over_omega: must be nonnegative")
    t_max = _num(cfg, "t_max_omega", 6.0, lo=1e-9)
    n_t = _int(cfg, "n_times", 161, lo=2)
    init = cfg.get("initial", "ground")
    if init not in _INITIAL_STATES:
        raise ConfigError(
            f"initial: expected one of {sorted(_INITIAL_STATES)}, got {init!r}")
    p = SystemParams(1.0, delta, gamma, alpha)
    times = np.linspace(0.0, t_max, n_t)
    return p, times, _INITIAL_STATES[init]


def cmd_evolve(cfg):
    p, times, rho0 = _dynamics_common(cfg)
    traj = evolve_master(p, rho0, times)
    sx = observable_series(traj, "sigma_x")[0]
    sy = observable_series(traj, "sigma_y")[0]
    sz = observable_series(traj, "sigma_z")[0]
    pop_e = observable_series(traj, "pop_e")[0]
    rows = [[float(times[k]), float(pop_e[k]), float(1.0 - pop_e[k]),
             float(sx[k]), float(sy[k]), float(sz[k])]
            for k in range(len(times))]
    cols = ["t_omega", "pop_e", "pop_g", "sx", "sy", "sz"]
    return [Table("evolve", cols, rows)], False


def cmd_trajectories(cfg):
    p, times, rho0 = _dynamics_common(cfg)
    n_traj = _int(cfg, "n_traj", 10000, lo=1)
    seed = cfg["seed"]
    mc = mc_trajectories(p, rho0, times, n_traj, master_seed=seed)
    master = evolve_master(p, rho0, times)
    pe_mc, pe_err = observable_series(mc, "pop_e")
    pe_ref = observable_series(master, "pop_e")[0]
    rows = [[float(times[k]), float(pe_mc[k]), float(pe_err[k]),
             float(pe_ref[k])] for k in range(len(times))]
    cols = ["t_omega", "pop_e_mc", "pop_e_stderr", "pop_e_master"]
    return [Table("trajectories", cols, rows,
                  [f"n_traj: {n_traj}"])], False


def cmd_expsim(cfg):
    alphas = _alpha_list(cfg, [0.0])
    gammas = _ratio_list(cfg, "gammas", [1.0, 2.0, 3.0, 4.0, 5.0])
    delta = _ratio(cfg, "delta", 0.0)
    n_shots = cfg.get("n_shots", 14000)
    if n_shots is not None:
        n_shots = _int(cfg, "n_shots", 14000, lo=1)
    t_max = _num(cfg, "t_max_omega", 6.0, lo=1e-9)
    n_t = _int(cfg, "n_times", 160, lo=16)
    panel = run_figure_pipeline(
        alphas=alphas, gammas=gammas, delta=delta, n_shots=n_shots,
        seed=cfg["seed"], t_max=t_max, n_times=n_t)
    pts = sorted(panel.points,
                 key=lambda q: (q.alpha, q.gamma, q.branch))
    point_rows = [[q.alpha, q.gamma, q.branch, q.energy.real, q.energy.imag,
                   q.stderr_re, q.stderr_im, q.amplitude, q.n_observables,
                   q.order_reduced, q.match_distance] for q in pts]
    point_cols = ["alpha", "gamma_over_omega", "branch", "re_E", "im_E",
                  "stderr_re", "stderr_im", "amplitude", "n_observables",
                  "order_reduced", "match_distance"]
    theory_rows = [[a, g, br, e.real, e.imag]
                   for (a, g, br, e) in sorted(
                       panel.theory, key=lambda r: (r[0], r[1], r[2]))]
    theory_cols = ["alpha", "gamma_over_omega", "branch", "re_E", "im_E"]
    mode = "noiseless" if n_shots is None else f"n_shots={n_shots}"
    return [Table("points", point_cols, point_rows, [mode]),
            Table("theory", theory_cols, theory_rows)], False


def cmd_calibrate(cfg):
    """Simulated rate calibration: set a rate, measure it back, fit."""
    rng = np.random.default_rng(cfg["seed"])
    n_reps = _int(cfg, "n_reps", 400, lo=2)
    rows = []
    failed = False

    decay_settings = cfg.get("decay_settings", [1.0, 2.0, 3.86, 6.0, 9.0])
    for s in decay_settings:
        rate = DECAY_CALIBRATION(float(s))
        if rate <= 0.0:
            rows.append(["decay", float(s), rate, float("nan"), float("nan"),
                         0, False, float("nan")])
            continue
        times = np.linspace(0.0, 3.0 / rate, 24)
        surv = simulate_decay_survival(rate, times, n_reps, rng)
        fit = fit_exponential_decay(times, surv)
        rows.append(["decay", float(s), rate, fit.value, fit.stderr,
                     fit.n_used, fit.converged, fit.chisq_reduced])
        failed = failed or not fit.converged

    deph_settings = cfg.get("dephasing_settings", [1.0, 2.0, 3.5, 5.0, 7.0])
    omega = 2.0 * np.pi * _num(cfg, "omega_khz", 40.0, lo=1e-12)
    n_shots = _int(cfg, "n_shots", 2000, lo=1)
    for s in deph_settings:
        rate = DEPHASING_CALIBRATION(float(s))
        if rate <= 0.0:
            rows.append(["dephasing", float(s), rate, float("nan"),
                         float("nan"), 0, False, float("nan")])
            continue
        # drive a Rabi flop with pure dephasing at the engineered rate
        # and fit the decaying oscillation of the excited population
        p = SystemParams(omega, 0.0, 2.0 * np.pi * rate, 0.0)
        times = np.linspace(0.0, 16.0 * np.pi / omega, 48)
        traj = evolve_master(p, _INITIAL_STATES["ground"], times)
        meas = np.array([
            simulate_measurement(traj.rhos[k], "z", n_shots, rng).p_hat
            for k in range(len(times))])
        errs = np.sqrt(np.maximum(meas * (1 - meas), 0.25 / n_shots) / n_shots)
        fit = fit_dephasing_rabi(times, meas, errors=errs, omega=omega)
        rows.append(["dephasing", float(s), rate,
                     fit.value / (2.0 * np.pi), fit.stderr / (2.0 * np.pi),
                     fit.n_used, fit.converged, fit.chisq_reduced])
        failed = failed or not fit.converged
    cols = ["kind", "setting", "rate_set_khz", "rate_fit_khz",
            "stderr_khz", "n_used", "converged", "chisq_reduced"]
    return [Table("calibrate", cols, rows,
                  ["rates in 2pi kHz; settings in uW (decay) / Vpp (dephasing)"])], failed


# ---------------------------------------------------------------------------
# argument parsing and dispatch


class _Parser(argparse.ArgumentParser):
    """argparse maps usage errors to exit 2; the contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _add_common(sp):
    sp.add_argument("--config", help="JSON config file")
    sp.add_argument("--out", help="output path (default stdout)")
    sp.add_argument("--seed", type=int, help="RNG seed (overrides config)")
    sp.add_argument("--workers", type=int,
                    help="worker threads for sweeps (overrides config)")
    sp.add_argument("--format", choices=("csv", "json"), default="csv",
                    help="output format")


def build_parser():
    parser = _Parser(prog="liouvep",
                     description="Spectra, exceptional points, dynamics and "
                                 "simulated spectroscopy of a driven "
                                 "dissipative two-level system.")
    parser.add_argument("--version", action="version",
                        version=f"liouvep {__version__}")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)
    for name, help_text in (
            ("spectrum", "eigenvalue branches along a damping sweep"),
            ("surface", "eigenvalue sheets over a 2-D parameter grid"),
            ("evolve", "master-equation time evolution"),
            ("trajectories", "quantum-jump ensemble vs master equation"),
            ("expsim", "simulated spectroscopy of a spectral panel"),
            ("calibrate", "simulated rate-calibration fits"),
    ):
        sp = sub.add_parser(name, help=help_text)
        _add_common(sp)
    ep = sub.add_parser("ep", help="exceptional-point tools")
    ep.add_argument("mode", choices=("locate", "trace", "trajectory"),
                    help="locate EPs per alpha, trace exceptional lines, "
                         "or continue an EP across alpha")
    _add_common(ep)
    return parser


def run_command(args, cfg):
    if args.command == "spectrum":
        return "spectrum", *cmd_spectrum(cfg)
    if args.command == "surface":
        return "surface", *cmd_surface(cfg, cfg["workers"])
    if args.command == "ep":
        if args.mode == "locate":
            return "ep locate", *cmd_ep_locate(cfg, cfg["workers"])
        if args.mode == "trace":
            return "ep trace", *cmd_ep_trace(cfg)
        return "ep trajectory", *cmd_ep_trajectory(cfg)
    if args.command == "evolve":
        return "evolve", *cmd_evolve(cfg)
    if args.command == "trajectories":
        return "trajectories", *cmd_trajectories(cfg)
    if args.command == "expsim":
        return "expsim", *cmd_expsim(cfg)
    if args.command == "calibrate":
        return "calibrate", *cmd_calibrate(cfg)
    raise ConfigError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = effective_config(args)
        command, tables, flagged = run_command(args, cfg)
        write_output(tables, cfg, command, args.out, args.format)
        return 2 if flagged else 0
    except ConfigError as exc:
        print(f"liouvep: config error: {exc}", file=sys.stderr)
        return 1
    except IOError as exc:
        print(f"liouvep: i/o error: {exc}", file=sys.stderr)
        return 3
    except (NumericalFailure, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"liouvep: numerical failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # invalid parameter domains surface as ValueError from the library
        print(f"liouvep: config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
