"""Config-driven experiments: run a scenario, write CSV samples and a JSON report.

A results directory holds ``samples.csv`` and ``report.json``.  Both are
byte-identical for a given (config, seed, version) whatever the worker count.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
import numpy as np

from . import __version__
from .cocycle import llt_check, make_cocycle
from .dynamics import (TTSystem, ball_pair_data, first_returns, point_process_with_ball, rate_from_times,
                       recurrence_target, z_extension_process)
from .limit import ZParams, sample_first_return_limit
from .moments import (MCParams, MomentSpec, formula_samples, poisson_limit_moment, sample_Z_counts,
                      summarize_formula)
from .parallel import default_workers, run_trials, trial_rng
from .stats import ComparisonRow, jackknife, ks_distance, moment_compare
from .symbolic import (ONE_SIDED, TWO_SIDED, ShiftError, dimension, full_shift, load_shift, on_cylinder_boundary,
                       sample_path, shift_from_dict)

SCENARIOS = ("recurrence-rate", "first-return", "point-process", "z-extension", "llt", "limit-moments",
             "corollary-case")
COMMON_KEYS = {"scenario", "seed", "workers", "tolerances", "description"}
SCENARIO_KEYS = {
    "recurrence-rate": ({"system", "radii", "trials"}, {"cap_factor"}),
    "first-return": ({"system", "radii", "trials"}, {"cap_factor", "reference_samples", "require_decreasing"}),
    "point-process": ({"system", "radius", "trials"}, {"T", "mode", "base", "limit"}),
    "z-extension": ({"system", "radius", "trials"}, {"T", "mode", "base"}),
    "llt": ({"system", "A_word", "B_word", "ns"}, {"k"}),
    "limit-moments": ({"params", "specs"}, {"sigma", "paths", "samples", "steps", "dx", "blocks"}),
    "corollary-case": ({"L", "d", "radii"}, {"lyapunov", "trials"}),
}
DEFAULT_TOLERANCES = {
    "recurrence-rate": {"slope_rel": 0.15},
    "first-return": {"ks": 0.05},
    "point-process": {"mean_rel": 0.10, "var_rel": 0.15, "se_mult": 3.0},
    "z-extension": {"se_mult": 3.0},
    "llt": {"raw_rel": 0.02, "growth": 0.10, "bound": 1.0},
    "limit-moments": {"se_mult": 3.0},
    "corollary-case": {"abs": 1e-12},
}
CSV_COLUMNS = ("trial", "r", "raw_count", "tau", "alpha_r", "beta_r", "n_r")
CENSORED = "CENSORED"


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


@dataclass
class ExperimentConfig:
    raw: dict
    base_dir: Path
    sha256: str

    @property
    def scenario(self) -> str:
        return self.raw["scenario"]

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def workers(self) -> int:
        return int(self.raw.get("workers", default_workers()))

    def tolerance(self, key: str) -> float:
        tol = dict(DEFAULT_TOLERANCES.get(self.scenario, {}))
        tol.update(self.raw.get("tolerances", {}))
        return float(tol[key])


@dataclass
class ComparisonReport:
    scenario: str
    rows: list[ComparisonRow]
    provenance: dict
    summary: dict = field(default_factory=dict)
    status: str = ""

    def __post_init__(self):
        if not self.status:
            failed = any(r.hard and r.verdict != "PASS" for r in self.rows)
            self.status = "FAIL" if failed else "PASS"

    @property
    def ok(self) -> bool:
        return self.status == "PASS"

    def as_dict(self) -> dict:
        return {"scenario": self.scenario, "status": self.status, "rows": [r.as_dict() for r in self.rows],
                "summary": self.summary, "provenance": self.provenance}


# ---------------------------------------------------------------------------
# config loading
# ---------------------------------------------------------------------------

def _resolve_shift(ref, base_dir: Path, name: str):
    if isinstance(ref, str):
        path = Path(ref)
        if not path.is_absolute():
            path = base_dir / path
        if not path.exists():
            raise ConfigError([f"{name}: shift file {ref!r} not found"])
        return load_shift(path)
    if isinstance(ref, dict):
        return shift_from_dict(ref, name=name)
    raise ConfigError([f"{name}: expected a shift file path or an inline shift definition"])


def _radii(raw, lyapunov: float) -> list[float]:
    """Radii given as numbers or as ``{"generations": [m, ...]}`` (r = exp(-lambda m))."""
    if isinstance(raw, dict):
        return [math.exp(-lyapunov * m) for m in raw["generations"]]
    return [float(r) for r in raw]


def _radius(raw, lyapunov: float) -> float:
    if isinstance(raw, dict):
        return math.exp(-lyapunov * raw["generation"])
    return float(raw)


def parse_config(raw: dict, base_dir: Path | str = ".", text: bytes | None = None) -> ExperimentConfig:
    problems = validate_config(raw, Path(base_dir))
    if problems:
        raise ConfigError(problems)
    if text is None:
        text = json.dumps(raw, sort_keys=True).encode()
    return ExperimentConfig(raw, Path(base_dir), hashlib.sha256(text).hexdigest())


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    text = path.read_bytes()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"invalid JSON: {exc}"]) from None
    if not isinstance(raw, dict):
        raise ConfigError(["config must be a JSON object"])
    return parse_config(raw, path.parent, text)


def validate_config(raw: dict, base_dir: Path) -> list[str]:
    """Schema problems of a config (empty list when valid)."""
    problems = []
    scenario = raw.get("scenario")
    if scenario not in SCENARIOS:
        return [f"scenario: must be one of {list(SCENARIOS)}, got {scenario!r}"]
    if "seed" not in raw:
        problems.append("seed: missing (mandatory)")
    elif not isinstance(raw["seed"], int) or raw["seed"] < 0:
        problems.append("seed: must be a nonnegative integer")
    required, optional = SCENARIO_KEYS[scenario]
    for key in sorted(required - set(raw)):
        problems.append(f"{key}: missing")
    for key in sorted(set(raw) - required - optional - COMMON_KEYS):
        problems.append(f"{key}: unknown key for scenario {scenario}")
    if "trials" in raw and (not isinstance(raw["trials"], int) or raw["trials"] < 1):
        problems.append("trials: must be a positive integer")
    if "workers" in raw and (not isinstance(raw["workers"], int) or raw["workers"] < 1):
        problems.append("workers: must be a positive integer")
    unknown_tol = set(raw.get("tolerances", {})) - set(DEFAULT_TOLERANCES[scenario])
    for key in sorted(unknown_tol):
        problems.append(f"tolerances.{key}: unknown tolerance")
    if problems:
        return problems
    try:
        if "system" in raw:
            system = _build_system(raw["system"], base_dir, needs_y=scenario in (
                "recurrence-rate", "first-return", "point-process"))
            if "radii" in raw or "radius" in raw:
                lam = system["x"].lyapunov
                radii = _radii(raw["radii"], lam) if "radii" in raw else [_radius(raw["radius"], lam)]
                problems += _check_radii(radii, system, scenario)
        if scenario == "llt":
            ns = raw["ns"]
            if not ns or any(not isinstance(n, int) or n < 1 for n in ns):
                problems.append("ns: must be a nonempty list of positive integers")
        if scenario == "limit-moments":
            for i, p in enumerate(raw["params"]):
                try:
                    ZParams(float(p[0]), float(p[1]), float(raw.get("sigma", 1.0)))
                except (ValueError, TypeError, IndexError) as exc:
                    problems.append(f"params[{i}]: {exc}")
            for i, s in enumerate(raw["specs"]):
                try:
                    MomentSpec(s["times"], s["exponents"])
                except (ValueError, TypeError, KeyError) as exc:
                    problems.append(f"specs[{i}]: {exc}")
        if scenario == "corollary-case":
            if not (isinstance(raw["L"], int) and raw["L"] >= 2 and raw["d"] in (1, 2)):
                problems.append("L, d: need integer L >= 2 and d in {1, 2}")
    except ConfigError as exc:
        problems += exc.problems
    except (ShiftError, ValueError, KeyError, TypeError) as exc:
        problems.append(f"system: {exc}")
    return problems


def _check_radii(radii, system, scenario) -> list[str]:
    out = []
    if scenario == "recurrence-rate" and len(radii) < 4:
        out.append("radii: need at least 4 radii")
    for r in radii:
        if not 0 < r < 1:
            out.append(f"radii: {r} is not in (0, 1)")
            continue
        for key in ("x", "y"):
            if system.get(key) is not None and not on_cylinder_boundary(r, system[key].lyapunov):
                out.append(f"radii: {r} is not a cylinder boundary exp(-lambda m) for the {key} shift")
    return out


def _build_system(spec: dict, base_dir: Path, needs_y: bool) -> dict:
    problems = []
    for key in ("x", "cocycle") + (("y",) if needs_y else ()):
        if key not in spec:
            problems.append(f"system.{key}: missing")
    unknown = set(spec) - {"x", "y", "cocycle", "allow_arithmetic"}
    problems += [f"system.{k}: unknown key" for k in sorted(unknown)]
    if problems:
        raise ConfigError(problems)
    x = _resolve_shift(spec["x"], base_dir, "system.x")
    y = _resolve_shift(spec["y"], base_dir, "system.y") if "y" in spec else None
    c = make_cocycle(x, spec["cocycle"])
    if c.arithmetic and not spec.get("allow_arithmetic", False):
        raise ConfigError([f"system.cocycle: arithmetic cocycle (lattice span {c.lattice_span})"])
    return {"x": x, "y": y, "cocycle": c}


def _system(config: ExperimentConfig) -> TTSystem:
    s = _build_system(config.raw["system"], config.base_dir, needs_y=False)
    return TTSystem(s["x"], s["y"], s["cocycle"])


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------

def _first_return_trial(rng, system, radii, cap_factor):
    out = []
    for fr, ball in first_returns(system, radii, rng, cap_factor):
        out.append((fr.time, fr.cap, ball.mu_ball, ball.nu_ball, ball.alpha_r, ball.beta_r, ball.n_r))
    return out


def _first_return_rows(results, radii):
    rows = []
    for t, trial in enumerate(results):
        for r, (tau, cap, mu, nu, a, b, n_r) in zip(radii, trial):
            rows.append((t, r, 0 if tau is None else 1, CENSORED if tau is None else tau, a, b, n_r))
    return rows


def _run_recurrence(config: ExperimentConfig):
    system = _system(config)
    radii = sorted(_radii(config.raw["radii"], system.x_shift.lyapunov), reverse=True)
    cap_factor = float(config.raw.get("cap_factor", 1000.0))
    results = run_trials(_first_return_trial, config.raw["trials"], config.seed, config.workers,
                         system=system, radii=radii, cap_factor=cap_factor)
    tau = np.array([[np.nan if row[0] is None else row[0] for row in trial] for trial in results], dtype=float)
    est = rate_from_times(tau, radii)
    target = recurrence_target(system)
    rows = [ComparisonRow("recurrence slope", est.slope, target, est.stderr, config.tolerance("slope_rel"), "rel",
                          "R = min(2 d_mu, d_mu + d_nu)")]
    for r, c in zip(radii, est.censored):
        rows.append(ComparisonRow(f"censored fraction r={r:.6g}", c / len(tau), 0.0, None, 0.05, "max",
                                  "censoring diagnostic", hard=False))
    summary = {"slopes_used": len(est.slopes), "used_radii": est.used_radii,
               "d_mu": dimension(system.x_shift), "d_nu": dimension(system.y_shift)}
    return rows, _first_return_rows(results, radii), summary


def _run_first_return(config: ExperimentConfig):
    system = _system(config)
    radii = sorted(_radii(config.raw["radii"], system.x_shift.lyapunov), reverse=True)
    cap_factor = float(config.raw.get("cap_factor", 1000.0))
    results = run_trials(_first_return_trial, config.raw["trials"], config.seed, config.workers,
                         system=system, radii=radii, cap_factor=cap_factor)
    ref_n = int(config.raw.get("reference_samples", 10**6))
    # independent stream for the reference sample
    ref = sample_first_return_limit(math.sqrt(system.cocycle.sigma2),
                                    trial_rng(config.seed, 2**32 + 1), ref_n)
    rows, ks_values = [], []
    summary = {"reference_samples": ref_n}
    for j, r in enumerate(radii):
        scaled, caps = [], []
        for trial in results:
            tau, cap, mu = trial[j][0], trial[j][1], trial[j][2]
            caps.append(cap * mu * mu)
            scaled.append(math.inf if tau is None else tau * mu * mu)
        c_star = min(caps)
        emp = np.minimum(np.array(scaled), c_star)
        ks = ks_distance(emp, np.minimum(ref, c_star))
        ks_values.append(ks)
        censored = float(np.mean(np.array(scaled) >= c_star))
        rows.append(ComparisonRow(f"KS mu^2 tau vs sigma^2 E^2/N^2, r={r:.6g}", ks, 0.0, None,
                                  config.tolerance("ks"), "max", "mu(B_r)^2 tau_r -> sigma^2 E^2 / N^2", ks=ks))
        summary[f"r={r:.6g}"] = {"censored_fraction": censored, "common_cap": c_star,
                                 "median_scaled": float(np.median(emp))}
    if config.raw.get("require_decreasing", True) and len(radii) > 1:
        dec = all(b <= a for a, b in zip(ks_values, ks_values[1:]))
        rows.append(ComparisonRow("KS decreasing as r decreases", float(dec), 1.0, None, 0.0, "true",
                                  "convergence as r -> 0"))
    return rows, _first_return_rows(results, radii), summary


def _limit_of(config: ExperimentConfig, system: TTSystem, alpha_r, beta_r) -> ZParams | None:
    if "limit" in config.raw:
        a, b = config.raw["limit"]
        return ZParams(float(a), float(b), math.sqrt(system.cocycle.sigma2))
    d_mu, d_nu = dimension(system.x_shift), dimension(system.y_shift)
    sigma = math.sqrt(system.cocycle.sigma2)
    if d_mu > d_nu + 1e-12:
        return ZParams(0.0, 1.0, sigma)
    if d_mu < d_nu - 1e-12:
        return ZParams(1.0, 0.0, sigma)
    if len(set(alpha_r)) == 1 and len(set(beta_r)) == 1:
        return ZParams(alpha_r[0], beta_r[0], sigma)
    return None


def _limit_mean_var(params: ZParams, T: float, seed: int):
    """Mean and variance of Z(T) with standard errors (exact for the standard Poisson case)."""
    if params.standard_poisson:
        return T, 0.0, T, 0.0
    spec1 = MomentSpec((T,), (1,))
    spec2 = MomentSpec((T,), (2,))
    rng = trial_rng(seed, 2**32 + 2)
    mc = MCParams(paths=20000, steps=256)
    m1 = summarize_formula(*formula_samples(params, spec1, mc, rng))
    m2 = summarize_formula(*formula_samples(params, spec2, mc, rng))
    return m1.value, m1.stderr, m2.value - m1.value**2, math.hypot(m2.stderr, 2 * m1.value * m1.stderr)


def _counts_rows(config, counts, limit: ZParams | None, T: float):
    rows = []
    counts = np.asarray(counts, dtype=float)
    mean, mean_se = jackknife(counts, np.mean)
    var, var_se = jackknife(counts, lambda c: np.var(c, ddof=1))
    if limit is None:
        return rows, {"mean": mean, "variance": var}
    tm, tm_se, tv, tv_se = _limit_mean_var(limit, 1.0, config.seed)
    label = f"Z_({limit.alpha:g},{limit.beta:g})"
    if limit.standard_poisson:
        rows.append(ComparisonRow("mean count on (0,1]", mean, tm, mean_se, config.tolerance("mean_rel"), "rel",
                                  f"{label}: standard Poisson mean"))
        rows.append(ComparisonRow("variance of count on (0,1]", var, tv, var_se, config.tolerance("var_rel"),
                                  "rel", f"{label}: standard Poisson variance"))
    else:
        k = config.tolerance("se_mult")
        rows.append(ComparisonRow("mean count on (0,1]", mean, tm, math.hypot(mean_se, tm_se), k, "se",
                                  f"{label}: sqrt(alpha) E L_1(0) + beta"))
        rows.append(ComparisonRow("variance of count on (0,1]", var, tv, math.hypot(var_se, tv_se), k, "se",
                                  f"{label}: second moment formula"))
    return rows, {"mean": mean, "variance": var}


def _pp_record(rng, system, r, T, base, z_only):
    if z_only:
        series = z_extension_process(system.x_shift, system.cocycle, r, T, rng, None if base is None else base[0])
        a, b = 1.0, 0.0
    else:
        series, ball = point_process_with_ball(system, r, T, rng, base)
        a, b = ball.alpha_r, ball.beta_r
    first = None if series.raw_count == 0 else int(round(series.times[0] * series.normalization))
    return (series.count(0.0, 1.0), series.raw_count, first, a, b, series.normalization)


def _base(config: ExperimentConfig):
    if config.raw.get("mode", "annealed") == "annealed":
        return None
    base = config.raw.get("base")
    if not base:
        raise ConfigError(["base: conditional mode needs base words {\"x\": [...], \"y\": [...]}"])
    return (base["x"], base.get("y"))


def _process_rows(results, r):
    return [(t, r, rec[1], CENSORED if rec[2] is None else rec[2], rec[3], rec[4], rec[5])
            for t, rec in enumerate(results)]


def _run_point_process(config: ExperimentConfig):
    system = _system(config)
    r = _radius(config.raw["radius"], system.x_shift.lyapunov)
    T = float(config.raw.get("T", 1.0))
    results = run_trials(_pp_record, config.raw["trials"], config.seed, config.workers,
                         system=system, r=r, T=T, base=_base(config), z_only=False)
    alphas = sorted({rec[3] for rec in results})
    betas = sorted({rec[4] for rec in results})
    limit = _limit_of(config, system, alphas, betas)
    rows, summary = _counts_rows(config, [rec[0] for rec in results], limit, T)
    summary.update(alpha_r_values=alphas[:10], beta_r_values=betas[:10])
    return rows, _process_rows(results, r), summary


def _run_z_extension(config: ExperimentConfig):
    system = _system(config)
    r = _radius(config.raw["radius"], system.x_shift.lyapunov)
    T = float(config.raw.get("T", 1.0))
    results = run_trials(_pp_record, config.raw["trials"], config.seed, config.workers,
                         system=TTSystem(system.x_shift, None, system.cocycle), r=r, T=T,
                         base=_base(config), z_only=True)
    counts = np.array([rec[0] for rec in results], dtype=float)
    mean, se = jackknife(counts, np.mean)
    sigma = math.sqrt(system.cocycle.sigma2)
    target = math.sqrt(2 / math.pi) / sigma
    rows = [ComparisonRow("mean count on (0,1]", mean, target, se, config.tolerance("se_mult"), "se",
                          "Z_(1,0): E L_1(0) = sqrt(2/pi)/sigma")]
    return rows, _process_rows(results, r), {"mean": mean, "variance": float(np.var(counts, ddof=1))}


def _run_llt(config: ExperimentConfig):
    s = _build_system(config.raw["system"], config.base_dir, needs_y=False)
    shift, c = s["x"], s["cocycle"]
    A, B = config.raw["A_word"], config.raw["B_word"]
    k = int(config.raw.get("k", 0))
    ns = sorted(config.raw["ns"])
    results = [llt_check(shift, c, A, B, n, k) for n in ns]
    errs = [res.normalized_error for res in results]
    rows = []
    rows.append(ComparisonRow("max normalized error", max(errs), 0.0, None, config.tolerance("bound"), "max",
                              "error * n / (mu(A) mu(B) m) bounded"))
    growth = max(errs[1:], default=errs[0]) / errs[0] - 1 if errs[0] > 0 else 0.0
    rows.append(ComparisonRow("normalized error growth over n", growth, 0.0, None, config.tolerance("growth"),
                              "max", "no growth in n"))
    last = results[-1]
    rel = abs(last.exact_prob - last.gaussian_prediction) / last.gaussian_prediction
    rows.append(ComparisonRow(f"relative error at n={ns[-1]}", rel, 0.0, None, config.tolerance("raw_rel"), "max",
                              "Gaussian local limit"))
    csv_rows = [(i, n, k, res.exact_prob, res.gaussian_prediction, res.normalized_error)
                for i, (n, res) in enumerate(zip(ns, results))]
    summary = {"sigma2": c.sigma2, "lattice_span": c.lattice_span,
               "by_n": {str(n): {"exact": res.exact_prob, "prediction": res.gaussian_prediction,
                                 "normalized_error": res.normalized_error} for n, res in zip(ns, results)}}
    return rows, csv_rows, summary


def _formula_block(rng, params, spec, paths, steps, dx):
    q0s, contrib = formula_samples(params, spec, MCParams(paths=paths, steps=steps, dx=dx), rng)
    return q0s, contrib


def _z_counts_block(rng, params, times, n, steps):
    return sample_Z_counts(params, times, n, rng, steps)


def _run_limit_moments(config: ExperimentConfig):
    raw = config.raw
    sigma = float(raw.get("sigma", 1.0))
    paths = int(raw.get("paths", 20000))
    samples = int(raw.get("samples", 100000))
    steps = int(raw.get("steps", 256))
    blocks = int(raw.get("blocks", 20))
    dx = raw.get("dx")
    specs = [MomentSpec(s["times"], s["exponents"]) for s in raw["specs"]]
    all_times = sorted({t for s in specs for t in s.times})
    grid = np.concatenate([[0.0], all_times])
    rows, csv_rows, summary = [], [], {}
    k = config.tolerance("se_mult")
    for pi, (a, b) in enumerate(raw["params"]):
        params = ZParams(float(a), float(b), sigma)
        # direct simulation: one shared Z ensemble on the union of all times
        per_block = -(-samples // blocks)
        chunks = run_trials(_z_counts_block, blocks, config.seed + 7919 * (2 * pi + 1), config.workers,
                            params=params, times=all_times, n=per_block, steps=steps)
        fine = np.concatenate(chunks)[:samples]
        cum = np.concatenate([np.zeros((len(fine), 1), dtype=np.int64), np.cumsum(fine, axis=1)], axis=1)
        for i, row in enumerate(fine):
            csv_rows.append((pi, i, float(a), float(b)) + tuple(int(v) for v in row))
        for si, spec in enumerate(specs):
            idx = np.searchsorted(grid, spec.grid)
            counts = np.diff(cum[:, idx], axis=1)
            label = f"(alpha,beta)=({a:g},{b:g}) times={list(spec.times)} exps={list(spec.exponents)}"
            if params.standard_poisson:
                exact = poisson_limit_moment(spec)
                row = moment_compare(counts, spec.exponents, exact, 0.0, "moment " + label, k,
                                     "Z_(0,1): independent Poisson increments (exact)")
                summary[label] = {"formula": exact, "formula_se": 0.0, "exact": True, "mc": row.empirical,
                                  "mc_se": row.stderr}
            else:
                parts = run_trials(_formula_block, blocks, config.seed + 7919 * (2 * pi + 2) + 104729 * si,
                                   config.workers, params=params, spec=spec, paths=-(-paths // blocks),
                                   steps=steps, dx=dx)
                q0s = parts[0][0]
                contrib = np.concatenate([p[1] for p in parts])
                res = summarize_formula(q0s, contrib)
                row = moment_compare(counts, spec.exponents, res.value, res.stderr, "moment " + label, k,
                                     "sum over q0 of alpha^((q-q0)/2) beta^q0 H(Z')")
                summary[label] = {"formula": res.value, "formula_se": res.stderr, "exact": False,
                                  "mc": row.empirical, "mc_se": math.sqrt(max(row.stderr**2 - res.stderr**2, 0)),
                                  "terms": {str(q0): list(v) for q0, v in res.terms.items()}}
            rows.append(row)
    return rows, csv_rows, summary


def _corollary_trial(rng, L, d, lyapunov, radii):
    xs = full_shift(L**d, lyapunov)
    ys = full_shift(L, lyapunov, sided=TWO_SIDED if d == 2 else ONE_SIDED)
    system = TTSystem(xs, ys, make_cocycle(xs, [0] * (L**d)))
    out = []
    for r in radii:
        mx, my = system.generations(r)
        xw = sample_path(xs, mx + 1, rng)
        yw = sample_path(ys, ys.word_length(my), rng)
        ball = ball_pair_data(system, r, xw, yw)
        out.append((ball.alpha_r, ball.beta_r, ball.n_r))
    return out


def _run_corollary(config: ExperimentConfig):
    raw = config.raw
    L, d = int(raw["L"]), int(raw["d"])
    lyapunov = float(raw.get("lyapunov", math.log(2)))
    radii = _radii(raw["radii"], lyapunov)
    bad = [r for r in radii if not on_cylinder_boundary(r, lyapunov)]
    if bad:
        raise ConfigError([f"radii: {bad} are not cylinder boundaries"])
    trials = int(raw.get("trials", 10))
    results = run_trials(_corollary_trial, trials, config.seed, config.workers,
                         L=L, d=d, lyapunov=lyapunov, radii=radii)
    expected = (float(L) ** (1 - d), 1.0)
    tol = config.tolerance("abs")
    rows, csv_rows = [], []
    for j, r in enumerate(radii):
        alphas = [res[j][0] for res in results]
        betas = [res[j][1] for res in results]
        worst_a = max(abs(a - expected[0]) for a in alphas)
        worst_b = max(abs(b - expected[1]) for b in betas)
        rows.append(ComparisonRow(f"alpha_r at r={r:.6g}", expected[0] + worst_a, expected[0], None, tol, "abs",
                                  "full shifts: (alpha, beta) = (L^(1-d), 1)"))
        rows.append(ComparisonRow(f"beta_r at r={r:.6g}", expected[1] + worst_b, expected[1], None, tol, "abs",
                                  "full shifts: (alpha, beta) = (L^(1-d), 1)"))
    for t, res in enumerate(results):
        for r, (a, b, n_r) in zip(radii, res):
            csv_rows.append((t, r, "", "", a, b, n_r))
    return rows, csv_rows, {"expected": list(expected)}


RUNNERS = {
    "recurrence-rate": _run_recurrence,
    "first-return": _run_first_return,
    "point-process": _run_point_process,
    "z-extension": _run_z_extension,
    "llt": _run_llt,
    "limit-moments": _run_limit_moments,
    "corollary-case": _run_corollary,
}


def csv_columns(config: ExperimentConfig) -> tuple:
    if config.scenario == "llt":
        return ("row", "n", "k", "exact_prob", "gaussian_prediction", "normalized_error")
    if config.scenario == "limit-moments":
        times = sorted({float(t) for s in config.raw["specs"] for t in s["times"]})
        # count_i is the number of events in (t_{i-1}, t_i] over the union of all spec times
        return ("param_index", "sample", "alpha", "beta") + tuple(f"count_{i + 1}" for i in range(len(times)))
    return CSV_COLUMNS


# ---------------------------------------------------------------------------
# running and writing
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def render_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def render_report(report: ComparisonReport) -> str:
    return json.dumps(report.as_dict(), indent=2, sort_keys=True, default=_json_default, allow_nan=True) + "\n"


def run(config: ExperimentConfig, outdir=None, workers: int | None = None) -> ComparisonReport:
    """Run the scenario; write ``samples.csv`` and ``report.json`` into ``outdir`` if given."""
    if workers is not None:
        config.raw = dict(config.raw, workers=workers)
    provenance = {"config_sha256": config.sha256, "seed": config.seed, "version": __version__}
    csv_rows: list = []
    try:
        rows, csv_rows, summary = RUNNERS[config.scenario](config)
        report = ComparisonReport(config.scenario, rows, provenance, summary)
    except MemoryError as exc:
        report = ComparisonReport(config.scenario, [], provenance, {"error": str(exc)}, status="INCOMPLETE")
    if outdir is not None:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "samples.csv").write_text(render_csv(csv_columns(config), csv_rows))
        (out / "report.json").write_text(render_report(report))
    return report


def load_report(results_dir) -> dict:
    return json.loads((Path(results_dir) / "report.json").read_text())


def format_report(data: dict) -> str:
    lines = [f"scenario: {data['scenario']}   status: {data['status']}",
             f"config sha256: {data['provenance']['config_sha256'][:16]}...   seed: {data['provenance']['seed']}"
             f"   version: {data['provenance']['version']}"]
    for row in data["rows"]:
        theo = "" if row["theoretical"] is None else f"{row['theoretical']:.6g}"
        se = "" if row["stderr"] is None else f" +- {row['stderr']:.3g}"
        tag = "" if row["hard"] else " (info)"
        lines.append(f"  [{row['verdict']}]{tag} {row['name']}: {row['empirical']:.6g}{se} vs {theo}"
                     f" ({row['rule']} tol {row['tolerance']:g}; {row['target']})")
    return "\n".join(lines)
