"""Convergence sweeps, slope fitting and the validation suites."""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _dense, codec, sobolev, spline_core
from .adversary import STRATEGIES, AttackPlan
from .errors import ConfigError, NotFound, SlopeUndefined
from .simulation import registry_get, run_repeated

CSV_HEADER = ("N", "gamma", "lambda_d", "mean_error", "stddev", "repetitions", "seed")

# lambda_d for the impossibility demonstration.  A budget proportional to N
# sits outside the a < 1 rule, so use the log-midpoint of the admissible
# bracket C * N^-4 < lambda_d <= 1.
IMPOSSIBILITY_LAMBDA_EXPONENT = 2.0

INPUT_DISTRIBUTIONS = ("uniform", "grid")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


@dataclass(frozen=True)
class GammaRule:
    """``gamma = floor(N**a)`` for kind "power", a constant for kind "fixed"."""

    kind: str
    value: float

    def gamma(self, N: int) -> int:
        if self.kind == "fixed":
            return int(self.value)
        # Nudge so that exact powers such as 4096**0.5 do not floor to 63.
        return int(math.floor(N**self.value * (1 + 1e-12)))

    @property
    def exponent(self) -> float:
        """Exponent fed to the lambda rule; a fixed budget is the a = 0 case."""
        return self.value if self.kind == "power" else 0.0

    def to_json(self) -> dict:
        return {self.kind: self.value if self.kind == "power" else int(self.value)}


@dataclass(frozen=True)
class ExperimentConfig:
    function_id: str
    K: int
    N_list: tuple
    gamma_rule: GammaRule
    J: float = 1.0
    C_lambda: float = 1.0
    lambda_e: float = 0.0
    strategy: str = "cluster_max"
    repetitions: int = 20
    master_seed: int = 0
    output_path: Optional[str] = None
    input_distribution: str = "uniform"

    def to_json(self) -> dict:
        d = asdict(self)
        d["N_list"] = list(self.N_list)
        d["gamma_rule"] = self.gamma_rule.to_json()
        return d


def _require(raw: dict, key: str):
    if key not in raw:
        raise ConfigError(key, "missing required field")
    return raw[key]


def _number(raw, key, default, kind=float, positive=False, nonneg=False):
    v = raw.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(key, f"expected a number, got {v!r}")
    if kind is int and float(v) != int(v):
        raise ConfigError(key, f"expected an integer, got {v!r}")
    v = kind(v)
    if positive and not v > 0:
        raise ConfigError(key, f"must be positive, got {v}")
    if nonneg and v < 0:
        raise ConfigError(key, f"must be non-negative, got {v}")
    return v


def _parse_gamma_rule(g) -> GammaRule:
    if not isinstance(g, dict) or len(g) != 1:
        raise ConfigError("gamma_rule", 'expected {"power": a} or {"fixed": g}')
    (kind, value), = g.items()
    if kind == "power":
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not 0.0 <= value < 1.0:
            raise ConfigError("gamma_rule", f"power exponent must lie in [0, 1), got {value!r}")
        return GammaRule("power", float(value))
    if kind == "fixed":
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            raise ConfigError("gamma_rule", f"fixed budget must be a non-negative integer, got {value!r}")
        return GammaRule("fixed", value)
    raise ConfigError("gamma_rule", f"unknown rule {kind!r}")


def _parse_N(raw: dict) -> tuple:
    if "N_list" in raw:
        Ns = raw["N_list"]
        if not isinstance(Ns, list) or not Ns or not all(isinstance(n, int) and not isinstance(n, bool) for n in Ns):
            raise ConfigError("N_list", "expected a non-empty list of integers")
        return tuple(Ns)
    if "N_min" in raw or "N_max" in raw:
        lo = _number(raw, "N_min", None, int, positive=True) if "N_min" in raw else _require(raw, "N_min")
        hi = _number(raw, "N_max", None, int, positive=True) if "N_max" in raw else _require(raw, "N_max")
        pts = _number(raw, "points", None, int, positive=True) if "points" in raw else _require(raw, "points")
        return tuple(int(round(n)) for n in np.geomspace(lo, hi, pts))
    raise ConfigError("N_list", "missing required field (or N_min/N_max/points)")


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    fid = _require(raw, "function_id")
    try:
        registry_get(fid)
    except (NotFound, TypeError):
        raise ConfigError("function_id", f"unknown function {fid!r}") from None
    K = _number(raw, "K", 10, int)
    if K < 3:
        raise ConfigError("K", f"need K >= 3, got {K}")
    Ns = _parse_N(raw)
    if any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise ConfigError("N_list", "must be strictly increasing")
    if Ns[0] < K:
        raise ConfigError("N_list", f"every N must be >= K = {K}")
    rule = _parse_gamma_rule(_require(raw, "gamma_rule"))
    if rule.kind == "fixed" and rule.value > Ns[0]:
        raise ConfigError("gamma_rule", "fixed budget exceeds the smallest N")
    strategy = raw.get("strategy", "cluster_max")
    if strategy not in STRATEGIES:
        raise ConfigError("strategy", f"unknown strategy {strategy!r}")
    reps = _number(raw, "repetitions", 20, int)
    if reps < 1:
        raise ConfigError("repetitions", "must be >= 1")
    seed = _number(raw, "master_seed", 0, int)
    if not 0 <= seed < 2**64:
        raise ConfigError("master_seed", "must be an unsigned 64-bit integer")
    dist = raw.get("input_distribution", "uniform")
    if dist not in INPUT_DISTRIBUTIONS:
        raise ConfigError("input_distribution", f"expected one of {INPUT_DISTRIBUTIONS}, got {dist!r}")
    out = raw.get("output_path")
    if out is not None and not isinstance(out, str):
        raise ConfigError("output_path", "expected a string")
    return ExperimentConfig(
        function_id=fid,
        K=K,
        N_list=Ns,
        gamma_rule=rule,
        J=_number(raw, "J", 1.0, positive=True),
        C_lambda=_number(raw, "C_lambda", 1.0, positive=True),
        lambda_e=_number(raw, "lambda_e", 0.0, nonneg=True),
        strategy=strategy,
        repetitions=reps,
        master_seed=seed,
        output_path=out,
        input_distribution=dist,
    )


def parse_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError("<path>", f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON: {exc}") from None
    return config_from_dict(raw)


def emit_config(cfg: ExperimentConfig) -> str:
    return json.dumps(cfg.to_json(), indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True)
class SweepRow:
    N: int
    gamma: int
    lambda_d: float
    mean_error: float
    stddev: Optional[float]
    repetitions: int
    seed: int = 0

    def cells(self) -> list:
        return [_fmt(getattr(self, k)) for k in CSV_HEADER]


def _loglog_path(path: Path) -> Path:
    return path.with_name(path.stem + "_loglog.csv")


def write_loglog(rows: Sequence[SweepRow], path) -> Optional[dict]:
    """Write (ln N, ln error) with the fitted line; returns the fit or None."""
    try:
        fit = fit_slope(rows)
    except SlopeUndefined:
        fit = None
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ln_N", "ln_mean_error", "fitted", "slope", "intercept", "r_squared"])
        for r in rows:
            lnN = math.log(r.N)
            lnE = math.log(r.mean_error) if r.mean_error > 0 else None
            if fit is None:
                w.writerow([_fmt(lnN), _fmt(lnE), "", "", "", ""])
            else:
                w.writerow([_fmt(lnN), _fmt(lnE), _fmt(fit["intercept"] + fit["slope"] * lnN),
                            _fmt(fit["slope"]), _fmt(fit["intercept"]), _fmt(fit["r_squared"])])
    return fit


def run_sweep(cfg: ExperimentConfig, out_path=None, progress=None) -> list[SweepRow]:
    """One row per N, appended to the CSV as soon as it is computed."""
    f = registry_get(cfg.function_id)
    path = out_path or cfg.output_path
    fh = open(path, "w", newline="") if path else None
    rows = []
    try:
        if fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            fh.flush()
        for N in cfg.N_list:
            gamma = cfg.gamma_rule.gamma(N)
            lam = codec.choose_lambda_d(N, cfg.gamma_rule.exponent, cfg.J, cfg.C_lambda)
            plan = AttackPlan(gamma, cfg.strategy if gamma > 0 else "none")
            rep = run_repeated(f, cfg.K, N, plan, lam, cfg.repetitions, cfg.master_seed, cfg.lambda_e,
                               distribution=cfg.input_distribution)
            row = SweepRow(N, gamma, lam, rep.mean, rep.stddev, cfg.repetitions, cfg.master_seed)
            rows.append(row)
            if fh:
                w.writerow(row.cells())
                fh.flush()
            if progress:
                progress(row)
    finally:
        if fh:
            fh.close()
    if path and len(rows) >= 3:
        write_loglog(rows, _loglog_path(Path(path)))
    return rows


def read_rows(path) -> list[SweepRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        return [
            SweepRow(
                int(r["N"]),
                int(r["gamma"]),
                float(r["lambda_d"]),
                float(r["mean_error"]),
                float(r["stddev"]) if r["stddev"] else None,
                int(r["repetitions"]),
                int(r["seed"]),
            )
            for r in reader
        ]


def fit_slope(rows: Iterable) -> dict:
    """OLS of ln(mean_error) on ln(N).

    ``rows`` holds :class:`SweepRow` objects or ``(N, error)`` pairs.
    """
    pts = [(r.N, r.mean_error) if isinstance(r, SweepRow) else tuple(r) for r in rows]
    if len(pts) < 3:
        raise SlopeUndefined(f"need at least 3 rows, got {len(pts)}")
    N, e = np.array(pts, dtype=float).T
    if np.any(e <= 0) or np.any(N <= 0):
        raise SlopeUndefined("errors and N must be positive for a log-log fit")
    x, y = np.log(N), np.log(e)
    slope, intercept = np.polyfit(x, y, 1)
    ss_tot = np.sum((y - y.mean()) ** 2)
    ss_res = np.sum((y - (intercept + slope * x)) ** 2)
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return {"slope": float(slope), "intercept": float(intercept), "r_squared": float(r2)}


# ---------------------------------------------------------------- validation


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ValidationReport:
    suite: str
    checks: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list:
        return [c.name for c in self.checks if not c.passed]

    def lines(self) -> list[str]:
        return [f"{'PASS' if c.passed else 'FAIL'} {self.suite}/{c.name}: {c.detail}" for c in self.checks]


def _rel(a, b) -> float:
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def oracle_equivalence(instances: int = 200, n_max: int = 50, seed: int = 0) -> float:
    """Worst relative gap between the banded fit and the dense construction.

    Compares the kernel coefficients c, the null-space coefficients d and the
    hat matrix on random designs with n <= n_max and lambda in [1e-6, 1].
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        n = int(rng.integers(3, n_max + 1))
        t = np.sort(rng.uniform(0, 1, n))
        while np.any(np.diff(t) <= 0):
            t = np.sort(rng.uniform(0, 1, n))
        lam = 10 ** rng.uniform(-6, 0)
        y = rng.normal(size=n)
        model = spline_core.fit(spline_core.RegressionData(t, y), lam)
        c, d = _dense.dense_coefficients(t, y, lam)
        H = spline_core.hat_matrix(t, lam).entries
        H_ref = _dense.dense_hat_matrix_coef(t, lam)
        worst = max(worst, _rel(model.coef_kernel, c), _rel(model.coef_poly, d), _rel(H, H_ref))
    return worst


def line_reproduction(lams=(1e-6, 1.0, 1e6), n: int = 40, seed: int = 0) -> float:
    """Sup error on a fine grid when fitting exact data on a random line."""
    rng = np.random.default_rng(seed)
    t = np.sort(rng.uniform(0, 1, n))
    a, b = rng.normal(size=2)
    grid = np.linspace(0, 1, 1001)
    worst = 0.0
    for lam in lams:
        m = spline_core.fit(spline_core.RegressionData(t, a + b * t), lam)
        worst = max(worst, float(np.max(np.abs(m(grid) - (a + b * grid)))))
    return worst


def impossibility_demo(
    N_list=(512, 1024, 2048, 4096), K: int = 10, repetitions: int = 20, seed: int = 0
) -> dict:
    """Mean errors for f = identity with a budget of N // 4, attacked and honest."""
    f = registry_get("identity")
    out = {"N": list(N_list), "attacked": [], "honest": [], "lambda_d": []}
    for N in N_list:
        lam = float(N) ** -IMPOSSIBILITY_LAMBDA_EXPONENT
        g = N // 4
        out["lambda_d"].append(lam)
        out["attacked"].append(run_repeated(f, K, N, AttackPlan(g, "impossibility_poly"), lam, repetitions, seed).mean)
        out["honest"].append(run_repeated(f, K, N, AttackPlan(0), lam, repetitions, seed).mean)
    return out


def lambda_scaling_ratio(N: int = 1024, K: int = 10, repetitions: int = 20, seed: int = 0, factor: float = 16.0):
    """Honest decoder error at lambda_d over the error at lambda_d / factor.

    The error is the largest squared gap ``|u_d(alpha_k) - f(u_e(alpha_k))|^2``
    over the encoder points, averaged over input draws.  lambda_d is the a = 0
    rule value.
    """
    f = registry_get("xsinx")
    lam = codec.choose_lambda_d(N, 0.0)
    children = np.random.SeedSequence(seed).spawn(repetitions)
    big, small = [], []
    for child in children:
        x = np.sort(f.sample_inputs(K, np.random.default_rng(child)), axis=0)
        task = codec.CodedTask.create(x, N, f.M)
        enc = codec.design_encoder(task)
        y = f(codec.encode(enc, task.beta))
        target = f(enc(task.alpha))
        for l, acc in ((lam, big), (lam / factor, small)):
            est = codec.decode(task.beta, y, l, task.alpha)
            acc.append(float(np.max(np.sum((est - target) ** 2, axis=1))))
    return float(np.mean(big) / np.mean(small)), lam


def _suite_splines(report):
    err = oracle_equivalence()
    report.checks.append(Check("dense_oracle", err <= 1e-8, f"max relative error {err:.2e} (limit 1e-8)"))
    err = line_reproduction()
    report.checks.append(Check("line_reproduction", err <= 1e-9, f"sup error {err:.2e} (limit 1e-9)"))


def _suite_kernels(report):
    for lam in (1.0, 1e-1, 1e-2, 1e-3, 1e-4):
        s, b = sobolev.kernel_sup(lam), sobolev.kernel_bound(lam)
        report.checks.append(Check(f"kernel_bound[{lam:g}]", s < b, f"sup {s:.4g} < bound {b:.4g}"))
    rep = sobolev.check_kernel_weight_convergence(lambda N: N ** -1.6, [64, 128, 256])
    gaps = ", ".join(f"{g:.4g}" for g in rep.sup_diffs)
    report.checks.append(Check("weight_kernel_convergence", rep.passed, f"gaps {gaps}"))


def _suite_norms(report):
    for r in map(sobolev.check_norm_equivalence, sobolev.norm_corpus()):
        report.checks.append(Check(f"norm_equivalence[{r.name}]", r.passed, f"ratio {r.ratio:.4f}"))


def _suite_impossibility(report):
    demo = impossibility_demo()
    a, h = demo["attacked"], demo["honest"]
    report.checks.append(
        Check("attack_does_not_vanish", a[-1] >= 0.5 * a[0], f"error {a[0]:.4g} at N={demo['N'][0]} -> {a[-1]:.4g} at N={demo['N'][-1]}")
    )
    report.checks.append(
        Check("honest_decays", h[-1] * 10 <= h[0], f"error {h[0]:.4g} -> {h[-1]:.4g} ({h[0] / h[-1]:.1f}x, need 10x)")
    )


SUITES = {
    "splines": _suite_splines,
    "kernels": _suite_kernels,
    "norms": _suite_norms,
    "impossibility": _suite_impossibility,
}


def validate(suite: str) -> ValidationReport:
    if suite not in SUITES:
        raise NotFound(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    report = ValidationReport(suite)
    t0 = time.perf_counter()
    SUITES[suite](report)
    report.seconds = time.perf_counter() - t0
    return report
