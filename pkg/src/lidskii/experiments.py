"""Experiment configs, task pipelines and manifests.

A config is a JSON object::

    {"name": "jordan2", "task": "decompose", "seed": 0, "output": "out",
     "operators": ["jordan2.json", {"family": "random_structured", "n": 5}],
     "parameters": {...}}

Operator references are file paths (relative to the config file), inline
matrix objects, or ``{"family": ..., ...}`` generator specs.  Every problem
is reported before any computation starts.
"""
from dataclasses import dataclass, field
import json
import os

import numpy as np

from . import families
from .abel import (abel_terms, default_schedule_parameters, eval_abel_polynomial,
                   group_schedule, group_vectors, grouped_partial_sums,
                   regularized_coefficients)
from .contours import (build_contour, integrate_resolvent_functional,
                       residue_at_pole, verify_resolvent_bound)
from .errors import LidskiiError, OperatorFormatError
from .evolution import (CauchyProblem, gamma_tail_identity,
                        solve_cauchy, verify_solution)
from .exponents import (beta_profile, convergence_exponent, generate_model_sequence,
                        circle_resolvent_bound, load_sequence_csv)
from .jordan import (chain_residuals, decomposition_to_json, raw_coefficients,
                     spectral_decomposition)
from .operators import estimate_sector, load_operator, operator_to_json, parse_vector
from .reporting import Table, dumps, emit_report, parallel_map, sha256_file, thread_count

__all__ = ["TASKS", "ConfigError", "ExperimentConfig", "load_config", "Gate",
           "ExperimentResult", "run_experiment"]

TASKS = ("exponent-analysis", "decompose", "sum", "contour-verify", "evolve",
         "full-verify")
FAMILIES = {
    "random_sectorial": families.random_sectorial,
    "sectorial_structured": families.sectorial_structured,
    "random_structured": families.random_structured,
    "diagonal": families.diagonal_family,
    "normal_sectorial": families.normal_sectorial,
}
RANDOMIZED = {"random_sectorial", "sectorial_structured", "random_structured",
              "diagonal", "normal_sectorial"}


class ConfigError(LidskiiError, ValueError):
    """Invalid experiment config; ``problems`` lists every issue found."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass
class ExperimentConfig:
    name: str
    task: str
    operators: list
    parameters: dict
    seed: int = None
    output: str = "out"
    base_dir: str = "."
    loaded: list = field(default_factory=list, repr=False)

    def validate(self):
        """Resolve and load every input; raise :class:`ConfigError` listing all problems."""
        problems = []
        if self.task not in TASKS:
            problems.append(f"unknown task {self.task!r}; expected one of {', '.join(TASKS)}")
        if self.seed is not None and (not isinstance(self.seed, int) or self.seed < 0):
            problems.append(f"seed must be a nonnegative integer, got {self.seed!r}")
        loaded = []
        for i, ref in enumerate(self.operators):
            try:
                loaded.append(self._load(ref, i))
            except (LidskiiError, ValueError, TypeError) as exc:
                problems.append(f"operator {i}: {exc}")
        seq = self.parameters.get("sequence")
        if isinstance(seq, dict) and "csv" in seq:
            path = self._path(seq["csv"])
            if not os.path.isfile(path):
                problems.append(f"sequence file {path!r} does not exist")
        needs_ops = self.task in ("decompose", "sum", "contour-verify", "evolve")
        if needs_ops and not self.operators:
            problems.append(f"task {self.task!r} needs at least one operator")
        if self.task == "exponent-analysis" and not isinstance(seq, dict):
            problems.append("task 'exponent-analysis' needs a 'sequence' parameter")
        if self.task == "full-verify" and self.seed is None:
            problems.append("task 'full-verify' needs a seed")
        if self.task in ("sum", "evolve") and self.seed is None:
            key = "f" if self.task == "sum" else "h"
            if key not in self.parameters:
                problems.append(f"a seed is required to draw a random {key!r}")
        if problems:
            raise ConfigError(problems)
        self.loaded = loaded
        return self

    def _path(self, p):
        return p if os.path.isabs(p) else os.path.join(self.base_dir, p)

    def _load(self, ref, i):
        if isinstance(ref, str):
            return load_operator(self._path(ref))
        if isinstance(ref, dict) and "family" in ref:
            kind = ref["family"]
            if kind not in FAMILIES:
                raise OperatorFormatError(f"unknown family {kind!r}")
            kw = {k: v for k, v in ref.items() if k != "family"}
            if kind in RANDOMIZED and "seed" not in kw:
                if self.seed is None:
                    raise OperatorFormatError(f"family {kind!r} needs a seed")
                kw["seed"] = self.seed + i
            if "blocks" in kw:
                kw["blocks"] = [(complex(*b[0]) if isinstance(b[0], list) else b[0], b[1])
                                for b in kw["blocks"]]
            return FAMILIES[kind](**kw)
        if isinstance(ref, dict):
            return load_operator(ref)
        raise OperatorFormatError(f"unsupported operator reference {ref!r}")


def load_config(source, overrides=None):
    """Read a config from a path or mapping; ``overrides`` replaces top-level keys."""
    base = "."
    if isinstance(source, dict):
        data = dict(source)
    else:
        try:
            with open(source, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError([f"cannot read config {source!r}: {exc}"])
        except json.JSONDecodeError as exc:
            raise ConfigError([f"malformed config {source!r}: {exc}"])
        base = os.path.dirname(os.path.abspath(source))
    if not isinstance(data, dict):
        raise ConfigError(["config must be a JSON object"])
    for k, v in (overrides or {}).items():
        if v is not None:
            data[k] = v
    missing = [k for k in ("name", "task") if k not in data]
    if missing:
        raise ConfigError([f"config is missing {k!r}" for k in missing])
    ops = data.get("operators", [])
    if not isinstance(ops, list):
        raise ConfigError(["'operators' must be a list"])
    params = data.get("parameters", {})
    if not isinstance(params, dict):
        raise ConfigError(["'parameters' must be an object"])
    return ExperimentConfig(str(data["name"]), data["task"], ops, params,
                            data.get("seed"), data.get("output", "out"), base)


@dataclass
class Gate:
    name: str
    passed: bool
    value: float = None
    limit: float = None
    detail: str = ""

    def to_json(self):
        return {"status": "pass" if self.passed else "fail", "value": self.value,
                "limit": self.limit, "detail": self.detail}


@dataclass
class ExperimentResult:
    status: int
    manifest: dict
    manifest_path: str


class _Run:
    """Collects gates and written files for one experiment."""

    def __init__(self, out):
        self.out = out
        self.gates = {}
        self.files = []

    def gate(self, name, passed, value=None, limit=None, detail=""):
        v = None if value is None else float(value)
        self.gates[name] = Gate(name, bool(passed), v, limit, detail)

    def fail(self, name, exc):
        self.gate(name, False, detail=f"{type(exc).__name__}: {exc}")

    def write(self, payload, fmt, stem, failed=False):
        path = emit_report(payload, fmt, self.out, stem)
        self.files.append((os.path.relpath(path, self.out), failed))


def _rng(config, salt):
    return np.random.default_rng([config.seed or 0, salt])


def _unit_vector(n, rng):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def _float_list(x):
    return [float(v) for v in np.atleast_1d(x)]


def _task_exponent(config, run, threads):
    p = config.parameters
    seq_cfg = dict(p["sequence"])
    if "csv" in seq_cfg:
        seq = load_sequence_csv(config._path(seq_cfg["csv"]))
    else:
        model = seq_cfg.pop("model")
        seq = generate_model_sequence(model, **seq_cfg)
    report = convergence_exponent(seq)
    payload = {"exponent": report.to_json(), "terms": int(seq.moduli.size)}
    run.gate("exponent_finite", np.isfinite(report.rho_hat), report.rho_hat)
    if "expected_rho" in p:
        tol = float(p.get("rho_tolerance", 0.05))
        err = abs(report.rho_hat - float(p["expected_rho"]))
        run.gate("exponent_recovery", err <= tol, err, tol)
    if "expected_genus" in p:
        run.gate("genus", report.genus == int(p["expected_genus"]), report.genus,
                 int(p["expected_genus"]))
    if "beta" in p:
        b = p["beta"]
        prof = beta_profile(seq, int(b.get("p", report.genus)),
                            float(b.get("rho1", report.rho_hat)), _float_list(b["r"]))
        run.write(Table(("r", "beta", "beta_ln_r"), prof.rows()), "csv", "beta_profile")
        payload["beta"] = {"p": prof.p, "rho1": prof.rho1,
                           "truncation_bound": prof.truncation_bound}
        if b.get("check_trend"):
            bl = prof.beta_ln_r
            dec = bool(np.all(np.diff(bl) < 0))
            run.gate("beta_trend", dec and bl[-1] < bl[0] / 3, bl[-1] / bl[0], 1 / 3,
                     "beta(r) ln r strictly decreasing with final < first/3")
    run.write(payload, "json", "exponent")


def _task_decompose(config, run, threads):
    tol = float(config.parameters.get("chain_tolerance", 1e-8))

    def work(op):
        try:
            d = spectral_decomposition(op)
        except LidskiiError as exc:
            return exc
        fwd, adj = chain_residuals(op, d)
        E, G = d.root_matrix(), d.adjoint_matrix()
        pairing = float(np.max(np.abs(G.conj().T @ E - np.eye(E.shape[1]))))
        return d, fwd, adj, pairing

    for i, (op, res) in enumerate(zip(config.loaded,
                                      parallel_map(work, config.loaded, threads))):
        if isinstance(res, Exception):
            run.fail(f"decompose_{i}", res)
            continue
        d, fwd, adj, pairing = res
        payload = {"operator": operator_to_json(op), "decomposition": decomposition_to_json(d),
                   "residuals": {"chain": fwd, "adjoint": adj, "pairing": pairing}}
        ok = max(fwd, adj) <= tol and pairing <= 1e-9
        run.write(payload, "json", f"decomposition_{i}", failed=not ok)
        run.gate(f"chains_{i}", max(fwd, adj) <= tol, max(fwd, adj), tol)
        run.gate(f"pairing_{i}", pairing <= 1e-9, pairing, 1e-9)


def _task_sum(config, run, threads):
    p = config.parameters
    alpha = float(p.get("alpha", 2.0))
    ts = _float_list(p.get("t", [1.0]))
    for i, op in enumerate(config.loaded):
        try:
            d = spectral_decomposition(op)
            f = (parse_vector(p["f"]) if "f" in p
                 else _unit_vector(op.dimension, _rng(config, 100 + i)))
            c = raw_coefficients(d, f)
            recon = float(np.linalg.norm(d.root_matrix() @ c - f) / np.linalg.norm(f))
            tau, K = default_schedule_parameters(d, alpha)
            tau, K = float(p.get("tau", tau)), float(p.get("K", K))
            sched = group_schedule(d, tau, K)
            per_t = []
            for k, t in enumerate(ts):
                rc = regularized_coefficients(d, c, t, alpha)
                gs = grouped_partial_sums(d, rc, sched)
                run.write(Table(("nu", "norm"),
                                [(nu, float(v)) for nu, v in enumerate(gs.group_norms)]),
                          "csv", f"group_norms_{i}_{k}")
                per_t.append({"t": t, "coefficients": rc.values.tolist(),
                              "total": gs.total.tolist(),
                              "group_norms": gs.group_norms.tolist()})
            run.write({"alpha": alpha, "schedule": sched.to_json(),
                       "raw_coefficients": c.tolist(), "reconstruction_error": recon,
                       "results": per_t}, "json", f"sum_{i}")
            run.gate(f"reconstruction_{i}", recon <= 1e-9, recon, 1e-9)
        except LidskiiError as exc:
            run.fail(f"sum_{i}", exc)


def contour_checks(op, f, alpha, ts, tolerance=1e-12, threads=1):
    """Residue identity, full contour identity and the ray resolvent bound."""
    d = spectral_decomposition(op)
    c = raw_coefficients(d, f)
    sector = estimate_sector(op)
    out = {"sector": sector.to_json(), "residue": [], "identity": []}
    worst_res = 0.0
    for t in ts:
        rc = regularized_coefficients(d, c, t, alpha)
        gv = group_vectors(d, rc)
        lams = [g for g in d.groups if g.finite]

        def res(pair):
            g, v = pair
            r = residue_at_pole(op, f, t, alpha, g)
            return float(np.linalg.norm(r + v) / max(np.linalg.norm(v), 1e-300))

        errs = parallel_map(res, list(zip(lams, gv)), threads)
        worst_res = max([worst_res] + errs)
        out["residue"].append({"t": t, "relative_errors": errs})
        tau, K = default_schedule_parameters(d, alpha)
        gs = grouped_partial_sums(d, rc, group_schedule(d, tau, K))
        contour = build_contour("gamma_B", op, sector, t, alpha, tolerance)
        q = integrate_resolvent_functional(op, f, t, alpha, contour, tolerance)
        rel = float(np.linalg.norm(q.value - gs.total) / np.linalg.norm(gs.total))
        out["identity"].append({"t": t, "relative_error": rel,
                                "panels": q.panels_used,
                                "panel_error_estimate": q.panel_error_estimate,
                                "truncation_bound": q.truncation_bound})
    theta = sector.semi_angle
    viol = []
    for phi in (0.5 * (theta + np.pi / 2), 0.5 * (np.pi / 2 + np.pi) - 0.1):
        for sgn in (1, -1):
            rep = verify_resolvent_bound(op, "ray", {"angle": sgn * phi,
                                                        "sector": sector})
            viol.append(rep.max_violation)
    out["ray_bound_max_violation"] = float(max(viol))
    out["worst_residue_error"] = worst_res
    out["worst_identity_error"] = max(r["relative_error"] for r in out["identity"])
    return out


def _task_contour(config, run, threads):
    p = config.parameters
    alphas = _float_list(p.get("alpha", [2.0]))
    ts = _float_list(p.get("t", [0.1, 1.0]))
    tol = float(p.get("tolerance", 1e-12))
    for i, op in enumerate(config.loaded):
        f = (parse_vector(p["f"]) if "f" in p
             else _unit_vector(op.dimension, _rng(config, 200 + i)))
        for a in alphas:
            key = f"{i}_alpha{a:g}"
            try:
                res = contour_checks(op, f, a, ts, tol, threads)
            except LidskiiError as exc:
                run.fail(f"contour_{key}", exc)
                continue
            run.gate(f"residue_{key}", res["worst_residue_error"] <= 1e-8,
                     res["worst_residue_error"], 1e-8)
            run.gate(f"identity_{key}", res["worst_identity_error"] <= 1e-6,
                     res["worst_identity_error"], 1e-6)
            run.gate(f"ray_bound_{key}", res["ray_bound_max_violation"] <= 1e-12,
                     res["ray_bound_max_violation"], 1e-12)
            bad = max(res["worst_residue_error"] / 1e-8, res["worst_identity_error"] / 1e-6) > 1
            run.write(res, "json", f"contour_verify_{key}", failed=bad)


def _t_grid(grid):
    if isinstance(grid, dict):
        return np.linspace(float(grid["start"]), float(grid["stop"]), int(grid["num"]))
    return np.asarray(grid, dtype=float)


def _task_evolve(config, run, threads):
    p = config.parameters
    alpha = float(p.get("alpha", 2.0))
    grid = _t_grid(p.get("t_grid", {"start": 0.1, "stop": 1.5, "num": 8}))
    backends = list(p.get("backends", ["contour", "series"]))
    for i, W in enumerate(config.loaded):
        try:
            h = (parse_vector(p["h"]) if "h" in p
                 else _unit_vector(W.dimension, _rng(config, 300 + i)))
            prob = CauchyProblem(W, h, alpha)
            trajs = parallel_map(lambda b: solve_cauchy(prob, grid, b), backends, threads)
            for b, tr in zip(backends, trajs):
                run.write(Table(("t", "component", "re", "im", "error_estimate"), tr.rows()),
                          "csv", f"trajectory_{i}_{b}")
            ref = trajs[0]
            agree = max([0.0] + [float(np.max(np.linalg.norm(tr.values - ref.values, axis=1)))
                                 for tr in trajs[1:]])
            run.gate(f"backend_agreement_{i}", agree <= 1e-6, agree, 1e-6)
            rep = verify_solution(prob, ref)
            for name, chk in sorted(rep.checks.items()):
                if chk.skipped:
                    run.gate(f"{name}_{i}", True, None, None, f"skipped: {chk.reason}")
                else:
                    limit = {"residual": 1e-4, "initial": 1e-3, "contraction": 0.0}[name]
                    run.gate(f"{name}_{i}", chk.passed, chk.value, limit, chk.label)
            init = rep.checks.get("initial")
            if init is not None:
                rows = list(zip(init.details["t"], init.details["relative_distance"]))
                run.write(Table(("t", "distance"), rows), "csv", f"initial_limit_{i}")
            run.write({"alpha": alpha, "backends": backends, "h": h.tolist(),
                       "verification": rep.to_json(), "backend_agreement": agree},
                      "json", f"evolve_{i}", failed=not rep.passed)
        except LidskiiError as exc:
            run.fail(f"evolve_{i}", exc)


def _task_full(config, run, threads):
    """Seeded suite covering every verification gate at small scale."""
    p = config.parameters
    n = int(p.get("dimension", 6))
    count = int(p.get("count", 3))
    seed = config.seed
    rng = np.random.default_rng(seed)
    summary = {}

    # Abel polynomials against central differences of the generating function
    worst = 0.0
    for _ in range(20):
        m = int(rng.integers(1, 6))
        a = float(rng.uniform(1.1, 3.0))
        z = complex(rng.uniform(0.5, 2.0) * np.exp(1j * rng.uniform(-0.5, 0.5)))
        t = float(rng.uniform(0.1, 1.0))
        exact = eval_abel_polynomial(m, a, z, t)
        fd = _fd_abel(m, a, z, t)
        worst = max(worst, abs(exact - fd) / max(abs(exact), 1e-300))
    run.gate("abel_polynomials", worst <= 1e-6, worst, 1e-6)
    summary["abel_terms_degree5"] = len(abel_terms(5))

    # Decomposition, residues and contour identity on structured sectorial operators
    ops = []
    for k in range(count):
        blocks = families.random_blocks(n, np.random.default_rng([seed, k]), 3, 0.2,
                                        (0.2, 1.0))
        ops.append(families.sectorial_structured(blocks, int(seed) * 1000 + k, 0.05))
    ids, res, rays = [], [], []
    for k, op in enumerate(ops):
        f = _unit_vector(n, _rng(config, 10 + k))
        for a in (1.5, 2.0):
            try:
                out = contour_checks(op, f, a, [0.1, 1.0], 1e-12, threads)
            except LidskiiError as exc:
                run.fail(f"contour_{k}_alpha{a:g}", exc)
                continue
            ids.append(out["worst_identity_error"])
            res.append(out["worst_residue_error"])
            rays.append(out["ray_bound_max_violation"])
        d = spectral_decomposition(op)
        fwd, adj = chain_residuals(op, d)
        run.gate(f"chains_{k}", max(fwd, adj) <= 1e-8, max(fwd, adj), 1e-8)
    if ids:
        run.gate("residue_identity", max(res) <= 1e-8, max(res), 1e-8)
        run.gate("contour_identity", max(ids) <= 1e-6, max(ids), 1e-6)
        run.gate("ray_resolvent_bound", max(rays) <= 1e-12, max(rays), 1e-12)

    # Circle resolvent bound on three rings
    ok = True
    scans = []
    for k, op in enumerate(ops):
        top = float(np.max(1.0 / np.abs(op.eigenvalues())))
        for R in (1.5 * top, 3 * top, 6 * top):
            r5 = circle_resolvent_bound(op, R, 0.5, 1.0)
            ok = ok and r5.satisfied
            scans.append(r5.to_json())
    run.gate("circle_resolvent_bound", ok, sum(not s["satisfied"] for s in scans), 0)
    summary["circle_scans"] = scans

    # Convergence exponent
    errs = []
    for rho in (0.5, 1.0, 2.0):
        seq = generate_model_sequence("power", terms=int(p.get("terms", 100000)), rho=rho)
        rep = convergence_exponent(seq)
        errs.append(abs(rep.rho_hat - rho))
    run.gate("exponent_recovery", max(errs) <= 0.05, max(errs), 0.05)

    # Gamma tail identity
    gt = 0.0
    for _ in range(20):
        a = float(rng.uniform(1.1, 3.0))
        lam = rng.uniform(0.3, 5.0) * np.exp(1j * rng.uniform(-0.9, 0.9) * np.pi / (2 * a))
        gt = max(gt, gamma_tail_identity(lam, a).rel_err)
    run.gate("gamma_tail", gt <= 1e-8, gt, 1e-8)

    # Cauchy problem on a diagonal W and on a single Jordan block
    cases = {
        "diagonal": (families.diagonal_family(min(n, 4), int(seed)),
                     ("contour", "series", "eigen")),
        "jordan": (families.sectorial_structured([(1.5, 3)], int(seed), 0.2),
                   ("contour", "series")),
    }
    grid = np.linspace(0.1, 1.5, 6)
    summary["cauchy"] = {}
    for label, (W, backends) in cases.items():
        h = _unit_vector(W.dimension, _rng(config, 99))
        prob = CauchyProblem(W, h, 2.0)
        trajs = [solve_cauchy(prob, grid, b) for b in backends]
        agree = max(float(np.max(np.abs(tr.values - trajs[-1].values))) for tr in trajs[:-1])
        run.gate(f"cauchy_{label}_backends", agree <= 1e-6, agree, 1e-6)
        rep = verify_solution(prob, trajs[0])
        for name, chk in sorted(rep.checks.items()):
            run.gate(f"cauchy_{label}_{name}", chk.passed or chk.skipped, chk.value,
                     {"residual": 1e-4, "initial": 1e-3, "contraction": 0.0}[name],
                     chk.reason or chk.label)
        init = rep.checks["initial"]
        run.write(Table(("t", "distance"), list(zip(init.details["t"],
                                                    init.details["relative_distance"]))),
                  "csv", f"initial_limit_{label}")
        summary["cauchy"][label] = rep.to_json()
    summary["operators"] = [operator_to_json(op) for op in ops]
    run.write(summary, "json", "full_verify")


def _fd_abel(m, alpha, z, t, nodes=64):
    """``P_m`` from an ``nodes``-point circular difference stencil around ``z``."""
    h = 0.3 * abs(z)
    w = np.exp(2j * np.pi * np.arange(nodes) / nodes)
    g = np.exp(-t * np.exp(-alpha * np.log(z + h * w)))
    coef = np.mean(g * w ** (-m)) / h ** m
    return complex(coef * np.exp(t * np.exp(-alpha * np.log(z))))


_RUNNERS = {
    "exponent-analysis": _task_exponent,
    "decompose": _task_decompose,
    "sum": _task_sum,
    "contour-verify": _task_contour,
    "evolve": _task_evolve,
    "full-verify": _task_full,
}


def run_experiment(config, threads=None):
    """Validate a config, run its task and write the manifest.

    Parameters
    ----------
    config : ExperimentConfig
    threads : int, optional
        Worker count (default from ``LIDSKII_THREADS``, else 1).

    Returns
    -------
    ExperimentResult
        ``status`` is 0 when every gate passes and 1 otherwise.

    Raises
    ------
    ConfigError
        Before anything is written, when the config does not validate.
    """
    config.validate()
    threads = thread_count(threads)
    out = config._path(config.output)
    os.makedirs(out, exist_ok=True)
    run = _Run(out)
    try:
        _RUNNERS[config.task](config, run, threads)
    except LidskiiError as exc:
        run.fail("task", exc)
    gates = {k: g.to_json() for k, g in sorted(run.gates.items())}
    status = 0 if gates and all(g["status"] == "pass" for g in gates.values()) else 1
    files = [{"path": rel, "sha256": sha256_file(os.path.join(out, rel)),
              "status": "failed" if failed else "ok"} for rel, failed in sorted(run.files)]
    manifest = {"name": config.name, "task": config.task, "seed": config.seed,
                "status": "pass" if status == 0 else "fail",
                "gates": gates, "files": files}
    path = emit_report(manifest, "json", out, "manifest")
    return ExperimentResult(status, manifest, path)


def manifest_text(result):
    return dumps(result.manifest)
