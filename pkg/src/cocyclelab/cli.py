"""Command-line entry point.

Exit status: 0 on success, 1 when an asserting command finds a violation,
2 on usage or configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from pathlib import Path

from . import __version__
from .certification import certify_tree
from .combinatorics import BadCountLaw, bad_count_table, mn_measure
from .core import SystemParams
from .lyapunov import estimate_lyapunov, regime_classify, rows_to_csv, rows_to_json, sweep_energy
from .potentials import V1Params, check_v1_class, parse_potential
from .verify import bad_count_trials, derivative_trials, large_energy_trials, product_bound_trials

COMMANDS = ("estimate", "sweep", "certify", "check-v1", "verify-lemmas", "combinatorics")
STOCHASTIC = {"estimate", "sweep", "certify", "verify-lemmas"}
CHECKS = ("large-energy", "product-bound", "derivative-budget", "bad-count-measure")
CHECK_ALIASES = {"2.2": "large-energy", "2.3": "product-bound", "3.1": "derivative-budget", "2.4": "bad-count-measure"}


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    command: str = ""
    lam: float = 20.0
    b: int = 8000
    energy: float = 0.0
    potential: str = "cos3"
    seed: int | None = None
    output: str = ""
    format: str = ""
    # estimation
    steps: int = 100_000
    samples: int = 10
    emin: float = -16.0
    emax: float = 16.0
    grid: int = 97
    workers: int = 1
    assert_threshold: bool = False
    # certification
    depth: int = 2
    strategy: str = "exhaustive"
    children: int = 0
    nodes: int = 8
    cert_grid: int = 0
    assert_budget: bool = False
    # sublevel check
    eps0: float = 0.0
    beta: float = 0.0
    s: int = 0
    a_count: int = 50
    eps_list: str = "0.1,0.05,0.01"
    resolution: int = 32768
    # lemma drivers
    which: str = "all"
    trials: int = 1000
    n_bound: int = 200
    max_depth: int = 3
    # combinatorics
    n: int = 1000
    q: int = 1


# file keys and flags say "lambda"; the attribute cannot
_KEY_TO_FIELD = {"lambda": "lam"}
_FIELD_TO_KEY = {v: k for k, v in _KEY_TO_FIELD.items()}
_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(field: str, raw: str):
    kind = _TYPES[field]
    try:
        if kind == "bool":
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "int":
            return int(raw)
        if kind == "int | None":
            return None if raw.lower() in ("", "none") else int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for key {_FIELD_TO_KEY.get(field, field)!r} (expected {kind})") from None


def _field_for(key: str) -> str:
    field = _KEY_TO_FIELD.get(key, key.replace("-", "_"))
    if field not in _TYPES or key in _FIELD_TO_KEY:
        raise ConfigError(f"unknown config key {key!r}")
    return field


def read_config_text(text: str) -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, raw = (part.strip() for part in line.split("=", 1))
        field = _field_for(key)
        out[field] = _convert(field, raw)
    return out


def serialize_config(cfg: RunConfig) -> str:
    lines = []
    for f in fields(RunConfig):
        val = getattr(cfg, f.name)
        lines.append(f"{_FIELD_TO_KEY.get(f.name, f.name)} = {'none' if val is None else val}")
    return "\n".join(lines) + "\n"


def parse_config(file_text: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then file keys, then flag overrides (already converted, field names)."""
    values = read_config_text(file_text) if file_text else {}
    for k, v in (overrides or {}).items():
        values[_field_for(_FIELD_TO_KEY.get(k, k))] = v
    cfg = RunConfig(**values)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    if cfg.command not in COMMANDS:
        raise ConfigError(f"missing or unknown command {cfg.command!r}; choose from {', '.join(COMMANDS)}")
    if not cfg.lam > 0:
        raise ConfigError("lambda must be positive")
    if cfg.b < 2:
        raise ConfigError("b must be >= 2")
    if cfg.command in STOCHASTIC and cfg.seed is None:
        raise ConfigError(f"{cfg.command} needs an explicit --seed")
    if cfg.seed is not None and cfg.seed < 0:
        raise ConfigError("seed must be non-negative")
    if cfg.format not in ("", "csv", "json"):
        raise ConfigError("format must be csv or json")
    if cfg.command == "sweep" and not (cfg.emin < cfg.emax and cfg.grid >= 2):
        raise ConfigError("sweep needs emin < emax and grid >= 2")
    if cfg.command in ("estimate", "sweep") and (cfg.steps < 1000 or cfg.samples < 1):
        raise ConfigError("steps must be >= 1000 and samples >= 1")
    if cfg.strategy not in ("exhaustive", "sampled"):
        raise ConfigError("strategy must be exhaustive or sampled")
    if cfg.command == "certify" and cfg.strategy == "sampled" and cfg.children < 1:
        raise ConfigError("sampled certification needs --children >= 1")
    if cfg.command == "verify-lemmas":
        _checks(cfg.which)


def _checks(which: str) -> list[str]:
    if which == "all":
        return list(CHECKS)
    out = []
    for item in which.split(","):
        name = CHECK_ALIASES.get(item.strip(), item.strip())
        if name not in CHECKS:
            raise ConfigError(f"unknown check {item!r}; choose from {', '.join(CHECKS)} or all")
        out.append(name)
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cocyclelab", description="Lyapunov exponents and cylinder-tree statistics for Schrodinger cocycles over x -> bx mod 1.")
    ap.add_argument("--version", action="version", version=f"cocyclelab {__version__}")
    sub = ap.add_subparsers(dest="command")
    S = argparse.SUPPRESS

    def common(p):
        p.add_argument("--config", default=S, help="flat key = value file; flags override it")
        p.add_argument("--lambda", dest="lam", type=float, default=S)
        p.add_argument("--b", type=int, default=S)
        p.add_argument("--energy", type=float, default=S)
        p.add_argument("--potential", default=S, help="cos3 | trigpoly:k1,c1,... | counterexample:phi=cos | constant:c")
        p.add_argument("--seed", type=int, default=S)
        p.add_argument("--output", "-o", default=S)
        p.add_argument("--format", choices=("csv", "json"), default=S)

    p = sub.add_parser("estimate", help="Monte Carlo Lyapunov exponent at one energy")
    common(p)
    p.add_argument("--steps", type=int, default=S)
    p.add_argument("--samples", type=int, default=S)

    p = sub.add_parser("sweep", help="Lyapunov exponent on an energy grid")
    common(p)
    for flag, kind in (("--emin", float), ("--emax", float), ("--grid", int), ("--steps", int), ("--samples", int), ("--workers", int)):
        p.add_argument(flag, type=kind, default=S)
    p.add_argument("--assert-threshold", action="store_true", default=S, help="exit 1 if any estimate is <= log(lambda)/4")

    p = sub.add_parser("certify", help="good/bad statistics of the cylinder tree")
    common(p)
    p.add_argument("--depth", type=int, default=S)
    p.add_argument("--strategy", choices=("exhaustive", "sampled"), default=S)
    p.add_argument("--children", type=int, default=S, help="children sampled per node")
    p.add_argument("--nodes", type=int, default=S, help="nodes sampled per level")
    p.add_argument("--cert-grid", type=int, default=S, help="grid points per graph (0 = automatic)")
    p.add_argument("--assert-budget", action="store_true", default=S)

    p = sub.add_parser("check-v1", help="empirical sublevel-set check of the potential")
    common(p)
    for flag, kind in (("--eps0", float), ("--beta", float), ("--s", int), ("--a-count", int), ("--eps-list", str), ("--resolution", int)):
        p.add_argument(flag, type=kind, default=S)

    p = sub.add_parser("verify-lemmas", help="seeded property checks")
    common(p)
    p.add_argument("--which", default=S, help=f"{', '.join(CHECKS)} or all (comma separated)")
    for flag in ("--trials", "--n-bound", "--max-depth", "--steps", "--samples"):
        p.add_argument(flag, type=int, default=S)

    p = sub.add_parser("combinatorics", help="exact bad-count measures")
    common(p)
    p.add_argument("--n", type=int, default=S)
    p.add_argument("--q", type=int, default=S)
    return ap


def _frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _embedded(cfg: RunConfig) -> RunConfig:
    # the destination path is not part of what makes a run reproducible
    return RunConfig(**(asdict(cfg) | {"output": ""}))


def _header(cfg: RunConfig) -> list[str]:
    return [f"cocyclelab {__version__}"] + serialize_config(_embedded(cfg)).splitlines()


def _json_doc(cfg: RunConfig, result) -> str:
    config = {_FIELD_TO_KEY.get(k, k): v for k, v in asdict(_embedded(cfg)).items()}
    doc = {"version": __version__, "config": config, "result": result}
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _csv_text(cfg: RunConfig, header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    for line in _header(cfg):
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def execute(cfg: RunConfig) -> tuple[int, str, str]:
    """Run the configured command; returns (exit status, summary, file text)."""
    v = parse_potential(cfg.potential, b=cfg.b)
    fmt = cfg.format
    status = 0
    if cfg.command == "estimate":
        p = SystemParams(cfg.lam, cfg.energy, cfg.b)
        est = estimate_lyapunov(p, v, cfg.steps, cfg.samples, cfg.seed)
        result = asdict(est) | {"regime": regime_classify(p).value, "quarter_log_lambda": math.log(cfg.lam) / 4}
        summary = f"L({cfg.energy:g}) = {est.estimate:.6f} +/- {est.std_error:.2e}  [{result['regime']}]"
        text = _json_doc(cfg, result) if fmt != "csv" else _csv_text(cfg, list(result), [list(result.values())])
    elif cfg.command == "sweep":
        rows = sweep_energy(cfg.lam, cfg.b, v, cfg.emin, cfg.emax, cfg.grid, cfg.steps, cfg.samples, cfg.seed, cfg.workers)
        bad = [r.energy for r in rows if not r.estimate > r.threshold_quarter_log_lambda]
        worst = min(rows, key=lambda r: r.estimate)
        summary = (f"{len(rows)} energies, min L = {worst.estimate:.6f} at E = {worst.energy:g}, "
                   f"threshold log(lambda)/4 = {rows[0].threshold_quarter_log_lambda:.6f}")
        if bad and cfg.assert_threshold:
            status = 1
            summary += "\nbelow threshold at E = " + ", ".join(f"{e:g}" for e in bad)
        text = _json_doc(cfg, rows_to_json(rows)) if fmt == "json" else rows_to_csv(rows, _header(cfg))
    elif cfg.command == "certify":
        p = SystemParams(cfg.lam, cfg.energy, cfg.b)
        rep = certify_tree(p, v, cfg.depth, cfg.strategy, cfg.cert_grid or None, cfg.seed,
                           cfg.children or None, cfg.nodes)
        lines = [f"{'level':>5} {'nodes':>8} {'children':>10} {'max_bad':>8} {'bad_frac':>9} {'marginal':>8}"]
        for s in rep.per_level:
            lines.append(f"{s.level:>5} {s.nodes_examined:>8} {s.children_examined:>10} {s.max_bad_children:>8} "
                         f"{s.bad_fraction_estimate:>9.4f} {s.marginal_children:>8}")
        lines.append(f"budget q = {rep.budget_q}, a priori bound = {rep.apriori_bound}, "
                     f"a priori satisfied = {rep.apriori_satisfied}, hypothesis verified = {rep.hypothesis_verified}")
        if rep.flags:
            lines.append("flags: " + ", ".join(rep.flags))
        summary = "\n".join(lines)
        if cfg.assert_budget and not rep.hypothesis_verified:
            status = 1
        if fmt == "csv":
            cols = list(asdict(rep.per_level[0]))
            text = _csv_text(cfg, cols, [list(asdict(s).values()) for s in rep.per_level])
        else:
            text = _json_doc(cfg, rep.to_dict())
    elif cfg.command == "check-v1":
        params = None
        if cfg.eps0 or cfg.beta or cfg.s:
            base = v.v1_params
            params = V1Params(cfg.eps0 or base.eps0, cfg.beta or base.beta, cfg.s or base.s) if base else V1Params(cfg.eps0, cfg.beta, cfg.s)
        p1 = params or v.v1_params
        if p1 is None:
            raise ConfigError(f"potential {cfg.potential!r} has no sublevel parameters; pass --eps0 --beta --s")
        eps = [float(e) for e in cfg.eps_list.split(",") if e.strip()]
        a_grid = [-v.sup_norm + 2 * v.sup_norm * i / (cfg.a_count - 1) for i in range(cfg.a_count)] if cfg.a_count > 1 else [0.0] * cfg.a_count
        res = check_v1_class(v, a_grid, eps, cfg.resolution, p1)
        result = {"passed": res.passed, "pairs_checked": res.pairs_checked, "worst_ratio": res.worst_ratio,
                  "worst": asdict(res.worst) if res.worst else None, "v1_params": asdict(p1)}
        summary = f"sublevel check {'passed' if res.passed else 'FAILED'} on {res.pairs_checked} pairs, worst ratio {res.worst_ratio:.4f}"
        if res.worst:
            summary += f" at a = {res.worst.a:.6g}, eps = {res.worst.eps:g}"
        status = 0 if res.passed else 1
        text = _json_doc(cfg, result)
    elif cfg.command == "verify-lemmas":
        reports = []
        for name in _checks(cfg.which):
            if name == "product-bound":
                reports.append(product_bound_trials(cfg.lam, cfg.b, v, cfg.trials, cfg.n_bound, cfg.seed))
            elif name == "large-energy":
                reports.append(large_energy_trials(cfg.lam, cfg.b, v, cfg.trials, cfg.steps, cfg.samples, cfg.seed))
            elif name == "derivative-budget":
                reports.append(derivative_trials(cfg.lam, cfg.b, cfg.energy, v, cfg.trials, cfg.max_depth, cfg.seed))
            else:
                reports.append(bad_count_trials())
        summary = "\n".join(f"{r['check']}: {'ok' if r['ok'] else 'VIOLATION'}" for r in reports)
        status = 0 if all(r["ok"] for r in reports) else 1
        text = _json_doc(cfg, reports)
    else:
        law = BadCountLaw(cfg.n, cfg.q, cfg.b)
        table = bad_count_table(law)
        mn = mn_measure(law)
        summary = f"n={law.n} q={law.q} b={law.b}: |M_n| = {float(mn):.17g} (threshold m <= {law.threshold})"
        if fmt == "json":
            text = _json_doc(cfg, {"table": [{"m": m, "measure": _frac(x), "real": float(x)} for m, x in table],
                                   "mn_measure": _frac(mn), "mn_real": float(mn), "threshold": law.threshold})
        else:
            text = _csv_text(cfg, ["m", "measure", "real"], [[m, _frac(x), repr(float(x))] for m, x in table])
    return status, summary, text


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command", None)
    try:
        file_text = None
        if "config" in args:
            path = args.pop("config")
            try:
                file_text = Path(path).read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from None
        cfg = parse_config(file_text, dict(args, command=command) if command else args)
        status, summary, text = execute(cfg)
        if cfg.output:
            try:
                Path(cfg.output).write_text(text)
            except OSError as exc:
                raise ConfigError(f"cannot write {cfg.output}: {exc}") from None
        else:
            summary = summary + "\n" + text.rstrip("\n")
    except (ConfigError, ValueError) as exc:
        print(f"cocyclelab: error: {exc}", file=sys.stderr)
        return 2
    print(summary)
    return status


if __name__ == "__main__":
    sys.exit(main())
