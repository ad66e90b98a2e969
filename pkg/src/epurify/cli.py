"""Command-line front end.

    epurify scramble verify --construction mt --n 3 --t 1
    epurify protocol run --protocol simple-scrambling --construction mt --n 3 --t 1 --epsilon 0.1
    epurify protocol sweep --protocol simple-scrambling --n 3 --t 1 --epsilons 0.05,0.1,0.3
    epurify bounds table --n 3 --t 1,2 --epsilon 0.1
    epurify state make --input near-target --dim 8 --epsilon 0.1 --seed 7 --out state.json

Exit codes: 0 ok, 1 a check failed, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import bounds, protocols, qstate
from .protocols import SampleStats
from .scramble import build as build_scramble
from .scramble import extended_case_table, verify_scrambling

SCHEMA = "epurify/1"
EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2
CHECK_TOL = 1e-9
SIGMAS = 4.0

CONSTRUCTIONS = {"mt": "multiplication-table", "linear": "linear-function", "extended": "extended-linear"}


class UsageError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    protocol: str = "simple-scrambling"
    construction: str = "mt"
    n: int = 3
    t: int = 1
    d: int = 2
    s_rounds: int = 4
    epsilon: float = 0.1
    input: str = "near-target"
    diagonal: bool = False
    dim: int | None = None
    M: int = 2
    K: int = 1
    mode: str = "exact"
    runs: int = 10000
    seed: int | None = None
    state_seed: int | None = None
    workers: int = 1
    hadamard: bool | None = None
    out: str | None = None
    format: str = "json"
    no_timestamp: bool = False
    replay: str | None = None
    records: str | None = None

    def validate(self) -> ExperimentConfig:
        if self.protocol not in protocols.PROTOCOLS:
            raise UsageError(f"unknown protocol {self.protocol!r}; choose from {protocols.PROTOCOLS}")
        if self.mode not in ("exact", "sample"):
            raise UsageError("mode must be 'exact' or 'sample'")
        if self.mode == "sample" and self.seed is None:
            raise UsageError("sample mode needs --seed")
        if self.format not in ("json", "csv"):
            raise UsageError("format must be json or csv")
        if not 0.0 <= self.epsilon < 1.0:
            raise UsageError(f"epsilon must lie in [0, 1), got {self.epsilon}")
        if self.runs < 1:
            raise UsageError("runs must be positive")
        return self

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("out", "no_timestamp", "replay", "records", "workers"):
            out.pop(key)
        return out


def make_config(args: argparse.Namespace) -> ExperimentConfig:
    """Defaults, then the --config file, then explicit flags."""
    values: dict = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                values.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file: {exc}") from exc
    names = {f.name for f in fields(ExperimentConfig)}
    unknown = set(values) - names
    if unknown:
        raise UsageError(f"unknown config keys {sorted(unknown)}")
    for name in names:
        value = getattr(args, name, None)
        if value is not None and value is not False:
            values[name] = value
    return ExperimentConfig(**values)


# ---------------------------------------------------------------- output


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def dump_json(doc: dict) -> str:
    return json.dumps(_plain(doc), indent=2, sort_keys=True) + "\n"


def dump_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    keys = list(rows[0])
    for row in rows[1:]:
        keys += [k for k in row if k not in keys]
    writer = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _csv_cell(row.get(k)) for k in keys})
    return buf.getvalue()


def _csv_cell(value):
    value = _plain(value)
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True)
    return value


def emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def fail_usage(message: str, kind: str = "validation") -> int:
    sys.stderr.write(dump_json({"schema": SCHEMA, "error": message, "kind": kind}))
    return EXIT_USAGE


# ---------------------------------------------------------------- shared builders


def scramble_from(cfg: ExperimentConfig):
    construction = CONSTRUCTIONS.get(cfg.construction, cfg.construction)
    return build_scramble(construction, cfg.n, l=cfg.t, d=cfg.d)


def protocol_setup(cfg: ExperimentConfig) -> tuple[int, dict]:
    """Input dimension and protocol keyword parameters."""
    if cfg.protocol in ("simple-scrambling", "complete-scrambling"):
        perm = scramble_from(cfg)
        params = {"perm": perm, "use_hadamard": cfg.hadamard}
        if cfg.protocol == "complete-scrambling":
            params["s"] = cfg.s_rounds
        return perm.params.N, params
    if cfg.protocol == "hash-and-compare":
        return (cfg.dim or 1 << cfg.n), {"s": cfg.s_rounds}
    return (cfg.dim or 4), {"M": cfg.M, "K": cfg.K}


def make_input(cfg: ExperimentConfig, dim: int):
    seed = cfg.state_seed if cfg.state_seed is not None else (cfg.seed if cfg.seed is not None else 0)
    kind = cfg.input
    if kind == "max-entangled":
        return qstate.max_entangled(dim)
    if kind == "near-target":
        return qstate.random_state_near_target(dim, cfg.epsilon, cfg.diagonal, seed=seed)
    if kind == "adversarial-mix":
        return qstate.adversarial_state(dim, cfg.epsilon)
    try:
        state = qstate.load_state(kind)
    except OSError as exc:
        raise UsageError(f"cannot read input state {kind!r}: {exc}") from exc
    if state.dim != dim:
        raise UsageError(f"input state has dimension {state.dim}, protocol needs {dim}")
    return state


def is_diagonal(state) -> bool:
    members = state.states if isinstance(state, qstate.Ensemble) else (state,)
    return all(qstate.fidelity_with_diagonal(s) >= 1 - CHECK_TOL for s in members)


def compare(quantity: str, simulated: float, predicted: float, relation: str, slack: float = CHECK_TOL) -> dict:
    """relation 'eq': |sim - pred| <= slack; 'le': sim <= pred + slack; 'ge': sim >= pred - slack."""
    dev = simulated - predicted
    if relation == "eq":
        ok = abs(dev) <= slack
    elif relation == "le":
        ok = dev <= slack
    elif relation == "ge":
        ok = dev >= -slack
    else:
        ok = None
    return {
        "quantity": quantity,
        "simulated": simulated,
        "predicted": predicted,
        "relation": relation,
        "abs_deviation": abs(dev),
        "rel_deviation": abs(dev) / abs(predicted) if predicted else None,
        "slack": slack,
        "ok": ok,
    }


def _predict_params(cfg: ExperimentConfig, dim: int, params: dict, eps: float) -> dict:
    if cfg.protocol == "random-permutation":
        return {"N": dim, "M": cfg.M, "K": cfg.K}
    if cfg.protocol == "hash-and-compare":
        return {"S": 1 << cfg.s_rounds}
    p = params["perm"].params
    out = {"N": p.N, "L": p.L, "W": p.W}
    if cfg.protocol == "complete-scrambling":
        out.update(S=1 << cfg.s_rounds, K=p.K)
    return out


def exact_checks(cfg, state, dist, eps, pred: bounds.BoundSet, diagonal: bool) -> list[dict]:
    checks = [compare("probability_total", dist.total, 1.0, "eq")]
    proto = cfg.protocol
    if proto == "random-permutation":
        fid = dist.mean_fidelity()
        checks.append(compare("mean_fidelity", fid, pred.value("mean_fidelity_upper"), "le"))
        if diagonal and cfg.K == 1:
            checks.append(compare("mean_fidelity_diagonal", fid, bounds.random_permutation_prediction(state.dim, cfg.M, eps), "eq"))
    elif proto == "simple-scrambling":
        if diagonal and eps < 0.5:
            checks.append(compare("fail_probability", dist.fail_probability, pred.value("fail_probability"), "eq"))
            checks.append(compare("success_fidelity", dist.mean_fidelity(conditional=True), pred.value("success_fidelity"), "eq"))
            checks.append(compare("success_fidelity_bound", dist.mean_fidelity(conditional=True), pred.value("fidelity_lower"), "ge"))
    elif proto == "hash-and-compare":
        checks.append(compare("fail_probability", dist.fail_probability, pred.value("fail_upper"), "le"))
        groups = dist.grouped()
        if groups:
            checks.append(compare("min_success_fidelity", min(f for _, _, f in groups), pred.value("fidelity_lower"), "ge"))
        lam1 = dist.metadata["lambda_sq"][1] if "components" not in dist.metadata else sum(
            w * m["lambda_sq"][1] for w, m in zip(dist.metadata["weights"], dist.metadata["components"])
        )
        checks.append(compare("mean_lambda1_sq", lam1, pred.value("mean_lambda1_sq_upper"), "le"))
    elif proto == "complete-scrambling":
        checks.append(compare("fail_probability", dist.fail_probability, pred.value("fail_upper"), "le"))
        threshold = pred.value("fidelity_lower")
        succ = dist.success_probability
        good = sum(p for _, p, f in dist.grouped() if f >= threshold - CHECK_TOL)
        frac = good / succ if succ > 0 else 1.0
        checks.append(compare("good_fraction", frac, pred.value("good_fraction_lower"), "ge"))
    return checks


def _mean_ci(values) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return float("nan"), 0.0
    sem = values.std(ddof=1) / math.sqrt(values.size) if values.size > 1 else 0.0
    return float(values.mean()), float(SIGMAS * sem)


def sample_checks(cfg, state, records, eps, pred: bounds.BoundSet, diagonal: bool) -> tuple[dict, list[dict]]:
    stats = SampleStats.from_records(records)
    n = stats.runs
    fail_sigma = math.sqrt(max(stats.fail_rate * (1 - stats.fail_rate), 1.0 / n) / n) * SIGMAS
    summary = {
        "runs": n,
        "fails": stats.fails,
        "fail_rate": stats.fail_rate,
        "fail_ci": protocols.wilson_interval(stats.fails, n, SIGMAS),
    }
    fids = stats.success_fidelities
    if fids:
        mean_fid, fid_slack = _mean_ci(fids)
        summary.update(mean_success_fidelity=mean_fid, min_success_fidelity=min(fids))
    checks = []
    proto = cfg.protocol
    if proto == "random-permutation":
        checks.append(compare("mean_fidelity", mean_fid, pred.value("mean_fidelity_upper"), "le", fid_slack + CHECK_TOL))
    elif proto == "simple-scrambling":
        if diagonal and eps < 0.5:
            checks.append(compare("fail_rate", stats.fail_rate, pred.value("fail_probability"), "eq", fail_sigma))
    elif proto == "hash-and-compare":
        lam1 = [r.diagnostics["lambda_sq"][1] for r in records if "lambda_sq" in r.diagnostics]
        lam_mean, lam_slack = _mean_ci(lam1)
        summary["mean_lambda1_sq"] = lam_mean
        checks.append(compare("fail_rate", stats.fail_rate, pred.value("fail_upper"), "le", fail_sigma))
        checks.append(compare("mean_lambda1_sq", lam_mean, pred.value("mean_lambda1_sq_upper"), "le", lam_slack + CHECK_TOL))
        if fids and not isinstance(state, qstate.Ensemble):
            checks.append(compare("min_success_fidelity", min(fids), pred.value("fidelity_lower"), "ge"))
    elif proto == "complete-scrambling":
        checks.append(compare("fail_rate", stats.fail_rate, pred.value("fail_upper"), "le", fail_sigma))
        threshold = pred.value("fidelity_lower")
        succ = len(fids)
        good = sum(f >= threshold - CHECK_TOL for f in fids)
        frac = good / succ if succ else 1.0
        sigma = math.sqrt(max(frac * (1 - frac), 1.0 / max(succ, 1)) / max(succ, 1)) * SIGMAS
        summary["good_fraction"] = frac
        checks.append(compare("good_fraction", frac, pred.value("good_fraction_lower"), "ge", sigma))
    return summary, checks


def run_experiment(cfg: ExperimentConfig) -> tuple[dict, list]:
    """One protocol configuration -> (report, run records)."""
    dim, params = protocol_setup(cfg)
    state = make_input(cfg, dim)
    input_fid = qstate.fidelity(state)
    eps = max(0.0, 1.0 - input_fid)
    diagonal = is_diagonal(state)
    pred_eps = min(eps, 0.5 - 1e-12) if cfg.protocol != "random-permutation" else eps
    pred = bounds.predictions_for(cfg.protocol, pred_eps, **_predict_params(cfg, dim, params, eps))
    started = time.perf_counter()
    records = []
    if cfg.mode == "exact":
        dist = exact_distribution(cfg, state, params)
        result = dist.to_dict()
        checks = exact_checks(cfg, state, dist, eps, pred, diagonal)
    else:
        records = protocols.sample_runs(cfg.protocol, state, cfg.runs, cfg.seed, workers=cfg.workers, **params)
        result, checks = sample_checks(cfg, state, records, eps, pred, diagonal)
    report = {
        "schema": SCHEMA,
        "command": "protocol run",
        "config": cfg.to_dict(),
        "input": {"dim": dim, "fidelity": input_fid, "epsilon_effective": eps, "diagonal": diagonal},
        "predictions": pred.to_dict(),
        "result": result,
        "checks": checks,
        "passed": all(c["ok"] is not False for c in checks),
    }
    if not cfg.no_timestamp:
        report["wall_time"] = time.perf_counter() - started
    return report, records


def exact_distribution(cfg: ExperimentConfig, state, params: dict):
    if cfg.protocol == "random-permutation":
        return protocols.random_permutation_protocol(state, cfg.M, cfg.K)
    if cfg.protocol == "simple-scrambling":
        return protocols.simple_scrambling(state, params["perm"], params["use_hadamard"])
    if cfg.protocol == "hash-and-compare":
        return protocols.hash_and_compare(state, s=cfg.s_rounds)
    return protocols.complete_scrambling(state, params["perm"], s=cfg.s_rounds, use_hadamard=params["use_hadamard"])


# ---------------------------------------------------------------- commands


def cmd_scramble_verify(args) -> int:
    cfg = make_config(args)
    perm = scramble_from(cfg)
    report = verify_scrambling(perm, keep_counts=False)
    doc = {"schema": SCHEMA, "command": "scramble verify", **report.to_dict()}
    if perm.kind == "extended-linear":
        doc["case_table"] = extended_case_table(perm.args["d"])
    if cfg.format == "csv":
        emit(dump_csv([{k: v for k, v in doc.items() if k != "case_table"}]), cfg.out)
    else:
        emit(dump_json(doc), cfg.out)
    return EXIT_OK if report.passed else EXIT_CHECK


def cmd_protocol_run(args) -> int:
    cfg = make_config(args).validate()
    if cfg.replay:
        return _replay(cfg)
    report, records = run_experiment(cfg)
    if cfg.records and records:
        with open(cfg.records, "w") as fh:
            for rec in records:
                fh.write(json.dumps(_plain(rec.to_dict()), sort_keys=True) + "\n")
    if cfg.format == "csv":
        emit(dump_csv(report["checks"]), cfg.out)
    else:
        emit(dump_json(report), cfg.out)
    return EXIT_OK if report["passed"] else EXIT_CHECK


def _replay(cfg: ExperimentConfig) -> int:
    try:
        with open(cfg.replay) as fh:
            first = fh.readline()
        stored = json.loads(first)
        record = protocols.RunRecord.from_dict(stored)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise UsageError(f"cannot read run record: {exc}") from exc
    if record.protocol != cfg.protocol:
        raise UsageError(f"record is for {record.protocol!r}, config says {cfg.protocol!r}")
    dim, params = protocol_setup(cfg)
    state = make_input(cfg, dim)
    again = protocols.replay(record, state, **params)
    original = _plain(stored)
    replayed = _plain(again.to_dict())
    doc = {"schema": SCHEMA, "command": "protocol run --replay", "matches": original == replayed, "record": replayed}
    emit(dump_json(doc), cfg.out)
    return EXIT_OK if doc["matches"] else EXIT_CHECK


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}") from exc


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad integer list {text!r}") from exc


def cmd_protocol_sweep(args) -> int:
    base = make_config(args).validate()
    epsilons = _float_list(args.epsilons) if args.epsilons else [base.epsilon]
    rows, passed = [], True
    for eps in epsilons:
        cfg = ExperimentConfig(**{**asdict(base), "epsilon": eps}).validate()
        report, _ = run_experiment(cfg)
        passed &= report["passed"]
        row = {"protocol": cfg.protocol, "epsilon": eps, "input_fidelity": report["input"]["fidelity"]}
        res = report["result"]
        row["fail"] = res.get("fail_probability", res.get("fail_rate"))
        for check in report["checks"]:
            row[f"{check['quantity']}"] = check["simulated"]
            row[f"{check['quantity']}_predicted"] = check["predicted"]
            row[f"{check['quantity']}_ok"] = check["ok"]
        row["passed"] = report["passed"]
        rows.append(row)
    if base.format == "csv":
        emit(dump_csv(rows), base.out)
    else:
        emit(dump_json({"schema": SCHEMA, "command": "protocol sweep", "config": base.to_dict(), "rows": rows}), base.out)
    return EXIT_OK if passed else EXIT_CHECK


def bounds_rows(table: str, n_values, t_values, epsilons, construction="mt", d=2, dims=(4,), Ks=(1,), Ms=(2,)) -> list[dict]:
    rows = []
    if table == "absolute":
        for N in dims:
            for K in Ks:
                for M in Ms:
                    for eps in epsilons:
                        if not K <= M <= N * K:
                            continue
                        rows.append({
                            "N": N, "K": K, "M": M, "epsilon": eps,
                            "delta_min": bounds.absolute_delta(N, K, M, eps),
                            "fidelity_upper": bounds.absolute_upper_bound(N, K, M, eps),
                            "tight_construction": (N * K) % M == 0 and M % K == 0,
                        })
        return rows
    name = CONSTRUCTIONS.get(construction, construction)
    for n in n_values:
        for t in t_values:
            for eps in epsilons:
                if name == "multiplication-table":
                    if not 1 <= t < n:
                        continue
                    N, K, W, L = 2**n, 2**n - 1, 2 ** (n - t), 2**t
                elif name == "linear-function":
                    N, K, W, L = 4**n, 2**n + 1, 2**n, 2**n
                else:
                    N, K, W, L = 2 ** (d * n), (2 ** (d * n) - 1) // (2**n - 1), 2 ** ((d - 1) * n), 2**n
                S = 2 ** (2 * t)
                det = bounds.simple_scrambling_prediction(N, L, W, eps)
                prob = bounds.complete_scrambling_prediction(N, W, S, eps, K)
                rows.append({
                    "construction": name, "n": n, "t": t, "d": d if name == "extended-linear" else None,
                    "N": N, "K": K, "W": W, "L": L, "M_out": W * K, "epsilon": eps,
                    "det_fail": det.fail_probability,
                    "det_fidelity_exact": det.success_fidelity,
                    "det_delta_bound": 2 * W / N * eps,
                    "det_delta_row": W / N * eps,
                    "S": S, "prob_K": S * K,
                    "prob_delta": prob.delta,
                    "prob_delta_row": bounds.row_delta(t, eps) if W * 2**t == N else None,
                    "prob_p": prob.p, "prob_q": prob.q,
                })
    return rows


def cmd_bounds_table(args) -> int:
    fmt = args.format or "csv"
    epsilons = _float_list(args.epsilon) if args.epsilon else [0.1]
    rows = bounds_rows(
        args.table,
        _int_list(args.n) if args.n else [3],
        _int_list(args.t) if args.t else [1],
        epsilons,
        construction=args.construction or "mt",
        d=args.d or 2,
        dims=_int_list(args.dim) if args.dim else [4],
        Ks=_int_list(args.K) if args.K else [1],
        Ms=_int_list(args.M) if args.M else [2],
    )
    if fmt == "csv":
        emit(dump_csv(rows), args.out)
    else:
        emit(dump_json({"schema": SCHEMA, "command": "bounds table", "rows": rows}), args.out)
    return EXIT_OK


def cmd_state_make(args) -> int:
    cfg = make_config(args)
    dim = cfg.dim or (1 << cfg.n)
    state = make_input(cfg, dim)
    doc = qstate.to_document(state)
    emit(json.dumps(_plain(doc), sort_keys=True) + "\n", cfg.out)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--construction", help="mt | linear | extended")
    p.add_argument("--n", type=int, help="field degree")
    p.add_argument("--t", "--l", dest="t", type=int, help="split point l (multiplication table)")
    p.add_argument("--d", type=int, help="tuple length (extended construction)")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=["json", "csv"])


def _protocol_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--protocol", choices=list(protocols.PROTOCOLS))
    p.add_argument("--s-rounds", dest="s_rounds", type=int, help="hash rounds s, S = 2^s")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--input", help="max-entangled | near-target | adversarial-mix | path to state JSON")
    p.add_argument("--diagonal", action="store_true", default=None, help="near-target noise inside the diagonal subspace")
    p.add_argument("--dim", type=int, help="input dimension for random-permutation / hash-and-compare")
    p.add_argument("--M", type=int, help="output dimension (random permutation)")
    p.add_argument("--K", type=int, help="auxiliary dimension (random permutation)")
    p.add_argument("--mode", choices=["exact", "sample"])
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--state-seed", dest="state_seed", type=int, help="seed of the input generator (default --seed)")
    p.add_argument("--workers", type=int)
    p.add_argument("--hadamard", dest="hadamard", action="store_true", default=None)
    p.add_argument("--fourier", dest="hadamard", action="store_false")
    p.add_argument("--no-timestamp", dest="no_timestamp", action="store_true", default=None)
    p.add_argument("--replay", help="RunRecord JSON(L) file to reproduce")
    p.add_argument("--records", help="write sampled RunRecords as JSON lines")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="epurify", description="Entanglement purification simulator")
    sub = parser.add_subparsers(dest="group", required=True)

    scr = sub.add_parser("scramble").add_subparsers(dest="action", required=True)
    verify = scr.add_parser("verify", help="exhaustively verify a scrambling permutation")
    _common(verify)
    verify.set_defaults(func=cmd_scramble_verify)

    proto = sub.add_parser("protocol").add_subparsers(dest="action", required=True)
    run = proto.add_parser("run", help="run one protocol configuration")
    _common(run)
    _protocol_flags(run)
    run.set_defaults(func=cmd_protocol_run)
    sweep = proto.add_parser("sweep", help="run a protocol over several epsilons")
    _common(sweep)
    _protocol_flags(sweep)
    sweep.add_argument("--epsilons", help="comma-separated epsilons")
    sweep.set_defaults(func=cmd_protocol_sweep)

    bnd = sub.add_parser("bounds").add_subparsers(dest="action", required=True)
    table = bnd.add_parser("table", help="tabulate the closed-form predictions")
    table.add_argument("--table", choices=["scrambling", "absolute"], default="scrambling")
    table.add_argument("--construction")
    table.add_argument("--n", help="comma-separated field degrees")
    table.add_argument("--t", help="comma-separated t values")
    table.add_argument("--d", type=int)
    table.add_argument("--epsilon", help="comma-separated epsilons")
    table.add_argument("--dim", help="comma-separated N (absolute table)")
    table.add_argument("--K", help="comma-separated K (absolute table)")
    table.add_argument("--M", help="comma-separated M (absolute table)")
    table.add_argument("--out")
    table.add_argument("--format", choices=["json", "csv"])
    table.set_defaults(func=cmd_bounds_table)

    st = sub.add_parser("state").add_subparsers(dest="action", required=True)
    make = st.add_parser("make", help="write an input state file")
    _common(make)
    _protocol_flags(make)
    make.set_defaults(func=cmd_state_make)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except qstate.NormalizationError as exc:
        return fail_usage(str(exc), "normalization")
    except (UsageError, ValueError, KeyError) as exc:
        return fail_usage(str(exc))


if __name__ == "__main__":
    sys.exit(main())
