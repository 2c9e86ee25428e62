"""Command-line front end: ``ergokit <command> [options]``.

Exit codes: 0 ok, 1 a mathematical check failed, 2 usage error, 3 budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import construction, entropy, measures, pressure, shift, tracing
from .entropy import EpsScale
from .shift import BudgetExceeded, format_word, parse_word

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3
DEFAULT_SEED = 20240601


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# deterministic output


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON with sorted keys and floats at 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = sorted((str(k), v) for k, v in obj.items())
        body = ",\n".join(f"{pad}{json.dumps(k)}: {dumps(v, indent, _level + 1)}" for k, v in items)
        return "{\n" + body + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        body = ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj)
        return "[\n" + body + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


# ---------------------------------------------------------------------------
# config


@dataclass
class RunConfig:
    command: str
    params: dict[str, Any]
    files: dict[str, str] = field(default_factory=dict)
    seed: int = DEFAULT_SEED
    budget: int = shift.DEFAULT_BUDGET
    max_n: int = 24
    out: str | None = None
    fmt: str = "json"

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "params": self.params,
            "files": self.files,
            "seed": self.seed,
            "budget": self.budget,
            "max_n": self.max_n,
            "format": self.fmt,
        }


def _load_json(path: str) -> Any:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"file not found: {path}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from exc


def _threads() -> int | None:
    raw = os.environ.get("ERGOKIT_THREADS")
    if raw is None:
        return None
    try:
        v = int(raw)
    except ValueError:
        raise UsageError(f"ERGOKIT_THREADS must be a positive integer, got {raw!r}") from None
    if v < 1:
        raise UsageError(f"ERGOKIT_THREADS must be a positive integer, got {raw!r}")
    return v


def _space(cfg: RunConfig) -> shift.ShiftSpace:
    if "space" not in cfg.files:
        raise UsageError("--space is required")
    try:
        return shift.build_space(_load_json(cfg.files["space"]), cfg.budget)
    except shift.SpaceSpecError as exc:
        raise UsageError(f"{cfg.files['space']}: {exc}") from exc


def _measure(cfg: RunConfig, space=None) -> measures.MarkovMeasure:
    if "measure" in cfg.files:
        try:
            return measures.measure_from_dict(_load_json(cfg.files["measure"]))
        except (KeyError, ValueError) as exc:
            raise UsageError(f"{cfg.files['measure']}: {exc}") from exc
    if space is not None and isinstance(space, (shift.FullShift, shift.SFT)):
        return measures.MarkovMeasure.parry(space)
    raise UsageError("--measure is required")


def _potential(cfg: RunConfig, required: bool = True) -> pressure.PotentialSpec | None:
    if "potential" not in cfg.files:
        if required:
            raise UsageError("--potential is required")
        return None
    try:
        return pressure.PotentialSpec.from_dict(_load_json(cfg.files["potential"]))
    except (KeyError, ValueError) as exc:
        raise UsageError(f"{cfg.files['potential']}: {exc}") from exc


def _check_n(cfg: RunConfig, n: int, name: str = "--n") -> int:
    if n < 1:
        raise UsageError(f"{name} must be positive")
    if n > cfg.max_n:
        raise UsageError(f"{name}={n} exceeds --max-n {cfg.max_n}")
    return n


def _int_list(text: str, flag: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"{flag} must be comma-separated integers, got {text!r}") from None


def _scale(m: int) -> EpsScale:
    if m < 1:
        raise UsageError("--scale must be at least 1")
    return EpsScale(m)


# ---------------------------------------------------------------------------
# commands


@dataclass
class Outcome:
    result: dict
    checks: dict[str, bool] = field(default_factory=dict)
    csv: str | None = None


def cmd_language(cfg: RunConfig) -> Outcome:
    sp = _space(cfg)
    n = _check_n(cfg, cfg.params["n"])
    counts = [sp.count_language(k) for k in range(1, n + 1)]
    res: dict = {"space": sp.describe(), "counts": counts}
    if cfg.params.get("list"):
        res["words"] = [format_word(w) for w in sp.language(n)]
    rows = ["n,count"] + [f"{k},{c}" for k, c in enumerate(counts, start=1)]
    return Outcome(res, csv="\n".join(rows) + "\n")


def cmd_entropy(cfg: RunConfig) -> Outcome:
    sp = _space(cfg)
    est = entropy.entropy_estimate(sp, _check_n(cfg, cfg.params["n"]), _scale(cfg.params["scale"]))
    checks = {}
    if est.reference is not None:
        checks["slope_near_reference"] = abs(est.slope - est.reference) < 0.05
    return Outcome({"space": sp.describe(), **est.to_dict()}, checks, est.to_csv())


def cmd_separated(cfg: RunConfig) -> Outcome:
    sp = _space(cfg)
    n, scale = _check_n(cfg, cfg.params["n"]), _scale(cfg.params["scale"])
    rep = entropy.separated_count(sp, n, scale, cfg.params["method"])
    res = rep.to_dict()
    res["language_count"] = sp.count_language(scale.window(n))
    checks = {"equals_language_count": rep.count == res["language_count"]}
    if cfg.params.get("spanning"):
        res["spanning"] = entropy.spanning_count(sp, n, scale, cfg.params["method"])
        checks["spanning_equals_separated"] = res["spanning"] == rep.count
    if rep.certified is not None:
        checks["certified"] = bool(rep.certified)
    return Outcome(res, checks)


def cmd_qbound(cfg: RunConfig) -> Outcome:
    delta = cfg.params["delta"]
    if not 0 < delta < 0.5:
        raise UsageError(f"--delta must lie in (0, 1/2); got {delta!r}")
    n = _check_n(cfg, cfg.params["n"])
    rows = [entropy.q_count_and_bound(k, delta) for k in range(1, n + 1)]
    res = {"delta": delta, "series": [r.to_dict() for r in rows]}
    csv = "n,Q,rate,bound,gap\n" + "".join(f"{r.n},{r.Q},{r.rate!r},{r.bound!r},{r.gap!r}\n" for r in rows)
    return Outcome(res, {"bound_holds": all(r.holds for r in rows)}, csv)


def cmd_trace(cfg: RunConfig) -> Outcome:
    sp = _space(cfg)
    if "task" not in cfg.files:
        raise UsageError("--task is required")
    try:
        task = tracing.OrbitTask.from_dict(_load_json(cfg.files["task"]))
    except (KeyError, ValueError) as exc:
        raise UsageError(f"{cfg.files['task']}: {exc}") from exc
    scale = _scale(cfg.params["scale"])
    res: dict = {"task": task.to_dict()}
    z = cfg.params.get("tracer")
    if z is None:
        found = tracing.find_tracer(sp, task, scale, max_gap=cfg.params["max_gap"], node_budget=cfg.budget)
        res["found"] = found is not None
        if found is None:
            return Outcome(res, {"tracer_found": False})
        z = found.z
        task.gaps = found.gaps if task.mode == "gap" else task.gaps
        task.starts = found.starts if task.mode == "approx" else task.starts
        res["tracer"] = format_word(z)
        res["starts"] = found.starts
        if found.gaps is not None:
            res["gaps"] = found.gaps
    else:
        z = parse_word(z)
        res["tracer"] = format_word(z)
        for key in ("gaps", "starts"):
            if cfg.params.get(key):
                setattr(task, key, _int_list(cfg.params[key], "--" + key))
    try:
        rep = tracing.verify_trace(sp, z, task, scale)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    res["verification"] = rep.to_dict()
    return Outcome(res, {"verified": rep.ok})


def cmd_gap(cfg: RunConfig) -> Outcome:
    sp = _space(cfg)
    p = cfg.params
    scale = _scale(p["scale"])
    tasks = None
    if p["property"] in ("gluing", "specification") and p["max_len"]:
        tasks = tracing.exhaustive_pair_tasks(sp, scale, p["max_len"])
    est = tracing.estimate_gap(
        sp,
        scale,
        p["property"],
        tasks=tasks,
        max_M=p["max_M"],
        delta1=p["delta1"],
        delta2=p["delta2"],
        n_max=p["n_max"],
        samples=p["samples"],
        seed=cfg.seed,
    )
    return Outcome({"space": sp.describe(), **est.to_dict()})


def cmd_construct(cfg: RunConfig) -> Outcome:
    sp = _space(cfg)
    mu = _measure(cfg, sp)
    p = cfg.params
    try:
        rep = construction.run_construction(
            sp, mu, p["h0"], p["beta0"], p["eta0"], p["depth"], M=p["M"], strict=p["strict"], delta0=p["delta0"]
        )
    except construction.InfeasibleConstruction as exc:
        c = exc.constraint
        return Outcome({"infeasible": c.to_dict()}, {"feasible": False})
    except construction.GammaError as exc:
        return Outcome({"gamma_error": str(exc)}, {"gamma_built": False})
    checks = dict(rep.checks)
    ledger_ok = checks.pop("ledger")
    if p["strict"]:
        checks["ledger"] = ledger_ok
    return Outcome(rep.to_dict(), checks)


def cmd_measure(cfg: RunConfig) -> Outcome:
    mu = _measure(cfg)
    p = cfg.params
    n = _check_n(cfg, p["n"])
    scale = _scale(p["scale"])
    res = {
        "measure": mu.to_dict(depth=p["depth"]),
        "entropy": measures.markov_entropy(mu),
        "ergodic": mu.is_ergodic(),
        "katok": {
            repr(d): measures.katok_entropy_estimate(mu, n, scale, d) for d in p["delta"]
        },
    }
    return Outcome(res)


def cmd_pressure(cfg: RunConfig) -> Outcome:
    sp = _space(cfg)
    phi = _potential(cfg)
    mu = _measure(cfg) if "measure" in cfg.files else None
    try:
        rep = pressure.pressure_estimate(sp, phi, _check_n(cfg, cfg.params["n"]), _scale(cfg.params["scale"]), mu)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    checks = {}
    if rep.reference is not None and phi.errors is None:
        checks["matches_reference"] = abs(rep.value - rep.reference) < 1e-9
    if rep.measure_side is not None:
        checks["variational_inequality"] = rep.measure_side <= rep.upper[-1] + 0.05
    return Outcome({"potential": phi.to_dict(), **rep.to_dict()}, checks, rep.to_csv())


def _family(cfg: RunConfig):
    p = cfg.params
    if p["family"] == "bernoulli":
        lo = 0.0 if p["lo"] is None else p["lo"]
        hi = (0.5 if p["target_kind"] == "entropy" else 1.0) if p["hi"] is None else p["hi"]
        return pressure.BernoulliFamily(lo, hi)
    if "family" not in cfg.files:
        raise UsageError("--family markov-segment needs --family-file with P0 and P1")
    doc = _load_json(cfg.files["family"])
    unknown = set(doc) - {"P0", "P1"}
    if unknown or not {"P0", "P1"} <= set(doc):
        raise UsageError("family file needs exactly 'P0' and 'P1'")
    return pressure.MarkovSegment(tuple(map(tuple, doc["P0"])), tuple(map(tuple, doc["P1"])))


def cmd_spectrum(cfg: RunConfig) -> Outcome:
    p = cfg.params
    fam = _family(cfg)
    phi = _potential(cfg, required=p["target_kind"] != "entropy")
    try:
        res = pressure.spectrum_solve(fam, p["target_kind"], p["target_value"], phi)
    except pressure.TargetOutOfRange as exc:
        return Outcome({"error": str(exc), "attained": list(exc.attained)}, {"target_in_range": False})
    return Outcome({"family": fam.to_dict(), **res.to_dict()}, {"within_tolerance": res.error <= pressure.SOLVE_TOL})


def cmd_verify(cfg: RunConfig) -> Outcome:
    from .suites import run_suites

    results = run_suites(cfg.params["suite"], cfg.seed)
    checks = {f"{s}.{c['name']}": bool(c["ok"]) for s, items in results.items() for c in items}
    return Outcome({"suites": results}, checks)


COMMANDS: dict[str, Callable[[RunConfig], Outcome]] = {
    "language": cmd_language,
    "entropy": cmd_entropy,
    "separated": cmd_separated,
    "qbound": cmd_qbound,
    "trace": cmd_trace,
    "gap": cmd_gap,
    "construct": cmd_construct,
    "measure": cmd_measure,
    "pressure": cmd_pressure,
    "spectrum": cmd_spectrum,
    "verify": cmd_verify,
}

FILE_ARGS = ("space", "task", "measure", "potential", "family_file")


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--budget", type=int, default=shift.DEFAULT_BUDGET, help="max words enumerated")
    common.add_argument("--max-n", type=int, default=24)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=["json", "csv"], default="json")

    parser = _Parser(prog="ergokit", description="Finite-scale entropy and tracing toolkit for subshifts.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_):
        return sub.add_parser(name, help=help_, parents=[common])

    p = add("language", "count (and list) allowed words")
    p.add_argument("--space", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--list", action="store_true")

    p = add("entropy", "ln|L_{n+m-1}|/n series and slope")
    p.add_argument("--space", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--scale", type=int, default=1)

    p = add("separated", "maximal separated / minimal spanning cardinality")
    p.add_argument("--space", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--scale", type=int, default=1)
    p.add_argument("--method", choices=["cylinder", "brute-force"], default="cylinder")
    p.add_argument("--spanning", action="store_true")

    p = add("qbound", "subset count Q(n, delta) against the binary entropy bound")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)

    p = add("trace", "find or verify a tracing orbit")
    p.add_argument("--space", required=True)
    p.add_argument("--task", required=True)
    p.add_argument("--scale", type=int, default=1)
    p.add_argument("--tracer", help="candidate tracer word; searched for when omitted")
    p.add_argument("--max-gap", type=int, default=4)
    p.add_argument("--gaps", help="comma-separated gaps for a given --tracer")
    p.add_argument("--starts", help="comma-separated start times for a given --tracer")

    p = add("gap", "estimate a gluing / specification / approximate-product constant")
    p.add_argument("--space", required=True)
    p.add_argument("--property", choices=["gluing", "specification", "approximate"], default="gluing")
    p.add_argument("--scale", type=int, default=1)
    p.add_argument("--max-len", type=int, default=0, help="exhaustive pairs up to this length (0: sample)")
    p.add_argument("--max-M", type=int, default=6)
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--delta1", type=float)
    p.add_argument("--delta2", type=float)
    p.add_argument("--n-max", type=int, default=12)

    p = add("construct", "build the traced invariant set and check its counting bounds")
    p.add_argument("--space", required=True)
    p.add_argument("--measure")
    p.add_argument("--h0", type=float, required=True)
    p.add_argument("--beta0", type=float, required=True)
    p.add_argument("--eta0", type=float, required=True)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--M", type=int, default=10)
    p.add_argument("--delta0", type=float, default=0.1)
    p.add_argument("--strict", action="store_true", help="fail on the first violated parameter constraint")

    p = add("measure", "entropy, ergodicity and Katok estimates of a Markov measure")
    p.add_argument("--measure", required=True)
    p.add_argument("--n", type=int, default=14)
    p.add_argument("--scale", type=int, default=1)
    p.add_argument("--delta", type=float, nargs="+", default=[0.1, 0.2])
    p.add_argument("--depth", type=int, default=3)

    p = add("pressure", "pressure series of a locally constant potential")
    p.add_argument("--space", required=True)
    p.add_argument("--potential", required=True)
    p.add_argument("--measure")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--scale", type=int, default=1)

    p = add("spectrum", "solve for a family member with prescribed entropy / exponent / pressure")
    p.add_argument("--target", required=True, help="entropy=H, exponent=A or pressure=P")
    p.add_argument("--family", choices=["bernoulli", "markov-segment"], default="bernoulli")
    p.add_argument("--family-file")
    p.add_argument("--potential")
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)

    p = add("verify", "run invariant suites")
    p.add_argument(
        "--suite", default="all", choices=["all", "shift", "entropy", "tracing", "measures", "construction", "pressure"]
    )
    return parser


def parse_config(argv: list[str]) -> RunConfig:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    files = {}
    for key in FILE_ARGS:
        v = args.pop(key, None)
        if v is not None:
            files[key.replace("_file", "")] = v
            if not Path(v).is_file():
                raise UsageError(f"file not found: {v}")
    seed, budget, max_n = args.pop("seed"), args.pop("budget"), args.pop("max_n")
    out, fmt = args.pop("out"), args.pop("format")
    if seed < 0 or seed >= 2**64:
        raise UsageError("--seed must be a 64-bit unsigned integer")
    if budget < 1 or max_n < 1:
        raise UsageError("--budget and --max-n must be positive")
    if command == "spectrum":
        kind, sep, value = args.pop("target").partition("=")
        if not sep or kind not in ("entropy", "exponent", "pressure"):
            raise UsageError("--target must look like entropy=H, exponent=A or pressure=P")
        try:
            args["target_kind"], args["target_value"] = kind, float(value)
        except ValueError:
            raise UsageError(f"--target value {value!r} is not a number") from None
    return RunConfig(command, args, files, seed, budget, max_n, out, fmt)


def run_command(cfg: RunConfig) -> tuple[str, int]:
    outcome = COMMANDS[cfg.command](cfg)
    ok = all(outcome.checks.values())
    if cfg.fmt == "csv":
        if outcome.csv is None:
            raise UsageError(f"{cfg.command} has no CSV form")
        text = outcome.csv
    else:
        text = dumps({"config": cfg.to_dict(), "result": outcome.result, "checks": outcome.checks, "ok": ok}) + "\n"
    return text, EXIT_OK if ok else EXIT_CHECK


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        _threads()
        cfg = parse_config(argv)
        text, code = run_command(cfg)
    except UsageError as exc:
        print(f"ergokit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceeded as exc:
        print(f"ergokit: budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
