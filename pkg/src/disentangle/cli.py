"""Command-line front end: ``disentangle <command> --input FILE [options]``.

Every run prints one JSON report on stdout.  Exit status is 0 on success, 2
when a computed factorisation fails verification and 1 when nothing could be
computed (bad input, contract violation); errors also print a single
``ERROR <CODE> <message>`` line on stderr.

JSON has no infinities, so non-finite numbers are written as the strings
``"inf"``, ``"-inf"`` and ``"nan"`` (log-coefficients of inactive keys are
``"-inf"``).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import re
import sys
import time
from contextlib import contextmanager

import numpy as np

from .core import (
    InstanceError,
    ProblemInstance,
    dumps_canonical,
    instance_from_dict,
    instance_to_dict,
)
from .factorize import (
    DEFAULT_TOL,
    Factorisation,
    VerificationReport,
    build_factorisation,
    default_schedule,
    identity_check,
    q_sweep,
    verify_factorisation,
)
from .optimize import Extremizer, OracleConfig, SolveConfig, brute_force_search, maximize
from .saturation import (
    check_saturation,
    check_strong_saturation,
    composite_support_check,
    dummy_lift,
    greedy_cover,
    upgrade_instance,
)

COMMANDS = ("solve", "oracle", "factorize", "verify", "saturate", "upgrade", "lift", "sweep")
EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


class UsageError(InstanceError):
    def __init__(self, message: str):
        super().__init__(message, "E_USAGE")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="disentangle", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--input", required=True, metavar="PATH",
                   help="instance JSON (or a report whose results carry an instance)")
    p.add_argument("--q", type=float, help="override the instance exponent")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL,
                   help="relative verification slack (default %(default)g)")
    p.add_argument("--restarts", type=int, default=SolveConfig.restarts)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-resolution", type=int, dest="grid_resolution",
                   help="oracle grid steps per simplex coordinate")
    p.add_argument("--schedule", default="1..12", metavar="M1..M2",
                   help="sweep over q = 1 - 2**-m for m in M1..M2 (default %(default)s)")
    p.add_argument("--output", metavar="PATH", help="also write the report here")
    p.add_argument("--pretty", action="store_true", help="indent the JSON report")
    return p


# --------------------------------------------------------------------------
# JSON helpers

def jsonable(x):
    """Plain JSON types, with non-finite floats spelled as strings."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return x


def _number_or_marker(x) -> float:
    if x in ("inf", "-inf", "nan"):
        return float(x)
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise InstanceError(f"expected a number, got {x!r}", "E_SCHEMA")
    return float(x)


def digest(instance: ProblemInstance) -> dict:
    canon = dumps_canonical(instance_to_dict(instance))
    return {
        "sha256": hashlib.sha256(canon.encode()).hexdigest(),
        "atoms": instance.space.n_atoms,
        "support": int(instance.space.support.sum()),
        "d": instance.d,
        "keys": [f.n_keys for f in instance.families],
        "theta": [float(t) for t in instance.theta],
        "q": instance.q,
    }


def read_input(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InstanceError(f"cannot read {path}: {exc.strerror}", "E_IO") from None
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path} is not valid JSON: {exc}", "E_JSON") from None
    if not isinstance(data, dict):
        raise InstanceError("top-level JSON value must be an object", "E_SCHEMA")
    # reports from `upgrade` and `lift` carry a re-ingestible instance
    if "atoms" not in data and isinstance(data.get("results"), dict) \
            and "instance" in data["results"]:
        return data["results"]["instance"]
    return data


def parse_schedule(text: str) -> list[float]:
    m = re.fullmatch(r"\s*(\d+)\s*\.\.\s*(\d+)\s*", text)
    if not m:
        raise UsageError(f"--schedule must look like M1..M2, got {text!r}")
    lo, hi = int(m.group(1)), int(m.group(2))
    if lo < 1 or hi < lo:
        raise UsageError("--schedule needs 1 <= M1 <= M2")
    return default_schedule(lo, hi)


# --------------------------------------------------------------------------
# result payloads

def extremizer_payload(ext: Extremizer, instance: ProblemInstance) -> dict:
    return {
        "value": ext.value,
        "g": [dict(zip(f.keys, g.tolist())) for f, g in zip(instance.families, ext.g)],
        "log_g": [dict(zip(f.keys, lg.tolist())) for f, lg in zip(instance.families, ext.log_g)],
        "transformed": [t.tolist() for t in ext.transformed],
        "log_positivity_margin": ext.log_positivity_margin,
        "flags": [{"slot": j, "atom": a} for j, a in ext.flags],
        "kkt_gap": ext.kkt_gap,
        "converged": ext.converged,
        "restart": ext.restart,
        "iterations": ext.iterations,
    }


def report_payload(rep: VerificationReport, instance: ProblemInstance) -> dict:
    return {
        "passed": rep.passed,
        "q": rep.q,
        "constant": rep.constant,
        "tolerance": rep.tolerance,
        "geometric_bound": rep.geometric_bound,
        "geometric_ok": rep.geometric_ok,
        "componentwise": [dict(zip(f.keys, c.tolist()))
                          for f, c in zip(instance.families, rep.componentwise)],
        "failures": [{"slot": j, "key": k} for j, k in rep.failures],
    }


class _Timer:
    def __init__(self):
        self.timings: dict[str, float] = {}

    @contextmanager
    def phase(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - t0


def _solve_config(args) -> SolveConfig:
    try:
        return SolveConfig(restarts=args.restarts, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _oracle_config(args) -> OracleConfig:
    try:
        return OracleConfig(resolution=args.grid_resolution)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_solve(inst, args, raw, timer):
    with timer.phase("solve"):
        ext = maximize(inst, _solve_config(args))
    return extremizer_payload(ext, inst), EXIT_OK


def cmd_oracle(inst, args, raw, timer):
    with timer.phase("oracle"):
        res = brute_force_search(inst, _oracle_config(args))
    return {
        "constant": res.value,
        "g": [r.tolist() for r in res.g],
        "resolutions": list(res.resolutions),
        "n_points": res.n_points,
        "grid_bound": res.grid_bound,
        "holder_bound": res.holder_bound,
        "concavity_bound": res.concavity_bound,
    }, EXIT_OK


def cmd_factorize(inst, args, raw, timer):
    with timer.phase("solve"):
        ext = maximize(inst, _solve_config(args))
    with timer.phase("build"):
        fac = build_factorisation(ext, inst)
    with timer.phase("verify"):
        rep = verify_factorisation(inst, fac, args.tol)
        gap = identity_check(ext, inst)
    payload = {
        "extremizer": extremizer_payload(ext, inst),
        "phi": [p.tolist() for p in fac.phi],
        "log_phi": [p.tolist() for p in fac.log_phi],
        "constant": fac.constant,
        "identity_discrepancy": gap,
        "verification": report_payload(rep, inst),
    }
    return payload, EXIT_OK if rep.passed else EXIT_FAIL


def cmd_verify(inst, args, raw, timer):
    if "phi" not in raw or "constant" not in raw:
        raise InstanceError("verify needs 'phi' and 'constant' next to the instance", "E_SCHEMA")
    try:
        phi = tuple(np.array([_number_or_marker(x) for x in row], dtype=float)
                    for row in raw["phi"])
    except TypeError:
        raise InstanceError("'phi' must be a list of per-slot lists", "E_SCHEMA") from None
    if len(phi) != inst.d or any(p.shape != (inst.space.n_atoms,) for p in phi):
        raise InstanceError(f"'phi' must hold {inst.d} lists of {inst.space.n_atoms} values",
                            "E_DIMENSION")
    constant = _number_or_marker(raw["constant"])
    with timer.phase("verify"):
        rep = verify_factorisation(inst, Factorisation(phi, constant, inst.q), args.tol)
    return report_payload(rep, inst), EXIT_OK if rep.passed else EXIT_FAIL


def cmd_saturate(inst, args, raw, timer):
    with timer.phase("saturate"):
        fams = []
        for fam in inst.families:
            cover = greedy_cover(inst.space, fam)
            fams.append({
                "saturating": check_saturation(inst.space, fam),
                "strong_key": check_strong_saturation(inst.space, fam),
                "strong": check_strong_saturation(inst.space, fam) is not None,
                "cover": {"chosen": list(cover.chosen), "gains": list(cover.gains),
                          "covers": cover.covers, "residual_mass": cover.residual_mass},
            })
        composite = composite_support_check(inst.space, inst.families)
    return {"families": fams, "composite_saturating": composite}, EXIT_OK


def cmd_upgrade(inst, args, raw, timer):
    with timer.phase("upgrade"):
        up_inst, up = upgrade_instance(inst)
    return {
        "instance": instance_to_dict(up_inst),
        "w": up.w.tolist(),
        "aggregate_keys": list(up.aggregate_keys),
        "aggregates": [a.tolist() for a in up.aggregates],
    }, EXIT_OK


def cmd_lift(inst, args, raw, timer):
    with timer.phase("lift"):
        lifted = dummy_lift(inst)
    return {"instance": instance_to_dict(lifted)}, EXIT_OK


def cmd_sweep(inst, args, raw, timer):
    schedule = parse_schedule(args.schedule)
    with timer.phase("sweep"):
        res = q_sweep(inst, schedule, _solve_config(args), args.tol)
    swept = res.instance
    points = []
    for p in res.points:
        points.append({
            "q": p.q,
            "constant": p.factorisation.constant,
            "normalized_phi": [x.tolist() for x in p.normalized_phi],
            "passed": p.report.passed,
            "geometric_bound": p.report.geometric_bound,
            "worst_componentwise_ratio": p.report.worst_componentwise_ratio,
            "converged": p.extremizer.converged,
            "log_positivity_margin": p.extremizer.log_positivity_margin,
        })
    violations = [{"q_factorisation": m.q_factorisation, "q_checked": m.q_checked}
                  for m in res.monotonicity if not m.report.passed]
    payload = {
        "schedule": list(res.schedule),
        "upgraded": res.upgrade is not None,
        "swept_digest": digest(swept)["sha256"],
        "points": points,
        "monotonicity": {"checks": len(res.monotonicity), "violations": violations},
        "limit_estimate": [x.tolist() for x in res.limit_estimate],
        "passed": res.passed,
    }
    return payload, EXIT_OK if res.passed else EXIT_FAIL


HANDLERS = {
    "solve": cmd_solve, "oracle": cmd_oracle, "factorize": cmd_factorize,
    "verify": cmd_verify, "saturate": cmd_saturate, "upgrade": cmd_upgrade,
    "lift": cmd_lift, "sweep": cmd_sweep,
}


def run(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    """Execute one command; returns the exit status."""
    argv = list(sys.argv[1:] if argv is None else argv)
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    timer = _Timer()
    report: dict = {"argv": argv, "command": None, "seed": None}
    pretty = "--pretty" in argv
    output = None
    try:
        args = build_parser().parse_args(argv)
        report.update(command=args.command, seed=args.seed)
        pretty, output = args.pretty, args.output
        with timer.phase("load"):
            raw = read_input(args.input)
            inst = instance_from_dict(raw)
            if args.q is not None:
                inst = inst.with_q(args.q)
        report["digest"] = digest(inst)
        payload, code = HANDLERS[args.command](inst, args, raw, timer)
        report["results"] = payload
        report["status"] = "pass" if code == EXIT_OK else "fail"
    except ValueError as exc:  # InstanceError and numeric contract violations
        code = EXIT_ERROR
        exc.code = getattr(exc, "code", "E_VALUE")
        report["status"] = "error"
        report["error"] = {"code": exc.code, "message": str(exc)}
        print(f"ERROR {exc.code} {' '.join(str(exc).split())}", file=stderr)
    report["exit_code"] = code
    report["timings"] = timer.timings
    text = dumps_canonical(jsonable(report), pretty=pretty)
    stdout.write(text)
    if output:
        try:
            with open(output, "w") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"ERROR E_IO cannot write {output}: {exc.strerror}", file=stderr)
            return EXIT_ERROR
    return code


def main() -> None:
    sys.exit(run())
