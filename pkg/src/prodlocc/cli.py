"""Command-line front end.

Every command prints one JSON report (or a CSV table for ``simulate
--format csv``) on stdout. Exit codes: 0 success, 2 usage or validation
error, 3 when ``verify`` disagrees with the expected verdict for a named
ensemble.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .core import NORM_TOL, OPT_TOL, RESIDUAL_TOL
from .discrimination import (
    P_MAX,
    chi_basis_protocol,
    optimize_povm,
    optimize_projective,
    protocol_from_dict,
    simulate_one_way,
)
from .ensembles import (
    EnsembleError,
    ProductEnsemble,
    bob_overlap_pairs,
    alice_overlap_pairs,
    computational,
    ensemble_to_dict,
    four_state,
    four_state_general,
    load_ensemble,
    nine_state,
    nine_state_general,
    save_ensemble,
)
from .nogo import (
    DOMINO_CORE_PAIRS,
    Verdict,
    feasibility_analysis,
    forced_structure,
    kraus_oracle_check,
    witness_is_valid,
)

SEED_ENV = "PRODLOCC_SEED"
DEFAULT_SEED = int(os.environ.get(SEED_ENV, "0"))

EXIT_OK, EXIT_USAGE, EXIT_MISMATCH = 0, 2, 3
SIG_DIGITS = 12

# expected first-round verdicts for the named families, keyed by (family, party)
EXPECTED_VERDICTS = {
    ("four", "alice"): Verdict.NO_PROGRESS,
    ("four", "bob"): Verdict.PROGRESS_POSSIBLE,
    ("four-general", "alice"): Verdict.NO_PROGRESS,
    ("four-general", "bob"): Verdict.PROGRESS_POSSIBLE,
    ("nine", "alice"): Verdict.NO_PROGRESS,
    ("nine", "bob"): Verdict.NO_PROGRESS,
    ("nine-general", "alice"): Verdict.NO_PROGRESS,
    ("nine-general", "bob"): Verdict.NO_PROGRESS,
    ("computational", "alice"): Verdict.PROGRESS_POSSIBLE,
    ("computational", "bob"): Verdict.PROGRESS_POSSIBLE,
}

_ANGLE = re.compile(
    r"^(?P<coef>[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)?\s*\*?\s*pi\s*(?:/\s*(?P<den>\d+(?:\.\d*)?))?$"
)


class UsageError(Exception):
    pass


def parse_angle(text: str) -> float:
    """Radians, either a decimal number or a ``[c*]pi[/d]`` literal."""
    t = text.strip().lower()
    try:
        return float(t)
    except ValueError:
        pass
    m = _ANGLE.match(t)
    if not m:
        raise UsageError(f"cannot parse angle {text!r}")
    coef = float(m["coef"]) if m["coef"] else 1.0
    den = float(m["den"]) if m["den"] else 1.0
    if den == 0:
        raise UsageError(f"zero denominator in angle {text!r}")
    return coef * math.pi / den


def parse_ensemble(spec: str) -> tuple[ProductEnsemble, str | None]:
    """Build an ensemble from a name spec or a file path; also return its family."""
    name, _, args = spec.partition(":")
    if name in ("four", "nine") and not args:
        return (four_state() if name == "four" else nine_state()), name
    if name == "four-general" and args:
        return four_state_general(parse_angle(args)), name
    if name == "nine-general" and args:
        vals = [parse_angle(a) for a in args.split(",")]
        if len(vals) != 4:
            raise UsageError("nine-general needs four angles eta,xi,theta,gamma")
        return nine_state_general(*vals), name
    if name == "computational" and args:
        try:
            da, db = (int(x) for x in args.split(","))
        except ValueError:
            raise UsageError("computational needs two integers dA,dB") from None
        return computational(da, db), name
    path = Path(spec)
    if path.is_file():
        return load_ensemble(path), None
    raise UsageError(f"unknown ensemble {spec!r}")


def _clean(x):
    """Round floats to fixed significant digits and make values JSON friendly."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [_clean(float(x.real)), _clean(float(x.imag))]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return None
        r = float(f"{x:.{SIG_DIGITS}g}")
        return 0.0 if r == 0 else r
    return x


def _ensemble_descriptor(spec: str, e: ProductEnsemble) -> dict:
    return {"spec": spec, "name": e.name, "d_A": e.d_A, "d_B": e.d_B, "states": len(e)}


def _pairs(raw) -> list:
    return [{"i": i, "j": j, "overlap": ov} for i, j, ov in raw]


def cmd_ensemble(args, e: ProductEnsemble, family) -> tuple[dict, int]:
    out: dict = {}
    if args.show:
        out["states"] = ensemble_to_dict(e)["states"]
    if args.validate:
        i, j, res = e.max_orthogonality_residual()
        out["validation"] = {
            "max_orthogonality_residual": res,
            "worst_pair": [i, j],
            "max_normalization_residual": e.max_normalization_residual(),
            "valid": res <= RESIDUAL_TOL,
        }
    if args.pairs:
        out["bob_overlap_pairs"] = _pairs(bob_overlap_pairs(e))
        out["alice_overlap_pairs"] = _pairs(alice_overlap_pairs(e))
    if args.save:
        save_ensemble(e, args.save)
        out["saved"] = str(args.save)
    return out, EXIT_OK


def _estimation(r) -> dict:
    d = {"per_state_success": list(r.per_state_success), "average_success": r.average_success}
    if r.parameters is not None:
        d["parameters"] = [
            {"gamma_weight": p.gamma_weight, "epsilon": p.epsilon, "delta": p.delta} for p in r.parameters
        ]
    return d


def cmd_optimize(args, e: ProductEnsemble, family) -> tuple[dict, int]:
    if args.mode == "projective":
        if e.d_A != 2:
            raise UsageError("projective mode needs a qubit on Alice's side")
        opt = optimize_projective(e)
        res = {
            "mode": "projective",
            "best_angle": opt.best_angle,
            "maximizers": list(opt.maximizers),
            "value": opt.result.average_success,
            **_estimation(opt.result),
        }
    else:
        if args.outcomes < 2:
            raise UsageError("--outcomes must be at least 2")
        kraus, r = optimize_povm(e, args.outcomes, iterations=args.iterations, seed=args.seed,
                                 restarts=args.restarts)
        res = {
            "mode": "povm",
            "outcomes": args.outcomes,
            "iterations": args.iterations,
            "restarts": args.restarts,
            "value": r.average_success,
            **_estimation(r),
            "kraus_operators": kraus.operators,
        }
    if family in ("four", "four-general"):
        res["p_max"] = P_MAX
        res["excess_over_p_max"] = res["value"] - P_MAX
    return res, EXIT_OK


def cmd_verify(args, e: ProductEnsemble, family) -> tuple[dict, int]:
    rep = feasibility_analysis(e, args.party)
    res: dict = {
        "party": rep.party.value,
        "constraint_pairs": [{"i": c.i, "j": c.j, "passive_overlap": c.passive_overlap} for c in rep.pairs],
        "nullspace_dim": rep.nullspace_dim,
        "nullspace_basis": [b.matrix for b in rep.nullspace_basis],
        "identity_residual": rep.identity_residual,
        "verdict": rep.verdict.value,
    }
    if rep.verdict is Verdict.NO_PROGRESS:
        fs = forced_structure(e, rep.party, rep)
        res["forced_structure"] = {
            "equal_weight_classes": fs.equal_weight_classes,
            "forced_branch_orthogonalities": fs.forced_branch_orthogonalities,
        }
    else:
        res["witness"] = None if rep.witness is None else rep.witness.matrix
        res["witness_valid"] = witness_is_valid(rep, e)
    if family in ("nine", "nine-general") and rep.party.value == "alice":
        sub = feasibility_analysis(e, "alice", pairs=DOMINO_CORE_PAIRS)
        fs = forced_structure(e, "alice", sub, require_no_progress=False)
        res["four_pair_subsystem"] = {
            "pairs": DOMINO_CORE_PAIRS,
            "nullspace_dim": sub.nullspace_dim,
            "equal_weight_classes": fs.equal_weight_classes,
            "forced_branch_orthogonalities": fs.forced_branch_orthogonalities,
        }
    if args.oracle_trials > 0:
        o = kraus_oracle_check(e, rep.party, trials=args.oracle_trials, seed=args.seed)
        res["oracle"] = {
            "trials": o.trials,
            "max_alpha_spread": o.max_alpha_spread,
            "max_overlap_deviation": o.max_overlap_deviation,
            "max_completeness_residual": o.max_completeness_residual,
        }
    code = EXIT_OK
    expected = EXPECTED_VERDICTS.get((family, rep.party.value)) if family else None
    if expected is not None:
        res["expected_verdict"] = expected.value
        res["matches_expected"] = expected is rep.verdict
        if expected is not rep.verdict:
            code = EXIT_MISMATCH
    return res, code


def cmd_simulate(args, e: ProductEnsemble, family) -> tuple[dict, int]:
    if args.protocol == "chi":
        proto = chi_basis_protocol()
    else:
        path = Path(args.protocol)
        if not path.is_file():
            raise UsageError(f"protocol file {args.protocol!r} not found")
        try:
            proto = protocol_from_dict(json.loads(path.read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise UsageError(f"protocol file is not valid JSON: {exc}") from None
    r = simulate_one_way(e, proto)
    return {"protocol": args.protocol, **_estimation(r)}, EXIT_OK


COMMANDS = {
    "ensemble": cmd_ensemble,
    "optimize": cmd_optimize,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="prodlocc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"prodlocc {__version__}")
    p.add_argument("--timing", action="store_true",
                   help="add wall-clock duration to the report (breaks byte-stability)")
    sub = p.add_subparsers(dest="command", required=True)
    ens_help = "four | four-general:THETA | nine | nine-general:ETA,XI,THETA,GAMMA | computational:DA,DB | FILE"

    s = sub.add_parser("ensemble", help="show, validate or list constraint pairs of an ensemble")
    s.add_argument("ensemble", help=ens_help)
    s.add_argument("--show", action="store_true")
    s.add_argument("--validate", action="store_true")
    s.add_argument("--pairs", action="store_true")
    s.add_argument("--save", metavar="PATH", help="write the ensemble file")

    s = sub.add_parser("optimize", help="optimal one-way estimation")
    s.add_argument("ensemble", help=ens_help)
    s.add_argument("--mode", choices=("projective", "povm"), default="projective")
    s.add_argument("--outcomes", type=int, default=2)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.add_argument("--iterations", type=int, default=60, help="max block sweeps per restart")
    s.add_argument("--restarts", type=int, default=1)

    s = sub.add_parser("verify", help="zero-error first-round feasibility analysis")
    s.add_argument("ensemble", help=ens_help)
    s.add_argument("--party", choices=("alice", "bob"), default="alice")
    s.add_argument("--oracle-trials", type=int, default=100)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)

    s = sub.add_parser("simulate", help="exact success probabilities of a one-way protocol")
    s.add_argument("ensemble", help=ens_help)
    s.add_argument("--protocol", default="chi", help="'chi' or a protocol JSON file")
    s.add_argument("--format", choices=("json", "csv"), default="json")
    return p


def _report(args, argv, spec, e, results, duration) -> dict:
    seeds = {"seed": args.seed} if hasattr(args, "seed") else {}
    doc = {
        "tool": "prodlocc",
        "version": __version__,
        "command": list(argv),
        "ensemble": _ensemble_descriptor(spec, e),
        "seeds": seeds,
        "tolerances": {"invariant": NORM_TOL, "residual": RESIDUAL_TOL, "optimization": OPT_TOL},
        "results": results,
    }
    if duration is not None:
        doc["wall_clock_seconds"] = duration
    return _clean(doc)


def _csv(r: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "success"])
    for i, v in enumerate(r["per_state_success"], start=1):
        w.writerow([i, f"{v:.{SIG_DIGITS}g}"])
    return buf.getvalue()


def main(argv=None, stdout=None, stderr=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    t0 = time.perf_counter()
    try:
        e, family = parse_ensemble(args.ensemble)
        results, code = COMMANDS[args.command](args, e, family)
    except (UsageError, EnsembleError, ValueError, IndexError) as exc:
        print(f"prodlocc: error: {exc}", file=stderr)
        return EXIT_USAGE
    duration = time.perf_counter() - t0 if args.timing else None
    if args.command == "simulate" and args.format == "csv":
        stdout.write(_csv(results))
    else:
        stdout.write(json.dumps(_report(args, argv, args.ensemble, e, results, duration), indent=2) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
