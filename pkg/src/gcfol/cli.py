"""Command line front end: ``gcfol <command> <scenario-file> [options]``.

Exit codes: 0 positive verdict or all checks pass, 1 obstructed or a check
failed, 2 solver incomplete, 3 bad input, 4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import replace
from pathlib import Path

from .calculus import verify_relations
from .cohomology import dS_class, gauss_manin, is_flat, is_pluriharmonic
from .errors import GcfolError, InvariantViolation, ScenarioSemanticError, ScenarioSyntaxError
from .forms import Scenario
from .obstruction import OBSTRUCTED, check_equivariance, decide
from .scenario_io import BUNDLED, bundled_path, parse_scenario
from .spinors import (
    annihilator,
    canonical_spinor,
    evaluate_form,
    is_isotropic,
    random_points,
    real_rank_zero,
    type_at,
)

COMMANDS = ("decide", "relations", "cohomology", "pluriharmonic", "spinor-check", "equivariance")
EXIT_INPUT = 3
EXIT_INTERNAL = 4


def _yes(flag: bool) -> str:
    return "yes" if flag else "no"


def _point_dict(pt) -> dict:
    return {"fibre": [str(v) for v in pt.fibre], "base": [str(v) for v in pt.base]}


def _header(command: str, sc: Scenario) -> dict:
    return {
        "command": command,
        "scenario": {
            "name": sc.name,
            "hash": sc.fingerprint(),
            "fibre_rank": sc.fibre_rank,
            "base": sc.base_kind,
            "complex_dim": sc.complex_dim,
        },
        "settings": {
            "seed": sc.settings.seed,
            "trials": sc.settings.trials,
            "degree_cap": sc.settings.degree_cap,
        },
    }


def _form(a) -> str | None:
    return None if a is None else str(a)


def _decide(sc: Scenario, doc: dict):
    r = decide(sc)
    doc.update({
        "verdict": r.verdict,
        "stage": r.stage,
        "label": r.label,
        "degree_cap": r.degree_cap,
        "phi": {k: str(v) for k, v in sorted(r.phi.items())},
        "classes": {k: r.class_text(k) for k in "ABC"},
        "alpha": _form(r.alpha),
        "beta": _form(r.beta),
        "H": _form(r.H),
        "checks": dict(r.checks),
        "notes": list(r.notes),
        "pointwise": [{"point": _point_dict(pt), "value": str(v)} for pt, v in r.pointwise],
    })
    if r.positive:
        h012 = r.H.project_degree((0, 1, 2))
        cy = r.checks.get("Calabi-Yau generator d_H-closed", False)
        lines = [f"GeneralizedComplex; H^{{0,1;2}} = {h012} (+conjugate); CalabiYau: {_yes(cy)}"]
    elif r.verdict == OBSTRUCTED:
        lines = [f"{r.label}; class != 0", f"harmonic residual: {r.class_text(r.stage)}"]
    elif r.classes.get(r.stage) is not None:
        lines = [r.label, f"unresolved residual: {r.class_text(r.stage)}"]
    else:
        lines = [r.label]
    for pt, v in r.pointwise:
        lines.append(f"Phi^C at fibre={list(map(str, pt.fibre))} base={list(map(str, pt.base))}: {v}")
    lines.extend(f"note: {n}" for n in r.notes)
    return lines, r.exit_code


def _relations(sc: Scenario, doc: dict):
    rep = verify_relations(sc, trials=sc.settings.trials, seed=sc.settings.seed)
    doc.update({
        "ok": rep.ok,
        "trials": rep.trials,
        "checked": dict(rep.checked),
        "violation": None if rep.ok else {"relation": rep.violation[0], "residual": str(rep.violation[1])},
    })
    return [("relations: pass; " if rep.ok else "relations: FAIL; ") + rep.summary()], 0 if rep.ok else 1


def _cohomology(sc: Scenario, doc: dict):
    c = dS_class(sc.omega())
    gm = gauss_manin(c)
    doc.update({"class": str(c), "gauss_manin": str(gm), "flat": gm.is_zero()})
    return [f"[omega] = {c}", f"Gauss-Manin [omega] = {gm}"], 0


def _pluriharmonic(sc: Scenario, doc: dict):
    c = dS_class(sc.omega())
    ph = is_pluriharmonic(c)
    fl = is_flat(c)
    doc.update({"pluriharmonic": ph, "flat": fl})
    return [f"pluriharmonic: {_yes(ph)}; flat: {_yes(fl)}"], 0 if ph else 1


def _spinor_check(sc: Scenario, doc: dict):
    rho = canonical_spinor(sc)
    pts = list(sc.sample_points) + random_points(sc, random.Random(sc.settings.seed), sc.settings.trials)
    rows, ok = [], True
    for pt in pts:
        val = evaluate_form(rho, pt)
        L = annihilator(val)
        row = {
            "point": _point_dict(pt),
            "pure": L.dim == val.algebra.n,
            "isotropic": is_isotropic(L),
            "real_rank_zero": real_rank_zero(val),
            "type": type_at(val),
        }
        ok = ok and row["pure"] and row["isotropic"] and row["real_rank_zero"] and row["type"] == sc.complex_dim
        rows.append(row)
    doc.update({"ok": ok, "points": rows})
    types = sorted({r["type"] for r in rows})
    line = (f"spinor-check: {'pass' if ok else 'FAIL'}; {len(rows)} points; "
            f"pure: {_yes(all(r['pure'] for r in rows))}; "
            f"real rank zero: {_yes(all(r['real_rank_zero'] for r in rows))}; type: {types}")
    return [line], 0 if ok else 1


def _equivariance(sc: Scenario, doc: dict):
    ok = check_equivariance(sc)
    doc.update({"ok": ok, "generators": len(sc.lattice)})
    if not sc.lattice:
        return ["equivariance: yes (no lattice generators)"], 0
    return [f"equivariance: {_yes(ok)} ({len(sc.lattice)} generators)"], 0 if ok else 1


_HANDLERS = {
    "decide": _decide,
    "relations": _relations,
    "cohomology": _cohomology,
    "pluriharmonic": _pluriharmonic,
    "spinor-check": _spinor_check,
    "equivariance": _equivariance,
}


def run(command: str, scenario: Scenario, seed=None, degree_cap=None, trials=None):
    """Run one command; returns ``(text, exit code, report dict)``."""
    if command not in _HANDLERS:
        raise ValueError(f"unknown command {command!r}; expected one of {list(COMMANDS)}")
    settings = scenario.settings
    if seed is not None:
        settings = replace(settings, seed=seed)
    if trials is not None:
        settings = replace(settings, trials=trials)
    if degree_cap is not None:
        settings = replace(settings, degree_cap=degree_cap)
    if settings != scenario.settings:
        scenario = replace(scenario, settings=settings)
    doc = _header(command, scenario)
    lines, code = _HANDLERS[command](scenario, doc)
    doc["exit_code"] = code
    return "\n".join(lines), code, doc


def resolve_scenario_path(arg: str) -> Path:
    """A file path, or the name of a bundled scenario (with or without ``.scn``)."""
    path = Path(arg)
    if path.exists():
        return path
    stem = path.name[:-4] if path.name.endswith(".scn") else path.name
    if stem in BUNDLED:
        return bundled_path(stem)
    raise FileNotFoundError(f"no scenario file {arg!r} and no bundled scenario of that name")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gcfol", description="Generalized complex structures on torus bundles.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("scenario", help="scenario file, or a bundled name such as t4_over_c.scn")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--degree-cap", type=int)
    ap.add_argument("--json", metavar="PATH", help="write the structured report here ('-' for stdout)")
    ap.add_argument("--trials", type=int)
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        path = resolve_scenario_path(args.scenario)
        scenario = parse_scenario(path.read_text())
        text, code, doc = run(args.command, scenario, args.seed, args.degree_cap, args.trials)
    except (OSError, ScenarioSyntaxError, ScenarioSemanticError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvariantViolation as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except GcfolError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(text)
    if args.json:
        payload = json.dumps(doc, indent=2, sort_keys=True) + "\n"
        if args.json == "-":
            sys.stdout.write(payload)
        else:
            Path(args.json).write_text(payload)
    return code


if __name__ == "__main__":
    sys.exit(main())
