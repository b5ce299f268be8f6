"""Command-line entry point: scenario ingestion, task orchestration, and
machine-readable reports.

Every run writes deterministic JSON/CSV reports into the output directory
(sorted keys, fixed float formatting) plus PNG figures for the human reader.
Exit codes: 0 success, 2 validation failure, 3 task failure, 4 scenario
parse error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .builtins import builtin_names, get_builtin
from .conley import (VERDICT_NOT_ISOLATING, certify_periodic_orbit,
                     certify_region)
from .cubical import CubicalGrid
from .errors import (FilflowError, NoConvergence, NoReturn,
                     PairConstructionFailed, ScenarioError)
from .plots import (plot_continuation, plot_cubes, plot_orbit,
                    plot_trajectory)
from .poincare import SectionSpec, classify_orbit, find_periodic, validate_section
from .regularization import continuation_experiment
from .scenario import Scenario, apply_overrides, parse_scenario
from .semiflow import semiflow
from .system import Box, classify_point, validate_system

_TASK_ORDER = ("validate", "classify", "simulate", "detect", "conley",
               "regularize")
_OUT_ENV = "FILFLOW_OUT"


class _TaskFailure(Exception):
    """A task ran and failed; the payload still gets reported."""

    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload or {}


# ---------------------------------------------------------------------------
# report plumbing

def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_trajectory_csv(path, trajectory, nvars):
    cols = ["t"] + ["x%d" % (i + 1) for i in range(nvars)] + ["field"]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for arc in trajectory.arcs:
            fid = str(arc.field_id)
            for t, pt in zip(arc.times, np.asarray(arc.points, dtype=float)):
                row = ["%.17g" % t] + ["%.17g" % v for v in pt] + [fid]
                fh.write(",".join(row) + "\n")


def _spec_from_params(params):
    return SectionSpec(anchor=params["anchor"], normal=params["normal"],
                       radius=params["radius"],
                       crossing_sense=params.get("sense", "both"),
                       xi_window=params.get("xi_window", 1.0))


# ---------------------------------------------------------------------------
# builtin -> scenario

def _builtin_scenario(name: str) -> Scenario:
    bs = get_builtin(name)
    sysm = bs.system
    tasks = [("validate", {})]
    d = bs.defaults
    if "simulate" in d:
        tasks.append(("simulate", {"start": tuple(d["simulate"]["start"]),
                                   "time": float(d["simulate"]["time"])}))
    if "detect" in d:
        dd = d["detect"]
        sec = dd["section"]
        params = {"anchor": tuple(sec["anchor"]), "normal": tuple(sec["normal"]),
                  "radius": float(sec["radius"]), "sense": sec["sense"],
                  "xi_window": float(sec["xi_window"]),
                  "seed": tuple(dd["seed"]), "settle": float(dd["settle"]),
                  "max_iter": int(dd["max_iter"]), "t_cap": 200.0}
        if dd.get("region") is not None:
            params["region"] = tuple(tuple(c) for c in dd["region"])
        tasks.append(("detect", params))
    if "conley" in d:
        dc = dict(d["conley"])
        params = {"resolution": int(dc.get("resolution", 64)),
                  "bloat": int(dc.get("bloat", 1)),
                  "samples": int(dc.get("samples", 2)),
                  "pad": int(dc.get("pad", 4))}
        if dc.get("box") is not None:
            params["box"] = tuple(tuple(c) for c in dc["box"])
        if dc.get("tau") is not None:
            params["tau"] = float(dc["tau"])
        tasks.append(("conley", params))
    if "regularize" in d:
        tasks.append(("regularize", {"eps": tuple(float(e)
                                                  for e in d["regularize"]["eps"]),
                                     "t_cap": 200.0}))
    return Scenario(name=bs.name, dimension=sysm.nvars,
                    x_components=sysm.x_field.components,
                    y_components=sysm.y_field.components,
                    h=sysm.h, domain=sysm.domain,
                    tolerance_overrides={}, tasks=tuple(tasks))


# ---------------------------------------------------------------------------
# task runners (each returns a JSON-ready payload, raising _TaskFailure)

def _run_validate(system, params, out):
    rep = validate_system(system)
    payload = rep.to_dict()
    _write_json(os.path.join(out, "validation.json"), payload)
    return payload


def _run_classify(system, params, out):
    n = system.nvars
    samples = int(params.get("samples", 2000))
    per_axis = max(2, int(round(samples ** (1.0 / n))))
    axes = [np.linspace(system.domain.lo[i], system.domain.hi[i], per_axis)
            for i in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    counts = {}
    tangencies = []
    for p in pts:
        label, info = classify_point(system, p)
        counts[label.value] = counts.get(label.value, 0) + 1
        if info is not None and len(tangencies) < 50:
            tangencies.append(info.to_dict())
    payload = {"perAxis": per_axis, "points": int(len(pts)),
               "labelCounts": dict(sorted(counts.items())),
               "tangencies": tangencies}
    _write_json(os.path.join(out, "classification.json"), payload)
    return payload


def _run_simulate(system, params, out):
    traj = semiflow(system, np.asarray(params["start"], dtype=float),
                    float(params["time"]))
    _write_trajectory_csv(os.path.join(out, "trajectory.csv"), traj,
                          system.nvars)
    plot_trajectory(traj, system, os.path.join(out, "trajectory.png"))
    payload = {
        "status": traj.status,
        "switches": max(0, len(traj.arcs) - 1),
        "fieldSequence": [str(a.field_id) for a in traj.arcs],
        "finalPoint": [float(v) for v in traj.final_point],
        "finalTime": float(traj.arcs[-1].end_time),
    }
    _write_json(os.path.join(out, "simulate.json"), payload)
    return payload


def _run_detect(system, params, out):
    spec = _spec_from_params(params)
    try:
        orbit = find_periodic(system, spec, params["seed"],
                              max_iter=int(params.get("max_iter", 50)),
                              t_cap=float(params.get("t_cap", 200.0)),
                              settle=float(params.get("settle", 0.0)))
    except (NoConvergence, NoReturn, ValueError) as exc:
        raise _TaskFailure("orbit detection failed: %s" % exc)
    kinds = classify_orbit(orbit)
    certificate = None
    if params.get("region") is not None:
        lo, hi = params["region"]
        certificate = validate_section(system, Box(tuple(lo), tuple(hi)), spec)
    payload = orbit.to_dict()
    payload["classification"] = kinds
    payload["section"] = spec.to_dict()
    payload["sectionCertificate"] = (None if certificate is None
                                     else certificate.to_dict())
    _write_json(os.path.join(out, "orbit.json"), payload)
    plot_orbit(orbit, system, os.path.join(out, "orbit.png"), spec=spec)
    return payload, orbit, spec, certificate


def _run_conley(system, params, out, orbit=None, certificate=None):
    explicit_box = params.get("box") is not None
    if explicit_box and params.get("tau") is not None:
        grid = CubicalGrid(Box(tuple(params["box"][0]),
                               tuple(params["box"][1])),
                           int(params.get("resolution", 64)))
        report = certify_region(system, grid, grid.box,
                                float(params["tau"]),
                                bloat_cells=int(params.get("bloat", 1)),
                                samples_per_axis=int(params.get("samples", 2)),
                                section_certificate=certificate)
    else:
        if orbit is None:
            raise _TaskFailure(
                "the conley task needs a detected orbit (add a detect task) "
                "or an explicit box together with tau")
        box = None
        if explicit_box:
            box = Box(tuple(params["box"][0]), tuple(params["box"][1]))
        try:
            report = certify_periodic_orbit(
                system, orbit, box=box,
                resolution=int(params.get("resolution", 64)),
                tau=params.get("tau"),
                bloat_cells=int(params.get("bloat", 1)),
                samples_per_axis=int(params.get("samples", 2)),
                pad_cells=int(params.get("pad", 4)),
                section_certificate=certificate)
        except (ValueError, PairConstructionFailed) as exc:
            raise _TaskFailure("index-pair construction failed: %s" % exc)
    payload = report.to_dict()
    _write_json(os.path.join(out, "conley.json"), payload)
    report.neighborhood.write_csv(os.path.join(out, "cubes_neighborhood.csv"))
    report.exit_set.write_csv(os.path.join(out, "cubes_exit_set.csv"))
    report.invariant.write_csv(os.path.join(out, "cubes_invariant.csv"))
    plot_cubes(report, os.path.join(out, "conley.png"), orbit=orbit)
    if report.verdict == VERDICT_NOT_ISOLATING:
        raise _TaskFailure("neighborhood is not isolating at this resolution",
                           payload)
    return payload, report


def _run_regularize(system, params, out, orbit, spec, neighborhood=None):
    if orbit is None:
        raise _TaskFailure("the regularize task needs a detected orbit; "
                           "add a detect task to the scenario")
    report = continuation_experiment(system, neighborhood, spec,
                                     list(params["eps"]), orbit,
                                     t_cap=float(params.get("t_cap", 200.0)))
    payload = report.to_dict()
    _write_json(os.path.join(out, "continuation.json"), payload)
    plot_continuation(report, os.path.join(out, "continuation.png"))
    if not all(e["success"] for e in report.entries):
        raise _TaskFailure("continuation lost the orbit at some eps", payload)
    return payload


# ---------------------------------------------------------------------------
# orchestration

def _execute(scenario: Scenario, kinds, out) -> tuple[int, dict]:
    """Run the requested task kinds in scenario order; returns (exit, summary)."""
    system = scenario.system()
    summary = {
        "scenario": {"name": scenario.name,
                     "dimension": scenario.dimension,
                     "tasks": [k for k, _ in scenario.tasks]},
        "results": {},
    }
    results = summary["results"]

    # validation gates every run, requested or not
    vrep = _run_validate(system, {}, out)
    results["validate"] = {"ok": vrep["ok"], "issues": vrep["issues"]}
    if not vrep["ok"]:
        summary["exitCode"] = 2
        _write_json(os.path.join(out, "summary.json"), summary)
        print("validate: FAILED (%s)" % "; ".join(vrep["issues"]))
        return 2, summary
    print("validate: ok (%d surface samples)" % vrep["surfaceSamples"])

    orbit = spec = certificate = None
    conley_report = None
    exit_code = 0
    for kind, params in scenario.tasks:
        if kind not in kinds or kind == "validate":
            continue
        try:
            if kind == "classify":
                payload = _run_classify(system, params, out)
                results["classify"] = {"labelCounts": payload["labelCounts"]}
                print("classify: %s" % payload["labelCounts"])
            elif kind == "simulate":
                payload = _run_simulate(system, params, out)
                results["simulate"] = payload
                print("simulate: %s after %d switches"
                      % (payload["status"], payload["switches"]))
            elif kind == "detect":
                payload, orbit, spec, certificate = _run_detect(system,
                                                                params, out)
                results["detect"] = payload
                print("detect: %s orbit, period %.9f, closure %.2e"
                      % (orbit.kind, orbit.period, orbit.closure_error))
            elif kind == "conley":
                dparams = scenario.task("detect")
                if orbit is None and dparams is not None:
                    payload, orbit, spec, certificate = _run_detect(
                        system, dparams, out)
                    results["detect"] = payload
                    print("detect: %s orbit, period %.9f (for conley)"
                          % (orbit.kind, orbit.period))
                payload, conley_report = _run_conley(system, params, out,
                                                     orbit=orbit,
                                                     certificate=certificate)
                results["conley"] = payload
                print("conley: %s, betti %s"
                      % (payload["verdict"], payload["bettiPerDegree"]))
            elif kind == "regularize":
                dparams = scenario.task("detect")
                if orbit is None and dparams is not None:
                    payload, orbit, spec, certificate = _run_detect(
                        system, dparams, out)
                    results["detect"] = payload
                    print("detect: %s orbit, period %.9f (for regularize)"
                          % (orbit.kind, orbit.period))
                nbhd = (conley_report.neighborhood
                        if conley_report is not None else None)
                payload = _run_regularize(system, params, out, orbit, spec,
                                          neighborhood=nbhd)
                results["regularize"] = payload
                print("regularize: eps0 = %s" % payload["empiricalEps0"])
        except _TaskFailure as exc:
            results[kind] = {"error": str(exc), **exc.payload}
            print("%s: FAILED (%s)" % (kind, exc))
            exit_code = 3
            break
        except FilflowError as exc:
            results[kind] = {"error": str(exc)}
            print("%s: FAILED (%s)" % (kind, exc))
            exit_code = 3
            break
    summary["exitCode"] = exit_code
    _write_json(os.path.join(out, "summary.json"), summary)
    return exit_code, summary


# ---------------------------------------------------------------------------
# argument handling

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="filflow",
        description="Simulate piecewise-smooth systems, detect periodic "
                    "orbits, and certify them with a combinatorial index.")
    parser.add_argument("--version", action="version",
                        version="filflow %s" % __version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, blurb in (
            ("validate", "check the system for escaping regions and "
                         "unsupported tangencies"),
            ("classify", "label switching-surface points over a sample grid"),
            ("simulate", "integrate one trajectory and export it"),
            ("detect", "find a periodic orbit through a section map"),
            ("conley", "certify a detected orbit with an index pair"),
            ("regularize", "track the orbit through smooth blendings"),
            ("pipeline", "run every task the scenario declares, in order")):
        p = sub.add_parser(name, help=blurb)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--scenario", metavar="FILE",
                         help="scenario file to run")
        src.add_argument("--builtin", metavar="NAME",
                         choices=sorted(builtin_names()),
                         help="bundled example system")
        p.add_argument("--out", metavar="DIR",
                       default=os.environ.get(_OUT_ENV, "filflow-out"),
                       help="report directory (default $%s or ./filflow-out)"
                            % _OUT_ENV)
        p.add_argument("--set", metavar="KEY=VALUE", action="append",
                       default=[], dest="overrides",
                       help="override a scenario value, e.g. "
                            "detect.radius=0.8 or tolerances.rk_rtol=1e-6")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.scenario:
            with open(args.scenario) as fh:
                scenario = parse_scenario(fh.read())
        else:
            scenario = _builtin_scenario(args.builtin)
        if args.overrides:
            scenario = apply_overrides(scenario, args.overrides)
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 4
    except ScenarioError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 4

    if args.command == "pipeline":
        kinds = set(_TASK_ORDER)
    else:
        kinds = {args.command}
        if args.command != "validate" and scenario.task(args.command) is None:
            print("error: scenario %r declares no %s task"
                  % (scenario.name, args.command), file=sys.stderr)
            return 4

    os.makedirs(args.out, exist_ok=True)
    code, _ = _execute(scenario, kinds, args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
