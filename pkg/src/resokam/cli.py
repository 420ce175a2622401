"""Command-line frontend.

One entry point, one seed, one threads knob.  Every subcommand loads
its inputs, runs the corresponding library call, writes a JSON report
(plus CSV/SVG side files where they apply) into the output directory,
and prints a single summary line.  Exit codes: 0 success, 2 parameter
or validation problems, 3 a detected invariant violation (the report
carries the witness), 1 anything unexpected.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import covering, report, resgraph, svgplot
from .errors import (BracketError, CertificationError, DomainError,
                     InvariantViolation, ModelAssumptionError, ParameterError,
                     ResokamError, UnsupportedPlotError)
from .lattice import enumerate_generators, unimodular_completion
from .model import covering_params, load_model, load_params, validate_constants
from .rng import resolve_threads
from .secular import TrigPotential, standard_form

_PARAM_ERRORS = (ParameterError, DomainError, BracketError, UnsupportedPlotError)
_INVARIANT_ERRORS = (InvariantViolation, CertificationError, ModelAssumptionError)


def _ints(text: str) -> tuple:
    try:
        return tuple(int(p) for p in text.split(","))
    except ValueError:
        raise ParameterError(f"expected comma-separated integers, got {text!r}") from None


def _floats(text: str) -> tuple:
    try:
        return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise ParameterError(f"expected comma-separated reals, got {text!r}") from None


def _outdir(args) -> Path:
    out = Path(getattr(args, "outdir", ".") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config(args, **resolved) -> dict:
    # outdir and threads are execution placement, not part of the
    # numerical content; excluding them keeps reruns into fresh
    # directories (and 1- vs 8-worker runs) byte-identical
    skip = ("func", "outdir", "threads")
    opts = {k: v for k, v in vars(args).items() if k not in skip and v is not None}
    opts = {k: (str(v) if isinstance(v, Path) else v) for k, v in opts.items()}
    cfg = {"command": args.command, "options": opts}
    if resolved:
        cfg["resolved"] = resolved
    return cfg


def _load(args):
    mdl = load_model(args.spec)
    if getattr(args, "params", None):
        prm = load_params(mdl, args.params)
    else:
        prm = covering_params(mdl, eps=1e-24, K=12, K0=2)
    return mdl, prm


# -- subcommand handlers -------------------------------------------------------


def _cmd_lattice_enumerate(args) -> str:
    s = _floats(args.s) if args.s else None
    gens = enumerate_generators(args.n, args.K, s)
    out = _outdir(args) / "lattice_enumerate.csv"
    header = [f"k{i + 1}" for i in range(args.n)] + ["norm1", "normInf"]
    rows = [list(g.entries) + [g.norm1, g.norm_inf] for g in gens]
    report.write_csv(out, header, rows)
    return f"lattice enumerate: {len(gens)} generators with |k|_1 <= {args.K} -> {out}"


def _cmd_lattice_complete(args) -> str:
    k = _ints(args.k)
    frame = unimodular_completion(k)
    results = {
        "A": [list(r) for r in frame.A],
        "Ainv": [list(r) for r in frame.Ainv],
        "det": 1,
        "bounds_ok": True,
        "k": list(k),
        "radii": {"r_tilde_k": frame.r_tilde_k, "t_k": frame.t_k,
                  "frak_r": frame.frak_r, "varpi0": frame.varpi0,
                  "r_hat": frame.r_hat},
    }
    out = _outdir(args) / "lattice_complete.json"
    report.write_report(out, "lattice_complete", _config(args), results)
    return f"lattice complete: k = {list(k)} certified -> {out}"


def _cmd_model_validate(args) -> str:
    mdl = load_model(args.spec)
    res = validate_constants(mdl, samples=args.samples, seed=args.seed)
    out = _outdir(args) / "model_validate.json"
    report.write_report(out, "model_validate", _config(args, model=mdl.spec_dict()), res)
    nv = len(res["violations"])
    if nv:
        raise InvariantViolation(
            f"{nv} declared constant(s) fail empirically; see {out}",
            witness=res["violations"][0])
    return f"model validate: constants hold on {args.samples} samples -> {out}"


def _cmd_cover_classify(args) -> str:
    mdl, prm = _load(args)
    label = covering.classify(mdl, prm, _floats(args.y))
    out = _outdir(args) / "cover_classify.json"
    report.write_report(out, "cover_classify",
                        _config(args, model=mdl.spec_dict(), params=prm.to_dict()),
                        label.to_dict())
    zone = "R1" if label.simpleResonances else ("R0" if label.inR0 else "R2")
    return f"cover classify: y = {args.y} -> {zone} -> {out}"


def _cmd_cover_measure(args) -> str:
    mdl, prm = _load(args)
    rep = covering.estimate_measures(mdl, prm, samples=args.samples,
                                     seed=args.seed, threads=args.threads)
    out = _outdir(args) / "cover_measure.json"
    report.write_report(out, "cover_measure",
                        _config(args, model=mdl.spec_dict(), params=prm.to_dict()),
                        rep.to_dict())
    f = rep.fractions
    return (f"cover measure: R0 = {f['R0']:.4g}, R1 = {f['R1']:.4g}, "
            f"R2 = {f['R2']:.4g} on {args.samples} samples -> {out}")


def _cmd_cover_scan2d(args) -> str:
    mdl, prm = _load(args)
    axis = _ints(args.axis) if args.axis else (0, 1)
    xs, ys, labels = covering.scan2d(mdl, prm, grid=args.grid, axis=axis)
    outdir = _outdir(args)
    out = outdir / "cover_scan2d.csv"
    rows = [[xs[i], ys[j], int(labels[i, j])]
            for i in range(args.grid) for j in range(args.grid)]
    report.write_csv(out, ["y1", "y2", "label"], rows)
    extra = ""
    if args.svg:
        svg = outdir / "zones2d.svg"
        svgplot.zones2d_svg(svg, xs, ys, labels)
        extra = f", {svg}"
    return f"cover scan2d: {args.grid}x{args.grid} labels -> {out}{extra}"


def _graph_setup(args):
    mdl, prm = _load(args)
    rot = resgraph.build_rotated(mdl, _ints(args.k))
    return mdl, prm, rot


def _cmd_graph_build(args) -> str:
    mdl, _, rot = _graph_setup(args)
    graph = resgraph.build_graph(rot, nVarpi=args.nvarpi, perCube=args.percube,
                                 threads=args.threads)
    outdir = _outdir(args)
    csv_path = outdir / "graph.csv"
    n1 = rot.n - 1
    header = ["varpi"] + [f"yhat{i + 1}" for i in range(n1)] + ["eta", "residual"]
    rows = []
    for vi in range(graph.varpiGrid.size):
        for bi in range(graph.baseGrid.shape[0]):
            rows.append([graph.varpiGrid[vi], *graph.baseGrid[bi],
                         graph.eta[vi, bi], graph.residuals[vi, bi]])
    report.write_csv(csv_path, header, rows)
    out = outdir / "graph.json"
    results = {"summary": graph.summary(), "csv": csv_path.name,
               "frame": {"A": [list(r) for r in graph.frame.A],
                         "r_tilde_k": graph.frame.r_tilde_k,
                         "frak_r": graph.frame.frak_r,
                         "varpi0": graph.frame.varpi0}}
    report.write_report(out, "graph_build",
                        _config(args, model=mdl.spec_dict()), results)
    extra = ""
    if args.svg:
        svg = outdir / "graph.svg"
        svgplot.graph_svg(svg, graph)
        extra = f", {svg}"
    nv, nb = graph.eta.shape
    return f"graph build: k = {args.k}, {nv}x{nb} points, {len(graph.J)} cubes -> {out}{extra}"


def _cmd_graph_nonres(args) -> str:
    mdl, prm, rot = _graph_setup(args)
    rep = resgraph.check_nonresonance(rot, prm, samples=args.samples, seed=args.seed)
    out = _outdir(args) / "nonres.json"
    report.write_report(out, "graph_nonres",
                        _config(args, model=mdl.spec_dict(), params=prm.to_dict()),
                        rep.to_dict())
    if rep.degenerate:
        return f"graph nonres: degenerate (no cubes meet the resonance) -> {out}"
    return (f"graph nonres: pass fraction {rep.passFraction:.4g}, worst margin "
            f"{rep.worstMargin:.4g} -> {out}")


def _cmd_graph_certify(args) -> str:
    mdl, _, rot = _graph_setup(args)
    yhat = np.asarray(_floats(args.yhat), dtype=float)
    eta0 = resgraph.solve_eta(rot, 0.0, yhat)
    cert = resgraph.contraction_certificate(rot, np.concatenate([[eta0], yhat]))
    out = _outdir(args) / "certificate.json"
    report.write_report(out, "graph_certify",
                        _config(args, model=mdl.spec_dict()), cert)
    status = "passed" if cert["passed"] else "FAILED"
    return (f"graph certify: {status}, factor {cert['iteration']['empiricalFactor']:.3g}"
            f" -> {out}")


def _cmd_secular(args) -> str:
    mdl, _ = _load(args)
    rot = resgraph.build_rotated(mdl, _ints(args.k))
    pot = TrigPotential.from_file(args.potential)
    if args.yhat0:
        yhat0 = np.asarray(_floats(args.yhat0), dtype=float)
    else:
        cubes = resgraph.cube_decomposition(rot)
        if cubes.J:
            yhat0 = cubes.centers().mean(axis=0)
        else:
            yhat0 = np.zeros(rot.n - 1)
    data = standard_form(rot, pot, yhat0, eps=args.eps)
    out = _outdir(args) / "secular.json"
    report.write_report(out, "secular",
                        _config(args, model=mdl.spec_dict()), data.to_dict())
    extra = ""
    if args.svg:
        svg = _outdir(args) / "g0.svg"
        svgplot.g0_svg(svg, data)
        extra = f", {svg}"
    if data.degenerate:
        return f"secular: degenerate resonance (no parallel modes) -> {out}{extra}"
    sep = data.pendulumEnergies["separatrix"] if data.pendulumEnergies else float("nan")
    return f"secular: m_k = {data.m_k:.6g}, separatrix = {sep:.4g} -> {out}{extra}"


def _default_potential(n: int, K0: int) -> TrigPotential:
    # one cosine per low generator; every simple resonance gets a pendulum
    modes = {}
    for g in enumerate_generators(n, K0):
        modes[g.entries] = 0.5 + 0.0j
        modes[tuple(-v for v in g.entries)] = 0.5 + 0.0j
    return TrigPotential.from_modes(modes)


def _cmd_verify_all(args) -> str:
    mdl, prm = _load(args)
    threads = resolve_threads(args.threads)
    outdir = _outdir(args)
    results = {"violations": []}

    const = validate_constants(mdl, samples=512, seed=args.seed)
    results["constants"] = const
    results["violations"] += const["violations"]

    meas = covering.estimate_measures(mdl, prm, samples=args.samples,
                                      seed=args.seed, threads=threads)
    vol = mdl.domain.volume
    mc = meas.fractions["R2"] * vol
    bound_ok = mc <= meas.analyticR2Bound + 3.0 * meas.stderr["R2"] * vol
    results["measure"] = meas.to_dict()
    results["measure"]["mcTimesVolume"] = mc
    results["measure"]["boundHolds"] = bool(bound_ok)
    if not bound_ok:
        results["violations"].append({"check": "analytic R2 bound", "mc": mc,
                                      "bound": meas.analyticR2Bound})

    if args.potential:
        pot = TrigPotential.from_file(args.potential)
    else:
        pot = _default_potential(mdl.n, int(prm.K0))

    graphs = []
    for g in enumerate_generators(mdl.n, prm.K0):
        entry = {"k": list(g.entries)}
        rot = resgraph.build_rotated(mdl, g)
        rv = resgraph.validate_rotated(rot, samples=256, seed=args.seed)
        entry["rotated"] = rv
        results["violations"] += rv["violations"]
        cubes = resgraph.cube_decomposition(rot)
        if not cubes.J:
            entry["degenerate"] = True
            graphs.append(entry)
            continue
        graph = resgraph.build_graph(rot, nVarpi=9, perCube=3,
                                     threads=threads, cubes=cubes)
        entry["graph"] = graph.summary()
        yhat0 = cubes.centers()[len(cubes.J) // 2]
        eta0 = resgraph.solve_eta(rot, 0.0, yhat0)
        cert = resgraph.contraction_certificate(rot, np.concatenate([[eta0], yhat0]))
        entry["certificate"] = cert
        if not cert["passed"]:
            results["violations"].append({"check": "contraction certificate",
                                          "k": list(g.entries)})
        slab = prm.alpha / prm.C
        if slab <= rot.frame.varpi0:
            nr = resgraph.check_nonresonance(rot, prm, samples=1024,
                                             seed=args.seed, cubes=cubes)
            entry["nonres"] = nr.to_dict()
        else:
            entry["nonres"] = {"skipped": f"alpha/C = {slab:.3g} exceeds varpi0 = "
                                          f"{rot.frame.varpi0:.3g}"}
        sf = standard_form(rot, pot, yhat0, eps=prm.eps)
        entry["secular"] = sf.to_dict()
        graphs.append(entry)
    results["graphs"] = graphs

    out = outdir / "verify_all.json"
    report.write_report(out, "verify_all",
                        _config(args, model=mdl.spec_dict(), params=prm.to_dict()),
                        results)
    nv = len(results["violations"])
    if nv:
        raise InvariantViolation(f"verify-all found {nv} violation(s); see {out}",
                                 witness=results["violations"][0])
    return f"verify-all: OK ({len(graphs)} resonances, 0 violations) -> {out}"


# -- parser ----------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="resokam",
                                  description="resonance zone coverings, graphs, "
                                              "and secular data for convex models")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, spec=True, params=False, seed=False, threads=False):
        if spec:
            p.add_argument("--spec", required=True, help="model spec file (TOML/JSON)")
        if params:
            p.add_argument("--params", help="covering params file (eps, K, K0)")
        if seed:
            p.add_argument("--seed", type=int, default=0)
        if threads:
            p.add_argument("--threads", type=int, default=None)
        p.add_argument("--outdir", default=".", help="report output directory")

    lat = sub.add_parser("lattice", help="generator enumeration and frames").add_subparsers(
        dest="sub", required=True)
    p = lat.add_parser("enumerate")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--K", type=float, required=True)
    p.add_argument("--s", help="per-coordinate weights w1,...,wn")
    common(p, spec=False)
    p.set_defaults(func=_cmd_lattice_enumerate)
    p = lat.add_parser("complete")
    p.add_argument("--k", required=True, help="resonance vector k1,...,kn")
    common(p, spec=False)
    p.set_defaults(func=_cmd_lattice_complete)

    mod = sub.add_parser("model", help="model loading and validation").add_subparsers(
        dest="sub", required=True)
    p = mod.add_parser("validate")
    common(p, seed=True)
    p.add_argument("--samples", type=int, default=512)
    p.set_defaults(func=_cmd_model_validate)

    cov = sub.add_parser("cover", help="zone classification and measures").add_subparsers(
        dest="sub", required=True)
    p = cov.add_parser("classify")
    common(p, params=True)
    p.add_argument("--y", required=True, help="action point v1,...,vn")
    p.set_defaults(func=_cmd_cover_classify)
    p = cov.add_parser("measure")
    common(p, params=True, seed=True, threads=True)
    p.add_argument("--samples", type=int, required=True)
    p.set_defaults(func=_cmd_cover_measure)
    p = cov.add_parser("scan2d")
    common(p, params=True)
    p.add_argument("--grid", type=int, required=True)
    p.add_argument("--axis", help="coordinate pair, default 0,1")
    p.add_argument("--svg", action="store_true", help="also write zones2d.svg")
    p.set_defaults(func=_cmd_cover_scan2d)

    gr = sub.add_parser("graph", help="resonance graphs and certificates").add_subparsers(
        dest="sub", required=True)
    p = gr.add_parser("build")
    common(p, params=True, threads=True)
    p.add_argument("--k", required=True)
    p.add_argument("--nvarpi", type=int, default=9)
    p.add_argument("--percube", type=int, default=3)
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=_cmd_graph_build)
    p = gr.add_parser("nonres")
    common(p, params=True, seed=True)
    p.add_argument("--k", required=True)
    p.add_argument("--samples", type=int, default=10000)
    p.set_defaults(func=_cmd_graph_nonres)
    p = gr.add_parser("certify")
    common(p, params=True)
    p.add_argument("--k", required=True)
    p.add_argument("--yhat", required=True, help="adjacent actions v1,...,v(n-1)")
    p.set_defaults(func=_cmd_graph_certify)

    p = sub.add_parser("nonres", help="alias of graph nonres")
    common(p, params=True, seed=True)
    p.add_argument("--k", required=True)
    p.add_argument("--samples", type=int, default=10000)
    p.set_defaults(func=_cmd_graph_nonres)

    p = sub.add_parser("secular", help="fast-angle average and pendulum data")
    common(p)
    p.add_argument("--potential", required=True)
    p.add_argument("--k", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--yhat0", help="expansion point, defaults to the cube centroid")
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=_cmd_secular)

    p = sub.add_parser("verify-all", help="run every module check on one model")
    common(p, params=True, seed=True, threads=True)
    p.add_argument("--samples", type=int, default=1 << 17)
    p.add_argument("--potential")
    p.set_defaults(func=_cmd_verify_all)
    return top


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        print(args.func(args))
        return 0
    except _PARAM_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _INVARIANT_ERRORS as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 3
    except ResokamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to exit 1
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
