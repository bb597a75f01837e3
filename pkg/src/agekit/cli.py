"""Command-line interface: input parsing, dispatch, reports and certificates.

Reports on stdout are byte-identical across runs with identical inputs,
caps, seed and version; wall-clock timings go to stderr so they never
perturb the determinism contract.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .ages import check_amalgamation, default_ap_cap
from .canonical import (
    default_realize_cap,
    enumerate_behaviours,
    greedy_extension_probe,
    serialize_behaviour,
)
from .certs import (
    bidef_certificate,
    core_certificate,
    definable_certificate,
    load_certificate,
    write_certificate,
)
from .core import compute_core, is_optimally_presented
from .decide import decide_bidef, decide_biint
from .definability import ep_expand, pp_definable, pp_expand, serialize_poly
from .errors import AgekitError, InputError
from .ktypes import default_level, enumerate_types, serialize_type
from .parser import Catalog, parse_formula, parse_input, render_class, render_reduct
from .reducts import OrbitUnion, compile_orbit_union, Reduct, Relation, FormulaDef
from .structures import render_literal
from .verify import VerificationFailure, verify_certificate

EXIT_YES = 0
EXIT_NO = 1
EXIT_PRECONDITION = 2
EXIT_INPUT_ERROR = 3


@dataclass
class Job:
    command: str
    files: list[str] = field(default_factory=list)
    mode: str = "fo"
    k: int | None = None
    realize_cap: int | None = None
    arity_cap: int | None = None
    ap_cap: int | None = None
    expand_arity: int | None = None
    jobs: int = 1
    seed: int = 0
    witness_out: str | None = None
    fmt: str = "text"
    options: dict = field(default_factory=dict)


def _load(files) -> Catalog:
    cat = Catalog()
    for f in files:
        path = Path(f)
        if not path.exists():
            raise InputError(f"no such file: {f}")
        parse_input(path.read_text(), cat)
    return cat


def _caps_line(**caps) -> str:
    parts = []
    for key, val in caps.items():
        parts.append(f"{key}={'default' if val is None else val}")
    return " ".join(parts)


class Report:
    """Accumulates a deterministic text report and its structured mirror."""

    def __init__(self, command: str):
        self.lines = [f"agekit {command}", f"version: {__version__}"]
        self.data = {"command": command, "version": __version__}

    def line(self, text: str, key: str | None = None, value=None):
        self.lines.append(text)
        if key is not None:
            self.data[key] = value if value is not None else text

    def block(self, header: str, body: str):
        self.lines.append(header)
        for raw in body.splitlines():
            self.lines.append(f"  {raw}")

    def emit(self, fmt: str) -> str:
        if fmt == "json":
            return json.dumps(self.data, indent=2, sort_keys=True) + "\n"
        return "\n".join(self.lines) + "\n"


def run(job: Job) -> tuple[int, str]:
    """Dispatch a job; returns (exit code, report text)."""
    handler = {
        "check": _run_check,
        "orbits": _run_orbits,
        "behaviours": _run_behaviours,
        "core": _run_core,
        "definable": _run_definable,
        "bidef": _run_decide,
        "biint": _run_decide,
        "verify": _run_verify,
        "probe": _run_probe,
    }[job.command]
    return handler(job)


def _run_check(job: Job) -> tuple[int, str]:
    cat = _load(job.files)
    rep = Report("check")
    rep.data["classes"] = {}
    worst = EXIT_YES
    for name in sorted(cat.classes):
        k = cat.classes[name]
        cap = job.ap_cap if job.ap_cap is not None else default_ap_cap(k)
        rep.line(f"class {name}: {len(k.bounds)} bounds "
                 f"(sizes {min((b.size for b in k.bounds), default=0)}"
                 f"..{k.max_bound_size})")
        entry = {"bounds": len(k.bounds), "ap_cap": cap}
        for strong in (False, True):
            label = "strong" if strong else "weak"
            result = check_amalgamation(k, cap, strong)
            if result.ok:
                rep.line(f"  amalgamation {label}: verified up to cap {cap}")
                entry[label] = "pass"
            else:
                b0, b1, b2 = result.counterexample
                rep.line(f"  amalgamation {label}: FAILS at cap {cap} with "
                         f"B0 = {render_literal(b0)}; B1 = {render_literal(b1)}; "
                         f"B2 = {render_literal(b2)}")
                entry[label] = "fail"
                worst = EXIT_PRECONDITION
        rep.data["classes"][name] = entry
    rep.line(f"verdict: {'OK' if worst == EXIT_YES else 'AMALGAMATION-FAILURE'}",
             "verdict", "OK" if worst == EXIT_YES else "AMALGAMATION-FAILURE")
    return worst, rep.emit(job.fmt)


def _pick_class(cat: Catalog, job: Job, option: str):
    name = job.options.get(option)
    return cat.bounded_class(name) if name else cat.sole_class()


def _run_orbits(job: Job) -> tuple[int, str]:
    cat = _load(job.files)
    k = _pick_class(cat, job, "class_name")
    level = job.k if job.k is not None else default_level(k)
    types = enumerate_types(k, level)
    rep = Report("orbits")
    rep.line(f"class: {k.name}")
    rep.line(f"caps: {_caps_line(k=level)}")
    rep.line(f"orbit count at level {level}: {len(types)}", "count", len(types))
    rep.data.update({"class": k.name, "k": level,
                     "orbits": [serialize_type(t) for t in types]})
    for t in types:
        rep.line(f"  {serialize_type(t)}")
    return EXIT_YES, rep.emit(job.fmt)


def _run_behaviours(job: Job) -> tuple[int, str]:
    cat = _load(job.files)
    src = cat.bounded_class(job.options.get("source") or cat.sole_class().name)
    tgt = cat.bounded_class(job.options.get("target") or src.name)
    level = job.k if job.k is not None else max(default_level(src), default_level(tgt))
    bs = enumerate_behaviours(src, tgt, level, realize_cap=job.realize_cap,
                              jobs=job.jobs)
    eff = job.realize_cap if job.realize_cap is not None else (
        default_realize_cap(bs[0]) if bs else None)
    rep = Report("behaviours")
    rep.line(f"source: {src.name}  target: {tgt.name}")
    rep.line(f"caps: {_caps_line(k=level, realize_cap=eff)}")
    rep.line(f"realizable behaviours: {len(bs)}", "count", len(bs))
    rep.data.update({"source": src.name, "target": tgt.name, "k": level,
                     "realize_cap": eff,
                     "behaviours": [serialize_behaviour(b) for b in bs]})
    for i, b in enumerate(bs):
        rep.block(f"behaviour {i}:", serialize_behaviour(b))
    return EXIT_YES, rep.emit(job.fmt)


def _run_probe(job: Job) -> tuple[int, str]:
    cat = _load(job.files)
    src = cat.bounded_class(job.options.get("source") or cat.sole_class().name)
    tgt = cat.bounded_class(job.options.get("target") or src.name)
    level = job.k if job.k is not None else max(default_level(src), default_level(tgt))
    trials = job.options.get("trials", 200)
    max_size = job.options.get("max_size", 8)
    bs = enumerate_behaviours(src, tgt, level, realize_cap=job.realize_cap)
    rep = Report("probe")
    rep.line(f"source: {src.name}  target: {tgt.name}")
    rep.line(f"caps: {_caps_line(k=level, realize_cap=job.realize_cap)} "
             f"trials={trials} max-size={max_size} seed={job.seed}")
    total_failures = 0
    rep.data["reports"] = []
    for i, b in enumerate(bs):
        r = greedy_extension_probe(b, max_size, trials, job.seed)
        total_failures += len(r.failures)
        rep.line(f"behaviour {i}: {len(r.failures)} failures")
        rep.data["reports"].append({"behaviour": i, "failures": list(r.failures)})
        for f in r.failures:
            rep.line(f"  {f}")
    rep.line(f"verdict: {'OK' if not total_failures else 'PROBE-FAILURES'}",
             "verdict", "OK" if not total_failures else "PROBE-FAILURES")
    return (EXIT_YES if not total_failures else EXIT_NO), rep.emit(job.fmt)


def _run_core(job: Job) -> tuple[int, str]:
    cat = _load(job.files)
    c = cat.reduct(job.options["reduct"])
    p = compute_core(c, job.k, job.realize_cap)
    optimal, _ = is_optimally_presented(p.reduct_out, p.k, job.realize_cap)
    rep = Report("core")
    rep.line(f"input: {c.name} over {c.base.name}")
    rep.line(f"caps: {_caps_line(k=p.k, realize_cap=job.realize_cap)} "
             f"scan-cap={p.scan_cap} "
             f"witness-realize-cap={job.realize_cap if job.realize_cap is not None else default_realize_cap(p.witness)}")
    rep.line(f"image types: {len(p.image_types)} of "
             f"{len(enumerate_types(c.base, p.k))}")
    rep.line(f"optimally presented: {'yes' if optimal else 'NO'}")
    rep.block("base_out:", render_class(p.base_out).rstrip("\n"))
    rep.block("reduct_out:", render_reduct(p.reduct_out).rstrip("\n"))
    rep.block("witness:", serialize_behaviour(p.witness))
    rep.data.update({
        "input": c.name,
        "caps": {"k": p.k, "realize_cap": job.realize_cap, "scan_cap": p.scan_cap},
        "base_out": render_class(p.base_out),
        "reduct_out": render_reduct(p.reduct_out),
        "witness": serialize_behaviour(p.witness),
        "image_types": sorted(serialize_type(t) for t in p.image_types),
        "optimally_presented": bool(optimal),
    })
    if job.witness_out:
        write_certificate(core_certificate(c, p), job.witness_out)
        rep.line(f"certificate: {job.witness_out}")
    return EXIT_YES, rep.emit(job.fmt)


def _parse_query_union(job: Job, p) -> OrbitUnion | None:
    formula_text = job.options.get("query")
    orbit_text = job.options.get("query_orbits")
    if formula_text is None and orbit_text is None:
        return None
    arity = job.options.get("query_arity")
    if formula_text is not None:
        if arity is None:
            raise InputError("--query needs --query-arity")
        phi = parse_formula(formula_text)
        probe = Reduct("_query", p.base_out,
                       (Relation("q", arity, FormulaDef(phi)),))
        return compile_orbit_union(probe, "q")
    from .ktypes import parse_type
    from .definability import split_type_columns
    members = []
    for chunk in split_type_columns(orbit_text):
        members.append(parse_type(p.base_out.signature, chunk))
    if not members:
        raise InputError("--query-orbits lists no types")
    levels = {t.k for t in members}
    if len(levels) != 1:
        raise InputError("--query-orbits types must share one level")
    universe = set(enumerate_types(p.base_out, members[0].k))
    for t in members:
        if t not in universe:
            raise InputError(f"{serialize_type(t)} is not a type of the core base")
    return OrbitUnion(members[0].k, frozenset(members))


def _run_definable(job: Job) -> tuple[int, str]:
    cat = _load(job.files)
    c = cat.reduct(job.options["reduct"])
    p = compute_core(c, job.k, job.realize_cap)
    mode = job.mode if job.mode in ("ep", "pp") else "ep"
    rep = Report("definable")
    rep.line(f"input: {c.name} over {c.base.name}")
    rep.line(f"mode: {mode}")

    query = _parse_query_union(job, p)
    if query is not None:
        verdict = pp_definable(p, query, job.arity_cap, job.realize_cap)
        rep.line(f"caps: {_caps_line(k=p.k)} arity-cap={verdict.arity_cap} "
                 f"realize-cap={verdict.realize_cap}")
        rep.line(f"relation: {{{', '.join(serialize_type(t) for t in query.sorted_members())}}}")
        rep.line(f"verdict: {verdict.label}", "verdict",
                 "DEFINABLE" if verdict.definable else "NOT-DEFINABLE")
        rep.data["caps"] = {"k": p.k, "arity_cap": verdict.arity_cap,
                            "realize_cap": verdict.realize_cap}
        if verdict.witness is not None:
            rep.block("witness:", serialize_poly(verdict.witness))
            rep.data["witness"] = serialize_poly(verdict.witness)
        if job.witness_out:
            write_certificate(definable_certificate(c, p, verdict), job.witness_out)
            rep.line(f"certificate: {job.witness_out}")
        code = EXIT_YES if verdict.definable else EXIT_NO
        return code, rep.emit(job.fmt)

    n = job.expand_arity if job.expand_arity is not None else c.max_arity
    if mode == "ep":
        expanded = ep_expand(p, n)
    else:
        expanded = pp_expand(p, n, job.arity_cap, job.realize_cap)
    added = expanded.relations[len(p.reduct_out.relations):]
    rep.line(f"caps: {_caps_line(k=p.k, realize_cap=job.realize_cap, arity_cap=job.arity_cap)} expand-arity={n}")
    rep.line(f"added relations: {len(added)}", "added", len(added))
    for r in added:
        u = compile_orbit_union(expanded, r.name)
        body = ", ".join(serialize_type(t) for t in u.sorted_members())
        rep.line(f"  {r.name}/{r.arity} = {{{body}}}")
    rep.data["expanded"] = render_reduct(expanded)
    return EXIT_YES, rep.emit(job.fmt)


def _run_decide(job: Job) -> tuple[int, str]:
    cat = _load(job.files)
    names = job.options["reducts"]
    c, d = cat.reduct(names[0]), cat.reduct(names[1])
    if job.command == "bidef":
        verdict = decide_bidef(c, d, job.mode, job.k, job.expand_arity,
                               job.realize_cap, job.arity_cap)
    else:
        verdict = decide_biint(c, d, job.mode, job.k, job.expand_arity,
                               job.realize_cap, job.arity_cap, job.ap_cap)
    rep = Report(job.command)
    rep.line(f"inputs: {c.name} over {c.base.name}  vs  {d.name} over {d.base.name}")
    rep.line(f"mode: {verdict.mode}")
    caps = verdict.caps
    rep.line("caps: " + _caps_line(k=caps.k, expand_arity=caps.expand_arity,
                                   realize_cap=caps.realize_cap,
                                   arity_cap=caps.arity_cap, ap_cap=caps.ap_cap))
    rep.data["caps"] = caps.as_dict()
    rep.data["mode"] = verdict.mode
    if verdict.core_c is not None:
        rep.line(f"core of {c.name}: base {verdict.core_c.base_out.name} "
                 f"({len(verdict.core_c.base_out.bounds)} bounds, "
                 f"{len(verdict.core_c.image_types)} image types)")
    if verdict.core_d is not None:
        rep.line(f"core of {d.name}: base {verdict.core_d.base_out.name} "
                 f"({len(verdict.core_d.base_out.bounds)} bounds, "
                 f"{len(verdict.core_d.image_types)} image types)")
    if verdict.expanded_c is not None:
        rep.line(f"expanded signatures: {len(verdict.expanded_c.relations)} vs "
                 f"{len(verdict.expanded_d.relations)} relations")
    if verdict.cap_relative and verdict.answer == "NO":
        rep.line("note: pp-mode NO is relative to the caps above")
    if verdict.reason:
        rep.line(f"reason: {verdict.reason}", "reason", verdict.reason)
    rep.line(f"verdict: {verdict.answer}", "verdict", verdict.answer)
    if verdict.witness is not None:
        w = verdict.witness
        rep.line("witness matching: "
                 + " ".join(f"{a}->{b}" for a, b in w.matching))
        rep.block("witness xi:", serialize_behaviour(w.xi))
        rep.block("witness eta:", serialize_behaviour(w.eta))
        rep.data["witness"] = {
            "matching": [list(pair) for pair in w.matching],
            "xi": serialize_behaviour(w.xi),
            "eta": serialize_behaviour(w.eta),
        }
    if job.witness_out:
        cert = bidef_certificate(job.command, c, d, verdict)
        write_certificate(cert, job.witness_out)
        rep.line(f"certificate: {job.witness_out}")
    return verdict.exit_code, rep.emit(job.fmt)


def _run_verify(job: Job) -> tuple[int, str]:
    rep = Report("verify")
    cert = load_certificate(job.files[0])
    rep.line(f"certificate: kind={cert['kind']} verdict={cert.get('verdict')}")
    try:
        notes = verify_certificate(cert)
    except VerificationFailure as exc:
        rep.line(f"FAILED: {exc}", "verdict", "INVALID")
        return EXIT_NO, rep.emit(job.fmt)
    for note in notes:
        rep.line(f"  {note}")
    rep.data["checks"] = notes
    rep.line("verdict: CERTIFICATE-OK", "verdict", "CERTIFICATE-OK")
    return EXIT_YES, rep.emit(job.fmt)


# -- argument parsing ------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="agekit",
        description="decision engine for finitely bounded homogeneous classes")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, files="+"):
        if files:
            p.add_argument("files", nargs=files, help="input class/reduct files")
        p.add_argument("--k", type=int, default=None)
        p.add_argument("--realize-cap", type=int, default=None, dest="realize_cap")
        p.add_argument("--arity-cap", type=int, default=None, dest="arity_cap")
        p.add_argument("--ap-cap", type=int, default=None, dest="ap_cap")
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--witness-out", default=None, dest="witness_out")
        p.add_argument("--format", choices=("text", "json"), default="text",
                       dest="fmt")

    p = sub.add_parser("check", help="validate classes and probe amalgamation")
    common(p)

    p = sub.add_parser("orbits", help="enumerate k-types of a class")
    common(p)
    p.add_argument("--class", dest="class_name", default=None)

    p = sub.add_parser("behaviours", help="enumerate realizable behaviours")
    common(p)
    p.add_argument("--source", default=None)
    p.add_argument("--target", default=None)

    p = sub.add_parser("probe", help="randomized extension probe of behaviours")
    common(p)
    p.add_argument("--source", default=None)
    p.add_argument("--target", default=None)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--max-size", type=int, default=8, dest="max_size")

    p = sub.add_parser("core", help="compute the model-complete core")
    common(p)
    p.add_argument("--reduct", required=True)

    p = sub.add_parser("definable", help="definability expansion / queries")
    common(p)
    p.add_argument("--reduct", required=True)
    p.add_argument("--mode", choices=("ep", "pp"), default="ep")
    p.add_argument("--n", type=int, default=None, dest="expand_arity")
    p.add_argument("--query", default=None,
                   help="quantifier-free formula naming an orbit union")
    p.add_argument("--query-arity", type=int, default=None, dest="query_arity")
    p.add_argument("--query-orbits", default=None, dest="query_orbits",
                   help="pipe-separated type serializations")

    for cmd in ("bidef", "biint"):
        p = sub.add_parser(cmd, help=f"decide {cmd} of two reducts")
        common(p)
        p.add_argument("--reducts", nargs=2, required=True, metavar=("C", "D"))
        p.add_argument("--mode", choices=("fo", "ep", "pp"), default="fo")
        p.add_argument("--n", type=int, default=None, dest="expand_arity")

    p = sub.add_parser("verify", help="re-check a witness certificate")
    p.add_argument("files", nargs=1, help="certificate directory or file")
    p.add_argument("--format", choices=("text", "json"), default="text",
                   dest="fmt")
    return ap


def _job_from_args(args) -> Job:
    job = Job(command=args.command)
    for attr in ("files", "mode", "k", "realize_cap", "arity_cap", "ap_cap",
                 "expand_arity", "jobs", "seed", "witness_out", "fmt"):
        if hasattr(args, attr):
            val = getattr(args, attr)
            if attr == "files":
                val = list(val)
            setattr(job, attr, val)
    for opt in ("class_name", "source", "target", "reduct", "reducts",
                "query", "query_arity", "query_orbits", "trials", "max_size"):
        if hasattr(args, opt) and getattr(args, opt) is not None:
            job.options[opt] = getattr(args, opt)
    return job


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    job = _job_from_args(args)
    start = time.monotonic()
    try:
        code, report = run(job)
    except AgekitError as exc:
        print(f"agekit {job.command}\nerror: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    sys.stdout.write(report)
    print(f"# elapsed: {time.monotonic() - start:.3f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
