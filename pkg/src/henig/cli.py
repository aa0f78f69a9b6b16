"""Command-line front end.

Problems are JSON documents::

    {
      "command": "ssp",                       # optional, informational
      "space": {"dim": 2, "norm": "l2"},
      "cones": {"C": <cone>, "K": <cone>},     # ssp
      "cone": <cone>,                          # every other command
      "set": {"points": [[x, y], ...]}         # or {"file": "cloud.csv"}
                                               # or {"generator": "sine", "h": 0.01, "ymax": 2.0}
                                               # or {"fixture": "example-4-curve"}
      "parameters": {...}
    }

A cone is tagged by ``type``: ``polyhedral`` (``generators``),
``bishop_phelps`` / ``sublevel`` (``f``, ``alpha``), ``negated`` (``cone``),
``eps_neighborhood`` / ``henig`` (``cone``, ``eps``).  Unknown fields are
rejected.

Exit codes: ``ssp`` returns 0, 1 or 2 for holds, fails and inconclusive;
every other successful run returns 0; malformed input returns 3; violated
preconditions return 4.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from .cones import BishopPhelps, Negated, Polyhedral, Sublevel
from .density import DEFAULT_N_MAX, abb_experiment, section_shrink
from .dilation import EpsNeighborhood, HenigDilation, normalize_base
from .efficiency import DEFAULT_LADDER, PointCloud, classify, scalarize_section
from .fixtures import FIXTURE_NAMES, fixture, sine_cloud
from .separation import Witness, find_witness, ssp_gap, verify_witness
from .space import NORMS, Space

EXIT_HOLDS, EXIT_FAILS, EXIT_INCONCLUSIVE, EXIT_PARSE, EXIT_PRECONDITION = 0, 1, 2, 3, 4
SSP_EXIT = {"holds_certified": EXIT_HOLDS, "fails_certified": EXIT_FAILS, "inconclusive": EXIT_INCONCLUSIVE}

COMMANDS = ("ssp", "classify", "scalarize", "shrink", "density", "fixture")
TOP_FIELDS = {"command", "space", "cone", "cones", "set", "parameters"}
PARAM_FIELDS = {"mesh", "tol", "seed", "eps", "delta", "eps_ladder", "eps_list", "n_max", "x0", "xbar",
                "alpha_grid", "witness"}
CONE_FIELDS = {
    "polyhedral": {"generators"},
    "bishop_phelps": {"f", "alpha"},
    "sublevel": {"f", "alpha"},
    "negated": {"cone"},
    "eps_neighborhood": {"cone", "eps"},
    "henig": {"cone", "eps"},
}


class ProblemError(Exception):
    """Malformed problem document; ``path`` locates the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class PreconditionError(Exception):
    pass


def _version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


# ---------------------------------------------------------------------------
# parsing


def _check_fields(obj, allowed: set, path: str, required=()) -> dict:
    if not isinstance(obj, dict):
        raise ProblemError(path, "expected an object")
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ProblemError(path, f"unknown field(s) {', '.join(extra)}")
    for key in required:
        if key not in obj:
            raise ProblemError(path, f"missing field {key!r}")
    return obj


def _number(v, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ProblemError(path, "expected a finite number")
    return float(v)


def _vector(v, dim: int, path: str) -> np.ndarray:
    if not isinstance(v, list) or len(v) != dim:
        raise ProblemError(path, f"expected a list of {dim} numbers")
    return np.array([_number(x, f"{path}[{i}]") for i, x in enumerate(v)])


def parse_space(obj, path: str = "space") -> Space:
    _check_fields(obj, {"dim", "norm"}, path, ("dim",))
    dim = obj["dim"]
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise ProblemError(f"{path}.dim", "expected a positive integer")
    norm = obj.get("norm", "l2")
    if norm not in NORMS:
        raise ProblemError(f"{path}.norm", f"expected one of {', '.join(NORMS)}")
    return Space(dim, norm)


def parse_cone(s: Space, obj, path: str = "cone"):
    if not isinstance(obj, dict) or "type" not in obj:
        raise ProblemError(path, "expected an object with a 'type' field")
    kind = obj["type"]
    if kind not in CONE_FIELDS:
        raise ProblemError(f"{path}.type", f"unknown cone type {kind!r}")
    _check_fields(obj, CONE_FIELDS[kind] | {"type"}, path, sorted(CONE_FIELDS[kind]))
    try:
        if kind == "polyhedral":
            gens = obj["generators"]
            if not isinstance(gens, list) or not gens:
                raise ProblemError(f"{path}.generators", "expected a non-empty list")
            return Polyhedral([_vector(g, s.dim, f"{path}.generators[{i}]").tolist() for i, g in enumerate(gens)])
        if kind in ("bishop_phelps", "sublevel"):
            f = _vector(obj["f"], s.dim, f"{path}.f")
            alpha = _number(obj["alpha"], f"{path}.alpha")
            cls = BishopPhelps if kind == "bishop_phelps" else Sublevel
            c = cls(tuple(f), alpha)
            if hasattr(c, "validate"):
                c.validate(s)
            return c
        inner = parse_cone(s, obj["cone"], f"{path}.cone")
        if kind == "negated":
            return Negated(inner)
        eps = _number(obj["eps"], f"{path}.eps")
        if kind == "eps_neighborhood":
            return EpsNeighborhood(inner, eps)
        if not isinstance(inner, Polyhedral):
            raise ProblemError(f"{path}.cone", "a Henig dilation needs a polyhedral cone")
        return HenigDilation(normalize_base(s, inner), eps)
    except ProblemError:
        raise
    except ValueError as exc:
        raise ProblemError(path, str(exc)) from exc


def _read_csv_points(path: Path, dim: int, where: str) -> np.ndarray:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ProblemError(where, f"cannot read {path}: {exc.strerror}") from exc
    rows = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or row[0].lstrip().startswith("#"):
            continue
        try:
            vals = [float(x) for x in row]
        except ValueError:
            if not rows and lineno == 1:
                continue  # header
            raise ProblemError(f"{where} ({path}, line {lineno})", "non-numeric entry") from None
        if len(vals) != dim:
            raise ProblemError(f"{where} ({path}, line {lineno})", f"expected {dim} columns")
        rows.append(vals)
    return np.array(rows).reshape(-1, dim)


def parse_set(s: Space, obj, base_dir: Path, path: str = "set") -> np.ndarray:
    if not isinstance(obj, dict):
        raise ProblemError(path, "expected an object")
    if "points" in obj:
        _check_fields(obj, {"points"}, path)
        pts = obj["points"]
        if not isinstance(pts, list):
            raise ProblemError(f"{path}.points", "expected a list")
        P = np.array([_vector(p, s.dim, f"{path}.points[{i}]") for i, p in enumerate(pts)]).reshape(-1, s.dim)
    elif "file" in obj:
        _check_fields(obj, {"file"}, path)
        P = _read_csv_points(base_dir / obj["file"], s.dim, f"{path}.file")
    elif "generator" in obj:
        _check_fields(obj, {"generator", "h", "ymax"}, path)
        if obj["generator"] != "sine":
            raise ProblemError(f"{path}.generator", "only 'sine' is known")
        if s.dim != 2:
            raise ProblemError(path, "the sine generator is two-dimensional")
        h = _number(obj.get("h", 0.01), f"{path}.h")
        ymax = _number(obj.get("ymax", 2.0), f"{path}.ymax")
        if not h > 0:
            raise ProblemError(f"{path}.h", "must be positive")
        P = sine_cloud(h, ymax)
    elif "fixture" in obj:
        _check_fields(obj, {"fixture"}, path)
        try:
            doc = fixture(obj["fixture"], s.norm)
        except KeyError as exc:
            raise ProblemError(f"{path}.fixture", str(exc.args[0])) from None
        if "set" not in doc:
            raise ProblemError(f"{path}.fixture", "fixture has no point set")
        return parse_set(s, doc["set"], base_dir, path)
    else:
        raise ProblemError(path, "expected one of 'points', 'file', 'generator', 'fixture'")
    if len(P) == 0:
        raise ProblemError(path, "the point set is empty")
    return P


def load_problem(text: str, origin: str = "<problem>") -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemError(f"{origin}:{exc.lineno}:{exc.colno}", exc.msg) from None
    _check_fields(doc, TOP_FIELDS, "problem", ("space",))
    _check_fields(doc.get("parameters", {}), PARAM_FIELDS, "parameters")
    if "command" in doc and doc["command"] not in COMMANDS:
        raise ProblemError("command", f"unknown command {doc['command']!r}")
    return doc


def dump_problem(doc: dict) -> str:
    """Byte-stable serialization: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# parameters


def _resolve(args, doc: dict, s: Space) -> dict:
    p = dict(doc.get("parameters", {}))
    for key in ("mesh", "tol", "seed", "delta"):
        v = getattr(args, key, None)
        if v is not None:
            p[key] = v
    if args.eps is not None:
        if len(args.eps) == 1:
            p["eps"] = args.eps[0]
        p["eps_list"] = list(args.eps)
    p.setdefault("mesh", 1e-3 if s.dim == 2 else 5e-2)
    p.setdefault("tol", 1e-9)
    p.setdefault("seed", 42)
    p.setdefault("n_max", DEFAULT_N_MAX)
    p.setdefault("alpha_grid", 1000)
    for key in ("mesh", "tol", "delta", "eps"):
        if key in p:
            p[key] = _number(p[key], f"parameters.{key}")
    if not p["mesh"] > 0:
        raise ProblemError("parameters.mesh", "must be positive")
    for key in ("seed", "n_max", "alpha_grid"):
        if isinstance(p[key], bool) or not isinstance(p[key], int):
            raise ProblemError(f"parameters.{key}", "expected an integer")
    for key in ("eps_ladder", "eps_list"):
        if key in p:
            if not isinstance(p[key], list):
                raise ProblemError(f"parameters.{key}", "expected a list of numbers")
            p[key] = [_number(v, f"parameters.{key}[{i}]") for i, v in enumerate(p[key])]
    for key in ("x0", "xbar"):
        if key in p:
            p[key] = _vector(p[key], s.dim, f"parameters.{key}").tolist()
    return p


def _apply_overrides(args, doc: dict) -> dict:
    doc = json.loads(json.dumps(doc))
    if args.norm is not None:
        doc.setdefault("space", {})["norm"] = args.norm
    if args.h is not None:
        st = doc.get("set")
        if not (isinstance(st, dict) and "generator" in st):
            raise ProblemError("set", "--h applies only to generated sets")
        st["h"] = args.h
    return doc


# ---------------------------------------------------------------------------
# commands


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def _ssp_payload(rep) -> dict:
    return {
        "verdict": rep.verdict,
        "gap": rep.gap_sampled,
        "gap_lower_bound": rep.gap_lower_bound,
        "covering_radius": rep.covering_radius,
        "exact": rep.exact,
        "nearest_pair": [list(map(float, v)) for v in rep.nearest_pair],
        "separating_functional": rep.separating_functional,
        "min_p": rep.min_p,
        "max_q": rep.max_q,
    }


def _cert_fields(cert) -> dict:
    if cert is None:
        return {"certificate": "", "cert_eps": math.nan, "cert_alpha": math.nan, "slack": math.nan}
    return {
        "certificate": cert.kind,
        "cert_eps": cert.eps if cert.eps is not None else math.nan,
        "cert_alpha": cert.alpha if cert.alpha is not None else math.nan,
        "slack": cert.slack,
    }


def cmd_ssp(s: Space, doc: dict, p: dict):
    cones = doc.get("cones")
    _check_fields(cones, {"C", "K"}, "cones", ("C", "K"))
    C = parse_cone(s, cones["C"], "cones.C")
    K = parse_cone(s, cones["K"], "cones.K")
    rep = ssp_gap(s, C, K, p["mesh"], p["seed"])
    return _ssp_payload(rep), None, SSP_EXIT[rep.verdict]


def _cone_and_set(s: Space, doc: dict, base_dir: Path):
    if "cone" not in doc:
        raise ProblemError("problem", "missing field 'cone'")
    C = parse_cone(s, doc["cone"])
    if not isinstance(C, Polyhedral):
        raise ProblemError("cone", "this command needs a polyhedral ordering cone")
    if "set" not in doc:
        raise ProblemError("problem", "missing field 'set'")
    return C, parse_set(s, doc["set"], base_dir)


CLASSIFY_COLUMNS = ("label", "certificate", "cert_eps", "cert_alpha", "slack")


def cmd_classify(s: Space, doc: dict, p: dict, base_dir: Path):
    C, P = _cone_and_set(s, doc, base_dir)
    if "eps_ladder" in p:
        ladder = p["eps_ladder"]
    elif "eps" in p:
        ladder = [p["eps"]]
    else:
        ladder = list(DEFAULT_LADDER)
    labels = classify(s, P, C, ladder, p["tol"])
    rows = []
    for x, lab in zip(P, labels):
        row = {f"x{i}": float(v) for i, v in enumerate(x)}
        row["label"] = lab.kind
        row.update(_cert_fields(lab.certificate))
        rows.append(row)
    counts = {k: sum(lab.kind == k for lab in labels)
              for k in ("min_and_ghe", "min_only_at_resolution", "dominated")}
    return {"points": len(P), "eps_ladder": ladder, "counts": counts}, rows, 0


def _witness_from(s: Space, C, h, p: dict):
    if "witness" in p:
        w = p["witness"]
        _check_fields(w, {"f", "alpha", "delta1", "delta2"}, "parameters.witness", ("f", "alpha"))
        f = _vector(w["f"], s.dim, "parameters.witness.f")
        alpha = _number(w["alpha"], "parameters.witness.alpha")
        d1 = _number(w.get("delta1", alpha), "parameters.witness.delta1")
        d2 = _number(w.get("delta2", alpha), "parameters.witness.delta2")
        cand = Witness(f, alpha, d1, d2, None)
        checks = verify_witness(s, C, h, cand, p["mesh"], p["seed"])
        if not checks.valid:
            raise PreconditionError("the supplied witness is not certified")
        return Witness(f, alpha, d1, d2, checks)
    rep = ssp_gap(s, C, h, p["mesh"], p["seed"])
    if not rep.holds:
        raise PreconditionError(f"separation of C from its Henig dilation is {rep.verdict}")
    w = find_witness(s, C, h, rep, alpha_grid_size=p["alpha_grid"], mesh=p["mesh"], seed=p["seed"])
    if w is None:
        raise PreconditionError("no witness found on the alpha grid")
    return w


def cmd_scalarize(s: Space, doc: dict, p: dict, base_dir: Path):
    C, P = _cone_and_set(s, doc, base_dir)
    if "delta" not in p:
        raise ProblemError("parameters.delta", "required for scalarize")
    delta = p["delta"]
    x0 = np.array(p.get("x0", [0.0] * s.dim))
    try:
        B = normalize_base(s, C)
        h = HenigDilation(B, delta)
    except ValueError as exc:
        raise PreconditionError(str(exc)) from exc
    w = _witness_from(s, C, h, p)
    try:
        x1, cert = scalarize_section(s, P, x0, C, delta, w, p["tol"], p["mesh"])
    except (ValueError, AssertionError) as exc:
        raise PreconditionError(str(exc)) from exc
    payload = {
        "x0": x0, "delta": delta, "point": x1,
        "witness": {"f": w.f, "alpha": w.alpha, "delta1": w.delta1, "delta2": w.delta2},
        **_cert_fields(cert),
    }
    return payload, None, 0


def cmd_shrink(s: Space, doc: dict, p: dict, base_dir: Path):
    C, P = _cone_and_set(s, doc, base_dir)
    if "eps" not in p:
        raise ProblemError("parameters.eps", "required for shrink")
    xbar = np.array(p.get("xbar", [0.0] * s.dim))
    try:
        rep = section_shrink(s, PointCloud(P - xbar), C, p["eps"], p["n_max"], p["tol"], p["mesh"], p["seed"])
    except ValueError as exc:
        raise PreconditionError(str(exc)) from exc
    trace = rep.max_norm_in_section
    rows = [{"n": n, "max_norm": float(v)} for n, v in enumerate(trace, start=1)]
    payload = {"xbar": xbar, "eps": rep.eps, "n_eps": rep.n_eps, "tested": rep.tested,
               "monotone": bool(np.all(np.diff(trace) <= 0))}
    return payload, rows, 0


def cmd_density(s: Space, doc: dict, p: dict, base_dir: Path):
    C, P = _cone_and_set(s, doc, base_dir)
    eps_list = p.get("eps_list", [p["eps"]] if "eps" in p else None)
    if eps_list is None:
        raise ProblemError("parameters.eps_list", "required for density")
    table = abb_experiment(s, P, C, eps_list, p["tol"], p["n_max"], p["mesh"], p["seed"])
    rows = table.as_records()
    payload = {"eps_list": eps_list, "rows": len(rows), "successes": table.successes,
               "failures": table.failures}
    return payload, rows, 0


# ---------------------------------------------------------------------------
# output


def _format_table(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in r.items()})
    return buf.getvalue()


def _format_summary(report: dict) -> str:
    lines = [f"command: {report['command']}"]
    for k, v in report["result"].items():
        lines.append(f"{k}: {json.dumps(_jsonable(v))}")
    lines.append(f"seed: {report['parameters'].get('seed')}")
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="henig", description="Separation, dilating cones and proper efficiency.")
    sub = parser.add_subparsers(dest="command", required=True)

    def eps_list(text: str) -> list[float]:
        try:
            return [float(x) for x in text.split(",") if x.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None

    for name in COMMANDS:
        sp = sub.add_parser(name)
        if name == "fixture":
            sp.add_argument("name", choices=FIXTURE_NAMES)
        else:
            sp.add_argument("problem", nargs="?", help="problem file (JSON)")
            sp.add_argument("--fixture", choices=FIXTURE_NAMES, help="use a built-in problem")
            sp.add_argument("--mesh", type=float)
            sp.add_argument("--tol", type=float)
            sp.add_argument("--seed", type=int)
            sp.add_argument("--eps", type=eps_list, help="a value or a comma-separated list")
            sp.add_argument("--delta", type=float)
            sp.add_argument("--format", choices=("table", "json"), default="table")
        sp.add_argument("--norm", choices=NORMS)
        sp.add_argument("--h", type=float, help="grid step of generated sets")
        sp.add_argument("--out", help="write the table (or the fixture) to this path")
    return parser


HANDLERS = {"ssp": cmd_ssp, "classify": cmd_classify, "scalarize": cmd_scalarize,
            "shrink": cmd_shrink, "density": cmd_density}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "fixture":
            doc = fixture(args.name, args.norm or "l2", args.h if args.h is not None else 0.01)
            text = dump_problem(doc)
            if args.out:
                Path(args.out).write_text(text)
            else:
                sys.stdout.write(text)
            return 0
        if (args.problem is None) == (args.fixture is None):
            raise ProblemError("arguments", "give exactly one of a problem file or --fixture")
        if args.fixture:
            doc, base_dir = fixture(args.fixture), Path.cwd()
        else:
            path = Path(args.problem)
            try:
                text = path.read_text()
            except OSError as exc:
                raise ProblemError(str(path), exc.strerror or "cannot read") from None
            doc, base_dir = load_problem(text, str(path)), path.parent
        doc = _apply_overrides(args, doc)
        load_problem(json.dumps(doc))
        s = parse_space(doc["space"])
        p = _resolve(args, doc, s)
        t0 = time.perf_counter()
        if args.command == "ssp":
            payload, rows, code = cmd_ssp(s, doc, p)
        else:
            payload, rows, code = HANDLERS[args.command](s, doc, p, base_dir)
        report = {"command": args.command, "parameters": p, "result": payload,
                  "wall_time": time.perf_counter() - t0, "version": _version()}
    except ProblemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except PreconditionError as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION

    if args.format == "json":
        if rows is not None:
            report["table"] = rows
        out = json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"
        if args.out:
            Path(args.out).write_text(out)
        else:
            sys.stdout.write(out)
    else:
        sys.stdout.write(_format_summary(report))
        if rows is not None:
            table = _format_table(rows)
            if args.out:
                Path(args.out).write_text(table)
            else:
                sys.stdout.write(table)
    return code


if __name__ == "__main__":
    sys.exit(main())
