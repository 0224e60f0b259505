"""``weavelab`` command line.

Exit codes: 0 success, 2 usage or parameter error, 3 domain error,
4 numeric or construction error.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from pathlib import Path

from . import __version__
from .anglestruct import angle_space, build_weaving_triangulation, right_angled_point, maximize_volume, total_volume, trace_to_csv
from .density import (
    ScanConfig,
    crossing_change_experiment,
    default_jobs,
    folner_density_experiment,
    format_float,
    grid_entropy_scan,
    mu_density_scan,
    spectrum_sample,
    weaving_scan,
    write_csv,
    write_jsonl,
)
from .diagrams import BraidWord, LinkDiagram, braid_closure, grid_weave_closure, weaving_diagram
from .errors import ConstructionError, DomainError, NumericError, ParameterError
from .hypgeom import V3, V8, adams_upper, alternating_bounds, thurston_upper, twist_bounds, weaving_bounds
from .spanning import determinant

EXIT_OK, EXIT_PARAM, EXIT_DOMAIN, EXIT_NUMERIC = 0, 2, 3, 4


def parse_range(text: str) -> list:
    """``"a..b"`` (inclusive), ``"a..b/step"``, ``"a,b,c"`` or a single integer."""
    text = text.strip()
    try:
        if ".." in text:
            body, _, step = text.partition("/")
            lo, hi = (int(x) for x in body.split(".."))
            vals = list(range(lo, hi + 1, int(step) if step else 1))
        else:
            vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ParameterError(f"cannot parse range {text!r}") from None
    if not vals:
        raise ParameterError(f"range {text!r} is empty")
    return vals


def parse_config(text: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"config line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        out[key.strip().replace("-", "_")] = value.strip().strip('"')
    return out


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _clean(obj):
    if isinstance(obj, float):
        return format_float(obj) if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


class _Output:
    def __init__(self, path):
        self.path = path
        self.buf = io.StringIO()

    def write(self, text):
        self.buf.write(text)

    def close(self):
        if self.path and self.path != "-":
            Path(self.path).write_text(self.buf.getvalue())
        else:
            sys.stdout.write(self.buf.getvalue())


def _emit_json(out, obj):
    out.write(json.dumps(_clean(obj), sort_keys=True) + "\n")


def _emit_text(out, obj):
    for key in sorted(obj):
        value = obj[key]
        if isinstance(value, (dict, list)):
            value = json.dumps(_clean(value), sort_keys=True)
        out.write(f"{key}: {_fmt(value) if value is not None else '-'}\n")


# -- gen -----------------------------------------------------------------

def cmd_gen(args, out):
    if args.kind == "weave":
        d = weaving_diagram(args.p, args.q)
    elif args.kind == "grid":
        d = grid_weave_closure(args.m, args.n, args.closure)
    else:
        d = braid_closure(BraidWord.parse(args.p, args.w), force_alternating=args.alternating)
    if args.format == "pd":
        out.write(d.pd_text() + "\n")
    else:
        out.write(d.to_json(sort_keys=True) + "\n")


# -- det -----------------------------------------------------------------

def _load_diagram(path: str) -> LinkDiagram:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParameterError(f"cannot read {path}: {exc.strerror}") from None
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            return LinkDiagram.from_json(stripped)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"{path}: invalid JSON ({exc.msg})") from None
    code = []
    for line in stripped.splitlines():
        line = line.strip()
        if not line:
            continue
        body = line.removeprefix("X").strip("[]() ")
        try:
            code.append(tuple(int(x) for x in body.replace(",", " ").split()))
        except ValueError:
            raise ParameterError(f"{path}: cannot parse PD line {line!r}") from None
    return LinkDiagram.from_pd(code, name=Path(path).stem)


def cmd_det(args, out):
    if args.weave:
        d = weaving_diagram(*args.weave)
    elif args.braid:
        strands, word = args.braid
        try:
            strands = int(strands)
        except ValueError:
            raise ParameterError(f"strand count must be an integer, got {strands!r}") from None
        d = braid_closure(BraidWord.parse(strands, word))
    else:
        d = _load_diagram(args.file)
    det = determinant(d, exact=not args.log)
    c = d.n_crossings
    density = None
    if args.density:
        if det.log_value is None:
            raise DomainError("determinant is zero; density undefined")
        density = 2 * math.pi * det.log_value / c
    if args.format == "json":
        _emit_json(out, {
            "name": d.name,
            "crossings": c,
            "det": None if det.exact is None else str(det.exact),
            "log_det": det.log_value,
            "log_error": det.log_error,
            "density": density,
            "alternating": d.is_alternating,
        })
        return
    out.write((_fmt(det.log_value) if args.log else str(det.exact)) + "\n")
    if density is not None:
        out.write(_fmt(density) + "\n")


# -- bounds ----------------------------------------------------------------

def cmd_bounds(args, out):
    if args.kind == "weave":
        b = weaving_bounds(args.p, args.q).to_dict()
        b["crossings"] = args.q * (args.p - 1)
    elif args.kind == "alternating":
        b = alternating_bounds(args.c).to_dict()
        b["crossings"] = args.c
    elif args.kind == "twist":
        b = twist_bounds(args.t).to_dict()
    elif args.kind == "adams":
        b = {"lower": None, "upper": adams_upper(args.c), "upper_source": "adams-upper"}
    else:
        b = {"lower": None, "upper": thurston_upper(args.c), "upper_source": "octahedral-upper"}
    b["kind"] = args.kind
    (_emit_json if args.format == "json" else _emit_text)(out, b)


# -- angles ----------------------------------------------------------------

def cmd_angles(args, out):
    if args.p < 3:
        raise ParameterError(f"p must be >= 3, got {args.p}")
    if args.q < 1:
        raise ParameterError(f"q must be >= 1, got {args.q}")
    t = build_weaving_triangulation(args.p)
    space = angle_space(t)
    start = right_angled_point(t)
    res = maximize_volume(space, start)
    p, q = args.p, args.q
    lower, upper = V8 * (p - 2) * q, (V8 * (p - 3) + 4 * V3) * q
    vol = res.volume * q
    report = {
        "p": p,
        "q": q,
        "tetrahedra": t.n_tets,
        "edge_classes": len(t.edge_classes),
        "space_dim": space.dim,
        "start_volume": total_volume(start) * q,
        "start_residual": space.residual(start.flat),
        "volume": vol,
        "window": [lower, upper],
        "in_window": lower - 1e-7 <= vol <= upper + 1e-7,
        **res.diagnostics.to_dict(),
    }
    if args.trace:
        Path(args.trace).write_text(trace_to_csv(res.diagnostics.trace))
    if args.export:
        payload = t.to_dict()
        payload["angles"] = res.assignment.to_list()
        Path(args.export).write_text(json.dumps(_clean(payload), sort_keys=True) + "\n")
    (_emit_json if args.format == "json" else _emit_text)(out, report)


# -- scan ------------------------------------------------------------------

_SCAN_DEFAULTS = {
    "weave": {"p": "3..12", "q": "7..16"},
    "mu": {"p": "3..12", "q": "2..16"},
    "spectrum": {"p": "3..12", "q": "2..16"},
    "grid-entropy": {"n": "2..20/2"},
    "folner": {"n": "4,8,16,24"},
}


def _scan_value(args, cfg, name, default=None):
    val = getattr(args, name, None)
    if val is None:
        val = cfg.get(name)
    if val is None:
        val = _SCAN_DEFAULTS.get(args.kind, {}).get(name, default)
    return val


def _truthy(value) -> bool:
    if isinstance(value, bool):
        return value
    return str(value).strip().lower() in ("1", "true", "yes", "on")


def _write_rows(out, rows, fmt):
    if fmt == "csv":
        write_csv(rows, out)
    elif fmt == "text":
        buf = io.StringIO()
        write_csv(rows, buf)
        for line in buf.getvalue().splitlines():
            out.write("  ".join(line.split(",")) + "\n")
    else:
        write_jsonl(rows, out)


def cmd_scan(args, out):
    cfg = {}
    if args.config:
        try:
            cfg = parse_config(Path(args.config).read_text())
        except OSError as exc:
            raise ParameterError(f"cannot read {args.config}: {exc.strerror}") from None
    fmt = args.format or cfg.get("format", "json")
    if fmt not in ("json", "csv", "text"):
        raise ParameterError(f"unknown format {fmt!r}")
    jobs = args.jobs if args.jobs is not None else int(cfg.get("jobs", default_jobs()))
    exact = args.exact or _truthy(cfg.get("exact", False))
    out.path = args.out or cfg.get("out")
    kind = args.kind

    if kind in ("weave", "mu", "spectrum"):
        sc = ScanConfig(
            parse_range(_scan_value(args, cfg, "p")),
            parse_range(_scan_value(args, cfg, "q")),
            exact=exact,
            jobs=jobs,
            output=out.path,
            axis=not (args.no_axis or _truthy(cfg.get("no_axis", False))),
        )
        if kind == "weave":
            rows = weaving_scan(sc)
        elif kind == "mu":
            rows = mu_density_scan(sc)
        else:
            summary = spectrum_sample(weaving_scan(sc))
            rows = [summary]
    elif kind == "grid-entropy":
        rows = grid_entropy_scan(parse_range(_scan_value(args, cfg, "n")))
    elif kind == "folner":
        report = folner_density_experiment(parse_range(_scan_value(args, cfg, "n")), closure=args.closure)
        rows = report.rows
    else:
        limit = int(args.max_crossings if args.max_crossings is not None else cfg.get("max_crossings", 7))
        rows = [crossing_change_experiment(max_crossings=limit)]
    _write_rows(out, rows, fmt)


# -- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weavelab", description="Weaving knots, determinants and volume bounds.", allow_abbrev=False)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a diagram")
    gsub = gen.add_subparsers(dest="kind", required=True)
    g = gsub.add_parser("weave", help="weaving knot W(p, q)")
    g.add_argument("-p", type=int, required=True)
    g.add_argument("-q", type=int, required=True)
    g = gsub.add_parser("grid", help="closure of the m x n weave block")
    g.add_argument("-m", type=int, required=True)
    g.add_argument("-n", type=int, required=True)
    g.add_argument("--closure", choices=("ring", "minimal"), default="ring")
    g = gsub.add_parser("braid", help="closure of a braid word")
    g.add_argument("-p", type=int, required=True, help="number of strands")
    g.add_argument("-w", required=True, help='word such as "1 -2 1 -2"')
    g.add_argument("--alternating", action="store_true", help="reassign crossings to alternate")
    for p in gsub.choices.values():
        p.add_argument("--format", choices=("json", "pd"), default="json")
        p.add_argument("--out")

    det = sub.add_parser("det", help="knot determinant")
    src = det.add_mutually_exclusive_group(required=True)
    src.add_argument("--weave", nargs=2, type=int, metavar=("P", "Q"))
    src.add_argument("--file", help="diagram JSON or PD text")
    src.add_argument("--braid", nargs=2, metavar=("STRANDS", "WORD"))
    det.add_argument("--log", action="store_true", help="floating log-determinant only")
    det.add_argument("--density", action="store_true")
    det.add_argument("--format", choices=("text", "json"), default="text")
    det.add_argument("--out")

    bounds = sub.add_parser("bounds", help="volume bounds")
    bsub = bounds.add_subparsers(dest="kind", required=True)
    b = bsub.add_parser("weave")
    b.add_argument("-p", type=int, required=True)
    b.add_argument("-q", type=int, required=True)
    b = bsub.add_parser("alternating")
    b.add_argument("-c", type=int, required=True)
    b = bsub.add_parser("twist")
    b.add_argument("-t", type=int, required=True)
    b = bsub.add_parser("adams")
    b.add_argument("-c", type=int, required=True)
    b = bsub.add_parser("thurston")
    b.add_argument("-c", type=int, required=True)
    for p in bsub.choices.values():
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--out")

    ang = sub.add_parser("angles", help="maximize volume over angle structures")
    ang.add_argument("-p", type=int, required=True)
    ang.add_argument("-q", "--q", type=int, default=1, dest="q")
    ang.add_argument("--trace", help="write the optimizer trace as CSV")
    ang.add_argument("--export", help="write the triangulation and angles as JSON")
    ang.add_argument("--format", choices=("text", "json"), default="text")
    ang.add_argument("--out")

    scan = sub.add_parser("scan", help="batch experiments")
    ssub = scan.add_subparsers(dest="kind", required=True)
    for name in ("weave", "mu", "spectrum", "grid-entropy", "folner", "crossing-change"):
        s = ssub.add_parser(name)
        if name in ("weave", "mu", "spectrum"):
            s.add_argument("--p", help="range such as 3..12")
            s.add_argument("--q", help="range such as 7..16")
            s.add_argument("--no-axis", action="store_true", help="skip the angle-structure column")
        if name in ("grid-entropy", "folner"):
            s.add_argument("--n", help="range such as 2..20/2 or 4,8,16")
        if name == "folner":
            s.add_argument("--closure", choices=("ring", "minimal"), default="ring")
        if name == "crossing-change":
            s.add_argument("--max-crossings", type=int)
        s.add_argument("--exact", action="store_true", help="exact determinants")
        s.add_argument("--jobs", type=int, help="worker processes (default WEAVELAB_THREADS or 1)")
        s.add_argument("--config", help="key = value file; flags override it")
        s.add_argument("--format", choices=("json", "csv", "text"))
        s.add_argument("--out")
    return parser


_COMMANDS = {"gen": cmd_gen, "det": cmd_det, "bounds": cmd_bounds, "angles": cmd_angles, "scan": cmd_scan}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = _Output(getattr(args, "out", None))
    try:
        _COMMANDS[args.command](args, out)
    except ParameterError as exc:
        print(f"weavelab: error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except DomainError as exc:
        print(f"weavelab: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (NumericError, ConstructionError) as exc:
        print(f"weavelab: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    out.close()
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
