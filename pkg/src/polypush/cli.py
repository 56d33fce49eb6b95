"""Command-line front end.

Exit status: 0 success, 2 unreadable or malformed input, 3 validation
failure, 4 numerical failure.  Artifacts go to --out DIR when given; the
primary JSON result is always printed to stdout.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io
from .complex_core import subdivide, validate_complex
from .errors import InvalidInputError, NotInPolytopeError, NumericError, ValidationError
from .measure import K_constants, hausdorff_measure_est
from .pushout import approximate_near, retract_chain, run
from .render import render_svg

EXIT_OK, EXIT_PARSE, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3, 4
COMMANDS = ("validate", "subdivide", "push", "near", "measure", "constants", "retract", "render")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(EXIT_PARSE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="polypush", description="Push closed sets off partial simplices of a complex.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--complex", type=Path, help="complex JSON")
    p.add_argument("--set", type=Path, help="set model JSON")
    p.add_argument("--a", type=float, help="measure dimension (defaults to the set's a, else 1)")
    p.add_argument("--epsilon", type=float, help="mesh bound (subdivide) or nearness (near)")
    p.add_argument("--gamma", type=float, help="override the apex shrink factor")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ladder", type=str, help="comma-separated delta values for measure")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--render", action="store_true", help="also write SVG scenes")
    p.add_argument("--project", type=str, help="coordinate pair i,j for rendering")
    return p


def _need(args, name):
    if getattr(args, name) is None:
        raise io.ParseError(f"--{name} is required for '{args.command}'", "arguments")
    return getattr(args, name)


def _project(args):
    if args.project is None:
        return None
    try:
        i, j = (int(x) for x in args.project.split(","))
    except ValueError as e:
        raise io.ParseError("--project expects i,j", "arguments") from e
    return (i, j)


def _load(args, need_set=False):
    cx = io.load_complex(_need(args, "complex"))
    S = None
    if args.set is not None:
        S = io.load_set(args.set, cx)
    elif need_set:
        _need(args, "set")
    return cx, S


def _a(args, S):
    if args.a is not None:
        return args.a
    return S.a if S is not None else 1.0


def cmd_validate(args):
    cx = io.complex_from_dict(io.read_json(_need(args, "complex")), str(args.complex), validate=False)
    rep = validate_complex(cx, seed=args.seed).to_dict()
    if not rep["valid"]:
        raise ValidationError("complex failed validation", rep)
    return {"validate.json": rep}, "validate.json"


def cmd_subdivide(args):
    cx, _ = _load(args)
    sub = subdivide(cx, _need(args, "epsilon"))
    rep = {"rounds": sub.rounds, "t0": sub.t0, "simplices": len(sub.complex),
           "max_diameter": sub.complex.max_simplex_diameter()}
    return {"complex.json": io.complex_to_dict(sub.complex), "subdivide.json": rep}, "subdivide.json"


def cmd_push(args):
    cx, S = _load(args, need_set=True)
    res = run(cx, S, _a(args, S), seed=args.seed, gamma=args.gamma)
    out = {
        "S_tilde.json": io.set_to_dict(res.S_tilde),
        "transport.json": io.transport_to_dict(res.transport),
        "stats.json": res.stats,
    }
    if args.render:
        pr = _project(args)
        first = res.transport.records[0].cone if res.transport.records else None
        out["before.svg"] = render_svg(cx, S, first, pr)
        out["after.svg"] = render_svg(cx, res.S_tilde, None, pr)
    return out, "stats.json"


def cmd_near(args):
    cx, S = _load(args, need_set=True)
    eps = args.epsilon if args.epsilon is not None else 0.1 * cx.diameter
    nr = approximate_near(cx, S, _a(args, S), eps, seed=args.seed, gamma=args.gamma)
    stats = dict(nr.result.stats, epsilon=eps, rounds=nr.rounds, t0=nr.t0)
    out = {
        "complex.json": io.complex_to_dict(nr.complex),
        "S.json": io.set_to_dict(nr.S),
        "S_tilde.json": io.set_to_dict(nr.result.S_tilde),
        "transport.json": io.transport_to_dict(nr.result.transport),
        "stats.json": stats,
    }
    if args.render:
        out["after.svg"] = render_svg(nr.complex, nr.result.S_tilde, None, _project(args))
    return out, "stats.json"


def cmd_measure(args):
    cx, S = _load(args, need_set=True)
    ladder = None
    if args.ladder:
        try:
            ladder = [float(x) for x in args.ladder.split(",")]
        except ValueError as e:
            raise io.ParseError("--ladder expects comma-separated reals", "arguments") from e
    est = hausdorff_measure_est(S, _a(args, S), ladder, cx=cx)
    return {"measure.json": est.to_dict()}, "measure.json"


def cmd_constants(args):
    cx, S = _load(args)
    return {"constants.json": K_constants(cx, _a(args, S)).to_dict()}, "constants.json"


def cmd_retract(args):
    cx, S = _load(args, need_set=True)
    res = run(cx, S, _a(args, S), seed=args.seed, gamma=args.gamma)
    ch = retract_chain(res.transport, res.history[0], res.history)
    ts = np.linspace(0.0, 1.0, 5)
    frames = []
    for i in range(ch.m):
        E = ch.E(i)
        for t in ts:
            frames.append({"i": i, "t": float(t), "points": [ch.F(i, y, t).tolist() for y in E]})
    rep = {"m": ch.m, "E": [ch.E(i).tolist() for i in range(ch.m + 1)], "frames": frames}
    return {"retract.json": rep}, "retract.json"


def cmd_render(args):
    cx, S = _load(args)
    return {"scene.svg": render_svg(cx, S, None, _project(args))}, "scene.svg"


HANDLERS = {c: globals()[f"cmd_{c}"] for c in COMMANDS}


def execute(args) -> int:
    try:
        files, primary = HANDLERS[args.command](args)
    except io.ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except (ValidationError, NotInPolytopeError) as e:
        print(f"validation error: {e}", file=sys.stderr)
        rep = getattr(e, "report", None)
        if rep:
            print(io.dumps(rep), file=sys.stderr, end="")
        return EXIT_INVALID
    except NumericError as e:
        print(f"numeric error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except InvalidInputError as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_PARSE
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        for name, obj in sorted(files.items()):
            path = args.out / name
            if name.endswith(".svg"):
                path.write_text(obj)
            else:
                io.write_json(path, obj)
    obj = files[primary]
    sys.stdout.write(obj if isinstance(obj, str) else io.dumps(obj))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return execute(args)


if __name__ == "__main__":
    sys.exit(main())
