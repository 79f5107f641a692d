"""Command line: render an interleaving, compare two fields, validate files."""
from __future__ import annotations

import argparse
import json
import sys

from .decomposition import path_branch_decomposition
from .interleaving import (
    Interleaving,
    InvariantError,
    MapFormatError,
    read_interleaving,
    validate_interleaving,
    validate_shift_map,
)
from .layout import LayoutConfig, build_scene
from .mergetree import TreeFormatError, TreeValidationError, read_tree, validate_tree, OrderedMergeTree
from .pipeline import FieldFormatError, compare_fields, read_field
from .render import RenderConfig, RenderConfigError, render_svg

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


class CliError(Exception):
    def __init__(self, msg, code=EXIT_INVALID):
        super().__init__(msg)
        self.code = code


def _read(path, binary=False):
    try:
        with open(path, "rb" if binary else "r") as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}", EXIT_IO) from exc


def _write(path, data: bytes):
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror or exc}", EXIT_IO) from exc


def _load_tree(path) -> OrderedMergeTree:
    try:
        return read_tree(_read(path, binary=True))
    except TreeValidationError as exc:
        raise CliError(f"{path}: invalid tree\n" + "\n".join(f"  {v}" for v in exc.violations)) from exc
    except TreeFormatError as exc:
        raise CliError(f"{path}: {exc}") from exc


def interleaving_violations(i: Interleaving, exhaustive: bool = False) -> list:
    out = []
    for name, m in (("alpha", i.alpha), ("beta", i.beta)):
        out += [(name, v) for v in validate_shift_map(m, exhaustive=exhaustive)]
    if not out:
        out += [("pair", v) for v in validate_interleaving(i)]
    return out


def _palette(text):
    if text is None:
        return None
    cols = [c.strip() for c in text.split(",") if c.strip()]
    if not cols:
        raise argparse.ArgumentTypeError("empty palette")
    return cols


def _draw(args, il: Interleaving, out):
    cfg = LayoutConfig(grid_fraction=args.grid_fraction, palette_size=args.colors)
    pbd = path_branch_decomposition(il)
    scene = build_scene(il, pbd, cfg)
    rc = RenderConfig(red=args.palette_red, blue=args.palette_blue)
    try:
        svg = render_svg(scene, rc)
    except RenderConfigError as exc:
        raise CliError(str(exc)) from exc
    _write(args.output, svg)
    ta, tb = il.alpha.source, il.alpha.target
    print(f"{ta.n_leaves} leaves left, {tb.n_leaves} leaves right", file=out)
    print(f"delta: {il.delta:.6g}", file=out)
    print(f"hedges: {len(scene.left.hedges)} left, {len(scene.right.hedges)} right", file=out)
    print(f"colors used: {scene.left.colors_used()} left, {scene.right.colors_used()} right", file=out)
    return scene, pbd


def cmd_render(args, out=None) -> int:
    out = out or sys.stdout
    ta = _load_tree(args.tree_a)
    tb = _load_tree(args.tree_b)
    try:
        il = read_interleaving(_read(args.interleaving, binary=True), ta, tb)
    except MapFormatError as exc:
        raise CliError(f"{args.interleaving}: {exc}") from exc
    bad = interleaving_violations(il)
    if bad:
        raise CliError(f"{args.interleaving}: invalid interleaving\n"
                       + "\n".join(f"  {name}: {v}" for name, v in bad))
    _draw(args, il, out)
    return EXIT_OK


def cmd_compare(args, out=None) -> int:
    out = out or sys.stdout
    fields = []
    for path in (args.field_a, args.field_b):
        try:
            fields.append(read_field(_read(path)))
        except FieldFormatError as exc:
            raise CliError(f"{path}: {exc}") from exc
    if args.persistence < 0:
        raise CliError("persistence threshold must be non-negative")
    cmp = compare_fields(fields[0], fields[1], args.persistence, args.connectivity)
    il = cmp.interleaving
    bad = interleaving_violations(il)
    if bad:
        raise CliError("pipeline produced an invalid interleaving\n"
                       + "\n".join(f"  {name}: {v}" for name, v in bad))
    scene, pbd = _draw(args, il, out)
    if args.stats:
        stats = {
            "delta": il.delta,
            "frechet": cmp.frechet,
            "leaves": {"left": cmp.tree_a.n_leaves, "right": cmp.tree_b.n_leaves},
            "active_paths": {"left": len(scene.left.glyphs), "right": len(scene.right.glyphs)},
            "hedges": {"left": len(scene.left.hedges), "right": len(scene.right.hedges)},
            "colors_used": {"left": scene.left.colors_used(), "right": scene.right.colors_used()},
            "branch_components": {
                name: {"total": sum(b.size for b in bs), "max": max(b.size for b in bs)}
                for name, bs in (("alpha", pbd.alpha_branches), ("beta", pbd.beta_branches))
            },
            "persistence": args.persistence,
            "connectivity": args.connectivity,
        }
        _write(args.stats, (json.dumps(stats, sort_keys=True, indent=2) + "\n").encode())
    return EXIT_OK


def _kind(raw):
    if isinstance(raw, dict) and "nodes" in raw and "root" in raw:
        return "tree"
    if isinstance(raw, dict) and {"alpha", "beta", "delta"} <= raw.keys():
        return "interleaving"
    return "unknown"


def cmd_validate(args, out=None) -> int:
    """Check tree files, then interleaving files against the first two trees
    (a single tree file stands for both sides)."""
    out = out or sys.stdout
    reports, trees, pending = [], [], []
    io_error = False
    for path in args.files:
        rep = {"path": path, "ok": False, "violations": []}
        reports.append(rep)
        try:
            data = _read(path, binary=True)
        except CliError as exc:
            rep["kind"], rep["error"] = "unreadable", str(exc)
            io_error = True
            continue
        try:
            raw = json.loads(data)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            rep["kind"], rep["error"] = "unknown", f"invalid JSON: {exc}"
            continue
        rep["kind"] = _kind(raw)
        if rep["kind"] == "tree":
            try:
                t = read_tree(data, validate=False)
            except TreeFormatError as exc:
                rep["error"] = str(exc)
                continue
            rep["violations"] = [v.to_dict() for v in validate_tree(t)]
            rep["ok"] = not rep["violations"]
            rep["leaves"] = t.n_leaves
            trees.append(t)
        elif rep["kind"] == "interleaving":
            pending.append((rep, data))
        else:
            rep["error"] = "neither a tree nor an interleaving"
    for rep, data in pending:
        if not trees:
            rep["error"] = "an interleaving needs the tree files it maps between"
            continue
        try:
            il = read_interleaving(data, trees[0], trees[min(1, len(trees) - 1)])
        except MapFormatError as exc:
            rep["error"] = str(exc)
            continue
        rep["violations"] = [dict(v.to_dict(), map=name) for name, v in interleaving_violations(il, args.exhaustive)]
        rep["ok"] = not rep["violations"]
        rep["delta"] = il.delta
    ok = all(r["ok"] for r in reports)
    print(json.dumps({"ok": ok, "files": reports}, sort_keys=True, indent=2), file=out)
    if io_error:
        return EXIT_IO
    return EXIT_OK if ok else EXIT_INVALID


def _positive_int(lo):
    def parse(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
        if v < lo:
            raise argparse.ArgumentTypeError(f"must be at least {lo}")
        return v
    return parse


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="parkview", description="Draw monotone interleavings of merge trees.")
    sub = p.add_subparsers(dest="command", required=True)

    def drawing(sp):
        sp.add_argument("-o", "--output", required=True, help="SVG file to write")
        sp.add_argument("--grid-fraction", type=_positive_int(1), default=1,
                        help="grid lines every delta/N (default 1)")
        sp.add_argument("--colors", type=_positive_int(3), default=3, help="palette size per tree (default 3)")
        sp.add_argument("--palette-red", type=_palette, default=None, help="comma separated colors")
        sp.add_argument("--palette-blue", type=_palette, default=None, help="comma separated colors")

    r = sub.add_parser("render", help="draw an interleaving given as JSON")
    r.add_argument("--tree-a", required=True)
    r.add_argument("--tree-b", required=True)
    r.add_argument("--interleaving", required=True)
    drawing(r)
    r.set_defaults(func=cmd_render)

    c = sub.add_parser("compare", help="build merge trees from two fields and draw their interleaving")
    c.add_argument("--field-a", required=True)
    c.add_argument("--field-b", required=True)
    c.add_argument("--persistence", type=float, default=0.0, help="absolute simplification threshold")
    c.add_argument("--connectivity", type=int, choices=(4, 8), default=4)
    c.add_argument("--stats", default=None, help="write statistics JSON here")
    drawing(c)
    c.set_defaults(func=cmd_compare)

    v = sub.add_parser("validate", help="check tree and interleaving files, print a JSON report")
    v.add_argument("files", nargs="+")
    v.add_argument("--exhaustive", action="store_true",
                   help="check monotonicity at every critical height and midpoint")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except InvariantError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
