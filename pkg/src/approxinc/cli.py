"""Command-line interface: ``approxinc {gen,run,oracle,pairs}``.

Exit codes: 0 success, 2 parameter error, 3 I/O error, 4 oracle budget refusal.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .bench import ALGORITHMS, RESERVED_ALGOS, BenchConfig, oracle, records_to_csv, run_algorithm, \
    run_benchmark
from .errors import InstanceFormatError, OracleBudgetError, ParameterError
from .instances import DIM, KINDS, Instance, gen_random_instance, load_objects, load_points, save_instance

EXIT_OK, EXIT_PARAM, EXIT_IO, EXIT_BUDGET = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_PARAM)


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _tri(text: str) -> tuple[float, float, float]:
    vals = _floats(text)
    if len(vals) != 3:
        raise argparse.ArgumentTypeError("--tri needs u,v,w")
    return tuple(vals)


def _add_instance_args(p, sweep: bool):
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--m", type=_ints if sweep else int, default=[1000] if sweep else 1000,
                   help="number of points" + (" (comma list)" if sweep else ""))
    p.add_argument("--n", type=_ints if sweep else int, default=None,
                   help="number of objects (planted copies for triangle); defaults to m")
    p.add_argument("--seed", type=_ints if sweep else int, default=[0] if sweep else 0)
    p.add_argument("--r", type=float, help="radius for congruent2, congruent3, circle3")
    p.add_argument("--r1", type=float, help="smallest radius for circle2")
    p.add_argument("--r2", type=float, help="largest radius for circle2")
    p.add_argument("--tri", type=_tri, help="reference triangle u,v,w (u longest)")
    p.add_argument("--jitter", type=float, help="vertex jitter of planted triangles")
    p.add_argument("--pair-sampling", action="store_true", help="lines/planes through sampled input points")
    p.add_argument("--in-points", help="points file (overrides random generation)")
    p.add_argument("--in-objects", help="objects file (with --in-points)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="approxinc", description="Approximate incidence algorithms and benchmarks.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write a random instance to PREFIX.points / PREFIX.objects")
    _add_instance_args(g, sweep=False)
    g.add_argument("--out", required=True, help="output prefix")

    r = sub.add_parser("run", help="run a sweep and write CSV")
    _add_instance_args(r, sweep=True)
    r.add_argument("--algo", type=lambda s: [t for t in s.split(",") if t], default=["efficient"],
                   help=f"comma list of {', '.join(list(ALGORITHMS) + list(RESERVED_ALGOS))}")
    r.add_argument("--eps", type=_floats, default=[0.01])
    r.add_argument("--mode", choices=("count", "report", "candidates"), default="count")
    r.add_argument("--no-oracle", action="store_true", help="leave k_true blank")
    r.add_argument("--out", help="CSV path (default stdout)")

    for name, text in (("oracle", "brute-force ground truth"), ("pairs", "report pairs found by an algorithm")):
        o = sub.add_parser(name, help=text)
        _add_instance_args(o, sweep=False)
        o.add_argument("--eps", type=float, required=True)
        if name == "pairs":
            o.add_argument("--algo", default="efficient")
            o.add_argument("--mode", choices=("filtered", "candidates", "count"), default="filtered")
        o.add_argument("--out", help="output path (default stdout)")
    return ap


def _params(args) -> dict:
    params = {}
    for key in ("r", "r1", "r2", "tri", "jitter"):
        v = getattr(args, key, None)
        if v is not None:
            params[key] = v
    return params


def _instance(args) -> Instance:
    params = _params(args)
    if args.in_points:
        P, amap = load_points(args.in_points, DIM[args.kind])
        objects = None
        if args.kind != "triangle":
            if not args.in_objects:
                raise ParameterError("--in-points needs --in-objects for this kind")
            _, objects = load_objects(args.in_objects, args.kind, amap)
            if hasattr(objects, "radius"):
                params["r"] = objects.radius
        if not amap.is_identity:
            params["scale"] = amap.scale
        return Instance(args.kind, P, objects, params, None)
    n = args.m if args.n is None else args.n
    return gen_random_instance(args.kind, args.m, n, args.seed, params, args.pair_sampling)


def _scaled_eps(inst: Instance, eps: float) -> float:
    s = inst.params.get("scale")
    if s is not None:
        print(f"eps rescaled to {eps * s!r} in the normalized frame", file=sys.stderr)
        return eps * s
    return eps


def _open_out(path):
    return open(path, "w", encoding="utf-8", newline="") if path else sys.stdout


def _write_rows(fh, header: str, rows):
    fh.write(header + "\n")
    for row in rows:
        fh.write(",".join(str(v) for v in row) + "\n")


def _cmd_gen(args) -> int:
    inst = _instance(args)
    for p in save_instance(args.out, inst):
        print(p, file=sys.stderr)
    return EXIT_OK


def _cmd_run(args) -> int:
    if args.in_points:
        raise ParameterError("run sweeps random instances; use 'pairs' for input files")
    ns = args.n if args.n is not None else args.m
    cfg = BenchConfig(args.kind, args.algo, args.m, ns, args.eps, args.seed, args.mode, _params(args),
                      equal_mn=args.n is None, with_oracle=not args.no_oracle)
    recs = run_benchmark(cfg)
    fh = _open_out(args.out)
    try:
        records_to_csv(recs, fh)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def _cmd_oracle(args) -> int:
    inst = _instance(args)
    res = oracle(inst, _scaled_eps(inst, args.eps))
    fh = _open_out(args.out)
    try:
        if inst.kind == "triangle":
            _write_rows(fh, "p,q,o,max_deviation", ((*t, repr(float(d))) for t, d in
                                                     zip(res.pairs.tolist(), res.distances)))
        else:
            _write_rows(fh, "point,object,distance", ((p, o, repr(float(d))) for (p, o), d in
                                                       zip(res.pairs.tolist(), res.distances)))
    finally:
        if fh is not sys.stdout:
            fh.close()
    print(f"{res.count} pairs", file=sys.stderr)
    return EXIT_OK


def _cmd_pairs(args) -> int:
    inst = _instance(args)
    res = run_algorithm(inst, args.algo, _scaled_eps(inst, args.eps), args.mode)
    fh = _open_out(args.out)
    try:
        if args.mode == "count":
            fh.write(f"{res}\n")
        elif inst.kind == "triangle":
            _write_rows(fh, "p,q,o,max_deviation", ((*t, repr(float(d))) for t, d in
                                                     zip(res.triples.tolist(), res.max_deviation)))
        else:
            _write_rows(fh, "point,object,distance", ((p, o, repr(float(d))) for (p, o), d in
                                                       zip(res.pairs.tolist(), res.distances)))
    finally:
        if fh is not sys.stdout:
            fh.close()
    if args.mode != "count":
        m = res.metrics
        print(f"strategy={m.strategy} cells_visited={m.cells_visited} candidates={m.candidates} "
              f"dup_factor={m.max_multiplicity} max_distortion={m.max_distortion:.3f}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {"gen": _cmd_gen, "run": _cmd_run, "oracle": _cmd_oracle, "pairs": _cmd_pairs}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except OracleBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (InstanceFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
