"""Command-line interface: ``mublab <command> [options]``.

Exit status is 0 on success, 2 on a finding (pattern hit, failed MU check,
constraint violation, low-defect review flag) and 1 on error.
"""
import argparse
import json
import logging
import os
import sys

import jsonschema
import numpy as np

from . import __version__
from .acceptance import run_acceptance
from .bipartite import classify_product_basis
from .constructor import (
    Prop1Params,
    Prop2Params,
    build_family,
    build_prop1_candidate,
    build_prop2_candidate,
    build_T0,
    build_T1,
    check_prop1_constraints,
    complete_mub_prime,
    random_family_params,
)
from .exceptions import DimensionError, MublabError
from .mulab import mu_vectors_multi
from .patterns import detect_patterns, transform_variant, trio_check
from .schemas import validate
from .search import DEFAULT_SCREENS, grid_census, minimize_defect, write_reports
from .serialize import load_matrix, matrix_from_json, matrix_to_json, to_jsonable
from .validation import DEFAULT_TOL, Tolerance, check_unitary

EXIT_OK, EXIT_ERROR, EXIT_FINDING = 0, 1, 2

logger = logging.getLogger("mublab")


def default_seed():
    raw = os.environ.get("MUBLAB_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"error: MUBLAB_SEED must be an integer, got {raw!r}")


class Parser(argparse.ArgumentParser):
    """Usage errors exit with 1; 2 is reserved for findings."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def existing_file(path):
    if not os.path.isfile(path):
        raise argparse.ArgumentTypeError(f"no such file: {path}")
    return path


def positive_float(text):
    val = float(text)
    if not val > 0:
        raise argparse.ArgumentTypeError(f"tolerance must be positive, got {text}")
    return val


def make_tolerance(args):
    pred = args.tol if args.tol is not None else DEFAULT_TOL.predicate_tol
    search = args.search_tol if args.search_tol is not None else max(DEFAULT_TOL.search_tol, pred)
    return Tolerance(pred, max(search, pred))


def require_files(paths, flag, count=None):
    """Check paths given on the command line or through ``--config``."""
    paths = [paths] if isinstance(paths, str) else list(paths or [])
    if not paths:
        raise MublabError(f"{flag} is required")
    if count is not None and len(paths) != count:
        raise MublabError(f"expected exactly {count} {flag} arguments, got {len(paths)}")
    for p in paths:
        existing_file_or_raise(p)
    return paths


def existing_file_or_raise(path):
    if not os.path.isfile(path):
        raise MublabError(f"no such file: {path}")
    return path


def load_json_file(path):
    from .exceptions import MatrixParseError

    with open(path) as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise MatrixParseError(f"{path}: {exc.msg}", exc.lineno, exc.colno) from None


def emit(obj, schema, args):
    validate(obj, schema)
    text = json.dumps(obj, indent=2 if args.format == "pretty" else None, sort_keys=args.format == "pretty")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


# ---------------------------------------------------------------------------
# commands


def cmd_verify(args, tol):
    names = list(args.mub or [])
    mats = [load_matrix(existing_file_or_raise(p)) for p in names]
    if args.bundle:
        bundle = load_json_file(existing_file_or_raise(args.bundle))
        for k, m in bundle["bases"].items():
            names.append(f"{args.bundle}:{k}")
            mats.append(matrix_from_json(m, name=k))
    if len(mats) < 2:
        raise MublabError("verify needs at least two bases (--mub twice, or --bundle)")
    mats = [check_unitary(M, tol, name=n) for n, M in zip(names, mats)]
    for n, M in zip(names[1:], mats[1:]):
        if M.shape != mats[0].shape:
            raise DimensionError(f"{n} has order {M.shape[0]}, but {names[0]} has order {mats[0].shape[0]}")
    from .mulab import overlap_deviation

    pairs = [{"i": i, "j": j, "defect": overlap_deviation(mats[i], mats[j])}
             for i in range(len(mats)) for j in range(i + 1, len(mats))]
    worst = max(p["defect"] for p in pairs)
    ok = worst <= tol.search_tol
    emit({"schema": "mublab/verify/v1", "pairs": pairs, "max_defect": worst, "mutually_unbiased": ok},
         "verify", args)
    return EXIT_OK if ok else EXIT_FINDING


def cmd_classify(args, tol):
    w = classify_product_basis(load_matrix(require_files(args.matrix, "--matrix", 1)[0]), tol)
    emit(w.to_json(), "family-witness", args)
    return EXIT_OK


def cmd_mu_vectors(args, tol):
    bases = [load_matrix(p) for p in require_files(args.matrix, "--matrix")]
    en = mu_vectors_multi(bases, tol, grid_depth=args.grid_depth, n_starts=args.n_starts,
                          random_state=args.seed, include_identity=not args.no_identity)
    emit(en.to_json(), "mu-enumeration", args)
    return EXIT_OK


def cmd_patterns(args, tol):
    M = load_matrix(require_files(args.matrix, "--matrix", 1)[0])
    if args.variant:
        M = transform_variant(M, args.variant)
    certs = [c.to_json() for c in detect_patterns(M, tol)]
    emit(certs, "pattern-certificates", args)
    return EXIT_FINDING if certs else EXIT_OK


def cmd_trio(args, tol):
    paths = require_files(args.matrix, "--matrix", 3)
    res = trio_check(*(load_matrix(p) for p in paths), tol=tol, screen_patterns=args.screen_patterns)
    emit({"schema": "mublab/trio/v1", "is_trio": res.is_trio, "defects": list(res.defects),
          "contradictions": res.contradictions}, "trio", args)
    return EXIT_OK if res.is_trio and not res.contradictions else EXIT_FINDING


def cmd_construct(args, tol):
    rng = np.random.default_rng(args.seed)
    params = load_json_file(args.params) if args.params else None
    violations, echo = [], params
    if args.what == "prop1":
        p = Prop1Params.from_json(params) if params else Prop1Params.random(rng)
        violations = check_prop1_constraints(p, tol).violations
        bases, echo = build_prop1_candidate(p, tol), p.to_json()
    elif args.what == "prop2":
        p = Prop2Params.from_json(params) if params else Prop2Params.random(rng)
        violations = check_prop1_constraints(p.prop1, tol).violations
        bases, echo = build_prop2_candidate(p, tol), p.to_json()
    elif args.what in ("t0", "t1"):
        build = build_T0 if args.what == "t0" else build_T1
        bases = dict(zip(("first", "second", "third"), build(complete_mub_prime(2), complete_mub_prime(3), tol)))
    elif args.what == "family":
        fam = args.family or (params or {}).get("family", "P1")
        if params:
            kw = {k: (matrix_from_json(v, name=k) if isinstance(v, dict) else
                      np.array([complex(*z) for z in v])) for k, v in params.items() if k != "family"}
            kw = {k: (v.ravel() if v.ndim == 2 and 1 in v.shape else v) for k, v in kw.items()}
        else:
            kw = random_family_params(fam, rng)
        bases = {fam: build_family(fam, tol, **kw)}
        echo = {"family": fam, **to_jsonable(kw)}
    else:
        raise MublabError(f"--what must be one of prop1, prop2, t0, t1, family (got {args.what!r})")
    out = {"schema": "mublab/bundle/v1", "what": args.what,
           "bases": {k: matrix_to_json(v) for k, v in bases.items()},
           "metadata": {"params": echo, "seed": args.seed, "violations": violations,
                        "tolerance": {"predicate_tol": tol.predicate_tol, "search_tol": tol.search_tol}}}
    emit(out, "bundle", args)
    return EXIT_FINDING if violations else EXIT_OK


def cmd_search(args, tol):
    if args.grid:
        space = load_json_file(args.grid)
        seed = args.seed if args.seed is not None else space.get("seed", default_seed())
        screens = args.screens.split(",") if args.screens else space.get("screens", list(DEFAULT_SCREENS))
        if not args.out:
            raise MublabError("search --grid needs --out for the JSON-lines reports")
        opts = {"restarts": args.restarts, "max_iters": args.max_iters}
        reviewed = screened = 0
        total_written, all_errors = 0, []
        for rep in grid_census(space, screens, seed=seed, tol=tol, minimize_opts=opts):
            written, errors = write_reports([rep], args.out)
            total_written += written
            all_errors += errors
            reviewed += rep.review
            screened += rep.screened_out
        summary = {"records": total_written, "screened_out": screened, "review": reviewed,
                   "write_errors": all_errors, "out": args.out}
        print(json.dumps(summary, indent=2 if args.format == "pretty" else None))
        if all_errors:
            return EXIT_ERROR
        return EXIT_FINDING if reviewed else EXIT_OK
    seed = args.seed if args.seed is not None else default_seed()
    start = Prop2Params.from_json(load_json_file(args.start)) if args.start \
        else Prop2Params.random(np.random.default_rng(seed))
    rep = minimize_defect(start, seed=seed, restarts=args.restarts, max_iters=args.max_iters, tol=tol)
    if args.out:
        write_reports([rep], args.out)
    else:
        print(rep.dumps())
    return EXIT_FINDING if rep.review else EXIT_OK


def cmd_reproduce(args, tol):
    """Print the pass/fail table; ``--out`` also writes the JSON report."""
    only = set(args.only) if args.only else None
    report = run_acceptance(seed=args.seed, faults=args.inject or (), only=only)
    print(f"{sum(r.passed for r in report.results)}/{len(report.results)} criteria passed")
    if args.out:
        obj = validate(report.to_json(), "acceptance")
        with open(args.out, "w") as fh:
            json.dump(obj, fh, indent=2)
    return EXIT_OK if report.passed else EXIT_ERROR


COMMANDS = {
    "verify": cmd_verify, "classify": cmd_classify, "mu-vectors": cmd_mu_vectors,
    "patterns": cmd_patterns, "trio": cmd_trio, "construct": cmd_construct,
    "search": cmd_search, "reproduce": cmd_reproduce,
}


def build_parser():
    common = Parser(add_help=False)
    common.add_argument("--tol", type=positive_float, default=None, help="predicate tolerance (default 1e-9)")
    common.add_argument("--search-tol", type=positive_float, default=None,
                        help="search/SVD tolerance (default 1e-6)")
    common.add_argument("--seed", type=int, default=None, help="random seed (default: $MUBLAB_SEED or 0)")
    common.add_argument("--out", "-o", default=None, help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "pretty"), default="json")
    common.add_argument("--config", type=existing_file, default=None,
                        help="JSON file whose keys supply defaults for this command's options")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = Parser(prog="mublab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=Parser)
    subs = {}

    p = sub.add_parser("verify", parents=[common], help="pairwise MU check of bases")
    p.add_argument("--mub", action="append", type=existing_file, help="matrix JSON (repeat)")
    p.add_argument("--bundle", type=existing_file, help="bundle JSON from 'construct'")
    subs["verify"] = p

    p = sub.add_parser("classify", parents=[common], help="P1/P2/P3 family of a product basis")
    p.add_argument("--matrix", type=existing_file)
    subs["classify"] = p

    p = sub.add_parser("mu-vectors", parents=[common], help="enumerate vectors MU to I and the given bases")
    p.add_argument("--matrix", action="append", type=existing_file)
    p.add_argument("--grid-depth", type=int, default=7)
    p.add_argument("--n-starts", type=int, default=200)
    p.add_argument("--no-identity", action="store_true",
                   help="do not add the identity; the first matrix plays its role")
    subs["mu-vectors"] = p

    p = sub.add_parser("patterns", parents=[common], help="Y1-Y7 certificates of an order-6 CHM")
    p.add_argument("--matrix", type=existing_file)
    p.add_argument("--variant", choices=("adjoint", "conjugate", "transpose"))
    subs["patterns"] = p

    p = sub.add_parser("trio", parents=[common], help="check that three CHMs form an MUB trio")
    p.add_argument("--matrix", action="append", type=existing_file)
    p.add_argument("--screen-patterns", action="store_true")
    subs["trio"] = p

    p = sub.add_parser("construct", parents=[common], help="build candidate or reference bases")
    p.add_argument("--what", choices=("prop1", "prop2", "t0", "t1", "family"))
    p.add_argument("--params", type=existing_file)
    p.add_argument("--family", choices=("P1", "P2", "P3"))
    subs["construct"] = p

    p = sub.add_parser("search", parents=[common], help="grid census or defect minimization")
    p.add_argument("--grid", type=existing_file, help="grid spec JSON (census mode)")
    p.add_argument("--screens", help="comma-separated: constraints,census,patterns,defect,minimize")
    p.add_argument("--start", type=existing_file, help="starting parameters JSON (minimize mode)")
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--max-iters", type=int, default=20)
    subs["search"] = p

    p = sub.add_parser("reproduce", parents=[common], help="run the acceptance suite")
    p.add_argument("--inject", action="append", choices=("eq13",), help="inject a known fault")
    p.add_argument("--only", type=int, nargs="+", help="criterion numbers to run")
    subs["reproduce"] = p
    return parser, subs


def parse_args(argv):
    parser, subs = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        if not os.path.isfile(known.config):
            parser.error(f"no such file: {known.config}")
        config = load_json_file(known.config)
        command = config.pop("command", None)
        if command and not any(a in COMMANDS for a in argv):
            argv = [command] + argv
        target = next((a for a in argv if a in COMMANDS), None)
        if target:
            subs[target].set_defaults(**{k.replace("-", "_"): v for k, v in config.items()})
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        parser.exit(EXIT_ERROR)
    return args


def main(argv=None):
    try:
        args = parse_args(argv)
    except MublabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is None and args.command != "search":
        args.seed = default_seed()
    try:
        tol = make_tolerance(args)
        return COMMANDS[args.command](args, tol)
    except (MublabError, ValueError, KeyError, OSError, jsonschema.ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
