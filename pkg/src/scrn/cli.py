"""``scrn`` command-line front end.

Exit codes: 0 success, 1 domain failure (data not separable, model does not
separate, ...), 2 usage error, 3 internal error.  Domain and usage failures
print a single-line JSON object to stderr.  Results go to stdout as JSON;
artifacts (datasets, models, reports, traces, figures) go to the paths
given on the command line.  Every command is deterministic given its flags.
"""

import argparse
import json
import logging
import sys

import numpy as np

from . import construct, data, decompose, geometry, network, plotting, train, verify
from .errors import (
    ConfigError,
    DescentViolation,
    NonFinite,
    ParseError,
    ScrnError,
)

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _emit(obj):
    print(json.dumps(obj, indent=2))


def _fail(kind, exc, **extra):
    reason = {"error": kind, "message": str(exc)}
    for key in ("point_index", "distance", "label", "value", "pair"):
        value = getattr(exc, key, None)
        if value is not None:
            reason[key] = value.tolist() if isinstance(value, np.ndarray) else value
    point = getattr(exc, "point", None)
    if point is not None:
        reason["point"] = [float(v) for v in point]
    reason.update(extra)
    print(json.dumps(reason, default=float), file=sys.stderr)


# -- shared helpers -----------------------------------------------------------

def _load_data(path):
    try:
        return data.load_csv(path)
    except FileNotFoundError:
        raise UsageError(f"no such file: {path}") from None


def _load_model(path):
    try:
        return network.load_model(path)
    except FileNotFoundError:
        raise UsageError(f"no such file: {path}") from None


def _binary(ds, positive):
    if ds.n_classes != 2:
        raise UsageError(f"expected a two-class dataset, found {ds.n_classes} classes")
    if positive not in (0, 1):
        raise UsageError("--positive must be 0 or 1")
    return ds.class_points(positive), ds.class_points(1 - positive)


def _parse_pair(text):
    try:
        a, b = (int(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"--classes expects 'a,b', got {text!r}") from None
    return a, b


def _parse_hidden(text):
    try:
        sizes = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"--hidden expects integers like '2' or '12,4', got {text!r}") from None
    if any(s < 1 for s in sizes):
        raise UsageError(f"hidden sizes must be >= 1, got {text!r}")
    return sizes


def _margins(model, ds, positive=None):
    """Signed per-point margins in dataset order (positive means correct)."""
    Y = np.asarray(model.forward(ds.points)).reshape(len(ds.points), -1)
    if Y.shape[1] == 1:
        sign = np.where(ds.labels == positive, 1.0, -1.0)
        return Y[:, 0] * sign
    S = -np.ones_like(Y)
    S[np.arange(len(Y)), ds.labels] = 1.0
    return (Y * S).min(axis=1)


# -- commands -----------------------------------------------------------------

def _verdicts(ds):
    classes = ds.classes()
    if len(classes) == 2:
        A, B = classes
        mutual, v_ab, v_ba = geometry.is_mutually_convexly_separable(A, B)
        return {
            "linear": geometry.is_linearly_separable(A, B).separable,
            "convex_0_from_1": v_ab.separable,
            "convex_1_from_0": v_ba.separable,
            "mutual_convex": mutual,
        }
    return {"pairwise_mutual_convex": geometry.pairwise_verdicts(classes, "mutual_convex").tolist()}


def cmd_gen(args):
    if args.kind == "xor":
        ds = data.gen_xor()
    elif args.kind == "rings":
        ds = data.gen_rings(
            args.inner, args.outer, args.rin, args.rout,
            include_center=not args.no_center, seed=args.seed, jitter=args.jitter,
        )
    else:
        ds = data.gen_polytope_blobs(args.classes, args.dim, args.per_class, args.separation, args.seed)
    data.save_csv(ds, args.out)
    _emit({"out": args.out, "points": len(ds.points), "dim": ds.dim,
           "classes": ds.n_classes, "verdicts": _verdicts(ds)})
    return EXIT_OK


def cmd_check(args):
    ds = _load_data(args.data)
    if args.mode == "pairwise":
        matrix = geometry.pairwise_verdicts(ds.classes(), "mutual_convex", args.tol)
        _emit({"mode": "pairwise", "separable": bool(matrix.all()), "matrix": matrix.tolist()})
        return EXIT_OK
    a, b = _parse_pair(args.classes)
    if not (0 <= a < ds.n_classes and 0 <= b < ds.n_classes) or a == b:
        raise UsageError(f"--classes {args.classes} does not name two distinct classes")
    A, B = ds.class_points(a), ds.class_points(b)
    out = {"mode": args.mode, "classes": [a, b]}
    if args.mode == "linear":
        out.update(geometry.is_linearly_separable(A, B, args.tol).to_dict())
    elif args.mode == "convex":
        out.update(geometry.is_convexly_separable(A, B, args.tol).to_dict())
    else:
        ok, v_ab, v_ba = geometry.is_mutually_convexly_separable(A, B, args.tol)
        out.update({"separable": ok, "distance": min(v_ab.distance, v_ba.distance),
                    "a_from_b": v_ab.to_dict(), "b_from_a": v_ba.to_dict()})
    _emit(out)
    return EXIT_OK


def cmd_construct(args):
    ds = _load_data(args.data)
    if args.method in ("shl", "thl"):
        Xpos, Xneg = _binary(ds, args.positive)
        build = construct.build_shl_separator if args.method == "shl" else construct.build_thl_separator
        model = build(Xpos, Xneg, args.tol)
        margins = _margins(model, ds, args.positive)
    else:
        build = construct.build_shl_multiclass if args.method == "shl-multi" else construct.build_thl_multiclass
        model = build(ds.classes(), args.tol)
        margins = _margins(model, ds)
    network.save_model(model, args.out)
    summary = {
        "method": args.method,
        "out": args.out,
        "sign_violations": len(network.check_sign_constraints(model)),
        "separates": bool(np.all(margins > 0)),
        "min_margin": float(margins.min()),
        "margins": [float(m) for m in margins],
    }
    if args.method in ("shl", "thl"):
        summary["positive_label"] = args.positive
    _emit(summary)
    return EXIT_OK


def cmd_train(args):
    ds = _load_data(args.data)
    Xpos, Xneg = _binary(ds, args.positive)
    hidden = _parse_hidden(args.hidden) if args.hidden else ((2,) if args.arch == "shl" else (12, 4))
    config = train.TrainConfig(
        lambda_reg=args.lambda_reg, hidden=hidden, max_outer=args.max_outer,
        inner_budget=args.inner_budget, init=args.init, seed=args.seed, restarts=args.restarts,
    )
    trainer = train.train_shl if args.arch == "shl" else train.train_thl
    model, trace = trainer(Xpos, Xneg, config)
    network.save_model(model, args.out)
    if args.trace:
        trace.to_csv(args.trace, timings=args.timings)
    if args.figure:
        plotting.plot_trace(trace, args.figure)
    report = train.hinge_objective(model, Xpos, Xneg, config.lambda_reg).to_dict()
    report.update({
        "arch": args.arch,
        "hidden": list(getattr(model, "hidden_sizes", (getattr(model, "n_hidden", None),))),
        "steps": len(trace.iterations) - 1,
        "initial_total": float(trace.iterations[0].objective),
        "converged": trace.converged,
        "stop_reason": trace.stop_reason,
        "positive_label": args.positive,
    })
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    _emit({k: v for k, v in report.items() if not k.startswith("margins")})
    return EXIT_OK


def cmd_decompose(args):
    ds = _load_data(args.data)
    Xpos, Xneg = _binary(ds, args.positive)
    model = _load_model(args.model)
    kinds = {"shl": (network.Scrn1Model, network.CanonicalShl)}
    allowed = kinds.get(args.mode, (network.Scrn2Model, network.CanonicalThl))
    if not isinstance(model, allowed):
        raise UsageError(f"--mode {args.mode} cannot decompose a {type(model).__name__}")
    if args.mode == "shl":
        report = decompose.shl_decompose(model, Xpos, Xneg)
    elif args.mode == "thl":
        report = decompose.thl_decompose(model, Xpos, Xneg, args.tol)
    else:
        report = decompose.full_drill_down(Xpos, Xneg, model, args.tol)
    doc = report.to_dict()
    doc["pos_label"] = args.positive
    doc["neg_label"] = 1 - args.positive
    with open(args.out, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    if args.figure:
        plotting.plot_dataset(ds, args.figure, model=model, report=doc, title=f"{args.mode} decomposition")
    summary = {"out": args.out, "kind": doc["kind"], "all_verified": doc["all_verified"]}
    if "subsets" in doc:
        summary.update(subsets=len(doc["subsets"]), coverage_ok=doc["coverage_ok"])
    else:
        summary.update(depth=doc["depth"], leaves=sum(len(n["leaves"]) for n in doc["nodes"]))
    _emit(summary)
    return EXIT_OK


def cmd_plot(args):
    ds = _load_data(args.data)
    model = _load_model(args.model) if args.model else None
    report = None
    if args.report:
        try:
            with open(args.report) as fh:
                report = json.load(fh)
        except FileNotFoundError:
            raise UsageError(f"no such file: {args.report}") from None
        except json.JSONDecodeError as exc:
            raise ParseError(f"{args.report}: {exc}") from None
    plotting.plot_dataset(ds, args.out, model=model, report=report, title=args.title)
    _emit({"out": args.out})
    return EXIT_OK


def cmd_verify(args):
    results = verify.run_suite(args.suite, args.seed)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        _fail("PropertyFailed", f"{len(failed)} of {len(results)} properties failed", failed=failed)
        return EXIT_DOMAIN
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="scrn", description="Sign-constrained rectifier networks.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def tol(p):
        p.add_argument("--tol", type=float, default=geometry.DEFAULT_TOL, help="separability tolerance")

    def positive(p):
        p.add_argument("--positive", type=int, default=0, help="label treated as the positive class")

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    p.add_argument("kind", choices=["xor", "rings", "blobs"])
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inner", type=int, default=8)
    p.add_argument("--outer", type=int, default=8)
    p.add_argument("--rin", type=float, default=1.0)
    p.add_argument("--rout", type=float, default=3.0)
    p.add_argument("--jitter", type=float, default=0.0)
    p.add_argument("--no-center", action="store_true")
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--per-class", type=int, default=20)
    p.add_argument("--separation", type=float, default=4.0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("check", help="separability verdicts between classes")
    p.add_argument("--data", required=True)
    p.add_argument("--classes", default="0,1", help="two labels 'a,b'")
    p.add_argument("--mode", required=True, choices=["linear", "convex", "mutual_convex", "pairwise"])
    tol(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("construct", help="build a separator constructively")
    p.add_argument("--data", required=True)
    p.add_argument("--method", required=True, choices=["shl", "shl-multi", "thl", "thl-multi"])
    p.add_argument("--out", required=True)
    positive(p)
    tol(p)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("train", help="MM training of a canonical SCRN")
    p.add_argument("--data", required=True)
    p.add_argument("--arch", required=True, choices=["shl", "thl"])
    p.add_argument("--hidden", help="hidden sizes, e.g. 2 or 12,4")
    p.add_argument("--lambda", dest="lambda_reg", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init", choices=["random", "constructive"], default="random")
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--max-outer", type=int, default=100)
    p.add_argument("--inner-budget", type=int, default=2000)
    p.add_argument("--out", required=True)
    p.add_argument("--trace", help="trace CSV path")
    p.add_argument("--timings", action="store_true", help="record wall time in the trace CSV")
    p.add_argument("--report", help="loss report JSON path")
    p.add_argument("--figure", help="objective-per-step SVG path")
    positive(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("decompose", help="decompose a separating model into convex pieces")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--mode", required=True, choices=["shl", "thl", "drill"])
    p.add_argument("--out", required=True)
    p.add_argument("--figure", help="SVG overlay of the report (2-D data only)")
    positive(p)
    tol(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("plot", help="render a 2-D dataset as SVG")
    p.add_argument("--data", required=True)
    p.add_argument("--model")
    p.add_argument("--report")
    p.add_argument("--title")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("verify", help="run randomised property suites")
    p.add_argument("--suite", choices=["geometry", "surrogates", "descent", "all"], default="all")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        return args.func(args)
    except (UsageError, ConfigError, ParseError) as exc:
        _fail(type(exc).__name__, exc)
        return EXIT_USAGE
    except (DescentViolation, NonFinite) as exc:
        _fail(type(exc).__name__, exc)
        return EXIT_INTERNAL
    except ScrnError as exc:
        _fail(type(exc).__name__, exc)
        return EXIT_DOMAIN
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to the internal exit code
        _fail("InternalError", f"{type(exc).__name__}: {exc}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
