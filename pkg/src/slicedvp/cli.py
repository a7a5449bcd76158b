"""Command-line front end: ``slicedvp {dist,grad,hess,bp-solve,sweep}``.

Reports are JSON (keys sorted, no timestamps) so identical inputs give
identical files.  Exit codes: 0 success, 2 configuration error, 3 numeric
failure.
"""

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import _kernels
from .calculus import fd_atom_gradients, grad_measure, hess_x_measure
from .gauge import (ConvergenceError, GaugeParams, SearchSpace, bp_solve,
                    objective_from_spec, phi_derivative_bounds, verify_conclusions)
from .measure import DimensionMismatch, DiscreteMeasure, TimedMeasure
from .quadrature import gauss_rule
from .sliced import CONVENTION, sw2_sigma_squared, w2_squared_exact
from .sphere import build_rule
from .univariate import TransportUnderflow

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(Exception):
    pass


def _read_json(path):
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}") from None


def _measure(path, base=None):
    if path is None:
        raise ConfigError("a measure file is required")
    p = Path(path)
    if base is not None and not p.is_absolute():
        p = Path(base) / p
    try:
        return DiscreteMeasure.from_dict(_read_json(p))
    except (ValueError, TypeError) as e:
        raise ConfigError(f"{p}: {e}") from None


def _rule(args, k, spec=None):
    spec = dict(spec or {})
    n = args.rule_nodes if args.rule_nodes is not None else spec.get("n_nodes", 64)
    method = args.rule_method or spec.get("method")
    seed = args.seed if args.seed is not None else spec.get("seed", 0)
    return build_rule(k, n, method, seed)


def _quad(args, spec=None):
    if args.hermite is not None:
        return gauss_rule(int(args.hermite))
    return gauss_rule(spec)


def _inputs(args, **extra):
    out = {"command": args.command, "mu": args.mu, "nu": args.nu, "sigma": args.sigma,
           "seed": args.seed, "hermite": args.hermite}
    out.update(extra)
    return out


def _report(body):
    body["convention"] = CONVENTION
    body["backend"] = _kernels.BACKEND
    body["version"] = __version__
    return body


def _pair(args):
    mu, nu = _measure(args.mu), _measure(args.nu)
    if mu.dim != nu.dim:
        raise ConfigError(f"--mu lives in R^{mu.dim} but --nu in R^{nu.dim}")
    return mu, nu


def cmd_dist(args):
    mu, nu = _pair(args)
    rule = _rule(args, mu.dim)
    sigma = 0.0 if args.sigma is None else args.sigma
    rep = sw2_sigma_squared(mu, nu, sigma, rule, _quad(args))
    try:
        oracle = w2_squared_exact(mu, nu)
    except ValueError:
        oracle = None
    body = {"inputs": _inputs(args, sigma=sigma), "result": rep.to_dict(sqrt=args.sqrt),
            "w2_squared_exact": oracle}
    return _report(body)


def _field_cmd(args, build, key):
    mu, nu = _pair(args)
    if args.sigma is None:
        raise ConfigError(f"{args.command} needs --sigma > 0")
    rule = _rule(args, mu.dim)
    f = build(mu, nu, args.sigma, rule, _quad(args))
    body = {"inputs": _inputs(args), "result": f.to_dict(), "rule": rule.describe()}
    if key == "gradient" and args.check_fd:
        fd = fd_atom_gradients(mu, nu, args.sigma, rule, _quad(args))
        scale = max(np.abs(f.values).max(), 1e-300)
        body["fd_check"] = {"fd_gradient": fd.tolist(),
                            "max_relative_error": float(np.abs(fd - f.values).max() / scale)}
    return _report(body)


def cmd_grad(args):
    return _field_cmd(args, grad_measure, "gradient")


def cmd_hess(args):
    return _field_cmd(args, hess_x_measure, "hessian")


def _bp_setup(args):
    if args.config is None:
        raise ConfigError("bp-solve needs --config FILE")
    cfg = _read_json(args.config)
    base = Path(args.config).parent
    try:
        horizon = float(args.horizon if args.horizon is not None else cfg["horizon"])
        lam = float(args.lam if args.lam is not None else cfg["lambda"])
        delta = float(args.delta if args.delta is not None else cfg["delta"])
        entries = cfg["candidates"]
        start = int(cfg.get("start", 0))
        obj_spec = cfg.get("objective", {"kind": "neg_second_moment"})
    except KeyError as e:
        raise ConfigError(f"{args.config}: missing key {e.args[0]!r}") from None
    try:
        params = GaugeParams(delta, horizon)
        cands = [TimedMeasure(float(c["t"]), _measure(c["measure"], base), horizon) for c in entries]
        space = SearchSpace(cands)
    except (KeyError, TypeError) as e:
        raise ConfigError(f"{args.config}: malformed candidate list ({e})") from None
    if not 0 <= start < len(space):
        raise ConfigError(f"{args.config}: start index {start} out of range")
    rule = _rule(args, space.dim, cfg.get("rule"))
    quad = _quad(args, cfg.get("gauss_rule"))
    G = objective_from_spec(obj_spec, rule, quad, load=lambda p: _measure(p, base))
    probes = [TimedMeasure(float(c["t"]), _measure(c["measure"], base), horizon)
              for c in cfg.get("probes", [])]
    return cfg, space, start, lam, params, rule, quad, G, probes


def cmd_bp_solve(args):
    cfg, space, start, lam, params, rule, quad, G, probes = _bp_setup(args)
    res = bp_solve(G, space, space[start], lam, params, rule, quad)
    check = verify_conclusions(res, G, space, lam, params, rule, quad)
    points = [res.selected_point] + probes
    bounds = [phi_derivative_bounds(p, res, params, rule, quad) for p in points]
    if args.log:
        _write_csv(args.log, ["iteration", "selected", "objective", "perturbed", "rho_evaluations"],
                   [[e[k] for k in ("iteration", "selected", "objective", "perturbed", "rho_evaluations")]
                    for e in res.log])
    body = {
        "inputs": {"command": "bp-solve", "config": cfg, "lambda": lam, "delta": params.delta,
                   "horizon": params.horizon, "rule": rule.describe(), "gauss_rule": quad.describe()},
        "result": res.to_dict(),
        "verification": check,
        "derivative_bounds": bounds,
        "passed": bool(check["passed"] and all(b["time"]["ok"] and b["measure"]["ok"]
                                                and b["mixed"]["ok"] for b in bounds)),
    }
    return _report(body)


def _values(text, cast):
    try:
        return [cast(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse value list {text!r}") from None


def cmd_sweep(args):
    mu, nu = _pair(args)
    kind = args.kind
    rows = []
    if kind == "nodes":
        sigma = 0.0 if args.sigma is None else args.sigma
        prev = None
        for n in _values(args.values or "8,16,32,64,128,256", int):
            rule = build_rule(mu.dim, n, args.rule_method, args.seed or 0)
            v = sw2_sigma_squared(mu, nu, sigma, rule, _quad(args)).value
            rows.append([n, sigma, v, "" if prev is None else abs(v - prev)])
            prev = v
        header = ["n_nodes", "sigma", "value", "abs_change"]
    elif kind == "hermite":
        if args.sigma is None:
            raise ConfigError("hermite sweep needs --sigma > 0")
        rule = _rule(args, mu.dim)
        for order in _values(args.values or "8,16,32,64,96,128,lattice", str):
            quad = gauss_rule(None if order == "lattice" else int(order))
            g = grad_measure(mu, nu, args.sigma, rule, quad).values
            fd = fd_atom_gradients(mu, nu, args.sigma, rule, quad)
            err = float(np.abs(fd - g).max() / max(np.abs(g).max(), 1e-300))
            rows.append([order, args.sigma, err])
        header = ["hermite_order", "sigma", "fd_relative_error"]
    elif kind == "sigma":
        rule = _rule(args, mu.dim)
        for s in _values(args.values or "0,0.25,0.5,1,2,4", float):
            rows.append([s, sw2_sigma_squared(mu, nu, s, rule, _quad(args)).value])
        header = ["sigma", "value"]
    else:
        raise ConfigError(f"unknown sweep kind {kind!r}")
    return _csv_text(header + ["convention"], [r + [CONVENTION] for r in rows])


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _write_csv(path, header, rows):
    Path(path).write_text(_csv_text(header, rows))


def build_parser():
    p = argparse.ArgumentParser(prog="slicedvp", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mu", metavar="FILE")
    common.add_argument("--nu", metavar="FILE")
    common.add_argument("--sigma", type=float, metavar="X")
    common.add_argument("--delta", type=float, metavar="X")
    common.add_argument("--lambda", dest="lam", type=float, metavar="X")
    common.add_argument("--horizon", type=float, metavar="T")
    common.add_argument("--rule-nodes", type=int, metavar="N")
    common.add_argument("--rule-method", metavar="M", choices=["exact-pair", "uniform-circle", "monte-carlo"])
    common.add_argument("--hermite", type=int, metavar="N",
                        help="Gauss-Hermite order (default: shared lattice rule)")
    common.add_argument("--seed", type=int, metavar="N")
    common.add_argument("--out", metavar="FILE", help="output file (default: stdout)")
    sub = p.add_subparsers(dest="command", required=True)
    d = sub.add_parser("dist", parents=[common], help="squared sliced distance")
    d.add_argument("--sqrt", action="store_true", help="also report sqrt(value)")
    g = sub.add_parser("grad", parents=[common], help="measure gradient at the atoms of mu")
    g.add_argument("--check-fd", action="store_true", help="compare with finite differences")
    sub.add_parser("hess", parents=[common], help="mixed second derivative at the atoms of mu")
    b = sub.add_parser("bp-solve", parents=[common], help="Borwein-Preiss solver on a candidate list")
    b.add_argument("--config", metavar="FILE", help="JSON config with candidates and objective")
    b.add_argument("--log", metavar="FILE", help="CSV iteration log")
    s = sub.add_parser("sweep", parents=[common], help="convergence sweeps (CSV)")
    s.add_argument("--kind", choices=["nodes", "hermite", "sigma"], default="nodes")
    s.add_argument("--values", metavar="LIST", help="comma separated parameter values")
    return p


COMMANDS = {"dist": cmd_dist, "grad": cmd_grad, "hess": cmd_hess,
            "bp-solve": cmd_bp_solve, "sweep": cmd_sweep}


def _emit(out, path):
    text = out if isinstance(out, str) else json.dumps(out, indent=1, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None):
    args = build_parser().parse_args(argv)
    for name in ("sigma", "delta", "lam", "horizon"):
        v = getattr(args, name)
        if v is not None and not np.isfinite(v):
            print(f"slicedvp: config error: --{name} must be finite", file=sys.stderr)
            return EXIT_CONFIG
    try:
        out = COMMANDS[args.command](args)
    except (ConfigError, DimensionMismatch) as e:
        print(f"slicedvp: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (TransportUnderflow, ConvergenceError, ArithmeticError, np.linalg.LinAlgError) as e:
        print(f"slicedvp: numeric failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as e:
        print(f"slicedvp: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    _emit(out, args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
