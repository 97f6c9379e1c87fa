"""Command-line entry point: ``tcra <subcommand> [options]``."""

from __future__ import annotations

import argparse
import contextlib
import csv
import hashlib
import io
import json
import logging
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import capacity as cap
from . import density_evolution as de
from . import gf2codes as gf
from . import optimizer as opt
from . import simulator as sim
from .errors import (
    BudgetExceededError,
    ConfigError,
    ConstructionError,
    InfeasiblePatternError,
    TcraError,
)
from .polynomials import DegreePolynomial, TimeNodeLaw, time_node_polys

log = logging.getLogger("tcra")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3


class Infeasible(Exception):
    """Run completed but produced an infeasibility flag."""


# --------------------------------------------------------------------------
# output helpers


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".12g")
    return str(x)


def digest(subcommand: str, config: dict) -> str:
    blob = json.dumps({"subcommand": subcommand, "config": config, "version": __version__},
                      sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def csv_text(header, rows, dig: str) -> str:
    buf = io.StringIO()
    buf.write(f"# tcra {__version__} manifest {dig}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    return buf.getvalue()


class Run:
    """Collects outputs of one invocation and writes them with a manifest."""

    def __init__(self, args, config: dict):
        self.sub = args.command
        self.out = Path(args.out) if args.out else None
        self.config = config
        # output locations do not affect results
        self.digest = digest(self.sub, {k: v for k, v in config.items() if k != "trace"})
        self.files: list[str] = []
        self.t0 = time.time()

    def emit_csv(self, name: str, header, rows) -> None:
        text = csv_text(header, rows, self.digest)
        if self.out is None:
            sys.stdout.write(text)
        else:
            atomic_write(self.out / name, text)
            self.files.append(name)

    def emit_json(self, name: str, obj) -> None:
        text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"
        if self.out is None:
            return
        atomic_write(self.out / name, text)
        self.files.append(name)

    def finish(self, summary: str) -> None:
        if self.out is not None:
            manifest = {"subcommand": self.sub, "config_digest": self.digest,
                        "version": __version__, "seed": self.config.get("seed"),
                        "wall_time_s": round(time.time() - self.t0, 3),
                        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
                        "outputs": self.files, "config": self.config}
            atomic_write(self.out / "manifest.json",
                         json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n")
        print(summary)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


# --------------------------------------------------------------------------
# parsing helpers


def int_range(text: str) -> list[int]:
    """``"3"``, ``"1-12"``, ``"1,2,5-7"`` -> list of ints."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    if not out:
        raise ConfigError(f"empty integer range {text!r}")
    return out


def float_list(text: str) -> list[float]:
    return [float(x) for x in str(text).split(",") if x.strip()]


def load_design(ref: str, seed: int = 0) -> de.SystemDesign:
    rng = np.random.default_rng([seed, 7])
    path = Path(ref)
    if path.exists():
        try:
            obj = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{ref}: malformed JSON ({exc})") from exc
        return de.SystemDesign.from_json(obj, rng=rng)
    stem = path.name.removesuffix(".json")
    if stem in de.BUNDLED:
        return de.bundled_design(stem, rng=rng)
    raise ConfigError(f"design {ref!r} is neither a file nor a bundled design "
                      f"({', '.join(de.BUNDLED)})")


def code_ensemble(spec: str) -> list[gf.LinearBlockCode]:
    """``rm<=7`` (RM family up to m=7) or a ``;``-separated list of named codes."""
    spec = spec.strip()
    if spec.startswith("rm<="):
        return gf.reed_muller_family(int(spec[4:]))
    return [gf.named_code(tok) for tok in spec.split(";") if tok.strip()]


# --------------------------------------------------------------------------
# subcommands


def cmd_threshold(args, run: Run) -> None:
    d = load_design(args.design, args.seed)
    ev_kw = dict(max_iter=args.max_iter)
    res = de.threshold_rate(d, rate_tol=args.rate_tol, mode=args.mode, v2c=args.v2c_perspective,
                            **ev_kw)
    out = {"r_t_star": res.r_t, "flag": res.flag.value, "evaluations": res.evaluations,
           "r_o": d.r_o, "r_max": d.r_max, "n_a_star": d.n_a_star, "epsilon": d.epsilon,
           "mode": args.mode}
    at = args.rate if args.rate is not None else res.r_t
    traj = None
    if isinstance(d.outer, de.BlockOuter):
        traj = de.map_recursion(d, at, v2c=args.v2c_perspective, **ev_kw)
    elif args.mode == "joint":
        traj = de.ldpc_recursion(d, at, **ev_kw)
    if traj is not None:
        out["iterations"] = traj[-1].iteration
    if args.users:
        ur = de.threshold_users(d, at, mode=args.mode, v2c=args.v2c_perspective, **ev_kw)
        out["n_a_max"] = ur.n_a
        out["n_a_flag"] = ur.flag.value
    run.emit_json("threshold.json", out)
    if args.trajectory and traj is not None:
        run.emit_csv("trajectory.csv", ["iteration", "p_e", "p_vc", "p_cv", "p_vt", "p_tv", "p_ct"],
                     [[s.iteration, s.p_e, s.p_vc, s.p_cv, s.p_vt, s.p_tv, s.p_ct] for s in traj])
    msg = f"R_t* = {res.r_t:.6f} ({res.flag.value}; R_o = {d.r_o:.6f}, N_a* = {d.n_a_star}, eps = {d.epsilon})"
    if args.users:
        msg += f"; N_a max at R_t = {at:.6f}: {out['n_a_max']}"
    run.finish(msg)
    if res.flag is de.ThresholdFlag.NO_BRACKET and d.epsilon < 1.0:
        raise Infeasible("recursion diverges at every rate")


def cmd_capacity(args, run: Run) -> None:
    eps = args.eps
    rows = []
    for n in int_range(args.na):
        c = cap.sum_capacity(n, eps)
        if n == 0:
            rows.append([0, 0.0, 0.0, 0.0, 0.0])
            continue
        if args.q is not None:
            Psi, _ = time_node_polys(TimeNodeLaw(n, args.q))
        else:
            Psi = DegreePolynomial.monomial(1)
        rows.append([n, c, c / n, cap.orthogonal_capacity(n, eps),
                     cap.complexity_constrained_capacity(Psi, n, eps)])
    run.emit_csv("capacity.csv", ["n_a", "C", "C_per_user", "orthogonal", "complexity_constrained"],
                 rows)
    summary = f"C({rows[0][0]}, eps={eps}) = {fmt(rows[0][1])}"
    if args.mean_active is not None:
        model = cap.ActivityModel(args.mean_active)
        orows = []
        for p in float_list(args.p_outage):
            r = cap.outage_capacity(model, eps, p)
            ro = cap.outage_capacity(model, eps, p, orthogonal=True)
            orows.append([p, cap.poisson_quantile_users(model, p), r.rate, ro.rate, r.capped])
        run.emit_csv("outage.csv", ["p_outage", "n_a_star", "C_p", "C_p_orthogonal", "capped"], orows)
        summary += f"; outage rows: {len(orows)}"
    run.finish(summary)


def cmd_pe_profile(args, run: Run) -> None:
    code = gf.named_code(args.code)
    rng = np.random.default_rng(args.seed)
    kind = gf.ProfileKind(args.kind)
    if kind is gf.ProfileKind.EXACT and not args.allow_fallback:
        prof = gf.exact_profile(code, args.budget)
    else:
        prof = gf.profile(code, kind, rng=rng, budget=args.budget, samples_per_E=args.samples)
    run.emit_csv("pe_profile.csv", ["E", "P_E", "kind"],
                 [[E, p, prof.kind.value] for E, p in enumerate(prof.p_e)])
    run.emit_json("code.json", code.to_json(prof))
    run.finish(f"{code.label}: n={code.n} k={code.k} d_min={code.d_min} profile={prof.kind.value}")


def _de_config(args) -> opt.DeConfig:
    return opt.DeConfig(population=args.population, mutation_factor=args.F,
                        crossover_rate=args.CR, generations=args.generations,
                        seed=args.seed, threads=args.threads)


def _emit_design(run: Run, res: opt.OptimizationResult, extra: dict) -> None:
    obj = res.design.to_json()
    obj.setdefault("meta", {}).update(extra)
    run.emit_json("design.json", obj)
    run.emit_csv("history.csv", ["generation", "best_r_t"], list(enumerate(res.history)))


def cmd_design_ldpc(args, run: Run) -> None:
    problem = opt.DesignProblem(args.na, args.eps, args.dmax, opt.OuterMode.LDPC,
                                lambda2_max=args.lambda2_max)
    res = opt.optimize_ldpc(problem, _de_config(args))
    _emit_design(run, res, {"d_max": args.dmax, "flag": res.flag.value})
    run.finish(f"R_t* = {res.r_t:.6f} (R_o = {res.design.r_o:.6f}, "
               f"Gamma'(1) = {res.design.gamma.mean_degree():.4f})")
    if res.r_t <= 0.0:
        raise Infeasible("no design with a positive threshold found")


def cmd_design_short(args, run: Run) -> None:
    codes = code_ensemble(args.codes)
    problem = opt.DesignProblem(args.na, args.eps, args.dmax, opt.OuterMode.SHORT, codes,
                                args.profile_kind, v2c=args.v2c_perspective,
                                profile_samples=args.samples)
    res = opt.optimize_short(problem, _de_config(args))
    _emit_design(run, res, {"d_max": args.dmax, "flag": res.flag.value,
                            "profile_kind": args.profile_kind, "per_code": res.per_code})
    run.finish(f"R_t* = {res.r_t:.6f} with {res.code.label} (n={res.code.n}, k={res.code.k})")
    if res.r_t <= 0.0:
        raise Infeasible("every code scored zero")


def cmd_simulate(args, run: Run) -> None:
    d = load_design(args.design, args.seed)
    n = args.n
    if n is None:
        if isinstance(d.outer, de.BlockOuter):
            n = d.outer.code.n
        else:
            raise ConfigError("--n (blocklength) is required for this design")
    if args.trace:
        Path(args.trace).parent.mkdir(parents=True, exist_ok=True)
    trace = open(args.trace, "w") if args.trace else None  # noqa: SIM115
    try:
        rows = sim.run_sweep(d, n, int_range(args.na), args.frames, args.seed,
                             decoder=args.decoder, r_t=args.rate, t_slots=args.T,
                             max_iters=args.max_iters, threads=args.threads, trace=trace)
    finally:
        if trace is not None:
            trace.close()
    run.emit_csv("sweep.csv", ["n_a", "frames", "mean_residual", "std", "mean_iters"],
                 [[r.n_a, r.frames, r.mean_residual, r.std, r.mean_iters] for r in rows])
    run.finish(f"simulated {len(rows)} point(s), {args.frames} frame(s) each")


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with option values (flags override)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1, help="worker processes, 0 = auto")
    common.add_argument("--out", help="output directory (CSV goes to stdout when omitted)")

    p = argparse.ArgumentParser(prog="tcra", description=__doc__)
    p.add_argument("--version", action="version", version=f"tcra {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("threshold", parents=[common], help="density-evolution rate threshold")
    t.add_argument("--design", required=True, help="design JSON path or bundled name")
    t.add_argument("--mode", choices=["joint", "tandem"], default="joint")
    t.add_argument("--v2c-perspective", choices=["edge", "node"], default="edge")
    t.add_argument("--rate-tol", type=float, default=de.RATE_TOL)
    t.add_argument("--max-iter", type=int, default=de.MAX_ITER)
    t.add_argument("--users", action="store_true", help="also report the largest N_a at the rate")
    t.add_argument("--rate", type=float, help="rate for --users/--trajectory (default: R_t*)")
    t.add_argument("--trajectory", action="store_true", help="write trajectory.csv")
    t.set_defaults(func=cmd_threshold)

    c = sub.add_parser("capacity", parents=[common], help="capacity tables")
    c.add_argument("--na", default="1", help="user counts, e.g. 1-20")
    c.add_argument("--eps", type=float, default=0.0)
    c.add_argument("--q", type=float, help="slot probability for the complexity-constrained column")
    c.add_argument("--mean-active", type=float, help="Poisson mean for outage rows")
    c.add_argument("--p-outage", default="0.1", help="comma list of outage probabilities")
    c.set_defaults(func=cmd_capacity)

    e = sub.add_parser("pe-profile", parents=[common], help="erasure-failure profile of a code")
    e.add_argument("--code", required=True,
                   help="hamming74, hamming:m, spc:n, rm:r,m, cyclic24 or a code JSON path")
    e.add_argument("--kind", choices=[k.value for k in gf.ProfileKind], default="exact")
    e.add_argument("--samples", type=int, default=100_000, help="samples per E (sampled kind)")
    e.add_argument("--budget", type=int, default=gf.DEFAULT_BUDGET)
    e.add_argument("--allow-fallback", action="store_true", default=True,
                   help="switch exact to sampled beyond the budget (default)")
    e.add_argument("--strict", dest="allow_fallback", action="store_false",
                   help="fail instead of falling back to sampling")
    e.set_defaults(func=cmd_pe_profile)

    for name, fn, helptext in (("design-ldpc", cmd_design_ldpc, "optimize an LDPC-outer design"),
                               ("design-short", cmd_design_short, "optimize a short-code design")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("--na", type=int, required=True, help="target number of users N_a*")
        s.add_argument("--eps", type=float, required=True)
        s.add_argument("--dmax", type=int, default=13)
        s.add_argument("--generations", type=int, default=300)
        s.add_argument("--population", type=int, default=None)
        s.add_argument("--F", type=float, default=0.7)
        s.add_argument("--CR", type=float, default=0.9)
        if name == "design-ldpc":
            s.add_argument("--lambda2-max", type=float, default=None)
        else:
            s.add_argument("--codes", default="rm<=7",
                           help="'rm<=M' for the RM family or ';'-separated code names")
            s.add_argument("--profile-kind", choices=[k.value for k in gf.ProfileKind],
                           default="exact")
            s.add_argument("--samples", type=int, default=100_000)
            s.add_argument("--v2c-perspective", choices=["edge", "node"], default="edge")
        s.set_defaults(func=fn)

    m = sub.add_parser("simulate", parents=[common], help="frame-level Monte Carlo sweep")
    m.add_argument("--design", required=True)
    m.add_argument("--n", type=int, help="coded blocklength per user")
    m.add_argument("--T", type=int, help="slots per frame (default round(n / R_i))")
    m.add_argument("--rate", type=float, help="per-user rate used to size the frame")
    m.add_argument("--na", default="1-10")
    m.add_argument("--frames", type=int, default=100)
    m.add_argument("--decoder", choices=[x.value for x in sim.Decoder], default=None)
    m.add_argument("--max-iters", type=int, default=200)
    m.add_argument("--trace", help="write per-frame JSONL traces to this path")
    m.set_defaults(func=cmd_simulate)
    return p


def _apply_config(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    known = vars(args)
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    bad = sorted(k for k in cfg if k not in known or k in ("func", "command", "config"))
    if bad:
        raise ConfigError(f"unknown config key(s): {', '.join(bad)}")
    sub = parser._subparsers._group_actions[0].choices[args.command]  # noqa: SLF001
    sub.set_defaults(**cfg)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("TCRA_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code) if isinstance(exc.code, int) else EXIT_CONFIG
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "config")}
    run = Run(args, config)
    try:
        args.func(args, run)
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InfeasiblePatternError, ConstructionError, BudgetExceededError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValueError, TcraError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
