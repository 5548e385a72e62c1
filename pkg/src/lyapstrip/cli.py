"""Command-line harness: one subcommand per experiment, CSV or JSON reports.

Exit status: 0 success, 2 usage error, 3 numerical failure, 4 I/O failure.
"""
import argparse
import math
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .barrier import (barrier_check, barrier_probability, lift_potential,
                      verify_decoupling)
from .errors import (AggregationError, ConfigurationError, InconclusiveError,
                     InvalidArgumentError, LyapStripError, NearSingularError,
                     PreconditionError, UnsupportedDisorderError)
from .lattice import DisorderSpec, Interval, StripModel, assemble_hamiltonian, sample_potential
from .msa import (chain_bound, classify_intervals, default_thresholds, log_corollary_bound,
                  minimal_feasible_log_A, schedule)
from .report import ReportDocument, write_atomic
from .resolvent import decay_profile
from .schur import (PartitionedOperator, eigen_distance_probe, gaussian_symmetric,
                    restricted_inverse, schur_reduce, wegner_probe)
from .seeding import derive_seed
from .transfer import lyapunov_spectrum

EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 2, 3, 4

SUBCOMMANDS = ("lyapunov", "green-decay", "wegner", "eigen-distance", "barrier",
               "barrier-prob", "decouple-check", "msa-classify", "msa-chain",
               "msa-schedule", "corollary-bound", "schur-verify")


class UsageError(Exception):
    pass


# ------------------------------------------------------------------ arg types

def positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def nonneg_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def finite_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be finite, got {text!r}")
    return v


def float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def disorder_type(text):
    try:
        return DisorderSpec.parse(text)
    except InvalidArgumentError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# ------------------------------------------------------------------- parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _common(p):
    p.add_argument("--seed", type=nonneg_int, default=0, help="master seed (default 0)")
    p.add_argument("--out", default="-", help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--threads", type=positive_int, default=1, help="worker threads")
    p.add_argument("--config", help="key=value file; explicit flags win")


def _model(p, energy=0.0, dist="uniform:-0.5,0.5", width=1):
    p.add_argument("--width", type=positive_int, default=width)
    p.add_argument("--lambda", dest="coupling", type=finite_float, default=1.0)
    p.add_argument("--dist", type=disorder_type, default=dist,
                   help="disorder law kind:params, e.g. uniform:-0.5,0.5")
    p.add_argument("--energy", type=finite_float, default=energy)


def build_parser():
    parser = _Parser(prog="lyapstrip", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("lyapunov", help="Lyapunov spectrum of the strip")
    _model(p)
    _common(p)
    p.add_argument("--steps", type=positive_int, default=100000)
    p.add_argument("--reorth-period", type=positive_int, default=10)

    p = sub.add_parser("green-decay", help="averaged Green's function block decay")
    _model(p)
    _common(p)
    p.add_argument("--size", "-N", type=positive_int, default=100)
    p.add_argument("--trials", type=positive_int, default=10)

    for name, grid, default in (("wegner", "--lambdas", "10,30,100,300,1000"),
                                ("eigen-distance", "--kappas", "0,0.001,0.003,0.01,0.03,0.1")):
        p = sub.add_parser(name, help="Schur-complement tail probe")
        _common(p)
        p.add_argument("--dist", type=disorder_type, default="uniform:0,1")
        p.add_argument("--size", type=positive_int, default=20, help="size of T")
        p.add_argument("--omega1", type=positive_int, default=4, help="|omega1| (evenly spaced)")
        p.add_argument("--t-seed", type=nonneg_int, default=1, help="seed of the fixed T")
        p.add_argument(grid, dest="grid", type=float_list, default=default)
        p.add_argument("--trials", type=positive_int, default=20000)

    p = sub.add_parser("barrier", help="barrier certificate of one realization")
    _model(p)
    _common(p)
    p.add_argument("--size", "-N", type=positive_int, default=16)
    p.add_argument("--c", type=finite_float, default=0.2)
    p.add_argument("--lifted", action="store_true", help="use a column-constant potential")
    p.add_argument("--decay-mode", choices=("entry", "block"), default="entry")

    p = sub.add_parser("barrier-prob", help="probability of a barrier")
    _model(p, dist="uniform:-2,2")
    _common(p)
    p.add_argument("--size", "-N", type=positive_int, default=8)
    p.add_argument("--c", type=finite_float, default=0.2)
    p.add_argument("--trials", type=positive_int, default=10000)
    p.add_argument("--decay-mode", choices=("entry", "block"), default="entry")

    p = sub.add_parser("decouple-check", help="transverse DFT decoupling residuals")
    _model(p, energy=0.3)
    _common(p)
    p.add_argument("--size", "-N", type=positive_int, default=32)
    p.add_argument("--samples", type=positive_int, default=10)

    for name in ("msa-classify", "msa-chain"):
        p = sub.add_parser(name, help="good intervals" if name == "msa-classify" else "chain bound")
        _model(p, dist="uniform:-6,6", width=2)
        _common(p)
        p.add_argument("-M", "--M", dest="M", type=positive_int, default=8)
        p.add_argument("-n", "--n", dest="n", type=positive_int, default=5)
        p.add_argument("--c", type=finite_float, default=0.2)
        p.add_argument("--delta", type=finite_float, default=None,
                       help="use the single e^(-delta M) criterion instead")
        if name == "msa-chain":
            p.add_argument("--trials", type=positive_int, default=10)

    p = sub.add_parser("msa-schedule", help="log-space scale schedule")
    _common(p)
    p.add_argument("--width", type=positive_int, default=2)
    p.add_argument("-A", dest="A", type=finite_float, default=None)
    p.add_argument("--log-A", dest="log_A", type=finite_float, default=None)
    p.add_argument("--stages", type=positive_int, default=10)
    p.add_argument("--c", type=finite_float, default=1.0)
    p.add_argument("--strict", action="store_true", help="fail on an infeasible stage 0")

    p = sub.add_parser("corollary-bound", help="C^(-W (log W)^4)")
    _common(p)
    p.add_argument("--widths", type=int_list, default="2,3,4,6,8")
    p.add_argument("--C", dest="C", type=finite_float, default=math.e)

    p = sub.add_parser("schur-verify", help="Schur reduction vs dense inverse")
    _common(p)
    p.add_argument("--instances", type=positive_int, default=100)
    p.add_argument("--max-size", type=positive_int, default=40)
    p.add_argument("--max-omega1", type=positive_int, default=8)
    return parser


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices.get(name)
    return None


def read_config(path):
    """``key=value`` lines; ``#`` starts a comment; keys may use - or _."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            out[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return out


@dataclass
class ExperimentConfig:
    subcommand: str
    options: dict

    def __getattr__(self, name):
        try:
            return self.__dict__["options"][name]
        except KeyError:
            raise AttributeError(name) from None

    def echo(self):
        return {k: (str(v) if isinstance(v, DisorderSpec) else v)
                for k, v in sorted(self.options.items()) if k not in ("out", "config")}


def parse_cli(args):
    """Parse ``args`` into an :class:`ExperimentConfig` (raises UsageError)."""
    parser = build_parser()
    ns = parser.parse_args(args)
    if ns.config:
        sp = _subparser(parser, ns.subcommand)
        try:
            values = read_config(ns.config)
        except OSError as exc:
            raise UsageError(f"cannot read config {ns.config}: {exc}") from None
        dests = {a.dest for a in sp._actions}
        unknown = sorted(set(values) - dests)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        for a in sp._actions:
            if a.dest in values and a.type is not None:
                try:
                    a.type(values[a.dest])
                except argparse.ArgumentTypeError as exc:
                    raise UsageError(f"config key {a.dest}: {exc}") from None
        sp.set_defaults(**values)
        ns = parser.parse_args(args)
        for key in ("lifted", "strict"):
            if isinstance(getattr(ns, key, None), str):
                setattr(ns, key, getattr(ns, key).lower() in ("1", "true", "yes"))
    opts = vars(ns)
    name = opts.pop("subcommand")
    return ExperimentConfig(name, opts)


# -------------------------------------------------------------- experiments

def _model_of(cfg):
    return StripModel(cfg.width, cfg.coupling, cfg.dist)


def run_lyapunov(cfg, doc):
    res = lyapunov_spectrum(_model_of(cfg), cfg.energy, cfg.steps, cfg.reorth_period, cfg.seed)
    doc.columns = ["k", "exponent", "stderr"]
    doc.rows = [[k + 1, float(g), float(s)] for k, (g, s) in enumerate(zip(res.exponents, res.stderr))]
    W = cfg.width
    doc.metadata["gamma_W"] = float(res.exponents[W - 1])
    doc.metadata["gamma_W_stderr"] = float(res.stderr[W - 1])


def run_green_decay(cfg, doc):
    prof = decay_profile(_model_of(cfg), cfg.energy, Interval.of_size(cfg.size), cfg.trials,
                         cfg.seed, cfg.threads)
    doc.columns = ["distance", "mean_log_norm", "count"]
    doc.rows = [[int(d), float(m), int(c)] for d, m, c in prof.rows()]
    doc.metadata.update(fitted_rate=prof.fitted_rate, fit_min_distance=prof.fit_min_distance,
                        excluded=prof.excluded)


def _probe_operator(cfg):
    if cfg.omega1 > cfg.size:
        raise InvalidArgumentError("omega1 larger than the operator")
    T = gaussian_symmetric(cfg.size, cfg.t_seed)
    om1 = np.linspace(0, cfg.size - 1, cfg.omega1).round().astype(int)
    return PartitionedOperator(T, tuple(om1))


def _tail_rows(doc, est, label):
    doc.columns = [label, "count", "raw_prob", "tail_prob", "ci_low", "ci_high"]
    doc.rows = [[float(g), int(k), float(p), float(q), float(lo), float(hi)]
                for g, k, p, q, lo, hi in zip(est.grid, est.counts, est.raw_prob, est.tail_prob,
                                              est.ci_low, est.ci_high)]
    doc.metadata["slope"] = est.slope
    doc.metadata["regularized"] = est.regularized


def run_wegner(cfg, doc):
    p = _probe_operator(cfg)
    est = wegner_probe(p, cfg.dist, cfg.grid, cfg.trials, cfg.seed, cfg.threads)
    _tail_rows(doc, est, "lambda")
    doc.metadata["max_tail_times_lambda"] = float((est.raw_prob * est.grid).max())


def run_eigen_distance(cfg, doc):
    p = _probe_operator(cfg)
    est = eigen_distance_probe(p, cfg.dist, cfg.grid, cfg.trials, cfg.seed, cfg.threads)
    _tail_rows(doc, est, "kappa")
    doc.metadata["wegner_cap"] = 2.0 * cfg.omega1 * cfg.dist.density_bound


_CERT_COLUMNS = ["N", "E", "c", "norm_bound", "max_far_entry", "max_far_block",
                 "pass_norm", "pass_decay", "max_passing_c"]


def _cert_row(cert):
    return [cert.N, cert.E, cert.c, cert.norm_bound, cert.max_far_entry, cert.max_far_block,
            cert.pass_norm, cert.pass_decay, cert.max_passing_c]


def run_barrier(cfg, doc):
    model = _model_of(cfg)
    interval = Interval.of_size(cfg.size)
    if cfg.lifted:
        v = cfg.dist.sample(np.random.default_rng(cfg.seed), cfg.size)
        pot = lift_potential(v, cfg.width)
    else:
        pot = sample_potential(model, interval, cfg.seed)
    cert = barrier_check(assemble_hamiltonian(model, pot, interval), cfg.energy, cfg.c,
                         cfg.decay_mode)
    doc.columns = _CERT_COLUMNS
    doc.rows = [_cert_row(cert)]


def run_barrier_prob(cfg, doc):
    est = barrier_probability(cfg.size, cfg.width, cfg.energy, cfg.c, cfg.dist, cfg.trials,
                              cfg.seed, cfg.coupling, cfg.decay_mode, cfg.threads)
    doc.columns = ["probability", "ci_low", "ci_high", "successes", "trials"]
    doc.rows = [[est.probability, est.ci_low, est.ci_high, est.successes, est.trials]]


def run_decouple_check(cfg, doc):
    model = _model_of(cfg)
    doc.columns = ["sample", "residual", "parseval_error"]
    for k in range(cfg.samples):
        rng = np.random.default_rng(derive_seed(cfg.seed, 2 * k))
        v = cfg.dist.sample(rng, cfg.size)
        chk = verify_decoupling(model, v, cfg.energy, Interval.of_size(cfg.size),
                                derive_seed(cfg.seed, 2 * k + 1))
        doc.rows.append([k, chk.residual, chk.parseval_error])
    doc.metadata["max_residual"] = max(r[1] for r in doc.rows)


def _thresholds(cfg):
    if cfg.delta is not None:
        return default_thresholds(cfg.M, delta=cfg.delta)
    return default_thresholds(cfg.M, c=cfg.c)


def run_msa_classify(cfg, doc):
    model = _model_of(cfg)
    pot = sample_potential(model, Interval(0, cfg.n * cfg.M), cfg.seed)
    nt, dt = _thresholds(cfg)
    rep = classify_intervals(model, pot, cfg.energy, cfg.M, nt, dt, cfg.threads)
    doc.columns = ["alpha", "lo", "hi", "norm", "edge_norm", "good"]
    good = set(rep.good_indices)
    for al in range(rep.n):
        sub = rep.sub_interval(al)
        doc.rows.append([al, sub.a, sub.b, rep.norms[al], rep.edge_norms[al], al in good])
    doc.metadata.update(R=rep.R, norm_threshold=nt, decay_threshold=dt)


def run_msa_chain(cfg, doc):
    model = _model_of(cfg)
    nt, dt = _thresholds(cfg)
    doc.columns = ["trial", "R", "direct", "bound", "measured_bound", "holds"]
    for t in range(cfg.trials):
        pot = sample_potential(model, Interval(0, cfg.n * cfg.M), derive_seed(cfg.seed, t))
        rep = classify_intervals(model, pot, cfg.energy, cfg.M, nt, dt, cfg.threads)
        cb = chain_bound(model, pot, cfg.energy, rep)
        doc.rows.append([t, rep.R, cb.direct, cb.bound, cb.measured_bound,
                         bool(cb.direct <= cb.bound)])
    doc.metadata["violations"] = sum(1 for r in doc.rows if r[1] > 0 and not r[5])


def run_msa_schedule(cfg, doc):
    if cfg.A is not None and cfg.log_A is not None:
        raise InvalidArgumentError("give only one of -A and --log-A")
    if cfg.A is not None:
        sched = schedule(cfg.width, A=cfg.A, stages=cfg.stages, c=cfg.c, strict=cfg.strict)
    else:
        log_A = cfg.log_A if cfg.log_A is not None else minimal_feasible_log_A(cfg.width, cfg.c)
        sched = schedule(cfg.width, log_A=log_A, stages=cfg.stages, c=cfg.c, strict=cfg.strict)
    margins = sched.delta_margin()
    doc.columns = ["s", "log_N", "log_eps", "delta", "log_delta", "r", "above_half_delta0"]
    doc.rows = [[st.s, st.log_N, st.log_eps, st.delta, st.log_delta, st.r, m > 0]
                for st, m in zip(sched.states, margins)]
    doc.metadata.update(log_A=sched.log_A, stage0_feasible=sched.feasible,
                        min_feasible_log_A=sched.min_feasible_log_A)


def run_corollary_bound(cfg, doc):
    doc.columns = ["W", "log_bound", "bound"]
    for W in cfg.widths:
        lb = log_corollary_bound(W, cfg.C)
        doc.rows.append([W, lb, math.exp(lb)])


def run_schur_verify(cfg, doc):
    doc.columns = ["instance", "size", "omega1", "rel_error"]
    for k in range(cfg.instances):
        rng = np.random.default_rng(derive_seed(cfg.seed, k))
        n = int(rng.integers(2, cfg.max_size + 1))
        m = int(rng.integers(1, min(cfg.max_omega1, n) + 1))
        om1 = tuple(sorted(rng.choice(n, m, replace=False).tolist()))
        p = PartitionedOperator(gaussian_symmetric(n, derive_seed(cfg.seed, k + 10**6)), om1)
        dv = rng.uniform(-1, 1, m)
        ref = restricted_inverse(p, dv)
        got = schur_reduce(p, dv)
        doc.rows.append([k, n, m, float(np.linalg.norm(got - ref, 2) / np.linalg.norm(ref, 2))])
    doc.metadata["max_rel_error"] = max(r[3] for r in doc.rows)


RUNNERS = {
    "lyapunov": run_lyapunov,
    "green-decay": run_green_decay,
    "wegner": run_wegner,
    "eigen-distance": run_eigen_distance,
    "barrier": run_barrier,
    "barrier-prob": run_barrier_prob,
    "decouple-check": run_decouple_check,
    "msa-classify": run_msa_classify,
    "msa-chain": run_msa_chain,
    "msa-schedule": run_msa_schedule,
    "corollary-bound": run_corollary_bound,
    "schur-verify": run_schur_verify,
}


def run_experiment(cfg):
    """Run the subcommand in ``cfg``; returns the :class:`ReportDocument`."""
    doc = ReportDocument(cfg.subcommand, [])
    doc.metadata["subcommand"] = cfg.subcommand
    doc.metadata["version"] = __version__
    doc.metadata["seed"] = cfg.seed
    for k, v in cfg.echo().items():
        doc.metadata[f"config.{k}"] = v
    t0 = time.perf_counter()
    RUNNERS[cfg.subcommand](cfg, doc)
    doc.metadata["wall_time_s"] = round(time.perf_counter() - t0, 3)
    return doc


_NUMERIC = (NearSingularError, InconclusiveError, AggregationError, ConfigurationError,
            PreconditionError, np.linalg.LinAlgError, FloatingPointError)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_cli(argv)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return exc.code or 0
    try:
        doc = run_experiment(cfg)
    except (InvalidArgumentError, UnsupportedDisorderError) as exc:
        sys.stderr.write(f"lyapstrip {cfg.subcommand}: invalid argument: {exc}\n")
        return EXIT_USAGE
    except _NUMERIC as exc:
        sys.stderr.write(f"lyapstrip {cfg.subcommand}: numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except LyapStripError as exc:
        sys.stderr.write(f"lyapstrip {cfg.subcommand}: {exc}\n")
        return EXIT_NUMERIC
    try:
        write_atomic(cfg.out, doc.render(cfg.format))
    except OSError as exc:
        sys.stderr.write(f"lyapstrip {cfg.subcommand}: cannot write {cfg.out}: {exc}\n")
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
