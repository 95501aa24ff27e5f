"""Command line entry point.

Subcommands: ``gen-data``, ``train``, ``sample``, ``eval``, ``oracle``.
Exit status is 0 on success, 1 on usage errors (bad flags, missing config
file) and 2 on data or validation errors.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time

import numpy as np

from . import io
from .chain import ChainConfig, build_transition_matrix, check_ergodicity, run_chain, stationary_distribution
from .config import load_config
from .corruption import make_corruption
from .distributions import ProbVector, SampleKind
from .errors import GdaeError
from .evaluation import energy_estimate, histogram_compare, loglik_bound
from .models import BernoulliMlp, MultinomialTable, ParzenConditional, load_model, save_model
from .rng import RngStream
from .training import TrainConfig, TrainingMetrics, WalkbackConfig, fit_nonparametric, train_dae

log = logging.getLogger("gdae")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_corruption_args(p):
    p.add_argument("--corruption", required=True, choices=["discrete_flip", "salt_pepper", "gaussian"])
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--corrupt-prob", type=float, default=0.5)
    p.add_argument("--sigma", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gdae", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-data", help="generate a synthetic dataset as CSV")
    g.add_argument("kind", choices=["discrete", "mixture"])
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--probs", help="comma-separated target probabilities (discrete; default: canonical K=10 target)")
    g.add_argument("--dim", type=int, default=10)
    g.add_argument("--components", type=int, default=3)
    g.add_argument("--spread", type=float, default=2.0)
    g.add_argument("--std", type=float, default=0.5)
    g.add_argument("--mixture-seed", type=int, default=7)
    g.add_argument("--out", required=True)

    t = sub.add_parser("train", help="fit a model from a config file")
    t.add_argument("--config", required=True)
    t.add_argument("--model-out")
    t.add_argument("--metrics-out")

    s = sub.add_parser("sample", help="run the pseudo-Gibbs chain from a saved model")
    s.add_argument("--model", required=True)
    _add_corruption_args(s)
    s.add_argument("--n-steps", type=int, default=5000)
    s.add_argument("--burn-in", type=int)
    s.add_argument("--thin", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--init", help="initial x_0 (integer state or comma-separated vector; default all zeros)")
    s.add_argument("--out", required=True)
    s.add_argument("--grid", help="also write a PGM sample grid (binary models)")
    s.add_argument("--grid-rows", type=int, default=10)
    s.add_argument("--grid-cols", type=int, default=10)

    e = sub.add_parser("eval", help="evaluate a chain or model")
    e.add_argument("metric", choices=["bound", "tv", "energy"])
    e.add_argument("--model")
    e.add_argument("--chain")
    e.add_argument("--test", help="test dataset (bound)")
    e.add_argument("--test-limit", type=int)
    e.add_argument("--reference", help="distribution CSV or dataset CSV (tv)")
    e.add_argument("--bins", type=int, default=20)
    e.add_argument("--corruption", choices=["discrete_flip", "salt_pepper", "gaussian"])
    e.add_argument("--eps", type=float, default=0.5)
    e.add_argument("--corrupt-prob", type=float, default=0.5)
    e.add_argument("--sigma", type=float)
    e.add_argument("--x", action="append", help="point(s) to score (energy); repeatable")
    e.add_argument("--anchor", help="shared anchor x_tilde (energy)")
    e.add_argument("--seed", type=int, default=0, help="seed recorded in the report")
    e.add_argument("--out", required=True)

    o = sub.add_parser("oracle", help="exact stationary distribution of a discrete model")
    o.add_argument("--model", required=True)
    _add_corruption_args(o)
    o.add_argument("--out", required=True)
    o.add_argument("--report", help="ergodicity report CSV")
    return parser


def _corruption_for(model, args):
    if isinstance(model, MultinomialTable):
        return make_corruption(args.corruption, K=model.K, eps=args.eps)
    d = model.d
    return make_corruption(args.corruption, d=d, corrupt_prob=args.corrupt_prob, sigma=args.sigma, eps=args.eps)


def _parse_point(text, model):
    if isinstance(model, MultinomialTable):
        return int(text)
    vals = np.array([float(v) for v in text.split(",")])
    return vals.astype(np.uint8) if isinstance(model, BernoulliMlp) else vals


def _default_init(model):
    if isinstance(model, MultinomialTable):
        return 0
    if isinstance(model, BernoulliMlp):
        return np.zeros(model.d, dtype=np.uint8)
    return np.zeros(model.d)


def cmd_gen_data(args):
    if args.kind == "discrete":
        p = ProbVector([float(v) for v in args.probs.split(",")]) if args.probs else io.default_target()
        ds = io.gen_discrete(p, args.n, args.seed)
    else:
        comps = io.default_mixture(args.dim, args.components, args.mixture_seed, args.spread, args.std)
        ds = io.gen_mixture(comps, args.n, args.seed)
    io.write_dataset_csv(ds, args.out)


def cmd_train(args):
    cfg = load_config(args.config)
    seed = cfg["seed"]
    data = io.load_dataset(cfg.path("data.train"), cfg.get("data.limit"))
    family = cfg["model.family"]
    kind = cfg["corruption.kind"]
    t0 = time.perf_counter()
    if family == "multinomial":
        if data.kind is not SampleKind.DISCRETE:
            raise GdaeError("multinomial family needs a discrete dataset")
        K = cfg.get("model.K", int(data.samples.max()) + 1)
        c = make_corruption(kind, K=K, eps=cfg["corruption.eps"])
        model = fit_nonparametric(data.samples, c, "multinomial", RngStream(seed, 0), alpha=cfg["model.alpha"])
    elif family == "parzen":
        if data.kind is not SampleKind.REAL:
            raise GdaeError("parzen family needs a real-valued dataset")
        c = make_corruption(kind, d=data.d, sigma=cfg.get("corruption.sigma"))
        model = fit_nonparametric(data.samples, c, "parzen", RngStream(seed, 0),
                                  sigma_x=cfg.get("model.sigma_x"), sigma_c=cfg.get("model.sigma_c"))
    else:
        if data.kind is not SampleKind.BINARY:
            raise GdaeError("mlp family needs a binary dataset")
        c = make_corruption(kind, d=data.d, corrupt_prob=cfg["corruption.corrupt_prob"])
        tc = TrainConfig(cfg["train.epochs"], cfg["train.minibatch"], cfg["train.learning_rate"],
                         cfg["train.momentum"], cfg["train.lr_decay"], cfg["train.weight_decay"], seed)
        wb = WalkbackConfig(cfg["walkback.enabled"], cfg["walkback.p"], cfg["walkback.max_steps"],
                            cfg.get("walkback.fixed_steps"))
        valid = None
        if cfg.path("data.valid") is not None:
            valid = io.load_dataset(cfg.path("data.valid"), cfg.get("data.valid_limit")).samples
        model, metrics = train_dae(data.samples, c, tc, wb, cfg["model.hidden"], valid=valid)
    if family != "mlp":
        rng = RngStream(seed, 1)
        nll = -float(np.mean(model.log_prob_batch(data.samples, c.sample_batch(data.samples, rng))))
        metrics = TrainingMetrics([nll], [], [time.perf_counter() - t0])
    save_model(model, args.model_out or cfg.path("output.model"))
    io.write_metrics_csv(metrics, args.metrics_out or cfg.path("output.metrics"))


def cmd_sample(args):
    model = load_model(args.model)
    c = _corruption_for(model, args)
    init = _parse_point(args.init, model) if args.init else _default_init(model)
    cfg = ChainConfig(args.n_steps, init, args.burn_in, args.thin)
    run = run_chain(model, c, cfg, RngStream(args.seed, 0))
    io.write_chain_csv(run, args.out)
    if args.grid:
        if not isinstance(model, BernoulliMlp):
            raise GdaeError("sample grids need a binary model")
        side = int(round(model.d ** 0.5))
        count = min(len(run), args.grid_rows * args.grid_cols)
        io.write_sample_grid(run.xs[:count], args.grid_rows, args.grid_cols, side, args.grid)


def _need(args, *names):
    for n in names:
        if getattr(args, n) is None:
            raise UsageError(f"eval {args.metric}: --{n.replace('_', '-')} is required")


def cmd_eval(args):
    rows = []
    if args.metric == "bound":
        _need(args, "model", "chain", "test")
        model = load_model(args.model)
        run = io.read_chain_csv(args.chain)
        test = io.load_dataset(args.test, args.test_limit).samples
        b = loglik_bound(model, run, test)
        rows.append(("loglik_bound", b.mean_log_lik, b.n_chain_samples, args.seed))
    elif args.metric == "tv":
        _need(args, "chain", "reference")
        run = io.read_chain_csv(args.chain)
        with open(args.reference, encoding="utf-8") as f:
            first = f.readline().strip()
        if first == "state,prob":
            rep = histogram_compare(run, io.read_distribution_csv(args.reference))
            rows.append(("tv", rep.tv, rep.n_samples, args.seed))
        else:
            rep = histogram_compare(run, io.read_dataset_csv(args.reference).samples, bins=args.bins)
            for i, j, tv in rep.pairs:
                rows.append((f"tv_{i}_{j}", tv, rep.n_samples, args.seed))
            rows.append(("tv_max", max(t for _, _, t in rep.pairs), rep.n_samples, args.seed))
    else:
        _need(args, "model", "corruption", "x", "anchor")
        model = load_model(args.model)
        c = _corruption_for(model, args)
        anchor = _parse_point(args.anchor, model)
        for k, text in enumerate(args.x):
            e = energy_estimate(model, c, _parse_point(text, model), anchor)
            rows.append((f"energy_{k}", e.energy, 1, args.seed))
    io.write_report_csv(rows, args.out)


def cmd_oracle(args):
    model = load_model(args.model)
    if isinstance(model, ParzenConditional):
        raise GdaeError("the exact oracle needs a finite state space")
    c = _corruption_for(model, args)
    report = check_ergodicity(model, c)
    if args.report:
        io.write_ergodicity_csv(report, args.report)
    pi = stationary_distribution(build_transition_matrix(model, c))
    io.write_distribution_csv(pi.probs, args.out)


COMMANDS = {"gen-data": cmd_gen_data, "train": cmd_train, "sample": cmd_sample, "eval": cmd_eval, "oracle": cmd_oracle}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return 1 if args.command == "train" else 2
    except (GdaeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
