"""Command line harness: ``arcpd <subcommand> --config FILE [--output CSV] ...``.

Every subcommand reads an experiment config, runs one library operation and
writes CSV (header row, 10 significant digits, LF line endings). Failures
print one JSON object on stderr and exit with the code of the error class.

Numerical modules are imported inside the handlers so that ``--threads`` can
set ``NUMBA_NUM_THREADS`` before numba starts.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import replace

from . import config as cfgmod
from .errors import ArcpdError, ValidationError

SMOKE_REPLICATIONS = 100
SMOKE_SAMPLES = 2000


def _set_threads(n):
    if n is None:
        env = os.environ.get("ARCPD_THREADS")
        if not env:
            return
        try:
            n = int(env)
        except ValueError:
            raise ValidationError(f"ARCPD_THREADS must be an integer, got {env!r}") from None
    if n < 1:
        raise ValidationError(f"thread count must be >= 1, got {n}")
    if "numba" in sys.modules:
        import numba
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    else:
        os.environ["NUMBA_NUM_THREADS"] = str(n)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return v
    if not isinstance(v, float) and float(v).is_integer():
        return str(int(v))  # python and numpy integers
    return f"{float(v):.10g}"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


# ----- helpers -------------------------------------------------------------

def _params(cfg):
    from .model import Ar1Params
    return Ar1Params(cfg.mu_pre, cfg.lambda_pre), Ar1Params(cfg.mu_post, cfg.lambda_post)


def _seed(cfg) -> int:
    if cfg.master_seed is None:
        raise ValidationError("this subcommand is randomized: set master_seed in the config or pass --seed")
    return cfg.master_seed


def _mc(cfg, seed=None, replications=None):
    from .mc import McConfig
    return McConfig(replications=replications or cfg.replications,
                    master_seed=_seed(cfg) if seed is None else seed,
                    epsilon=cfg.epsilon, closeness_w=cfg.closeness_w,
                    max_steps=cfg.max_steps, lower_bound=cfg.lower_bound)


def _detector(cfg, threshold=None):
    from .detectors import DetectorSpec, psi_from_name
    A = cfg.threshold if threshold is None else threshold
    if A is None:
        raise ValidationError("this subcommand needs a threshold")
    return DetectorSpec(psi_from_name(cfg.detector), A, cfg.headstart)


# ----- subcommands ---------------------------------------------------------

def cmd_kl(cfg):
    from .kl import kl_number, worst_case_report
    from .model import Ar1Params
    pre, post = _params(cfg)
    rep = worst_case_report(pre, post.mu, post.lam)
    header = ["row_type", "lambda0", "kl", "reference_kl", "lambda_crit", "lambda_lower", "lambda_upper"]
    rows = [["point", lam, kl_number(pre, Ar1Params(post.mu, lam)), rep.reference_kl, None, None, None]
            for lam in (cfg.lambda_grid or ())]
    rows.append(["summary", post.lam, rep.kl, rep.reference_kl,
                 rep.lambda_crit, rep.lambda_lower, rep.lambda_upper])
    return header, rows


def cmd_simulate(cfg):
    from .detectors import crossed, init, update
    from .model import INF, ChangeSpec, generate_path, log_likelihood_ratio
    from .rng import CounterStream
    pre, post = _params(cfg)
    cp = INF if cfg.change_point is None else cfg.change_point
    path = generate_path(ChangeSpec(pre, post, cp, cfg.x0), cfg.n, CounterStream(_seed(cfg)))
    # without a threshold the statistic is still traced, the alarm column stays empty
    det = _detector(cfg, threshold=cfg.threshold if cfg.threshold is not None else 1.0)
    state = init(det, cfg.x0)
    rows = []
    for x in path:
        llr = log_likelihood_ratio(pre, post, state.x_prev, float(x))
        state = update(state, float(x), pre, post)
        alarm = crossed(state, det.threshold) if cfg.threshold is not None else None
        rows.append([state.n, float(x), llr, state.y, state.log_y, alarm])
    return ["n", "x", "log_lr", "statistic", "log_statistic", "alarm"], rows


def cmd_arl(cfg):
    from .mc import estimate_arl, variance_bound_check
    from .model import INF, ChangeSpec
    pre, post = _params(cfg)
    det = _detector(cfg)
    est = estimate_arl(det, ChangeSpec(pre, post, INF, cfg.x0), _mc(cfg))
    bound = variance_bound_check(est) if det.headstart == 0 else None
    return (["detector", "threshold", "arl", "std_dev", "std_err", "ci_half_width", "n", "censored",
             "sd_bound_pass"],
            [[cfg.detector, det.threshold, est.mean, est.std_dev, est.std_err, est.ci_half_width,
              est.n, est.censored, bound.passed if bound else None]])


def cmd_sadd(cfg):
    from .mc import sadd
    pre, post = _params(cfg)
    est = sadd(_detector(cfg), pre, post, _mc(cfg), verify_sweep=cfg.k_sweep, x0=cfg.x0)
    rows = [["add0", 0, est.mean, est.std_err, est.n, None]]
    rows += [["sweep", p.k, p.mean, p.std_err, None, p.violated] for p in est.sweep]
    return ["row_type", "k", "add", "std_err", "n", "violated"], rows


def cmd_addk(cfg):
    from .mc import estimate_add_inf, estimate_add_k
    pre, post = _params(cfg)
    det, mc = _detector(cfg), _mc(cfg)
    rows = []
    for k in cfg.k_sweep or (cfg.k,):
        e = estimate_add_k(det, pre, post, k, mc, cfg.x0)
        rows.append([k, e.mean, e.std_err, e.n, e.rejected, None])
    if cfg.add_inf:
        e = estimate_add_inf(det, pre, post, mc, cfg.x0)
        rows.append(["inf", e.mean, e.std_err, e.n, e.rejected, e.k])
    return ["k", "add", "std_err", "n", "rejected", "k_used"], rows


def cmd_calibrate(cfg):
    from .calibrate import find_threshold
    from .detectors import psi_from_name
    if cfg.target_gamma is None:
        raise ValidationError("calibrate needs target_gamma")
    pre, post = _params(cfg)
    res = find_threshold(psi_from_name(cfg.detector), pre, post, cfg.target_gamma, cfg.rel_tol,
                         _mc(cfg), cfg.x0)
    a = res.achieved_arl
    return (["detector", "target_gamma", "threshold", "achieved_arl", "std_err", "n", "iterations"],
            [[cfg.detector, cfg.target_gamma, res.threshold, a.mean, a.std_err, a.n, res.iterations]])


def _label(v) -> int:
    # stable integer label of a correlation value for seed derivation
    return int(round(1000 * v)) + 1000


def _oc_table(cfg, errors):
    from . import benchmarks as bm
    from .calibrate import find_threshold
    from .detectors import DetectorSpec, psi_from_name
    from .mc import estimate_arl, sadd
    from .model import INF, Ar1Params, ChangeSpec
    from .rng import derive_seed
    seed = _seed(cfg)
    pre = Ar1Params(bm.MU_PRE, 0.0)
    gammas = tuple(int(g) for g in cfg.gamma_grid) if cfg.gamma_grid else (50, 100)
    lam0s = cfg.lambda_grid or bm.OC_LAMBDA0
    header = ["lambda0", "detector", "gamma", "threshold", "arl", "arl_se", "sadd", "sadd_se",
              "reference_threshold", "reference_arl", "reference_arl_se", "reference_sadd",
              "reference_sadd_se", "status"]
    rows = []
    for c in bm.oc_cells(lambda0s=lam0s, gammas=gammas):
        psi = psi_from_name(c.detector)
        post = Ar1Params(bm.MU_POST, c.lambda0)
        label = (psi.code, _label(c.lambda0), c.gamma)
        ref = [c.threshold, c.arl, c.arl_se, c.sadd, c.sadd_se]
        try:
            A = c.threshold
            if cfg.mode == "calibration":
                A = find_threshold(psi, pre, post, c.gamma, cfg.rel_tol,
                                   _mc(cfg, derive_seed(seed, 30, *label)), cfg.x0).threshold
            det = DetectorSpec(psi, A)
            arl = estimate_arl(det, ChangeSpec(pre, post, INF, cfg.x0), _mc(cfg, derive_seed(seed, 20, *label)))
            sd = sadd(det, pre, post, _mc(cfg, derive_seed(seed, 21, *label)), x0=cfg.x0)
            rows.append([c.lambda0, c.detector, c.gamma, A, arl.mean, arl.std_err, sd.mean, sd.std_err]
                        + ref + ["ok"])
        except ArcpdError as e:
            errors.append(e)
            rows.append([c.lambda0, c.detector, c.gamma, None, None, None, None, None] + ref + [e.code])
    return header, rows


def _add_table(cfg, errors):
    from . import benchmarks as bm
    from .detectors import DetectorSpec, psi_from_name
    from .mc import estimate_add_inf, estimate_add_k
    from .model import Ar1Params
    from .rng import derive_seed
    seed = _seed(cfg)
    thresholds = tuple(int(a) for a in cfg.threshold_grid) if cfg.threshold_grid else (100, 400)
    lam0s = cfg.lambda_grid or bm.ADD_LAMBDA0
    header = ["lambda_pre", "lambda0", "threshold", "detector", "add0", "add0_se", "add_inf",
              "add_inf_se", "add_inf_k", "add0_minus_add_inf", "reference_add0", "reference_add_inf",
              "status"]
    rows = []
    for c in bm.add_cells(lambda0s=lam0s, thresholds=thresholds):
        psi = psi_from_name(c.detector)
        pre, post = Ar1Params(bm.MU_PRE, c.lambda_pre), Ar1Params(bm.MU_POST, c.lambda0)
        det = DetectorSpec(psi, c.threshold)
        label = (psi.code, _label(c.lambda_pre), _label(c.lambda0), int(c.threshold))
        head = [c.lambda_pre, c.lambda0, c.threshold, c.detector]
        try:
            a0 = estimate_add_k(det, pre, post, 0, _mc(cfg, derive_seed(seed, 40, *label)), cfg.x0)
            ainf = estimate_add_inf(det, pre, post, _mc(cfg, derive_seed(seed, 41, *label)), cfg.x0)
            rows.append(head + [a0.mean, a0.std_err, ainf.mean, ainf.std_err, ainf.k,
                                a0.mean - ainf.mean, c.add0, c.add_inf, "ok"])
        except ArcpdError as e:
            errors.append(e)
            rows.append(head + [None] * 6 + [c.add0, c.add_inf, e.code])
    return header, rows


def cmd_table(cfg, errors):
    if cfg.table == "operating-characteristics":
        return _oc_table(cfg, errors)
    return _add_table(cfg, errors)


def published_threshold(cfg, detector, gamma):
    """Published threshold when the config is the tabulated model, else None."""
    from . import benchmarks as bm
    if (cfg.mu_pre, cfg.lambda_pre, cfg.mu_post) != (bm.MU_PRE, 0.0, bm.MU_POST):
        return None
    if cfg.lambda_post not in bm.OC_LAMBDA0 or gamma not in bm.GAMMAS:
        return None
    return bm.oc_cell(detector, cfg.lambda_post, int(gamma)).threshold


def cmd_curves(cfg):
    from .calibrate import find_threshold
    from .detectors import DetectorSpec, psi_from_name
    from .kl import kl_number
    from .mc import sadd
    from .rng import derive_seed
    pre, post = _params(cfg)
    seed = _seed(cfg)
    kl = kl_number(pre, post)
    gammas = cfg.gamma_grid or (100.0, 1000.0)
    rows = []
    for g in gammas:
        row = [g, math.log(g)]
        for j, name in enumerate(("cusum", "sr")):
            psi = psi_from_name(name)
            A = published_threshold(cfg, name, g) if cfg.mode == "replication" else None
            if A is None:
                A = find_threshold(psi, pre, post, g, cfg.rel_tol,
                                   _mc(cfg, derive_seed(seed, 50, j, int(g))), cfg.x0).threshold
            est = sadd(DetectorSpec(psi, A), pre, post, _mc(cfg, derive_seed(seed, 51, j, int(g))),
                       x0=cfg.x0)
            row += [A, est.mean, est.std_err]
        row.append(math.log(g) / kl if kl > 0 else None)
        rows.append(row)
    header = ["gamma", "log_arl", "threshold_cusum", "sadd_cusum", "sadd_cusum_se",
              "threshold_sr", "sadd_sr", "sadd_sr_se", "first_order"]
    return header, rows


def cmd_kernel_check(cfg):
    import numpy as np
    from .detectors import psi_from_name
    from .kernel import KernelQuery, first_step_batch, transition_cdf
    pre, post = _params(cfg)
    psi = psi_from_name(cfg.detector)
    reps = np.arange(cfg.samples, dtype=np.uint64)
    y, x, _, _ = first_step_batch(cfg.x1, cfg.y1, math.inf, cfg.regime, psi, pre, post, _seed(cfg), reps)
    g = cfg.grid_points
    probs = (np.arange(g) + 0.5) / g
    y_grid = np.quantile(y, probs)
    x_grid = np.quantile(x, probs)
    rows = []
    for yv in y_grid:
        below = y <= yv
        for xv in x_grid:
            p = transition_cdf(KernelQuery(cfg.regime, cfg.y1, cfg.x1, float(yv), float(xv), psi, pre, post))
            emp = float(np.count_nonzero(below & (x <= xv))) / cfg.samples
            se = math.sqrt(max(p * (1 - p), 1e-300) / cfg.samples)
            rows.append([float(yv), float(xv), p, emp, se, (emp - p) / se])
    return ["y2", "x2", "cdf", "empirical", "std_err", "z"], rows


COMMANDS = {
    "kl": cmd_kl, "simulate": cmd_simulate, "arl": cmd_arl, "sadd": cmd_sadd, "addk": cmd_addk,
    "calibrate": cmd_calibrate, "table": cmd_table, "curves": cmd_curves,
    "kernel-check": cmd_kernel_check,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config file (key = value lines)")
    common.add_argument("--output", help="CSV destination (default: stdout)")
    common.add_argument("--threads", type=int, help="worker threads (falls back to ARCPD_THREADS)")
    common.add_argument("--seed", type=int, help="master seed, overrides the config")
    common.add_argument("--smoke", action="store_true", help=f"use N={SMOKE_REPLICATIONS} replications")
    parser = argparse.ArgumentParser(prog="arcpd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _error(e: ArcpdError) -> int:
    payload = {"error": e.code, "message": str(e), "exit_code": e.exit_code}
    step = getattr(e, "step", None)
    if step is not None:
        payload["step"] = step
    print(json.dumps(payload), file=sys.stderr)
    return e.exit_code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _set_threads(args.threads)
        cfg = cfgmod.load(args.config) if args.config else cfgmod.ExperimentConfig()
        if args.seed is not None:
            cfg = replace(cfg, master_seed=args.seed)
        if args.smoke:
            cfg = replace(cfg, replications=SMOKE_REPLICATIONS, samples=SMOKE_SAMPLES)
        errors = []
        if args.command == "table":
            header, rows = cmd_table(cfg, errors)
        else:
            header, rows = COMMANDS[args.command](cfg)
        text = _csv(header, rows)
        out = args.output or cfg.output_path
        if out:
            with open(out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        if errors:
            return _error(errors[0])
    except ArcpdError as e:
        return _error(e)
    return 0


if __name__ == "__main__":
    sys.exit(main())
