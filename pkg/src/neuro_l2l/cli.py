"""``neuro-l2l`` command line.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .analysis import (
    InputDistributions,
    curve_rows,
    importance_rows,
    input_importance,
    transfer_report,
    update_curves,
)
from .baselines import (
    gittins_policy_run,
    gittins_table,
    mab_references,
    mdp_references,
    optimal_policy,
    policy_rollout,
)
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .emulator import draw_trial_inputs, run_trial, trajectory_rows
from .environments import MabFamily, Mdp, batch_normalized_score
from .hyperparams import HyperParams, hyperparams_from_dict, hyperparams_to_dict, realize
from .l2l import (
    TAG_BASELINE,
    TAG_EVAL,
    TAG_RANDOM_THETA,
    Experiment,
    FitnessRecord,
    bootstrap_ci,
    draw_task,
    evaluate_theta,
    random_theta_baseline,
    run_l2l,
    run_task,
    task_rng,
)
from .optimizers import evals_per_generation
from .plasticity import ANN_INPUT_NAMES, AnnRule
from .report import bar_plot, line_plot, write_csv, write_json

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _log(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _score_ci(rec: FitnessRecord, n_boot: int, seed: int) -> tuple[float, float]:
    x = np.column_stack([rec.raw, rec.random_ref, rec.optimal_ref])
    if len(x) < 2:
        return float("nan"), float("nan")
    return bootstrap_ci(x, lambda a: batch_normalized_score(a[:, 0], a[:, 1], a[:, 2]), n_boot=n_boot, seed=seed)


def _eval_rows(h: str, label: str, rec: FitnessRecord, seed: int) -> list:
    lo, hi = _score_ci(rec, 2000, seed)
    return [h, label, len(rec.raw), rec.normalized_score, lo, hi, rec.mean_fitness]


EVAL_HEADER = ["config_hash", "condition", "n_tasks", "normalized_score", "ci95_low", "ci95_high", "mean_fitness"]


BUILTIN = "builtin:"


def _data():
    return resources.files("neuro_l2l").joinpath("data")


def shipped_thetas() -> list[str]:
    """Names of the Θ artifacts bundled with the package (``builtin:<name>``)."""
    return sorted(f.name[:-5] for f in _data().iterdir() if f.name.endswith(".json"))


def load_theta(path: str | Path) -> tuple[ExperimentConfig, HyperParams]:
    """Read a ``best_theta.json`` artifact back into its config and Θ.

    ``builtin:<name>`` picks one of the artifacts shipped in ``neuro_l2l/data``.
    """
    try:
        if str(path).startswith(BUILTIN):
            name = str(path)[len(BUILTIN):]
            if name not in shipped_thetas():
                raise ConfigError(f"unknown builtin theta {name!r}; have {shipped_thetas()}")
            blob = json.loads(_data().joinpath(name + ".json").read_text())
        else:
            blob = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"theta artifact not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if "config" not in blob or "theta" not in blob:
        raise ConfigError(f"{path}: not a theta artifact (needs 'config' and 'theta')")
    cfg = parse_config(blob["config"], seed_override=blob["config"].get("master_seed"))
    try:
        theta = hyperparams_from_dict(cfg.experiment().space, blob["theta"])
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return cfg, theta


def theta_artifact(cfg: ExperimentConfig, theta: HyperParams, **extra) -> dict:
    return {"config_hash": cfg.hash, "config": cfg.to_dict(), "theta": hyperparams_to_dict(theta), **extra}


# -- run-l2l -------------------------------------------------------------------


def cmd_run_l2l(args) -> int:
    cfg = load_config(args.config, seed_override=args.seed)
    if args.generations is not None:
        cfg = cfg.with_(generations=args.generations)
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    h = cfg.hash
    print(f"config hash {h}")
    exp = cfg.experiment()
    names = exp.space.names

    hist_path = out / "history.csv"
    t_start = time.perf_counter()
    with hist_path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(["config_hash", "generation", "candidate", "mean_fitness", *names])

        def progress(g: int, records: list[FitnessRecord]) -> None:
            for r in records:
                writer.writerow([h, g, r.candidate_id, repr(r.mean_fitness), *(repr(float(v)) for v in r.theta.values)])
            fh.flush()
            if not args.quiet:
                fit = [r.mean_fitness for r in records]
                _log(f"generation {g}: best {max(fit):.4f} mean {np.mean(fit):.4f}")

        result = run_l2l(
            exp, cfg.optimizer, N=cfg.N, generations=cfg.generations, master_seed=cfg.master_seed,
            pop=cfg.pop, n_select=cfg.n_select, n_eval=cfg.n_eval, workers=args.workers, progress=progress,
        )
    elapsed = time.perf_counter() - t_start

    sel = result.selection
    write_json(out / "best_theta.json", theta_artifact(
        cfg, result.best,
        selection_fitness=max((r.mean_fitness for r in sel), default=None),
        eval_normalized_score=result.evaluation.normalized_score if result.evaluation else None,
    ))
    rows = [EVAL_HEADER]
    if result.evaluation is not None:
        rows.append(_eval_rows(h, "optimized", result.evaluation, cfg.master_seed))
        if cfg.random_baseline:
            rnd = random_theta_baseline(exp, cfg.n_eval, cfg.master_seed)
            rows.append(_eval_rows(h, "random_theta", rnd, cfg.master_seed))
    write_csv(out / "eval_report.csv", rows)
    for row in rows[1:]:
        print(f"{row[1]}: normalized score {row[3]:.4f} [{row[4]:.4f}, {row[5]:.4f}] over {row[2]} tasks")
    if args.bench:
        n_trials = len(result.history) * cfg.N + len(sel) * (cfg.n_select or cfg.N) + cfg.n_eval
        print(f"bench: {elapsed:.2f} s, {n_trials} trials, {1e3 * elapsed / max(n_trials, 1):.3f} ms per trial")
    return EXIT_OK


# -- eval-agent ----------------------------------------------------------------


def _cfg_and_theta(args) -> tuple[ExperimentConfig, HyperParams]:
    if args.theta:
        cfg, theta = load_theta(args.theta)
        if args.config:
            # evaluate the stored theta under another config (e.g. a different family)
            cfg = load_config(args.config, seed_override=args.seed)
            try:
                theta = hyperparams_from_dict(cfg.experiment().space, hyperparams_to_dict(theta))
            except ValueError as exc:
                raise ConfigError(f"--theta does not fit --config: {exc}") from None
        return cfg, theta
    if not args.config:
        raise ConfigError("need --config or --theta")
    cfg = load_config(args.config, seed_override=args.seed)
    space = cfg.experiment().space
    return cfg, space.decode(space.z_center)


def cmd_eval_agent(args) -> int:
    cfg, theta = _cfg_and_theta(args)
    exp = cfg.experiment()
    seed = cfg.master_seed if args.seed is None else args.seed
    n = args.n_tasks or cfg.n_eval
    out = Path(args.out or cfg.output_dir)
    h = cfg.hash
    rec = evaluate_theta(exp, theta, n, seed)
    rows = [["config_hash", "task_idx", "raw_return", "random_ref", "optimal_ref"]]
    rows += [[h, i, a, b, c] for i, (a, b, c) in enumerate(zip(rec.raw, rec.random_ref, rec.optimal_ref))]
    write_csv(out / "eval_tasks.csv", rows)
    write_csv(out / "eval_report.csv", [EVAL_HEADER, _eval_rows(h, "theta", rec, seed)])
    print(f"config hash {h}")
    print(f"normalized score {rec.normalized_score:.4f} over {n} tasks")
    if args.trajectory:
        rule, emu = realize(theta, exp.rule, exp.emulator, exp.T)
        for i in range(min(args.trajectory, n)):
            rng = task_rng(seed, TAG_EVAL, 0, 0, i)
            task = draw_task(exp.family, rng)
            inputs = draw_trial_inputs(task, emu, exp.T, rng)
            traj = run_trial(task, rule, emu, exp.T, inputs=inputs, record=True)
            n_w = task.n_states * task.n_actions
            header = ["t", "state", "action", "case", "reward", *(f"w_{k}" for k in range(n_w))]
            write_csv(out / f"trajectory_{i:03d}.csv", [header, *trajectory_rows(traj, emu.bits)])
    return EXIT_OK


# -- baselines -----------------------------------------------------------------


def cmd_baselines(args) -> int:
    cfg = load_config(args.config, seed_override=args.seed)
    exp = cfg.experiment()
    T = args.T or cfg.T
    n = args.n_tasks or cfg.n_eval
    seed = cfg.master_seed
    fam = exp.family
    fam_name = "mdp" if not isinstance(fam, MabFamily) else ("mab_structured" if fam.structured else "mab_unstructured")
    disc = exp.gamma ** np.arange(T)
    table = gittins_table(T) if isinstance(fam, MabFamily) and not args.no_gittins else None
    rows = [["family", "task_seed", "policy", "raw_return", "normalized_score"]]
    for i in range(n):
        task_seed = seed + i
        rng = task_rng(task_seed, TAG_BASELINE, 0, 0, 0)
        task = draw_task(fam, rng)
        inputs = draw_trial_inputs(task, exp.emulator, T, rng)
        if isinstance(task, Mdp):
            rnd, opt = mdp_references(task, inputs.s0, T, exp.gamma)
        else:
            rnd, opt = mab_references(task, T)
        runs = {
            "random": policy_rollout(task, None, inputs.s0, inputs.u_env, rng),
            "optimal": policy_rollout(task, optimal_policy(task), inputs.s0, inputs.u_env),
        }
        if table is not None:
            runs["gittins"] = gittins_policy_run(task, T, table, rng)
        for name, traj in runs.items():
            raw = float(disc @ traj.rewards)
            rows.append([fam_name, task_seed, name, raw, (raw - rnd) / (opt - rnd)])
    out = Path(args.out or cfg.output_dir)
    write_csv(out / "baselines.csv", rows)
    for name in ("random", "optimal", "gittins"):
        scores = [r[4] for r in rows[1:] if r[2] == name]
        raws = [r[3] for r in rows[1:] if r[2] == name]
        if scores:
            print(f"{name}: mean raw return {np.mean(raws):.3f}, mean per-task normalized score {np.mean(scores):.4f}")
    return EXIT_OK


# -- compare-optimizers --------------------------------------------------------


def cmd_compare(args) -> int:
    cfg = load_config(args.config, seed_override=args.seed)
    if cfg.compare is None:
        raise ConfigError("missing required field 'compare'")
    cmp = cfg.compare
    if args.budget is not None:
        cmp = type(cmp)(cmp.optimizers, args.budget, cmp.seeds, cmp.n_boot)
    seeds = tuple(args.seeds) if args.seeds else cmp.seeds
    exp = cfg.experiment()
    dim = exp.space.dim
    h = cfg.hash
    print(f"config hash {h}")
    header = ["config_hash", "optimizer", "slot", "seed", "budget", "evals_used", "generations",
              "normalized_score", "ci95_low", "ci95_high", "mean_fitness"]
    rows = [header]
    for seed in seeds:
        for slot, spec in enumerate(cmp.optimizers):
            per_gen = evals_per_generation(spec, dim, cfg.pop)
            G = cmp.budget // per_gen
            res = run_l2l(exp, spec, N=cfg.N, generations=G, master_seed=seed, pop=cfg.pop,
                          n_select=cfg.n_select, n_eval=cfg.n_eval, workers=args.workers)
            ev = res.evaluation
            lo, hi = _score_ci(ev, cmp.n_boot, seed)
            rows.append([h, spec.name, slot, seed, cmp.budget, G * per_gen, G, ev.normalized_score, lo, hi, ev.mean_fitness])
            if not args.quiet:
                _log(f"seed {seed} {spec.name}: {ev.normalized_score:.4f} ({G} generations)")
    out = Path(args.out or cfg.output_dir)
    write_csv(out / "compare.csv", rows)

    summary = [["config_hash", "optimizer", "slot", "n_seeds", "mean_normalized_score", "ci95_low", "ci95_high"]]
    labels, means, cis = [], [], []
    for slot, spec in enumerate(cmp.optimizers):
        x = np.array([r[7] for r in rows[1:] if r[2] == slot])
        m = float(x.mean())
        ci = bootstrap_ci(x, np.mean, n_boot=cmp.n_boot, seed=0) if x.size > 1 else (m, m)
        summary.append([h, spec.name, slot, x.size, m, ci[0], ci[1]])
        labels.append(spec.name)
        means.append(m)
        cis.append(ci)
        print(f"{spec.name}: mean held-out normalized score {m:.4f} [{ci[0]:.4f}, {ci[1]:.4f}] over {x.size} seeds")
    write_csv(out / "compare_summary.csv", summary)
    if not args.no_svg:
        bar_plot(out / "compare.svg", labels, means, cis, title="Optimizers at equal budget",
                 ylabel="held-out normalized score")
    return EXIT_OK


# -- learning-curves -----------------------------------------------------------


def running_ratio(num: np.ndarray, den: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-step ratio of means of cumulative ``num`` and ``den`` with delta-method standard errors.

    ``num`` and ``den`` are ``(n_tasks, T)`` per-step values.
    """
    cn, cd = np.cumsum(num, axis=1), np.cumsum(den, axis=1)
    n = cn.shape[0]
    md = cd.mean(axis=0)
    ratio = np.divide(cn.mean(axis=0), md, out=np.full(md.shape, np.nan), where=md != 0)
    if n < 2:
        return ratio, np.zeros_like(ratio)
    resid = cn - ratio * cd
    se = np.divide(resid.std(axis=0, ddof=1) / np.sqrt(n), np.abs(md), out=np.full(md.shape, np.nan), where=md != 0)
    return ratio, se


def learning_curves(exp: Experiment, theta: HyperParams | None, n_tasks: int, seed: int,
                    oracle: bool = True) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Running normalized score curves on ``n_tasks`` shared evaluation tasks.

    The random-Θ curve (a fresh prior draw per task) is always included.
    """
    space = exp.space
    draws = space.sample_prior(np.random.default_rng(np.random.SeedSequence([seed, TAG_RANDOM_THETA])), n_tasks)
    disc = exp.gamma ** np.arange(exp.T)
    agent, rand_theta, orc, rnd, opt = ([] for _ in range(5))
    for i in range(n_tasks):
        if theta is not None:
            agent.append(run_task(exp, theta.z, task_rng(seed, TAG_EVAL, 0, 0, i), curves=True)[1])
        _, a, rc, oc = run_task(exp, draws[i], task_rng(seed, TAG_EVAL, 0, 0, i), curves=True)
        rand_theta.append(a)
        if oracle:
            rng = task_rng(seed, TAG_EVAL, 0, 0, i)
            task = draw_task(exp.family, rng)
            inputs = draw_trial_inputs(task, exp.emulator, exp.T, rng)
            orc.append(disc * policy_rollout(task, optimal_policy(task), inputs.s0, inputs.u_env).rewards)
        rnd.append(rc)
        opt.append(oc)
    rnd, opt = np.array(rnd), np.array(opt)
    out = {}
    for name, curves in (("theta", agent), ("random_theta", rand_theta), ("oracle", orc)):
        if curves:
            out[name] = running_ratio(np.array(curves) - rnd, opt - rnd)
    return out


def cmd_learning_curves(args) -> int:
    if args.random_theta_only:
        if not args.config:
            raise ConfigError("need --config with --random-theta-only")
        cfg, theta = load_config(args.config, seed_override=args.seed), None
    else:
        if not args.theta:
            raise ConfigError("missing theta artifact: pass --theta best_theta.json (or --random-theta-only)")
        cfg, theta = _cfg_and_theta(args)
    exp = cfg.experiment()
    opts = dict(cfg.curves or {})
    if args.T is not None:
        exp = Experiment(exp.family, exp.rule, exp.emulator, args.T, exp.fitness, exp.shared_tasks)
    default_n = 1000 if isinstance(exp.family, MabFamily) else 50
    n = args.n_eval or int(opts.get("n_eval", default_n))
    seed = cfg.master_seed if args.seed is None else args.seed
    curves = learning_curves(exp, theta, n, seed, oracle=not args.no_oracle)
    h = cfg.hash
    rows = [["config_hash", "curve", "step", "normalized_score", "sem"]]
    for name, (m, se) in curves.items():
        rows += [[h, name, t + 1, float(m[t]), float(se[t])] for t in range(len(m))]
    out = Path(args.out or cfg.output_dir)
    write_csv(out / "learning_curves.csv", rows)
    for name, (m, se) in curves.items():
        print(f"{name}: final running normalized score {m[-1]:.4f} +- {se[-1]:.4f} ({n} tasks)")
    if not args.no_svg:
        steps = np.arange(1, exp.T + 1)
        series = {k: (steps, m, np.column_stack([m - 2 * se, m + 2 * se])) for k, (m, se) in curves.items()}
        line_plot(out / "learning_curves.svg", series, title="Running normalized score", xlabel="step",
                  ylabel="normalized score")
    return EXIT_OK


# -- analyze -------------------------------------------------------------------


def trajectory_inputs(exp: Experiment, theta: HyperParams, n_trials: int, seed: int) -> np.ndarray:
    """Rule inputs met while learning ``n_trials`` tasks: one row per step and synapse."""
    rule, emu = realize(theta, exp.rule, exp.emulator, exp.T)
    rows = []
    span = emu.w_max - emu.w_min
    for i in range(n_trials):
        rng = task_rng(seed, TAG_EVAL, 0, 0, i)
        task = draw_task(exp.family, rng)
        inputs = draw_trial_inputs(task, emu, exp.T, rng)
        traj = run_trial(task, rule, emu, exp.T, inputs=inputs, record=True)
        before = np.concatenate([inputs.w_init[None], traj.weights[:-1]])[:, 0, :]
        norm = (before - emu.w_min) / span
        for t in range(exp.T):
            for k in range(2):
                rows.append((t / exp.T, float(traj.actions[t] == k), traj.rewards[t], norm[t, k], norm[t, 1 - k]))
    return np.array(rows)


def cmd_analyze(args) -> int:
    cfg, theta = load_theta(args.theta)
    exp = cfg.experiment()
    if not isinstance(exp.rule, AnnRule):
        raise ConfigError("analyze needs a theta artifact of the ANN rule")
    rule, _ = realize(theta, exp.rule, exp.emulator, exp.T)
    rng = np.random.default_rng(args.seed)
    dists = None
    if args.inputs == "trajectory":
        dists = InputDistributions.from_samples(trajectory_inputs(exp, theta, args.n_trajectories, args.seed))
    report = input_importance(rule, rng, n_samples=args.n_samples, distributions=dists)
    curves = update_curves(rule, rng, grid_size=args.grid_size, n_marginal=args.n_marginal, distributions=dists)
    out = Path(args.out)
    h = cfg.hash
    imp = importance_rows(report)
    write_csv(out / "importance.csv", [["config_hash", *imp[0]], *([h, *r] for r in imp[1:])])
    for c in curves:
        write_csv(out / f"curves_case_{c.label}.csv", curve_rows(c))
    if report.degenerate:
        print("rule output is constant: importance is degenerate")
    for name in ANN_INPUT_NAMES:
        print(f"{name}: {report.fractions[name]:.4f}")
    print(f"residual interactions: {report.residual_interactions:.4f}")
    if args.svg:
        series = {f"flag={c.case[0]} r={c.case[1]}": (c.grid, c.mean_dw, c.band) for c in curves}
        line_plot(out / "curves.svg", series, title="Weight update by case", xlabel="w_self", ylabel="dw")
        names = list(report.fractions)
        vals = [report.fractions[k] for k in names]
        bar_plot(out / "importance.svg", names, vals, [(v, v) for v in vals], title="First-order variance fractions")
    return EXIT_OK


# -- transfer ------------------------------------------------------------------


def cmd_transfer(args) -> int:
    cfg_s, th_s = load_theta(args.structured)
    cfg_u, th_u = load_theta(args.unstructured)
    if type(cfg_s.rule) is not type(cfg_u.rule):
        raise ConfigError("both theta artifacts must use the same rule")
    eval_cfg = cfg_s.with_(family=MabFamily(structured=True))
    rep = transfer_report(th_s, th_u, eval_cfg.experiment(), args.n_tasks, args.seed, n_boot=args.n_boot)
    out = Path(args.out)
    write_csv(out / "transfer.csv", rep.rows())
    print(f"structured-trained {rep.score_structured:.4f}, unstructured-trained {rep.score_unstructured:.4f}")
    print(f"difference {rep.difference:.4f} [{rep.ci[0]:.4f}, {rep.ci[1]:.4f}]")
    return EXIT_OK


# -- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="neuro-l2l", description="Learning-to-learn on an emulated spiking agent.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="experiment config JSON")
        sp.add_argument("--seed", type=int, default=None, help="override the master seed")
        sp.add_argument("--out", default=None, help="output directory (default: config output_dir)")

    sp = sub.add_parser("run-l2l", help="optimize hyperparameters with the outer loop")
    common(sp)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--generations", type=int, default=None)
    sp.add_argument("--bench", action="store_true", help="report wall-clock time per trial")
    sp.add_argument("--quiet", action="store_true")
    sp.set_defaults(func=cmd_run_l2l)

    sp = sub.add_parser("eval-agent", help="score a fixed theta on evaluation tasks")
    common(sp, config_required=False)
    sp.add_argument("--theta", default=None, help="best_theta.json (default: center of the search space)")
    sp.add_argument("--n-tasks", type=int, default=None)
    sp.add_argument("--trajectory", type=int, default=0, metavar="K", help="dump the first K trajectories")
    sp.set_defaults(func=cmd_eval_agent)

    sp = sub.add_parser("baselines", help="random, optimal and Gittins reference policies")
    common(sp)
    sp.add_argument("--n-tasks", type=int, default=None)
    sp.add_argument("--T", type=int, default=None)
    sp.add_argument("--no-gittins", action="store_true")
    sp.set_defaults(func=cmd_baselines)

    sp = sub.add_parser("compare-optimizers", help="CE / ES / SA / GD at an equal evaluation budget")
    common(sp)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--budget", type=int, default=None)
    sp.add_argument("--seeds", type=int, nargs="+", default=None)
    sp.add_argument("--no-svg", action="store_true")
    sp.add_argument("--quiet", action="store_true")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("learning-curves", help="running normalized score per step")
    common(sp, config_required=False)
    sp.add_argument("--theta", default=None)
    sp.add_argument("--random-theta-only", action="store_true")
    sp.add_argument("--n-eval", type=int, default=None)
    sp.add_argument("--T", type=int, default=None)
    sp.add_argument("--no-oracle", action="store_true")
    sp.add_argument("--no-svg", action="store_true")
    sp.set_defaults(func=cmd_learning_curves)

    sp = sub.add_parser("analyze", help="input importance and update curves of an ANN rule")
    sp.add_argument("--theta", required=True)
    sp.add_argument("--out", default="report")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--n-samples", type=int, default=65536)
    sp.add_argument("--grid-size", type=int, default=33)
    sp.add_argument("--n-marginal", type=int, default=2000)
    sp.add_argument("--inputs", choices=("idealized", "trajectory"), default="idealized")
    sp.add_argument("--n-trajectories", type=int, default=50)
    sp.add_argument("--svg", action="store_true")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("transfer", help="structured- vs unstructured-trained theta on structured bandits")
    sp.add_argument("--structured", required=True)
    sp.add_argument("--unstructured", required=True)
    sp.add_argument("--n-tasks", type=int, default=2000)
    sp.add_argument("--seed", type=int, default=1000)
    sp.add_argument("--n-boot", type=int, default=2000)
    sp.add_argument("--out", default="transfer")
    sp.set_defaults(func=cmd_transfer)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime error
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
