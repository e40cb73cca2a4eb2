"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 numeric
divergence.  Every report command writes CSV/JSON data plus rendered
figures (PNG by default, SVG with --svg) into the output directory.
PAGAR_LAB_THREADS caps the verify suite's parallelism.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__, example1
from .errors import (EmptyRewardSet, NonConvergence, NonFinite,
                     SolveFailure)
from .alignment import (VisitThreshold, classify_alignment, domination,
                        feature_l1_metric, wasserstein_to_expert)
from .game import (TabularPolicySpace, minimax_regret,
                   simplex_policy_grid)
from .irl import IrlLossKind
from .io import (load_demonstrations, load_mdp, load_train_config,
                 save_demonstrations, save_mdp, write_csv, write_json)
from .plotting import line_chart
from .training import TrainConfig, train_gail_pagar, train_pagar
from .verify import run_suite

INPUT_ERROR, DIVERGENCE = 2, 3


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guard(fn):
    """Map exception classes onto the exit-code contract."""
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (FileNotFoundError, json.JSONDecodeError) as exc:
            _fail(INPUT_ERROR, str(exc))
        except ValueError as exc:
            _fail(INPUT_ERROR, str(exc))
        except (NonFinite, NonConvergence, SolveFailure) as exc:
            _fail(DIVERGENCE, str(exc))
        except EmptyRewardSet as exc:
            _fail(1, str(exc))
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@click.group()
@click.version_option(version=__version__, prog_name="pagar-lab")
def main():
    """Adversarial reward design on exactly solvable MDPs."""


fmt_option = click.option("--svg", is_flag=True, help="render SVG figures")
out_option = click.option("--out", type=click.Path(), default="out",
                          show_default=True, help="output directory")
seed_option = click.option("--seed", type=int, default=0, show_default=True)


@main.command("example1")
@out_option
@click.option("--grid-step", type=float, default=1e-3, show_default=True,
              help="omega / protagonist grid resolution")
@click.option("--exact-rational", is_flag=True,
              help="include exact-rational fields in summary.json")
@fmt_option
@_guard
def cmd_example1(out, grid_step, exact_rational, svg):
    """Reproduce the worked example end to end.

    Writes irl_loss_vs_omega.csv, protagonist_vs_delta.csv, summary.json,
    the example MDP/demonstration files, and the corresponding figures.
    """
    out = Path(out)
    fmt = "svg" if svg else "png"
    cfg = {"grid_step": grid_step, "exact_rational": exact_rational}

    game = example1.Example1Game.build(omega_step=grid_step, p_step=grid_step)
    d_star, omega_star = game.delta_star()
    threshold, _ = game.success_threshold()

    write_csv(out / "irl_loss_vs_omega.csv", ["omega", "irl_loss"],
              list(zip(game.omega_grid.tolist(), game.losses.tolist())),
              seed=None, config=cfg)
    line_chart(game.omega_grid, [game.losses], ["windowed likelihood loss"],
               "omega", "IRL loss", out / "irl_loss_vs_omega", fmt=fmt,
               title="IRL loss over the reward family")

    deltas = np.round(np.arange(0.0, d_star + 1e-9, 0.02), 10)
    ps = game.delta_sweep(deltas)
    reference = np.ones_like(ps)  # optimal policy under the IRL-optimal reward
    write_csv(out / "protagonist_vs_delta.csv",
              ["delta", "pi_p_a2_at_s0", "irl_optimal_reference"],
              list(zip(deltas.tolist(), ps.tolist(), reference.tolist())),
              seed=None, config=cfg)
    lo, hi = example1.success_interval_exact(game.mdp)
    line_chart(deltas, [ps, reference],
               ["minimax protagonist", "IRL-optimal policy"],
               "delta", "pi(a2|s0)", out / "protagonist_vs_delta", fmt=fmt,
               hlines=((float(lo), "1/2"), (float(hi), "125/188")),
               title="Protagonist choice probability vs delta")

    summary = {
        "omega_star": omega_star,
        "delta_star": d_star,
        "success_threshold_delta": threshold,
        "protagonist_at_low_delta": float(ps[0]),
        "success_lower_exact": str(lo),
        "success_upper_exact": str(hi),
        "erratum_note": ("the appendix-derived success bound 125/188 is "
                         "used; one printed variant reads 125/178 and is "
                         "flagged as an erratum"),
    }
    if exact_rational:
        q = example1.prob_s6_via_a2_exact(game.mdp)
        summary["prob_s6_via_a2_exact"] = str(q)
        summary["exact_rational_checks"] = bool(
            q * 125 == 31 and hi * 188 == 125)
    write_json(out / "summary.json", summary, config=cfg)
    save_mdp(game.mdp, out / "example1_mdp.json",
             features=dict(zip(("s2_indicator", "s6_indicator"),
                               example1.features())))
    save_demonstrations(game.demos, out / "example1_demos.json")
    click.echo(f"delta*={d_star:.4f} at omega*={omega_star:.3f}; "
               f"success threshold ~ {threshold:.3f}; reports in {out}/")


@main.command("verify-bounds")
@out_option
@seed_option
@click.option("--instances", type=int, default=100, show_default=True)
@click.option("--inject-corruption", is_flag=True, hidden=True,
              help="negative control: corrupt one bound check")
@_guard
def cmd_verify(out, seed, instances, inject_corruption):
    """Run the identity/bound/equivalence suite on random instances."""
    result = run_suite(instances, seed, corrupt=inject_corruption)
    write_json(Path(out) / "verify_report.json", result.to_dict(), seed=seed,
               config={"instances": instances})
    if result.passed:
        click.echo(f"all {result.checks_run} checks passed "
                   f"({instances} instances)")
        return
    click.echo(f"FAILED: {len(result.failures)} of {result.checks_run} checks; "
               f"first: {result.failures[0]}", err=True)
    sys.exit(1)


def _policy_space_from(mdp, policy_step):
    return TabularPolicySpace(step=policy_step)


def _loss_kind(loss: str, max_len: int) -> IrlLossKind:
    if loss == "ziebart":
        return IrlLossKind.ziebart(max_len)
    if loss == "max-margin":
        return IrlLossKind.max_margin()
    return IrlLossKind.max_ent()


loss_option = click.option("--loss", type=click.Choice(
    ["max-margin", "max-ent", "ziebart"]), default="max-margin",
    show_default=True)


@main.command("minimax")
@click.argument("mdp_path", type=click.Path(exists=True))
@click.argument("demos_path", type=click.Path(exists=True))
@out_option
@click.option("--delta", type=float, required=True,
              help="IRL loss threshold defining the reward set")
@loss_option
@click.option("--max-len", type=int, default=5, show_default=True,
              help="trajectory window for the ziebart loss")
@click.option("--grid-step", type=float, default=0.05, show_default=True,
              help="reward family grid resolution")
@click.option("--policy-step", type=float, default=0.25, show_default=True,
              help="per-state simplex grid step")
@click.option("--weight-box", type=float, default=1.0, show_default=True,
              help="linear reward weights range [-b, b] per feature")
@click.option("--trace", is_flag=True, help="emit the game transcript CSV")
@_guard
def cmd_minimax(mdp_path, demos_path, out, delta, loss, max_len, grid_step,
                policy_step, weight_box, trace):
    """Solve MinimaxRegret over a delta-optimal reward set from files."""
    from .irl import RewardFamily, RewardSet

    mdp, features = load_mdp(mdp_path)
    if not features:
        raise ValueError(f"{mdp_path} declares no features; the reward family "
                         "needs at least one")
    demos = load_demonstrations(demos_path)
    names = sorted(features)
    family = RewardFamily.linear([features[n] for n in names],
                                 lower=[-weight_box] * len(names),
                                 upper=[weight_box] * len(names))
    rset = RewardSet(family=family, delta=delta,
                     loss=_loss_kind(loss, max_len), grid_step=grid_step)
    space = _policy_space_from(mdp, policy_step)
    pi_star, report = minimax_regret(mdp, rset, demos, space)

    payload = {
        "regret": report.regret,
        "protagonist_utility": report.protagonist_utility,
        "antagonist_utility": report.antagonist_utility,
        "protagonist_policy": pi_star.probs.tolist(),
        "witness_reward": report.witness_reward.table().tolist(),
        "features": names,
    }
    write_json(Path(out) / "minimax_report.json", payload,
               config={"delta": delta, "loss": loss})
    if trace:
        rows = []
        admissible = rset.admissible(mdp, demos)
        from .game import regret as regret_of
        for i, pi in enumerate(space.policies(mdp)):
            worst = max(regret_of(mdp, pi, r).regret for _, r, _ in admissible)
            rows.append((i, " ".join(f"{x:.3f}" for x in pi.probs.ravel()),
                         worst))
        write_csv(Path(out) / "game_transcript.csv",
                  ["iteration", "candidate_parameters", "regret"], rows,
                  config={"delta": delta})
    click.echo(f"minimax regret {report.regret:.6f}; report in {out}/")


@main.command("train")
@click.argument("mdp_path", type=click.Path())
@click.argument("demos_path", type=click.Path())
@click.argument("config_path", type=click.Path())
@out_option
@seed_option
@fmt_option
@_guard
def cmd_train(mdp_path, demos_path, config_path, out, seed, svg):
    """Run a training variant from file inputs; write trace and final policy."""
    for p in (mdp_path, demos_path, config_path):
        if not Path(p).exists():
            _fail(INPUT_ERROR, f"missing input file: {p}")
    from .irl import RewardFamily

    mdp, features = load_mdp(mdp_path)
    demos = load_demonstrations(demos_path)
    doc = load_train_config(config_path)
    variant = doc.pop("variant", "plain")
    kind_name = doc.pop("irl_kind", "max_margin")
    max_len = doc.pop("irl_max_len", doc.get("windowed_max_len") or 5)

    kind = (IrlLossKind.ziebart(max_len) if kind_name == "ziebart"
            else IrlLossKind(kind_name))
    if features:
        names = sorted(features)
        family = RewardFamily.linear([features[n] for n in names],
                                     lower=[-1.0] * len(names),
                                     upper=[1.0] * len(names))
    else:
        family = RewardFamily.tabular((mdp.n_states, mdp.n_actions), -1.0, 1.0)
    config = TrainConfig(reward_family=family, irl_kind=kind, **doc)

    if variant == "plain":
        policy, trace = train_pagar(mdp, demos, config, seed)
    else:
        policy, trace = train_gail_pagar(mdp, demos, config, seed,
                                         variant=variant.upper())

    out = Path(out)
    rows = [(t.iteration, t.j_irl, t.j_pagar, t.lam, t.exact_regret,
             " ".join(repr(x) for x in t.pi_p_summary)) for t in trace]
    write_csv(out / "trace.csv",
              ["iteration", "j_irl", "j_pagar", "lambda", "exact_regret",
               "pi_p_param_summary"], rows, seed=seed, config=doc)
    write_json(out / "final_policy.json",
               {"policy": policy.probs.tolist(), "variant": variant},
               seed=seed, config=doc)
    if trace:
        xs = [t.iteration for t in trace]
        line_chart(xs, [[t.exact_regret for t in trace]], ["exact regret"],
                   "iteration", "regret", out / "trace_regret",
                   fmt="svg" if svg else "png")
    click.echo(f"trained {variant} for {len(trace)} iterations; "
               f"trace in {out}/trace.csv")


@main.command("check-alignment")
@click.argument("mdp_path", type=click.Path(exists=True))
@out_option
@click.option("--weights", required=True,
              help="comma-separated weights over the file's features "
                   "(sorted by name)")
@click.option("--visit", "visits", multiple=True, required=True,
              help="target:min_prob:window, repeatable")
@click.option("--policy-step", type=float, default=0.25, show_default=True)
@_guard
def cmd_check_alignment(mdp_path, out, weights, visits, policy_step):
    """Classify task-reward alignment over a policy grid."""
    from .mdp import RewardFunction

    mdp, features = load_mdp(mdp_path)
    names = sorted(features)
    w = np.array([float(x) for x in weights.split(",")])
    if len(w) != len(names):
        raise ValueError(f"{len(names)} features but {len(w)} weights")
    r = RewardFunction.linear([features[n] for n in names], w)
    targets = []
    for spec in visits:
        s, p, m = spec.split(":")
        targets.append((int(s), float(p), int(m)))
    phi = VisitThreshold(tuple(targets))
    grid = simplex_policy_grid(mdp, step=policy_step)
    res = classify_alignment(mdp, r, phi, grid)
    write_json(Path(out) / "alignment_report.json", res.to_dict(),
               config={"weights": weights, "visits": list(visits)})
    click.echo("aligned" if res.aligned else "misaligned")


@main.command("domination")
@click.argument("mdp_path", type=click.Path(exists=True))
@click.argument("policy_a", type=click.Path(exists=True))
@click.argument("policy_b", type=click.Path(exists=True))
@out_option
@click.option("--weights-list", required=True,
              help="semicolon-separated weight vectors, e.g. '1,0;0,1'")
@_guard
def cmd_domination(mdp_path, policy_a, policy_b, out, weights_list):
    """Report whether policy B (weakly) totally dominates policy A."""
    from .mdp import RewardFunction, TabularPolicy

    mdp, features = load_mdp(mdp_path)
    names = sorted(features)
    rewards = []
    for chunk in weights_list.split(";"):
        w = np.array([float(x) for x in chunk.split(",")])
        rewards.append(RewardFunction.linear([features[n] for n in names], w))
    pa = TabularPolicy(np.asarray(json.loads(Path(policy_a).read_text())))
    pb = TabularPolicy(np.asarray(json.loads(Path(policy_b).read_text())))
    verdict = domination(mdp, pa, pb, rewards)
    write_json(Path(out) / "domination_report.json", {"verdict": verdict},
               config={"weights_list": weights_list})
    click.echo(verdict)


@main.command("wasserstein")
@click.argument("mdp_path", type=click.Path(exists=True))
@click.argument("demos_path", type=click.Path(exists=True))
@out_option
@click.option("--max-len", type=int, default=5, show_default=True)
@click.option("--policy-step", type=float, default=0.25, show_default=True)
@_guard
def cmd_wasserstein(mdp_path, demos_path, out, max_len, policy_step):
    """W_E: the smallest W1 distance from a grid policy to the expert."""
    mdp, features = load_mdp(mdp_path)
    if not features:
        raise ValueError("wasserstein needs feature tables for the metric")
    demos = load_demonstrations(demos_path)
    names = sorted(features)
    metric = feature_l1_metric([features[n] for n in names], mdp.gamma)
    grid = simplex_policy_grid(mdp, step=policy_step)
    w_e, pi, rep = wasserstein_to_expert(mdp, demos, grid, metric, max_len)
    write_json(Path(out) / "wasserstein_report.json",
               {"w_e": w_e, "best_policy": pi.probs.tolist(),
                "metric": rep.metric_name},
               config={"max_len": max_len})
    click.echo(f"W_E = {w_e:.6f}")


@main.command("delta-sweep")
@out_option
@click.option("--grid-step", type=float, default=1e-3, show_default=True)
@click.option("--delta-step", type=float, default=0.02, show_default=True)
@fmt_option
@_guard
def cmd_delta_sweep(out, grid_step, delta_step, svg):
    """Sweep delta for the built-in worked example's minimax game."""
    game = example1.Example1Game.build(omega_step=grid_step, p_step=grid_step)
    d_star, _ = game.delta_star()
    deltas = np.arange(0.0, d_star + 1e-9, delta_step)
    rows = []
    for d in deltas:
        p, worst = game.protagonist_for(d)
        rows.append((float(d), p, worst))
    out = Path(out)
    write_csv(out / "delta_sweep.csv",
              ["delta", "pi_p_a2_at_s0", "worst_case_regret"], rows,
              config={"delta_step": delta_step})
    line_chart(deltas, [[r[1] for r in rows]], ["protagonist"],
               "delta", "pi(a2|s0)", out / "delta_sweep",
               fmt="svg" if svg else "png")
    click.echo(f"swept {len(rows)} deltas up to delta*={d_star:.3f}")


if __name__ == "__main__":
    main()
