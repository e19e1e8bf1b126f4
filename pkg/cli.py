#!/usr/bin/env python3
"""
Opportunistic Access Toolkit - Command Line
===========================================
Sufficient-condition checks, exact values, deviation audits, Monte Carlo runs
and (p01, p11) region sweeps for the (k,m) multichannel access problem.

Usage:
    python cli.py check --p11 0.9 --p01 0.1 --k 2 --m 1 --n 5 --beta 0.1
    python cli.py value --p11 0.9 --p01 0.1 --k 2 --m 1 --beta 0.8 --horizon 5 \\
        --ordered-belief 0.99,0.95,0.9,0.9,0.9 --policy fixed --first-action 1,3
    python cli.py counterexample
    python cli.py audit --p11 0.6 --p01 0.5 --k 1 --m 1 --n 3 --beta 0.9
    python cli.py simulate --p11 0.8 --p01 0.3 --k 2 --m 1 --n 4 --beta 0.9 --horizon 50
    python cli.py sweep --k 2 --m 1 --n 5 --regime positive --step 0.05 --out region.svg --format svg

Exit codes: 0 success, 2 invalid parameters, 3 scale guard exceeded, 4 I/O error.
"""

import argparse
import json
import logging
import math
import sys

from tabulate import tabulate

from osa import config
from osa.conditions import finite_condition, infinite_condition
from osa.dp import (
    HorizonSpec, ScaleGuardError, deviation_audit, evaluate_policy,
    infinite_value_truncated, optimal_value,
)
from osa.model import Action, BeliefState, ChannelModel, steady_state_belief
from osa.policy import PolicyKind, PolicySpec, parse_action
from osa.sim import SimConfig, simulate, write_replications_csv
from osa.sweep import SweepConfig, region_sweep, render_region_svg

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_SCALE = 3
EXIT_IO = 4

# Worked counterexample: five channels, sense two, use one
COUNTEREXAMPLE = {
    "p11": 0.9, "p01": 0.1, "n": 5, "k": 2, "m": 1, "beta": 0.8, "horizon": 5,
    "belief": (0.99, 0.95, 0.9, 0.9, 0.9),
    "deviation": (1, 3),
}


def _banner(title: str):
    print("\n" + "=" * 60)
    print(title)
    print("=" * 60)


def _json_safe(data):
    """Non-finite floats become null (JSON has no inf / nan)."""
    if isinstance(data, float):
        return data if math.isfinite(data) else None
    if isinstance(data, dict):
        return {key: _json_safe(value) for key, value in data.items()}
    if isinstance(data, (list, tuple)):
        return [_json_safe(value) for value in data]
    return data


def _emit_json(data, out=None):
    text = json.dumps(_json_safe(data), indent=2, allow_nan=False)
    if out:
        try:
            with open(out, 'w') as f:
                f.write(text + "\n")
        except OSError as e:
            raise OSError(f"Could not write {out}: {e}") from e
        logger.info(f"[Output] Saved JSON to {out}")
    else:
        print(text)


def parse_belief(text: str) -> BeliefState:
    try:
        omegas = tuple(float(x) for x in text.split(',') if x.strip())
    except ValueError:
        raise ValueError(f"--ordered-belief must be comma-separated numbers, got '{text}'")
    return BeliefState(omegas)


def _model(args) -> ChannelModel:
    return ChannelModel(p11=args.p11, p01=args.p01)


def _belief(args, model: ChannelModel) -> BeliefState:
    if args.ordered_belief:
        belief = parse_belief(args.ordered_belief)
        if args.n is not None and belief.n != args.n:
            raise ValueError(f"--ordered-belief has {belief.n} entries but --n is {args.n}")
        return belief
    if args.n is None:
        raise ValueError("Give --n or --ordered-belief")
    return steady_state_belief(model, args.n)


def _policy(args) -> PolicySpec:
    kind = PolicyKind(args.policy)
    if kind == PolicyKind.FIXED:
        if not args.first_action:
            raise ValueError("--policy fixed needs --first-action, e.g. 1,3")
        action = parse_action(args.first_action)
        if action.k != args.k:
            raise ValueError(f"--first-action senses {action.k} channels but --k is {args.k}")
        return PolicySpec.fixed_then_myopic(action, args.m)
    if kind == PolicyKind.RANDOM:
        return PolicySpec.random(args.k, args.m, args.seed)
    return PolicySpec(kind, args.k, args.m)


# =============================================================================
# SUBCOMMANDS
# =============================================================================

def cmd_check(args) -> int:
    model = _model(args)
    reports = []
    if args.beta is not None:
        reports.append(finite_condition(model, args.k, args.m, args.n, args.beta))
    reports.append(infinite_condition(model, args.k, args.m, args.n))

    if args.format == 'json':
        _emit_json([r.to_dict() for r in reports], args.out)
        return EXIT_OK

    _banner(f"SUFFICIENT CONDITIONS ({model.regime.value}, (k,m)=({args.k},{args.m}), N={args.n})")
    print(f"R_upper = {reports[0].r_upper:.10g}   R_lower = {reports[0].r_lower:.10g}")
    rows = [
        [r.horizon, f"{r.lhs:.6g}", f"{r.threshold:.6g}",
         "yes" if r.satisfied else "no", "yes" if r.unconditional else "no"]
        for r in reports
    ]
    print(tabulate(rows, headers=["horizon", "lhs", "threshold", "satisfied", "unconditional"],
                   tablefmt="simple"))
    for r in reports:
        if r.table_variant_satisfied is not None:
            print(f"Summary-table form (lhs <= R_upper/R_lower): "
                  f"{'satisfied' if r.table_variant_satisfied else 'not satisfied'}")
        if r.diagnostic:
            print(f"Note: {r.diagnostic}")
    print(reports[0].belief_domain_note)
    print("=" * 60)
    return EXIT_OK


def cmd_value(args) -> int:
    model = _model(args)
    belief = _belief(args, model)
    spec = _policy(args)

    if spec.kind == PolicyKind.OPTIMAL:
        if args.horizon is None:
            raise ValueError("--policy optimal needs a finite --horizon")
        result = optimal_value(model, belief, args.k, args.m, HorizonSpec.finite(args.horizon, args.beta))
    elif args.horizon is None:
        result = infinite_value_truncated(model, belief, spec, args.beta, args.epsilon)
    else:
        result = evaluate_policy(model, belief, spec, HorizonSpec.finite(args.horizon, args.beta))

    if args.format == 'json':
        data = result.to_dict()
        data["policy"] = spec.to_dict()
        data["belief"] = list(belief.omegas)
        _emit_json(data, args.out)
        return EXIT_OK

    _banner(f"VALUE ({spec.kind.value} policy)")
    print(f"Belief:        {', '.join(f'{w:.6g}' for w in belief.omegas)}")
    print(f"Horizon:       {'T=' + str(args.horizon) if args.horizon else 'infinite (T=' + str(result.horizon_steps) + ')'}")
    print(f"Value:         {result.value:.10f}")
    if result.error_bound:
        print(f"Tail bound:    {result.error_bound:.3e}")
    if result.first_actions:
        print(f"Best first:    {[a.to_user() for a in result.first_actions]}")
    print("=" * 60)
    return EXIT_OK


def run_counterexample() -> dict:
    """Myopic against one deviation on the worked five-channel instance."""
    c = COUNTEREXAMPLE
    model = ChannelModel(p11=c["p11"], p01=c["p01"])
    belief = BeliefState(c["belief"])
    horizon = HorizonSpec.finite(c["horizon"], c["beta"])
    deviation = Action.from_user(c["deviation"])

    w_myopic = evaluate_policy(model, belief, PolicySpec.myopic(c["k"], c["m"]), horizon).value
    w_dev = evaluate_policy(
        model, belief, PolicySpec.fixed_then_myopic(deviation, c["m"]), horizon
    ).value
    difference = w_dev - w_myopic
    myopic_optimal = difference <= 0.0
    verdict = "myopic optimal" if myopic_optimal else "myopic NOT optimal"

    _banner("COUNTEREXAMPLE: (k,m)=(2,1), N=5, beta=0.8, T=5, p11=0.9, p01=0.1")
    print(f"Belief:              {c['belief']}")
    print(f"W myopic (1,2):      {w_myopic:.8f}")
    print(f"W deviation {c['deviation']}:  {w_dev:.8f}")
    print(f"Difference:          {difference:.8f}")
    print(f"Verdict:             {verdict}")
    print("=" * 60)
    return {
        "w_myopic": w_myopic,
        "w_deviation": w_dev,
        "deviation": list(c["deviation"]),
        "difference": difference,
        "myopic_optimal": myopic_optimal,
        "verdict": verdict,
    }


def cmd_counterexample(args) -> int:
    report = run_counterexample()
    if args.format == 'json':
        _emit_json(report, args.out)
    return EXIT_OK


def cmd_audit(args) -> int:
    model = _model(args)
    beliefs = None
    if args.ordered_belief:
        beliefs = [parse_belief(args.ordered_belief)]
        if beliefs[0].n != args.n:
            raise ValueError(f"--ordered-belief has {beliefs[0].n} entries but --n is {args.n}")
    report = deviation_audit(
        model, args.n, args.k, args.m, args.beta,
        epsilon=args.epsilon, belief_grid_depth=args.depth,
        horizon=args.horizon, beliefs=beliefs,
    )
    if args.format == 'json':
        _emit_json(report.to_dict(), args.out)
        return EXIT_OK

    _banner("ONE-STEP DEVIATION AUDIT")
    print(f"Beliefs audited:   {report.beliefs_audited}")
    print(f"Horizon:           T={report.horizon_steps}{'' if args.horizon else ' (truncated)'}")
    print(f"Best gain:         {report.gain:.3e}  (tolerance {report.tolerance:.3e})")
    if report.profitable_found:
        print(f"Profitable:        YES, sense {report.witness_action.to_user()} "
              f"at {report.witness_belief.omegas}")
    else:
        print("Profitable:        none found")
    print("=" * 60)
    return EXIT_OK


def cmd_simulate(args) -> int:
    model = _model(args)
    belief = _belief(args, model)
    spec = _policy(args)
    sim_cfg = SimConfig(
        horizon=args.horizon or 100,
        beta=args.beta,
        replications=args.replications,
        seed=args.seed,
        burn_in=args.burn_in,
        keep_per_replication=args.format == 'csv',
    )
    result = simulate(model, belief, spec, sim_cfg)

    if args.format == 'csv':
        if not args.out:
            raise ValueError("--format csv needs --out for the per-replication file")
        write_replications_csv(result, args.out)
    elif args.format == 'json':
        _emit_json(result.to_dict(), args.out)
        return EXIT_OK

    _banner(f"SIMULATION ({spec.kind.value} policy, {result.mode})")
    print(f"Replications:  {result.replications}")
    print(f"Mean:          {result.mean:.6f}")
    print(f"Std error:     {result.std_error:.3e}")
    print(f"95% CI:        [{result.ci95[0]:.6f}, {result.ci95[1]:.6f}]")
    print("=" * 60)
    return EXIT_OK


def cmd_sweep(args) -> int:
    fmt = args.format or 'csv'
    if fmt == 'svg' and not args.out:
        raise ValueError("--format svg needs --out")
    sweep_cfg = SweepConfig(
        k=args.k, m=args.m, n=args.n,
        regime=args.regime,
        grid_step=args.step,
        beta=args.beta,
        csv_path=args.out if fmt == 'csv' else None,
    )
    table = region_sweep(sweep_cfg)
    if fmt == 'svg':
        horizon = 'infinite' if args.beta is None else f'finite beta={args.beta}'
        render_region_svg(table, args.out, title=f"(k,m)=({args.k},{args.m}), N={args.n}, {horizon}")
    elif fmt == 'json':
        _emit_json(table.to_dict(orient='records'), args.out)
        return EXIT_OK
    elif not args.out:
        print(tabulate(table.values.tolist(), headers=list(table.columns), tablefmt="simple",
                       floatfmt=".6g"))
        return EXIT_OK

    _banner(f"REGION SWEEP ({args.regime}, step {args.step})")
    print(f"Cells:      {len(table)}")
    print(f"Satisfied:  {int(table['satisfied'].sum())}")
    print(f"Written:    {args.out}")
    print("=" * 60)
    return EXIT_OK


# =============================================================================
# PARSER
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Myopic sensing for (k,m) multichannel opportunistic access"
    )
    parser.add_argument('--log-level', default=None, help="Override OSA_LOG_LEVEL")
    sub = parser.add_subparsers(dest='command', required=True)

    def channel_args(p, need_n=True):
        p.add_argument('--p11', type=float, required=True, help="P(good -> good)")
        p.add_argument('--p01', type=float, required=True, help="P(bad -> good)")
        p.add_argument('--k', type=int, required=True, help="Channels sensed per slot")
        p.add_argument('--m', type=int, required=True, help="Channels usable per slot")
        p.add_argument('--n', type=int, required=need_n, default=None, help="Number of channels")

    def output_args(p, formats=('json',)):
        p.add_argument('--format', choices=formats, default=None)
        p.add_argument('--out', default=None, help="Output file (stdout when omitted)")

    p = sub.add_parser('check', help="Evaluate the sufficient conditions")
    channel_args(p)
    p.add_argument('--beta', type=float, default=None, help="Also check the finite-horizon condition")
    output_args(p)
    p.set_defaults(handler=cmd_check)

    p = sub.add_parser('value', help="Exact policy value or optimal value")
    channel_args(p, need_n=False)
    p.add_argument('--beta', type=float, required=True)
    p.add_argument('--horizon', type=int, default=None, help="T slots; omit for infinite horizon")
    p.add_argument('--epsilon', type=float, default=config.DEFAULT_AUDIT_EPSILON,
                   help="Truncation tolerance for the infinite horizon")
    p.add_argument('--ordered-belief', default=None, help="w1,w2,...; default steady state")
    p.add_argument('--policy', choices=[k.value for k in PolicyKind], default='myopic')
    p.add_argument('--first-action', default=None, help="1-based channels for --policy fixed")
    p.add_argument('--seed', type=int, default=0)
    output_args(p)
    p.set_defaults(handler=cmd_value)

    p = sub.add_parser('counterexample', help="Reproduce the five-channel counterexample")
    output_args(p)
    p.set_defaults(handler=cmd_counterexample)

    p = sub.add_parser('audit', help="Search for a profitable one-step deviation")
    channel_args(p)
    p.add_argument('--beta', type=float, required=True)
    p.add_argument('--epsilon', type=float, default=config.DEFAULT_AUDIT_EPSILON)
    p.add_argument('--depth', type=int, default=config.DEFAULT_LATTICE_DEPTH,
                   help="tau-iterate depth of the belief lattice")
    p.add_argument('--horizon', type=int, default=None, help="Finite-horizon audit with T slots")
    p.add_argument('--ordered-belief', default=None, help="Audit this belief only")
    output_args(p)
    p.set_defaults(handler=cmd_audit)

    p = sub.add_parser('simulate', help="Monte Carlo estimate of a policy's reward")
    channel_args(p, need_n=False)
    p.add_argument('--beta', type=float, required=True, help="Discount; 1 for average reward")
    p.add_argument('--horizon', type=int, default=None, help="Slots per replication (default 100)")
    p.add_argument('--replications', type=int, default=10000)
    p.add_argument('--burn-in', type=int, default=None)
    p.add_argument('--ordered-belief', default=None)
    p.add_argument('--policy', choices=['myopic', 'fixed', 'random'], default='myopic')
    p.add_argument('--first-action', default=None)
    p.add_argument('--seed', type=int, default=0)
    output_args(p, formats=('json', 'csv'))
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser('sweep', help="Sufficient-condition region over (p01, p11)")
    p.add_argument('--k', type=int, required=True)
    p.add_argument('--m', type=int, required=True)
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--regime', choices=['positive', 'negative', 'both'], default='positive')
    p.add_argument('--step', type=float, default=0.02)
    p.add_argument('--beta', type=float, default=None, help="Finite-horizon sweep at this beta")
    output_args(p, formats=('csv', 'json', 'svg'))
    p.set_defaults(handler=cmd_sweep)
    return parser


def main(argv=None) -> int:
    """Command-line interface entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)
    config.setup_logging(args.log_level)

    try:
        return args.handler(args)
    except ValueError as e:
        logger.error(f"Invalid parameters: {e}")
        return EXIT_INVALID
    except ScaleGuardError as e:
        logger.error(f"Scale guard: {e}")
        return EXIT_SCALE
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
