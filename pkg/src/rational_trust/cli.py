"""Command-line entry point: ``rational-trust <command> ...``.

Exit codes: 0 success, 2 usage, 3 config validation, 4 runtime.
``RATIONAL_TRUST_OUT`` sets the default output directory for files.
"""

from __future__ import annotations

import argparse
import io
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .analysis import (
    adversarial_eval,
    default_grid,
    equilibrium_sweep,
    format_profitability,
    format_sweep_csv,
    standard_attacks,
)
from .config import default_config, dump_config, load_config
from .errors import ConfigError, ParameterError
from .games import analyze, prisoners_dilemma, sellers_dilemma
from .market import run
from .trust import TrustVariant

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3, 4
OUT_ENV = "RATIONAL_TRUST_OUT"
TRACE_HEADER = "# rational-trust trace v1"
SUMMARY_HEADER = "# rational-trust summary v1"

CONFIG_HELP = """\
config file keys (every key optional; see the bundled default.cfg):
  [market]   rounds, buyers_per_round, trust_variant (f1|f2|extended),
             buyer_policy (price_first|trust_proportional),
             feedback_aggregation_threshold (0,1], feedback_noise [0,1],
             unit_cost_honest, unit_cost_defect, rng_seed
  [costs]    low, high, p_high         two-point transaction cost draw
  [trust]    eta, theta, kappa, epsilon, mu_max, rho, recovery_steps_k,
             activity_threshold, n0, lambda_exp
  [utility]  omega, sigma, mu_effective, rho, lifetime, recovery_steps_k,
             delta_rounds
  [seller:NAME]  strategy, count, price_honest, price_defect and strategy
             parameters: honest_rounds, defect_rounds, identity_count,
             cost_threshold, composition, coalition, fake_rate, target_rate
"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _attack_key(name: str) -> str:
    return name.strip().lower().replace("-", "_")


def _csv_list(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _out_dir(args) -> Path:
    return Path(args.out_dir or os.environ.get(OUT_ENV) or ".")


def _open_out(target: str | None, default_name: str, args):
    """``-`` means stdout; a bare name lands in the output directory."""
    if target == "-":
        return None
    path = Path(target) if target else _out_dir(args) / default_name
    if not path.is_absolute() and target and os.sep not in target:
        path = _out_dir(args) / target
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _load(args):
    return load_config(args.config) if args.config else default_config()


# --------------------------------------------------------------------------


def cmd_analyze_game(args) -> int:
    if args.game == "pd":
        if args.variant or args.mu is not None or args.sigma is not None:
            raise UsageError("--variant/--mu/--sigma only apply to --game sellers")
        game = prisoners_dilemma()
    else:
        if args.variant is None or args.mu is None or args.sigma is None:
            raise UsageError("--game sellers requires --variant, --mu and --sigma")
        if args.variant == "f2" and (args.rho is None or args.lifetime is None):
            raise UsageError("--variant f2 requires --rho and --lifetime")
        game = sellers_dilemma(
            args.variant, args.mu, args.sigma,
            rho=args.rho or 0.0, lifetime=args.lifetime or 0.0, omega=args.omega, k=args.k,
        )
    report = analyze(game)
    out = sys.stdout
    out.write(f"game: {game.name or args.game}\n")
    out.write("payoffs:\n")
    for outcome in game.outcomes():
        pays = "  ".join(f"{game.payoff(outcome, p):.6g}" for p in range(game.player_count))
        out.write(f"  {game.format_outcome(outcome)}  {pays}\n")
    eq = sorted(report.pure_equilibria)
    out.write("pure nash: {" + ", ".join(game.format_outcome(o) for o in eq) + "}\n")
    out.write("dominance:\n")
    for player, kinds in sorted(report.dominated_actions.items()):
        for action, kind in sorted(kinds.items()):
            out.write(f"  player {player + 1} {game.label(player, action)}: {kind.value}\n")
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = _load(args)
    if args.seed is not None:
        config = replace(config, rng_seed=args.seed)
    trace = run(config)

    buf = io.StringIO()
    write_trace_csv(trace, buf)
    dest = _open_out(args.out, "trace.csv", args)
    if dest is None:
        sys.stdout.write(buf.getvalue())
    else:
        dest.write_bytes(buf.getvalue().encode("utf-8"))

    summary = format_summary(trace)
    effective = dump_config(config)
    if dest is not None:
        dest.with_suffix(".summary.txt").write_text(summary, encoding="utf-8")
        dest.with_suffix(".config.cfg").write_text(effective, encoding="utf-8")
        sys.stdout.write(effective)
        sys.stdout.write(summary)
    else:
        sys.stderr.write(effective)
        sys.stderr.write(summary)
    return EXIT_OK


def write_trace_csv(trace, stream) -> None:
    stream.write(TRACE_HEADER + "\n")
    stream.write("round,persistent_id,identity_id,action,price,units_sold,trust,lifetime,revenue\n")
    for r in trace.rows():
        stream.write(
            f"{r.round},{r.persistent_id},{r.identity_id},{r.action.label},{r.price!r},"
            f"{r.units_sold},{r.trust!r},{r.lifetime},{r.revenue!r}\n"
        )


def format_summary(trace) -> str:
    lines = [SUMMARY_HEADER, f"rounds = {len(trace.records)}", f"seed = {trace.config.rng_seed}"]
    for pid, info in trace.summary().items():
        lines.append("")
        lines.append(f"[{pid}]")
        lines += [f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}" for k, v in info.items()]
    return "\n".join(lines) + "\n"


def cmd_eval_attacks(args) -> int:
    config = _load(args)
    battery = standard_attacks(args.group)
    names = list(battery) if args.attacks == "all" else [_attack_key(a) for a in _csv_list(args.attacks)]
    unknown = [n for n in names if n not in battery]
    if unknown:
        valid = ", ".join(n.replace("_", "-") for n in battery)
        raise UsageError(f"unknown attack {unknown[0]!r}; valid names: {valid}, all")
    try:
        variants = [TrustVariant(v) for v in _csv_list(args.variants)]
    except ValueError:
        raise UsageError(f"unknown variant in {args.variants!r}; valid: f1, f2, extended") from None
    if args.seeds < 1:
        raise UsageError("--seeds must be >= 1")
    if args.seed is not None:
        config = replace(config, rng_seed=args.seed)

    reports = []
    for name in names:
        strategy = battery[name]
        cfg = config
        if strategy.coalition or any(c.coalition for c in getattr(strategy, "components", ())):
            cfg = _ensure_coalition(cfg, args.group)
        reports.append(
            adversarial_eval(cfg, strategy, variants, args.seeds, args.group,
                             workers=args.workers, name=name.replace("_", "-"))
        )
    table = format_profitability(reports)
    sys.stdout.write(table)
    if args.out:
        dest = _open_out(args.out, "attacks.csv", args)
        if dest is not None:
            dest.write_text(table, encoding="utf-8")
    return EXIT_OK


def _ensure_coalition(config, group):
    """Coalition attacks need two colluders in the attacking group."""
    sellers = tuple(
        replace(s, count=max(s.count, 2)) if s.name == group else s for s in config.sellers
    )
    return replace(config, sellers=sellers)


def cmd_sweep(args) -> int:
    if args.points < 1:
        raise UsageError("--points must be >= 1")
    for lo, hi, flag in ((args.rl_min, args.rl_max, "--rl"), (args.sigma_min, args.sigma_max, "--sigma")):
        if lo > hi or lo < 0 or (args.points > 1 and lo == hi):
            raise UsageError(f"degenerate grid for {flag}-min/{flag}-max")
        if hi <= 0 and flag == "--sigma":
            raise UsageError("sigma must be > 0")
    xs = _axis(args.rl_min, args.rl_max, args.points)
    ss = _axis(args.sigma_min, args.sigma_max, args.points)
    report = equilibrium_sweep(xs, ss, mu=args.mu, omega=args.omega, k=args.k)
    text = format_sweep_csv(report)
    dest = _open_out(args.out, "sweep.csv", args)
    if dest is None:
        sys.stdout.write(text)
    else:
        dest.write_text(text, encoding="utf-8")
    slope = report.fitted_slope()
    hits, cols = report.boundary_agreement()
    log = sys.stderr if dest is None else sys.stdout
    log.write(f"points: {len(report.points)}  misclassified: {len(report.misclassified)}\n")
    log.write(f"analytic boundary: sigma = {report.analytic_slope:g} * rho*l\n")
    log.write("fitted boundary: " + ("n/a" if slope is None else f"sigma = {slope:.4g} * rho*l") + "\n")
    log.write(f"columns bracketing the analytic boundary: {hits}/{cols}\n")
    return EXIT_OK


def _axis(lo, hi, n):
    if n == 1:
        return [lo]
    if lo > 0:
        return list(default_grid(n, lo, hi))
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="rational-trust",
        description="Trust models, seller's dilemma analysis and marketplace attack simulations.",
        epilog=CONFIG_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--out-dir", help=f"output directory (default ${OUT_ENV} or .)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("analyze-game", help="pure equilibria and dominance of a 2x2 game")
    g.add_argument("--game", choices=["pd", "sellers"], required=True)
    g.add_argument("--variant", choices=["f1", "f2"])
    g.add_argument("--mu", type=float)
    g.add_argument("--sigma", type=float)
    g.add_argument("--rho", type=float)
    g.add_argument("--lifetime", type=float)
    g.add_argument("--omega", type=float, default=100.0)
    g.add_argument("--k", type=int, default=5)
    g.set_defaults(func=cmd_analyze_game)

    s = sub.add_parser("simulate", help="run one market simulation",
                       epilog=CONFIG_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    s.add_argument("config", nargs="?", help="config file (default: bundled default.cfg)")
    s.add_argument("--seed", type=int)
    s.add_argument("--out", help="trace CSV path, or - for stdout (default trace.csv)")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("eval-attacks", help="attack profitability against honest twins",
                       epilog=CONFIG_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    e.add_argument("config", nargs="?")
    e.add_argument("--attacks", default="all", help="comma list or all")
    e.add_argument("--variants", default="f1,f2")
    e.add_argument("--seeds", type=int, default=30)
    e.add_argument("--seed", type=int, help="first seed (default: config rng_seed)")
    e.add_argument("--group", default="attacker", help="seller group that attacks")
    e.add_argument("--workers", type=int, default=None)
    e.add_argument("--out", help="also write the table to this CSV")
    e.set_defaults(func=cmd_eval_attacks)

    w = sub.add_parser("sweep", help="equilibrium region map over (rho*l, sigma)")
    w.add_argument("--rl-min", type=float, default=1e-4)
    w.add_argument("--rl-max", type=float, default=1e-1)
    w.add_argument("--sigma-min", type=float, default=1e-4)
    w.add_argument("--sigma-max", type=float, default=1e-1)
    w.add_argument("--points", type=int, default=50)
    w.add_argument("--mu", type=float, default=0.05)
    w.add_argument("--omega", type=float, default=100.0)
    w.add_argument("--k", type=int, default=5)
    w.add_argument("--out", help="CSV path or - (default sweep.csv)")
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except ParameterError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_RUNTIME
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_RUNTIME
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
