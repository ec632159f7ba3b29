"""Acceptance criteria, one test per criterion, one PASS/FAIL line each.

Run directly (``python3 tests/test_acceptance.py``) or under pytest, where
the lines are repeated in the terminal summary.
"""

import contextlib
import io
import itertools
import math
import random
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))
from acceptance_log import record  # noqa: E402

from rational_trust.analysis import BOUNDARY, adversarial_eval, equilibrium_sweep
from rational_trust.cli import main
from rational_trust.config import default_config
from rational_trust.games import (
    COOPERATE,
    DEFECT,
    Dominance,
    NormalFormGame,
    analyze,
    classify_dominance,
    prisoners_dilemma,
    pure_nash,
    sellers_dilemma,
)
from rational_trust.market import ReEntry
from rational_trust.trust import Action, TrustParams, TrustState, update, update_f1, update_f2
from rational_trust.utility import UtilityParams, future_loss_gamma

CC, DD = (COOPERATE, COOPERATE), (DEFECT, DEFECT)


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def test_criterion_1_prisoners_dilemma():
    g = prisoners_dilemma()
    (ne, dom), dt = timed(lambda: (pure_nash(g), [classify_dominance(g, p, COOPERATE) for p in (0, 1)]))
    ok = ne == {DD} and dom == [Dominance.STRICT] * 2 and dt < 1e-3
    shown = ", ".join(g.format_outcome(o) for o in sorted(ne))
    record(1, ok, f"NE={{{shown}}}, C for both players: {[d.value for d in dom]} in {dt * 1e3:.3f} ms (< 1 ms)")
    assert ok


def test_criterion_2_f1_defects():
    rng = random.Random(2)
    # mu in [0, 0.1), sigma in (0, 0.1], omega in [1, 1000]
    draws = [
        (0.1 * rng.random(), 0.1 * (1 - rng.random()), rng.uniform(1, 1000))
        for _ in range(1000)
    ]
    bad, dt = timed(
        lambda: [d for d in draws if pure_nash(sellers_dilemma("f1", d[0], d[1], omega=d[2])) != {DD}]
    )
    ok = not bad and dt < 1
    record(2, ok, f"1000 f1 draws, {len(bad)} without unique (D,D), {dt:.3f} s (< 1 s)")
    assert ok


def test_criterion_3_f2_law():
    rng = random.Random(3)
    mismatches = 0

    def check():
        nonlocal mismatches
        for _ in range(1000):
            mu, sigma = rng.uniform(0, 0.0999), rng.uniform(1e-4, 0.1)
            rho, lt, omega = rng.uniform(0, 0.1), rng.uniform(0, 2), rng.uniform(1, 1000)
            ne = pure_nash(sellers_dilemma("f2", mu, sigma, rho=rho, lifetime=lt, omega=omega))
            gain = 1.5 * rho * lt
            if gain > sigma and ne != {CC}:
                mismatches += 1
            elif gain < sigma and ne != {DD}:
                mismatches += 1

    _, dt = timed(check)
    tie = sellers_dilemma("f2", 0.05, 0.03, rho=0.02, lifetime=1)
    report = analyze(tie)
    weak = all(k is Dominance.WEAK for kinds in report.dominated_actions.values() for k in kinds.values())
    ok = mismatches == 0 and weak and len(report.pure_equilibria) == 4 and dt < 1
    record(3, ok, f"1000 f2 draws, {mismatches} mismatches; tie gamma=sigma all-weak={weak}; {dt:.3f} s (< 1 s)")
    assert ok


def test_criterion_4_gamma_closed_form():
    rng = random.Random(4)
    worst = 0.0
    for k in range(1, 51):
        for _ in range(100):
            rho, lt = rng.uniform(0, 1), rng.uniform(0, 100)
            explicit = (rho / 2) * math.fsum(lt - j * lt / k for j in range(k + 1))
            got = future_loss_gamma(UtilityParams(rho=rho, lifetime=lt, recovery_steps_k=k))
            worst = max(worst, abs(got - explicit))
    exact = all(
        future_loss_gamma(UtilityParams(rho=r, lifetime=l)) == 1.5 * (r * l)
        for r, l in [(0.01, 1), (0.001, 37), (0.2, 0.5)] + [(rng.random(), rng.random()) for _ in range(100)]
    )
    ok = worst <= 1e-12 and exact
    record(4, ok, f"max |closed form - progression sum| = {worst:.2e} (<= 1e-12); k=5 gives 1.5*rho*l exactly: {exact}")
    assert ok


def _definition_nash(payoffs, counts):
    """Outcomes where no player gains by a unilateral deviation."""
    out = set()
    for outcome in itertools.product(*(range(c) for c in counts)):
        stable = True
        for p, c in enumerate(counts):
            here = payoffs[outcome][p]
            for a in range(c):
                dev = outcome[:p] + (a,) + outcome[p + 1:]
                if payoffs[dev][p] > here:
                    stable = False
        if stable:
            out.add(outcome)
    return out


def test_criterion_5_nash_oracle():
    rng = np.random.default_rng(5)

    def check():
        mism = 0
        for _ in range(1000):
            n = int(rng.integers(2, 4))
            counts = tuple(int(c) for c in rng.integers(1, 5, size=n))
            # small integer payoffs force plenty of ties
            payoffs = rng.integers(-3, 4, size=counts + (n,)).astype(float)
            if _definition_nash(payoffs, counts) != set(pure_nash(NormalFormGame(payoffs))):
                mism += 1
        return mism

    mism, dt = timed(check)
    ok = mism == 0 and dt < 10
    record(5, ok, f"1000 random games, {mism} mismatches vs deviation check, {dt:.2f} s (< 10 s)")
    assert ok


def test_criterion_6_bounds_and_reduction():
    rng = random.Random(6)
    escaped = 0
    variants = ["f1", "f2", "extended"]
    from rational_trust.trust import TransactionFeatures

    for _ in range(100_000):
        p = TrustParams(epsilon=rng.uniform(0.01, 0.5), rho=rng.uniform(0, 0.2))
        s = TrustState(trust=rng.uniform(-1, 1), lifetime=rng.randrange(200), identity_id="x")
        v = rng.choice(variants)
        for _ in range(5):
            f = TransactionFeatures(rng.choice([1.0, 10.0]), 2.8)
            s = update(v, s, Action(rng.randrange(2)), p, f)
            if not -1 <= s.trust <= 1:
                escaped += 1
    differ = 0
    for _ in range(10_000):
        p = TrustParams(epsilon=rng.uniform(0.01, 0.99), rho=rng.uniform(0, 1))
        s = TrustState(trust=rng.uniform(-1, 1), lifetime=0, identity_id="y")
        a = Action(rng.randrange(2))
        if update_f2(s, a, p) != update_f1(s, a, p):
            differ += 1
    ok = escaped == 0 and differ == 0
    record(6, ok, f"1e5 sequences: {escaped} out of bounds; 1e4 lifetime-0 f2 vs f1: {differ} differ")
    assert ok


def test_criterion_7_re_entry_reversal():
    cfg = default_config()
    gamma = future_loss_gamma(cfg.utility)
    rep, dt = timed(lambda: adversarial_eval(cfg, ReEntry(3, 10), ["f1", "f2"], seeds=30))
    f1, f2 = rep.for_variant("f1"), rep.for_variant("f2")
    ok = (
        gamma > cfg.utility.sigma
        and cfg.rounds >= 200
        and f1.mean > 0 and abs(f1.mean) > 2 * f1.stderr
        and f2.mean < 0 and abs(f2.mean) > 2 * f2.stderr
        and dt < 60
    )
    record(
        7, ok,
        f"gamma={gamma:g} > sigma={cfg.utility.sigma:g}; 30 seeds x {cfg.rounds} rounds; "
        f"f1 {f1.mean:+.2f} (2se {2 * f1.stderr:.2f}), f2 {f2.mean:+.2f} (2se {2 * f2.stderr:.2f}); {dt:.1f} s (< 60 s)",
    )
    assert ok


def test_criterion_8_determinism(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    with contextlib.redirect_stdout(io.StringIO()):
        codes = [main(["simulate", "--seed", "42", "--out", str(p)]) for p in (a, b)]
    same = a.read_bytes() == b.read_bytes()
    ok = codes == [0, 0] and same and a.stat().st_size > 0
    record(8, ok, f"two simulate runs, seed 42: byte-identical={same} ({a.stat().st_size} bytes)")
    assert ok


def test_criterion_9_sweep():
    rep, dt = timed(equilibrium_sweep)
    wrong = rep.misclassified
    boundary = sum(p.label == BOUNDARY for p in rep.points)
    ok = len(rep.points) == 2500 and not wrong and dt < 30
    record(9, ok, f"50x50 grid: {len(wrong)} misclassified, {boundary} boundary points, {dt:.2f} s (< 30 s)")
    assert ok


if __name__ == "__main__":
    import tempfile

    failed = 0
    for name, fn in sorted(globals().items()):
        if not name.startswith("test_criterion_"):
            continue
        try:
            if "tmp_path" in fn.__code__.co_varnames[: fn.__code__.co_argcount]:
                with tempfile.TemporaryDirectory() as d:
                    fn(Path(d))
            else:
                fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
