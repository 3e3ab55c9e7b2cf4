#!/usr/bin/env python3
"""Smoke test for the crn_py extension module.

Builds nothing itself: run `cargo build -p crn-py --release` (or debug)
first. The script locates the compiled cdylib, exposes it as `crn_py`, and
exercises the main types and operations.
"""

import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def import_module():
    candidates = [
        ROOT / "target" / "release" / "libcrn_py.so",
        ROOT / "target" / "debug" / "libcrn_py.so",
    ]
    lib = next((p for p in candidates if p.exists()), None)
    if lib is None:
        sys.exit("build the extension first: cargo build -p crn-py --release")
    staging = Path(tempfile.mkdtemp(prefix="crn_py_"))
    shutil.copy2(lib, staging / "crn_py.so")
    sys.path.insert(0, str(staging))
    import crn_py

    return crn_py


def check(name, condition, detail=""):
    status = "PASS" if condition else "FAIL"
    print(f"{status} {name}" + (f": {detail}" if detail else ""))
    if not condition:
        sys.exit(1)


def main():
    crn = import_module()
    print(f"crn_py {crn.__version__} loaded")

    # Pinned generator vectors.
    check(
        "splitmix vector",
        crn.splitmix_outputs(0, 2) == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4],
    )
    check(
        "seed derivation vector",
        crn.derive_seed("v", "3", "1", 2, 7) == 0x392A487A7D2EFEF4
        and crn.derive_seed("v", "3", "1", 2, 7, "p") == 0xED51A4FCB666E313,
    )

    # Counterexample utilities and covariance closed form.
    mdp, p1, p2 = crn.counterexample(2.0, 4.0, 3.0, 2.0)
    check(
        "counterexample utilities",
        mdp.utility(p1) == 2.5 and mdp.utility(p2) == 3.0,
        f"{mdp.utility(p1)} / {mdp.utility(p2)}",
    )
    check(
        "covariance closed form",
        crn.analytic_counterexample_covariance(2.0, 4.0, 3.0, 2.0) == -0.5,
    )

    # XD of a policy against itself is exactly zero; XDD at full horizon
    # coincides with XI draw for draw.
    draws_zero = all(
        crn.value_difference_draw(mdp, p1, p1, "xd", i, "smoke") == 0.0
        for i in range(50)
    )
    check("xd self-difference is zero", draws_zero)
    coincide = all(
        crn.value_difference_draw(mdp, p1, p2, "xi", i, "smoke")
        == crn.value_difference_draw(mdp, p1, p2, "xdd:2", i, "smoke")
        for i in range(50)
    )
    check("xdd at depth H equals xi", coincide)

    # Episodes are reproducible and respect the dependent-scheme contract.
    synthetic = crn.TabularMdp.synthetic(5, 3, 8, 42)
    policy = crn.Policy.constant(5, 8, 1)
    a = crn.evaluate_episode(synthetic, policy, "dependent", 3, "smoke")
    b = crn.evaluate_episode(synthetic, policy, "dependent", 3, "smoke")
    check("episode determinism", a == b, f"return {a[3]:.4f}")

    # Text round trip.
    parsed = crn.TabularMdp.from_text(synthetic.to_text())
    check(
        "text round trip",
        parsed.to_text() == synthetic.to_text()
        and parsed.num_states == 5
        and not parsed.is_deterministic(),
    )

    # Policy selection on agreeing candidates.
    policies = crn.agreeing_policies(5, 3, 8, 12, 2, 9)
    check(
        "agreeing policy set",
        len(policies) == 12
        and all(policies[0].agrees_after(p, 2) for p in policies),
    )
    chosen, estimates, true_value = crn.select_policy(
        synthetic, policies, 20, "depth-dependent:2", "smoke"
    )
    check(
        "policy selection",
        0 <= chosen < 12 and len(estimates) == 12,
        f"chose {chosen}, true value {true_value:.3f}",
    )

    # UCT on a deterministic bandit must find the rewarding arm.
    bandit_text = "\n".join(
        [
            "1 2 1 0",
            "0 0 1 0 1",
            "0 1 1 0 1",
            "0 0 1 0",
            "0 1 1 1",
        ]
    )
    bandit = crn.TabularMdp.from_text(bandit_text + "\n")
    action = crn.plan_tabular(bandit, 0, 1, 16, "dependent", "smoke")
    check("uct bandit", action == 1, f"picked arm {action}")

    # A tiny deterministic experiment CSV.
    csv1 = crn.run_experiment_csv(
        "counterexample", "smoke", num_runs=5, sim_counts=[1, 2]
    )
    csv2 = crn.run_experiment_csv(
        "counterexample", "smoke", num_runs=5, sim_counts=[1, 2]
    )
    check(
        "experiment csv determinism",
        csv1 == csv2 and csv1.startswith("experiment,scheme,n_simulations"),
        f"{len(csv1.splitlines()) - 1} rows",
    )

    # A couple of environment episodes.
    reward = crn.ftvaf_episode("dependent", 2, "smoke", population=100, horizon=5, payout_grid=11)
    check("ftvaf episode", isinstance(reward, float), f"reward {reward:.3f}")
    win_rate, se, draws = crn.ludo_match(8, 4, "dependent", "smoke")
    check("ludo match", 0.0 <= win_rate <= 1.0, f"win rate {win_rate:.2f} +- {se:.2f}, draws {draws}")

    # Full fixture verification through the bindings.
    failures = [name for name, ok, _ in crn.verify_fixtures() if not ok]
    check("verify fixtures", not failures, f"failures: {failures}" if failures else "all green")

    print("smoke test complete")


if __name__ == "__main__":
    main()
