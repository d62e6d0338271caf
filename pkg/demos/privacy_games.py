"""Where the unlinkability boundary actually sits.

Each game hands an adversary everything a corrupted coalition would see in
one round (delivered messages, corrupted keys, the aggregate if the
concentrator is theirs) and asks which of two chosen measurements went to
which challenged meter. A coalition that cannot beat a coin gets a win rate
near one half.

Two coalitions are maximal: every meter except the two challenged ones, or
the concentrator alone. Add one more party to either and the game flips to
certainty; the breach families stage exactly that coalition, with the
challenged meter first in the sending list and a corrupted meter right
behind it, and win every trial by recovering the plaintext itself.

Run:  python3 demos/privacy_games.py          (about 15 seconds)
"""

from ftagg.game import (
    FAMILIES,
    GameSetup,
    attack_masking_dc_plus_neighbor,
    empirical_unlinkability,
    full_mesh_edges,
    run_trial,
)
from ftagg.model import MaskingSpec

TRIALS = 400


def main() -> None:
    print(f"{'family':<26} {'strategy':<16} {'rate':>6}   99% interval")
    print("-" * 68)
    for family in FAMILIES:
        stats = empirical_unlinkability(family, TRIALS, seed=2026)
        print(
            f"{family:<26} {stats.strategy:<16} {stats.rate:>6.3f}   "
            f"[{stats.ci_low:.3f}, {stats.ci_high:.3f}]"
        )
    print()

    # one breach trial in slow motion: corrupted concentrator plus the meter
    # right after the challenged one, measurement recovered exactly
    edges = full_mesh_edges(4)
    setup = GameSetup(
        n_sm=4,
        edges=edges,
        working_edges=edges,
        sending_list=(1, 2, 3, 4),
        challenged=(1, 3),
        m0=481,
        m1=77,
        mlist={2: 10, 4: 20},
        corrupted_dc=True,
        corrupted_sms=frozenset({2, 4}),
        backend=MaskingSpec(),
        n_min=2,
        round=0,
        seed=31,
    )
    trial = run_trial(setup)
    assigned = setup.m0 if trial.secret_bit == 0 else setup.m1
    recovered = attack_masking_dc_plus_neighbor(setup)
    print(f"breach trial: secret bit {trial.secret_bit}, challenged meter was "
          f"assigned {assigned}")
    print(f"adversary subtracts its handoff view and unmasks: {recovered}")
    assert recovered == assigned


if __name__ == "__main__":
    main()
