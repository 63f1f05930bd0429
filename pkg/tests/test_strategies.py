from fractions import Fraction

import pytest

from paramgame.errors import BudgetExceededError, TotalityError
from paramgame.games import (
    Move,
    OPP,
    PLR,
    bang,
    bool_game,
    lolli,
    oracle_game,
    str_game,
    unit_game,
)
from paramgame.poly import IDENT, const
from paramgame.strategies import (
    FunctionStrategy,
    ProbStrategy,
    SeededSource,
    SessionStrategy,
    bang_strategy,
    carac_plays,
    compose,
    copycat,
    count_steps,
    exact_outcome_distribution,
    mult,
    observe_prob,
    once,
    plug,
    random_total_strategy,
    replicate,
    run_with_budget,
)


def O(tag, payload="", path=()):
    return Move(OPP, tag, payload, path)


def P(tag, payload="", path=()):
    return Move(PLR, tag, payload, path)


def constant_true():
    g = bool_game()
    return FunctionStrategy(g, lambda n, s: P("ans", "1"), name="true")


# --- carac plays ---


def test_carac_constant_true():
    plays = carac_plays(constant_true(), 1)
    assert plays == frozenset({(), (O("?"), P("ans", "1"))})


def test_carac_once_shapes():
    strat = once()
    plays = carac_plays(strat.inner, 2)
    shapes = {
        (
            O("?", path=("R",)),
            P("?", path=("L",)),
            O("ans", "0", ("L",)),
            P("ans", "00", ("R",)),
        ),
        (
            O("?", path=("R",)),
            P("?", path=("L",)),
            O("ans", "1", ("L",)),
            P("ans", "11", ("R",)),
        ),
    }
    assert shapes <= plays


def test_carac_mult_n1():
    plays = carac_plays(mult().inner, 1)
    assert (
        O("?", path=("R",)),
        P("?", path=("L",)),
        O("ans", "0", ("L",)),
        P("ans", "0", ("R",)),
    ) in plays
    assert (
        O("?", path=("R",)),
        P("?", path=("L",)),
        O("ans", "1", ("L",)),
        P("ans", "1", ("R",)),
    ) in plays


def test_totality_error_surfaces():
    g = bool_game()
    undefined = FunctionStrategy(g, lambda n, s: None, name="mute")
    with pytest.raises(TotalityError):
        carac_plays(undefined, 1)


# --- copycat ---


def test_copycat_bool_play():
    cc = copycat(bool_game())
    plays = carac_plays(cc, 1)
    assert (
        O("?", path=("R",)),
        P("?", path=("L",)),
        O("ans", "1", ("L",)),
        P("ans", "1", ("R",)),
    ) in plays


def test_copycat_unit_play():
    cc = copycat(unit_game())
    plays = carac_plays(cc, 1)
    assert (
        O("?", path=("R",)),
        P("?", path=("L",)),
        O("*", path=("L",)),
        P("*", path=("R",)),
    ) in plays


def test_copycat_str_echoes_answer():
    cc = copycat(str_game(IDENT))
    for play in carac_plays(cc, 2):
        if len(play) == 4:
            assert play[3].payload == play[2].payload


# --- composition ---


def negate_string(p=IDENT):
    g = lolli(str_game(p), str_game(p))

    def fn(n, play):
        if len(play) == 1:
            return P("?", path=("L",))
        flipped = "".join("1" if c == "0" else "0" for c in play[2].payload)
        return P("ans", flipped, ("R",))

    return FunctionStrategy(g, fn, name="negate")


def test_compose_with_copycat_is_identity():
    strat = once().inner
    cc = copycat(str_game(IDENT))
    composed = compose(strat, cc)
    for n in (1, 2, 3):
        assert carac_plays(composed, n) == carac_plays(strat, n)


def test_compose_copycat_left_identity():
    strat = negate_string()
    cc = copycat(str_game(IDENT))
    for n in (1, 2):
        assert carac_plays(compose(cc, strat), n) == carac_plays(strat, n)


def test_compose_mult_negate_hand_simulated():
    # oracle bits 1,0 at n=2: mult answers "10", negate turns it into "01"
    composed = ProbStrategy(compose(mult().inner, negate_string()), IDENT, name="mult;neg")

    class Script:
        def __init__(self, bits):
            self.bits = list(bits)

        def bit(self):
            return self.bits.pop(0)

    sess = composed.session(2, Script([1, 0]))
    answer = sess.step(O("?"))
    assert answer == P("ans", "01")


def test_compose_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        compose(copycat(bool_game()), copycat(unit_game()))


def test_associativity_randomized_triples():
    games = [bool_game(), unit_game(), str_game(const(1))]
    count = 0
    for seed in range(12):
        a = games[seed % 3]
        b = games[(seed + 1) % 3]
        c = games[(seed + 2) % 3]
        d = games[seed % 2]
        f = random_total_strategy(lolli(a, b), ("f", seed))
        g = random_total_strategy(lolli(b, c), ("g", seed))
        h = random_total_strategy(lolli(c, d), ("h", seed))
        for n in (1, 2):
            left = carac_plays(compose(compose(f, g), h), n, enforce_budget=False)
            right = carac_plays(compose(f, compose(g, h)), n, enforce_budget=False)
            assert left == right
            count += 1
    assert count == 24


# --- plug / replicate ---


def test_plug_feeds_argument():
    strat = negate_string(const(2))
    source = FunctionStrategy(str_game(const(2)), lambda n, s: P("ans", "10"), name="const10")
    plugged = plug(source, strat)
    sess = plugged.session(3)
    assert sess.step(O("?")) == P("ans", "01")


def test_replicate_copies_identical():
    base = constant_true()
    repl = replicate(const(2), base)
    sess = repl.session(1)
    first = sess.step(O("?", path=(1,)))
    second = sess.step(O("?", path=(2,)))
    assert first.payload == second.payload == "1"
    assert first.path == (1,)
    assert second.path == (2,)


# --- budgets ---


def test_once_within_linear_budget():
    strat = once()
    inner = strat.inner
    play = (O("?", path=("R",)),)
    for n in (2, 4, 8):
        steps = count_steps(inner, n, play)
        assert steps <= inner.budget.eval(n)


def test_mult_within_linear_budget():
    inner = mult().inner
    for n in (2, 8):
        assert carac_plays(inner, n, enforce_budget=True) is not None


def test_adversarial_loop_exceeds_budget():
    g = bool_game()

    def slow(n, play):
        total = 0
        for _ in range(2**n):
            total += 1
        return P("ans", "1")

    strat = FunctionStrategy(g, slow, budget=const(256) + const(64) * IDENT, name="loop")
    assert run_with_budget(strat, 4, (O("?"),)) == P("ans", "1")
    with pytest.raises(BudgetExceededError):
        run_with_budget(strat, 16, (O("?"),))


def test_budget_preserved_under_composition():
    # composing two budget-passing strategies stays within the combined budget
    strat = compose(mult().inner, negate_string())
    for n in (1, 2, 3):
        carac_plays(strat, n, enforce_budget=True)


# --- observation ---


def test_observe_once_half():
    strat = once()
    for n in (1, 2, 3):
        assert observe_prob(strat, n, "0" * n) == Fraction(1, 2)
        assert observe_prob(strat, n, "1" * n) == Fraction(1, 2)


def test_observe_mult_uniform():
    strat = mult()
    assert observe_prob(strat, 3, "101") == Fraction(1, 8)
    dist = exact_outcome_distribution(strat, 3)
    assert len(dist) == 8
    assert all(v == Fraction(1, 8) for v in dist.values())


def test_observe_deterministic_is_one():
    g = bool_game()
    inner_game = lolli(oracle_game(IDENT), g)

    def fn(n, play):
        return P("ans", "1", ("R",))

    strat = ProbStrategy(FunctionStrategy(inner_game, fn, name="det.inner"), IDENT, name="det")
    assert observe_prob(strat, 3, "1") == 1
    assert observe_prob(strat, 3, "0") == 0


def test_observe_distribution_sums_to_one():
    for strat, n in [(once(), 3), (mult(), 4)]:
        dist = exact_outcome_distribution(strat, n)
        assert sum(dist.values()) == 1


def test_observe_montecarlo_close_to_exact():
    strat = once()
    freq = observe_prob(strat, 4, "1111", mode="montecarlo", trials=2000, seed=13)
    assert abs(freq - 0.5) < 0.05


# --- shared-randomness replication ---


def test_bang_once_copies_share_randomness():
    banged = bang_strategy(IDENT, once())
    sess = banged.session(2, SeededSource(5, "shared"))
    first = sess.step(O("?", path=(1,)))
    second = sess.step(O("?", path=(2,)))
    assert first.payload == second.payload


def test_bang_copy_agreement_probability_one():
    banged = bang_strategy(IDENT, once())

    def run(source):
        sess = banged.session(2, source)
        a = sess.step(O("?", path=(1,)))
        b = sess.step(O("?", path=(2,)))
        return a.payload == b.payload

    from paramgame.strategies import exact_distribution

    dist = exact_distribution(run)
    assert dist == {True: Fraction(1)}


def test_independent_copies_disagree_half_the_time():
    # contrast with the shared-tape law: two independent runs of once agree
    # with probability 1/2
    strat = once()

    def run(source):
        a = strat.session(2, source).step(O("?"))
        b = strat.session(2, source).step(O("?"))
        return a.payload == b.payload

    from paramgame.strategies import exact_distribution

    dist = exact_distribution(run)
    assert dist[True] == Fraction(1, 2)


def test_bang_of_deterministic_all_copies_identical():
    g = bool_game()
    inner_game = lolli(oracle_game(IDENT), g)
    det = ProbStrategy(
        FunctionStrategy(inner_game, lambda n, s: P("ans", "0", ("R",)), name="zero"),
        IDENT,
        name="zero",
    )
    banged = bang_strategy(const(3), det)
    sess = banged.session(2, SeededSource(1))
    replies = [sess.step(O("?", path=(i,))) for i in (1, 2, 3)]
    assert all(r.payload == "0" for r in replies)


# --- totality of shipped strategies ---


@pytest.mark.parametrize("factory", [lambda: once().inner, lambda: mult().inner])
@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_shipped_strategies_total_on_reachable_plays(factory, n):
    strat = factory()
    # carac_plays raises TotalityError if next is undefined anywhere reachable
    carac_plays(strat, n, enforce_budget=False)


def test_next_and_session_views_agree():
    strat = once().inner
    play = (
        O("?", path=("R",)),
        P("?", path=("L",)),
        O("ans", "1", ("L",)),
    )
    assert strat.next(2, play) == P("ans", "11", ("R",))
    # off-carac play: the session replay detects the mismatch
    bad = (
        O("?", path=("R",)),
        P("ans", "00", ("R",)),
        O("?", path=("R",)),
    )
    assert strat.next(2, bad) is None
