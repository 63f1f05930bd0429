from fractions import Fraction

import pytest

from paramgame.games import Move, OPP, PLR, logsof_game, lolli, oracle_game
from paramgame.poly import IDENT, LG, const
from paramgame.prf import (
    RandSof,
    ToyPRF,
    advantage,
    alpha,
    alpha_bias_tv,
    banged_target_session,
    beta,
    builtin_adversaries,
    candidate,
    candidate_pipeline,
    default_w,
    first2second,
    lift_prf,
    randsof,
    run_distinguisher,
    tv_random_baseline,
)
from paramgame.strategies import (
    SeededSource,
    bang_strategy,
    exact_distribution,
)
from paramgame.util import int_to_bits


def O(tag, payload="", path=()):
    return Move(OPP, tag, payload, path)


def P(tag, payload="", path=()):
    return Move(PLR, tag, payload, path)


# --- toy PRF ---


def test_toy_prf_shape_and_determinism():
    prf = ToyPRF()
    out = prf.eval("0" * 8, "0101")
    assert len(out) == default_w().eval(8)
    assert out == ToyPRF().eval("0" * 8, "0101")


def test_toy_prf_rejects_long_input():
    with pytest.raises(ValueError):
        ToyPRF().eval("00", "010")


def test_toy_prf_key_and_input_sensitivity():
    prf = ToyPRF()
    outs = {prf.eval(int_to_bits(k, 8), "1") for k in range(64)}
    assert len(outs) > 32
    assert prf.eval("0" * 8, "0") != prf.eval("0" * 8, "00")


def test_toy_prf_tweak_changes_outputs():
    assert ToyPRF().eval("0" * 8, "") != ToyPRF(tweak=1).eval("0" * 8, "")


# --- alpha / beta ---


def test_alpha_modular_pick():
    # j = 5 over 4 unused coordinates: 5 mod 4 = 1 -> coordinate "01"
    assert alpha("101", set(), 4) == "01"


def test_alpha_singleton():
    assert alpha("111", {"00", "01", "11"}, 4) == "10"


def test_alpha_zero_picks_first_unused():
    assert alpha("000", {"00"}, 4) == "01"


def test_alpha_bias_bound_exact():
    for domain in (1, 2, 4, 8):
        for w in (4, 8, 12):
            for used_mask in range(1 << domain):
                used = {c for c in range(domain) if (used_mask >> c) & 1}
                if len(used) == domain:
                    continue
                tv = alpha_bias_tv(domain, used, w)
                assert tv <= Fraction(domain, 1 << w)


def test_beta_prefix():
    assert beta("10110", 3) == "101"
    assert beta("10110", 5) == "10110"
    assert beta("10110", 0) == ""
    with pytest.raises(ValueError):
        beta("10", 3)


# --- driving functional sessions ---


def drive_functional(session, n, arg_fn, ask_coords=True, check_game=None):
    """Play the environment of a logsof session: answer argument queries
    with arg_fn(coordinate), return (coords, final payload, transcript)."""
    transcript = []

    def push(move):
        transcript.append(move)
        if check_game is not None:
            assert check_game.legal(n, tuple(transcript)), f"illegal at {move!r}"

    coords = []
    move = O("?", path=("R",))
    push(move)
    reply = session.step(move)
    push(reply)
    while True:
        if reply.path == ("R",):
            return coords, reply.payload, transcript
        assert reply.tag == "?" and reply.path[0] == "L" and reply.path[2] == "R"
        i = reply.path[1]
        if ask_coords:
            ask = O("?", path=("L", i, "L"))
            push(ask)
            coord_move = session.step(ask)
            push(coord_move)
            coord = coord_move.payload
            coords.append(coord)
            value = arg_fn(coord)
        else:
            value = arg_fn(None)
        answer = O("ans", str(value), ("L", i, "R"))
        push(answer)
        reply = session.step(answer)
        push(reply)


# --- first2second ---


def drive_f2s(n, prf=None, w=None):
    """Run first2second with a scripted oracle side backed by a PRF and
    the all-zeros argument."""
    prf = prf or ToyPRF(w or default_w())
    strat = first2second(IDENT, prf.w)
    sess = strat.session(n)
    key = "0" * n
    transcript = []
    coords = []
    move = O("?", path=("R", "R"))
    transcript.append(move)
    reply = sess.step(move)
    transcript.append(reply)
    while True:
        if reply.path == ("R", "R"):
            return coords, reply.payload, transcript
        if reply.path[0] == "L" and reply.path[2] == "R" and reply.tag == "?":
            i = reply.path[1]
            ask = O("?", path=("L", i, "L"))
            transcript.append(ask)
            prefix_move = sess.step(ask)
            transcript.append(prefix_move)
            value = prf.eval(key, prefix_move.payload)
            answer = O("ans", value, ("L", i, "R"))
            transcript.append(answer)
            reply = sess.step(answer)
            transcript.append(reply)
        elif reply.path[0] == "R" and reply.tag == "?":
            i = reply.path[2]
            ask = O("?", path=("R", "L", i, "L"))
            transcript.append(ask)
            coord_move = sess.step(ask)
            transcript.append(coord_move)
            coords.append(coord_move.payload)
            answer = O("ans", "0", ("R", "L", i, "R"))
            transcript.append(answer)
            reply = sess.step(answer)
            transcript.append(reply)
        else:
            raise AssertionError(f"unexpected {reply!r}")


def test_first2second_transcript_shape():
    # n = 2: three oracle sessions, two argument queries, then the answer
    coords, final, transcript = drive_f2s(2)
    assert len(coords) == 2
    assert len(set(coords)) == 2
    assert len(final) == 2
    opened = [m.path[1] for m in transcript if m.path[0] == "L" and m.path[2] == "R" and m.tag == "?"]
    assert opened == [1, 2, 3]


def test_first2second_handles_constant_argument():
    # the argument may answer without asking for its coordinate
    strat = first2second(IDENT, default_w())
    sess = strat.session(2)
    reply = sess.step(O("?", path=("R", "R")))
    assert reply == P("?", path=("L", 1, "R"))
    ask = sess.step(O("?", path=("L", 1, "L")))
    assert ask.payload == ""
    reply = sess.step(O("ans", ToyPRF().eval("00", ""), ("L", 1, "R")))
    assert reply.path == ("R", "L", 1, "R")
    # short-circuit: value arrives with no coordinate request
    reply = sess.step(O("ans", "1", ("R", "L", 1, "R")))
    assert reply == P("?", path=("L", 2, "R"))


def test_first2second_deterministic_transcript():
    t1 = drive_f2s(4)
    t2 = drive_f2s(4)
    assert t1 == t2


def test_first2second_transcript_legality():
    strat = first2second(IDENT, default_w())
    for n in (1, 2, 4):
        coords, final, transcript = drive_f2s(n)
        for k in range(len(transcript) + 1):
            assert strat.game.legal(n, tuple(transcript[:k]))


# --- lift_prf ---


def test_lift_prf_answers_match_direct_eval():
    prf = ToyPRF()
    strat = lift_prf(prf)
    n = 4
    sess = strat.session(n)
    key = "1010"
    # open copy 1
    reply = sess.step(O("?", path=("R", 1, "R")))
    assert reply == P("?", path=("L",))  # fetches the key first
    reply = sess.step(O("ans", key, ("L",)))
    assert reply == P("?", path=("R", 1, "L"))
    reply = sess.step(O("ans", "01", ("R", 1, "L")))
    assert reply == P("ans", prf.eval(key, "01"), ("R", 1, "R"))
    # second copy with the same query gives the same answer, no key refetch
    reply = sess.step(O("?", path=("R", 2, "R")))
    assert reply == P("?", path=("R", 2, "L"))
    reply = sess.step(O("ans", "01", ("R", 2, "L")))
    assert reply == P("ans", prf.eval(key, "01"), ("R", 2, "R"))


def test_lift_prf_key_variation():
    prf = ToyPRF()
    n = 8
    outs = set()
    for key_int in (0, 1, 255):
        key = int_to_bits(key_int, n)
        sess = lift_prf(prf).session(n)
        sess.step(O("?", path=("R", 1, "R")))
        sess.step(O("ans", key, ("L",)))
        reply = sess.step(O("ans", "1111", ("R", 1, "L")))
        outs.add(reply.payload)
    assert len(outs) == 3


# --- candidate ---


class FixedBits:
    def __init__(self, bits):
        self.bits = list(bits)

    def bit(self):
        return self.bits.pop(0)

    def bits_(self, k):
        return None


def test_candidate_deterministic_given_bits():
    prf = ToyPRF()
    cand = candidate(prf)
    n = 4
    runs = []
    for _ in range(2):
        sess = cand.session(n, FixedBits([1, 0, 1, 1]))
        runs.append(drive_functional(sess, n, lambda c: c.count("1") % 2))
    assert runs[0] == runs[1]


def test_candidate_agrees_with_composed_pipeline():
    prf = ToyPRF()
    for n in (1, 2, 3, 4):
        for seed in (0, 1, 2):
            fast = candidate(prf).session(n, SeededSource("cand", n, seed))
            slow = candidate_pipeline(prf).session(n, SeededSource("cand", n, seed))
            out_fast = drive_functional(fast, n, lambda c: int(c, 2) % 2 if c else 0)
            out_slow = drive_functional(slow, n, lambda c: int(c, 2) % 2 if c else 0)
            assert out_fast == out_slow


def test_candidate_transcript_legality():
    prf = ToyPRF()
    game = logsof_game(IDENT)
    for n in (1, 2, 4, 8, 16):
        sess = candidate(prf).session(n, SeededSource("legal", n))
        drive_functional(sess, n, lambda c: 0, check_game=game)


def test_candidate_coordinate_freshness():
    prf = ToyPRF()
    for n in (2, 4, 8, 16):
        sess = candidate(prf).session(n, SeededSource("fresh", n))
        coords, _, _ = drive_functional(sess, n, lambda c: int(c, 2) % 2 if c else 0)
        assert len(coords) == n
        assert len(set(coords)) == n


def test_candidate_banged_sessions_share_key():
    prf = ToyPRF()
    banged = bang_strategy(const(2), candidate(prf))
    n = 4
    sess = banged.session(n, SeededSource("bang", 9))
    tags = []
    for copy in (1, 2):
        move = O("?", path=(copy, "R"))
        reply = sess.step(move)
        while reply.path != (copy, "R"):
            assert reply.tag == "?"
            i = reply.path[2]
            reply = sess.step(O("ans", "0", (copy, "L", i, "R")))
        tags.append(reply.payload)
    assert tags[0] == tags[1]


def test_candidate_first_coordinate_marginal_matches_exhaustive():
    # distribution of the first queried coordinate over all keys at n = 4
    prf = ToyPRF()
    n = 4
    expected = {}
    for k in range(1 << n):
        coord = alpha(prf.eval(int_to_bits(k, n), ""), set(), 4)
        expected[coord] = expected.get(coord, Fraction(0)) + Fraction(1, 1 << n)

    def run(source):
        sess = candidate(prf).session(n, source)
        coords, _, _ = drive_functional(sess, n, lambda c: 0)
        return coords[0]

    got = exact_distribution(run)
    assert got == expected


# --- randsof ---


def test_randsof_first_query_uniform():
    rs = randsof()

    def run(source):
        sess = rs.session(2, source)
        coords, _, _ = drive_functional(sess, 2, lambda c: 0)
        return coords[0]

    dist = exact_distribution(run)
    assert dist == {"0": Fraction(1, 2), "1": Fraction(1, 2)}


def test_randsof_second_query_without_replacement():
    rs = randsof()

    def run(source):
        sess = rs.session(2, source)
        coords, _, _ = drive_functional(sess, 2, lambda c: 0)
        return tuple(coords)

    dist = exact_distribution(run)
    assert set(dist) == {("0", "1"), ("1", "0")}
    assert all(v == Fraction(1, 2) for v in dist.values())


def test_randsof_final_answer_uniform():
    rs = randsof()

    def run(source):
        sess = rs.session(2, source)
        _, final, _ = drive_functional(sess, 2, lambda c: 0)
        return final

    dist = exact_distribution(run)
    assert dist == {s: Fraction(1, 4) for s in ("00", "01", "10", "11")}


def test_randsof_transcript_legality():
    game = logsof_game(IDENT)
    for n in (1, 2, 4, 8, 16):
        sess = randsof().session(n, SeededSource("rslegal", n))
        drive_functional(sess, n, lambda c: 1, check_game=game)


def test_shared_randsof_copies_consistent():
    #同 history, same answers: two copies driven identically return equal tags
    src = SeededSource("shared-rs", 3)
    sess = banged_target_session(randsof(), const(2), 4, src)
    tags = []
    for copy in (1, 2):
        reply = sess.step(O("?", path=(copy, "R")))
        while reply.path != (copy, "R"):
            i = reply.path[2]
            reply = sess.step(O("ans", "1", (copy, "L", i, "R")))
        tags.append(reply.payload)
    assert tags[0] == tags[1]


# --- advantage ---


def test_advantage_constant_adversary_exact_zero():
    prf = ToyPRF()
    adv = builtin_adversaries()["constant-one"]
    assert advantage(candidate(prf), adv, 2, mode="exact") == 0


def test_advantage_randsof_vs_itself_exact_zero():
    adv = builtin_adversaries()["first-bit"]
    assert advantage(randsof(), adv, 2, mode="exact") == 0


def test_advantage_in_unit_interval_montecarlo():
    prf = ToyPRF()
    for name, adv in builtin_adversaries().items():
        est = advantage(candidate(prf), adv, 8, trials=120, seed=5)
        assert 0 <= est <= 1, name


def test_advantage_first_bit_small():
    prf = ToyPRF()
    adv = builtin_adversaries()["first-bit"]
    est = advantage(candidate(prf), adv, 8, trials=800, seed=11)
    assert est <= 0.12


def test_run_distinguisher_replay_consistency():
    prf = ToyPRF()
    adv = builtin_adversaries()["replay-consistency"]
    src = SeededSource("rd", 1)
    target = banged_target_session(candidate(prf), IDENT, 4, src)
    assert run_distinguisher(adv, target, 4, src) == 1
    src2 = SeededSource("rd", 2)
    target2 = banged_target_session(randsof(), IDENT, 4, src2)
    assert run_distinguisher(adv, target2, 4, src2) == 1


# --- statistical baseline ---


def test_tv_baseline_zero_when_moduli_divide():
    assert tv_random_baseline(1) == 0
    assert tv_random_baseline(2) == 0  # moduli 2, 1 divide 2^9


def test_tv_baseline_bound():
    for n in (1, 2, 4):
        w = LG + const(8)
        tv = tv_random_baseline(n, w)
        bound = Fraction(n * n * (1 << ((n - 1).bit_length() if n > 1 else 0)), 1 << w.eval(n))
        assert tv <= bound


def test_tv_baseline_positive_when_biased():
    # n = 4 forces a pick modulo 3, which 2^10 does not divide
    tv = tv_random_baseline(4)
    assert tv > 0
