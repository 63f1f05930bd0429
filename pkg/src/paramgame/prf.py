"""Second-order pseudorandomness: the ideal random functional, the
bit-by-bit lifting of a first-order PRF, and a distinguisher harness.

The second-order interface is the game ``logsof(p)``: a functional that
may query a boolean argument function on logarithmic-size inputs linearly
many times — enough to read every coordinate — and then answers with a
p(n)-bit string.  A keyed candidate is built in three stages: draw a key
from the coin oracle, answer key-dependent queries with a first-order PRF,
and drive the PRF through the adaptive query schedule of
:func:`first2second`.  The ideal object :func:`randsof` queries fresh
uniformly-random coordinates without replacement and answers uniformly,
realized by lazy sampling so that transcript distributions are exact.

``advantage`` measures the distinguishing gap of an adversary between the
replicated candidate and the replicated ideal object, where replication
shares randomness across sessions (one key; one lazily-sampled random
functional).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Protocol

from .errors import IllegalMoveError
from .games import (
    Bang,
    Lolli,
    Move,
    OPP,
    PLR,
    ParamGame,
    bang,
    bool_game,
    lolli,
    logsof_game,
    oracle_game,
    str_game,
    str_le_game,
)
from .poly import IDENT, LG, PolyExpr, ceil_log2, const
from .strategies import (
    ProbStrategy,
    RandomSource,
    SeededSource,
    Session,
    SessionStrategy,
    StochasticStrategy,
    Strategy,
    bang_strategy,
    compose,
    exact_distribution,
    mult,
)
from .util import bits_to_int, int_to_bits

__all__ = [
    "FirstOrderPRF",
    "ToyPRF",
    "alpha",
    "alpha_bias_tv",
    "beta",
    "first2second",
    "lift_prf",
    "candidate",
    "candidate_pipeline",
    "randsof",
    "RandSof",
    "RandomFunctionalState",
    "shared_randsof_session",
    "adversary_game",
    "builtin_adversaries",
    "run_distinguisher",
    "advantage",
    "advantage_report",
    "tv_random_baseline",
    "default_w",
]


def default_w() -> PolyExpr:
    """Default PRF output width: at least the answer width (so truncation
    is sound for answers up to n bits) with eight extra bits to keep the
    coordinate-pick bias small."""
    return IDENT + const(8)


class FirstOrderPRF(Protocol):
    """A keyed function family {0,1}^n x {0,1}^{<=n} -> {0,1}^{w(n)}."""

    w: PolyExpr

    def eval(self, key: str, x: str) -> str: ...


_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_MASK64 = (1 << 64) - 1


def _mix64(v: int) -> int:
    v &= _MASK64
    v = ((v ^ (v >> 30)) * _M1) & _MASK64
    v = ((v ^ (v >> 27)) * _M2) & _MASK64
    return v ^ (v >> 31)


@dataclass(frozen=True)
class ToyPRF:
    """A keyed iterated mixing function over 64-bit words.

    Deterministic and fast, with decent avalanche — but explicitly NOT
    cryptographic.  It exists so the harness has a concrete instance to
    drive; any object with the same surface can replace it.
    """

    w: PolyExpr = field(default_factory=default_w)
    tweak: int = 0

    def _absorb(self, state: int, value: int) -> int:
        state = _mix64(state ^ (value & _MASK64))
        for _ in range((max(value.bit_length(), 1) - 1) // 64):
            value >>= 64
            state = _mix64(state ^ (value & _MASK64))
        return state

    def eval(self, key: str, x: str) -> str:
        n = len(key)
        if len(x) > n:
            raise ValueError(f"input of length {len(x)} exceeds key length {n}")
        width = self.w.eval(n)
        state = _mix64(0xA5A5A5A5 ^ self.tweak)
        state = self._absorb(state, n)
        state = self._absorb(state, bits_to_int(key))
        state = self._absorb(state, len(x))
        state = self._absorb(state, bits_to_int(x))
        out = 0
        produced = 0
        block = 0
        while produced < width:
            word = _mix64(state ^ block)
            take = min(64, width - produced)
            out = (out << take) | (word >> (64 - take))
            produced += take
            block += 1
        return int_to_bits(out, width)


def alpha(j: str, used, domain_size: int) -> str:
    """Map a PRF output onto an unused coordinate.

    ``j`` is read as a number and reduced modulo the count of unused
    coordinates; the result indexes the ascending list of unused
    coordinates.  For uniform ``j`` the pick is uniform up to a modular
    bias of at most domain_size / 2^|j| in total variation.
    """
    if domain_size < 1 or domain_size & (domain_size - 1):
        raise ValueError("domain size must be a power of two")
    width = ceil_log2(domain_size)
    used_ints = {bits_to_int(u) if isinstance(u, str) else int(u) for u in used}
    unused = [c for c in range(domain_size) if c not in used_ints]
    if not unused:
        raise ValueError("no unused coordinate left")
    return int_to_bits(unused[bits_to_int(j) % len(unused)], width)


def alpha_bias_tv(domain_size: int, used, w: int) -> Fraction:
    """Exact total-variation distance between the coordinate picked by
    ``alpha`` on a uniform w-bit input and the uniform distribution on the
    unused coordinates."""
    used_ints = {bits_to_int(u) if isinstance(u, str) else int(u) for u in used}
    unused = [c for c in range(domain_size) if c not in used_ints]
    m = len(unused)
    total = 1 << w
    base, extra = divmod(total, m)
    tv = Fraction(0)
    for rank in range(m):
        mass = Fraction(base + (1 if rank < extra else 0), total)
        tv += abs(mass - Fraction(1, m))
    return tv / 2


def beta(v: str, p_n: int) -> str:
    """Truncate to the first p_n bits."""
    if p_n > len(v):
        raise ValueError(f"cannot take {p_n} bits from a {len(v)}-bit string")
    return v[:p_n]


# --- games and move helpers -----------------------------------------------------

# Path layout inside logsof(p) = bang(id, str(lg) -o bool) -o str(p), seen
# from the functional's side:
#   ("R",)            the main question / final answer
#   ("L", i, "R")     argument copy i: open ("?" by us) / value bit (by them)
#   ("L", i, "L")     argument copy i: coordinate request (them) / answer (us)


def prf_oracle_game(w: PolyExpr) -> Bang:
    """The first-order interface offered to the lifting strategy: n+1
    sessions of (input of length <= n) -> (w(n)-bit output)."""
    return bang(IDENT + const(1), lolli(str_le_game(IDENT), str_game(w)))


def first2second_game(p: PolyExpr, w: PolyExpr) -> Lolli:
    return lolli(prf_oracle_game(w), logsof_game(p))


def lift_prf_game(w: PolyExpr) -> Lolli:
    return lolli(str_game(IDENT), prf_oracle_game(w))


class _First2SecondSession(Session):
    """Adaptive bit-by-bit querying driven by an external first-order
    function.

    Round i opens oracle session i with the value bits gathered so far,
    maps the oracle's w-bit reply onto a fresh coordinate, and queries the
    argument function there; after n rounds, session n+1 turns the full
    value vector into the final answer.  A constant argument may answer
    without requesting its coordinate; the round then proceeds with the
    value it supplied.
    """

    def __init__(self, p: PolyExpr, n: int):
        self.n = n
        self.p_n = p.eval(n)
        self.domain = 1 << ceil_log2(n)
        self.z: list[str] = []
        self.coords: dict[int, str] = {}
        self.used: list[str] = []

    def _open_oracle(self, i: int) -> Move:
        return Move(PLR, "?", "", ("L", i, "R"))

    def step(self, move: Move) -> Move:
        head = move.path
        if head == ("R", "R") and move.tag == "?":
            return self._open_oracle(1)
        if len(head) == 3 and head[0] == "L" and head[2] == "L" and move.tag == "?":
            i = head[1]
            prefix = "".join(self.z[: min(i - 1, self.n)])
            return Move(PLR, "ans", prefix, ("L", i, "L"))
        if len(head) == 3 and head[0] == "L" and head[2] == "R" and move.tag == "ans":
            i = head[1]
            j = move.payload
            if i <= self.n:
                coord = alpha(j, self.used, self.domain)
                self.used.append(coord)
                self.coords[i] = coord
                return Move(PLR, "?", "", ("R", "L", i, "R"))
            return Move(PLR, "ans", beta(j, self.p_n), ("R", "R"))
        if len(head) == 4 and head[:2] == ("R", "L") and head[3] == "L" and move.tag == "?":
            i = head[2]
            return Move(PLR, "ans", self.coords[i], ("R", "L", i, "L"))
        if len(head) == 4 and head[:2] == ("R", "L") and head[3] == "R" and move.tag == "ans":
            i = head[2]
            self.z.append(move.payload)
            return self._open_oracle(i + 1)
        raise IllegalMoveError(f"first2second cannot interpret {move!r}")


def first2second(p: PolyExpr = IDENT, w: PolyExpr | None = None) -> Strategy:
    """The deterministic lifting strategy from a first-order oracle to a
    second-order functional."""
    w = w if w is not None else default_w()
    game = first2second_game(p, w)
    return SessionStrategy(
        game,
        lambda n: _First2SecondSession(p, n),
        name="first2second",
    )


class _LiftPRFSession(Session):
    """Answer every oracle-session query with a keyed PRF evaluation; the
    key is fetched once from the left."""

    def __init__(self, prf: FirstOrderPRF, n: int):
        self.prf = prf
        self.n = n
        self.key: str | None = None
        self.pending: int | None = None

    def step(self, move: Move) -> Move:
        head = move.path
        if len(head) == 3 and head[0] == "R" and head[2] == "R" and move.tag == "?":
            i = head[1]
            if self.key is None:
                self.pending = i
                return Move(PLR, "?", "", ("L",))
            return Move(PLR, "?", "", ("R", i, "L"))
        if head == ("L",) and move.tag == "ans":
            self.key = move.payload
            i, self.pending = self.pending, None
            return Move(PLR, "?", "", ("R", i, "L"))
        if len(head) == 3 and head[0] == "R" and head[2] == "L" and move.tag == "ans":
            i = head[1]
            return Move(PLR, "ans", self.prf.eval(self.key, move.payload), ("R", i, "R"))
        raise IllegalMoveError(f"lift_prf cannot interpret {move!r}")


def lift_prf(prf: FirstOrderPRF) -> Strategy:
    """Expose a first-order PRF as a strategy: key in on the left, keyed
    evaluations out on the replicated right."""
    return SessionStrategy(
        lift_prf_game(prf.w),
        lambda n: _LiftPRFSession(prf, n),
        name="lift_prf",
    )


class _CandidateInnerSession(Session):
    """Fused key-draw + PRF + query-schedule session on
    oracle(id) -o logsof(p).  Behaviorally identical to composing the
    three stages; kept as the fast path and checked against the pipeline.
    """

    def __init__(self, prf: FirstOrderPRF, p: PolyExpr, n: int):
        self.prf = prf
        self.n = n
        self.p_n = p.eval(n)
        self.domain = 1 << ceil_log2(n)
        self.key_bits: list[str] = []
        self.key: str | None = None
        self.z: list[str] = []
        self.coords: dict[int, str] = {}
        self.used: list[str] = []

    def _game(self, move: Move) -> Move:
        return Move(move.side, move.tag, move.payload, ("R",) + move.path)

    def _advance(self, i: int) -> Move:
        # with the key in hand, run round i: pick the coordinate and open
        # argument copy i, or produce the final answer after round n
        prefix = "".join(self.z)
        value = self.prf.eval(self.key, prefix)
        if i <= self.n:
            coord = alpha(value, self.used, self.domain)
            self.used.append(coord)
            self.coords[i] = coord
            return self._game(Move(PLR, "?", "", ("L", i, "R")))
        return self._game(Move(PLR, "ans", beta(value, self.p_n), ("R",)))

    def step(self, move: Move) -> Move:
        if move.path[0] == "L":
            # an oracle bit toward the key
            self.key_bits.append(move.payload)
            if len(self.key_bits) < self.n:
                return Move(PLR, "?", "", ("L",))
            self.key = "".join(self.key_bits)
            return self._advance(1)
        head = move.path[1:]
        if head == ("R",) and move.tag == "?":
            if self.n == 0:
                self.key = ""
                return self._advance(1)
            return Move(PLR, "?", "", ("L",))
        if len(head) == 3 and head[0] == "L" and head[2] == "L" and move.tag == "?":
            i = head[1]
            return self._game(Move(PLR, "ans", self.coords[i], ("L", i, "L")))
        if len(head) == 3 and head[0] == "L" and head[2] == "R" and move.tag == "ans":
            self.z.append(move.payload)
            return self._advance(len(self.z) + 1)
        raise IllegalMoveError(f"candidate cannot interpret {move!r}")


def candidate(prf: FirstOrderPRF, p: PolyExpr = IDENT) -> ProbStrategy:
    """The keyed second-order functional: a uniformly random key driving
    the PRF through the adaptive query schedule."""
    game = lolli(oracle_game(IDENT), logsof_game(p))
    inner = SessionStrategy(
        game,
        lambda n: _CandidateInnerSession(prf, p, n),
        name="candidate.inner",
    )
    return ProbStrategy(inner, IDENT, name="candidate")


def candidate_pipeline(prf: FirstOrderPRF, p: PolyExpr = IDENT) -> ProbStrategy:
    """The same functional assembled by composing the three stages through
    the generic interaction machinery; reference route for tests."""
    key_stage = mult(IDENT).inner
    composed = compose(compose(key_stage, lift_prf(prf)), first2second(p, prf.w))
    return ProbStrategy(composed, IDENT, name="candidate.pipeline")


# --- the ideal random functional ----------------------------------------------


@dataclass
class RandomFunctionalState:
    """Lazily-sampled random functional shared by replicated sessions.

    Coordinate choices key on the history of value bits observed so far
    (so equal histories in different sessions replay the same choice), and
    final answers key on the full value history.
    """

    coord_table: dict = field(default_factory=dict)
    final_table: dict = field(default_factory=dict)

    def coordinate(self, history: tuple, domain: int, source: RandomSource) -> int:
        entry = self.coord_table.get(history)
        if entry is None:
            used = {self.coordinate(history[:k], domain, source) for k in range(len(history))}
            unused = sorted(c for c in range(domain) if c not in used)
            entry = unused[source.uniform(len(unused))]
            self.coord_table[history] = entry
        return entry

    def final(self, history: tuple, p_bits: int, source: RandomSource) -> int:
        entry = self.final_table.get(history)
        if entry is None:
            entry = 0
            for _ in range(p_bits):
                entry = (entry << 1) | source.bit()
            self.final_table[history] = entry
        return entry


class _RandSofSession(Session):
    """One functional evaluation of the ideal object: query fresh uniform
    coordinates without replacement, then answer uniformly."""

    def __init__(self, p: PolyExpr, n: int, source: RandomSource, state: RandomFunctionalState):
        self.n = n
        self.p_n = p.eval(n)
        self.domain = 1 << ceil_log2(n)
        self.source = source
        self.state = state
        self.width = ceil_log2(self.domain)
        self.history: tuple = ()
        self.coords: dict[int, str] = {}

    def _open(self, i: int) -> Move:
        if i <= self.n:
            coord = self.state.coordinate(self.history, self.domain, self.source)
            self.coords[i] = int_to_bits(coord, self.width)
            return Move(PLR, "?", "", ("L", i, "R"))
        v = self.state.final(self.history, self.p_n, self.source)
        return Move(PLR, "ans", int_to_bits(v, self.p_n), ("R",))

    def step(self, move: Move) -> Move:
        head = move.path
        if head == ("R",) and move.tag == "?":
            return self._open(1)
        if len(head) == 3 and head[0] == "L" and head[2] == "L" and move.tag == "?":
            i = head[1]
            return Move(PLR, "ans", self.coords[i], ("L", i, "L"))
        if len(head) == 3 and head[0] == "L" and head[2] == "R" and move.tag == "ans":
            i = head[1]
            self.history = self.history + (int(move.payload),)
            return self._open(i + 1)
        raise IllegalMoveError(f"randsof cannot interpret {move!r}")


class RandSof(StochasticStrategy):
    """The ideal random second-order functional on logsof(p)."""

    def __init__(self, p: PolyExpr = IDENT):
        self.p = p
        self.name = "randsof"
        self.game = logsof_game(p)

    def session(self, n: int, source: RandomSource) -> Session:
        return _RandSofSession(self.p, n, source, RandomFunctionalState())


def randsof(p: PolyExpr = IDENT) -> RandSof:
    return RandSof(p)


class _SharedRandSofSession(Session):
    """Replicated ideal functional: all copies consult one lazy table, so
    the group behaves like a single sampled functional."""

    def __init__(self, p: PolyExpr, n: int, count: int, source: RandomSource):
        self.count = count
        self.state = RandomFunctionalState()
        self.p = p
        self.n = n
        self.source = source
        self.copies: dict[int, _RandSofSession] = {}

    def step(self, move: Move) -> Move:
        i = move.path[0]
        if not isinstance(i, int) or i > self.count:
            raise IllegalMoveError(f"unexpected move {move!r}")
        sess = self.copies.get(i)
        if sess is None:
            sess = self.copies[i] = _RandSofSession(self.p, self.n, self.source, self.state)
        reply = sess.step(Move(move.side, move.tag, move.payload, move.path[1:]))
        return Move(reply.side, reply.tag, reply.payload, (i,) + reply.path)


def shared_randsof_session(p: PolyExpr, s: PolyExpr, n: int, source: RandomSource) -> Session:
    return _SharedRandSofSession(p, n, s.eval(n), source)


# --- distinguishers --------------------------------------------------------------


def adversary_game(s: PolyExpr, p: PolyExpr) -> Lolli:
    """The distinguisher's game: s(n) functional sessions in, one bit out."""
    return lolli(bang(s, logsof_game(p)), bool_game())


def banged_target_session(
    stoch: StochasticStrategy, s: PolyExpr, n: int, source: RandomSource
) -> Session:
    """A session of s(n) replicated copies of the functional, with
    randomness resolved once for the whole group."""
    if isinstance(stoch, RandSof):
        return shared_randsof_session(stoch.p, s, n, source)
    if isinstance(stoch, ProbStrategy):
        return bang_strategy(s, stoch).session(n, source)
    raise TypeError(f"cannot replicate {stoch!r}")


def run_distinguisher(
    adversary: ProbStrategy, target_session: Session, n: int, source: RandomSource
) -> int:
    """Drive one experiment: the adversary interrogates the replicated
    functional and must answer the boolean question.  Returns its bit."""
    sess = adversary.session(n, source)
    move = sess.step(Move(OPP, "?", "", ("R",)))
    while move.path[0] == "L":
        query = Move(
            PLR if move.side == OPP else OPP, move.tag, move.payload, move.path[1:]
        )
        reply = target_session.step(query)
        move = sess.step(
            Move(PLR if reply.side == OPP else OPP, reply.tag, reply.payload, ("L",) + reply.path)
        )
    return int(move.payload)


def advantage(
    cand: StochasticStrategy,
    adversary: ProbStrategy,
    n: int,
    mode: str = "montecarlo",
    *,
    trials: int | None = None,
    seed: int | None = None,
    s: PolyExpr = IDENT,
    p: PolyExpr = IDENT,
) -> float | Fraction:
    """|Pr[adversary -> 1 against the candidate] - Pr[... against the ideal
    functional]| at parameter n.

    A single randomness source per experiment feeds both the adversary and
    the functional; draws are independent regardless of interleaving.
    Exact mode enumerates the joint choice tree (tiny n only).
    """
    ideal = randsof(p)

    def experiment(target: StochasticStrategy, source: RandomSource) -> int:
        target_sess = banged_target_session(target, s, n, source)
        return run_distinguisher(adversary, target_sess, n, source)

    if mode == "montecarlo":
        if trials is None or seed is None:
            raise ValueError("montecarlo mode needs trials and seed")
        ones = [0, 0]
        for k, target in enumerate((cand, ideal)):
            for t in range(trials):
                src = SeededSource(seed, "advantage", k, t)
                ones[k] += experiment(target, src)
        return abs(ones[0] - ones[1]) / trials
    if mode == "exact":
        dists = [
            exact_distribution(lambda src, target=target: experiment(target, src))
            for target in (cand, ideal)
        ]
        p1 = dists[0].get(1, Fraction(0))
        p0 = dists[1].get(1, Fraction(0))
        return abs(p1 - p0)
    raise ValueError(f"unknown mode {mode!r}")


def advantage_report(
    cand: StochasticStrategy,
    adversary: ProbStrategy,
    n: int,
    *,
    trials: int,
    seed,
    s: PolyExpr = IDENT,
    p: PolyExpr = IDENT,
) -> dict:
    """Monte-Carlo advantage with both per-world acceptance rates and the
    binomial standard error of their difference."""
    ideal = randsof(p)
    hits = []
    for k, target in enumerate((cand, ideal)):
        ones = 0
        for t in range(trials):
            src = SeededSource(seed, "advantage", k, t)
            target_sess = banged_target_session(target, s, n, src)
            ones += run_distinguisher(adversary, target_sess, n, src)
        hits.append(ones)
    p1, p0 = hits[0] / trials, hits[1] / trials
    stderr = ((p1 * (1 - p1) + p0 * (1 - p0)) / trials) ** 0.5
    return {
        "p_candidate": p1,
        "p_ideal": p0,
        "advantage": abs(p1 - p0),
        "stderr": stderr,
    }


# --- built-in adversary suite ------------------------------------------------------

# Adversary inner sessions live on oracle(b) -o (bang(s, logsof(p)) -o bool).
# Incoming game moves carry an "R" prefix (the oracle is at "L"); inside the
# game, ("R",) is the verdict question and ("L", j, ...) addresses
# functional session j with the logsof path layout documented above.


def _verdict(bit: int) -> Move:
    return Move(PLR, "ans", str(bit), ("R", "R"))


def _open_session(j: int) -> Move:
    return Move(PLR, "?", "", ("R", "L", j, "R"))


def _value_answer(j: int, i: int, bit: int) -> Move:
    return Move(PLR, "ans", str(bit), ("R", "L", j, "L", i, "R"))


def _ask_coordinate(j: int, i: int) -> Move:
    return Move(PLR, "?", "", ("R", "L", j, "L", i, "L"))


def _classify(move: Move):
    head = move.path
    if head == ("R", "R"):
        return ("verdict_question",)
    if len(head) == 4 and head[3] == "R":
        return ("tag", head[2], move.payload)
    if len(head) == 6 and head[5] == "R":
        return ("arg_opened", head[2], head[4])
    if len(head) == 6 and head[5] == "L":
        return ("coordinate", head[2], head[4], move.payload)
    raise IllegalMoveError(f"adversary cannot interpret {move!r}")


class _ConstantOneSession(Session):
    def step(self, move: Move) -> Move:
        kind = _classify(move)
        if kind[0] == "verdict_question":
            return _verdict(1)
        raise IllegalMoveError(f"unexpected move {move!r}")


class _FirstBitSession(Session):
    """Read one tag with the all-zeros argument; output its first bit."""

    def __init__(self, p: PolyExpr, n: int):
        self.p_n = p.eval(n)

    def step(self, move: Move) -> Move:
        kind = _classify(move)
        if kind[0] == "verdict_question":
            if self.p_n == 0:
                return _verdict(1)
            return _open_session(1)
        if kind[0] == "arg_opened":
            return _value_answer(kind[1], kind[2], 0)
        if kind[0] == "tag":
            return _verdict(int(kind[2][0]))
        raise IllegalMoveError(f"unexpected move {move!r}")


class _TagParitySession(Session):
    def step(self, move: Move) -> Move:
        kind = _classify(move)
        if kind[0] == "verdict_question":
            return _open_session(1)
        if kind[0] == "arg_opened":
            return _value_answer(kind[1], kind[2], 0)
        if kind[0] == "tag":
            return _verdict(kind[2].count("1") % 2)
        raise IllegalMoveError(f"unexpected move {move!r}")


class _ReplaySession(Session):
    """Drive two sessions identically; output 1 iff the tags agree."""

    def __init__(self):
        self.first_tag: str | None = None

    def step(self, move: Move) -> Move:
        kind = _classify(move)
        if kind[0] == "verdict_question":
            return _open_session(1)
        if kind[0] == "arg_opened":
            return _value_answer(kind[1], kind[2], 0)
        if kind[0] == "tag":
            if kind[1] == 1:
                self.first_tag = kind[2]
                return _open_session(2)
            return _verdict(1 if kind[2] == self.first_tag else 0)
        raise IllegalMoveError(f"unexpected move {move!r}")


class _FreshCoordsSession(Session):
    """Ask for every query's coordinate; output 1 iff all are distinct."""

    def __init__(self):
        self.coords: list[str] = []

    def step(self, move: Move) -> Move:
        kind = _classify(move)
        if kind[0] == "verdict_question":
            return _open_session(1)
        if kind[0] == "arg_opened":
            return _ask_coordinate(kind[1], kind[2])
        if kind[0] == "coordinate":
            self.coords.append(kind[3])
            return _value_answer(kind[1], kind[2], 0)
        if kind[0] == "tag":
            return _verdict(1 if len(set(self.coords)) == len(self.coords) else 0)
        raise IllegalMoveError(f"unexpected move {move!r}")


def builtin_adversaries(s: PolyExpr = IDENT, p: PolyExpr = IDENT) -> dict[str, ProbStrategy]:
    """The shipped distinguisher suite; plumbing checks, not attacks."""
    game = lolli(oracle_game(const(2)), adversary_game(s, p))

    def wrap(name, factory):
        inner = SessionStrategy(game, factory, name=f"{name}.inner")
        return ProbStrategy(inner, const(2), name=name)

    return {
        "constant-one": wrap("constant-one", lambda n: _ConstantOneSession()),
        "first-bit": wrap("first-bit", lambda n: _FirstBitSession(p, n)),
        "tag-parity": wrap("tag-parity", lambda n: _TagParitySession()),
        "replay-consistency": wrap("replay-consistency", lambda n: _ReplaySession()),
        "coordinate-freshness": wrap("coordinate-freshness", lambda n: _FreshCoordsSession()),
    }


# --- statistical closeness of the lifted construction ------------------------------


def tv_random_baseline(n: int, w: PolyExpr | None = None) -> Fraction:
    """Exact total-variation distance between the transcript distributions
    of (a) the query schedule driven by a uniformly random first-order
    function and (b) the ideal random functional, under the canonical
    probing environment that answers every query 0.

    Under that environment the oracle values feeding the schedule are
    independent uniform w-bit strings and both final answers are uniform
    (for any answer width up to w), so the distance is carried entirely by
    the coordinate sequences; those are enumerated with exact modular-bias
    probabilities.
    """
    w_n = (w if w is not None else default_w()).eval(n)
    domain = 1 << ceil_log2(n)
    total = Fraction(0)

    def explore(remaining: list[int], depth: int, pa: Fraction, pb: Fraction):
        nonlocal total
        if depth == n:
            total += abs(pa - pb)
            return
        m = len(remaining)
        base, extra = divmod(1 << w_n, m)
        for rank, coord in enumerate(sorted(remaining)):
            pick_a = Fraction(base + (1 if rank < extra else 0), 1 << w_n)
            pick_b = Fraction(1, m)
            rest = [c for c in remaining if c != coord]
            explore(rest, depth + 1, pa * pick_a, pb * pick_b)

    explore(list(range(domain)), 0, Fraction(1), Fraction(1))
    return total / 2
