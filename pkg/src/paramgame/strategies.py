"""Strategies: total deterministic play rules, composition, step budgets,
and randomness via oracle prefixing.

A strategy is a family of next-move rules, one per security parameter:
``next(n, play)`` maps an odd-length legal play to the player's reply (or
``None`` off the reachable frontier).  Execution normally goes through
*sessions*: a session is a stateful stepper fed opponent moves one at a
time.  Sessions are the linear-time runtime; ``next`` is recovered from a
session by replay, and the two views agree because sessions are pure
functions of the move sequence fed in.

"Efficiently computable" is operationalized as a per-move abstract step
budget: :func:`run_with_budget` counts interpreter line events while the
next move is computed and rejects the strategy if the count passes
``budget(n)``.  Budgets are polynomial expressions and compose through
:func:`compose`.

Randomized behavior is deterministic behavior plus a bit source: a
:class:`ProbStrategy` is a deterministic strategy on ``oracle(p) -o G``,
run by feeding oracle questions from a :class:`RandomSource`.  Exact
outcome probabilities enumerate the bit tree; Monte Carlo runs seeded
sessions.  Replicating a probabilistic strategy shares the oracle tape
across copies, so randomness is resolved once per session group.
"""

from __future__ import annotations

import random
import sys
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .errors import (
    BudgetExceededError,
    DeadlockError,
    IllegalMoveError,
    TotalityError,
)
from .games import (
    OPP,
    PLR,
    Bang,
    BoolGame,
    Lolli,
    Move,
    OracleGame,
    ParamGame,
    Play,
    StrGame,
    TStrGame,
    UnitGame,
    bang,
    lolli,
    oracle_game,
    str_game,
)
from .poly import IDENT, PolyExpr, const
from .util import derive_seed

__all__ = [
    "Strategy",
    "FunctionStrategy",
    "copycat",
    "compose",
    "plug",
    "replicate",
    "carac_plays",
    "run_with_budget",
    "default_budget",
    "random_total_strategy",
    "RandomSource",
    "SeededSource",
    "ReplaySource",
    "NeedChoice",
    "StochasticStrategy",
    "ProbStrategy",
    "once",
    "mult",
    "bang_strategy",
    "observe_prob",
    "exact_outcome_distribution",
    "exact_distribution",
    "observable_question",
]

_RELAY_GUARD = 1 << 20


def default_budget(game: ParamGame) -> PolyExpr:
    """Generous linear-in-play-length default step budget."""
    return const(512) + const(96) * game.length_bound


class Strategy:
    """A total deterministic strategy for the player of ``game``.

    Subclasses either override :meth:`next` directly or provide a native
    session via :meth:`_start_session`; the other view is derived.
    """

    def __init__(self, game: ParamGame, budget: PolyExpr | None = None, name: str = "strategy"):
        self.game = game
        self.budget = budget if budget is not None else default_budget(game)
        self.name = name

    # -- pure view ---------------------------------------------------------

    def next(self, n: int, play: Play) -> Move | None:
        """The reply to an odd-length play, or None off the strategy's own
        reachable plays."""
        if len(play) % 2 != 1:
            raise ValueError("next is defined on odd-length plays")
        sess = self.session(n)
        try:
            for k in range(0, len(play) - 1, 2):
                if sess.step(play[k]) != play[k + 1]:
                    return None
            return sess.step(play[-1])
        except IllegalMoveError:
            return None

    # -- session view ------------------------------------------------------

    def session(self, n: int) -> "Session":
        sess = self._start_session(n)
        if sess is None:
            raise NotImplementedError(f"{type(self).__name__} provides neither next nor session")
        return sess

    def _start_session(self, n: int):
        return None

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name} on {self.game.label()}>"


class Session:
    """Stateful stepper: feed one opponent move, get the player's reply."""

    def step(self, move: Move) -> Move:
        raise NotImplementedError


class FunctionStrategy(Strategy):
    """Strategy given directly by a next-move function."""

    def __init__(self, game, fn: Callable[[int, Play], Move | None], budget=None, name="fn"):
        super().__init__(game, budget, name)
        self.fn = fn

    def next(self, n: int, play: Play) -> Move | None:
        if len(play) % 2 != 1:
            raise ValueError("next is defined on odd-length plays")
        return self.fn(n, tuple(play))

    def _start_session(self, n: int):
        return _NextSession(self, n)


class _NextSession(Session):
    def __init__(self, strategy: Strategy, n: int):
        self.strategy = strategy
        self.n = n
        self.play: list[Move] = []

    def step(self, move: Move) -> Move:
        self.play.append(move)
        reply = self.strategy.next(self.n, tuple(self.play))
        if reply is None:
            raise TotalityError(
                f"{self.strategy.name} has no reply after {len(self.play)} moves at n={self.n}"
            )
        self.play.append(reply)
        return reply


class SessionStrategy(Strategy):
    """Base for strategies implemented by a native session factory."""

    def __init__(self, game, session_factory: Callable[[int], Session], budget=None, name="session"):
        super().__init__(game, budget, name)
        self._factory = session_factory

    def _start_session(self, n: int):
        return self._factory(n)


# --- step budgets -----------------------------------------------------------


def run_with_budget(strategy: Strategy, n: int, play: Play) -> Move | None:
    """Compute ``strategy.next(n, play)`` under a step counter.

    A step is one traced interpreter line event anywhere below the call;
    exceeding ``strategy.budget.eval(n)`` raises
    :class:`~paramgame.errors.BudgetExceededError`.
    """
    limit = strategy.budget.eval(n)
    steps = 0

    def tracer(frame, event, arg):
        nonlocal steps
        if event == "line":
            steps += 1
            if steps > limit:
                raise BudgetExceededError(strategy.name, n, limit)
        return tracer

    previous = sys.gettrace()
    sys.settrace(tracer)
    try:
        return strategy.next(n, play)
    finally:
        sys.settrace(previous)


def count_steps(strategy: Strategy, n: int, play: Play) -> int:
    """Measure (without enforcing) the step count of one next call."""
    steps = 0

    def tracer(frame, event, arg):
        nonlocal steps
        if event == "line":
            steps += 1
        return tracer

    previous = sys.gettrace()
    sys.settrace(tracer)
    try:
        strategy.next(n, play)
    finally:
        sys.settrace(previous)
    return steps


# --- characteristic plays -----------------------------------------------------


def carac_plays(
    strategy: Strategy,
    n: int,
    opp_enum: Iterable[Move] | Callable[[int], Iterable[Move]] | None = None,
    *,
    enforce_budget: bool = True,
    max_plays: int = 1 << 17,
) -> frozenset:
    """All even-length plays reachable when the player follows ``strategy``
    against every opponent behavior drawn from ``opp_enum``.

    Exponential in general; meant for small parameters.  Raises
    :class:`TotalityError` if the strategy refuses a demanded reply,
    :class:`IllegalMoveError` if it replies outside the game, and
    :class:`BudgetExceededError` when enforcement is on and a next call
    overruns its budget.
    """
    game = strategy.game
    if opp_enum is None:
        moves = game.moves_o(n)
    elif callable(opp_enum):
        moves = list(opp_enum(n))
    else:
        moves = list(opp_enum)

    result = {()}
    frontier: list[Play] = [()]
    while frontier:
        grown: list[Play] = []
        for play in frontier:
            for m in moves:
                cand = play + (m,)
                if not game.legal(n, cand):
                    continue
                if enforce_budget:
                    reply = run_with_budget(strategy, n, cand)
                else:
                    reply = strategy.next(n, cand)
                if reply is None:
                    raise TotalityError(
                        f"{strategy.name} undefined on a reachable play at n={n}"
                    )
                ext = cand + (reply,)
                if not game.legal(n, ext):
                    raise IllegalMoveError(
                        f"{strategy.name} played an illegal move at n={n}: {reply!r}"
                    )
                grown.append(ext)
        result.update(grown)
        if len(result) > max_plays:
            raise IllegalMoveError(f"characteristic play set exceeds {max_plays}")
        frontier = grown
    return frozenset(result)


# --- copycat, composition, plugging ------------------------------------------


class _CopycatSession(Session):
    def step(self, move: Move) -> Move:
        head = move.path[0]
        other = "R" if head == "L" else "L"
        return Move(
            PLR if move.side == OPP else OPP,
            move.tag,
            move.payload,
            (other,) + move.path[1:],
        )


def copycat(game: ParamGame) -> Strategy:
    """The identity strategy on ``game -o game``: echo each move across."""
    compound = lolli(game, game)
    return SessionStrategy(
        compound,
        lambda n: _CopycatSession(),
        budget=default_budget(compound),
        name=f"copycat({game.label()})",
    )


class _ComposedSession(Session):
    def __init__(self, fs: Session, gs: Session):
        self.fs = fs
        self.gs = gs

    def step(self, ext_move: Move) -> Move:
        if ext_move.path[0] == "L":
            reply, owner = self.fs.step(ext_move), "f"
        else:
            reply, owner = self.gs.step(ext_move), "g"
        for _ in range(_RELAY_GUARD):
            if owner == "f":
                if reply.path[0] == "L":
                    return reply
                mid = Move(
                    PLR if reply.side == OPP else OPP,
                    reply.tag,
                    reply.payload,
                    ("L",) + reply.path[1:],
                )
                reply, owner = self.gs.step(mid), "g"
            else:
                if reply.path[0] == "R":
                    return reply
                mid = Move(
                    PLR if reply.side == OPP else OPP,
                    reply.tag,
                    reply.payload,
                    ("R",) + reply.path[1:],
                )
                reply, owner = self.fs.step(mid), "f"
        raise DeadlockError("interaction relay exceeded its guard bound")


class ComposedStrategy(Strategy):
    def __init__(self, f: Strategy, g: Strategy):
        if not isinstance(f.game, Lolli) or not isinstance(g.game, Lolli):
            raise TypeError("compose expects strategies on arrow games")
        if f.game.right != g.game.left:
            raise ValueError(
                f"middle games differ: {f.game.right.label()} vs {g.game.left.label()}"
            )
        game = lolli(f.game.left, g.game.right)
        hidden = f.game.right.length_bound
        budget = (f.budget + g.budget) * (hidden + game.length_bound + const(8)) + const(512)
        super().__init__(game, budget, name=f"({f.name};{g.name})")
        self.f = f
        self.g = g

    def _start_session(self, n: int):
        return _ComposedSession(self.f.session(n), self.g.session(n))


def compose(f: Strategy, g: Strategy) -> Strategy:
    """Relational composition with hiding, realized as live interaction:
    g drives, its moves into the shared middle game are fed to f, and only
    outer moves surface."""
    return ComposedStrategy(f, g)


class _PluggedSession(Session):
    def __init__(self, fs: Session, gs: Session):
        self.fs = fs
        self.gs = gs

    def step(self, ext_move: Move) -> Move:
        reply = self.gs.step(
            Move(ext_move.side, ext_move.tag, ext_move.payload, ("R",) + ext_move.path)
        )
        for _ in range(_RELAY_GUARD):
            if reply.path[0] == "R":
                return Move(reply.side, reply.tag, reply.payload, reply.path[1:])
            base = Move(
                PLR if reply.side == OPP else OPP,
                reply.tag,
                reply.payload,
                reply.path[1:],
            )
            answer = self.fs.step(base)
            reply = self.gs.step(
                Move(
                    PLR if answer.side == OPP else OPP,
                    answer.tag,
                    answer.payload,
                    ("L",) + answer.path,
                )
            )
        raise DeadlockError("plug relay exceeded its guard bound")


def plug(f: Strategy, g: Strategy) -> Strategy:
    """Feed a strategy on ``G`` into a strategy on ``G -o K``; the result
    plays ``K`` alone."""
    if not isinstance(g.game, Lolli):
        raise TypeError("plug expects the consumer to live on an arrow game")
    if f.game != g.game.left:
        raise ValueError("plugged strategy does not match the arrow's source")
    return SessionStrategy(
        g.game.right,
        lambda n: _PluggedSession(f.session(n), g.session(n)),
        budget=(f.budget + g.budget) * (g.game.left.length_bound + const(8)) + const(512),
        name=f"plug({f.name},{g.name})",
    )


class _ReplicatedSession(Session):
    def __init__(self, f: Strategy, n: int):
        self.f = f
        self.n = n
        self.sessions: dict[int, Session] = {}

    def step(self, move: Move) -> Move:
        i = move.path[0]
        if not isinstance(i, int):
            raise IllegalMoveError(f"expected a copy-indexed move, got {move!r}")
        sess = self.sessions.get(i)
        if sess is None:
            sess = self.sessions[i] = self.f.session(self.n)
        reply = sess.step(Move(move.side, move.tag, move.payload, move.path[1:]))
        return Move(reply.side, reply.tag, reply.payload, (i,) + reply.path)


def replicate(p: PolyExpr, f: Strategy) -> Strategy:
    """Independent copies of a deterministic strategy under a bounded
    replication: copy i answers exactly as a fresh f would."""
    game = bang(p, f.game)
    return SessionStrategy(
        game,
        lambda n: _ReplicatedSession(f, n),
        budget=f.budget + const(256),
        name=f"!{f.name}",
    )


# --- randomized strategies ----------------------------------------------------


class NeedChoice(Exception):
    """Raised by ReplaySource when an unexplored choice point is hit."""

    def __init__(self, arity: int):
        super().__init__(f"choice of arity {arity}")
        self.arity = arity


class RandomSource:
    """Source of randomness for stochastic sessions."""

    def bit(self) -> int:
        return self.uniform(2)

    def bits(self, k: int) -> int:
        value = 0
        for _ in range(k):
            value = (value << 1) | self.bit()
        return value

    def uniform(self, m: int) -> int:
        raise NotImplementedError


class SeededSource(RandomSource):
    """Deterministic pseudo-random source keyed by arbitrary labels."""

    def __init__(self, *seed_parts):
        self._rng = random.Random(derive_seed(*seed_parts))

    def bit(self) -> int:
        return self._rng.getrandbits(1)

    def bits(self, k: int) -> int:
        return self._rng.getrandbits(k) if k else 0

    def uniform(self, m: int) -> int:
        if m < 1:
            raise ValueError("uniform needs a positive range")
        return self._rng.randrange(m)


class ReplaySource(RandomSource):
    """Replays a fixed choice prefix; raises NeedChoice past its end.

    Used by the exact-probability driver, which re-executes a session per
    branch of the choice tree.
    """

    def __init__(self, choices: Sequence[int]):
        self.choices = list(choices)
        self.pos = 0

    def uniform(self, m: int) -> int:
        if m < 1:
            raise ValueError("uniform needs a positive range")
        if m == 1:
            return 0
        if self.pos < len(self.choices):
            value = self.choices[self.pos]
            self.pos += 1
            return value
        raise NeedChoice(m)


def exact_distribution(run: Callable[[RandomSource], object], *, max_leaves: int = 1 << 20) -> dict:
    """Exact outcome distribution of a randomized computation.

    ``run`` must be a pure function of the choices it draws from the
    source.  The driver re-executes it once per leaf of the choice tree
    and sums leaf weights per outcome.
    """
    out: dict = {}
    leaves = 0

    def explore(prefix: list[int], weight: Fraction):
        nonlocal leaves
        src = ReplaySource(prefix)
        try:
            result = run(src)
        except NeedChoice as nc:
            for v in range(nc.arity):
                explore(prefix + [v], weight / nc.arity)
            return
        leaves += 1
        if leaves > max_leaves:
            raise IllegalMoveError("exact enumeration exceeded its leaf bound")
        out[result] = out.get(result, Fraction(0)) + weight

    explore([], Fraction(1))
    return out


class StochasticStrategy:
    """Common surface of randomized strategies: a game plus a session
    factory taking a randomness source."""

    game: ParamGame
    name: str

    def session(self, n: int, source: RandomSource) -> Session:
        raise NotImplementedError


class _OracleFedSession(Session):
    """Runs a deterministic strategy on ``oracle(p) -o G`` as a G-session,
    answering its oracle questions from the source."""

    def __init__(self, inner: Session, source: RandomSource, limit: int):
        self.inner = inner
        self.source = source
        self.limit = limit
        self.bits_used = 0

    def step(self, g_move: Move) -> Move:
        reply = self.inner.step(
            Move(g_move.side, g_move.tag, g_move.payload, ("R",) + g_move.path)
        )
        while reply.path[0] == "L":
            if self.bits_used >= self.limit:
                raise IllegalMoveError("oracle budget exhausted")
            bit = self.source.bit()
            self.bits_used += 1
            reply = self.inner.step(Move(OPP, "ans", str(bit), ("L",)))
        return Move(reply.side, reply.tag, reply.payload, reply.path[1:])


class ProbStrategy(StochasticStrategy):
    """A probabilistic strategy on G: a deterministic strategy on
    ``oracle(p) -o G`` plus the budget p of random bits it may draw."""

    def __init__(self, inner: Strategy, oracle_budget: PolyExpr, name: str = "prob"):
        if not isinstance(inner.game, Lolli) or not isinstance(inner.game.left, OracleGame):
            raise TypeError("a probabilistic strategy needs an oracle on the left")
        self.inner = inner
        self.oracle_budget = oracle_budget
        self.name = name

    @property
    def game(self) -> ParamGame:
        return self.inner.game.right

    def session(self, n: int, source: RandomSource) -> Session:
        return _OracleFedSession(
            self.inner.session(n), source, self.oracle_budget.eval(n)
        )

    def __repr__(self) -> str:
        return f"<ProbStrategy {self.name} on {self.game.label()}>"


class _OnceSession(Session):
    """Ask one bit b, answer the constant string b^p(n)."""

    def __init__(self, p: PolyExpr, n: int):
        self.length = p.eval(n)
        self.phase = "start"

    def step(self, move: Move) -> Move:
        if self.phase == "start":
            if move.path[0] != "R" or move.tag != "?":
                raise IllegalMoveError(f"unexpected move {move!r}")
            if self.length == 0:
                self.phase = "done"
                return Move(PLR, "ans", "", ("R",))
            self.phase = "asked"
            return Move(PLR, "?", "", ("L",))
        if self.phase == "asked" and move.path[0] == "L":
            self.phase = "done"
            return Move(PLR, "ans", move.payload * self.length, ("R",))
        raise IllegalMoveError(f"unexpected move {move!r}")


class _MultSession(Session):
    """Draw p(n) bits and answer their concatenation."""

    def __init__(self, p: PolyExpr, n: int):
        self.length = p.eval(n)
        self.collected: list[str] = []
        self.started = False

    def step(self, move: Move) -> Move:
        if not self.started:
            if move.path[0] != "R" or move.tag != "?":
                raise IllegalMoveError(f"unexpected move {move!r}")
            self.started = True
            if self.length == 0:
                return Move(PLR, "ans", "", ("R",))
            return Move(PLR, "?", "", ("L",))
        if move.path[0] == "L":
            self.collected.append(move.payload)
            if len(self.collected) < self.length:
                return Move(PLR, "?", "", ("L",))
            return Move(PLR, "ans", "".join(self.collected), ("R",))
        raise IllegalMoveError(f"unexpected move {move!r}")


def once(p: PolyExpr = IDENT) -> ProbStrategy:
    """Flip one coin; answer all-zeros or all-ones of length p(n)."""
    game = lolli(oracle_game(p), str_game(p))
    inner = SessionStrategy(game, lambda n: _OnceSession(p, n), name="once.inner")
    return ProbStrategy(inner, p, name="once")


def mult(p: PolyExpr = IDENT) -> ProbStrategy:
    """Draw p(n) coins; answer the random string they spell."""
    game = lolli(oracle_game(p), str_game(p))
    inner = SessionStrategy(game, lambda n: _MultSession(p, n), name="mult.inner")
    return ProbStrategy(inner, p, name="mult")


class _SharedTapeSession(Session):
    """Session for the replication of a probabilistic strategy.

    Every copy replays the base strategy against its own opponent moves,
    but all copies read the same oracle tape: copy c's k-th oracle draw is
    the tape's k-th bit, extended through the real oracle only on first
    use.  Randomness is thus resolved once for the whole session group.
    """

    def __init__(self, base: ProbStrategy, n: int):
        self.base = base
        self.n = n
        self.tape: list[int] = []
        self.copies: dict[int, dict] = {}
        self.awaiting: int | None = None

    def _copy(self, i: int) -> dict:
        state = self.copies.get(i)
        if state is None:
            state = self.copies[i] = {"sess": self.base.inner.session(self.n), "pos": 0}
        return state

    def step(self, move: Move) -> Move:
        if move.path[0] == "R":
            i = move.path[1]
            state = self._copy(i)
            inner_move = Move(move.side, move.tag, move.payload, ("R",) + move.path[2:])
            return self._pump(i, state["sess"].step(inner_move))
        if move.path[0] == "L":
            if self.awaiting is None:
                raise IllegalMoveError("oracle answer arrived unrequested")
            i, self.awaiting = self.awaiting, None
            self.tape.append(int(move.payload))
            state = self.copies[i]
            state["pos"] += 1
            return self._pump(i, state["sess"].step(move))
        raise IllegalMoveError(f"unexpected move {move!r}")

    def _pump(self, i: int, reply: Move) -> Move:
        state = self.copies[i]
        while reply.path[0] == "L":
            k = state["pos"]
            if k < len(self.tape):
                state["pos"] += 1
                reply = state["sess"].step(Move(OPP, "ans", str(self.tape[k]), ("L",)))
            else:
                self.awaiting = i
                return reply
        return Move(reply.side, reply.tag, reply.payload, ("R", i) + reply.path[1:])


def bang_strategy(p: PolyExpr, f: ProbStrategy) -> ProbStrategy:
    """Replicate a probabilistic strategy with shared randomness: all p(n)
    copies replay f on one oracle tape, consulted once and cached."""
    game = lolli(f.inner.game.left, bang(p, f.game))
    inner = SessionStrategy(
        game, lambda n: _SharedTapeSession(f, n), name=f"!{f.name}.inner"
    )
    return ProbStrategy(inner, f.oracle_budget, name=f"!{f.name}")


# --- observation ---------------------------------------------------------------


def observable_question(game: ParamGame, n: int) -> Move:
    """The unique opening question of a one-question/one-answer game."""
    if not isinstance(game, (UnitGame, BoolGame, StrGame, TStrGame)):
        raise TypeError(f"{game.label()} is not an observable game")
    return game.moves_o(n)[0]


def exact_outcome_distribution(strat: StochasticStrategy, n: int) -> dict[Move, Fraction]:
    """Exact distribution of the answer move of an observable game."""
    question = observable_question(strat.game, n)

    def run(source: RandomSource) -> Move:
        return strat.session(n, source).step(question)

    return exact_distribution(run)


def observe_prob(
    strat: StochasticStrategy,
    n: int,
    outcome: Move | str,
    mode: str = "exact",
    *,
    trials: int | None = None,
    seed: int | None = None,
) -> Fraction | float:
    """Probability that the strategy answers ``outcome`` on its observable
    game.

    Exact mode enumerates the randomness tree (bounded; keep the oracle
    budget small).  Monte Carlo mode runs ``trials`` seeded sessions and
    reports the empirical frequency.
    """
    question = observable_question(strat.game, n)
    if isinstance(outcome, str):
        outcome = Move(PLR, "ans", outcome)
    if mode == "exact":
        if isinstance(strat, ProbStrategy) and strat.oracle_budget.eval(n) > 24:
            raise IllegalMoveError("exact observation bounded to 24 oracle bits")
        dist = exact_outcome_distribution(strat, n)
        return dist.get(outcome, Fraction(0))
    if mode == "montecarlo":
        if trials is None or seed is None:
            raise ValueError("montecarlo mode needs trials and seed")
        hits = 0
        for t in range(trials):
            sess = strat.session(n, SeededSource(seed, "observe", t))
            if sess.step(question) == outcome:
                hits += 1
        return hits / trials
    raise ValueError(f"unknown mode {mode!r}")


# --- randomized test fixtures ---------------------------------------------------


def random_total_strategy(game: ParamGame, seed, budget: PolyExpr | None = None) -> Strategy:
    """A deterministic total strategy choosing a pseudo-random legal reply,
    stable across runs for a fixed seed.  Test/benchmark fixture."""

    def fn(n: int, play: Play) -> Move | None:
        candidates = [m for m in game.moves_p(n) if game.legal(n, play + (m,))]
        if not candidates:
            return None
        key = derive_seed(
            seed, n, tuple((m.side, m.tag, m.payload, m.path) for m in play)
        )
        return candidates[key % len(candidates)]

    return FunctionStrategy(game, fn, budget=budget, name=f"rand[{seed}]")
