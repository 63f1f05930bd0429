"""Collision and forgery attacks on query-limited second-order functionals.

A deterministic strategy on ``linsof(q, p)`` computes, at each parameter
n, a functional taking a boolean function on n-bit inputs to a p(n)-bit
tag, reading the argument at most q(n) times.  Since q(n) is tiny against
the 2^n-point domain, the functional's restriction to *blockwise-constant*
arguments is a low-depth decision tree over N coordinates; the attack
fixes the influential coordinates with the estimation loop from
:mod:`paramgame.influence`, then samples two far-apart functions that the
target cannot tell apart.

Blockwise embedding: an N-bit string ``x`` (N a power of two dividing
2^n) extends to the function on n-bit inputs that is constant on each of
the N contiguous blocks of size 2^n / N, taking coordinate ``j+1`` of
``x`` on block ``j``.  With that block size the normalized Hamming
distance is preserved exactly: every coordinate of ``x`` covers the same
share of the domain, so H(ext(x), ext(y)) = H(x, y).
"""

from __future__ import annotations

import math
import queue
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .errors import IllegalMoveError, InfeasibleParametersError
from .games import Move, OPP, PLR, bang, linsof_game, lolli, oracle_game, tstr_game
from .influence import (
    BoolFunOracle,
    PartialAssignment,
    RandomStream,
    SemiUniformDist,
    algorithm_a,
)
from .poly import IDENT, PolyExpr, const
from .prf import ToyPRF
from .strategies import ProbStrategy, Session, SessionStrategy, Strategy
from .util import bits_to_int, int_to_bits

__all__ = [
    "ExtendedFunction",
    "extend",
    "hamming",
    "hamming_ints",
    "hamming_fun",
    "choose_N",
    "FunctionalOracle",
    "ExtensionOracle",
    "ProbingStrategy",
    "mac_fixture",
    "run_infvar",
    "infvar_strategy",
    "CollisionReport",
    "collision_finder",
    "ForgeReport",
    "forge",
]


# --- blockwise extension and Hamming distance -----------------------------------


@dataclass(frozen=True)
class ExtendedFunction:
    """The blockwise-constant extension of an N-bit string to {0,1}^n."""

    x: int
    big_n: int  # N, number of blocks
    n: int

    def __post_init__(self):
        _check_extension_shape(self.big_n, self.n)

    @property
    def block_shift(self) -> int:
        return self.n - (self.big_n.bit_length() - 1)

    def __call__(self, i: int) -> int:
        block = i >> self.block_shift
        return (self.x >> (self.big_n - 1 - block)) & 1

    def payload(self) -> str:
        return int_to_bits(self.x, self.big_n)


def _check_extension_shape(big_n: int, n: int) -> None:
    if big_n < 1 or big_n & (big_n - 1):
        raise ValueError(f"N={big_n} is not a power of two")
    if (big_n.bit_length() - 1) > n:
        raise ValueError(f"N={big_n} does not divide 2^{n}")


def extend(x: str | int, n: int, big_n: int | None = None) -> ExtendedFunction:
    """Extend an N-bit string to a function on n-bit inputs, constant on
    each of the N blocks of size 2^n / N."""
    if isinstance(x, str):
        if big_n is not None and big_n != len(x):
            raise ValueError("explicit N disagrees with the string length")
        return ExtendedFunction(bits_to_int(x), len(x), n)
    if big_n is None:
        raise ValueError("an integer point needs an explicit N")
    return ExtendedFunction(x, big_n, n)


def hamming(x: str, y: str) -> Fraction:
    """Normalized Hamming distance between equal-length strings."""
    if len(x) != len(y):
        raise ValueError("strings must have equal length")
    if not x:
        return Fraction(0)
    return Fraction(sum(a != b for a, b in zip(x, y)), len(x))


def hamming_ints(a: int, b: int, n_bits: int) -> Fraction:
    if n_bits == 0:
        return Fraction(0)
    return Fraction(((a ^ b).bit_count()), n_bits)


def hamming_fun(
    f: Callable[[int], int],
    g: Callable[[int], int],
    n: int,
    mode: str = "exact",
    *,
    samples: int | None = None,
    rng: RandomStream | None = None,
) -> Fraction | float:
    """Normalized Hamming distance between functions on {0,1}^n: exact by
    full enumeration (n <= 20), or estimated on uniform sample points."""
    if mode == "exact":
        if n > 20:
            raise ValueError("exact function distance bounded to n <= 20")
        points = 1 << n
        return Fraction(sum(f(i) != g(i) for i in range(points)), points)
    if mode == "sampled":
        if samples is None or rng is None:
            raise ValueError("sampled mode needs samples and rng")
        hits = 0
        for _ in range(samples):
            i = rng.pyrandom.getrandbits(n) if n else 0
            hits += f(i) != g(i)
        return hits / samples
    raise ValueError(f"unknown mode {mode!r}")


def choose_N(L: int, q: int, eps: float, delta: float, n: int) -> int:
    """Smallest power of two N with n < N < 2^n whose size dwarfs the
    number of coordinates the fixing loop can pin: 10 L q^2 / (delta^2
    eps) <= delta N / 100.  Raises when no such N exists below 2^n."""
    need = 10.0 * L * q * q / (delta * delta * eps)
    k = max(n + 1, 2).bit_length() - 1
    if (1 << k) <= n:
        k += 1
    while k < n:
        big_n = 1 << k
        if need <= delta * big_n / 100.0:
            return big_n
        k += 1
    raise InfeasibleParametersError(
        f"no power of two in ({n}, 2^{n}) satisfies the size constraint"
    )


# --- the functional oracle -------------------------------------------------------


class FunctionalOracle:
    """Query-counted black-box access to the functional computed by a
    deterministic strategy on ``linsof(q, p)``.

    One query plays a full session: the oracle takes the argument role,
    answering each probe request with ``f`` at the requested point, and
    returns the final tag.  A deterministic target's probe schedule
    depends only on the answers it has seen, so sessions are memoized on
    the answer path: repeat paths skip the interaction entirely (the
    spec's determinism-modulo-probed-points).  Probe budgets are enforced
    per query.
    """

    def __init__(
        self,
        strategy: Strategy,
        n: int,
        *,
        q: PolyExpr,
        p: PolyExpr,
        r: PolyExpr = IDENT,
        cache: bool = True,
        log_probes: bool = False,
    ):
        self.strategy = strategy
        self.n = n
        self.q_n = q.eval(n)
        self.p_n = p.eval(n)
        self.r_n = r.eval(n)
        self.cache = cache
        self.query_count = 0
        self.interaction_count = 0
        self.probe_points_seen: set[int] = set()
        self.log_probes = log_probes
        self.probe_log: list[tuple[int, ...]] = []
        self._trie: dict = {}

    # the argument role within one linsof session

    def _interact(self, f: Callable[[int], int]) -> tuple[list[tuple[int, int]], int]:
        sess = self.strategy.session(self.n)
        move = sess.step(Move(OPP, "?", "", ("R",)))
        probes: list[tuple[int, int]] = []
        while move.path != ("R",):
            if not (move.tag == "?" and move.path[0] == "L" and move.path[2] == "R"):
                raise IllegalMoveError(f"target emitted unexpected {move!r}")
            i = move.path[1]
            point_move = sess.step(Move(OPP, "?", "", ("L", i, "L")))
            point = bits_to_int(point_move.payload)
            bit = f(point)
            probes.append((point, bit))
            if len(probes) > self.q_n:
                raise IllegalMoveError(
                    f"target probed its argument more than q(n)={self.q_n} times"
                )
            move = sess.step(Move(OPP, "ans", str(bit), ("L", i, "R")))
        return probes, bits_to_int(move.payload)

    def _query_uncounted(self, f: Callable[[int], int], record: bool) -> int:
        if not self.cache:
            probes, tag = self._interact(f)
            self.interaction_count += 1
            if record:
                self._record(probes)
            return tag
        node = self._trie
        walked: list[tuple[int, int]] = []
        while True:
            if "tag" in node:
                if record:
                    self._record(walked)
                return node["tag"]
            if "point" not in node:
                break
            point = node["point"]
            bit = f(point)
            walked.append((point, bit))
            node = node.setdefault(bit, {})
        probes, tag = self._interact(f)
        self.interaction_count += 1
        node = self._trie
        for point, bit in probes:
            node["point"] = point
            node = node.setdefault(bit, {})
        node["tag"] = tag
        if record:
            self._record(probes)
        return tag

    def _record(self, probes) -> None:
        self.probe_points_seen.update(p for p, _ in probes)
        if self.log_probes:
            self.probe_log.append(tuple(p for p, _ in probes))

    def query(self, f: Callable[[int], int]) -> int:
        """Tag of the argument function, as a p(n)-bit int."""
        self.query_count += 1
        return self._query_uncounted(f, record=True)

    def verify_query(self, f: Callable[[int], int]) -> int:
        """Out-of-band evaluation for result checking; neither counted nor
        recorded as part of the attack."""
        return self._query_uncounted(f, record=False)


class ExtensionOracle(BoolFunOracle):
    """The target functional restricted to blockwise-constant arguments:
    a plain bit-string oracle on {0,1}^N suited to the fixing loop.  Logs
    every queried string for post-hoc distance accounting."""

    def __init__(self, target: FunctionalOracle, big_n: int):
        _check_extension_shape(big_n, target.n)
        super().__init__(big_n, target.p_n)
        self.target = target
        self.shift = target.n - (big_n.bit_length() - 1)
        self.log: list[int] = []

    def _eval(self, x: int) -> int:
        self.log.append(x)
        big_n, shift = self.n_bits, self.shift
        return self.target.query(lambda i: (x >> (big_n - 1 - (i >> shift))) & 1)

    def verify(self, x: int) -> int:
        return self.target.verify_query(ExtendedFunction(x, self.n_bits, self.target.n))


# --- target fixtures -------------------------------------------------------------


class _ProbingSession(Session):
    """Player side of linsof: open one argument session per probe point,
    then answer with a tag computed from the collected bits.  A constant
    argument may answer without requesting the point."""

    def __init__(self, points: Sequence[str], tag_fn: Callable[[str], str]):
        self.points = list(points)
        self.tag_fn = tag_fn
        self.answers: list[str] = []

    def _advance(self, i: int) -> Move:
        if i <= len(self.points):
            return Move(PLR, "?", "", ("L", i, "R"))
        return Move(PLR, "ans", self.tag_fn("".join(self.answers)), ("R",))

    def step(self, move: Move) -> Move:
        head = move.path
        if head == ("R",) and move.tag == "?":
            return self._advance(1)
        if len(head) == 3 and head[0] == "L" and head[2] == "L" and move.tag == "?":
            i = head[1]
            return Move(PLR, "ans", self.points[i - 1], ("L", i, "L"))
        if len(head) == 3 and head[0] == "L" and head[2] == "R" and move.tag == "ans":
            self.answers.append(move.payload)
            return self._advance(len(self.answers) + 1)
        raise IllegalMoveError(f"probing strategy cannot interpret {move!r}")


class ProbingStrategy(Strategy):
    """Deterministic functional that reads its argument at a fixed list of
    points (per n) and digests the answers into a tag."""

    def __init__(
        self,
        q: PolyExpr,
        p: PolyExpr,
        points_fn: Callable[[int], Sequence[str]],
        tag_fn: Callable[[int, str], str],
        name: str = "probing",
    ):
        super().__init__(linsof_game(q, p), name=name)
        self.q = q
        self.p = p
        self.points_fn = points_fn
        self.tag_fn = tag_fn

    def _start_session(self, n: int):
        points = list(self.points_fn(n))
        if len(points) > self.q.eval(n):
            raise ValueError("fixture probes more points than its access bound")
        return _ProbingSession(points, lambda answers: self.tag_fn(n, answers))


def mac_fixture(key: str, q: PolyExpr, p: PolyExpr) -> ProbingStrategy:
    """A toy function-authentication target: probe points are derived from
    the key, and the tag digests the key together with the answers.

    Each output bit depends on at most q(n) argument reads, so the
    blockwise restriction of every tag bit is a depth-q(n) decision tree —
    exactly the regime the collision attack needs.  The key of the session
    at parameter n is the given key cycled to length n.
    """
    point_prf = ToyPRF(w=IDENT, tweak=0x706F696E)
    tag_prf = ToyPRF(w=p, tweak=0x746167)

    def key_at(n: int) -> str:
        if n == 0:
            return ""
        reps = (n + len(key) - 1) // len(key)
        return (key * reps)[:n]

    def points_fn(n: int) -> list[str]:
        k = key_at(n)
        q_n = q.eval(n)
        width = max(1, q_n.bit_length())
        if width > n or q_n > n:
            raise ValueError(f"q(n)={q_n} too large for key length {n}")
        return [point_prf.eval(k, int_to_bits(i, width)) for i in range(1, q_n + 1)]

    def tag_fn(n: int, answers: str) -> str:
        return tag_prf.eval(key_at(n), answers)

    if not key or any(c not in "01" for c in key):
        raise ValueError("key must be a nonempty bitstring")
    return ProbingStrategy(q, p, points_fn, tag_fn, name="mac")


# --- the attack engine -----------------------------------------------------------


def run_infvar(
    target: FunctionalOracle,
    big_n: int,
    eps: float,
    delta: float,
    rng: RandomStream,
    *,
    sample_cap: int | None = None,
) -> tuple[PartialAssignment, ExtensionOracle]:
    """Run the variance-killing loop against the blockwise restriction of
    the target; returns the fixing plus the oracle (with its query log)."""
    restricted = ExtensionOracle(target, big_n)
    g = algorithm_a(
        restricted, target.q_n, eps, delta, rng, sample_cap=sample_cap
    )
    return g, restricted


@dataclass
class CollisionReport:
    n: int
    big_n: int
    q: int
    p: int
    delta: float
    eps: float
    x1: int
    x2: int
    g: PartialAssignment
    hamming_gh: Fraction
    tags_equal: bool
    min_query_distance: Fraction | None
    closest_query: int | None
    functional_queries: int
    interactions: int

    @property
    def success(self) -> bool:
        ok_distance = self.hamming_gh >= Fraction(1, 10)
        ok_queries = (
            self.min_query_distance is None
            or self.min_query_distance >= Fraction(1, 10)
        )
        return ok_distance and self.tags_equal and ok_queries


def collision_finder(
    target: FunctionalOracle,
    delta: float,
    *,
    big_n: int,
    rng: RandomStream,
    eps: float | None = None,
    sample_cap: int | None = None,
) -> tuple[ExtendedFunction, ExtendedFunction, CollisionReport]:
    """Find two far-apart functions the target cannot distinguish.

    Kills the variance of every tag bit (with per-bit target eps,
    defaulting to delta / p(n) so a union bound over the bits leaves
    failure probability about delta), samples two strings from the
    surviving semi-uniform distribution, and reports the three success
    conditions: the pair is far apart, the tags agree, and the pair is far
    from everything the attack queried.
    """
    if eps is None:
        eps = delta / max(target.p_n, 1)
    g, restricted = run_infvar(
        target, big_n, eps, delta, rng, sample_cap=sample_cap
    )
    dist = SemiUniformDist(g)
    x1, x2 = (int(v) for v in dist.sample(2, rng))
    g_fn = ExtendedFunction(x1, big_n, target.n)
    h_fn = ExtendedFunction(x2, big_n, target.n)
    tag1 = restricted.verify(x1)
    tag2 = restricted.verify(x2)
    min_dist: Fraction | None = None
    closest: int | None = None
    for xq in restricted.log:
        for x in (x1, x2):
            d = hamming_ints(x, xq, big_n)
            if min_dist is None or d < min_dist:
                min_dist = d
                closest = xq
    report = CollisionReport(
        n=target.n,
        big_n=big_n,
        q=target.q_n,
        p=target.p_n,
        delta=delta,
        eps=eps,
        x1=x1,
        x2=x2,
        g=g,
        hamming_gh=hamming_ints(x1, x2, big_n),
        tags_equal=tag1 == tag2,
        min_query_distance=min_dist,
        closest_query=closest,
        functional_queries=restricted.query_count,
        interactions=target.interaction_count,
    )
    return g_fn, h_fn, report


@dataclass
class ForgeReport:
    predicted_tag: int
    actual_tag: int

    @property
    def match(self) -> bool:
        return self.predicted_tag == self.actual_tag


def forge(
    target: FunctionalOracle, g_fn: ExtendedFunction, h_fn: ExtendedFunction
) -> ForgeReport:
    """Forgery demo: query the target on one function only and predict the
    other's tag; the actual tag is computed out-of-band for checking."""
    predicted = target.query(g_fn)
    actual = target.verify_query(h_fn)
    return ForgeReport(predicted_tag=predicted, actual_tag=actual)


# --- the attack as a formal probabilistic strategy --------------------------------


class _Bridge:
    """Rendezvous between a session (driving the game) and a worker thread
    running the engine; strictly alternating, hence deterministic."""

    def __init__(self):
        self.requests: queue.Queue = queue.Queue()
        self.replies: queue.Queue = queue.Queue()

    def rpc(self, kind: str, payload):
        self.requests.put((kind, payload))
        status, value = self.replies.get()
        if status == "stop":
            raise RuntimeError("session abandoned")
        return value


class _BridgeOracle(BoolFunOracle):
    def __init__(self, bridge: _Bridge, n_bits: int, out_bits: int):
        super().__init__(n_bits, out_bits)
        self.bridge = bridge

    def _eval(self, x: int) -> int:
        return self.bridge.rpc("query", x)


class _BridgeRng:
    """RandomStream stand-in drawing everything from the oracle tape."""

    def __init__(self, bridge: _Bridge):
        self.bridge = bridge

    def bit(self) -> int:
        return self.bridge.rpc("bits", 1)

    def bits(self, k: int) -> int:
        return self.bridge.rpc("bits", k) if k else 0


class _InfvarSession(Session):
    """Session-side of the attack strategy: a ternary question comes in,
    the engine runs in a worker thread, and its oracle/randomness needs
    are serviced through game moves."""

    def __init__(self, owner: "_InfvarInner", n: int):
        self.owner = owner
        self.n = n
        self.big_n = owner.big_n.eval(n)
        _check_extension_shape(self.big_n, n)
        self.bridge = _Bridge()
        self.worker: threading.Thread | None = None
        self.sessions_opened = 0
        self.bits_needed = 0
        self.bits_acc: list[int] = []
        self.current_x: int | None = None

    def _start_worker(self) -> None:
        owner, bridge, n = self.owner, self.bridge, self.n

        def work():
            try:
                oracle = _BridgeOracle(bridge, self.big_n, owner.p.eval(n))
                rng = _BridgeRng(bridge)
                g = algorithm_a(
                    oracle,
                    owner.q.eval(n),
                    owner.eps,
                    owner.delta,
                    rng,
                    sample_cap=owner.sample_cap,
                )
                bridge.requests.put(("done", g))
            except BaseException as exc:  # surfaced on the session side
                bridge.requests.put(("error", exc))

        self.worker = threading.Thread(target=work, daemon=True)
        self.worker.start()

    def _f(self, point: int) -> int:
        block = point >> (self.n - (self.big_n.bit_length() - 1))
        return (self.current_x >> (self.big_n - 1 - block)) & 1

    def _pump(self) -> Move:
        kind, payload = self.bridge.requests.get()
        if kind == "error":
            raise payload
        if kind == "done":
            return Move(PLR, "ans", payload.ternary_payload(self.big_n), ("R", "R"))
        if kind == "bits":
            self.bits_needed = payload
            self.bits_acc = []
            if payload == 0:
                self.bridge.replies.put(("ok", 0))
                return self._pump()
            return Move(PLR, "?", "", ("L",))
        if kind == "query":
            self.current_x = payload
            self.sessions_opened += 1
            return Move(PLR, "?", "", ("R", "L", self.sessions_opened, "R"))
        raise RuntimeError(f"unknown worker request {kind!r}")

    def step(self, move: Move) -> Move:
        if move.path == ("R", "R") and move.tag == "?":
            self._start_worker()
            return self._pump()
        if move.path == ("L",):
            self.bits_acc.append(int(move.payload))
            if len(self.bits_acc) < self.bits_needed:
                return Move(PLR, "?", "", ("L",))
            value = 0
            for b in self.bits_acc:
                value = (value << 1) | b
            self.bridge.replies.put(("ok", value))
            return self._pump()
        head = move.path
        if len(head) >= 4 and head[:2] == ("R", "L"):
            j, sub = head[2], head[3:]
            if len(sub) == 3 and sub[2] == "R" and move.tag == "?":
                i = sub[1]
                return Move(PLR, "?", "", ("R", "L", j, "L", i, "L"))
            if len(sub) == 3 and sub[2] == "L" and move.tag == "ans":
                i = sub[1]
                bit = self._f(bits_to_int(move.payload))
                return Move(PLR, "ans", str(bit), ("R", "L", j, "L", i, "R"))
            if sub == ("R",) and move.tag == "ans":
                self.bridge.replies.put(("ok", bits_to_int(move.payload)))
                return self._pump()
        raise IllegalMoveError(f"attack strategy cannot interpret {move!r}")


class _InfvarInner(Strategy):
    def __init__(self, game, *, eps, delta, q, p, big_n, sample_cap):
        super().__init__(game, name="infvar.inner")
        self.eps = eps
        self.delta = delta
        self.q = q
        self.p = p
        self.big_n = big_n
        self.sample_cap = sample_cap

    def _start_session(self, n: int):
        return _InfvarSession(self, n)


def infvar_strategy(
    eps: float,
    delta: float,
    *,
    q: PolyExpr,
    p: PolyExpr,
    big_n: PolyExpr,
    sessions: PolyExpr | None = None,
    oracle_budget: PolyExpr | None = None,
    sample_cap: int | None = None,
) -> ProbStrategy:
    """The attack as a probabilistic strategy: given replicated sessions
    of a target functional, it answers a ternary question with the
    coordinate fixing it found.

    ``big_n`` gives the restriction width per parameter (a power of two
    dividing 2^n at every n used).  The replication bound actually needed
    equals the engine's functional query count; the default is a generous
    ceiling, and the exact count is observable on the session.
    """
    sessions = sessions if sessions is not None else const(1 << 20)
    oracle_budget = oracle_budget if oracle_budget is not None else const(1 << 24)
    game = lolli(
        oracle_game(oracle_budget),
        lolli(bang(sessions, linsof_game(q, p)), tstr_game(big_n)),
    )
    inner = _InfvarInner(
        game, eps=eps, delta=delta, q=q, p=p, big_n=big_n, sample_cap=sample_cap
    )
    return ProbStrategy(inner, oracle_budget, name="infvar")
