"""Parametrized games: moves, plays, legality, and game constructors.

A game fixes opponent/player move alphabets and, for each security
parameter ``n``, a prefix-closed set of alternating legal plays whose
total encoded length stays below a polynomial bound.  Games here are
intensional: a descriptor carries a legality predicate plus bounded
move enumerators, and play sets are only ever materialized by the
explicit (and guarded) :func:`enumerate_plays`.

Moves are flat records.  Compound constructors (arrow, tensor, bounded
replication) locate a base move inside the compound with a ``path``:
``"L"``/``"R"`` steps for the two-sided constructors and positive
integers for replication copy indices.  The encoded length of a move is
its payload length plus one; paths and tags do not count, which keeps
length bounds composable.

Conventions used by every constructor:

* plays alternate opponent/player, opponent first;
* payloads are strings over ``01`` (``01_`` for the ternary string game,
  where ``_`` marks an undefined coordinate);
* a string payload read as a number is its binary numeral, most
  significant bit first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .errors import EnumerationTooLargeError, GameParseError
from .poly import IDENT, LG, Const, PolyExpr, PolyParseError, const, parse_poly

__all__ = [
    "Move",
    "Play",
    "ParamGame",
    "UnitGame",
    "BoolGame",
    "StrGame",
    "TStrGame",
    "OracleGame",
    "Bang",
    "Lolli",
    "Tensor",
    "unit_game",
    "bool_game",
    "str_game",
    "str_le_game",
    "tstr_game",
    "oracle_game",
    "bang",
    "lolli",
    "tensor",
    "sof_game",
    "linsof_game",
    "logsof_game",
    "enumerate_plays",
    "encoded_length",
    "format_transcript",
    "parse_game",
    "EnumerationTooLargeError",
    "GameParseError",
]

OPP = "O"
PLR = "P"

_FLIP = {OPP: PLR, PLR: OPP}

# Hard cap on alphabet/play-set sizes materialized by enumeration helpers.
_ENUM_LIMIT = 1 << 17


@dataclass(frozen=True, slots=True)
class Move:
    """One move: which side plays it, a tag, a payload, and a component path.

    ``path`` entries are "L"/"R" (arrow or tensor component) or a positive
    int (replication copy index).  ``side`` is the side in the compound
    game the move belongs to, not the side in the base component.
    """

    side: str
    tag: str
    payload: str = ""
    path: tuple = ()

    @property
    def encoded_len(self) -> int:
        return len(self.payload) + 1

    @property
    def copy_index(self) -> int | None:
        for step in self.path:
            if isinstance(step, int):
                return step
        return None

    def transcript_line(self) -> str:
        copies = ".".join(str(s) for s in self.path if isinstance(s, int)) or "-"
        return f"{self.side} {copies} {self.tag} {self.payload or '-'}"

    def __repr__(self) -> str:  # compact, for test diffs
        loc = "".join(f"{s}." for s in self.path)
        return f"<{self.side} {loc}{self.tag}{(':' + self.payload) if self.payload else ''}>"


Play = tuple  # tuple[Move, ...]


def encoded_length(play: Sequence[Move]) -> int:
    return sum(m.encoded_len for m in play)


def format_transcript(play: Sequence[Move]) -> str:
    """One move per line: ``side copy_index tag payload``."""
    return "\n".join(m.transcript_line() for m in play)


def _alternating(play: Sequence[Move]) -> bool:
    return all(m.side == (OPP if k % 2 == 0 else PLR) for k, m in enumerate(play))


def _flip(move: Move) -> Move:
    return Move(_FLIP[move.side], move.tag, move.payload, move.path)


def _wrap(move: Move, step, flip: bool) -> Move:
    side = _FLIP[move.side] if flip else move.side
    return Move(side, move.tag, move.payload, (step,) + move.path)


def _strip(move: Move, flip: bool) -> Move:
    side = _FLIP[move.side] if flip else move.side
    return Move(side, move.tag, move.payload, move.path[1:])


class ParamGame:
    """Abstract parametrized game descriptor.

    Descriptors are immutable; legality checks and enumerations are pure
    and safe to run concurrently.
    """

    length_bound: PolyExpr

    def legal(self, n: int, play: Sequence[Move]) -> bool:
        """True iff ``play`` is a legal play at parameter ``n``."""
        if not _alternating(play):
            return False
        return self._legal_struct(n, tuple(play))

    def _legal_struct(self, n: int, play: Play) -> bool:
        raise NotImplementedError

    def moves_o(self, n: int) -> list[Move]:
        """Bounded enumeration of opponent moves available at ``n``."""
        raise NotImplementedError

    def moves_p(self, n: int) -> list[Move]:
        """Bounded enumeration of player moves available at ``n``."""
        raise NotImplementedError

    def label(self) -> str:
        raise NotImplementedError

    def __str__(self) -> str:
        return self.label()


def _bitstrings(length: int, alphabet: str = "01") -> list[str]:
    count = len(alphabet) ** length
    if count > _ENUM_LIMIT:
        raise EnumerationTooLargeError(
            f"alphabet of {count} payloads exceeds enumeration bound"
        )
    out = [""]
    for _ in range(length):
        out = [s + c for s in out for c in alphabet]
    return out


@dataclass(frozen=True)
class UnitGame(ParamGame):
    length_bound: PolyExpr = field(default=Const(2), init=False)

    def _legal_struct(self, n: int, play: Play) -> bool:
        if len(play) > 2:
            return False
        if len(play) >= 1 and not (play[0].tag == "?" and play[0].path == ()):
            return False
        if len(play) == 2 and not (play[1].tag == "*" and play[1].path == ()):
            return False
        return True

    def moves_o(self, n: int) -> list[Move]:
        return [Move(OPP, "?")]

    def moves_p(self, n: int) -> list[Move]:
        return [Move(PLR, "*")]

    def label(self) -> str:
        return "unit"


@dataclass(frozen=True)
class _QuestionAnswerGame(ParamGame):
    """Shared shape: one opponent question, one player string answer."""

    def _payload_ok(self, n: int, payload: str) -> bool:
        raise NotImplementedError

    def _legal_struct(self, n: int, play: Play) -> bool:
        if len(play) > 2:
            return False
        if len(play) >= 1 and not (play[0].tag == "?" and play[0].path == ()):
            return False
        if len(play) == 2:
            m = play[1]
            if m.tag != "ans" or m.path != ():
                return False
            return self._payload_ok(n, m.payload)
        return True

    def moves_o(self, n: int) -> list[Move]:
        return [Move(OPP, "?")]

    def answer(self, payload: str) -> Move:
        return Move(PLR, "ans", payload)

    def question(self) -> Move:
        return Move(OPP, "?")


@dataclass(frozen=True)
class BoolGame(_QuestionAnswerGame):
    length_bound: PolyExpr = field(default=Const(3), init=False)

    def _payload_ok(self, n: int, payload: str) -> bool:
        return payload in ("0", "1")

    def moves_p(self, n: int) -> list[Move]:
        return [self.answer("0"), self.answer("1")]

    def label(self) -> str:
        return "bool"


@dataclass(frozen=True)
class StrGame(_QuestionAnswerGame):
    """Answers are bitstrings of length exactly p(n), or at most p(n) when
    ``exact`` is off."""

    p: PolyExpr
    exact: bool = True
    length_bound: PolyExpr = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "length_bound", self.p + const(2))

    def _payload_ok(self, n: int, payload: str) -> bool:
        if any(c not in "01" for c in payload):
            return False
        bound = self.p.eval(n)
        return len(payload) == bound if self.exact else len(payload) <= bound

    def moves_p(self, n: int) -> list[Move]:
        length = self.p.eval(n)
        if self.exact:
            return [self.answer(s) for s in _bitstrings(length)]
        out = []
        for k in range(length + 1):
            out.extend(self.answer(s) for s in _bitstrings(k))
        return out

    def label(self) -> str:
        return f"{'str' if self.exact else 'strle'}({self.p})"


@dataclass(frozen=True)
class TStrGame(_QuestionAnswerGame):
    """Answers are ternary strings over 0/1/_ of length exactly p(n); the
    ``_`` character marks an undefined coordinate of a partial map."""

    p: PolyExpr
    length_bound: PolyExpr = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "length_bound", self.p + const(2))

    def _payload_ok(self, n: int, payload: str) -> bool:
        return len(payload) == self.p.eval(n) and all(c in "01_" for c in payload)

    def moves_p(self, n: int) -> list[Move]:
        return [self.answer(s) for s in _bitstrings(self.p.eval(n), "01_")]

    def label(self) -> str:
        return f"tstr({self.p})"


@dataclass(frozen=True)
class OracleGame(ParamGame):
    """A source of up to p(n) random bits, drawn one question at a time."""

    p: PolyExpr
    length_bound: PolyExpr = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "length_bound", const(3) * self.p)

    def _legal_struct(self, n: int, play: Play) -> bool:
        bound = self.p.eval(n)
        for k, m in enumerate(play):
            if m.path != ():
                return False
            if k % 2 == 0:
                if m.tag != "?":
                    return False
            else:
                if m.tag != "ans" or m.payload not in ("0", "1"):
                    return False
        questions = (len(play) + 1) // 2
        return questions <= bound

    def moves_o(self, n: int) -> list[Move]:
        return [Move(OPP, "?")]

    def moves_p(self, n: int) -> list[Move]:
        return [Move(PLR, "ans", "0"), Move(PLR, "ans", "1")]

    def question(self) -> Move:
        return Move(OPP, "?")

    def answer(self, bit: int | str) -> Move:
        return Move(PLR, "ans", str(bit))

    def label(self) -> str:
        return f"oracle({self.p})"


@dataclass(frozen=True)
class Bang(ParamGame):
    """Up to p(n) copies of the inner game, opened in ascending order."""

    p: PolyExpr
    inner: ParamGame
    length_bound: PolyExpr = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "length_bound", self.p * self.inner.length_bound)

    def _legal_struct(self, n: int, play: Play) -> bool:
        bound = self.p.eval(n)
        seen: list[int] = []
        copies: dict[int, list[Move]] = {}
        for m in play:
            if not m.path or not isinstance(m.path[0], int):
                return False
            i = m.path[0]
            if i < 1 or i > bound:
                return False
            if i not in copies:
                if i != len(seen) + 1:
                    return False
                seen.append(i)
                copies[i] = []
            copies[i].append(_strip(m, flip=False))
        return all(
            self.inner._legal_struct(n, tuple(sub)) and _alternating_local(sub)
            for sub in copies.values()
        )

    def moves_o(self, n: int) -> list[Move]:
        return self._moves(n, self.inner.moves_o(n))

    def moves_p(self, n: int) -> list[Move]:
        return self._moves(n, self.inner.moves_p(n))

    def _moves(self, n: int, inner_moves: list[Move]) -> list[Move]:
        count = self.p.eval(n)
        if count * len(inner_moves) > _ENUM_LIMIT:
            raise EnumerationTooLargeError("replicated alphabet too large")
        return [_wrap(m, i, flip=False) for i in range(1, count + 1) for m in inner_moves]

    def with_copy(self, i: int, move: Move) -> Move:
        return _wrap(move, i, flip=False)

    def label(self) -> str:
        return f"bang({self.p},{self.inner.label()})"


def _alternating_local(play: Sequence[Move]) -> bool:
    # Copy projections inside a Bang must themselves alternate O/P.
    return _alternating(play)


@dataclass(frozen=True)
class Lolli(ParamGame):
    """The functional game: play in ``left`` with sides swapped, or in
    ``right``; global alternation plus legal projections."""

    left: ParamGame
    right: ParamGame
    length_bound: PolyExpr = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self, "length_bound", self.left.length_bound + self.right.length_bound
        )

    def project(self, play: Sequence[Move]) -> tuple[Play, Play] | None:
        lefts, rights = [], []
        for m in play:
            if not m.path:
                return None
            if m.path[0] == "L":
                lefts.append(_strip(m, flip=True))
            elif m.path[0] == "R":
                rights.append(_strip(m, flip=False))
            else:
                return None
        return tuple(lefts), tuple(rights)

    def _legal_struct(self, n: int, play: Play) -> bool:
        split = self.project(play)
        if split is None:
            return False
        lefts, rights = split
        return (
            _alternating(lefts)
            and _alternating(rights)
            and self.left._legal_struct(n, lefts)
            and self.right._legal_struct(n, rights)
        )

    def moves_o(self, n: int) -> list[Move]:
        return [_wrap(m, "L", flip=True) for m in self.left.moves_p(n)] + [
            _wrap(m, "R", flip=False) for m in self.right.moves_o(n)
        ]

    def moves_p(self, n: int) -> list[Move]:
        return [_wrap(m, "L", flip=True) for m in self.left.moves_o(n)] + [
            _wrap(m, "R", flip=False) for m in self.right.moves_p(n)
        ]

    def from_left(self, move: Move) -> Move:
        return _wrap(move, "L", flip=True)

    def from_right(self, move: Move) -> Move:
        return _wrap(move, "R", flip=False)

    def label(self) -> str:
        return f"({self.left.label()} -o {self.right.label()})"


@dataclass(frozen=True)
class Tensor(ParamGame):
    """Interleaving of two games where only the opponent switches sides."""

    left: ParamGame
    right: ParamGame
    length_bound: PolyExpr = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self, "length_bound", self.left.length_bound + self.right.length_bound
        )

    def _legal_struct(self, n: int, play: Play) -> bool:
        lefts, rights = [], []
        for k, m in enumerate(play):
            if not m.path or m.path[0] not in ("L", "R"):
                return False
            if m.side == PLR and k > 0 and play[k - 1].path[0] != m.path[0]:
                return False  # the player never switches components
            (lefts if m.path[0] == "L" else rights).append(_strip(m, flip=False))
        return (
            _alternating(lefts)
            and _alternating(rights)
            and self.left._legal_struct(n, tuple(lefts))
            and self.right._legal_struct(n, tuple(rights))
        )

    def moves_o(self, n: int) -> list[Move]:
        return [_wrap(m, "L", flip=False) for m in self.left.moves_o(n)] + [
            _wrap(m, "R", flip=False) for m in self.right.moves_o(n)
        ]

    def moves_p(self, n: int) -> list[Move]:
        return [_wrap(m, "L", flip=False) for m in self.left.moves_p(n)] + [
            _wrap(m, "R", flip=False) for m in self.right.moves_p(n)
        ]

    def label(self) -> str:
        return f"({self.left.label()} * {self.right.label()})"


# --- Constructor functions (the public vocabulary) ---


def unit_game() -> UnitGame:
    return UnitGame()


def bool_game() -> BoolGame:
    return BoolGame()


def str_game(p: PolyExpr) -> StrGame:
    return StrGame(p, exact=True)


def str_le_game(p: PolyExpr) -> StrGame:
    return StrGame(p, exact=False)


def tstr_game(p: PolyExpr) -> TStrGame:
    return TStrGame(p)


def oracle_game(p: PolyExpr) -> OracleGame:
    return OracleGame(p)


def bang(p: PolyExpr, game: ParamGame) -> Bang:
    return Bang(p, game)


def lolli(left: ParamGame, right: ParamGame) -> Lolli:
    return Lolli(left, right)


def tensor(left: ParamGame, right: ParamGame) -> Tensor:
    return Tensor(left, right)


def sof_game(q: PolyExpr, r: PolyExpr, p: PolyExpr) -> Lolli:
    """Second-order function game: q(n) accesses to an (r(n)-bit -> bool)
    argument, producing a p(n)-bit answer."""
    return lolli(bang(q, lolli(str_game(r), bool_game())), str_game(p))


def linsof_game(q: PolyExpr, p: PolyExpr) -> Lolli:
    """sof with linear-size argument inputs."""
    return sof_game(q, IDENT, p)


def logsof_game(p: PolyExpr) -> Lolli:
    """sof with logarithmic-size argument inputs and linear access budget."""
    return sof_game(IDENT, LG, p)


def enumerate_plays(
    game: ParamGame, n: int, *, max_plays: int = _ENUM_LIMIT
) -> list[Play]:
    """All legal plays at ``n``, including odd-length ones, by BFS.

    Exponential in general; guarded by ``max_plays``.
    """
    plays: list[Play] = [()]
    frontier: list[Play] = [()]
    while frontier:
        nxt: list[Play] = []
        for play in frontier:
            moves = game.moves_o(n) if len(play) % 2 == 0 else game.moves_p(n)
            for m in moves:
                cand = play + (m,)
                if game.legal(n, cand):
                    nxt.append(cand)
            if len(plays) + len(nxt) > max_plays:
                raise EnumerationTooLargeError(
                    f"more than {max_plays} legal plays at n={n}"
                )
        plays.extend(nxt)
        frontier = nxt
    return plays


# --- Game expression parser -------------------------------------------------
#
# Grammar (lowest to highest precedence):
#   game   := tens ('-o' game)?          right associative
#   tens   := atom ('*' atom)*
#   atom   := 'unit' | 'bool' | name '(' args ')' | '(' game ')'
#
# Polynomial arguments reuse the poly syntax; '*' inside parentheses belongs
# to the polynomial, not the tensor.


class _GameParser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, msg: str) -> GameParseError:
        return GameParseError(f"{msg} at position {self.pos} in {self.text!r}")

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def try_literal(self, lit: str) -> bool:
        self.skip_ws()
        if self.text.startswith(lit, self.pos):
            self.pos += len(lit)
            return True
        return False

    def parse_game(self) -> ParamGame:
        left = self.parse_tensor()
        if self.try_literal("-o"):
            return lolli(left, self.parse_game())
        return left

    def parse_tensor(self) -> ParamGame:
        node = self.parse_atom()
        while self.try_literal("*"):
            node = tensor(node, self.parse_atom())
        return node

    def parse_atom(self) -> ParamGame:
        self.skip_ws()
        if self.try_literal("("):
            node = self.parse_game()
            if not self.try_literal(")"):
                raise self.error("missing ')'")
            return node
        name = self._take_name()
        if name == "unit":
            return unit_game()
        if name == "bool":
            return bool_game()
        if name in ("str", "strle", "tstr", "oracle"):
            poly = self._parse_poly_args(1)[0]
            return {
                "str": str_game,
                "strle": str_le_game,
                "tstr": tstr_game,
                "oracle": oracle_game,
            }[name](poly)
        if name == "bang":
            if not self.try_literal("("):
                raise self.error("bang expects '(p, G)'")
            poly = self._scan_poly_until(",")
            inner = self.parse_game()
            if not self.try_literal(")"):
                raise self.error("missing ')' after bang")
            return bang(poly, inner)
        raise self.error(f"unknown game {name!r}")

    def _take_name(self) -> str:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isalpha():
            self.pos += 1
        if start == self.pos:
            raise self.error("expected a game name")
        return self.text[start : self.pos]

    def _parse_poly_args(self, count: int) -> list[PolyExpr]:
        if not self.try_literal("("):
            raise self.error("expected '('")
        args = []
        for k in range(count):
            args.append(self._scan_poly_until("," if k + 1 < count else ")"))
        return args

    def _scan_poly_until(self, closer: str) -> PolyExpr:
        depth = 0
        start = self.pos
        while self.pos < len(self.text):
            c = self.text[self.pos]
            if c == "(":
                depth += 1
            elif c == ")" and depth > 0:
                depth -= 1
            elif depth == 0 and c == closer:
                chunk = self.text[start : self.pos]
                self.pos += 1
                try:
                    return parse_poly(chunk)
                except PolyParseError as exc:
                    raise GameParseError(str(exc)) from exc
            self.pos += 1
        raise self.error(f"missing {closer!r}")


def parse_game(text: str) -> ParamGame:
    """Parse textual game expressions like ``bang(id,bool) -o str(id)``."""
    parser = _GameParser(text)
    node = parser.parse_game()
    parser.skip_ws()
    if parser.pos != len(text):
        raise parser.error("trailing text after game expression")
    return node
