"""Variance and influence of boolean functions under semi-uniform
distributions, decision trees, Monte-Carlo estimators, and the
influential-coordinate fixing loop.

Points of ``{0,1}^N`` are Python ints under the MSB-first convention of
:mod:`paramgame.util`: coordinate ``j`` (1-indexed) of ``x`` is bit
``N - j``.  Exact quantities are :class:`fractions.Fraction`; floats only
appear inside sampling estimators.

Decision trees are a verification device: the fixing loop consumes only a
query-counted oracle, and trees appear in corpora where exact checks are
enumerable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    EnumerationTooLargeError,
    IterationCapError,
    NoInfluentialFoundError,
)
from .util import coord_mask, derive_seed, get_coord

__all__ = [
    "PartialAssignment",
    "SemiUniformDist",
    "DecisionTree",
    "Leaf",
    "Node",
    "parse_tree",
    "format_tree",
    "random_tree",
    "BoolFunOracle",
    "TreeOracle",
    "CallableOracle",
    "BitView",
    "RandomStream",
    "variance_exact",
    "influence_exact",
    "avg_query_complexity",
    "estimate_var",
    "estimate_inf",
    "sample_count",
    "algorithm_a",
]

_ENUM_FREE_LIMIT = 20


# --- partial assignments and semi-uniform distributions ---------------------


@dataclass(frozen=True)
class PartialAssignment:
    """A partial fixing of coordinates: a map from a subset of [N] to bits."""

    n_bits: int
    fixed: tuple = ()  # sorted ((j, b), ...)

    @staticmethod
    def empty(n_bits: int) -> "PartialAssignment":
        return PartialAssignment(n_bits)

    @staticmethod
    def of(n_bits: int, mapping: dict) -> "PartialAssignment":
        items = tuple(sorted((int(j), int(b)) for j, b in mapping.items()))
        pa = PartialAssignment(n_bits, items)
        pa._validate()
        return pa

    def _validate(self) -> None:
        seen = set()
        for j, b in self.fixed:
            if not 1 <= j <= self.n_bits:
                raise ValueError(f"coordinate {j} outside [1, {self.n_bits}]")
            if b not in (0, 1):
                raise ValueError(f"bit must be 0/1, got {b}")
            if j in seen:
                raise ValueError(f"coordinate {j} fixed twice")
            seen.add(j)

    @property
    def dom(self) -> frozenset:
        return frozenset(j for j, _ in self.fixed)

    @property
    def size(self) -> int:
        return len(self.fixed)

    def get(self, j: int) -> int | None:
        for jj, b in self.fixed:
            if jj == j:
                return b
        return None

    def with_coord(self, j: int, b: int) -> "PartialAssignment":
        if self.get(j) is not None:
            raise ValueError(f"coordinate {j} already fixed")
        return PartialAssignment.of(self.n_bits, {**dict(self.fixed), j: b})

    def masks(self) -> tuple[int, int]:
        """(fixed_mask, fixed_bits) over the int encoding."""
        mask = value = 0
        for j, b in self.fixed:
            m = coord_mask(j, self.n_bits)
            mask |= m
            if b:
                value |= m
        return mask, value

    def consistent(self, x: int) -> bool:
        mask, value = self.masks()
        return (x & mask) == value

    def ternary_payload(self, width: int | None = None) -> str:
        """Encoding as a ternary string: position j-1 holds the fixed bit
        or '_' when coordinate j is free."""
        width = self.n_bits if width is None else width
        chars = ["_"] * width
        for j, b in self.fixed:
            if j <= width:
                chars[j - 1] = str(b)
        return "".join(chars)

    @staticmethod
    def from_ternary(payload: str) -> "PartialAssignment":
        mapping = {
            j + 1: int(c) for j, c in enumerate(payload) if c in "01"
        }
        return PartialAssignment.of(len(payload), mapping)


@dataclass(frozen=True)
class SemiUniformDist:
    """Uniform over the points of {0,1}^N consistent with a partial fixing."""

    base: PartialAssignment

    @property
    def n_bits(self) -> int:
        return self.base.n_bits

    @property
    def free_count(self) -> int:
        return self.base.n_bits - self.base.size

    @staticmethod
    def uniform(n_bits: int) -> "SemiUniformDist":
        return SemiUniformDist(PartialAssignment.empty(n_bits))

    def mass(self, x: int) -> Fraction:
        if not self.base.consistent(x):
            return Fraction(0)
        return Fraction(1, 1 << self.free_count)

    def condition(self, j: int, b: int) -> "SemiUniformDist":
        return SemiUniformDist(self.base.with_coord(j, b))

    def free_coords(self) -> list[int]:
        dom = self.base.dom
        return [j for j in range(1, self.n_bits + 1) if j not in dom]

    def support(self) -> Iterable[int]:
        """Enumerate the support; bounded by the free-coordinate limit."""
        if self.free_count > _ENUM_FREE_LIMIT:
            raise EnumerationTooLargeError(
                f"2^{self.free_count} points exceed the enumeration bound"
            )
        mask, value = self.base.masks()
        free_masks = [coord_mask(j, self.n_bits) for j in self.free_coords()]
        for pattern in range(1 << len(free_masks)):
            x = value
            for k, fm in enumerate(free_masks):
                if (pattern >> k) & 1:
                    x |= fm
            yield x

    def sample(self, m: int, rng):
        """m independent points.  With a bulk generator (RandomStream) and
        N <= 64 this is a numpy uint64 array; otherwise a list of ints.
        Tape-backed sources only need a ``bits`` method; each point draws
        all N bits and masks the fixed ones."""
        mask, value = self.base.masks()
        generator = getattr(rng, "generator", None)
        if generator is not None and self.n_bits <= 64:
            raw = np.frombuffer(generator.bytes(8 * m), dtype=np.uint64).copy()
            free = np.uint64(((1 << self.n_bits) - 1) & ~mask)
            return (raw & free) | np.uint64(value)
        free = ((1 << self.n_bits) - 1) & ~mask
        if generator is not None:
            getrandbits = rng.pyrandom.getrandbits
            return [(getrandbits(self.n_bits) & free) | value for _ in range(m)]
        return [(rng.bits(self.n_bits) & free) | value for _ in range(m)]


# --- decision trees -----------------------------------------------------------


@dataclass(frozen=True)
class Leaf:
    bit: int


@dataclass(frozen=True)
class Node:
    index: int
    low: "Leaf | Node"  # branch for coordinate value 0
    high: "Leaf | Node"


@dataclass(frozen=True)
class DecisionTree:
    """An adaptive query model for one boolean function on {0,1}^N.

    Every root-to-leaf path queries distinct coordinates; the represented
    function is whatever the leaves say.
    """

    root: Leaf | Node
    n_bits: int

    def __post_init__(self):
        self._check(self.root, set())

    def _check(self, node, path: set) -> None:
        if isinstance(node, Leaf):
            if node.bit not in (0, 1):
                raise ValueError("leaf labels must be bits")
            return
        if not 1 <= node.index <= self.n_bits:
            raise ValueError(f"index {node.index} outside [1, {self.n_bits}]")
        if node.index in path:
            raise ValueError(f"index {node.index} repeated along a path")
        path.add(node.index)
        self._check(node.low, path)
        self._check(node.high, path)
        path.remove(node.index)

    def eval(self, x: int) -> int:
        node = self.root
        while isinstance(node, Node):
            node = node.high if get_coord(x, node.index, self.n_bits) else node.low
        return node.bit

    def queried(self, x: int) -> list[int]:
        """Indices queried on input x, in order."""
        node = self.root
        out = []
        while isinstance(node, Node):
            out.append(node.index)
            node = node.high if get_coord(x, node.index, self.n_bits) else node.low
        return out

    def depth(self) -> int:
        def go(node):
            if isinstance(node, Leaf):
                return 0
            return 1 + max(go(node.low), go(node.high))

        return go(self.root)

    def relevant(self) -> list[int]:
        out: set[int] = set()

        def go(node):
            if isinstance(node, Node):
                out.add(node.index)
                go(node.low)
                go(node.high)

        go(self.root)
        return sorted(out)

    def prob_one(self, dist: SemiUniformDist) -> Fraction:
        """Exact Pr[F(x) = 1] for x from the distribution, by weighting
        root-to-leaf paths (no enumeration bound)."""

        def go(node, weight: Fraction) -> Fraction:
            if isinstance(node, Leaf):
                return weight if node.bit else Fraction(0)
            fixed = dist.base.get(node.index)
            if fixed is not None:
                return go(node.high if fixed else node.low, weight)
            return go(node.low, weight / 2) + go(node.high, weight / 2)

        return go(self.root, Fraction(1))

    def variance(self, dist: SemiUniformDist) -> Fraction:
        """Exact Pr[F(x) != F(y)] for independent x, y from the
        distribution: 2 p (1 - p)."""
        p = self.prob_one(dist)
        return 2 * p * (1 - p)

    def compile(self) -> tuple[list[int], np.ndarray]:
        """(relevant coordinates, truth table over them) for batch eval."""
        rel = self.relevant()
        pos = {j: k for k, j in enumerate(rel)}
        table = np.zeros(max(1, 1 << len(rel)), dtype=np.uint8)
        for idx in range(len(table)):
            x = 0
            for j, k in pos.items():
                if (idx >> k) & 1:
                    x |= coord_mask(j, self.n_bits)
            table[idx] = self.eval(x)
        return rel, table


def format_tree(tree: DecisionTree) -> str:
    def go(node):
        if isinstance(node, Leaf):
            return f"leaf {node.bit}"
        return f"node {node.index} ({go(node.low)}) ({go(node.high)})"

    return go(tree.root)


def parse_tree(text: str, n_bits: int) -> DecisionTree:
    """Parse the nested text form ``node i (t0) (t1)`` / ``leaf b``."""
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    pos = 0

    def take(expected: str | None = None) -> str:
        nonlocal pos
        if pos >= len(tokens):
            raise ValueError(f"unexpected end of tree text in {text!r}")
        tok = tokens[pos]
        pos += 1
        if expected is not None and tok != expected:
            raise ValueError(f"expected {expected!r}, got {tok!r}")
        return tok

    def node():
        tok = take()
        if tok == "leaf":
            return Leaf(int(take()))
        if tok == "node":
            index = int(take())
            take("(")
            low = node()
            take(")")
            take("(")
            high = node()
            take(")")
            return Node(index, low, high)
        raise ValueError(f"unexpected token {tok!r} in tree text")

    root = node()
    if pos != len(tokens):
        raise ValueError(f"trailing tokens in tree text {text!r}")
    return DecisionTree(root, n_bits)


def random_tree(n_bits: int, depth: int, rng, leaf_prob: float = 0.25) -> DecisionTree:
    """A random decision tree of depth <= depth with distinct indices on
    each path.  ``rng`` is a random.Random."""

    def go(available: list[int], budget: int):
        if budget == 0 or not available or rng.random() < leaf_prob:
            return Leaf(rng.getrandbits(1))
        index = available[rng.randrange(len(available))]
        rest = [j for j in available if j != index]
        return Node(index, go(rest, budget - 1), go(rest, budget - 1))

    return DecisionTree(go(list(range(1, n_bits + 1)), depth), n_bits)


def parity_tree(n_bits: int) -> DecisionTree:
    """The full decision tree computing the parity of all coordinates."""

    def go(j: int, acc: int):
        if j > n_bits:
            return Leaf(acc)
        return Node(j, go(j + 1, acc), go(j + 1, acc ^ 1))

    return DecisionTree(go(1, 0), n_bits)


# --- oracles -------------------------------------------------------------------


class BoolFunOracle:
    """Query-counted black-box access to F: {0,1}^N -> {0,1}^L.

    Outputs are L-bit ints, MSB-first (bit t of the output string is
    ``(out >> (L - t)) & 1``).  ``query_count`` increments by one per point
    regardless of the access path.
    """

    def __init__(self, n_bits: int, out_bits: int):
        self.n_bits = n_bits
        self.out_bits = out_bits
        self.query_count = 0

    def _eval(self, x: int) -> int:
        raise NotImplementedError

    def query(self, x: int) -> int:
        self.query_count += 1
        return self._eval(x)

    def query_batch(self, xs) -> list[int]:
        self.query_count += len(xs)
        return [self._eval(int(x)) for x in xs]

    def query_bit_batch(self, xs, t: int):
        """Batch of single output bits; subclasses may vectorize."""
        shift = self.out_bits - t
        return [(v >> shift) & 1 for v in self.query_batch(xs)]


class TreeOracle(BoolFunOracle):
    """Oracle backed by one decision tree per output bit; batch queries are
    vectorized over packed uint64 points when N <= 64."""

    def __init__(self, trees: Sequence[DecisionTree]):
        if not trees:
            raise ValueError("need at least one tree")
        n_bits = trees[0].n_bits
        if any(t.n_bits != n_bits for t in trees):
            raise ValueError("trees disagree on N")
        super().__init__(n_bits, len(trees))
        self.trees = list(trees)
        self._compiled = [t.compile() for t in trees]

    def _eval(self, x: int) -> int:
        out = 0
        for tree in self.trees:
            out = (out << 1) | tree.eval(x)
        return out

    def query_bit_batch(self, xs, t: int):
        self.query_count += len(xs)
        rel, table = self._compiled[t - 1]
        if isinstance(xs, np.ndarray):
            idx = np.zeros(len(xs), dtype=np.uint64)
            one = np.uint64(1)
            for k, j in enumerate(rel):
                idx |= ((xs >> np.uint64(self.n_bits - j)) & one) << np.uint64(k)
            return table[idx.astype(np.intp)]
        tree = self.trees[t - 1]
        return [tree.eval(x) for x in xs]


class CallableOracle(BoolFunOracle):
    def __init__(self, fn, n_bits: int, out_bits: int):
        super().__init__(n_bits, out_bits)
        self.fn = fn

    def _eval(self, x: int) -> int:
        return self.fn(x)


class BitView:
    """Single output bit of a multi-bit oracle, as its own oracle."""

    def __init__(self, oracle: BoolFunOracle, t: int):
        if not 1 <= t <= oracle.out_bits:
            raise ValueError(f"bit index {t} outside [1, {oracle.out_bits}]")
        self.oracle = oracle
        self.t = t
        self.n_bits = oracle.n_bits

    def query(self, x: int) -> int:
        shift = self.oracle.out_bits - self.t
        return (self.oracle.query(x) >> shift) & 1

    def query_batch(self, xs):
        return self.oracle.query_bit_batch(xs, self.t)


# --- randomness ----------------------------------------------------------------


class RandomStream:
    """Deterministic randomness for experiments: a numpy generator for bulk
    sampling plus a python generator for bit-level draws, both derived from
    the same labels."""

    def __init__(self, *seed_parts):
        import random as _random

        seed = derive_seed(*seed_parts)
        self.generator = np.random.Generator(np.random.PCG64(seed))
        self.pyrandom = _random.Random(seed ^ 0x9E3779B97F4A7C15)

    def bit(self) -> int:
        return self.pyrandom.getrandbits(1)

    def bits(self, k: int) -> int:
        return self.pyrandom.getrandbits(k) if k else 0

    def uniform(self, m: int) -> int:
        return self.pyrandom.randrange(m)


# --- exact quantities ------------------------------------------------------------


def variance_exact(dist: SemiUniformDist, f_t) -> Fraction:
    """Exact Pr[F(x) != F(y)] over independent x, y from the distribution,
    by enumerating the free coordinates (bounded)."""
    total = 0
    ones = 0
    for x in dist.support():
        total += 1
        ones += f_t.query(x)
    p = Fraction(ones, total)
    return 2 * p * (1 - p)


def influence_exact(dist: SemiUniformDist, j: int, f_t) -> Fraction:
    """Exact Pr[F(x) != F(x ^ e_j)] for x from the distribution."""
    mask = coord_mask(j, dist.n_bits)
    total = 0
    flips = 0
    for x in dist.support():
        total += 1
        if f_t.query(x) != f_t.query(x ^ mask):
            flips += 1
    return Fraction(flips, total)


def avg_query_complexity(tree: DecisionTree, dist: SemiUniformDist, outside: frozenset | set) -> Fraction:
    """Expected number of coordinates the tree queries outside the given
    set, for inputs from the distribution.  Computed by exact path
    weighting."""

    def go(node, weight: Fraction) -> Fraction:
        if isinstance(node, Leaf):
            return Fraction(0)
        here = weight if node.index not in outside else Fraction(0)
        fixed = dist.base.get(node.index)
        if fixed is not None:
            return here + go(node.high if fixed else node.low, weight)
        return here + go(node.low, weight / 2) + go(node.high, weight / 2)

    return go(tree.root, Fraction(1))


# --- estimators -------------------------------------------------------------------


def sample_count(acc: float, gamma: float) -> int:
    """Independent draws sufficient for +-acc accuracy with failure
    probability gamma, by the standard exponential tail bound."""
    if not (0 < acc < 1 and 0 < gamma < 1):
        raise ValueError("accuracy and confidence must lie in (0, 1)")
    return math.ceil(math.log(2.0 / gamma) / (2.0 * acc * acc))


def _disagreement(a, b) -> float:
    if isinstance(a, np.ndarray):
        return float(np.mean(a != b))
    hits = sum(1 for u, v in zip(a, b) if u != v)
    return hits / len(a)


def estimate_var(dist, f_t, acc: float, gamma: float, rng: RandomStream, *, sample_cap: int | None = None) -> float:
    """Sampled variance: fraction of disagreeing independent pairs."""
    m = sample_count(acc, gamma)
    if sample_cap is not None:
        m = min(m, sample_cap)
    xs = dist.sample(m, rng)
    ys = dist.sample(m, rng)
    return _disagreement(f_t.query_batch(xs), f_t.query_batch(ys))


def estimate_inf(dist, j: int, f_t, acc: float, gamma: float, rng: RandomStream, *, sample_cap: int | None = None) -> float:
    """Sampled influence of coordinate j: fraction of points whose value
    changes when the coordinate flips."""
    m = sample_count(acc, gamma)
    if sample_cap is not None:
        m = min(m, sample_cap)
    xs = dist.sample(m, rng)
    mask = coord_mask(j, dist.n_bits)
    if isinstance(xs, np.ndarray):
        flipped = xs ^ np.uint64(mask)
    else:
        flipped = [x ^ mask for x in xs]
    return _disagreement(f_t.query_batch(xs), f_t.query_batch(flipped))


# --- the fixing loop ----------------------------------------------------------------


def algorithm_a(
    oracle: BoolFunOracle,
    q: int,
    eps: float,
    delta: float,
    rng: RandomStream,
    *,
    sample_cap: int | None = None,
    trace: list | None = None,
) -> PartialAssignment:
    """Fix coordinates until every output bit has small variance.

    For an oracle whose output bits are each computable by a decision tree
    of depth <= q (the caller's obligation), returns a partial assignment g
    with, with probability at least 1 - delta, exact variance <= eps for
    every output bit under the semi-uniform distribution of g.

    The loop estimates all L variances to accuracy eps/3; stops when all
    estimates are <= (2/3) eps; picks the lowest output bit with estimate
    >= 2 eps / 3; estimates all N influences for it to accuracy
    eps / (10 q); and fixes the lowest unfixed coordinate with estimated
    influence >= 0.2 eps / q to a fresh random bit.  Per-estimate
    confidence gamma and the iteration cap are sized so a union bound
    covers every estimate made within the cap.

    ``sample_cap`` truncates per-estimate sample counts; see the module
    docs for when the full counts are impractical.  Raises
    :class:`IterationCapError` or :class:`NoInfluentialFoundError` on the
    (probability-budgeted) failure paths.
    """
    n_bits, out_bits = oracle.n_bits, oracle.out_bits
    if not (0 < eps < 1 and 0 < delta < 1):
        raise ValueError("eps and delta must lie in (0, 1)")
    if q < 1:
        raise ValueError("decision-tree depth bound must be >= 1")

    gamma = delta / (n_bits * out_bits * q * q / (delta * eps))
    max_fixes = math.ceil(math.ceil(10 * out_bits * q * q / eps) / delta)
    inf_acc = eps / (10 * q)
    inf_threshold = 0.2 * eps / q

    g = PartialAssignment.empty(n_bits)
    for _ in range(max_fixes + 1):
        dist = SemiUniformDist(g)
        variances = [
            estimate_var(dist, BitView(oracle, t), eps / 3, gamma, rng, sample_cap=sample_cap)
            for t in range(1, out_bits + 1)
        ]
        if trace is not None:
            trace.append({"dom": g.size, "variances": variances})
        if all(v <= (2.0 / 3.0) * eps for v in variances):
            return g
        if g.size >= max_fixes:
            break
        t_up = min(t for t, v in enumerate(variances, start=1) if v >= (2.0 / 3.0) * eps)
        view = BitView(oracle, t_up)
        chosen = None
        for _attempt in range(2):
            influences = [
                estimate_inf(dist, j, view, inf_acc, gamma, rng, sample_cap=sample_cap)
                for j in range(1, n_bits + 1)
            ]
            eligible = [
                j
                for j, est in enumerate(influences, start=1)
                if est >= inf_threshold and g.get(j) is None
            ]
            if eligible:
                chosen = min(eligible)
                break
        if chosen is None:
            raise NoInfluentialFoundError(
                f"no coordinate reached influence {inf_threshold:.3g} for bit {t_up}"
            )
        g = g.with_coord(chosen, rng.bit())
    raise IterationCapError(f"exceeded {max_fixes} coordinate fixings")
