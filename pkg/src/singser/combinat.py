"""Perfect matchings, congruence classes and partitions refining them.

Indices are 1-based throughout, so a matching of ``k = 4`` items looks like
``((1, 2), (3, 4))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterator, Sequence

from .errors import DomainError


def double_factorial_odd(n: int) -> int:
    """``(n - 1)!!`` for even ``n >= 0``, i.e. the number of perfect matchings."""
    if n % 2:
        return 0
    return math.prod(range(1, n, 2))


@dataclass(frozen=True)
class Matching:
    """A perfect matching of ``{1..k}`` as sorted pairs ``(i, j)``, ``i < j``."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        seen = [x for pr in self.pairs for x in pr]
        if any(i >= j for i, j in self.pairs):
            raise DomainError(f"pairs must satisfy i < j: {self.pairs}")
        if sorted(seen) != list(range(1, len(seen) + 1)):
            raise DomainError(f"pairs do not cover 1..k exactly once: {self.pairs}")

    @property
    def k(self) -> int:
        return 2 * len(self.pairs)


def _matchings(items: tuple[int, ...]) -> Iterator[tuple[tuple[int, int], ...]]:
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for idx, partner in enumerate(rest):
        remaining = rest[:idx] + rest[idx + 1 :]
        for tail in _matchings(remaining):
            yield ((first, partner),) + tail


def perfect_matchings(k: int) -> Iterator[Matching]:
    """All perfect matchings of ``{1..k}`` in canonical order.

    The smallest unmatched index is paired with each remaining candidate in
    turn, so no matching is produced twice.  Odd ``k`` yields nothing.
    """
    if k < 0:
        raise DomainError("k must be >= 0")
    if k % 2:
        return
    for pairs in _matchings(tuple(range(1, k + 1))):
        yield Matching(pairs)


@dataclass(frozen=True)
class CongruenceClasses:
    """Index sets ``C_l = {i : c_i = l mod r}`` for a class vector ``c``.

    Attributes:
        r: The modulus.
        residues: ``c_i mod r`` for ``i = 1..k``.
    """

    r: int
    residues: tuple[int, ...]

    @classmethod
    def from_vector(cls, c: Sequence[int], r: int) -> "CongruenceClasses":
        if r < 1:
            raise DomainError("r must be >= 1")
        return cls(r, tuple(int(x) % r for x in c))

    @property
    def k(self) -> int:
        return len(self.residues)

    @property
    def classes(self) -> dict[int, tuple[int, ...]]:
        """Map residue ``l`` to the sorted 1-based indices in ``C_l`` (non-empty ones only)."""
        out: dict[int, list[int]] = {}
        for i, l in enumerate(self.residues, start=1):
            out.setdefault(l, []).append(i)
        return {l: tuple(ix) for l, ix in sorted(out.items())}

    def same_class(self, i: int, j: int) -> bool:
        return self.residues[i - 1] == self.residues[j - 1]


def count_equal_pairings(c: Sequence[int], r: int | None = None) -> int:
    """Number of perfect matchings pairing only equal classes.

    Equals ``prod_l (|C_l| - 1)!!`` when every class has even size, else 0.

    Args:
        c: Class labels ``c_1..c_k``.
        r: Optional modulus; labels are compared mod ``r`` when given.
    """
    cc = CongruenceClasses.from_vector(c, r) if r else CongruenceClasses(0, tuple(c))
    return math.prod(double_factorial_odd(len(ix)) for ix in cc.classes.values())


@dataclass(frozen=True)
class RefiningPartition:
    """Partition of ``{1..k}`` into doubletons and singletons inside classes.

    Attributes:
        doubletons: Sorted pairs ``(i, j)``.
        singletons: Sorted remaining indices.
        class_of: Residue class of each doubleton, in the same order.
    """

    doubletons: tuple[tuple[int, int], ...]
    singletons: tuple[int, ...]
    class_of: tuple[int, ...]

    @property
    def parts(self) -> tuple[tuple[int, ...], ...]:
        return self.doubletons + tuple((s,) for s in self.singletons)

    @property
    def j(self) -> int:
        return len(self.doubletons)

    def check(self, cc: CongruenceClasses) -> None:
        """Raise :class:`DomainError` unless the partition refines ``cc``."""
        flat = sorted([x for d in self.doubletons for x in d] + list(self.singletons))
        if flat != list(range(1, cc.k + 1)):
            raise DomainError("parts do not partition 1..k")
        for (a, b), l in zip(self.doubletons, self.class_of):
            if not (a < b and cc.residues[a - 1] == l == cc.residues[b - 1]):
                raise DomainError(f"doubleton {(a, b)} is not inside class {l}")


def refining_partitions(cc: CongruenceClasses, j: int) -> Iterator[RefiningPartition]:
    """Partitions with exactly ``j`` doubletons, each inside a single class.

    Doubletons are enumerated as increasing ``j``-combinations of the
    admissible pairs that are mutually disjoint, which yields each partition
    exactly once.
    """
    k = cc.k
    if not 0 <= j <= k // 2:
        raise DomainError(f"need 0 <= j <= k/2, got j={j}, k={k}")
    admissible = [(a, b) for a, b in combinations(range(1, k + 1), 2) if cc.same_class(a, b)]
    for ds in combinations(admissible, j):
        used = [x for d in ds for x in d]
        if len(set(used)) != len(used):
            continue
        singles = tuple(i for i in range(1, k + 1) if i not in used)
        yield RefiningPartition(ds, singles, tuple(cc.residues[a - 1] for a, _ in ds))


def count_refining_partitions(cc: CongruenceClasses, j: int) -> int:
    """Closed-form count of :func:`refining_partitions` output.

    Choosing ``j_l`` doubletons inside a class of size ``n`` can be done in
    ``n! / ((n - 2 j_l)! j_l! 2**j_l)`` ways; the total sums over splits of ``j``.
    """
    sizes = [len(ix) for ix in cc.classes.values()]
    ways = [1]  # ways[t] = number of choices using t doubletons so far
    for n in sizes:
        per = [math.factorial(n) // (math.factorial(n - 2 * t) * math.factorial(t) * 2**t) for t in range(n // 2 + 1)]
        new = [0] * (len(ways) + len(per) - 1)
        for a, wa in enumerate(ways):
            for b, wb in enumerate(per):
                new[a + b] += wa * wb
        ways = new
    return ways[j] if j < len(ways) else 0
