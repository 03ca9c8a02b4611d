"""q-digest over the integer range [1, U].

Buckets are nodes of the complete binary tree over [1, U]. Internally a
node is addressed by its heap number (root 1, children 2k and 2k+1), which
is a bijection with the (level, index) pairs exposed through :class:`Bucket`:
level 0 holds the singletons, level log2(U) the root, and the bucket with
0-based ``index`` at ``level`` covers ``[index * 2**level + 1, (index + 1) * 2**level]``.

Compression merges a bucket and its sibling into their parent whenever the
three counts together fall strictly below ``floor(n * rho / log2 U)``.
Merging is repeated until no triple qualifies, so after every compression
both digest invariants hold:

* every non-leaf bucket has ``count <= threshold``;
* every non-root bucket has ``count + count(parent) + count(sibling) >= threshold``.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Iterable

from .core import DomainError, EmptySummaryError, is_power_of_two

MergeHook = Callable[[int, int, int], None]


@dataclass(frozen=True, order=True)
class Bucket:
    level: int
    index: int
    lo: int
    hi: int
    count: int

    @property
    def width(self) -> int:
        return self.hi - self.lo + 1


class QDigest:
    """Deterministic quantile summary with rank error at most ``rho * n``.

    ``cadence="insert"`` restores the invariants after every insert;
    ``cadence="batched"`` compresses every ``ceil(1 / (2 rho))`` inserts.
    ``on_merge(parent, child, sibling)`` is invoked (with heap node ids)
    before the children are folded into the parent, letting a caller keep
    per-bucket payloads in step with the tree.
    """

    def __init__(self, rho: float, U: int, *, cadence: str = "insert",
                 on_merge: MergeHook | None = None):
        if not 0.0 < rho < 1.0:
            raise DomainError(f"rho must lie in (0, 1), got {rho}")
        if U < 2 or not is_power_of_two(U):
            raise DomainError(f"U must be a power of two >= 2, got {U}")
        if cadence not in ("insert", "batched"):
            raise DomainError(f"unknown compression cadence {cadence!r}")
        self.rho = float(rho)
        self.U = int(U)
        self.log_u = U.bit_length() - 1
        self.cadence = cadence
        self.batch = math.ceil(1.0 / (2.0 * rho))
        self.on_merge = on_merge
        self.n = 0
        self.counts: dict[int, int] = {}
        self.merges = 0
        self._last_threshold = 0
        self._since_compress = 0

    # -- tree geometry -------------------------------------------------------

    def leaf(self, value: int) -> int:
        return self.U + value - 1

    def level(self, node: int) -> int:
        return self.log_u - (node.bit_length() - 1)

    def bounds(self, node: int) -> tuple[int, int]:
        level = self.log_u - (node.bit_length() - 1)
        index = node - (1 << (self.log_u - level))
        return (index << level) + 1, (index + 1) << level

    def node(self, level: int, index: int) -> int:
        if not 0 <= level <= self.log_u or not 0 <= index < (self.U >> level):
            raise DomainError(f"no bucket at level {level}, index {index}")
        return (1 << (self.log_u - level)) + index

    def bucket(self, node: int) -> Bucket:
        level = self.level(node)
        lo, hi = self.bounds(node)
        return Bucket(level, node - (1 << (self.log_u - level)), lo, hi, self.counts.get(node, 0))

    # -- updates -------------------------------------------------------------

    @property
    def threshold(self) -> int:
        return math.floor(self.n * self.rho / self.log_u)

    def add(self, value: int) -> tuple[int, bool]:
        """Count ``value`` in its leaf without compressing; returns (leaf, created)."""
        if not 1 <= value <= self.U:
            raise DomainError(f"value {value} outside [1, {self.U}]")
        node = self.U + int(value) - 1
        counts = self.counts
        c = counts.get(node)
        counts[node] = 1 if c is None else c + 1
        self.n += 1
        return node, c is None

    def restore(self, node: int, created: bool) -> None:
        """Re-establish the invariants after :meth:`add` touched ``node``.

        A grown threshold can make any triple mergeable, so it triggers a
        full sweep. Otherwise only a freshly created leaf can have broken
        anything, and the check starts from it.
        """
        if self.cadence == "batched":
            self._since_compress += 1
            if self._since_compress >= self.batch:
                self.compress()
            return
        t = math.floor(self.n * self.rho / self.log_u)
        if t != self._last_threshold:
            self.compress()
        elif created and t > 0:
            _, pending = self.climb(node, t)
            if pending:
                self._sweep(pending, t)

    def threshold_changed(self) -> bool:
        return math.floor(self.n * self.rho / self.log_u) != self._last_threshold

    def climb(self, node: int, t: int, payload_free: bool = False) -> tuple[int, list[int]]:
        """Merge upward from a fresh leaf while its triple is below ``t``.

        Only the triple on the new leaf's root path can qualify, and each merge
        moves the candidate one level up. Returns the node now holding the new
        leaf's count, plus nodes that still need a general sweep (non-empty
        only when a merge orphaned grandchildren).

        With ``payload_free`` the caller has not attached a payload to the new
        leaf yet, so merges that only relocate it (no sibling, no parent) are
        not reported to ``on_merge``; the caller attaches the payload to the
        returned node afterwards.
        """
        counts = self.counts
        hook = self.on_merge
        leaf_base = self.U
        c = counts[node]
        while node != 1:
            sib = node ^ 1
            par = node >> 1
            cs = counts.get(sib, 0)
            cp = counts.get(par, 0)
            if c + cs + cp >= t:
                break
            if hook is not None and not (payload_free and not cs and not cp):
                hook(par, node, sib)
                payload_free = False
            c = counts[par] = cp + c + cs
            del counts[node]
            self.merges += 1
            node = par
            if cs:
                del counts[sib]
                if sib < leaf_base:
                    orphans = [x for x in (2 * sib, 2 * sib + 1) if x in counts]
                    if orphans:
                        return node, [node, *orphans]
        return node, []

    def insert(self, value: int) -> None:
        node, created = self.add(value)
        self.restore(node, created)

    def extend(self, values: Iterable[int]) -> None:
        for v in values:
            self.insert(v)

    def compress(self) -> None:
        self._since_compress = 0
        t = self.threshold
        self._last_threshold = t
        if t > 0 and self.counts:
            self._sweep(self.counts.keys(), t)

    def _sweep(self, start: Iterable[int], t: int) -> None:
        # Deeper nodes have larger heap ids, so a max-heap visits bottom-up.
        counts = self.counts
        hook = self.on_merge
        leaf_base = self.U
        heap = [-x for x in start]
        heapq.heapify(heap)
        while heap:
            node = -heapq.heappop(heap)
            if node == 1:
                continue
            c = counts.get(node)
            if c is None:
                continue
            sib = node ^ 1
            par = node >> 1
            cs = counts.get(sib, 0)
            cp = counts.get(par, 0)
            if c + cs + cp >= t:
                continue
            if hook is not None:
                hook(par, node, sib)
            counts[par] = cp + c + cs
            del counts[node]
            if cs:
                del counts[sib]
            self.merges += 1
            heapq.heappush(heap, -par)
            if node < leaf_base:
                # orphaned grandchildren: their triples just lost a parent count
                for x in (2 * node, 2 * node + 1, 2 * sib, 2 * sib + 1):
                    if x in counts:
                        heapq.heappush(heap, -x)

    # -- queries -------------------------------------------------------------

    def post_order(self) -> list[int]:
        """Present nodes in post-order: by right edge, then bottom-up."""
        log_u = self.log_u

        def key(node: int) -> tuple[int, int]:
            level = log_u - (node.bit_length() - 1)
            index = node - (1 << (log_u - level))
            return ((index + 1) << level, level)

        return sorted(self.counts, key=key)

    def quantile(self, phi: float) -> int:
        """Right edge of the bucket where the post-order running count reaches ceil(phi*n)."""
        if self.n < 1:
            raise EmptySummaryError("quantile of an empty q-digest")
        if not 0.0 < phi <= 1.0:
            raise DomainError(f"phi must lie in (0, 1], got {phi}")
        target = min(self.n, max(1, math.ceil(round(phi * self.n, 9))))
        return self.value_at_rank(target)

    def value_at_rank(self, target: int) -> int:
        running = 0
        counts = self.counts
        for node in self.post_order():
            running += counts[node]
            if running >= target:
                return self.bounds(node)[1]
        return self.U

    def buckets(self) -> list[Bucket]:
        return sorted(self.bucket(node) for node in self.counts)

    def __len__(self) -> int:
        return len(self.counts)

    def check_invariants(self) -> list[str]:
        """Return human-readable descriptions of every invariant violation."""
        problems = []
        total = sum(self.counts.values())
        if total != self.n:
            problems.append(f"bucket counts sum to {total}, expected n={self.n}")
        t = self.threshold
        for node, c in self.counts.items():
            b = self.bucket(node)
            if c < 1:
                problems.append(f"{b} has non-positive count")
            if b.level > 0 and c > t:
                problems.append(f"{b} exceeds threshold {t}")
            if node != 1 and t > 0:
                triple = c + self.counts.get(node ^ 1, 0) + self.counts.get(node >> 1, 0)
                if triple < t:
                    problems.append(f"{b} triple sum {triple} below threshold {t}")
        return problems

    def dump(self) -> str:
        """One line per bucket, ``level index lo hi count``, sorted by (level, index)."""
        return "".join(f"{b.level} {b.index} {b.lo} {b.hi} {b.count}\n" for b in self.buckets())

    @classmethod
    def from_dump(cls, text: str, rho: float, U: int, **kwargs) -> "QDigest":
        digest = cls(rho, U, **kwargs)
        for line in text.splitlines():
            if not line.strip():
                continue
            level, index, _lo, _hi, count = (int(x) for x in line.split())
            digest.counts[digest.node(level, index)] = count
            digest.n += count
        digest._last_threshold = digest.threshold
        return digest
