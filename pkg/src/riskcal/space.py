"""Finite filtered probability spaces with exact rational masses.

Outcomes carry Fraction masses so that conditional probabilities, grid
constructions and independence checks can be asserted with zero tolerance.
Payoffs (random variables) are plain floats.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import floor
from typing import Iterable, Sequence

__all__ = [
    "OutcomeSpace",
    "Partition",
    "Filtration",
    "RandomVariable",
    "EventSet",
    "UniformGrid",
    "ValidationReport",
    "ConditionalMassResult",
    "IndependenceResult",
    "ResolutionUnavailableError",
    "validate",
    "conditional_expectation",
    "conditional_resolution",
    "build_uniform_grid",
    "set_with_conditional_mass",
    "independence_check",
    "product_space",
]


class ResolutionUnavailableError(ValueError):
    """Raised when a uniform grid of the requested resolution cannot be built."""


def _as_fraction(m) -> Fraction:
    if isinstance(m, Fraction):
        return m
    if isinstance(m, int):
        return Fraction(m)
    if isinstance(m, (tuple, list)) and len(m) == 2:
        return Fraction(int(m[0]), int(m[1]))
    return Fraction(m)


@dataclass(frozen=True)
class OutcomeSpace:
    """Finite sample space with one exact rational mass per outcome."""

    outcomes: tuple[str, ...]
    mass: tuple[Fraction, ...]

    @classmethod
    def uniform(cls, n: int, labels: Sequence[str] | None = None) -> "OutcomeSpace":
        if labels is None:
            labels = tuple(f"w{i}" for i in range(n))
        return cls(tuple(labels), tuple(Fraction(1, n) for _ in range(n)))

    @classmethod
    def from_masses(cls, masses: Iterable, labels: Sequence[str] | None = None) -> "OutcomeSpace":
        mm = tuple(_as_fraction(m) for m in masses)
        if labels is None:
            labels = tuple(f"w{i}" for i in range(len(mm)))
        return cls(tuple(labels), mm)

    @property
    def size(self) -> int:
        return len(self.outcomes)

    def mass_of(self, indices: Iterable[int]) -> Fraction:
        return sum((self.mass[i] for i in indices), Fraction(0))


@dataclass(frozen=True)
class Partition:
    """Disjoint nonempty index blocks covering the space; order is canonical."""

    blocks: tuple[tuple[int, ...], ...]

    @classmethod
    def trivial(cls, n: int) -> "Partition":
        return cls((tuple(range(n)),))

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(tuple((i,) for i in range(n)))

    @classmethod
    def from_blocks(cls, blocks: Iterable[Iterable[int]]) -> "Partition":
        return cls(tuple(tuple(int(i) for i in b) for b in blocks))

    def block_index(self, n: int) -> tuple[int, ...]:
        """Map outcome index -> index of the containing block (-1 if uncovered)."""
        out = [-1] * n
        for j, b in enumerate(self.blocks):
            for i in b:
                if 0 <= i < n:
                    out[i] = j
        return tuple(out)

    def refines(self, coarser: "Partition") -> bool:
        cover = {}
        for j, b in enumerate(coarser.blocks):
            for i in b:
                cover[i] = j
        for b in self.blocks:
            owners = {cover.get(i) for i in b}
            if len(owners) != 1 or None in owners:
                return False
        return True


@dataclass(frozen=True)
class Filtration:
    """Two-period information structure: trivial F0, intermediate F1, discrete F2."""

    f0: Partition
    f1: Partition
    f2: Partition

    @classmethod
    def two_period(cls, space: OutcomeSpace, f1_blocks: Iterable[Iterable[int]]) -> "Filtration":
        n = space.size
        return cls(Partition.trivial(n), Partition.from_blocks(f1_blocks), Partition.singletons(n))


@dataclass(frozen=True)
class RandomVariable:
    """One finite real payoff per outcome."""

    values: tuple[float, ...]

    @classmethod
    def of(cls, values: Iterable[float]) -> "RandomVariable":
        return cls(tuple(float(v) for v in values))

    @classmethod
    def constant(cls, c: float, n: int) -> "RandomVariable":
        return cls((float(c),) * n)

    @classmethod
    def from_block_values(cls, block_values: Sequence[float], partition: Partition, n: int) -> "RandomVariable":
        vals = [0.0] * n
        for bv, block in zip(block_values, partition.blocks):
            for i in block:
                vals[i] = float(bv)
        return cls(tuple(vals))

    def __len__(self) -> int:
        return len(self.values)

    def __add__(self, other):
        if isinstance(other, RandomVariable):
            return RandomVariable(tuple(a + b for a, b in zip(self.values, other.values)))
        return RandomVariable(tuple(a + float(other) for a in self.values))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, RandomVariable):
            return RandomVariable(tuple(a - b for a, b in zip(self.values, other.values)))
        return RandomVariable(tuple(a - float(other) for a in self.values))

    def __neg__(self):
        return RandomVariable(tuple(-a for a in self.values))

    def __mul__(self, scalar):
        return RandomVariable(tuple(a * float(scalar) for a in self.values))

    __rmul__ = __mul__

    def sup_norm(self) -> float:
        return max((abs(v) for v in self.values), default=0.0)

    def is_measurable(self, partition: Partition, tol: float = 0.0) -> bool:
        """Constant on every block of `partition` (exact by default)."""
        for block in partition.blocks:
            ref = self.values[block[0]]
            for i in block[1:]:
                if abs(self.values[i] - ref) > tol:
                    return False
        return True

    def is_finite(self) -> bool:
        return all(v == v and abs(v) != float("inf") for v in self.values)


@dataclass(frozen=True)
class EventSet:
    """Boolean membership per outcome."""

    member: tuple[bool, ...]

    @classmethod
    def from_indices(cls, indices: Iterable[int], n: int) -> "EventSet":
        s = set(indices)
        return cls(tuple(i in s for i in range(n)))

    @classmethod
    def empty(cls, n: int) -> "EventSet":
        return cls((False,) * n)

    def indices(self) -> tuple[int, ...]:
        return tuple(i for i, m in enumerate(self.member) if m)

    def indicator(self) -> RandomVariable:
        return RandomVariable(tuple(1.0 if m else 0.0 for m in self.member))

    def issubset(self, other: "EventSet") -> bool:
        return all((not a) or b for a, b in zip(self.member, other.member))


@dataclass(frozen=True)
class UniformGrid:
    """Discrete uniform-on-[0,1] layer independent of F1.

    `ranks[i]` in 1..n is the equal-conditional-mass group of outcome i within
    its F1 block; U = rank/n and B_{k/n} = {U <= k/n} = {rank <= k}.
    """

    resolution: int
    ranks: tuple[int, ...]
    u_values: RandomVariable
    level_sets: tuple[EventSet, ...]  # B_{k/n}, k = 1..n

    def level_set(self, k: int) -> EventSet:
        if k == 0:
            return EventSet.empty(len(self.ranks))
        return self.level_sets[k - 1]

    def u_partition(self) -> Partition:
        """Partition by U-value, i.e. the atoms of sigma(U)."""
        groups = [[] for _ in range(self.resolution)]
        for i, r in enumerate(self.ranks):
            groups[r - 1].append(i)
        return Partition.from_blocks(groups)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...]


@dataclass(frozen=True)
class ConditionalMassResult:
    event: EventSet
    achieved: tuple[Fraction, ...]  # conditional mass per F1 block
    snapped: bool


@dataclass(frozen=True)
class IndependenceResult:
    independent: bool
    max_deviation: Fraction


def validate(space: OutcomeSpace, filtration: Filtration) -> ValidationReport:
    """Check every type invariant; collect violations instead of raising."""
    v: list[str] = []
    n = space.size
    if len(space.mass) != n:
        v.append(f"mass vector length {len(space.mass)} != {n} outcomes")
    for i, m in enumerate(space.mass):
        if m <= 0:
            v.append(f"outcome {i} has non-positive mass {m}")
    total = sum(space.mass, Fraction(0))
    if total != 1:
        v.append(f"mass sum {total} (must be exactly 1)")

    for name, part in (("f0", filtration.f0), ("f1", filtration.f1), ("f2", filtration.f2)):
        seen: set[int] = set()
        for j, block in enumerate(part.blocks):
            if not block:
                v.append(f"{name} block {j} is empty")
            for i in block:
                if not 0 <= i < n:
                    v.append(f"{name} block {j} references outcome {i} outside 0..{n - 1}")
                elif i in seen:
                    v.append(f"{name}: outcome {i} appears in more than one block")
                seen.add(i)
        missing = [i for i in range(n) if i not in seen]
        if missing:
            v.append(f"{name} does not cover outcomes {missing}")

    if len(filtration.f0.blocks) != 1:
        v.append(f"f0 has {len(filtration.f0.blocks)} blocks (must be the trivial partition)")
    if any(len(b) != 1 for b in filtration.f2.blocks):
        v.append("f2 has a non-singleton block (must be the discrete partition)")
    if not filtration.f1.refines(filtration.f0):
        v.append("f1 does not refine f0")
    if not filtration.f2.refines(filtration.f1):
        v.append("f2 does not refine f1")

    return ValidationReport(ok=not v, violations=tuple(v))


def conditional_expectation(x: RandomVariable, given: Partition, space: OutcomeSpace) -> RandomVariable:
    """Blockwise mean of x under the conditional law; constant on each block."""
    out = [0.0] * space.size
    for block in given.blocks:
        bm = space.mass_of(block)
        acc = sum(float(space.mass[i]) * x.values[i] for i in block)
        val = acc / float(bm)
        for i in block:
            out[i] = val
    return RandomVariable(tuple(out))


def _equal_split(masses: Sequence[Fraction], n: int) -> list[list[int]] | None:
    """Partition positions 0..len-1 into n groups of equal mass sum, or None.

    Deterministic: positions are assigned in order, each to the lowest-index
    group with room; complete backtracking search, so failure means no split
    exists. Exact Fraction arithmetic throughout.
    """
    total = sum(masses, Fraction(0))
    if total % n != 0 and (total / n) * n != total:
        return None
    target = total / n
    if any(m > target for m in masses):
        return None
    groups: list[list[int]] = [[] for _ in range(n)]
    sums = [Fraction(0)] * n

    def place(pos: int) -> bool:
        if pos == len(masses):
            return all(s == target for s in sums)
        m = masses[pos]
        tried: set[Fraction] = set()
        for g in range(n):
            if sums[g] + m > target:
                continue
            if sums[g] in tried:  # symmetric group states are equivalent
                continue
            tried.add(sums[g])
            sums[g] += m
            groups[g].append(pos)
            if place(pos + 1):
                return True
            sums[g] -= m
            groups[g].pop()
        return False

    return groups if place(0) else None


def conditional_resolution(space: OutcomeSpace, filtration: Filtration) -> int:
    """Largest n >= 2 such that every F1 block splits into n equal-conditional-mass
    sub-events (exact arithmetic); 0 if no such n exists.

    This is the finite surrogate for conditional atomlessness: downstream grid
    constructions record the n they relied on.
    """
    blocks = filtration.f1.blocks
    if not blocks:
        return 0
    cap = min(len(b) for b in blocks)
    for n in range(cap, 1, -1):
        if all(_equal_split([space.mass[i] for i in b], n) is not None for b in blocks):
            return n
    return 0


def build_uniform_grid(space: OutcomeSpace, filtration: Filtration, n: int) -> UniformGrid:
    """Split each F1 block into n equal-conditional-mass groups; U = group rank / n.

    Requires conditional_resolution >= n with n dividing it. The assignment is
    the canonical-order backtracking of _equal_split, so outputs are reproducible.
    """
    if n < 1:
        raise ValueError(f"resolution n must be positive, got {n}")
    size = space.size
    ranks = [0] * size
    if n == 1:
        ranks = [1] * size
    else:
        res = conditional_resolution(space, filtration)
        if res < n or res % n != 0:
            for j, block in enumerate(filtration.f1.blocks):
                if _equal_split([space.mass[i] for i in block], n) is None:
                    raise ResolutionUnavailableError(
                        f"resolution unavailable: F1 block {j} {tuple(block)} admits no "
                        f"{n}-way equal-conditional-mass split"
                    )
            raise ResolutionUnavailableError(
                f"resolution unavailable: n={n} does not divide conditional resolution {res}"
            )
        for j, block in enumerate(filtration.f1.blocks):
            split = _equal_split([space.mass[i] for i in block], n)
            if split is None:  # unreachable under the precondition above
                raise ResolutionUnavailableError(
                    f"resolution unavailable: F1 block {j} {tuple(block)} admits no "
                    f"{n}-way equal-conditional-mass split"
                )
            for rank0, positions in enumerate(split):
                for pos in positions:
                    ranks[block[pos]] = rank0 + 1

    u = RandomVariable(tuple(r / n for r in ranks))
    levels = tuple(EventSet(tuple(r <= k for r in ranks)) for k in range(1, n + 1))
    return UniformGrid(resolution=n, ranks=tuple(ranks), u_values=u, level_sets=levels)


def set_with_conditional_mass(
    space: OutcomeSpace,
    filtration: Filtration,
    grid: UniformGrid,
    h: RandomVariable,
) -> ConditionalMassResult:
    """Return B_h = {U <= h} for F1-measurable h with values in [0, 1].

    Off-grid h-values snap DOWN to the largest grid value <= h; the achieved
    conditional masses are reported per block and `snapped` is flagged.
    """
    if not h.is_measurable(filtration.f1):
        raise ValueError("h must be F1-measurable")
    n = grid.resolution
    member = [False] * space.size
    achieved: list[Fraction] = []
    snapped = False
    for block in filtration.f1.blocks:
        hv = h.values[block[0]]
        if hv < -1e-12 or hv > 1 + 1e-12:
            raise ValueError(f"h value {hv} outside [0, 1]")
        k_near = round(hv * n)
        if abs(hv - k_near / n) <= 1e-9:
            k = int(k_near)
        else:
            k = floor(hv * n)
            snapped = True
        k = max(0, min(n, k))
        achieved.append(Fraction(k, n))
        for i in block:
            if grid.ranks[i] <= k:
                member[i] = True
    return ConditionalMassResult(event=EventSet(tuple(member)), achieved=tuple(achieved), snapped=snapped)


def independence_check(a: Partition, b: Partition, space: OutcomeSpace) -> IndependenceResult:
    """Exact test of P[A ∩ B] = P[A]·P[B] over all block pairs."""
    worst = Fraction(0)
    for blk_a in a.blocks:
        pa = space.mass_of(blk_a)
        sa = set(blk_a)
        for blk_b in b.blocks:
            pb = space.mass_of(blk_b)
            joint = space.mass_of(i for i in blk_b if i in sa)
            dev = abs(joint - pa * pb)
            if dev > worst:
                worst = dev
    return IndependenceResult(independent=(worst == 0), max_deviation=worst)


def product_space(k_alpha: int, k_x: int) -> tuple[OutcomeSpace, Filtration]:
    """Uniform (k_alpha x k_x) product grid; F1 = row partition, rows are
    contiguous index ranges row*k_x .. row*k_x + k_x - 1."""
    n = k_alpha * k_x
    space = OutcomeSpace.uniform(n)
    rows = [list(range(r * k_x, (r + 1) * k_x)) for r in range(k_alpha)]
    return space, Filtration.two_period(space, rows)
