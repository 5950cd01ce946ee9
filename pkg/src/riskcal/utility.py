"""Coherent monetary utility functions on finite outcome spaces.

Three interchangeable evaluation routes:

* distortion (Choquet) utilities u(x) = integral of x against v = psi(P),
  psi convex with psi(0)=0, psi(1)=1;
* scenario-set duals u(x) = min over finitely many measures Q of E_Q[x];
* a two-layer product-grid example where the distortion exponent varies
  with the row coordinate.

Distortion and scenario evaluations agree through the core of the convex
game v: core_extreme_points enumerates the permutation marginals, and the
Choquet value is their minimum. That equivalence is the module's main
internal cross-check.
"""

from __future__ import annotations

import itertools
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .space import Filtration, OutcomeSpace, Partition, RandomVariable

__all__ = [
    "DistortionFunction",
    "ScenarioSet",
    "CoherentUtility",
    "choquet_eval",
    "scenario_min_eval",
    "core_extreme_points",
    "product_example_eval",
    "is_commonotone_pair",
    "relevance_check",
]

Scalar = Union[Fraction, float]

# floating-point distortions (power, piecewise) are evaluated to roughly
# 1e-12; rational kinds (expectation, es) are exact at rational arguments.
FLOAT_PSI_TOL = 1e-12


@dataclass(frozen=True)
class DistortionFunction:
    """Convex distortion psi: [0,1] -> [0,1] with psi(0)=0 and psi(1)=1.

    kind is one of "expectation", "es", "power", "piecewise". The es level
    is kept as an exact Fraction so that psi of a rational argument is again
    a Fraction; power and piecewise evaluate in floating point.
    """

    kind: str
    alpha: Scalar | None = None
    knots: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.kind == "expectation":
            pass
        elif self.kind == "es":
            a = self.alpha
            if not isinstance(a, Fraction) or not 0 < a <= 1:
                raise ValueError(f"es level must be a rational in (0, 1], got {a!r}")
        elif self.kind == "power":
            a = self.alpha
            if not isinstance(a, float) or not 0.0 <= a <= 1.0:
                raise ValueError(f"power exponent offset must be a float in [0, 1], got {a!r}")
        elif self.kind == "piecewise":
            k = self.knots
            if not k or len(k) < 2:
                raise ValueError("piecewise distortion needs at least two knots")
            if k[0] != (0.0, 0.0) or k[-1] != (1.0, 1.0):
                raise ValueError("piecewise knots must run from (0, 0) to (1, 1)")
            slopes = []
            for (p0, y0), (p1, y1) in zip(k, k[1:]):
                if p1 <= p0:
                    raise ValueError(f"piecewise knot abscissae must increase, got {p0} then {p1}")
                if y1 < y0:
                    raise ValueError("piecewise distortion must be nondecreasing")
                slopes.append((y1 - y0) / (p1 - p0))
            for s0, s1 in zip(slopes, slopes[1:]):
                if s1 < s0 - FLOAT_PSI_TOL:
                    raise ValueError("piecewise distortion must be convex (nondecreasing slopes)")
        else:
            raise ValueError(f"unknown distortion kind {self.kind!r}")

    @classmethod
    def expectation(cls) -> "DistortionFunction":
        return cls("expectation")

    @classmethod
    def es(cls, alpha) -> "DistortionFunction":
        """Average over the worst alpha-tail: psi(p) = max(0, (p-(1-alpha))/alpha)."""
        if isinstance(alpha, (tuple, list)):
            alpha = Fraction(int(alpha[0]), int(alpha[1]))
        return cls("es", alpha=Fraction(alpha))

    @classmethod
    def power(cls, alpha: float) -> "DistortionFunction":
        """psi(p) = p^(1+alpha), alpha in [0, 1]."""
        return cls("power", alpha=float(alpha))

    @classmethod
    def piecewise(cls, knots) -> "DistortionFunction":
        return cls("piecewise", knots=tuple((float(p), float(y)) for p, y in knots))

    def psi(self, p: Scalar) -> Scalar:
        if self.kind == "expectation":
            return p
        if self.kind == "es":
            q = (Fraction(p) - (1 - self.alpha)) / self.alpha
            return q if q > 0 else Fraction(0)
        if self.kind == "power":
            return float(p) ** (1.0 + self.alpha)
        pf = float(p)
        xs = [k[0] for k in self.knots]
        j = min(bisect_right(xs, pf), len(xs) - 1)
        (p0, y0), (p1, y1) = self.knots[j - 1], self.knots[j]
        return y0 + (y1 - y0) * (pf - p0) / (p1 - p0)

    def describe(self) -> str:
        if self.kind == "expectation":
            return "expectation"
        if self.kind == "es":
            return f"es({self.alpha})"
        if self.kind == "power":
            return f"power({self.alpha})"
        return f"piecewise[{len(self.knots)} knots]"


@dataclass(frozen=True)
class ScenarioSet:
    """Finite dual set: probability vectors over the outcomes, in a fixed order."""

    measures: tuple[tuple[Scalar, ...], ...]

    @classmethod
    def of(cls, measures, space: OutcomeSpace | None = None) -> "ScenarioSet":
        rows = []
        for idx, q in enumerate(measures):
            row = tuple(Fraction(v[0], v[1]) if isinstance(v, (tuple, list)) else v for v in q)
            total = sum(row)
            exact = all(isinstance(v, (Fraction, int)) for v in row)
            if (exact and total != 1) or (not exact and abs(float(total) - 1.0) > 1e-9):
                raise ValueError(f"measure {idx} sums to {total}, not 1")
            if any(float(v) < -1e-12 for v in row):
                raise ValueError(f"measure {idx} has a negative entry")
            if space is not None and len(row) != space.size:
                raise ValueError(f"measure {idx} has {len(row)} entries for {space.size} outcomes")
            rows.append(row)
        if not rows:
            raise ValueError("scenario set must be nonempty")
        return cls(tuple(rows))

    @property
    def size(self) -> int:
        return len(self.measures)


@dataclass(frozen=True)
class CoherentUtility:
    """Tagged union over the three evaluation routes.

    kind: "distortion" | "scenario" | "product". Only the fields of the
    active variant are populated.
    """

    kind: str
    distortion: DistortionFunction | None = None
    scenarios: ScenarioSet | None = None
    k_alpha: int = 0
    k_x: int = 0

    @classmethod
    def from_distortion(cls, psi: DistortionFunction) -> "CoherentUtility":
        return cls("distortion", distortion=psi)

    @classmethod
    def from_scenarios(cls, s: ScenarioSet) -> "CoherentUtility":
        return cls("scenario", scenarios=s)

    @classmethod
    def product_example(cls, k_alpha: int, k_x: int) -> "CoherentUtility":
        if k_alpha < 1 or k_x < 1:
            raise ValueError("product grid sizes must be positive")
        return cls("product", k_alpha=k_alpha, k_x=k_x)

    def evaluate(self, x: RandomVariable, space: OutcomeSpace, filtration: Filtration | None = None) -> float:
        if self.kind == "distortion":
            return choquet_eval(x, self.distortion, space)
        if self.kind == "scenario":
            return scenario_min_eval(x, self.scenarios)[0]
        return product_example_eval(x, self.k_alpha, self.k_x, space, filtration)

    def describe(self) -> str:
        if self.kind == "distortion":
            return self.distortion.describe()
        if self.kind == "scenario":
            return f"scenario[{self.scenarios.size}]"
        return f"product({self.k_alpha}x{self.k_x})"


def choquet_eval(x: RandomVariable, psi: DistortionFunction, space: OutcomeSpace) -> float:
    """Choquet integral of x against the capacity psi(P[.]).

    Sort formula on descending values: sum of x_(k) * (psi(s_k) - psi(s_{k-1}))
    with s_k the cumulative mass of the top k outcomes. Equal values are merged
    before psi is applied, so the result cannot depend on tie order.
    """
    mass_at: dict[float, Fraction] = {}
    for v, m in zip(x.values, space.mass):
        mass_at[v] = mass_at.get(v, Fraction(0)) + m
    total = 0.0
    s = Fraction(0)
    prev = psi.psi(s)
    for v in sorted(mass_at, reverse=True):
        s += mass_at[v]
        cur = psi.psi(s)
        total += v * float(cur - prev)
        prev = cur
    return total


def scenario_min_eval(x: RandomVariable, s: ScenarioSet) -> tuple[float, int]:
    """Min over the listed measures of E_Q[x]; ties go to the lowest index."""
    best = float("inf")
    best_idx = -1
    for idx, q in enumerate(s.measures):
        if len(q) != len(x.values):
            raise ValueError(f"measure {idx} has {len(q)} entries for {len(x.values)} outcomes")
        e = sum(float(qi) * v for qi, v in zip(q, x.values))
        if e < best:
            best, best_idx = e, idx
    return best, best_idx


def core_extreme_points(psi: DistortionFunction, space: OutcomeSpace, cap: int = 8) -> ScenarioSet:
    """Extreme points of the core of the convex game v = psi(P).

    One marginal vector per outcome permutation: the outcome added in step i
    receives v(first i) - v(first i-1). Duplicates are removed and the result
    is sorted lexicographically, a canonical order independent of enumeration
    schedule. Factorial blow-up, hence the hard cap.
    """
    n = space.size
    if n > cap:
        raise ValueError(f"space too large: {n} outcomes exceeds cap {cap}")
    zero = psi.psi(Fraction(0))
    seen: set[tuple[Scalar, ...]] = set()
    for perm in itertools.permutations(range(n)):
        s = Fraction(0)
        prev = zero
        q: list[Scalar] = [0] * n
        for i in perm:
            s += space.mass[i]
            cur = psi.psi(s)
            q[i] = cur - prev
            prev = cur
        seen.add(tuple(q))
    return ScenarioSet(tuple(sorted(seen)))


def product_example_eval(
    x: RandomVariable,
    k_alpha: int,
    k_x: int,
    space: OutcomeSpace,
    filtration: Filtration | None = None,
) -> float:
    """Two-layer utility on a uniform (k_alpha x k_x) product grid.

    Each F1 block is a row with its own power distortion p^(1+alpha_row),
    alpha_row the midpoint (r+1/2)/k_alpha; the outer integral over rows is
    the midpoint rule with uniform weights. Defined for nonnegative payoffs
    only.
    """
    n = k_alpha * k_x
    if space.size != n:
        raise ValueError(f"product grid mismatch: {space.size} outcomes, expected {k_alpha}x{k_x}={n}")
    cell = Fraction(1, n)
    if any(m != cell for m in space.mass):
        raise ValueError("product grid mismatch: masses must be uniform")
    if filtration is None:
        rows: tuple[tuple[int, ...], ...] = tuple(tuple(range(r * k_x, (r + 1) * k_x)) for r in range(k_alpha))
    else:
        rows = filtration.f1.blocks
        if len(rows) != k_alpha or any(len(b) != k_x for b in rows):
            raise ValueError(f"product grid mismatch: F1 must have {k_alpha} blocks of {k_x} outcomes")
    if any(v < 0 for v in x.values):
        raise ValueError("example defined for ξ ≥ 0")
    row_space = OutcomeSpace.uniform(k_x)
    total = 0.0
    for r, block in enumerate(rows):
        alpha_row = (r + 0.5) / k_alpha
        row_vals = RandomVariable(tuple(x.values[i] for i in block))
        total += choquet_eval(row_vals, DistortionFunction.power(alpha_row), row_space)
    return total / k_alpha


def is_commonotone_pair(
    x: RandomVariable, y: RandomVariable, space: OutcomeSpace
) -> tuple[bool, tuple[int, int] | None]:
    """True iff (x(w)-x(w'))*(y(w)-y(w')) >= 0 for every outcome pair.

    All outcomes carry positive mass by the space invariant, so every pair
    counts. On failure returns the first violating pair in index order.
    """
    n = space.size
    for i in range(n):
        xi, yi = x.values[i], y.values[i]
        for j in range(i + 1, n):
            if (xi - x.values[j]) * (yi - y.values[j]) < 0:
                return False, (i, j)
    return True, None


def relevance_check(
    u: CoherentUtility, space: OutcomeSpace, filtration: Filtration | None = None
) -> bool:
    """True iff u(-1_A) < 0 for every nonempty event A.

    Monotonicity collapses the full event lattice to singletons: any nonempty
    A contains some {w}, and -1_A <= -1_{w} pointwise, so u(-1_A) <= u(-1_{w}).
    Checking all singletons is therefore exhaustive at every space size.
    """
    n = space.size
    if u.kind == "distortion":
        # u(-1_A) = -(1 - psi(P[A^c])): need psi(1 - mass) < 1 for each singleton
        for m in space.mass:
            if float(u.distortion.psi(1 - m)) >= 1.0:
                return False
        return True
    if u.kind == "scenario":
        # u(-1_{w}) = -max_Q Q[{w}]: some measure must charge every outcome
        for i in range(n):
            if all(float(q[i]) <= 0 for q in u.scenarios.measures):
                return False
        return True
    # product route rejects negative payoffs; translate: u(-1_A) = u(1_{A^c}) - 1
    for i in range(n):
        ind = RandomVariable(tuple(0.0 if j == i else 1.0 for j in range(n)))
        if product_example_eval(ind, u.k_alpha, u.k_x, space, filtration) - 1.0 >= 0.0:
            return False
    return True
