"""Single-observable slow-convergence witnesses over multi-family tower cycles.

Given a nonincreasing target rate psi, this module plans and builds a
single-cycle system of J tower families with prime heights h_1 < ... < h_J
and prescribed family masses a_1 > ... > a_J, such that the time averages
of the indicator of the first family converge to its mass more slowly than
psi: the L1 deviation at window length h_j exceeds target_j * psi(h_j) for
every j < J.

Planning works entirely against the certified rational brackets of the
rate (``Rate.eval`` from above, ``Rate.eval_lower`` from below), so every
inequality asserted here is exact.  The plan enforces, for masses a_j,
heights h_j, targets M_j and tail quantities

    mu_tail(j) = sum_{i>j} a_i,      eps(j) = sum_{i>j} a_i / h_i:

  A      psi_up(h_j) <= a_j / (2 M_j)                  for all j
  B      M_j * eps(j) * h_j <= psi_low(h_j)            for j < J
  decay  a_{j+1}/h_{j+1} <= (1/2) a_j/h_j              for j < J

plus two construction-time margins that make the realized verification
below go through with room to spare:

  A'     psi_up(h_j) <= (3/4) a_1 mu_tail(j) / M_j     for j < J
  T      eps(j) h_j  <= (1/8) a_1 mu_tail(j)           for j < J

A realized system (multiplicities k_j on n atoms) deviates from the plan
by at most tol per family mass.  With tol <= a_1 a_J / (24 J) the chain

    ahat * muhat_tail(j) - epshat(j) h_j >= (3/4) a_1 mu_tail(j)
                                         >= M_j psi_up(h_j)

holds for the realized quantities (ahat = k_1 h_1 / n, and epshat, muhat
built from k_i h_i / n), which is exactly what verify_krengel re-checks
from window statistics: windows started in the tail part that meet the
first family at all must start within h_j atoms of a tower top, so
integral and support bounds on the tail follow from counting alone, and
the total L1 deviation at length h_j dominates the tail deviation.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

import gmpy2

from . import alpern
from .checks import CheckFailure, VerificationError
from .cycle_ir import IRError, Loop, deserialize, serialize
from .rates import Rate, Unsatisfiable
from .rational import ceil_div, parse_rational
from .windows import window_stats


class PlanTooLarge(Exception):
    """Height selection hit the cap before satisfying the plan conditions."""

    def __init__(self, j: int, bound, cap: int):
        self.j = j
        self.bound = bound
        self.cap = cap
        if bound is None:
            msg = (f"no height satisfies the conditions at family {j} "
                   f"(rate never decays far enough)")
        else:
            msg = (f"family {j} needs height >= {bound}, "
                   f"exceeding the cap {cap}")
        super().__init__(msg)


def default_masses(J: int) -> Tuple[Fraction, ...]:
    """Normalized dyadic masses a_j = 2^(J-j) / (2^J - 1), summing to 1."""
    if J < 2:
        raise ValueError("need at least two families")
    denom = 2 ** J - 1
    return tuple(Fraction(2 ** (J - j), denom) for j in range(1, J + 1))


@dataclass(frozen=True)
class KrengelPlan:
    """Frozen outcome of height selection; all quantities exact rationals."""

    psi: Rate
    masses: Tuple[Fraction, ...]
    heights: Tuple[int, ...]
    targets: Tuple[Fraction, ...]
    height_cap: int

    @property
    def J(self) -> int:
        return len(self.masses)

    def mu_tail(self, j: int) -> Fraction:
        """Total planned mass of families j+1 .. J."""
        return sum(self.masses[j:], Fraction(0))

    def eps(self, j: int) -> Fraction:
        """sum_{i>j} a_i / h_i, the planned density of tail tower tops."""
        return sum((a / h for a, h in zip(self.masses[j:], self.heights[j:])),
                   Fraction(0))

    def tail_bound(self, j: int) -> Fraction:
        """Planned floor (1/2) a_1 mu_tail(j) for the tail L1 deviation."""
        return self.masses[0] * self.mu_tail(j) / 2

    def default_tolerance(self) -> Fraction:
        """Per-family mass tolerance small enough for all margin chains."""
        return self.masses[0] * self.masses[-1] / (32 * self.J)

    def check(self) -> None:
        """Re-assert conditions A, B and the decay scheme on exact values."""
        failures = []
        J = len(self.masses)
        for j in range(1, J + 1):
            a_j, h_j, m_j = self.masses[j - 1], self.heights[j - 1], self.targets[j - 1]
            up = self.psi.eval(h_j)
            if not up <= a_j / (2 * m_j):
                failures.append(CheckFailure("krengel", "condition_A", j,
                                             up, a_j / (2 * m_j)))
            if j < J:
                low = self.psi.eval_lower(h_j)
                lhs = m_j * self.eps(j) * h_j
                if not lhs <= low:
                    failures.append(CheckFailure("krengel", "condition_B", j,
                                                 lhs, low))
                nxt = self.masses[j] / self.heights[j]
                cur = Fraction(a_j, h_j)
                if not nxt <= cur / 2:
                    failures.append(CheckFailure("krengel", "decay", j,
                                                 nxt, cur / 2))
        if failures:
            raise VerificationError(failures)

    def to_doc(self) -> dict:
        return {
            "rate": self.psi.to_config(),
            "masses": [f"{a.numerator}/{a.denominator}" for a in self.masses],
            "heights": list(self.heights),
            "targets": [f"{m.numerator}/{m.denominator}" for m in self.targets],
            "height_cap": self.height_cap,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "KrengelPlan":
        return cls(
            psi=Rate.from_config(doc["rate"]),
            masses=tuple(parse_rational(a) for a in doc["masses"]),
            heights=tuple(int(h) for h in doc["heights"]),
            targets=tuple(parse_rational(m) for m in doc["targets"]),
            height_cap=int(doc["height_cap"]))


def _next_prime(n: int) -> int:
    """Least prime >= n."""
    if n <= 2:
        return 2
    return int(gmpy2.next_prime(n - 1))


def _check_margins(plan: KrengelPlan) -> None:
    """Construction margins A' and T (sufficient, not part of A/B/decay)."""
    failures = []
    a1 = plan.masses[0]
    for j in range(1, plan.J):
        mu = plan.mu_tail(j)
        up = plan.psi.eval(plan.heights[j - 1])
        if not up <= Fraction(3, 4) * a1 * mu / plan.targets[j - 1]:
            failures.append(CheckFailure(
                "krengel", "margin_Aprime", j,
                up, Fraction(3, 4) * a1 * mu / plan.targets[j - 1]))
        lhs = plan.eps(j) * plan.heights[j - 1]
        if not lhs <= a1 * mu / 8:
            failures.append(CheckFailure("krengel", "margin_tail", j,
                                         lhs, a1 * mu / 8))
    if failures:
        raise VerificationError(failures)


def select_heights(psi: Rate,
                   J: int,
                   targets: Optional[Sequence[Fraction]] = None,
                   masses: Optional[Sequence[Fraction]] = None,
                   height_cap: int = 10 ** 7) -> KrengelPlan:
    """Choose increasing prime heights satisfying A, B, decay and margins.

    Heights are chosen greedily: h_j is the least prime meeting every
    lower bound implied by the conditions at level j given h_1..h_{j-1}.
    Conditions B and T constrain eps(j), which depends on *later*
    heights; under the decay scheme eps(j) <= 2 a_{j+1} / h_{j+1}, so
    both reduce to lower bounds on h_{j+1} and the greedy choice is
    sound.  Raises PlanTooLarge as soon as a bound exceeds height_cap.
    """
    if J < 2:
        raise ValueError("need at least two families")
    masses = tuple(Fraction(a) for a in masses) if masses is not None \
        else default_masses(J)
    if len(masses) != J:
        raise ValueError(f"expected {J} masses, got {len(masses)}")
    if any(a <= 0 for a in masses) or sum(masses) != 1:
        raise ValueError("masses must be positive and sum to 1")
    if any(masses[i] < masses[i + 1] for i in range(J - 1)):
        raise ValueError("masses must be nonincreasing")
    targets = tuple(Fraction(m) for m in targets) if targets is not None \
        else tuple(Fraction(j) for j in range(1, J + 1))
    if len(targets) != J:
        raise ValueError(f"expected {J} targets, got {len(targets)}")
    if any(m <= 0 for m in targets):
        raise ValueError("targets must be positive")

    a1 = masses[0]
    tails = [sum(masses[j:], Fraction(0)) for j in range(J + 1)]  # tails[j] = mu_tail(j)
    heights = []
    for j in range(1, J + 1):
        a_j, m_j = masses[j - 1], targets[j - 1]
        bound = 2
        try:
            bound = max(bound, psi.threshold(a_j / (2 * m_j), strict=False))
            if j < J:
                bound = max(bound, psi.threshold(
                    Fraction(3, 4) * a1 * tails[j] / m_j, strict=False))
        except Unsatisfiable:
            raise PlanTooLarge(j, None, height_cap) from None
        if j > 1:
            h_prev = heights[-1]
            a_prev, m_prev = masses[j - 2], targets[j - 2]
            bound = max(bound, h_prev + 1)
            # decay: a_j / h_j <= a_prev / (2 h_prev)
            bound = max(bound, ceil_div((2 * h_prev * a_j / a_prev).numerator,
                                        (2 * h_prev * a_j / a_prev).denominator))
            # condition B via eps(j-1) <= 2 a_j / h_j
            need = 2 * m_prev * a_j * h_prev / psi.eval_lower(h_prev)
            bound = max(bound, ceil_div(need.numerator, need.denominator))
            # margin T via the same eps bound
            need = 16 * a_j * h_prev / (a1 * tails[j - 1])
            bound = max(bound, ceil_div(need.numerator, need.denominator))
        if bound > height_cap:
            raise PlanTooLarge(j, bound, height_cap)
        h_j = _next_prime(bound)
        if h_j > height_cap:
            raise PlanTooLarge(j, h_j, height_cap)
        heights.append(h_j)

    plan = KrengelPlan(psi, masses, tuple(heights), targets, height_cap)
    plan.check()
    _check_margins(plan)
    return plan


@dataclass(frozen=True)
class KrengelWitness:
    """A realized plan: the cycle, its tower solution, and the tolerance."""

    plan: KrengelPlan
    solution: alpern.AlpernSolution
    system: Loop
    wiring: str
    tol: Fraction

    @property
    def n(self) -> int:
        return self.solution.n

    @property
    def mean(self) -> Fraction:
        """Realized mass of the first family (the limit of its averages)."""
        return self.solution.masses[0]

    def to_doc(self) -> dict:
        return {
            "kind": "krengel",
            "plan": self.plan.to_doc(),
            "solution": self.solution.to_doc(),
            "wiring": self.wiring,
            "tol": f"{self.tol.numerator}/{self.tol.denominator}",
            "system": serialize(self.system),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "KrengelWitness":
        return cls(
            plan=KrengelPlan.from_doc(doc["plan"]),
            solution=alpern.AlpernSolution.from_doc(doc["solution"]),
            system=deserialize(doc["system"]),
            wiring=doc["wiring"],
            tol=parse_rational(doc["tol"]))


def build_witness(plan: KrengelPlan,
                  tol: Optional[Fraction] = None,
                  wiring: str = "round_robin",
                  n_cap: int = 10 ** 9) -> KrengelWitness:
    """Realize the plan on the smallest atom count within tolerance.

    Finds the least n admitting tower multiplicities k_j with every
    realized mass k_j h_j / n within tol of a_j, then wires the towers
    into a single cycle.  The default tolerance keeps every margin chain
    of the plan valid for the realized quantities.
    """
    if tol is None:
        tol = plan.default_tolerance()
    tol = Fraction(tol)
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    n = alpern.min_feasible_n(plan.heights, plan.masses, tol, cap=n_cap)
    sol = alpern.solve_multiplicities(plan.heights, plan.masses, n, tol)
    system = alpern.build_tower_cycle(sol, wiring=wiring)
    return KrengelWitness(plan, sol, system, wiring, tol)


@dataclass(frozen=True)
class KrengelRow:
    """Exact verification quantities at window length h_j (one row per j < J).

    The tail part is the union of families j+1 .. J; f is the indicator
    of the first family.  `eps_h` is the realized tail-top density times
    h_j; `dev_lower` is the counting floor mean * tail_mass - eps_h that
    the tail L1 deviation must clear, itself required to exceed the
    planned `tail_bound`; `ratio` is total L1 deviation over psi_up(h_j).
    """

    j: int
    height: int
    eps_h: Fraction
    mean: Fraction
    tail_mass: Fraction
    l1_tail_plain: Fraction
    nonzero_mass: Fraction
    l1_tail_dev: Fraction
    dev_lower: Fraction
    tail_bound: Fraction
    l1_total: Fraction
    psi_up: Fraction
    ratio: Fraction
    target: Fraction


def verify_krengel(witness: KrengelWitness,
                   strict: bool = True) -> list:
    """Re-check the witness from window statistics alone; exact arithmetic.

    For each j < J, with N = h_j, f the first-family indicator and C the
    tail part (families above j), asserts:

      (i)   integral of f_N over C   <= epshat(j) h_j, and the support
            of f_N within C has mass <= epshat(j) h_j;
      (ii)  integral of |f_N - mean| over C >= mean * mass(C) - epshat(j) h_j,
            and that floor exceeds the planned tail_bound(j);
      (iii) total L1 deviation / psi_up(h_j) >= target_j.

    Every quantity comes from the realized cycle (epshat from the actual
    multiplicities, mean from the actual first-family mass); the planned
    values enter only through tail_bound.  Returns the rows; on failure
    raises VerificationError (failures also attached to the exception as
    ``.rows`` / ``.failures``) unless strict is False.
    """
    plan, sol, system = witness.plan, witness.solution, witness.system
    J, n = plan.J, sol.n
    first = {1}
    rows = []
    failures = []
    if system.length != n:
        failures.append(CheckFailure("krengel", "length", 0,
                                     Fraction(system.length), Fraction(n), "=="))
    for j in range(1, J + 1):
        want = sol.masses[j - 1]
        got = system.label_mass(j)
        if got != want:
            failures.append(CheckFailure("krengel", "family_mass", j,
                                         got, want, "=="))
    if failures:
        err = VerificationError(failures)
        err.rows = []
        if strict:
            raise err
        return [], failures
    for j in range(1, J):
        h_j = plan.heights[j - 1]
        tail = set(range(j + 1, J + 1))
        eps_hat = sum(Fraction(k, n) for k in sol.multiplicities[j:])
        eps_h = eps_hat * h_j
        mean = witness.mean
        tail_mass = sum(sol.masses[j:], Fraction(0))

        plain = window_stats(system, first, tail, h_j, Fraction(0), Fraction(0))
        l1_plain = plain.l1_deviation
        nonzero = plain.restriction_mass - plain.measure_within
        dev = window_stats(system, first, tail, h_j, mean, Fraction(0))
        total = window_stats(system, first, None, h_j, mean, Fraction(0))

        psi_up = plan.psi.eval(h_j)
        ratio = total.l1_deviation / psi_up
        dev_lower = mean * tail_mass - eps_h
        t_bound = plan.tail_bound(j)

        rows.append(KrengelRow(
            j=j, height=h_j, eps_h=eps_h, mean=mean, tail_mass=tail_mass,
            l1_tail_plain=l1_plain, nonzero_mass=nonzero,
            l1_tail_dev=dev.l1_deviation, dev_lower=dev_lower,
            tail_bound=t_bound, l1_total=total.l1_deviation,
            psi_up=psi_up, ratio=ratio, target=plan.targets[j - 1]))

        if not l1_plain <= eps_h:
            failures.append(CheckFailure("krengel", "tail_integral", j,
                                         l1_plain, eps_h))
        if not nonzero <= eps_h:
            failures.append(CheckFailure("krengel", "tail_support", j,
                                         nonzero, eps_h))
        if not dev.l1_deviation >= dev_lower:
            failures.append(CheckFailure("krengel", "tail_deviation", j,
                                         dev.l1_deviation, dev_lower, ">="))
        if not dev_lower > t_bound:
            failures.append(CheckFailure("krengel", "tail_bound", j,
                                         dev_lower, t_bound, ">"))
        if not ratio >= plan.targets[j - 1]:
            failures.append(CheckFailure("krengel", "ratio", j,
                                         ratio, plan.targets[j - 1], ">="))
    if failures and strict:
        err = VerificationError(failures)
        err.rows = rows
        raise err
    if not strict:
        return rows, failures
    return rows


def verify_witness(doc: dict) -> list:
    """Re-verify a persisted witness document from scratch.

    Re-asserts the plan conditions, recomputes the realized masses and
    error from the stored multiplicities, rebuilds the cycle under the
    recorded wiring and compares it structurally to the stored one, then
    re-runs every row check on the stored system.  Boolean checks use a
    0 == 1 sentinel row.  Returns the violated checks (empty = valid).
    """
    if doc.get("kind") != "krengel":
        raise ValueError(f"not a tower-cycle witness: kind={doc.get('kind')!r}")
    plan = KrengelPlan.from_doc(doc["plan"])
    sol = alpern.AlpernSolution.from_doc(doc["solution"])
    wiring = str(doc["wiring"])
    tol = parse_rational(doc["tol"])
    failures = []
    try:
        plan.check()
    except VerificationError as err:
        failures.extend(err.failures)
    if sol.heights != plan.heights:
        failures.append(CheckFailure("krengel", "solution_heights", 0,
                                     Fraction(0), Fraction(1), "=="))
    if sum(k * h for k, h in zip(sol.multiplicities, sol.heights)) != sol.n:
        failures.append(CheckFailure("krengel", "solution_total", 0,
                                     Fraction(0), Fraction(1), "=="))
    err_max = Fraction(0)
    for j, (k, h) in enumerate(zip(sol.multiplicities, sol.heights), 1):
        mass = Fraction(k * h, sol.n)
        if mass != sol.masses[j - 1]:
            failures.append(CheckFailure("krengel", "solution_mass", j,
                                         sol.masses[j - 1], mass, "=="))
        err_max = max(err_max, abs(mass - plan.masses[j - 1]))
    if err_max != sol.max_mass_error:
        failures.append(CheckFailure("krengel", "solution_error", 0,
                                     sol.max_mass_error, err_max, "=="))
    if not err_max <= tol:
        failures.append(CheckFailure("krengel", "mass_tolerance", 0,
                                     err_max, tol))
    try:
        stored = deserialize(doc["system"])
    except (IRError, KeyError, TypeError, ValueError):
        failures.append(CheckFailure("krengel", "system_parse", 0,
                                     Fraction(0), Fraction(1), "=="))
        return failures
    if serialize(alpern.build_tower_cycle(sol, wiring=wiring)) != doc["system"]:
        failures.append(CheckFailure("krengel", "system_structure", 0,
                                     Fraction(0), Fraction(1), "=="))
    witness = KrengelWitness(plan, sol, stored, wiring, tol)
    _, row_failures = verify_krengel(witness, strict=False)
    failures.extend(row_failures)
    return failures
