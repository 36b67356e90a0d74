"""Partition a single n-cycle into towers of prescribed heights.

Given aggregate-coprime heights h_1..h_m and target masses a_1..a_m
(positive rationals summing to 1), find multiplicities k_j >= 1 with

    sum_j k_j * h_j = n,    minimizing  max_j |k_j*h_j/n - a_j|,

ties broken by the lexicographically smallest k.  The minimax is solved
exactly: scale masses by the common denominator Q so family errors are
integers e_j = |Q*k_j*h_j - T_j|, binary-search the optimal bound t, and
decide feasibility of each t by bounded-knapsack reachability over
big-int bitsets (a coin-problem dynamic program; the same sets drive the
lexicographic reconstruction).

`build_tower_cycle` turns a solution into a Loop of towers; the wiring
policy fixes the tower order only — label masses are k_j*h_j/n exactly
for every wiring.
"""
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .checks import CheckFailure
from .cycle_ir import IRError, Loop, Tower, deserialize, serialize
from .rational import ceil_div, format_rational, parse_rational

WIRINGS = ("round_robin", "family_blocks")


class CoprimalityError(Exception):
    """gcd of the height family exceeds 1."""


class InfeasibleError(Exception):
    """n has no representation sum k_j h_j = n with all k_j >= 1."""


class ToleranceError(Exception):
    """Best achievable max mass error exceeds tol."""

    def __init__(self, message, best_error, best_k):
        super().__init__(message)
        self.best_error = best_error
        self.best_k = best_k


class NoFeasibleN(Exception):
    """min_feasible_n exhausted its search bound."""


@dataclass(frozen=True)
class AlpernSolution:
    heights: tuple
    multiplicities: tuple
    n: int
    masses: tuple
    max_mass_error: Fraction

    def to_doc(self) -> dict:
        return {
            "heights": [str(h) for h in self.heights],
            "multiplicities": [str(k) for k in self.multiplicities],
            "n": str(self.n),
            "masses": [format_rational(a) for a in self.masses],
            "error": format_rational(self.max_mass_error),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "AlpernSolution":
        return cls(
            heights=tuple(int(h) for h in doc["heights"]),
            multiplicities=tuple(int(k) for k in doc["multiplicities"]),
            n=int(doc["n"]),
            masses=tuple(parse_rational(a) for a in doc["masses"]),
            max_mass_error=parse_rational(doc["error"]))


def _validate(heights, masses):
    heights = tuple(int(h) for h in heights)
    if not heights or any(h < 1 for h in heights):
        raise ValueError(f"heights must be positive integers, got {heights}")
    masses = tuple(Fraction(a) for a in masses)
    if len(masses) != len(heights):
        raise ValueError(f"{len(heights)} heights but {len(masses)} masses")
    if any(a <= 0 for a in masses):
        raise ValueError("masses must be positive")
    if sum(masses) != 1:
        raise ValueError(f"masses must sum to 1, got {sum(masses)}")
    if math.gcd(*heights) != 1:
        raise CoprimalityError(
            f"heights {heights} have gcd {math.gcd(*heights)} > 1")
    return heights, masses


def _bounded_coin(reach: int, h: int, count: int, mask: int) -> int:
    """Reachability closure under adding 0..count copies of h."""
    step = 1
    while count > 0:
        take = min(step, count)
        reach |= (reach << (h * take)) & mask
        count -= take
        step *= 2
    return reach


def _boxes(heights, targets, q, n, t):
    """Per-family multiplicity ranges compatible with error bound t."""
    total_h = sum(heights)
    out = []
    for h, tj in zip(heights, targets):
        lo = max(1, ceil_div(tj - t, q * h))
        hi = min((tj + t) // (q * h), (n - (total_h - h)) // h)
        if lo > hi:
            return None
        out.append((lo, hi))
    return out


def _box_reach(heights, boxes, n):
    """Suffix reachability bitsets for sum_j x_j*h_j, x_j in [0, hi-lo]."""
    target = n - sum(lo * h for (lo, _), h in zip(boxes, heights))
    if target < 0:
        return None, None
    mask = (1 << (target + 1)) - 1
    suffix = [1] * (len(heights) + 1)
    for j in reversed(range(len(heights))):
        lo, hi = boxes[j]
        suffix[j] = _bounded_coin(suffix[j + 1], heights[j], hi - lo, mask)
    return target, suffix


def _bit_array(x: int, nbits: int):
    x &= (1 << nbits) - 1
    raw = x.to_bytes((nbits + 7) // 8, "little")
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")


def _reconstruct(heights, boxes, target, suffix):
    """Lexicographically smallest multiplicities achieving the target sum."""
    ks = []
    rem = target
    for j, (h, (lo, hi)) in enumerate(zip(heights, boxes)):
        bits = _bit_array(suffix[j + 1], rem + 1)
        x = 0
        while True:
            pos = rem - x * h
            if x > hi - lo or pos < 0:
                raise AssertionError("reconstruction left the feasible box")
            if bits[pos]:
                break
            x += 1
        ks.append(lo + x)
        rem -= x * h
    if rem != 0:
        raise AssertionError("reconstruction missed the target")
    return tuple(ks)


def solve_multiplicities(heights, masses, n, tol) -> AlpernSolution:
    """Error-minimal tower multiplicities for an n-atom cycle.

    Raises CoprimalityError / InfeasibleError / ToleranceError per the
    failure mode; ToleranceError carries the best achievable error.
    """
    heights, masses = _validate(heights, masses)
    n = int(n)
    tol = Fraction(tol)
    if n < sum(heights):
        raise InfeasibleError(
            f"n={n} below the minimal cover sum(h)={sum(heights)}")

    q = math.lcm(*(a.denominator for a in masses))
    targets = [int(a * q) * n for a in masses]

    # any representation at all?  (boxes at the worst possible t)
    t_max = max(max(tj, q * h * ((n // h) + 1) - tj)
                for h, tj in zip(heights, targets))
    boxes = _boxes(heights, targets, q, n, t_max)
    if boxes is None:
        raise InfeasibleError(f"n={n} admits no positive tower cover")
    target, suffix = _box_reach(heights, boxes, n)
    if target is None or not (suffix[0] >> target) & 1:
        raise InfeasibleError(f"n={n} admits no positive tower cover")

    k0 = _reconstruct(heights, boxes, target, suffix)
    t_hi = max(abs(q * k * h - tj)
               for k, h, tj in zip(k0, heights, targets))

    # binary search the minimal feasible integer error bound
    feasible_cache = {t_hi: (boxes, target, suffix)}

    def feasible(t):
        if t in feasible_cache:
            return feasible_cache[t]
        b = _boxes(heights, targets, q, n, t)
        if b is None:
            feasible_cache[t] = None
            return None
        tgt, suf = _box_reach(heights, b, n)
        if tgt is None or not (suf[0] >> tgt) & 1:
            feasible_cache[t] = None
            return None
        feasible_cache[t] = (b, tgt, suf)
        return feasible_cache[t]

    if feasible(0):
        t_best = 0
    else:
        lo_t, hi_t = 0, t_hi  # infeasible / feasible bracket
        while hi_t - lo_t > 1:
            mid = (lo_t + hi_t) // 2
            if feasible(mid):
                hi_t = mid
            else:
                lo_t = mid
        t_best = hi_t

    boxes, target, suffix = feasible(t_best)
    k = _reconstruct(heights, boxes, target, suffix)
    error = Fraction(t_best, q * n)
    if error > tol:
        raise ToleranceError(
            f"best achievable max mass error {error} exceeds tol {tol} at n={n}",
            best_error=error, best_k=k)
    realized = tuple(Fraction(kj * hj, n) for kj, hj in zip(k, heights))
    return AlpernSolution(heights=heights, multiplicities=k, n=n,
                          masses=realized, max_mass_error=error)


def min_feasible_n(heights, masses, tol, start=None, step=1, cap=10**9) -> int:
    """Least n on the grid start, start+step, ... (<= cap) solvable within tol.

    A per-family necessary bound prunes the scan: k_j >= 1 forces
    n >= h_j/(a_j + tol), and the best per-family error alone must not
    exceed tol*n*Q.
    """
    heights, masses = _validate(heights, masses)
    tol = Fraction(tol)
    q = math.lcm(*(a.denominator for a in masses))
    lower = max(
        [sum(heights)]
        + [ceil_div(h * (a + tol).denominator, (a + tol).numerator)
           for h, a in zip(heights, masses)])
    n = start if start is not None else lower
    n = max(int(n), lower)
    step = max(1, int(step))
    # align upward to the grid
    if start is not None and n > int(start):
        n = int(start) + ceil_div(n - int(start), step) * step

    while n <= cap:
        ok = True
        for h, a in zip(heights, masses):
            tj = int(a * q) * n
            qh = q * h
            if tj < qh:
                emin = qh - tj
            else:
                r = tj % qh
                emin = min(r, qh - r)
            if emin > tol * q * n:
                ok = False
                break
        if ok:
            try:
                solve_multiplicities(heights, masses, n, tol)
                return n
            except (InfeasibleError, ToleranceError):
                pass
        n += step
    raise NoFeasibleN(f"no feasible n within cap {cap} "
                      f"(heights {heights}, tol {tol})")


def build_tower_cycle(solution: AlpernSolution, wiring="round_robin",
                      labels=None) -> Loop:
    """Loop of sum(k_j) towers; labels default to family ids 1..m."""
    if wiring not in WIRINGS:
        raise ValueError(f"unknown wiring {wiring!r}, want one of {WIRINGS}")
    m = len(solution.heights)
    if labels is None:
        labels = list(range(1, m + 1))
    if len(labels) != m:
        raise ValueError(f"{m} families but {len(labels)} labels")
    towers = []
    if wiring == "family_blocks":
        for h, k, lab in zip(solution.heights, solution.multiplicities, labels):
            towers.extend(Tower(h, lab) for _ in range(k))
    else:
        remaining = list(solution.multiplicities)
        while any(remaining):
            for j in range(m):
                if remaining[j]:
                    towers.append(Tower(solution.heights[j], labels[j]))
                    remaining[j] -= 1
    return Loop(towers)


def witness_doc(solution: AlpernSolution, targets, tol: Fraction,
                wiring: str = "round_robin") -> dict:
    """Persistable document for a solved-and-built tower cycle."""
    return {
        "kind": "alpern",
        "targets": [format_rational(Fraction(a)) for a in targets],
        "tol": format_rational(Fraction(tol)),
        "wiring": wiring,
        "solution": solution.to_doc(),
        "system": serialize(build_tower_cycle(solution, wiring=wiring)),
    }


def verify_witness(doc: dict) -> list:
    """Re-verify a persisted tower-cycle document from scratch.

    Recomputes the realized masses and error from the stored
    multiplicities, rebuilds the cycle under the recorded wiring and
    compares it to the stored one, and re-checks the stored system's
    length and per-family masses.  Boolean checks use a 0 == 1 sentinel
    row.  Returns the violated checks (empty = valid).
    """
    if doc.get("kind") != "alpern":
        raise ValueError(f"not a tower-cycle document: kind={doc.get('kind')!r}")
    sol = AlpernSolution.from_doc(doc["solution"])
    targets = [Fraction(parse_rational(a)) for a in doc["targets"]]
    tol = parse_rational(doc["tol"])
    wiring = str(doc["wiring"])
    failures = []
    if len(targets) != len(sol.heights):
        failures.append(CheckFailure("alpern", "target_count", 0,
                                     Fraction(len(targets)),
                                     Fraction(len(sol.heights)), "=="))
        return failures
    if sum(k * h for k, h in zip(sol.multiplicities, sol.heights)) != sol.n:
        failures.append(CheckFailure("alpern", "solution_total", 0,
                                     Fraction(0), Fraction(1), "=="))
    err_max = Fraction(0)
    for j, (k, h) in enumerate(zip(sol.multiplicities, sol.heights), 1):
        mass = Fraction(k * h, sol.n)
        if mass != sol.masses[j - 1]:
            failures.append(CheckFailure("alpern", "solution_mass", j,
                                         sol.masses[j - 1], mass, "=="))
        err_max = max(err_max, abs(mass - targets[j - 1]))
    if err_max != sol.max_mass_error:
        failures.append(CheckFailure("alpern", "solution_error", 0,
                                     sol.max_mass_error, err_max, "=="))
    if not err_max <= tol:
        failures.append(CheckFailure("alpern", "mass_tolerance", 0,
                                     err_max, tol))
    try:
        stored = deserialize(doc["system"])
    except (IRError, KeyError, TypeError, ValueError):
        failures.append(CheckFailure("alpern", "system_parse", 0,
                                     Fraction(0), Fraction(1), "=="))
        return failures
    if serialize(build_tower_cycle(sol, wiring=wiring)) != doc["system"]:
        failures.append(CheckFailure("alpern", "system_structure", 0,
                                     Fraction(0), Fraction(1), "=="))
    if stored.length != sol.n:
        failures.append(CheckFailure("alpern", "length", 0,
                                     Fraction(stored.length),
                                     Fraction(sol.n), "=="))
    else:
        for j, mass in enumerate(sol.masses, 1):
            got = stored.label_mass(j)
            if got != mass:
                failures.append(CheckFailure("alpern", "family_mass", j,
                                             got, mass, "=="))
    return failures
