"""Stagewise cycle merging with window checks surviving every later stage.

The space is split into components A_0 .. A_J with prescribed rational
masses; each starts as its own cycle of g*mass(A_j) atoms.  Stage j
merges A_j into the running union U_{j-1} = A_0 u ... u A_{j-1}:

  1. refine the merged cycle and the incoming component by a factor r_j
     (every atom becomes r_j copies, so the two atoms whose successor
     the splice changes have mass 2/L_j);
  2. splice the refined A_j arc into the merged cycle at an atom
     labeled A_{j-1} (policy: leftmost such atom at maximal cyclic
     distance from the lifted copies of all earlier splice atoms);
  3. pick the window length N_j = q * L_j, the least full-period
     multiple with psi_up(N_j) < (c_j - c)/j, where c_j = c/mu(U_j)
     is the exact mean of f = indicator(A_0) over the merged cycle;
  4. check that |f_(N_j) - c_j| <= eps_j on U_j up to mass eps_j, and
     re-check the same at every earlier scale (N_i, c_i, eps_i): a
     full-period window equals the mean exactly, so a check is exact
     when introduced and can only be eroded by later splices, each of
     which perturbs at most 2*(N_i + 1) window starts;
  5. if any check fails, double r_j and retry.

The initial r_j is read off the exact margins, so retries are rare.
After the last stage every earlier check still holds, and windows at
N_j deviate from c = mu(A_0) by at least (c_j - c) - eps_j on almost
all of U_j while psi_up(N_j) < (c_j - c)/j: the deviation/psi ratios
grow like j (verify_divergence reports the table).

All checks are exact rational comparisons; window statistics come from
the windows engine and global masses divide window counts by the total
atom count g * r_1 * ... * r_j (components not yet merged are untouched
cycles that never satisfy any check, so merged counts are global).
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .checks import CheckFailure, VerificationError
from .cycle_ir import (IRError, Node, Tower, deserialize, refine, run_arrays,
                       serialize, splice)
from .rates import Rate, Unsatisfiable
from .rational import ceil_div, format_rational, parse_rational
from .windows import window_stats
from .windows.compiled import thread_count


class RetryCapExceeded(Exception):
    """A stage could not satisfy its checks within the refinement cap."""

    def __init__(self, stage: int, check: str, margin: Fraction, cap: int):
        self.stage = stage
        self.check = check
        self.margin = margin
        self.cap = cap
        super().__init__(
            f"stage {stage}: check {check} still failing at refinement cap "
            f"{cap} (margin {format_rational(margin)})")


@dataclass(frozen=True)
class ComponentSpec:
    """Component masses and the atom granularity realizing them exactly."""

    masses: Tuple[Fraction, ...]
    granularity: int

    @classmethod
    def build(cls, masses: Sequence[Fraction],
              multiplier: int = 10) -> "ComponentSpec":
        masses = tuple(Fraction(m) for m in masses)
        if len(masses) < 2:
            raise ValueError("need at least two components")
        if any(m <= 0 for m in masses) or sum(masses) != 1:
            raise ValueError("masses must be positive and sum to 1")
        if multiplier < 1:
            raise ValueError("granularity multiplier must be >= 1")
        g = lcm(*(m.denominator for m in masses)) * multiplier
        spec = cls(masses, g)
        for j, cnt in enumerate(spec.counts):
            if cnt < 2:
                raise ValueError(
                    f"granularity {g} too coarse: component {j} gets "
                    f"{cnt} atom(s)")
        return spec

    @property
    def J(self) -> int:
        """Index of the last component (components are A_0 .. A_J)."""
        return len(self.masses) - 1

    @property
    def c(self) -> Fraction:
        return self.masses[0]

    @property
    def counts(self) -> Tuple[int, ...]:
        return tuple(int(self.granularity * m) for m in self.masses)

    def mu_union(self, j: int) -> Fraction:
        """mu(U_j) = mass of A_0 u ... u A_j."""
        return sum(self.masses[:j + 1], Fraction(0))

    def c_stage(self, j: int) -> Fraction:
        """Mean of the A_0 indicator over U_j: c/(1 - sum_{i>j} masses)."""
        return self.c / self.mu_union(j)

    def to_doc(self) -> dict:
        return {
            "masses": [format_rational(m) for m in self.masses],
            "granularity": self.granularity,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "ComponentSpec":
        masses = tuple(parse_rational(s) for s in doc["masses"])
        return cls(masses, int(doc["granularity"]))


@dataclass(frozen=True)
class Eq2Check:
    """One window check at an earlier scale, re-run on the current system."""

    i: int
    N: int
    c: Fraction
    eps: Fraction
    measure: Fraction      # global mass of starts in U_i with |f_N - c| <= eps
    bound: Fraction        # mu(U_i) - eps

    @property
    def margin(self) -> Fraction:
        return self.measure - self.bound


@dataclass(frozen=True)
class StageRecord:
    """Everything stage j committed to, with the exact check outcomes."""

    j: int
    r: int
    retries: int
    length: int            # L_j = merged length after the stage
    arc_len: int
    splice_left: int
    splice_right: int
    q: int
    N: int
    c_j: Fraction
    eps: Fraction
    psi_N: Optional[Fraction]        # psi_up(N_j); None at the last stage
    eq1_target: Optional[Fraction]   # (c_j - c)/j; None at the last stage
    eq2: Tuple[Eq2Check, ...]

    def to_doc(self) -> dict:
        return {
            "j": self.j, "r": self.r, "retries": self.retries,
            "length": self.length, "arc_len": self.arc_len,
            "splice_left": self.splice_left, "splice_right": self.splice_right,
            "q": self.q, "N": self.N,
            "c_j": format_rational(self.c_j),
            "eps": format_rational(self.eps),
            "psi_N": None if self.psi_N is None else format_rational(self.psi_N),
            "eq1_target": (None if self.eq1_target is None
                           else format_rational(self.eq1_target)),
            "eq2": [{"i": ch.i, "N": ch.N, "c": format_rational(ch.c),
                     "eps": format_rational(ch.eps),
                     "measure": format_rational(ch.measure),
                     "bound": format_rational(ch.bound)} for ch in self.eq2],
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "StageRecord":
        rat = parse_rational
        return cls(
            j=int(doc["j"]), r=int(doc["r"]), retries=int(doc["retries"]),
            length=int(doc["length"]), arc_len=int(doc["arc_len"]),
            splice_left=int(doc["splice_left"]),
            splice_right=int(doc["splice_right"]),
            q=int(doc["q"]), N=int(doc["N"]),
            c_j=rat(doc["c_j"]), eps=rat(doc["eps"]),
            psi_N=None if doc["psi_N"] is None else rat(doc["psi_N"]),
            eq1_target=(None if doc["eq1_target"] is None
                        else rat(doc["eq1_target"])),
            eq2=tuple(Eq2Check(i=int(d["i"]), N=int(d["N"]), c=rat(d["c"]),
                               eps=rat(d["eps"]), measure=rat(d["measure"]),
                               bound=rat(d["bound"])) for d in doc["eq2"]))


class StageState:
    """Mutable single-writer state of the merging pipeline."""

    def __init__(self, spec: ComponentSpec):
        self.spec = spec
        self.stage = 0
        self.merged: Node = Tower(spec.counts[0], 0)
        self.refinement = 1                      # product of all r so far
        self.protected = np.empty(0, np.int64)   # lifted earlier splice atoms
        self.history: List[StageRecord] = []

    @property
    def atoms_total(self) -> int:
        """Atoms of the whole space (merged plus untouched components)."""
        return self.spec.granularity * self.refinement

    def assert_masses(self) -> None:
        """Merged label masses must equal the spec masses renormalized."""
        mu = self.spec.mu_union(self.stage)
        for i in range(self.stage + 1):
            want = self.spec.masses[i] / mu
            got = self.merged.label_mass(i)
            if got != want:
                raise VerificationError([CheckFailure(
                    "podvigin", "component_mass", i, got, want, "==")])


def init_components(spec: ComponentSpec) -> StageState:
    """Stage-0 state: merged is A_0's cycle, the rest pending."""
    return StageState(spec)


def _global_measure(state_or_atoms, merged: Node, restrict, N: int,
                    c: Fraction, eps: Fraction) -> Fraction:
    """Global mass of window starts (restricted) with |f_N - c| <= eps."""
    atoms = state_or_atoms if isinstance(state_or_atoms, int) \
        else state_or_atoms.atoms_total
    rep = window_stats(merged, {0}, restrict, N, c, eps)
    return Fraction(rep.count_within, atoms)


def splice_position(merged: Node, label: int,
                    protected: np.ndarray) -> int:
    """Leftmost `label` atom at maximal cyclic distance from `protected`.

    Returns -1 when every atom of that label is protected.  The distance
    function rises and falls linearly between consecutive protected
    positions, so on each label run its maximum sits at a run endpoint
    or at a protected-gap midpoint falling inside the run; only those
    O(runs + len(protected)) candidate atoms are examined.
    """
    L = merged.length
    labels, lens = run_arrays(merged)
    starts = np.concatenate(([0], np.cumsum(lens)))
    mask = labels == label
    if not mask.any():
        return -1
    run_lo = starts[:-1][mask]
    run_hi = run_lo + lens[mask] - 1
    if protected.size == 0:
        return int(run_lo[0])
    ps = np.unique(protected)
    gap = (np.roll(ps, -1) - ps) % L
    if len(ps) == 1:
        gap[0] = L
    mids = (ps + gap // 2) % L
    at = np.clip(np.searchsorted(run_lo, mids, side="right") - 1, 0, None)
    inside = (mids >= run_lo[at]) & (mids <= run_hi[at])
    cands = np.concatenate([run_lo, run_hi, mids[inside]])
    n = len(ps)
    idx = np.searchsorted(ps, cands)
    d_next = (ps[idx % n] - cands) % L
    d_prev = (cands - ps[(idx - 1) % n]) % L
    dist = np.minimum(d_next, d_prev)
    best = int(dist.max())
    if best == 0:
        return -1
    return int(cands[dist == best].min())


def _initial_factor(state: StageState) -> int:
    """Least r keeping every earlier check's margin at least half intact.

    A splice perturbs at most 2*(N_i + 1) window starts of check i, a
    global mass of 2*(N_i + 1)/(atoms_total * r); r is chosen so that
    this eats at most half the margin measured at the last re-check.
    Leaving the other half makes margins shrink geometrically at worst
    instead of collapsing to zero, which would blow up the next stage's
    refinement factor.
    """
    r = 1
    # The newest record's eq2 list holds the latest re-run of every check.
    if state.history:
        for ch in state.history[-1].eq2:
            margin = ch.margin
            if margin <= 0:
                continue
            need = ceil_div(4 * (ch.N + 1) * margin.denominator,
                            margin.numerator * state.atoms_total)
            r = max(r, need)
    return r


def stage(state: StageState, psi: Rate, eps: Fraction,
          retry_cap: int = 2 ** 20) -> StageState:
    """Merge the next component; see the module docstring for the steps."""
    spec = state.spec
    j = state.stage + 1
    if j > spec.J:
        raise ValueError("all components already merged")
    eps = Fraction(eps)
    c_j = spec.c_stage(j)
    last = j == spec.J
    if not last and eps <= 0:
        raise ValueError("eps must be positive before the last stage")
    if last and c_j != spec.c:
        raise AssertionError("last-stage mean must equal the global mean")

    target = None if last else (c_j - spec.c) / j
    r = _initial_factor(state)
    retries = 0
    while True:
        if r > retry_cap:
            raise RetryCapExceeded(j, "refinement_factor", Fraction(r),
                                   retry_cap)
        merged = refine(state.merged, r)
        refinement = state.refinement * r
        atoms = spec.granularity * refinement
        if state.protected.size:
            prot = np.add.outer(
                state.protected,
                state.merged.length * np.arange(r, dtype=np.int64)).ravel()
        else:
            prot = state.protected
        arc = refine(Tower(spec.counts[j], j), refinement)
        p_left = splice_position(merged, j - 1, prot)
        failing, margin = None, Fraction(0)
        if p_left < 0:
            failing = "splice_candidates"
        else:
            glued = splice(merged, arc, p_left, 0)
            L = glued.length
            if target is not None:
                try:
                    q = max(1, ceil_div(psi.threshold(target), L))
                except Unsatisfiable:
                    raise RetryCapExceeded(j, "eq1", target, retry_cap) \
                        from None
                N = q * L
                psi_N = psi.eval(N)
            else:
                q, N, psi_N = 1, L, None
            checks = _run_checks(state, glued, atoms, psi, j, N, c_j, eps)
            for ch in checks:
                if ch.margin < 0:
                    failing, margin = f"eq2[i={ch.i}]", ch.margin
                    break
        if failing is None:
            prot = np.where(prot <= p_left, prot, prot + arc.length)
            new_delta = np.array([p_left, p_left + arc.length], np.int64)
            state.merged = glued
            state.refinement = refinement
            state.protected = np.concatenate([prot, new_delta])
            state.stage = j
            state.history.append(StageRecord(
                j=j, r=r, retries=retries, length=glued.length,
                arc_len=arc.length, splice_left=p_left, splice_right=0,
                q=q, N=N, c_j=c_j, eps=eps, psi_N=psi_N, eq1_target=target,
                eq2=checks))
            state.assert_masses()
            return state
        retries += 1
        if 2 * r > retry_cap:
            raise RetryCapExceeded(j, failing, margin, retry_cap)
        r *= 2


def _run_checks(state: StageState, glued: Node, atoms: int, psi: Rate,
                j: int, N: int, c_j: Fraction, eps: Fraction
                ) -> Tuple[Eq2Check, ...]:
    """Window check for the new stage plus re-runs of all earlier ones.

    The checks are independent of one another and run concurrently when
    ERGOLAB_THREADS allows; results are gathered in stage order, so the
    outcome does not depend on scheduling.
    """
    spec = state.spec
    jobs = [(rec.j, rec.N, rec.c_j, rec.eps) for rec in state.history]
    jobs.append((j, N, c_j, eps))

    def run(job):
        i, n_i, c_i, eps_i = job
        restrict = set(range(i + 1))
        measure = _global_measure(atoms, glued, restrict, n_i, c_i, eps_i)
        return Eq2Check(i=i, N=n_i, c=c_i, eps=eps_i, measure=measure,
                        bound=spec.mu_union(i) - eps_i)

    workers = min(thread_count(), len(jobs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return tuple(pool.map(run, jobs))
    return tuple(run(job) for job in jobs)


@dataclass(frozen=True)
class DivergenceRow:
    """Deviation-to-rate ratio at scale N_j on the final system."""

    j: int
    N: int
    c_j: Fraction
    eps: Fraction
    threshold: Fraction        # (c_j - c) - eps
    qualifying_mass: Fraction  # mass of |f_N - c| >= threshold, whole space
    mass_bound: Fraction       # mu(U_j) - eps
    psi_N: Fraction
    ratio: Fraction            # threshold / psi_N
    target: Fraction           # j * (1 - eps/(c_j - c))


def verify_divergence(state: StageState, psi: Rate,
                      strict: bool = True):
    """Ratio table over the final system; asserts mass and growth bounds.

    For each stage j with c_j > c, computes the global mass Q_j of
    window starts whose average at N_j deviates from c by at least
    (c_j - c) - eps_j, requires Q_j >= mu(U_j) - eps_j, and requires
    ratio_j = ((c_j - c) - eps_j)/psi_up(N_j) > j*(1 - eps_j/(c_j - c)).
    The last stage has c_j = c and is excluded.
    """
    if state.stage != state.spec.J:
        raise ValueError("divergence table needs all components merged")
    rows, failures = _stored_divergence(state.spec, psi, state.history,
                                        state.merged)
    if failures and strict:
        err = VerificationError(failures)
        err.rows = rows
        raise err
    if not strict:
        return rows, failures
    return rows


def recheck_all(state: StageState, psi: Rate) -> Tuple[Eq2Check, ...]:
    """Re-run every recorded window check on the current system."""
    spec = state.spec
    out = []
    failures = []
    for rec in state.history:
        restrict = set(range(rec.j + 1))
        measure = _global_measure(state, state.merged, restrict,
                                  rec.N, rec.c_j, rec.eps)
        ch = Eq2Check(i=rec.j, N=rec.N, c=rec.c_j, eps=rec.eps,
                      measure=measure, bound=spec.mu_union(rec.j) - rec.eps)
        out.append(ch)
        if ch.margin < 0:
            failures.append(CheckFailure("podvigin", "eq2_final", rec.j,
                                         ch.measure, ch.bound, ">="))
    if failures:
        raise VerificationError(failures)
    return tuple(out)


@dataclass(frozen=True)
class PodviginWitness:
    """Finished pipeline: final system, stage records, divergence table."""

    spec: ComponentSpec
    psi: Rate
    state: StageState
    final_checks: Tuple[Eq2Check, ...]
    divergence: Tuple[DivergenceRow, ...]

    def to_doc(self) -> dict:
        return {
            "kind": "podvigin",
            "spec": self.spec.to_doc(),
            "rate": self.psi.to_config(),
            "stages": [rec.to_doc() for rec in self.state.history],
            "system": serialize(self.state.merged),
        }


def run_all(spec: ComponentSpec, psi: Rate,
            delta: Fraction = Fraction(1, 8),
            eps_schedule: Optional[Sequence[Fraction]] = None,
            retry_cap: int = 2 ** 20) -> PodviginWitness:
    """Run every stage, the final stability pass, and the ratio table.

    eps defaults to delta*(c_j - c) per stage (0 at the last stage,
    where the mean equals c exactly); an explicit eps_schedule overrides.
    """
    delta = Fraction(delta)
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0, 1)")
    if eps_schedule is not None:
        eps_schedule = [Fraction(e) for e in eps_schedule]
        if len(eps_schedule) != spec.J:
            raise ValueError(f"expected {spec.J} eps values")
    state = init_components(spec)
    for j in range(1, spec.J + 1):
        if eps_schedule is not None:
            eps = eps_schedule[j - 1]
        else:
            eps = (spec.c_stage(j) - spec.c) * delta
        stage(state, psi, eps, retry_cap)
    final = recheck_all(state, psi)
    rows = tuple(verify_divergence(state, psi))
    return PodviginWitness(spec, psi, state, final, rows)


def verify_witness(doc: dict) -> List[CheckFailure]:
    """Re-verify a persisted witness document from scratch.

    Three independent passes, all reported in one failure list:

      * replay: rebuild the system from the stage records, checking the
        recorded splice position against the placement policy and the
        recorded N_j/psi values against the rate;
      * structure: the replayed system must serialize identically to the
        stored one;
      * stability: every recorded window check and the divergence table
        re-run on the *stored* system (so a corrupted system is caught
        both structurally and, where margins are actually violated, as
        the failing check itself).

    Boolean checks (structure equality) use a 0 == 1 sentinel row.
    Returns the violated checks; an empty list means the witness is valid.
    """
    if doc.get("kind") != "podvigin":
        raise ValueError(f"not a mergeable-components witness: "
                         f"kind={doc.get('kind')!r}")
    spec = ComponentSpec.from_doc(doc["spec"])
    psi = Rate.from_config(doc["rate"])
    records = [StageRecord.from_doc(d) for d in doc["stages"]]
    failures: List[CheckFailure] = []

    def fail(name, j, lhs, rhs, rel):
        failures.append(CheckFailure("podvigin", name, j,
                                     Fraction(lhs), Fraction(rhs), rel))

    # Replay the records.
    state = init_components(spec)
    rebuilt = None
    for rec in records:
        j = rec.j
        if j != state.stage + 1 or j > spec.J:
            fail("stage_order", j, j, state.stage + 1, "==")
            break
        c_j = spec.c_stage(j)
        if rec.c_j != c_j:
            fail("stage_mean", j, rec.c_j, c_j, "==")
        last = j == spec.J
        merged = refine(state.merged, rec.r)
        if state.protected.size:
            prot = np.add.outer(
                state.protected,
                state.merged.length * np.arange(rec.r, dtype=np.int64)
            ).ravel()
        else:
            prot = state.protected
        arc = refine(Tower(spec.counts[j], j), state.refinement * rec.r)
        if rec.arc_len != arc.length:
            fail("arc_length", j, rec.arc_len, arc.length, "==")
        policy = splice_position(merged, j - 1, prot)
        if rec.splice_left != policy:
            fail("splice_policy", j, rec.splice_left, policy, "==")
        if rec.splice_right != 0:
            fail("splice_right", j, rec.splice_right, 0, "==")
        if not 0 <= rec.splice_left < merged.length:
            fail("splice_range", j, rec.splice_left, merged.length, "<")
            break
        # Keep rebuilding with the *recorded* position so the structure
        # comparison stays meaningful after a policy mismatch.
        glued = splice(merged, arc, rec.splice_left, rec.splice_right)
        if rec.length != glued.length:
            fail("stage_length", j, rec.length, glued.length, "==")
        if last:
            if rec.eq1_target is not None or rec.psi_N is not None:
                fail("eq1_last_stage", j, 0, 1, "==")
            if rec.N != glued.length or rec.q != 1:
                fail("last_window", j, rec.N, glued.length, "==")
        else:
            target = (c_j - spec.c) / j
            if rec.eq1_target != target:
                fail("eq1_target", j, rec.eq1_target or 0, target, "==")
            try:
                q = max(1, ceil_div(psi.threshold(target), glued.length))
            except Unsatisfiable:
                q = 0
            if rec.q != q or rec.N != q * glued.length:
                fail("window_multiple", j, rec.q, q, "==")
            if rec.psi_N != psi.eval(rec.N):
                fail("rate_value", j, rec.psi_N or 0, psi.eval(rec.N), "==")
            if rec.psi_N is None or not rec.psi_N < target:
                fail("eq1", j, rec.psi_N or 0, target, "<")
        prot = np.where(prot <= rec.splice_left, prot,
                        prot + arc.length)
        state.merged = glued
        state.refinement *= rec.r
        state.protected = np.concatenate(
            [prot, np.array([rec.splice_left,
                             rec.splice_left + arc.length], np.int64)])
        state.stage = j
    else:
        if state.stage == spec.J:
            rebuilt = state.merged
    if len(records) != spec.J and not any(
            f.name == "stage_order" for f in failures):
        fail("stage_count", len(records), len(records), spec.J, "==")

    # Stored system: parse, compare against the replay, then re-check.
    try:
        stored = deserialize(doc["system"])
    except (IRError, KeyError, TypeError, ValueError):
        fail("system_parse", 0, 0, 1, "==")
        return failures
    if rebuilt is not None and serialize(rebuilt) != doc["system"]:
        fail("system_structure", spec.J, 0, 1, "==")
    L = stored.length
    if L != spec.granularity * state.refinement:
        fail("system_length", spec.J, L,
             spec.granularity * state.refinement, "==")
    for i, mass in enumerate(spec.masses):
        got = stored.label_mass(i)
        if got != mass:
            fail("component_mass", i, got, mass, "==")
    for rec in records:
        measure = _global_measure(L, stored, set(range(rec.j + 1)),
                                  rec.N, rec.c_j, rec.eps)
        bound = spec.mu_union(rec.j) - rec.eps
        if not measure >= bound:
            fail("eq2_final", rec.j, measure, bound, ">=")
    _, div_failures = _stored_divergence(spec, psi, records, stored)
    failures.extend(div_failures)
    return failures


def _stored_divergence(spec: ComponentSpec, psi: Rate,
                       records: Sequence[StageRecord], stored: Node):
    """Divergence table recomputed on a deserialized system."""
    L = stored.length
    rows = []
    failures = []
    for rec in records:
        gap = rec.c_j - spec.c
        if gap == 0:
            continue
        thresh = gap - rec.eps
        rep = window_stats(stored, {0}, None, rec.N, spec.c, thresh)
        q_mass = 1 - Fraction(rep.count_within_strict, L)
        psi_n = psi.eval(rec.N)
        ratio = thresh / psi_n
        target = rec.j * (1 - rec.eps / gap)
        bound = spec.mu_union(rec.j) - rec.eps
        rows.append(DivergenceRow(
            j=rec.j, N=rec.N, c_j=rec.c_j, eps=rec.eps, threshold=thresh,
            qualifying_mass=q_mass, mass_bound=bound, psi_N=psi_n,
            ratio=ratio, target=target))
        if not q_mass >= bound:
            failures.append(CheckFailure("podvigin", "qualifying_mass",
                                         rec.j, q_mass, bound, ">="))
        if not ratio > target:
            failures.append(CheckFailure("podvigin", "ratio", rec.j,
                                         ratio, target, ">"))
    return tuple(rows), failures


def stored_divergence(doc: dict):
    """(rows, failures) of the divergence table from a witness document."""
    spec = ComponentSpec.from_doc(doc["spec"])
    psi = Rate.from_config(doc["rate"])
    records = [StageRecord.from_doc(d) for d in doc["stages"]]
    stored = deserialize(doc["system"])
    return _stored_divergence(spec, psi, records, stored)
