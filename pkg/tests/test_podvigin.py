from fractions import Fraction

import numpy as np
import pytest

from ergolab.cycle_ir import Tower, refine, serialize, splice
from ergolab.podvigin import (ComponentSpec, RetryCapExceeded, init_components,
                              recheck_all, run_all, splice_position, stage,
                              stored_divergence, verify_divergence,
                              verify_witness)
from ergolab.rates import Rate
from ergolab.windows import brute_force_oracle

F = Fraction

MASSES = (F(3, 10), F(3, 10), F(2, 10), F(2, 10))


# ---------------------------------------------------------------------------
# component arithmetic


def test_spec_constants():
    spec = ComponentSpec.build(MASSES)
    assert spec.granularity == 100
    assert spec.counts == (30, 30, 20, 20)
    assert spec.c == F(3, 10)
    assert [spec.c_stage(j) for j in range(4)] == \
        [F(1), F(1, 2), F(3, 8), F(3, 10)]


def test_c_stage_strictly_decreasing_to_c():
    spec = ComponentSpec.build(MASSES)
    cs = [spec.c_stage(j) for j in range(spec.J + 1)]
    assert all(a > b for a, b in zip(cs, cs[1:]))
    assert cs[-1] == spec.c


def test_spec_validation():
    with pytest.raises(ValueError):
        ComponentSpec.build([F(1, 2), F(1, 3)])          # does not sum to 1
    with pytest.raises(ValueError):
        ComponentSpec.build([F(1), F(0)])                # zero mass
    with pytest.raises(ValueError):
        # granularity too coarse: the small component gets a single atom
        ComponentSpec.build([F(999, 1000), F(1, 1000)], multiplier=1)


def test_init_state():
    state = init_components(ComponentSpec.build(MASSES))
    assert state.stage == 0
    assert state.merged.length == 30
    assert state.merged.label_mass(0) == 1
    assert state.atoms_total == 100


# ---------------------------------------------------------------------------
# splice position policy


def test_splice_position_no_protection_is_leftmost():
    merged = splice(Tower(4, 0), Tower(4, 1), 0, 0)
    assert splice_position(merged, 1, np.empty(0, np.int64)) in range(1, 9)
    # leftmost atom of the label when nothing is protected
    flat_first = next(i for i, lab in enumerate(
        __import__("ergolab.cycle_ir", fromlist=["materialize"])
        .materialize(merged)) if lab == 1)
    assert splice_position(merged, 1, np.empty(0, np.int64)) == flat_first


def test_splice_position_matches_per_atom_argmax():
    # exact policy: leftmost atom of the label at maximal cyclic distance
    # to the protected set, recomputed here atom by atom
    import random
    from ergolab.cycle_ir import materialize
    from oracles import random_system
    rng = random.Random(37)
    for _ in range(80):
        sys_ = random_system(rng, max_len=400)
        flat = materialize(sys_)
        L = len(flat)
        label = rng.choice(sorted(set(flat)))
        prot = np.array(sorted(rng.sample(range(L), rng.randint(1, min(8, L)))),
                        dtype=np.int64)
        def dist(p):
            return min((p - q) % L if (p - q) % L <= (q - p) % L else (q - p) % L
                       for q in prot.tolist())
        best, arg = 0, -1
        for p, lab in enumerate(flat):
            if lab != label:
                continue
            d = dist(p)
            if d > best:
                best, arg = d, p
        assert splice_position(sys_, label, prot) == arg


# ---------------------------------------------------------------------------
# staged construction (criterion-2 configuration, frozen run)


def test_frozen_stage_records(crit2):
    hist = crit2.state.history
    assert [rec.j for rec in hist] == [1, 2, 3]
    assert [rec.r for rec in hist] == [1, 98, 342]
    assert [rec.retries for rec in hist] == [0, 0, 0]
    assert [rec.length for rec in hist] == [60, 7840, 3351600]
    assert [rec.arc_len for rec in hist] == [30, 1960, 670320]
    assert [rec.splice_left for rec in hist] == [0, 15, 995]
    assert all(rec.splice_right == 0 for rec in hist)
    assert [rec.q for rec in hist] == [1, 1, 1]
    assert [rec.N for rec in hist] == [60, 7840, 3351600]
    assert [rec.c_j for rec in hist] == [F(1, 2), F(3, 8), F(3, 10)]
    assert [rec.eps for rec in hist] == [F(1, 40), F(3, 320), F(0)]
    assert [rec.psi_N for rec in hist] == \
        [F(33843, 262144), F(6063339, 536870912), None]
    assert [rec.eq1_target for rec in hist] == [F(1, 5), F(3, 80), None]


def test_frozen_eq1_margins_positive(crit2):
    for rec in crit2.state.history:
        if rec.eq1_target is None:
            continue
        assert rec.psi_N < rec.eq1_target
        assert rec.N == rec.q * rec.length


def test_frozen_eq2_measures(crit2):
    by_stage = {rec.j: rec.eq2 for rec in crit2.state.history}
    assert [(ch.i, ch.measure, ch.bound) for ch in by_stage[1]] == \
        [(1, F(3, 5), F(23, 40))]
    assert [(ch.i, ch.measure, ch.bound) for ch in by_stage[2]] == \
        [(1, F(1459, 2450), F(23, 40)), (2, F(4, 5), F(253, 320))]
    assert [(ch.i, ch.measure, ch.bound) for ch in by_stage[3]] == \
        [(1, F(1459, 2450), F(23, 40)),
         (2, F(334321, 418950), F(253, 320)),
         (3, F(1), F(1))]
    for checks in by_stage.values():
        assert all(ch.measure >= ch.bound for ch in checks)


def test_stability_recheck_matches_final(crit2):
    checks = recheck_all(crit2.state, crit2.psi)
    assert checks == crit2.final_checks
    assert all(ch.measure >= ch.bound for ch in checks)


def test_frozen_divergence_table(crit2):
    rows = crit2.divergence
    assert [d.j for d in rows] == [1, 2]          # c_3 = c: no third row
    one, two = rows
    assert (one.N, one.threshold) == (60, F(7, 40))
    assert one.qualifying_mass == F(697, 700)
    assert one.mass_bound == F(23, 40)
    assert one.ratio == F(229376, 169215)
    assert one.target == F(7, 8)
    assert (two.N, two.threshold) == (7840, F(21, 320))
    assert two.qualifying_mass == F(557917, 558600)
    assert two.mass_bound == F(253, 320)
    assert two.ratio == F(58720256, 10105565)
    assert two.target == F(7, 4)
    for d in rows:
        assert d.qualifying_mass >= d.mass_bound
        assert d.ratio > d.target
    assert rows[0].ratio < rows[1].ratio


def test_final_masses_exact(crit2):
    crit2.state.assert_masses()
    for i, m in enumerate(MASSES):
        assert crit2.state.merged.label_mass(i) == m


def test_delta_sets_disjoint(crit2):
    # each stage contributes two delta atoms; every refine-lifted copy of
    # an earlier pair is kept protected, so the count telescopes
    hist = crit2.state.history
    prot = crit2.state.protected
    want = 0
    for k in range(len(hist)):
        lift = 1
        for rec in hist[k + 1:]:
            lift *= rec.r
        want += 2 * lift
    assert prot.size == want
    assert len(np.unique(prot)) == prot.size


def test_verify_divergence_on_state(crit2):
    rows = verify_divergence(crit2.state, crit2.psi)
    assert rows == crit2.divergence


# ---------------------------------------------------------------------------
# manual staging


def test_stage_by_stage():
    spec = ComponentSpec.build(MASSES)
    psi = Rate.power(F(1, 2))
    state = init_components(spec)
    for j in (1, 2, 3):
        eps = (spec.c_stage(j) - spec.c) / 8
        state = stage(state, psi, eps)
        assert state.stage == j
    with pytest.raises(ValueError):
        stage(state, psi, F(1, 99))


def test_eps_must_be_positive_before_last_stage():
    spec = ComponentSpec.build(MASSES)
    state = init_components(spec)
    with pytest.raises(ValueError):
        stage(state, Rate.power(F(1, 2)), F(0))


def test_retry_cap():
    spec = ComponentSpec.build(MASSES)
    with pytest.raises(RetryCapExceeded) as err:
        run_all(spec, Rate.power(F(1, 2)), retry_cap=50)
    assert err.value.stage == 2
    assert err.value.cap == 50


def test_custom_eps_schedule():
    spec = ComponentSpec.build(MASSES)
    eps = [F(1, 50), F(1, 100), F(0)]
    witness = run_all(spec, Rate.power(F(1, 2)), eps_schedule=eps)
    assert [rec.eps for rec in witness.state.history] == eps


# ---------------------------------------------------------------------------
# oracle re-checks on the small replica (final system L = 96900)


def test_replica_frozen_summary(replica34):
    hist = replica34.state.history
    assert [rec.r for rec in hist] == [1, 17, 57]
    assert [rec.splice_left for rec in hist] == [0, 15, 185]
    assert [rec.N for rec in hist] == [60, 1360, 96900]
    assert hist[-1].length == 96900


def test_replica_stages_match_oracle(replica34):
    """Replay each stage and re-measure every recorded check per atom."""
    spec = replica34.spec
    merged = Tower(spec.counts[0], 0)
    cumulative = 1
    for rec in replica34.state.history:
        merged = refine(merged, rec.r)
        cumulative *= rec.r
        arc = refine(Tower(spec.counts[rec.j], rec.j), cumulative)
        assert arc.length == rec.arc_len
        merged = splice(merged, arc, rec.splice_left, rec.splice_right)
        assert merged.length == rec.length
        atoms = spec.granularity * cumulative
        for ch in rec.eq2:
            union = set(range(ch.i + 1))
            rep = brute_force_oracle(merged, {0}, union, ch.N, ch.c, ch.eps)
            assert F(rep.count_within, atoms) == ch.measure
    # the replayed system is the stored one
    assert serialize(merged) == serialize(replica34.state.merged)


def test_replica_divergence_matches_oracle(replica34):
    final = replica34.state.merged
    assert final.length <= 10 ** 5
    for row in replica34.divergence:
        rep = brute_force_oracle(final, {0}, None, row.N,
                                 replica34.spec.c, row.threshold)
        q = 1 - F(rep.count_within_strict, final.length)
        assert q == row.qualifying_mass
        assert q >= row.mass_bound


# ---------------------------------------------------------------------------
# witness documents


def test_witness_doc_verifies_clean(crit2):
    assert verify_witness(crit2.to_doc()) == []


def test_stored_divergence_round_trip(crit2):
    doc = crit2.to_doc()
    rows, failures = stored_divergence(doc)
    assert failures == []
    assert rows == crit2.divergence


def test_witness_doc_rejects_other_kinds(crit2):
    with pytest.raises(ValueError):
        verify_witness({**crit2.to_doc(), "kind": "krengel"})


def test_witness_doc_catches_shifted_record(replica34):
    doc = replica34.to_doc()
    doc["stages"][1]["splice_left"] = str(
        int(doc["stages"][1]["splice_left"]) + 1)
    names = {f.name for f in verify_witness(doc)}
    assert "splice_policy" in names


def test_witness_doc_catches_shifted_stored_system(replica34):
    doc = replica34.to_doc()
    for node in doc["system"]["nodes"]:
        if node["kind"] == "splice":
            node["p_left"] = str(int(node["p_left"]) + 1)
            break
    names = {f.name for f in verify_witness(doc)}
    assert "system_structure" in names


def test_witness_doc_catches_bumped_refinement(replica34):
    # a genuinely different system: measures, masses and length all drift
    doc = replica34.to_doc()
    for node in doc["system"]["nodes"]:
        if node["kind"] == "refine":
            node["factor"] = str(int(node["factor"]) + 1)
            break
    names = {f.name for f in verify_witness(doc)}
    assert "system_structure" in names
    assert "system_length" in names
    assert "component_mass" in names
    assert "eq2_final" in names


def test_witness_doc_catches_dropped_stage(crit2):
    doc = crit2.to_doc()
    doc["stages"] = doc["stages"][:-1]
    names = {f.name for f in verify_witness(doc)}
    assert "stage_count" in names
