import random
from fractions import Fraction
from math import gcd

import pytest

from ergolab.alpern import (AlpernSolution, CoprimalityError, InfeasibleError,
                            NoFeasibleN, ToleranceError, build_tower_cycle,
                            min_feasible_n, solve_multiplicities, verify_witness,
                            witness_doc)
from ergolab.cycle_ir import materialize

from oracles import exhaustive_minimax

F = Fraction
HALF = (F(1, 2), F(1, 2))


# ---------------------------------------------------------------------------
# worked instances


def test_worked_instance_exact():
    sol = solve_multiplicities((2, 3), HALF, 12, F(0))
    assert sol.multiplicities == (3, 2)
    assert sol.masses == (F(1, 2), F(1, 2))
    assert sol.max_mass_error == 0


def test_worked_instance_forced():
    # 3k1 + 5k2 = 17 has the unique positive solution (4, 1)
    sol = solve_multiplicities((3, 5), HALF, 17, F(1))
    assert sol.multiplicities == (4, 1)
    assert sol.masses == (F(12, 17), F(5, 17))
    assert sol.max_mass_error == F(7, 34)


def test_gcd_rejected():
    with pytest.raises(CoprimalityError):
        solve_multiplicities((2, 4), HALF, 12, F(1))
    with pytest.raises(CoprimalityError):
        min_feasible_n((3, 9), HALF, F(1))


def test_infeasible_below_frobenius():
    with pytest.raises(InfeasibleError):
        solve_multiplicities((2, 3), HALF, 4, F(1))
    with pytest.raises(InfeasibleError):
        solve_multiplicities((3, 5), HALF, 7, F(1))


def test_tolerance_error_reports_best():
    with pytest.raises(ToleranceError) as err:
        solve_multiplicities((3, 5), HALF, 17, F(1, 10))
    assert err.value.best_error == F(7, 34)
    assert err.value.best_k == (4, 1)


def test_min_feasible_n():
    assert min_feasible_n((2, 3), HALF, F(0)) == 12
    assert min_feasible_n((2, 3), HALF, F(1, 10)) == 5
    assert min_feasible_n((2, 3), HALF, F(1)) == 5      # any positive solution
    with pytest.raises(NoFeasibleN):
        min_feasible_n((2, 3), HALF, F(0), cap=11)


def test_solution_doc_round_trip():
    sol = solve_multiplicities((2, 3), HALF, 12, F(0))
    assert AlpernSolution.from_doc(sol.to_doc()) == sol


# ---------------------------------------------------------------------------
# optimality against exhaustive search (small corpus; the full sweep is
# in the acceptance suite)


def random_masses(rng, m):
    cuts = sorted(rng.randint(1, 19) for _ in range(m - 1))
    parts = [b - a for a, b in zip([0] + cuts, cuts + [20])]
    return tuple(F(p, 20) for p in parts)


def test_matches_exhaustive_minimax():
    rng = random.Random(101)
    for _ in range(120):
        m = rng.randint(1, 3)
        while True:
            heights = tuple(sorted(rng.sample(range(1, 13), m)))
            if gcd(*heights) == 1 if m > 1 else heights[0] == 1:
                break
        masses = random_masses(rng, m)
        n = rng.randint(sum(heights), 150)
        want = exhaustive_minimax(heights, masses, n)
        if want is None:
            with pytest.raises(InfeasibleError):
                solve_multiplicities(heights, masses, n, F(1))
            continue
        best_err, best_k = want
        sol = solve_multiplicities(heights, masses, n, F(1))
        assert sol.max_mass_error == best_err
        assert sol.multiplicities == best_k
        assert sum(k * h for k, h in zip(sol.multiplicities, sol.heights)) == n
        assert all(k >= 1 for k in sol.multiplicities)


# ---------------------------------------------------------------------------
# tower wiring


def test_round_robin_stream():
    sol = solve_multiplicities((2, 3), HALF, 7, F(1))
    assert sol.multiplicities == (2, 1)
    sys_ = build_tower_cycle(sol)
    assert materialize(sys_) == [1, 1, 2, 2, 2, 1, 1]


def test_family_blocks_stream():
    sol = solve_multiplicities((2, 3), HALF, 7, F(1))
    sys_ = build_tower_cycle(sol, wiring="family_blocks")
    assert materialize(sys_) == [1, 1, 1, 1, 2, 2, 2]


def test_tower_cycle_masses():
    sol = solve_multiplicities((2, 3), HALF, 12, F(0))
    sys_ = build_tower_cycle(sol)
    assert len(sys_.children) == 5
    assert sys_.length == 12
    assert sys_.label_mass(1) == F(1, 2)
    assert sys_.label_mass(2) == F(1, 2)


def test_single_family_identity_cycle():
    sol = solve_multiplicities((1,), (F(1),), 7, F(0))
    assert sol.multiplicities == (7,)
    sys_ = build_tower_cycle(sol)
    assert sys_.length == 7
    assert sys_.label_mass(1) == F(1)


def test_unknown_wiring_rejected():
    sol = solve_multiplicities((2, 3), HALF, 12, F(0))
    with pytest.raises(ValueError):
        build_tower_cycle(sol, wiring="shuffled")


# ---------------------------------------------------------------------------
# witness docs


def make_doc():
    sol = solve_multiplicities((2, 3), HALF, 12, F(0))
    return witness_doc(sol, HALF, F(0))


def test_witness_doc_verifies_clean():
    assert verify_witness(make_doc()) == []


def test_witness_doc_catches_wrong_multiplicity():
    doc = make_doc()
    doc["solution"]["multiplicities"] = ["4", "2"]
    names = {f.name for f in verify_witness(doc)}
    assert "solution_total" in names


def test_witness_doc_catches_tolerance_breach():
    doc = make_doc()
    doc["tol"] = "0"
    doc["targets"] = ["2/5", "3/5"]
    names = {f.name for f in verify_witness(doc)}
    assert "mass_tolerance" in names
    assert "solution_error" in names


def test_witness_doc_catches_system_swap():
    from ergolab.cycle_ir import serialize
    doc = make_doc()
    sol = solve_multiplicities((2, 3), HALF, 12, F(0))
    doc["system"] = serialize(build_tower_cycle(sol, wiring="family_blocks"))
    names = {f.name for f in verify_witness(doc)}
    assert "system_structure" in names
