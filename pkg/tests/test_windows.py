import random
from fractions import Fraction

import pytest

from ergolab.cycle_ir import Loop, Refine, Splice, Tower, refine
from ergolab.windows import (HAVE_KERNEL, brute_force_oracle, default_engine,
                             l1_norm_deviation, window_stats)

from oracles import random_system

F = Fraction

needs_kernel = pytest.mark.skipif(not HAVE_KERNEL,
                                  reason="compiled kernel not built")


def ones_zeros():
    # stream 1, 0, 0, 1
    return Loop((Tower(1, 1), Tower(2, 0), Tower(1, 1)))


def pick_labels(sys_, rng):
    """An f/R pair drawn from the labels actually present."""
    present = sorted(sys_.label_counts())
    f = {rng.choice(present)}
    r = None if rng.random() < 0.5 else set(rng.sample(present, rng.randint(1, len(present))))
    return f, r


def measures(rep):
    """The mass-valued fields (raw counts scale with refinement)."""
    return (rep.measure_within, rep.l1_deviation, rep.min_dev, rep.max_dev,
            rep.restriction_mass)


# ---------------------------------------------------------------------------
# pinned examples


def test_hand_enumerated_example():
    # window sums over the four starts are a permutation of 1, 0, 1, 2
    rep = window_stats(ones_zeros(), {1}, None, 2, F(1, 2), F(0))
    assert rep.measure_within == F(1, 2)
    assert rep.l1_deviation == F(1, 4)
    assert rep.min_dev == F(0)
    assert rep.max_dev == F(1, 2)
    assert rep.restriction_mass == F(1)


def test_full_period_window_is_the_mean():
    rng = random.Random(3)
    for _ in range(10):
        sys_ = random_system(rng, max_len=400)
        lab = sorted(sys_.label_counts())[0]
        mean = sys_.label_mass(lab)
        rep = window_stats(sys_, {lab}, None, sys_.length, mean, F(0))
        assert rep.measure_within == F(1)
        assert rep.l1_deviation == F(0)
        assert rep.min_dev == rep.max_dev == F(0)


def test_empty_indicator():
    rep = window_stats(ones_zeros(), set(), None, 3, F(0), F(0))
    assert rep.measure_within == F(1)
    assert rep.l1_deviation == F(0)


def test_restriction_set():
    rep = window_stats(ones_zeros(), {1}, {0}, 2, F(1, 2), F(0))
    assert rep.restriction_mass == F(1, 2)
    assert rep.measure_within <= rep.restriction_mass
    # starts labeled 0 are positions 1 and 2: window sums 1 and 1... check
    # against the independent oracle rather than by hand
    assert rep == brute_force_oracle(ones_zeros(), {1}, {0}, 2, F(1, 2), F(0))


def test_mean_identity():
    # sum_x w(x) = N * S_total, so the L1 norm against a = 0 is S/L exactly
    rng = random.Random(5)
    for _ in range(10):
        sys_ = random_system(rng, max_len=600)
        lab = sorted(sys_.label_counts())[-1]
        s = sys_.label_counts()[lab]
        for n in (1, 3, sys_.length, 2 * sys_.length + 3):
            assert l1_norm_deviation(sys_, {lab}, n, F(0)) == F(s, sys_.length)


# ---------------------------------------------------------------------------
# oracle equivalence (the acceptance run uses a bigger corpus)


def window_cases(sys_):
    L = sys_.length
    for n in (1, 2, max(L - 1, 1), L, 2 * L + 3):
        yield n


def test_engine_matches_oracle_small_corpus():
    rng = random.Random(7)
    for _ in range(30):
        sys_ = random_system(rng, max_len=300)
        c = F(rng.randint(0, 4), rng.randint(4, 9))
        eps = F(rng.randint(0, 3), rng.randint(6, 24))
        f, r = pick_labels(sys_, rng)
        for n in window_cases(sys_):
            want = brute_force_oracle(sys_, f, r, n, c, eps)
            assert window_stats(sys_, f, r, n, c, eps) == want


def test_splice_example_against_oracle():
    left = Loop((Tower(3, 0),))
    right = Loop((Tower(2, 1),))
    s = Splice(left, right, 1, 0)
    for n in (1, 2, 3, 5, 13):
        want = brute_force_oracle(s, {0}, None, n, F(3, 5), F(1, 10))
        assert window_stats(s, {0}, None, n, F(3, 5), F(1, 10)) == want


def test_oracle_refuses_big_systems():
    with pytest.raises(ValueError):
        brute_force_oracle(Refine(Loop((Tower(7, 0),)), 100000), {0}, None,
                           1, F(0), F(0))


# ---------------------------------------------------------------------------
# invariances


def test_shift_invariance():
    towers = (Tower(3, 1), Tower(4, 0), Tower(2, 1), Tower(5, 2))
    reports = []
    for k in range(4):
        rotated = Loop(towers[k:] + towers[:k])
        reports.append(window_stats(rotated, {1}, {0, 1}, 5, F(1, 3), F(1, 7)))
    assert all(rep == reports[0] for rep in reports)


def test_refine_invariance():
    rng = random.Random(9)
    for _ in range(12):
        sys_ = random_system(rng, max_len=250)
        f, rset = pick_labels(sys_, rng)
        base = window_stats(sys_, f, rset, 4, F(2, 5), F(1, 9))
        for r in (2, 3, 7):
            lifted = refine(sys_, r)
            got = window_stats(lifted, f, rset, 4, F(2, 5), F(1, 9))
            assert measures(got) == measures(base)


# ---------------------------------------------------------------------------
# engines agree with each other


@needs_kernel
def test_engines_bit_identical():
    rng = random.Random(13)
    for _ in range(20):
        sys_ = random_system(rng, max_len=900)
        c, eps = F(1, 3), F(1, 11)
        f, r = pick_labels(sys_, rng)
        for n in window_cases(sys_):
            py = window_stats(sys_, f, r, n, c, eps, engine="py")
            cy = window_stats(sys_, f, r, n, c, eps, engine="cy")
            assert py == cy


@needs_kernel
def test_thread_count_does_not_change_reports(monkeypatch):
    rng = random.Random(17)
    sys_ = random_system(rng, max_len=5000)
    n = sys_.length - 1
    monkeypatch.setenv("ERGOLAB_THREADS", "1")
    one = window_stats(sys_, {1}, None, n, F(1, 4), F(1, 9), engine="cy")
    monkeypatch.setenv("ERGOLAB_THREADS", "3")
    three = window_stats(sys_, {1}, None, n, F(1, 4), F(1, 9), engine="cy")
    assert one == three


def test_engine_env_selection(monkeypatch):
    monkeypatch.setenv("ERGOLAB_ENGINE", "py")
    assert default_engine() == "py"
    monkeypatch.setenv("ERGOLAB_ENGINE", "bogus")
    with pytest.raises(ValueError):
        default_engine()
