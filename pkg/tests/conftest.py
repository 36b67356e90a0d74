"""Shared fixtures: the expensive end-to-end witnesses are built once."""

from fractions import Fraction

import pytest

from ergolab import krengel, podvigin
from ergolab.rates import Rate


@pytest.fixture(scope="session")
def krengel3():
    """J=3, psi = power(1/2): plan, witness and verified rows."""
    plan = krengel.select_heights(Rate.power(Fraction(1, 2)), 3)
    witness = krengel.build_witness(plan)
    rows = krengel.verify_krengel(witness)
    return plan, witness, rows


@pytest.fixture(scope="session")
def crit2():
    """Masses (3,3,2,2)/10, psi = power(1/2), eps_j = (c_j - c)/8."""
    spec = podvigin.ComponentSpec.build(
        [Fraction(3, 10), Fraction(3, 10), Fraction(2, 10), Fraction(2, 10)])
    return podvigin.run_all(spec, Rate.power(Fraction(1, 2)))


@pytest.fixture(scope="session")
def replica34():
    """Same masses and rate, eps_j = 3(c_j - c)/4: small enough (L = 96900)
    for the per-atom oracle to re-check every stage and the final table."""
    spec = podvigin.ComponentSpec.build(
        [Fraction(3, 10), Fraction(3, 10), Fraction(2, 10), Fraction(2, 10)])
    return podvigin.run_all(spec, Rate.power(Fraction(1, 2)),
                            delta=Fraction(3, 4))
