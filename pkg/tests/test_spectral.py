import math

import numpy as np
import pytest

from transferlin.errors import DomainError, EvaluationError
from transferlin.spectral import (
    JointSpectralDensity,
    SpectralDensity,
    integrate,
    parse_density,
    parse_joint_density,
    q_tail,
    q_tail_inverse,
    stieltjes,
)

BILEVEL = SpectralDensity.atoms([(1.0, 0.3), (5.0, 0.7)])
UNIFORM = SpectralDensity.uniform(1.0, 5.0)


def test_stieltjes_single_atom():
    p = SpectralDensity.single(3.0)
    assert stieltjes(p, -2.0) == pytest.approx(1.0 / 5.0, rel=1e-15)


def test_stieltjes_uniform_closed_form():
    assert stieltjes(UNIFORM, -1.0) == pytest.approx(0.25 * math.log(3.0), rel=1e-14)
    assert 0.25 * math.log(3.0) == pytest.approx(0.27465, abs=1e-5)
    # Riemann cross-check
    r = 1.0 + 4.0 * (np.arange(10 ** 6) + 0.5) / 10 ** 6
    assert stieltjes(UNIFORM, -1.0) == pytest.approx(np.mean(1.0 / (r + 1.0)), abs=1e-10)


def test_stieltjes_bilevel_at_zero():
    assert stieltjes(BILEVEL, 0.0) == pytest.approx(0.44, rel=1e-15)


def test_stieltjes_rejects_points_in_support():
    with pytest.raises(DomainError):
        stieltjes(BILEVEL, 1.0)


def test_integrate_examples():
    assert integrate(SpectralDensity.single(2.0), lambda r: r ** 2) == pytest.approx(4.0)
    assert integrate(BILEVEL, lambda r: r) == pytest.approx(3.8, rel=1e-15)
    assert integrate(UNIFORM, lambda r: r) == pytest.approx(3.0, abs=1e-12)


def test_integrate_uniform_matches_riemann_sum():
    theta = 0.7
    r = 1.0 + 4.0 * (np.arange(10 ** 6) + 0.5) / 10 ** 6
    riemann = float(np.mean(1.0 / (2.0 + theta * r) ** 2))
    assert integrate(UNIFORM, lambda x: 1.0 / (2.0 + theta * x) ** 2) == pytest.approx(riemann, abs=1e-8)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_integrate_non_finite_raises():
    with pytest.raises(EvaluationError):
        integrate(BILEVEL, lambda r: 1.0 / (r - 1.0))


def test_integrate_joint():
    j = JointSpectralDensity.atoms([(1.0, 2.0, 0.5), (2.0, 1.0, 0.5)])
    assert integrate(j, lambda a, b: a * b) == pytest.approx(2.0)


def test_weights_must_sum_to_one():
    with pytest.raises(DomainError):
        SpectralDensity.atoms([(1.0, 0.3), (5.0, 0.6)])
    with pytest.raises(DomainError):
        SpectralDensity.atoms([(0.0, 1.0)])


def test_joint_exchangeability_checked():
    with pytest.raises(DomainError):
        JointSpectralDensity.atoms([(1.0, 2.0, 1.0)])
    JointSpectralDensity.atoms([(1.0, 2.0, 1.0)], exchangeable=False)


def test_q_tail_values():
    assert q_tail(0.0) == 0.5
    assert q_tail(math.sqrt(2.0)) == pytest.approx(0.0786496035251426, rel=1e-12)
    for x in (0.3, 1.7, 5.0, 8.0):
        assert q_tail(x) + q_tail(-x) == pytest.approx(1.0, abs=1e-12)
    # far tail stays accurate (no 1 - Phi cancellation)
    assert q_tail(30.0) == pytest.approx(4.906713927148187e-198, rel=1e-12)


def test_q_tail_inverse_values():
    assert q_tail_inverse(0.5) == 0.0
    assert q_tail_inverse(0.25) == pytest.approx(0.6744897501960817, abs=1e-12)
    assert q_tail_inverse(q_tail(1.7)) == pytest.approx(1.7, abs=1e-9)
    assert q_tail_inverse(0.975) == pytest.approx(-1.959963984540054, abs=1e-12)
    # 40-digit mpmath root of erfc(x/sqrt2)/2 = 1e-300
    assert q_tail_inverse(1e-300) == pytest.approx(37.047096299361199, rel=1e-12)


@pytest.mark.parametrize("e", [0.0, 1.0, -0.1, 1.5])
def test_q_tail_inverse_domain(e):
    with pytest.raises(DomainError):
        q_tail_inverse(e)


def test_quantiles_allocation():
    q = BILEVEL.quantiles(1000)
    assert (q == 1.0).sum() == 300 and (q == 5.0).sum() == 700
    u = UNIFORM.quantiles(4)
    assert np.allclose(u, [1.5, 2.5, 3.5, 4.5])
    odd = SpectralDensity.atoms([(1.0, 1 / 3), (2.0, 1 / 3), (3.0, 1 / 3)]).quantiles(10)
    assert odd.size == 10


def test_parse_density_literals():
    p = parse_density("atoms = [[1.0, 0.3], [5.0, 0.7]]")
    assert p.kind == "atoms" and np.allclose(p.locations, [1, 5])
    u = parse_density("uniform = [1.0, 5.0]")
    assert u.kind == "uniform" and u.support_min == 1.0 and u.support_max == 5.0
    assert parse_density("bilevel").to_literal() == "atoms = [[1.0, 0.3], [5.0, 0.7]]"
    assert parse_density(UNIFORM.to_literal()).support_max == 5.0
    with pytest.raises(DomainError):
        parse_density("gamma = [1, 2]")
    with pytest.raises(DomainError):
        parse_density("atoms = [[1, 0.3]")


def test_parse_joint_density():
    j = parse_joint_density("joint = [[0.1, 0.2, 0.5], [0.2, 0.1, 0.5]]")
    assert np.allclose(j.total, [0.3, 0.3])
    with pytest.raises(DomainError):
        parse_joint_density("atoms = [[1, 1]]")


def test_scaled_density():
    assert np.allclose(BILEVEL.scaled(2.0).locations, [2.0, 10.0])
    assert UNIFORM.scaled(0.5).support_max == 2.5
