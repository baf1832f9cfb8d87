import math

import pytest
from hypothesis import given, strategies as st

from triplesol.embedding import (
    DESCENT,
    SUBCRITICAL,
    SUPNORM,
    EmbeddingBound,
    cq_bound,
    critical_exponent,
    holder_descent_bound,
    subcritical_bound,
    sup_norm_constant,
    talenti_critical,
    user_bound,
)
from triplesol.errors import DomainError, UnsupportedError


def talenti_ref(N, p):
    g = math.gamma
    return (
        math.pi ** -0.5
        * N ** (-1 / p)
        * ((p - 1) / (N - p)) ** (1 - 1 / p)
        * (g(1 + N / 2) * g(N) / (g(N / p) * g(1 + N - N / p))) ** (1 / N)
    )


def test_critical_exponent():
    assert critical_exponent(3, 2) == 6
    assert critical_exponent(5, 4) == 20
    assert critical_exponent(2, 2) == math.inf
    with pytest.raises(DomainError):
        critical_exponent(1, 2)


def test_talenti_sobolev_p2_n3():
    # sharp Sobolev constant: (pi N (N-2))^(-1/2) (Gamma(N)/Gamma(N/2))^(1/N)
    expected = (3 * math.pi) ** -0.5 * (2 / (math.sqrt(math.pi) / 2)) ** (1 / 3)
    assert talenti_critical(3, 2) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("N, p", [(3, 2), (5, 4), (4, 1.5), (10, 3), (3, 2.9)])
def test_talenti_against_reference(N, p):
    assert talenti_critical(N, p) == pytest.approx(talenti_ref(N, p), rel=1e-12)


def test_talenti_rejects_p_at_or_above_n():
    with pytest.raises(DomainError):
        talenti_critical(2, 2)
    with pytest.raises(DomainError):
        talenti_critical(3, 4)


def test_subcritical_bound_q_equals_pstar():
    assert subcritical_bound(3, 2, 6, 7.0) == pytest.approx(talenti_critical(3, 2))
    with pytest.raises(DomainError):
        subcritical_bound(3, 2, 6.5, 1.0)


@given(st.floats(1.0, 19.0), st.floats(0.1, 10.0))
def test_subcritical_bound_decreases_with_smaller_domain(q, meas):
    big = subcritical_bound(5, 4, q, 2 * meas)
    small = subcritical_bound(5, 4, q, meas)
    assert small <= big * (1 + 1e-12)


def test_sup_norm_regime_matches_alt_form():
    N, p, q, meas = 2, 4.0, 3.0, math.pi
    b = cq_bound(N, p, q, meas)
    assert b.regime == SUPNORM
    assert b.cq == pytest.approx(sup_norm_constant(N, p, meas) * meas ** (1 / q), rel=1e-13)
    with pytest.raises(DomainError):
        sup_norm_constant(2, 2, 1.0)


def test_cq_bound_regimes():
    assert cq_bound(5, 4, 6, 5.26).regime == SUBCRITICAL
    with pytest.raises(UnsupportedError):
        cq_bound(2, 2, 3, math.pi)


def test_holder_descent_is_valid_and_finite():
    b = holder_descent_bound(2, 2, 3, math.pi)
    assert b.regime == DESCENT
    assert 0 < b.cq < 1
    # any single intermediate exponent gives a weaker (larger) bound
    s = 1.5
    cand = subcritical_bound(2, s, 3, math.pi) * math.pi ** (1 / s - 1 / 2)
    assert b.cq <= cand


def test_embedding_bound_checks():
    assert user_bound(2, 2, 3, 0.5).to_dict()["cq"] == 0.5
    with pytest.raises(DomainError):
        EmbeddingBound(2, 2, 3, -1.0, "user-supplied", "")
