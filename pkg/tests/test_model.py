import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stopcontest import (ContestSpec, PayoffOutcome, realized_payoff,
                         expected_payoff, closed_form_law,
                         IdentityScale, ExponentialBMScale, DriftingBMScale,
                         TableScale, scale_transform, scale_inverse)


def test_spec_validation():
    with pytest.raises(ValueError):
        ContestSpec(n=1, x0=1.0)
    with pytest.raises(ValueError):
        ContestSpec(n=2, x0=0.0)
    with pytest.raises(ValueError):
        ContestSpec(n=2, x0=1.0, K=-1.0)
    with pytest.raises(ValueError):
        ContestSpec(n=2, x0=1.0, K=1.0, K2=2.0)
    spec = ContestSpec(n=2, x0=1.0, K=3.0, mode="past")
    assert spec.K2 == 1.5  # default K/2
    assert ContestSpec(n=2, x0=1.0, K=3.0, mode="none").effective_k == 0.0


def test_strict_winner():
    spec = ContestSpec(n=3, x0=1.0, K=2.0, mode="past")
    out = PayoffOutcome(own_stop=2.0, own_max=2.0, opponents_stop=[1.0, 0.5])
    assert realized_payoff(spec, out) == 1.0


def test_missed_win_penalty():
    spec = ContestSpec(n=2, x0=1.0, K=2.0, mode="past")
    out = PayoffOutcome(own_stop=0.5, own_max=1.8, opponents_stop=[1.0])
    assert realized_payoff(spec, out) == -2.0


def test_no_winning_strategy_existed():
    spec = ContestSpec(n=2, x0=1.0, K=2.0, mode="past")
    out = PayoffOutcome(own_stop=0.5, own_max=0.8, opponents_stop=[1.0])
    assert realized_payoff(spec, out) == 0.0


def test_tie_at_max_penalty():
    spec = ContestSpec(n=2, x0=1.0, K=2.0, K2=0.5, mode="past")
    out = PayoffOutcome(own_stop=0.5, own_max=1.0, opponents_stop=[1.0])
    assert realized_payoff(spec, out) == -0.5


def test_tie_split():
    spec = ContestSpec(n=3, x0=1.0)
    out = PayoffOutcome(own_stop=1.0, own_max=1.0, opponents_stop=[1.0, 0.2])
    assert realized_payoff(spec, out, tie_count=2) == 0.5


def test_payoff_domain_errors():
    with pytest.raises(ValueError):
        PayoffOutcome(own_stop=1.0, own_max=0.5, opponents_stop=[1.0])
    with pytest.raises(ValueError):
        PayoffOutcome(own_stop=1.0, own_max=1.0, opponents_stop=[])
    spec = ContestSpec(n=2, x0=1.0)
    out = PayoffOutcome(own_stop=1.0, own_max=1.0, opponents_stop=[0.5])
    with pytest.raises(ValueError):
        realized_payoff(spec, out, tie_count=0)


@settings(max_examples=100, deadline=None)
@given(
    x=st.floats(0.01, 5.0), dm=st.floats(0.0, 3.0),
    opp=st.lists(st.floats(0.01, 8.0), min_size=1, max_size=4),
    scale=st.floats(0.1, 10.0), power=st.floats(0.5, 2.0),
)
def test_payoff_scale_invariance(x, dm, opp, scale, power):
    # payoffs depend on the ordering only, so any increasing map leaves
    # them unchanged
    spec = ContestSpec(n=len(opp) + 1, x0=1.0, K=1.5, mode="past")
    f = lambda v: scale * np.asarray(v, dtype=float) ** power
    a = realized_payoff(spec, PayoffOutcome(x, x + dm, opp))
    b = realized_payoff(spec, PayoffOutcome(
        float(f(x)), float(f(x + dm)), list(f(opp))))
    assert a == b


def test_identity_scale():
    s = IdentityScale()
    assert scale_transform(s, 1.7) == 1.7
    assert scale_inverse(s, 1.7) == 1.7


def test_exponential_bm_scale():
    s = ExponentialBMScale(a=1.0, b=0.25)
    assert s.kappa == pytest.approx(0.5)
    assert scale_transform(s, 4.0) == pytest.approx(2.0)
    assert scale_inverse(s, 2.0) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        ExponentialBMScale(a=1.0, b=0.5)  # kappa = 0, not transient to zero


def test_drifting_bm_scale():
    s = DriftingBMScale(a=1.0, b=-0.5)
    assert s.eta == pytest.approx(-1.0)
    assert scale_transform(s, 2.0) == pytest.approx(np.exp(2.0))
    # monotone increasing and vanishing at the lower boundary -infinity
    ys = np.linspace(-5, 5, 50)
    vals = scale_transform(s, ys)
    assert np.all(np.diff(vals) > 0)
    assert scale_transform(s, -40.0) < 1e-15
    with pytest.raises(ValueError):
        DriftingBMScale(a=1.0, b=0.5)


def test_table_scale_roundtrip():
    y = np.linspace(0.5, 4.0, 30)
    s = np.sqrt(y)
    ts = TableScale(y, s)
    probe = np.linspace(0.6, 3.9, 40)
    back = scale_inverse(ts, scale_transform(ts, probe))
    # round trip is exact only up to the interpolation error of the table
    assert np.max(np.abs(back - probe)) < 1e-4
    dense = TableScale(np.linspace(0.5, 4.0, 400), np.sqrt(np.linspace(0.5, 4.0, 400)))
    back2 = scale_inverse(dense, scale_transform(dense, probe))
    assert np.max(np.abs(back2 - probe)) < 1e-8
    with pytest.raises(ValueError):
        TableScale(y, s[::-1])


def test_expected_payoff_k0_reduces_to_standard():
    spec = ContestSpec(n=2, x0=1.0, K=0.0, mode="future")
    law = closed_form_law(spec)
    assert expected_payoff(spec, law, law.marginal) == pytest.approx(0.5, abs=1e-12)
