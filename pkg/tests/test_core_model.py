import numpy as np
import pytest
from hypothesis import given, strategies as st

from jamgame.core_model import (
    BASELINE,
    DegenerateChainError,
    FullCensus,
    FullState,
    MaliciousProfile,
    MaliciousView,
    MarkovParams,
    SecondaryProfile,
    SecondaryView,
    classify_band,
    next_busy_probability,
    project_malicious_view,
    project_secondary_view,
    stationary_primary,
)
from conftest import tweak


def test_baseline_values():
    p = BASELINE
    assert (p.n_N, p.n_s, p.n_m) == (50, 10, 10)
    assert (p.C_s, p.C_m, p.G_s, p.G_m, p.L_s) == (1, 1, 50, 75, 100)
    assert (p.alpha, p.beta) == (0.4, 0.6)
    assert p.markov.P_pB == pytest.approx(0.5)
    assert p.n_p == pytest.approx(25.0)


@pytest.mark.parametrize("alpha,beta,busy", [
    (0.4, 0.6, 0.5),
    (0.5, 0.5, 0.5),
    (0.2, 0.6, 2 / 3),
    (1.0, 0.0, 0.5),
    (0.3, 1.0, 0.0),
])
def test_stationary_law(alpha, beta, busy):
    b, i = stationary_primary(MarkovParams(alpha, beta))
    assert b == pytest.approx(busy)
    assert b + i == pytest.approx(1.0)


def test_absorbing_chain_rejected():
    with pytest.raises(DegenerateChainError):
        stationary_primary(MarkovParams(0.0, 1.0))


@given(st.floats(0.01, 1.0), st.floats(0.0, 0.99))
def test_stationary_law_is_fixed_point(alpha, beta):
    m = MarkovParams(alpha, beta)
    busy, idle = stationary_primary(m)
    again = busy * next_busy_probability(m, True) + idle * next_busy_probability(m, False)
    assert again == pytest.approx(busy, abs=1e-12)


def test_stationary_matches_long_chain():
    # empirical occupancy of a long simulated chain
    m = MarkovParams(0.2, 0.7)
    rng = np.random.default_rng(3)
    u = rng.random(200_000)
    state, busy = False, 0
    for x in u:
        state = x < next_busy_probability(m, state)
        busy += state
    assert busy / len(u) == pytest.approx(m.P_pB, abs=0.01)


@pytest.mark.parametrize("bad", [
    dict(n_s=60), dict(n_m=-1), dict(C_s=-1.0), dict(G_m=float("inf")),
    dict(n_N=0, n_s=0, n_m=0), dict(n_s=2.5),
])
def test_param_validation(bad):
    with pytest.raises(ValueError):
        tweak(**bad)


def test_markov_range():
    with pytest.raises(ValueError):
        MarkovParams(1.2, 0.5)


def test_state_table():
    assert classify_band(False, True, True) is FullState.S1
    assert classify_band(False, True, False) is FullState.S2
    assert classify_band(False, False, True) is FullState.S3
    assert classify_band(True, True, True) is FullState.S4
    assert classify_band(True, False, True) is FullState.S5
    assert classify_band(True, True, False) is FullState.S6
    assert classify_band(True, False, False) is FullState.S7
    assert classify_band(False, False, False) is FullState.S8


@pytest.mark.parametrize("state,sv,mv", [
    (FullState.S1, SecondaryView.a, MaliciousView.A),
    (FullState.S2, SecondaryView.b, MaliciousView.D),
    (FullState.S3, SecondaryView.d, MaliciousView.B),
    (FullState.S4, SecondaryView.c, MaliciousView.C),
    (FullState.S5, SecondaryView.d, MaliciousView.C),
    (FullState.S6, SecondaryView.c, MaliciousView.D),
    (FullState.S7, SecondaryView.d, MaliciousView.D),
    (FullState.S8, SecondaryView.d, MaliciousView.D),
])
def test_views(state, sv, mv):
    assert project_secondary_view(state) is sv
    assert project_malicious_view(state) is mv


def test_views_agree_with_presence_flags():
    for state in FullState:
        sv = project_secondary_view(state)
        mv = project_malicious_view(state)
        # a secondary sees its own users; a jammer sees its own
        assert (sv is not SecondaryView.d) == state.secondary
        assert (mv is not MaliciousView.D) == state.malicious


@given(st.lists(st.floats(0, 20), min_size=8, max_size=8))
def test_census_views_partition(counts):
    c = FullCensus.from_counts(counts)
    total = sum(counts)
    assert c.n_a + c.n_b + c.n_c + c.n_d == pytest.approx(total)
    assert c.n_A + c.n_B + c.n_C + c.n_D == pytest.approx(total)
    assert c.secondary_mass == pytest.approx(c.n_a + c.n_b + c.n_c)
    assert c.malicious_mass == pytest.approx(c.n_A + c.n_B + c.n_C)


def test_census_needs_eight():
    with pytest.raises(ValueError):
        FullCensus.from_counts([1, 2, 3])


def test_profiles():
    x = SecondaryProfile(0.2, 0.5, 1.0)
    assert (x.P_aa, x.P_bb, x.P_cc) == pytest.approx((0.8, 0.5, 0.0))
    y = MaliciousProfile(P_CD=0.25)
    assert y.switch() == (0.0, 0.0, 0.25)
    with pytest.raises(ValueError):
        SecondaryProfile(P_ad=1.5)
    with pytest.raises(ValueError):
        MaliciousProfile(P_BD=-0.1)
