"""Independent checks of the analytic pipeline.

The grid scans touch payoffs only through the group-payoff functions, and
the Monte-Carlo estimator only through the generative one-slot rules, so a
disagreement points at exactly one side.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core_model import (
    FullCensus,
    GameParams,
    MaliciousProfile,
    MaliciousView,
    SecondaryProfile,
    SecondaryView,
)
from .equilibrium import MALICIOUS_VARS, SECONDARY_VARS, EquilibriumResult
from .estimation import occupancy_table_malicious_states, occupancy_table_secondary_states
from .payoff import (
    expected_counts,
    malicious_group_payoffs,
    per_user_malicious,
    per_user_secondary,
    secondary_group_payoffs,
)

SCAN_TOL = 1e-6
INDIFF_TOL = 1e-9
MIN_TRIALS = 10_000

_S_STATES = (SecondaryView.a, SecondaryView.b, SecondaryView.c)
_M_STATES = (MaliciousView.A, MaliciousView.B, MaliciousView.C)


@dataclass(frozen=True)
class ScanReport:
    """Best grid deviation for one variable.

    ``skipped`` marks a variable whose indifference equation was dropped
    because its state or its rival's state is empty; such variables are
    fixed at "stay" by construction and are not certified.
    """

    variable: str
    grid_n: int
    best_value: float
    gain: float
    passed: bool
    skipped: bool = False

    def __post_init__(self) -> None:
        if self.grid_n < 11:
            raise ValueError("grid resolution must be at least 11")


def side_payoff(census: FullCensus, x: SecondaryProfile, y: MaliciousProfile,
                side: str, params: GameParams) -> float:
    if side == "secondary":
        table = occupancy_table_secondary_states(census, x, y, params)
        return secondary_group_payoffs(census, table, x, params).U_s
    if side == "malicious":
        table = occupancy_table_malicious_states(census, x, y, params)
        return malicious_group_payoffs(census, table, y, params).U_m
    raise ValueError(f"unknown side {side!r}")


def _pairs(census: FullCensus) -> list[bool]:
    return [census.view_count(l) > 0 and census.view_count(k) > 0
            for l, k in zip(_S_STATES, _M_STATES)]


def _profiles(side, own, rival):
    return (own, rival) if side == "secondary" else (rival, own)


def best_response_scan(census: FullCensus, params: GameParams, own_profile,
                       rival_profile, side: str, grid_n: int = 101,
                       tol: float = SCAN_TOL) -> list[ScanReport]:
    """Sweep each own switch probability on a grid, rival held fixed.

    ``gain`` is the best grid payoff minus the candidate's payoff, so a
    negative value means the candidate beats every grid point.
    """
    if grid_n < 11:
        raise ValueError("grid_n must be at least 11")
    names = SECONDARY_VARS if side == "secondary" else MALICIOUS_VARS
    cls = type(own_profile)
    paired = _pairs(census)
    base = side_payoff(census, *_profiles(side, own_profile, rival_profile), side, params)
    grid = np.linspace(0.0, 1.0, grid_n)
    reports = []
    for i, name in enumerate(names):
        values = list(own_profile.switch())
        best, best_u = values[i], -np.inf
        for g in grid:
            values[i] = float(g)
            u = side_payoff(census, *_profiles(side, cls(*values), rival_profile), side, params)
            if u > best_u:
                best, best_u = float(g), u
        gain = best_u - base
        ok = gain <= tol * (1 + abs(base))
        reports.append(ScanReport(name, grid_n, best, gain, ok or not paired[i],
                                  skipped=not paired[i]))
    return reports


def joint_scan(census: FullCensus, params: GameParams, own_profile, rival_profile,
               side: str, grid_n: int = 11, tol: float = SCAN_TOL) -> ScanReport:
    """Coarse joint deviation search over all three own variables (advisory)."""
    cls = type(own_profile)
    base = side_payoff(census, *_profiles(side, own_profile, rival_profile), side, params)
    grid = np.linspace(0.0, 1.0, grid_n)
    best, best_u = own_profile.switch(), -np.inf
    for point in itertools.product(grid, repeat=3):
        u = side_payoff(census, *_profiles(side, cls(*map(float, point)), rival_profile),
                        side, params)
        if u > best_u:
            best, best_u = point, u
    gain = best_u - base
    return ScanReport("joint:" + ",".join(f"{v:g}" for v in best), grid_n, float("nan"),
                      gain, gain <= tol * (1 + abs(base)))


@dataclass(frozen=True)
class MonteCarloCounts:
    """Empirical next-slot counts per view state with standard errors."""

    E_js: dict
    E_jsm: dict
    se_js: dict
    se_jsm: dict
    trials: int


_VIEW_MEMBERS = {
    SecondaryView.a: (1,), SecondaryView.b: (2,), SecondaryView.c: (4, 6),
    SecondaryView.d: (3, 5, 7, 8),
    MaliciousView.A: (1,), MaliciousView.B: (3,), MaliciousView.C: (4, 5),
    MaliciousView.D: (2, 6, 7, 8),
}


def _relocate(occupied, movable, probs, targets, coin_u, key_u, target_keys):
    """Vectorised coin flips plus uniform injective placement on targets.

    All arrays are (trials, bands). Surplus movers are dropped back at
    random, as in the simulator.
    """
    flips = movable & (coin_u < probs)
    targets = np.broadcast_to(targets, coin_u.shape)
    n_targets = targets.sum(axis=1, keepdims=True)
    mover_keys = np.where(flips, key_u, np.inf)
    mover_rank = np.argsort(np.argsort(mover_keys, axis=1), axis=1)
    moved = flips & (mover_rank < n_targets)
    n_moved = moved.sum(axis=1, keepdims=True)
    keys = np.where(targets, target_keys, np.inf)
    rank = np.argsort(np.argsort(keys, axis=1), axis=1)
    arrivals = targets & (rank < n_moved)
    return (occupied & ~moved) | arrivals


def monte_carlo_expected_counts(census: FullCensus, s_profile: SecondaryProfile,
                                m_profile: MaliciousProfile, params: GameParams,
                                trials: int = 100_000, seed: int = 0,
                                batch: int = 20_000) -> MonteCarloCounts:
    """Sample one slot of moves and primary transitions from an integer census."""
    if trials < MIN_TRIALS:
        raise ValueError(f"trials must be at least {MIN_TRIALS}")
    counts = [int(round(v)) for v in census.counts()]
    if any(abs(c - v) > 1e-9 for c, v in zip(counts, census.counts())):
        raise ValueError("Monte-Carlo sampling needs an integer census")
    state = np.repeat(np.arange(1, 9), counts)
    n = len(state)
    has_m = np.isin(state, (1, 3, 4, 5))
    has_s = np.isin(state, (1, 2, 4, 6))
    busy = np.isin(state, (4, 5, 6, 7))
    x = np.select([state == 1, state == 2, np.isin(state, (4, 6))], s_profile.switch(), 0.0)
    y = np.select([state == 1, state == 3, np.isin(state, (4, 5))], m_profile.switch(), 0.0)
    s_targets = np.isin(state, (3, 5, 7, 8))
    m_targets = np.isin(state, (2, 6, 7, 8))
    p_busy = np.where(busy, 1.0 - params.alpha, 1.0 - params.beta)

    root = np.random.SeedSequence(seed)
    band_seq, coin_seq, assign_seq = root.spawn(3)
    band_rngs = [np.random.default_rng(s) for s in band_seq.spawn(n)]
    coin_rng = np.random.default_rng(coin_seq)
    assign_rng = np.random.default_rng(assign_seq)

    views = list(_VIEW_MEMBERS)
    masks = {v: np.isin(state, _VIEW_MEMBERS[v]) for v in views}
    sums = {k: {v: np.zeros(2) for v in views} for k in ("js", "jsm")}
    done = 0
    while done < trials:
        t = min(batch, trials - done)
        shape = (t, n)
        s_next = _relocate(np.broadcast_to(has_s, shape), has_s, x, s_targets,
                           coin_rng.random(shape), assign_rng.random(shape),
                           assign_rng.random(shape))
        m_next = _relocate(np.broadcast_to(has_m, shape), has_m, y, m_targets,
                           coin_rng.random(shape), assign_rng.random(shape),
                           assign_rng.random(shape))
        draws = (np.stack([g.random(t) for g in band_rngs], axis=-1) if n
                 else np.zeros(shape))
        free = draws >= p_busy
        js = free & s_next & ~m_next
        jsm = free & s_next & m_next
        for v in views:
            for key, hit in (("js", js), ("jsm", jsm)):
                per_trial = hit[:, masks[v]].sum(axis=1)
                sums[key][v] += (per_trial.sum(), (per_trial.astype(float) ** 2).sum())
        done += t

    def summarize(key):
        mean, se = {}, {}
        for v in views:
            s1, s2 = sums[key][v]
            m = s1 / trials
            var = max(s2 / trials - m * m, 0.0) * trials / max(trials - 1, 1)
            mean[v], se[v] = m, float(np.sqrt(var / trials))
        return mean, se

    e_js, se_js = summarize("js")
    e_jsm, se_jsm = summarize("jsm")
    return MonteCarloCounts(e_js, e_jsm, se_js, se_jsm, trials)


def closed_form_counts(census: FullCensus, s_profile: SecondaryProfile,
                       m_profile: MaliciousProfile, params: GameParams):
    table_m = occupancy_table_malicious_states(census, s_profile, m_profile, params)
    table_s = occupancy_table_secondary_states(census, s_profile, m_profile, params)
    return expected_counts(census, table_m=table_m, table_s=table_s)


@dataclass(frozen=True)
class IndifferenceItem:
    variable: str
    value: float
    stay: float
    switch: float
    kind: str          # "interior", "lower", "upper" or "inactive"
    passed: bool

    @property
    def gap(self) -> float:
        """Per-user gain from switching over staying."""
        return self.switch - self.stay


def _check(name, value, stay, switch, active, tol):
    if not active:
        return IndifferenceItem(name, value, stay, switch, "inactive", True)
    gain = switch - stay
    if value <= 0.0:
        return IndifferenceItem(name, value, stay, switch, "lower", gain <= tol)
    if value >= 1.0:
        return IndifferenceItem(name, value, stay, switch, "upper", gain >= -tol)
    return IndifferenceItem(name, value, stay, switch, "interior", abs(gain) <= tol)


def indifference_check(result: EquilibriumResult, params: GameParams,
                       censuses: tuple[FullCensus, FullCensus] | None = None,
                       s_profile: SecondaryProfile | None = None,
                       m_profile: MaliciousProfile | None = None,
                       tol: float = INDIFF_TOL) -> list[IndifferenceItem]:
    """Own-user stay/switch comparison at the played profiles.

    Secondary variables are checked on the first census of the pair (the
    secondary station's by default), malicious ones on the second. Profiles
    default to the result's; passing others checks a perturbed point.
    """
    cs, cm = censuses or (result.secondary_census, result.malicious_census)
    x = s_profile or result.secondary
    y = m_profile or result.malicious
    per_s = per_user_secondary(occupancy_table_secondary_states(cs, x, y, params), params)
    per_m = per_user_malicious(occupancy_table_malicious_states(cm, x, y, params), params)
    items = []
    for i, (l, name) in enumerate(zip(_S_STATES, SECONDARY_VARS)):
        active = cs.view_count(l) > 0 and cs.view_count(_M_STATES[i]) > 0
        items.append(_check(name, x.switch()[i], *per_s[l], active, tol))
    for i, (k, name) in enumerate(zip(_M_STATES, MALICIOUS_VARS)):
        active = cm.view_count(k) > 0 and cm.view_count(_S_STATES[i]) > 0
        items.append(_check(name, y.switch()[i], *per_m[k], active, tol))
    return items
