"""Census reconstruction from a partial view and next-slot occupancy tables.

Each base station sees only four lumped classes of bands. It rebuilds the
eight-state census under a uniform-spread assumption for the rival users it
cannot see, then predicts per-class presence probabilities for the next slot.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core_model import (
    FullCensus,
    GameParams,
    MaliciousProfile,
    MaliciousView,
    OccupancyTriple,
    SecondaryProfile,
    SecondaryView,
    secondary_members,
    malicious_members,
    switched_malicious_count,
    switched_secondary_count,
)

MASS_TOL = 1e-9
RENORM_TOL = 1e-6


class InfeasibleObservationError(ValueError):
    """The observation cannot be reconciled with the model parameters."""


@dataclass(frozen=True)
class SecondaryObservation:
    """Band counts reported to the secondary-BS.

    Counts are normally integers, but expected (real-valued) observations
    are accepted so that parameter sweeps can use the stationary census.
    """

    n_a: float
    n_b: float
    n_c: float

    def __post_init__(self) -> None:
        for name in ("n_a", "n_b", "n_c"):
            if getattr(self, name) < 0:
                raise InfeasibleObservationError(f"{name} is negative")

    def n_d(self, params: GameParams) -> float:
        return params.n_N - self.n_a - self.n_b - self.n_c

    def validate(self, params: GameParams) -> None:
        seen = self.n_a + self.n_b + self.n_c
        if seen > params.n_N + MASS_TOL:
            raise InfeasibleObservationError(f"n_a+n_b+n_c={seen} exceeds n_N")
        if seen > params.n_s + MASS_TOL:
            raise InfeasibleObservationError(f"n_a+n_b+n_c={seen} exceeds n_s")
        if self.n_a > params.n_m + MASS_TOL:
            raise InfeasibleObservationError("more state-a bands than malicious users")


@dataclass(frozen=True)
class MaliciousObservation:
    n_A: float
    n_B: float
    n_C: float

    def __post_init__(self) -> None:
        for name in ("n_A", "n_B", "n_C"):
            if getattr(self, name) < 0:
                raise InfeasibleObservationError(f"{name} is negative")

    def n_D(self, params: GameParams) -> float:
        return params.n_N - self.n_A - self.n_B - self.n_C

    def validate(self, params: GameParams) -> None:
        seen = self.n_A + self.n_B + self.n_C
        if seen > params.n_N + MASS_TOL:
            raise InfeasibleObservationError(f"n_A+n_B+n_C={seen} exceeds n_N")
        if seen > params.n_m + MASS_TOL:
            raise InfeasibleObservationError(f"n_A+n_B+n_C={seen} exceeds n_m")
        if self.n_A > params.n_s + MASS_TOL:
            raise InfeasibleObservationError("more state-A bands than secondary users")


def observe(census: FullCensus) -> tuple[SecondaryObservation, MaliciousObservation]:
    """What each base station would report for a ground-truth census."""
    return (SecondaryObservation(census.n_a, census.n_b, census.n_c),
            MaliciousObservation(census.n_A, census.n_B, census.n_C))


def expected_census(params: GameParams) -> FullCensus:
    """Mean census with users placed uniformly and primaries at stationarity."""
    s = params.n_s / params.n_N
    m = params.n_m / params.n_N
    busy = params.markov.P_pB
    idle = 1.0 - busy
    n = params.n_N
    return FullCensus(
        n1=n * m * s * idle, n2=n * (1 - m) * s * idle,
        n3=n * m * (1 - s) * idle, n4=n * m * s * busy,
        n5=n * m * (1 - s) * busy, n6=n * (1 - m) * s * busy,
        n7=n * (1 - m) * (1 - s) * busy, n8=n * (1 - m) * (1 - s) * idle,
    )


def _ratio(num: float, den: float) -> float:
    """``num / den`` with the convention 0/0 = 0; x/0 is infeasible."""
    if den == 0.0:
        if abs(num) <= MASS_TOL:
            return 0.0
        raise InfeasibleObservationError(
            f"cannot spread {num} users over an empty class")
    return num / den


def raw_census_secondary(obs: SecondaryObservation, params: GameParams) -> tuple[float, ...]:
    """Unclamped eight-state estimate as seen from the secondary-BS."""
    n_a, n_b, n_c = obs.n_a, obs.n_b, obs.n_c
    n_d = obs.n_d(params)
    n_m = params.n_m
    n_p = params.n_p
    n1, n2 = n_a, n_b
    n4 = n_c * _ratio(n_m - n_a, n_c + n_d)
    n6 = n_c - n4
    n5 = (n_p - n_c) * _ratio(n_m - n1 - n4, n_d)
    n3 = n_m - n4 - n5 - n1
    n7 = n_p - n4 - n5 - n6
    n8 = n_d - n3 - n5 - n7
    return (n1, n2, n3, n4, n5, n6, n7, n8)


def raw_census_malicious(obs: MaliciousObservation, params: GameParams) -> tuple[float, ...]:
    """Unclamped estimate from the malicious-BS, rows evaluated in order."""
    n_A, n_B, n_C = obs.n_A, obs.n_B, obs.n_C
    n_D = obs.n_D(params)
    n_s = params.n_s
    n_p = params.n_p
    n1 = n_A
    n3 = n_B
    n4 = n_C * _ratio(n_s - n_A, n_C + n_D)
    n5 = n_C - n4
    n6 = (n_p - n_C) * _ratio(n_s - n_A - n4, n_D)
    n7 = n_p - n4 - n5 - n6
    n2 = n_s - n4 - n6 - n1
    n8 = n_D - n2 - n6 - n7
    return (n1, n2, n3, n4, n5, n6, n7, n8)


def clamp_census(raw, partition, n_N: float) -> FullCensus:
    """Zero out negative entries, rescaling the rest of each observed class.

    ``partition`` maps each view class to its member states; every class
    keeps its raw total, so the grand total stays ``n_N``.
    """
    counts = list(raw)
    for members in partition:
        total = sum(raw[i - 1] for i in members)
        if total < -RENORM_TOL:
            raise InfeasibleObservationError(f"class {members} has negative total {total}")
        positive = sum(max(raw[i - 1], 0.0) for i in members)
        for i in members:
            value = max(raw[i - 1], 0.0)
            counts[i - 1] = value * (max(total, 0.0) / positive) if positive > 0 else 0.0
    census = FullCensus.from_counts(counts)
    if abs(census.n_N - n_N) > RENORM_TOL:
        raise InfeasibleObservationError(
            f"census total {census.n_N} cannot be restored to n_N={n_N}")
    return census


def estimate_census_secondary(obs: SecondaryObservation, params: GameParams) -> FullCensus:
    obs.validate(params)
    raw = raw_census_secondary(obs, params)
    return clamp_census(raw, [secondary_members(v) for v in SecondaryView], params.n_N)


def estimate_census_malicious(obs: MaliciousObservation, params: GameParams) -> FullCensus:
    obs.validate(params)
    raw = raw_census_malicious(obs, params)
    return clamp_census(raw, [malicious_members(v) for v in MaliciousView], params.n_N)


def _clip(p: float) -> float:
    return min(max(p, 0.0), 1.0)


def _triple(count: float, p_p: float, p_s: float, p_m: float) -> OccupancyTriple:
    if count <= 0.0:
        return OccupancyTriple(0.0, 0.0, 0.0, empty=True)
    return OccupancyTriple(_clip(p_p), _clip(p_s), _clip(p_m))


def _safe_div(num: float, den: float) -> float:
    return num / den if den > 0.0 else 0.0


def occupancy_table_malicious_states(
    census: FullCensus,
    s_profile: SecondaryProfile,
    m_profile: MaliciousProfile,
    params: GameParams,
) -> dict[MaliciousView, OccupancyTriple]:
    """Next-slot presence probabilities for bands in states A..D."""
    c = census
    alpha, beta = params.alpha, params.beta
    arrive_s = _safe_div(switched_secondary_count(c, s_profile), c.n_d)
    n_mD = switched_malicious_count(c, m_profile)
    p_p_D = _safe_div((c.n6 + c.n7) * (1 - alpha) + (c.n8 + c.n2) * (1 - beta), c.n_D)
    p_s_C = _safe_div(c.n5 * arrive_s + c.n4 * s_profile.P_cc, c.n_C)
    # state-6 stayers are left out of P_s^D, as printed
    p_s_D = _safe_div(c.n_b * s_profile.P_bb + (c.n7 + c.n8) * arrive_s, c.n_D)
    return {
        MaliciousView.A: _triple(c.n_A, 1 - beta, s_profile.P_aa, m_profile.P_AA),
        MaliciousView.B: _triple(c.n_B, 1 - beta, arrive_s, m_profile.P_BB),
        MaliciousView.C: _triple(c.n_C, 1 - alpha, p_s_C, m_profile.P_CC),
        MaliciousView.D: _triple(c.n_D, p_p_D, p_s_D, _safe_div(n_mD, c.n_D)),
    }


def occupancy_table_secondary_states(
    census: FullCensus,
    s_profile: SecondaryProfile,
    m_profile: MaliciousProfile,
    params: GameParams,
) -> dict[SecondaryView, OccupancyTriple]:
    """Next-slot presence probabilities for bands in states a..d."""
    c = census
    alpha, beta = params.alpha, params.beta
    arrive_m = _safe_div(switched_malicious_count(c, m_profile), c.n_D)
    n_sd = switched_secondary_count(c, s_profile)
    p_p_d = _safe_div((c.n5 + c.n7) * (1 - alpha) + (c.n8 + c.n3) * (1 - beta), c.n_d)
    p_m_c = _safe_div(c.n6 * arrive_m + c.n4 * m_profile.P_CC, c.n_c)
    p_m_d = _safe_div(c.n_B * m_profile.P_BB + (c.n7 + c.n8) * arrive_m
                      + c.n5 * m_profile.P_CC, c.n_d)
    return {
        SecondaryView.a: _triple(c.n_a, 1 - beta, s_profile.P_aa, m_profile.P_AA),
        SecondaryView.b: _triple(c.n_b, 1 - beta, s_profile.P_bb, arrive_m),
        SecondaryView.c: _triple(c.n_c, 1 - alpha, s_profile.P_cc, p_m_c),
        SecondaryView.d: _triple(c.n_d, p_p_d, _safe_div(n_sd, c.n_d), p_m_d),
    }
