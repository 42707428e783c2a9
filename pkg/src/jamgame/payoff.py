"""Expected jam/success counts and the stay/switch payoffs built on them."""

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
)

View = SecondaryView | MaliciousView

_S_STATES = (SecondaryView.a, SecondaryView.b, SecondaryView.c)
_M_STATES = (MaliciousView.A, MaliciousView.B, MaliciousView.C)


def joint_sm_probability(triple: OccupancyTriple) -> float:
    """Probability a band holds a secondary and a jammer but no primary."""
    return triple.P_s * triple.P_m * (1.0 - triple.P_p)


def lone_secondary_probability(triple: OccupancyTriple) -> float:
    return triple.P_s * (1.0 - triple.P_m) * (1.0 - triple.P_p)


@dataclass(frozen=True)
class ExpectedCounts:
    """Expected next-slot band counts per view state.

    ``E_js[v]`` counts bands with a lone secondary and ``E_jsm[v]`` bands
    with a secondary and a jammer, both without a primary.
    """

    E_js: dict[View, float]
    E_jsm: dict[View, float]


def expected_counts(
    census: FullCensus,
    table_m: dict[MaliciousView, OccupancyTriple] | None = None,
    table_s: dict[SecondaryView, OccupancyTriple] | None = None,
) -> ExpectedCounts:
    E_js: dict[View, float] = {}
    E_jsm: dict[View, float] = {}
    for table in (table_m, table_s):
        if table is None:
            continue
        for view, triple in table.items():
            n = census.view_count(view)
            E_js[view] = n * lone_secondary_probability(triple)
            E_jsm[view] = n * joint_sm_probability(triple)
    return ExpectedCounts(E_js, E_jsm)


@dataclass(frozen=True)
class GroupPayoffs:
    U_aa: float = 0.0
    U_bb: float = 0.0
    U_cc: float = 0.0
    U_ad: float = 0.0
    U_bd: float = 0.0
    U_cd: float = 0.0
    U_AA: float = 0.0
    U_BB: float = 0.0
    U_CC: float = 0.0
    U_AD: float = 0.0
    U_BD: float = 0.0
    U_CD: float = 0.0

    @property
    def U_s(self) -> float:
        return self.U_aa + self.U_ad + self.U_bb + self.U_bd + self.U_cc + self.U_cd

    @property
    def U_m(self) -> float:
        return self.U_AA + self.U_AD + self.U_BB + self.U_BD + self.U_CC + self.U_CD

    def merge(self, other: GroupPayoffs) -> GroupPayoffs:
        """Secondary components from ``self``, malicious ones from ``other``."""
        return GroupPayoffs(
            self.U_aa, self.U_bb, self.U_cc, self.U_ad, self.U_bd, self.U_cd,
            other.U_AA, other.U_BB, other.U_CC, other.U_AD, other.U_BD, other.U_CD,
        )


def malicious_switch_value(table_m: dict[MaliciousView, OccupancyTriple],
                           params: GameParams) -> float:
    """Per-user payoff of a jammer moving to a D band."""
    t = table_m[MaliciousView.D]
    return params.G_m * t.P_s * (1.0 - t.P_p) - params.C_m


def secondary_switch_value(table_s: dict[SecondaryView, OccupancyTriple],
                           params: GameParams) -> float:
    t = table_s[SecondaryView.d]
    return (params.G_s * (1.0 - t.P_m) - params.L_s * t.P_m) * (1.0 - t.P_p) - params.C_s


def per_user_malicious(table_m, params: GameParams) -> dict[MaliciousView, tuple[float, float]]:
    """(stay, switch) payoff of one jammer in each of A, B, C.

    The stay value is ``U_kk / (n_k P_kk)`` with the division cancelled, so
    it stays defined when nobody stays.
    """
    switch = malicious_switch_value(table_m, params)
    return {k: (params.G_m * table_m[k].P_s * (1.0 - table_m[k].P_p), switch)
            for k in _M_STATES}


def per_user_secondary(table_s, params: GameParams) -> dict[SecondaryView, tuple[float, float]]:
    switch = secondary_switch_value(table_s, params)
    out = {}
    for l in _S_STATES:
        t = table_s[l]
        stay = (params.G_s * (1.0 - t.P_m) - params.L_s * t.P_m) * (1.0 - t.P_p)
        out[l] = (stay, switch)
    return out


def malicious_group_payoffs(census: FullCensus, table_m, m_profile: MaliciousProfile,
                            params: GameParams) -> GroupPayoffs:
    E = expected_counts(census, table_m=table_m).E_jsm
    switch = malicious_switch_value(table_m, params)
    movers = {k: census.view_count(k) * p for k, p in zip(_M_STATES, m_profile.switch())}
    return GroupPayoffs(
        U_AA=params.G_m * E[MaliciousView.A],
        U_BB=params.G_m * E[MaliciousView.B],
        U_CC=params.G_m * E[MaliciousView.C],
        U_AD=movers[MaliciousView.A] * switch,
        U_BD=movers[MaliciousView.B] * switch,
        U_CD=movers[MaliciousView.C] * switch,
    )


def secondary_group_payoffs(census: FullCensus, table_s, s_profile: SecondaryProfile,
                            params: GameParams) -> GroupPayoffs:
    E = expected_counts(census, table_s=table_s)
    switch = secondary_switch_value(table_s, params)
    stay = {l: params.G_s * E.E_js[l] - params.L_s * E.E_jsm[l] for l in _S_STATES}
    movers = {l: census.view_count(l) * p for l, p in zip(_S_STATES, s_profile.switch())}
    return GroupPayoffs(
        U_aa=stay[SecondaryView.a],
        U_bb=stay[SecondaryView.b],
        U_cc=stay[SecondaryView.c],
        U_ad=movers[SecondaryView.a] * switch,
        U_bd=movers[SecondaryView.b] * switch,
        U_cd=movers[SecondaryView.c] * switch,
    )


def total_payoffs(group: GroupPayoffs) -> tuple[float, float]:
    return group.U_s, group.U_m
