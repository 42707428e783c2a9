"""Domain types, band-state classification and the primary-user channel model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


class DegenerateChainError(ValueError):
    """The ON-OFF chain has no unique stationary law."""


@dataclass(frozen=True)
class MarkovParams:
    """Two-state ON-OFF occupancy chain shared by every band.

    A busy band stays busy with probability ``1 - alpha``; an idle band
    stays idle with probability ``beta``.
    """

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")

    @property
    def P_pB(self) -> float:
        return stationary_primary(self)[0]

    @property
    def P_pI(self) -> float:
        return stationary_primary(self)[1]


@dataclass(frozen=True)
class GameParams:
    n_N: int
    n_s: int
    n_m: int
    C_s: float
    C_m: float
    G_s: float
    G_m: float
    L_s: float
    markov: MarkovParams

    def __post_init__(self) -> None:
        for name in ("n_N", "n_s", "n_m"):
            value = getattr(self, name)
            if value < 0 or value != int(value):
                raise ValueError(f"{name} must be a non-negative integer, got {value}")
        if self.n_N <= 0:
            raise ValueError("n_N must be positive")
        if self.n_s > self.n_N:
            raise ValueError(f"n_s={self.n_s} exceeds n_N={self.n_N}")
        if self.n_m > self.n_N:
            raise ValueError(f"n_m={self.n_m} exceeds n_N={self.n_N}")
        for name in ("C_s", "C_m", "G_s", "G_m", "L_s"):
            value = getattr(self, name)
            if not value >= 0 or math.isinf(value):
                raise ValueError(f"{name} must be finite and >= 0, got {value}")

    @property
    def alpha(self) -> float:
        return self.markov.alpha

    @property
    def beta(self) -> float:
        return self.markov.beta

    @property
    def n_p(self) -> float:
        """Expected number of busy bands, ``n_N * P_pB``."""
        return self.n_N * self.markov.P_pB


BASELINE = GameParams(
    n_N=50, n_s=10, n_m=10,
    C_s=1.0, C_m=1.0, G_s=50.0, G_m=75.0, L_s=100.0,
    markov=MarkovParams(alpha=0.4, beta=0.6),
)


class FullState(Enum):
    """The eight presence combinations, valued (malicious, secondary, primary)."""

    S1 = (True, True, False)
    S2 = (False, True, False)
    S3 = (True, False, False)
    S4 = (True, True, True)
    S5 = (True, False, True)
    S6 = (False, True, True)
    S7 = (False, False, True)
    S8 = (False, False, False)

    @property
    def malicious(self) -> bool:
        return self.value[0]

    @property
    def secondary(self) -> bool:
        return self.value[1]

    @property
    def primary(self) -> bool:
        return self.value[2]

    @property
    def index(self) -> int:
        """1-based state number."""
        return int(self.name[1])


class SecondaryView(Enum):
    a = "a"
    b = "b"
    c = "c"
    d = "d"


class MaliciousView(Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"


_SECONDARY_PARTITION = {
    SecondaryView.a: (1,),
    SecondaryView.b: (2,),
    SecondaryView.c: (4, 6),
    SecondaryView.d: (3, 5, 7, 8),
}
_MALICIOUS_PARTITION = {
    MaliciousView.A: (1,),
    MaliciousView.B: (3,),
    MaliciousView.C: (4, 5),
    MaliciousView.D: (2, 6, 7, 8),
}


def secondary_members(view: SecondaryView) -> tuple[int, ...]:
    """Full-state numbers that the secondary-BS lumps into ``view``."""
    return _SECONDARY_PARTITION[view]


def malicious_members(view: MaliciousView) -> tuple[int, ...]:
    return _MALICIOUS_PARTITION[view]


def classify_band(primary_present: bool, secondary_present: bool,
                  malicious_present: bool) -> FullState:
    return FullState((bool(malicious_present), bool(secondary_present),
                      bool(primary_present)))


def project_secondary_view(state: FullState) -> SecondaryView:
    for view, members in _SECONDARY_PARTITION.items():
        if state.index in members:
            return view
    raise AssertionError(state)


def project_malicious_view(state: FullState) -> MaliciousView:
    for view, members in _MALICIOUS_PARTITION.items():
        if state.index in members:
            return view
    raise AssertionError(state)


def stationary_primary(markov: MarkovParams) -> tuple[float, float]:
    """Long-run (busy, idle) probabilities of the ON-OFF chain."""
    denom = (1.0 - markov.beta) + markov.alpha
    if denom <= 0.0:
        raise DegenerateChainError(
            f"alpha={markov.alpha}, beta={markov.beta}: both states absorbing")
    return (1.0 - markov.beta) / denom, markov.alpha / denom


def next_busy_probability(markov: MarkovParams, currently_busy: bool) -> float:
    return 1.0 - markov.alpha if currently_busy else 1.0 - markov.beta


@dataclass(frozen=True)
class FullCensus:
    """Real-valued band counts for the eight full states.

    View-state counts are derived, so they can never disagree with
    ``n1..n8``.
    """

    n1: float
    n2: float
    n3: float
    n4: float
    n5: float
    n6: float
    n7: float
    n8: float

    @classmethod
    def from_counts(cls, counts) -> FullCensus:
        values = [float(v) for v in counts]
        if len(values) != 8:
            raise ValueError(f"expected 8 counts, got {len(values)}")
        return cls(*values)

    def counts(self) -> tuple[float, ...]:
        return (self.n1, self.n2, self.n3, self.n4,
                self.n5, self.n6, self.n7, self.n8)

    def count(self, state: int) -> float:
        return self.counts()[state - 1]

    @property
    def n_N(self) -> float:
        return math.fsum(self.counts())

    n_a = property(lambda self: self.n1)
    n_b = property(lambda self: self.n2)
    n_c = property(lambda self: self.n4 + self.n6)
    n_d = property(lambda self: self.n3 + self.n5 + self.n7 + self.n8)
    n_A = property(lambda self: self.n1)
    n_B = property(lambda self: self.n3)
    n_C = property(lambda self: self.n4 + self.n5)
    n_D = property(lambda self: self.n2 + self.n6 + self.n7 + self.n8)

    @property
    def secondary_mass(self) -> float:
        return self.n1 + self.n2 + self.n4 + self.n6

    @property
    def malicious_mass(self) -> float:
        return self.n1 + self.n3 + self.n4 + self.n5

    @property
    def primary_mass(self) -> float:
        return self.n4 + self.n5 + self.n6 + self.n7

    def view_count(self, view: SecondaryView | MaliciousView) -> float:
        return getattr(self, f"n_{view.value}")


def _check_probability(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value}")


@dataclass(frozen=True)
class SecondaryProfile:
    """Switch-to-d probabilities for secondaries in states a, b, c."""

    P_ad: float = 0.0
    P_bd: float = 0.0
    P_cd: float = 0.0

    def __post_init__(self) -> None:
        for name in ("P_ad", "P_bd", "P_cd"):
            _check_probability(name, getattr(self, name))

    @property
    def P_aa(self) -> float:
        return 1.0 - self.P_ad

    @property
    def P_bb(self) -> float:
        return 1.0 - self.P_bd

    @property
    def P_cc(self) -> float:
        return 1.0 - self.P_cd

    def switch(self) -> tuple[float, float, float]:
        return (self.P_ad, self.P_bd, self.P_cd)


@dataclass(frozen=True)
class MaliciousProfile:
    """Switch-to-D probabilities for malicious users in states A, B, C."""

    P_AD: float = 0.0
    P_BD: float = 0.0
    P_CD: float = 0.0

    def __post_init__(self) -> None:
        for name in ("P_AD", "P_BD", "P_CD"):
            _check_probability(name, getattr(self, name))

    @property
    def P_AA(self) -> float:
        return 1.0 - self.P_AD

    @property
    def P_BB(self) -> float:
        return 1.0 - self.P_BD

    @property
    def P_CC(self) -> float:
        return 1.0 - self.P_CD

    def switch(self) -> tuple[float, float, float]:
        return (self.P_AD, self.P_BD, self.P_CD)


@dataclass(frozen=True)
class OccupancyTriple:
    """Next-slot presence probabilities for one band of a view state.

    ``empty`` marks a state with no bands, whose triple is all-zero.
    """

    P_p: float
    P_s: float
    P_m: float
    empty: bool = False


def switched_secondary_count(census: FullCensus, profile: SecondaryProfile) -> float:
    return (census.n_a * profile.P_ad + census.n_b * profile.P_bd
            + census.n_c * profile.P_cd)


def switched_malicious_count(census: FullCensus, profile: MaliciousProfile) -> float:
    return (census.n_A * profile.P_AD + census.n_B * profile.P_BD
            + census.n_C * profile.P_CD)
