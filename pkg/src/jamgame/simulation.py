"""Slot-by-slot ground-truth simulation of both networks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core_model import (
    FullCensus,
    GameParams,
    MaliciousProfile,
    SecondaryProfile,
    classify_band,
)
from .equilibrium import SingularSystemError, compute_equilibrium
from .estimation import (
    InfeasibleObservationError,
    observe,
    occupancy_table_malicious_states,
    occupancy_table_secondary_states,
)
from .payoff import malicious_group_payoffs, secondary_group_payoffs

EMPTY = -1


class PlacementError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class WorldState:
    """Per-band occupancy at the start of a slot.

    ``secondary``/``malicious`` hold the occupant id per band or ``EMPTY``.
    While ``secondary_active`` is false the secondaries keep their bands but
    neither transmit, move, nor show up in the jammers' sensing.
    ``rejoin_at`` is the slot at which a sitting-out network returns.
    """

    primary: np.ndarray
    secondary: np.ndarray
    malicious: np.ndarray
    slot: int = 0
    secondary_active: bool = True
    rejoin_at: int | None = None

    def __post_init__(self) -> None:
        for arr in (self.primary, self.secondary, self.malicious):
            arr.setflags(write=False)
        for name, occ in (("secondary", self.secondary), ("malicious", self.malicious)):
            ids = occ[occ != EMPTY]
            if len(np.unique(ids)) != len(ids):
                raise ValueError(f"duplicate {name} occupant id")

    @property
    def n_N(self) -> int:
        return len(self.primary)

    def states(self, hide_secondary: bool = False) -> list[int]:
        """Full-state number of every band."""
        s = self.secondary != EMPTY
        if hide_secondary:
            s = np.zeros_like(s)
        m = self.malicious != EMPTY
        return [classify_band(p, si, mi).index
                for p, si, mi in zip(self.primary, s, m)]

    def census(self, hide_secondary: bool = False) -> FullCensus:
        counts = np.bincount(self.states(hide_secondary), minlength=9)[1:]
        return FullCensus.from_counts(counts)


@dataclass(frozen=True)
class SlotLog:
    """What happened in one slot.

    ``census`` is the ground truth at the start of the slot; rewards are
    counted on the occupancy after moves and primary transitions. The
    ``expected_*`` fields are the closed-form payoffs evaluated on the true
    census with the profiles actually played.
    """

    slot: int
    census: FullCensus
    secondary: SecondaryProfile
    malicious: MaliciousProfile
    U_s: float
    U_m: float
    jam_count: int
    success_count: int
    secondary_movers: int
    malicious_movers: int
    reward_s: float
    reward_m: float
    expected_s: float
    expected_m: float
    left_network: bool
    dropped_back: int = 0
    error: str = ""


@dataclass
class SimRng:
    """Random streams of one run.

    Every band owns the stream that drives its primary transitions, so the
    order in which bands are processed cannot change the outcome.
    """

    bands: list[np.random.Generator]
    coins: np.random.Generator
    assign: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int, n_N: int) -> SimRng:
        band_root, coin_seq, assign_seq = np.random.SeedSequence(seed).spawn(3)
        return cls([np.random.default_rng(s) for s in band_root.spawn(n_N)],
                   np.random.default_rng(coin_seq), np.random.default_rng(assign_seq))


def band_uniforms(rng: SimRng, size: int | None = None) -> np.ndarray:
    """One draw (or ``size`` draws) per band from the per-band streams."""
    if size is None:
        return np.array([g.random() for g in rng.bands])
    return np.stack([g.random(size) for g in rng.bands], axis=-1)


def init_world(params: GameParams, seed: int) -> tuple[WorldState, SimRng]:
    if params.n_s > params.n_N or params.n_m > params.n_N:
        raise PlacementError("more users than bands")
    rng = SimRng.from_seed(seed, params.n_N)
    primary = band_uniforms(rng) < params.markov.P_pB
    secondary = np.full(params.n_N, EMPTY)
    malicious = np.full(params.n_N, EMPTY)
    secondary[rng.assign.permutation(params.n_N)[:params.n_s]] = np.arange(params.n_s)
    malicious[rng.assign.permutation(params.n_N)[:params.n_m]] = np.arange(params.n_m)
    return WorldState(primary, secondary, malicious), rng


@dataclass(frozen=True)
class Assignment:
    moves: dict[int, int] = field(default_factory=dict)
    dropped: tuple[int, ...] = ()


def assign_switch_targets(movers, target_bands, rng: np.random.Generator) -> Assignment:
    """Random injective mover -> band map.

    Surplus movers beyond the number of targets are picked at random and
    told to stay; they are reported in ``dropped``.
    """
    movers = list(movers)
    targets = list(target_bands)
    dropped: tuple[int, ...] = ()
    if len(movers) > len(targets):
        keep = rng.permutation(len(movers))
        dropped = tuple(movers[i] for i in sorted(keep[len(targets):]))
        movers = [movers[i] for i in sorted(keep[:len(targets)])]
    if not movers:
        return Assignment({}, dropped)
    chosen = rng.permutation(len(targets))[:len(movers)]
    return Assignment({m: targets[j] for m, j in zip(movers, chosen)}, dropped)


_SEC_SOURCE = {1: 0, 2: 1, 4: 2, 6: 2}      # full state -> a/b/c index
_MAL_SOURCE = {1: 0, 3: 1, 4: 2, 5: 2}      # full state -> A/B/C index
_SEC_TARGET = (3, 5, 7, 8)
_MAL_TARGET = (2, 6, 7, 8)


def _move(occ: np.ndarray, states, probs, target_states, source_map,
          rng: SimRng) -> tuple[np.ndarray, int, int]:
    """Flip a coin for every occupant in a source state and relocate movers."""
    coins = rng.coins.random(len(occ))
    movers = [b for b, st in enumerate(states)
              if occ[b] != EMPTY and st in source_map and coins[b] < probs[source_map[st]]]
    targets = [b for b, st in enumerate(states) if st in target_states]
    plan = assign_switch_targets(movers, targets, rng.assign)
    new = occ.copy()
    for src, dst in plan.moves.items():
        new[dst] = occ[src]
        new[src] = EMPTY
    return new, len(plan.moves), len(plan.dropped)


def _closed_form(census: FullCensus, x: SecondaryProfile, y: MaliciousProfile,
                 params: GameParams) -> tuple[float, float]:
    ts = occupancy_table_secondary_states(census, x, y, params)
    tm = occupancy_table_malicious_states(census, x, y, params)
    return (secondary_group_payoffs(census, ts, x, params).U_s,
            malicious_group_payoffs(census, tm, y, params).U_m)


def step_slot(world: WorldState, params: GameParams, rng: SimRng, *,
              freeze: bool = False, mode: str = "nash") -> tuple[WorldState, SlotLog]:
    """Observe, decide, move, evolve primaries and count rewards.

    ``freeze`` forces every switch probability to zero.
    """
    active = world.secondary_active
    truth = world.census()
    # jammers cannot sense a network that is sitting out
    seen_by_m = world.census(hide_secondary=not active)
    s_obs, _ = observe(truth)
    _, m_obs = observe(seen_by_m)

    x, y = SecondaryProfile(), MaliciousProfile()
    U_s = U_m = float("nan")
    error = ""
    leave = False
    if not freeze:
        try:
            result = compute_equilibrium(s_obs, m_obs, params, mode)
            x, y = result.secondary, result.malicious
            U_s, U_m = result.U_s, result.U_m
            leave = active and result.leave
        except (InfeasibleObservationError, SingularSystemError, ValueError) as exc:
            error = f"{type(exc).__name__}: {exc}"
    if not active:
        x = SecondaryProfile()

    states = world.states()
    sec, s_moved, s_drop = _move(world.secondary, states, x.switch(),
                                 _SEC_TARGET, _SEC_SOURCE, rng)
    mal, m_moved, m_drop = _move(world.malicious, states, y.switch(),
                                 _MAL_TARGET, _MAL_SOURCE, rng)
    draws = band_uniforms(rng)
    busy_next = np.where(world.primary, 1.0 - params.alpha, 1.0 - params.beta)
    primary = draws < busy_next

    free = ~primary
    has_s = (sec != EMPTY) & active
    has_m = mal != EMPTY
    jams = int(np.sum(free & has_s & has_m))
    successes = int(np.sum(free & has_s & ~has_m))
    reward_s = (params.G_s * successes - params.L_s * jams - params.C_s * s_moved) if active else 0.0
    reward_m = params.G_m * jams - params.C_m * m_moved
    exp_s, exp_m = _closed_form(seen_by_m, x, y, params)
    if not active:
        exp_s = 0.0

    slot = world.slot
    if leave:
        rejoin = slot + 2
    else:
        rejoin = world.rejoin_at
    next_active = rejoin is None or slot + 1 >= rejoin
    new_world = WorldState(primary, sec, mal, slot + 1, next_active,
                           None if next_active else rejoin)
    log = SlotLog(
        slot=slot, census=truth, secondary=x, malicious=y, U_s=U_s, U_m=U_m,
        jam_count=jams, success_count=successes,
        secondary_movers=s_moved, malicious_movers=m_moved,
        reward_s=float(reward_s), reward_m=float(reward_m),
        expected_s=exp_s, expected_m=exp_m,
        left_network=not active, dropped_back=s_drop + m_drop, error=error,
    )
    return new_world, log


def run(params: GameParams, seed: int, T: int, *, freeze: bool = False,
        mode: str = "nash") -> list[SlotLog]:
    if T < 1:
        raise ValueError("T must be at least 1")
    world, rng = init_world(params, seed)
    logs = []
    for _ in range(T):
        world, log = step_slot(world, params, rng, freeze=freeze, mode=mode)
        logs.append(log)
    return logs


def busy_fraction(params: GameParams, seed: int, T: int) -> tuple[float, float]:
    """Mean busy-band fraction with switching disabled, and its standard error.

    Only the per-band chains matter here, so the slot loop is skipped.
    """
    world, rng = init_world(params, seed)
    busy = world.primary.copy()
    frac = np.empty(T)
    draws = band_uniforms(rng, T)
    for t in range(T):
        busy = draws[t] < np.where(busy, 1.0 - params.alpha, 1.0 - params.beta)
        frac[t] = busy.mean()
    return float(frac.mean()), batch_standard_error(frac)


def batch_standard_error(series, batches: int = 50) -> float:
    """Standard error of the mean of a correlated series via batch means."""
    series = np.asarray(series, dtype=float)
    n = len(series) // batches
    if n < 2:
        return float(series.std(ddof=1) / np.sqrt(len(series)))
    means = series[:n * batches].reshape(batches, n).mean(axis=1)
    return float(means.std(ddof=1) / np.sqrt(batches))
