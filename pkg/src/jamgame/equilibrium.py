"""Rival-indifference systems and their feasible solution.

The secondary-BS picks its switch probabilities so that jammers in A, B and
C are indifferent between staying and moving to D; the malicious-BS does the
mirror image. Per-user payoffs make both conditions affine in the unknowns,
giving two 3x3 linear systems.

Unknown ``i`` of either system is paired with equation ``i`` (a/A, b/B,
c/C). A pair is dropped when either of its states holds no bands.
"""

from __future__ import annotations

import dataclasses
import functools
import itertools
from dataclasses import dataclass, field

import numpy as np

from .core_model import (
    FullCensus,
    GameParams,
    MaliciousProfile,
    MaliciousView,
    SecondaryProfile,
    SecondaryView,
)
from .estimation import (
    MaliciousObservation,
    SecondaryObservation,
    estimate_census_malicious,
    estimate_census_secondary,
    occupancy_table_malicious_states,
    occupancy_table_secondary_states,
)
from .payoff import GroupPayoffs, malicious_group_payoffs, secondary_group_payoffs

COND_LIMIT = 1e12
FEAS_TOL = 1e-12
INDIFF_TOL = 1e-9

SECONDARY_VARS = ("P_ad", "P_bd", "P_cd")
MALICIOUS_VARS = ("P_AD", "P_BD", "P_CD")
_S_STATES = (SecondaryView.a, SecondaryView.b, SecondaryView.c)
_M_STATES = (MaliciousView.A, MaliciousView.B, MaliciousView.C)


class SingularSystemError(ArithmeticError):
    def __init__(self, pivot: int, message: str = "singular system"):
        super().__init__(f"{message} (pivot {pivot})")
        self.pivot = pivot


@dataclass(frozen=True, eq=False)
class LinearSystem3:
    """``matrix @ p - rhs`` is the stay-minus-switch payoff gap of the rival.

    ``side`` names whose probabilities are unknown; ``row_labels`` names the
    rival state behind each equation.
    """

    matrix: np.ndarray
    rhs: np.ndarray
    side: str
    row_labels: tuple[str, str, str]
    variables: tuple[str, str, str]
    active: tuple[bool, bool, bool]

    def __post_init__(self) -> None:
        for arr in (self.matrix, self.rhs):
            arr.setflags(write=False)
        if not np.all(np.isfinite(self.matrix)) or not np.all(np.isfinite(self.rhs)):
            raise ValueError("system entries must be finite")

    def stay_minus_switch(self, p) -> np.ndarray:
        """Per-user stay payoff minus switch payoff of the rival, per row."""
        return self.matrix @ np.asarray(p, dtype=float) - self.rhs


def _div(num: float, den: float) -> float:
    return num / den if den > 0.0 else 0.0


def _pair_mask(census: FullCensus) -> tuple[bool, bool, bool]:
    return tuple(
        census.view_count(l) > 0.0 and census.view_count(k) > 0.0
        for l, k in zip(_S_STATES, _M_STATES)
    )


def build_secondary_system(census: FullCensus, params: GameParams) -> LinearSystem3:
    """Jammer indifference in A, B, C as affine equations in (P_ad, P_bd, P_cd)."""
    c = census
    alpha, beta = params.alpha, params.beta
    G_m, C_m = params.G_m, params.C_m
    movers = np.array([c.n_a, c.n_b, c.n_c])          # d(n_s^d)/dP
    arrive = movers * _div(1.0, c.n_d)                  # d(n_s^d/n_d)/dP
    q = {
        "A": beta, "B": beta, "C": alpha,
        "D": 1.0 - _div((c.n6 + c.n7) * (1 - alpha) + (c.n8 + c.n2) * (1 - beta), c.n_D),
    }
    # P_s per state as (constant, gradient)
    p_s = {
        "A": (1.0, np.array([-1.0, 0.0, 0.0])),
        "B": (0.0, arrive),
        "C": (_div(c.n4, c.n_C),
              _div(c.n5, c.n_C) * arrive - np.array([0.0, 0.0, _div(c.n4, c.n_C)])),
        "D": (_div(c.n_b, c.n_D),
              _div(c.n7 + c.n8, c.n_D) * arrive - np.array([0.0, _div(c.n_b, c.n_D), 0.0])),
    }
    const_D, grad_D = p_s["D"]
    matrix = np.empty((3, 3))
    rhs = np.empty(3)
    for row, k in enumerate("ABC"):
        const_k, grad_k = p_s[k]
        matrix[row] = G_m * (q[k] * grad_k - q["D"] * grad_D)
        rhs[row] = -(G_m * (q[k] * const_k - q["D"] * const_D) + C_m)
    return LinearSystem3(matrix, rhs, "secondary", ("A", "B", "C"),
                         SECONDARY_VARS, _pair_mask(c))


def build_malicious_system(census: FullCensus, params: GameParams) -> LinearSystem3:
    """Secondary indifference in a, b, c as affine equations in (P_AD, P_BD, P_CD)."""
    c = census
    alpha, beta = params.alpha, params.beta
    G_s, L_s, C_s = params.G_s, params.L_s, params.C_s
    K = G_s + L_s
    movers = np.array([c.n_A, c.n_B, c.n_C])
    arrive = movers * _div(1.0, c.n_D)
    q = {
        "a": beta, "b": beta, "c": alpha,
        "d": 1.0 - _div((c.n5 + c.n7) * (1 - alpha) + (c.n8 + c.n3) * (1 - beta), c.n_d),
    }
    p_m = {
        "a": (1.0, np.array([-1.0, 0.0, 0.0])),
        "b": (0.0, arrive),
        "c": (_div(c.n4, c.n_c),
              _div(c.n6, c.n_c) * arrive - np.array([0.0, 0.0, _div(c.n4, c.n_c)])),
        "d": (_div(c.n_B + c.n5, c.n_d),
              _div(c.n7 + c.n8, c.n_d) * arrive
              - np.array([0.0, _div(c.n_B, c.n_d), _div(c.n5, c.n_d)])),
    }
    const_d, grad_d = p_m["d"]
    matrix = np.empty((3, 3))
    rhs = np.empty(3)
    for row, l in enumerate("abc"):
        const_l, grad_l = p_m[l]
        matrix[row] = -K * (q[l] * grad_l - q["d"] * grad_d)
        rhs[row] = -(G_s * (q[l] - q["d"]) + C_s - K * (q[l] * const_l - q["d"] * const_d))
    return LinearSystem3(matrix, rhs, "malicious", ("a", "b", "c"),
                         MALICIOUS_VARS, _pair_mask(c))


def gauss_solve(a, b) -> np.ndarray:
    """Dense Gaussian elimination with partial pivoting."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    n = len(b)
    if n == 0:
        return b
    scale = max(np.max(np.abs(a)), 1e-300)
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if abs(a[p, k]) <= 1e-14 * scale:
            raise SingularSystemError(k)
        if p != k:
            a[[k, p]] = a[[p, k]]
            b[[k, p]] = b[[p, k]]
        for i in range(k + 1, n):
            lam = a[i, k] / a[k, k]
            if lam != 0.0:
                a[i, k:] -= lam * a[k, k:]
                b[i] -= lam * b[k]
    x = np.empty(n)
    for k in range(n - 1, -1, -1):
        x[k] = (b[k] - a[k, k + 1:] @ x[k + 1:]) / a[k, k]
    return x


def _solve_block(system: LinearSystem3, rows, cols, fixed: dict[int, float]) -> np.ndarray:
    """Solve the listed rows for the listed unknowns, others held at ``fixed``."""
    p = np.zeros(3)
    for i, v in fixed.items():
        p[i] = v
    rows, cols = list(rows), list(cols)
    if len(rows) != len(cols):
        raise SingularSystemError(-1, "non-square block")
    if not cols:
        return p
    sub = system.matrix[np.ix_(rows, cols)]
    if np.linalg.cond(sub) > COND_LIMIT:
        raise SingularSystemError(0, "ill-conditioned system")
    rest = [j for j in range(3) if j not in cols]
    rhs = system.rhs[rows] - system.matrix[np.ix_(rows, rest)] @ p[rest]
    p[cols] = gauss_solve(sub, rhs)
    return p


def solve_dense_3(system: LinearSystem3) -> np.ndarray:
    """Solve the active square block; inactive unknowns come back as 0."""
    active = [i for i in range(3) if system.active[i]]
    return _solve_block(system, active, active, {})


def _bound(value: float) -> float:
    return 0.0 if value < 0.5 else 1.0


def _outside(value: float) -> bool:
    return value < -FEAS_TOL or value > 1.0 + FEAS_TOL


@dataclass(frozen=True)
class FeasibleSolution:
    values: tuple[float, float, float]
    bounds: dict[int, float] = field(default_factory=dict)
    degenerate: bool = False


def project_to_feasible(raw, system: LinearSystem3) -> FeasibleSolution:
    """Clamp out-of-range unknowns and re-solve the rest of this one system.

    Each clamped unknown takes its paired equation with it. ``raw=None``
    stands for a singular first solve.
    """
    if raw is None:
        return FeasibleSolution((0.0, 0.0, 0.0), degenerate=True)
    p = np.array(raw, dtype=float)
    bounds: dict[int, float] = {}
    active = [i for i in range(3) if system.active[i]]
    while True:
        free = [i for i in active if i not in bounds]
        out = [i for i in free if _outside(p[i])]
        if not out:
            break
        for i in out:
            bounds[i] = _bound(p[i])
        free = [i for i in active if i not in bounds]
        try:
            p = _solve_block(system, free, free, bounds)
        except SingularSystemError:
            return FeasibleSolution((0.0, 0.0, 0.0), degenerate=True)
    values = tuple(float(min(max(v, 0.0), 1.0)) if system.active[i] else 0.0
                   for i, v in enumerate(p))
    return FeasibleSolution(values, bounds)


@dataclass(frozen=True)
class GameSolution:
    """Both systems solved on a single census.

    ``x`` are the secondary switch probabilities, ``y`` the malicious ones;
    ``*_bounds`` map unknown index to the bound it sits at. ``sec_rows`` and
    ``mal_rows`` list the equations that were enforced as equalities.
    """

    x: tuple[float, float, float]
    y: tuple[float, float, float]
    x_bounds: dict[int, float]
    y_bounds: dict[int, float]
    sec_rows: tuple[int, ...]
    mal_rows: tuple[int, ...]
    active: tuple[bool, bool, bool]
    degenerate: bool = False
    method: str = "interior"


def _consistent(sec: LinearSystem3, mal: LinearSystem3, x, y, xb, yb, tol) -> bool:
    # secondary users' gap lives in the malicious system, and vice versa
    x_gap = -mal.stay_minus_switch(y)
    y_gap = -sec.stay_minus_switch(x)
    for i in range(3):
        if not sec.active[i]:
            continue
        for p, b, gap in ((x[i], xb, x_gap[i]), (y[i], yb, y_gap[i])):
            if _outside(p):
                return False
            if i not in b and abs(gap) > tol:
                return False
            if b.get(i) == 0.0 and gap > tol:
                return False
            if b.get(i) == 1.0 and gap < -tol:
                return False
    return True


def _tolerance(sec: LinearSystem3, mal: LinearSystem3) -> float:
    scale = max(np.max(np.abs(sec.matrix)), np.max(np.abs(sec.rhs)),
                np.max(np.abs(mal.matrix)), np.max(np.abs(mal.rhs)), 1.0)
    return INDIFF_TOL * scale


def _clamp_iteration(sec, mal, active):
    """Coupled clamp-and-re-solve; returns (x, y, xb, yb) or None."""
    xb: dict[int, float] = {}
    yb: dict[int, float] = {}
    for _ in range(8):
        fx = [i for i in active if i not in xb]
        fy = [i for i in active if i not in yb]
        if len(fx) != len(fy):
            return None
        x = _solve_block(sec, fy, fx, xb)
        y = _solve_block(mal, fx, fy, yb)
        out_x = [i for i in fx if _outside(x[i])]
        out_y = [i for i in fy if _outside(y[i])]
        if not out_x and not out_y:
            return x, y, xb, yb
        for i in out_x:
            xb[i] = _bound(x[i])
        for i in out_y:
            yb[i] = _bound(y[i])
        # a clamped unknown frees its rival's paired equation, so the rival's
        # paired unknown must go to the bound its own payoff gap points at
        for i in out_y:
            if i not in xb:
                fx = [j for j in active if j not in xb and j != i]
                fy = [j for j in active if j not in yb]
                y = _solve_block(mal, fx, fy, yb)
                xb[i] = 1.0 if -mal.stay_minus_switch(y)[i] > 0 else 0.0
        for i in out_x:
            if i not in yb:
                fy = [j for j in active if j not in yb and j != i]
                fx = [j for j in active if j not in xb]
                x = _solve_block(sec, fy, fx, xb)
                yb[i] = 1.0 if -sec.stay_minus_switch(x)[i] > 0 else 0.0
    return None


def _regimes(active):
    """All (xb, yb) with equally many free unknowns, fewest bounds first."""
    idx = [i for i in range(3) if active[i]]
    options = [None, 0.0, 1.0]
    candidates = []
    for xs in itertools.product(options, repeat=len(idx)):
        for ys in itertools.product(options, repeat=len(idx)):
            if xs.count(None) != ys.count(None):
                continue
            xb = {i: v for i, v in zip(idx, xs) if v is not None}
            yb = {i: v for i, v in zip(idx, ys) if v is not None}
            candidates.append((len(xb) + len(yb), xb, yb))
    candidates.sort(key=lambda c: c[0])
    for _, xb, yb in candidates:
        yield xb, yb


def solve_game(sec: LinearSystem3, mal: LinearSystem3) -> GameSolution:
    """Mutually consistent profiles for both systems built on one census.

    Interior unknowns zero the rival's payoff gap; unknowns at 0 (1) face a
    non-positive (non-negative) gain from switching.
    """
    active = tuple(a and b for a, b in zip(sec.active, mal.active))
    idx = [i for i in range(3) if active[i]]
    tol = _tolerance(sec, mal)

    def pack(x, y, xb, yb, method):
        clean = lambda p: tuple(float(min(max(p[i], 0.0), 1.0)) if active[i] else 0.0
                                for i in range(3))
        return GameSolution(clean(x), clean(y), dict(xb), dict(yb),
                            tuple(i for i in idx if i not in yb),
                            tuple(i for i in idx if i not in xb),
                            active, False, method)

    try:
        found = _clamp_iteration(sec, mal, idx)
    except SingularSystemError:
        found = None
    if found is not None and _consistent(sec, mal, *found, tol):
        x, y, xb, yb = found
        return pack(x, y, xb, yb, "interior" if not xb and not yb else "clamped")
    for xb, yb in _regimes(active):
        fx = [i for i in idx if i not in xb]
        fy = [i for i in idx if i not in yb]
        try:
            x = _solve_block(sec, fy, fx, xb)
            y = _solve_block(mal, fx, fy, yb)
        except SingularSystemError:
            continue
        if _consistent(sec, mal, x, y, xb, yb, tol):
            return pack(x, y, xb, yb, "enumerated")
    return GameSolution((0.0, 0.0, 0.0), (0.0, 0.0, 0.0), {}, {}, (), (),
                        active, True, "fallback")


def solve_independent(sec: LinearSystem3, mal: LinearSystem3) -> GameSolution:
    """Each system solved and projected on its own, ignoring the other side.

    Clamped unknowns drop their paired equation, so a bound on one side can
    leave the other side's users with a residual incentive to deviate.
    """
    active = tuple(a and b for a, b in zip(sec.active, mal.active))
    idx = [i for i in range(3) if active[i]]
    sec = dataclasses.replace(sec, active=active)
    mal = dataclasses.replace(mal, active=active)
    out = []
    for system in (sec, mal):
        try:
            raw = solve_dense_3(system)
        except SingularSystemError:
            raw = None
        out.append(project_to_feasible(raw, system))
    fx, fy = out
    return GameSolution(
        fx.values, fy.values, dict(fx.bounds), dict(fy.bounds),
        tuple(i for i in idx if i not in fx.bounds),
        tuple(i for i in idx if i not in fy.bounds),
        active, fx.degenerate or fy.degenerate, "independent",
    )


SOLVERS = {"nash": solve_game, "independent": solve_independent}


@dataclass(frozen=True, eq=False)
class EquilibriumResult:
    """Both base stations' decisions plus diagnostics.

    ``secondary_view``/``malicious_view`` are each station's full joint
    solution on its own census; the station only acts on its own half.
    """

    secondary: SecondaryProfile
    malicious: MaliciousProfile
    secondary_census: FullCensus
    malicious_census: FullCensus
    secondary_system: LinearSystem3
    malicious_system: LinearSystem3
    secondary_view: GameSolution
    malicious_view: GameSolution
    payoffs: GroupPayoffs
    residuals: dict[str, float]
    boundary: dict[str, float]
    degenerate: tuple[str, ...]

    @property
    def U_s(self) -> float:
        return self.payoffs.U_s

    @property
    def U_m(self) -> float:
        return self.payoffs.U_m

    @property
    def leave(self) -> bool:
        """Secondaries expect a loss and sit out the next slot."""
        return self.U_s < 0.0


def _residual(system: LinearSystem3, p, free) -> float:
    gaps = system.stay_minus_switch(p)
    return float(max((abs(gaps[i]) for i in free), default=0.0))


@functools.lru_cache(maxsize=65536)
def compute_equilibrium(secondary_obs: SecondaryObservation,
                        malicious_obs: MaliciousObservation,
                        params: GameParams,
                        mode: str = "nash") -> EquilibriumResult:
    """Each base station estimates, builds, solves and keeps its own profile.

    ``mode="nash"`` solves both systems jointly so that clamped unknowns on
    one side push the rival's paired unknowns to the bound their own payoff
    favours. ``mode="independent"`` projects each system separately.
    """
    if mode not in SOLVERS:
        raise ValueError(f"unknown mode {mode!r}; expected one of {sorted(SOLVERS)}")
    solve = SOLVERS[mode]
    cs = estimate_census_secondary(secondary_obs, params)
    cm = estimate_census_malicious(malicious_obs, params)

    # secondary-BS: its profile makes jammers indifferent on its census
    s_sys = build_secondary_system(cs, params)
    s_view = solve(s_sys, build_malicious_system(cs, params))
    # malicious-BS: the mirror image on its own census
    m_sys = build_malicious_system(cm, params)
    m_view = solve(build_secondary_system(cm, params), m_sys)

    x = SecondaryProfile(*s_view.x)
    y = MaliciousProfile(*m_view.y)

    # each side values its own payoff on its own census
    s_table = occupancy_table_secondary_states(cs, x, MaliciousProfile(*s_view.y), params)
    m_table = occupancy_table_malicious_states(cm, SecondaryProfile(*m_view.x), y, params)
    payoffs = secondary_group_payoffs(cs, s_table, x, params).merge(
        malicious_group_payoffs(cm, m_table, y, params))

    residuals = {
        "secondary": _residual(s_sys, s_view.x, s_view.sec_rows),
        "malicious": _residual(m_sys, m_view.y, m_view.mal_rows),
    }
    boundary = {SECONDARY_VARS[i]: v for i, v in s_view.x_bounds.items()}
    boundary.update({MALICIOUS_VARS[i]: v for i, v in m_view.y_bounds.items()})

    notes = []
    for who, view in (("secondary", s_view), ("malicious", m_view)):
        for i in range(3):
            if not view.active[i]:
                notes.append(f"{who}:{_S_STATES[i].value}/{_M_STATES[i].value} empty")
        if view.degenerate:
            notes.append(f"{who}:fallback")
    return EquilibriumResult(
        secondary=x, malicious=y,
        secondary_census=cs, malicious_census=cm,
        secondary_system=s_sys, malicious_system=m_sys,
        secondary_view=s_view, malicious_view=m_view,
        payoffs=payoffs, residuals=residuals, boundary=boundary,
        degenerate=tuple(notes),
    )
