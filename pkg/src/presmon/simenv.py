"""Replay simulation environment with a finite intervention resource pool.

Every test-set prefix is a decision point; decision points fire in global
timestamp order across cases. Triggering an intervention reserves one
resource for a fixed duration when one is free; a case's final outcome
switches to its treated potential outcome on the first resourced execution.
Rewards follow the effect-sign table below; realized gains follow the gain
accounting used for reporting.

Reward table (resource free):

    effect    triggered                     not triggered
    positive  gain_out*te - c_in + gain_res   -(gain_out + gain_res)
    negative  -(gain_out + gain_res + c_in)   gain_out + gain_res
    zero/pos  -(c_in + gain_res)              gain_out + gain_res
    zero/neg  -(gain_out + c_in + gain_res)   0

With no resource free, triggering costs gain_res and not triggering earns
gain_res, regardless of effect.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .counterfactual import (
    EFFECT_NEGATIVE,
    EFFECT_POSITIVE,
    EFFECT_ZERO,
    PotentialOutcomes,
    effect_sign,
)
from .errors import ConfigError, DataError, ProtocolError
from .eventlog import POSITIVE

COMPONENTS = (
    "ciw_lo", "ciw_hi", "cop_neg", "cop_pos", "tu",
    "cte_lo", "cte_hi", "wip", "eta", "n_free", "arrival_rate",
)
VARIANTS = ("all", "withCATE", "withoutCIW", "withoutTU")

_I_CIW_LO, _I_CIW_HI, _I_COP_NEG, _I_COP_POS, _I_TU = 0, 1, 2, 3, 4
_I_CTE_LO, _I_CTE_HI, _I_WIP, _I_ETA, _I_NFREE, _I_RATE = 5, 6, 7, 8, 9, 10


@dataclass(frozen=True)
class RewardParams:
    gain_out: float = 60.0
    gain_res: float = 10.0
    c_in: float = 30.0

    def __post_init__(self):
        if min(self.gain_out, self.gain_res, self.c_in) <= 0:
            raise ConfigError("reward parameters must be strictly positive")

    def to_dict(self) -> dict:
        return {"gain_out": self.gain_out, "gain_res": self.gain_res, "c_in": self.c_in}

    @classmethod
    def from_dict(cls, d: dict) -> "RewardParams":
        return cls(gain_out=float(d.get("gain_out", 60.0)),
                   gain_res=float(d.get("gain_res", 10.0)),
                   c_in=float(d.get("c_in", 30.0)))


def reward_of(action: int, resource_available: bool, effect: int, te: float,
              final_outcome: int, params: RewardParams) -> float:
    """Per-decision reward.

    ``te`` enters only the triggered/positive-effect cell; ``final_outcome``
    only the zero-effect cells (where both arms agree on it).
    """
    g, r, c = params.gain_out, params.gain_res, params.c_in
    if not resource_available:
        return -r if action == 1 else r
    if action == 1:
        if effect == EFFECT_POSITIVE:
            return g * te - c + r
        if effect == EFFECT_NEGATIVE:
            return -(g + r + c)
        return -(c + r) if final_outcome == POSITIVE else -(g + c + r)
    if effect == EFFECT_POSITIVE:
        return -(g + r)
    if effect == EFFECT_NEGATIVE:
        return g + r
    return g + r if final_outcome == POSITIVE else 0.0


def episode_gain(final_outcome: int, frequency: int, params: RewardParams) -> float:
    """Realized case gain: outcome payoff minus intervention costs, with
    frequency counting resourced executions only."""
    return params.gain_out * (1.0 if final_outcome == POSITIVE else 0.0) \
        - frequency * params.c_in


def total_gain(gains) -> float:
    return float(sum(gains))


@dataclass(frozen=True)
class Reservation:
    case_id: str
    acquired_at: float
    release_at: float


class ResourcePool:
    """Fixed pool of intervention resources with duration-based reservations.

    ``n_total=None`` means unbounded capacity (the unconstrained setting).
    Expired reservations are released when the clock advances, before any
    state is measured at the new instant.
    """

    def __init__(self, n_total: int | None, t_dur: float):
        if n_total is not None and n_total < 1:
            raise ConfigError(f"n_total must be >= 1 or None, got {n_total}")
        if t_dur <= 0:
            raise ConfigError(f"t_dur must be positive, got {t_dur}")
        self.n_total = n_total
        self.t_dur = t_dur
        self._live: list[float] = []
        self.reservations: list[Reservation] = []

    @property
    def n_live(self) -> int:
        return len(self._live)

    @property
    def n_free(self) -> int | None:
        if self.n_total is None:
            return None
        return self.n_total - len(self._live)

    @property
    def available(self) -> bool:
        return self.n_total is None or len(self._live) < self.n_total

    @property
    def eta(self) -> float:
        if self.n_total is None:
            return 1.0
        return (self.n_total - len(self._live)) / self.n_total

    def release_expired(self, t: float) -> None:
        while self._live and self._live[0] <= t:
            heapq.heappop(self._live)

    def acquire(self, case_id: str, t: float) -> bool:
        if not self.available:
            return False
        heapq.heappush(self._live, t + self.t_dur)
        self.reservations.append(Reservation(case_id=case_id, acquired_at=t,
                                             release_at=t + self.t_dur))
        return True


# --- resource utilization -------------------------------------------------

_LEVEL_THRESHOLDS = (
    ("High", 0.90),
    ("ModeratelyHigh", 0.75),
    ("Medium", 0.50),
    ("Low", 0.25),
)


@dataclass(frozen=True)
class UtilizationReport:
    rho: float
    level: str | None


def classify_utilization(rho: float) -> str | None:
    """Band for a utilization ratio; None below the lowest defined band."""
    for name, thr in _LEVEL_THRESHOLDS:
        if rho >= thr:
            return name
    return None


def utilization(n: int, interventions: int, t_dur: float,
                sim_duration: float) -> UtilizationReport:
    """rho = (interventions * t_dur) / (n * sim_duration), classified."""
    if min(n, interventions) < 0 or t_dur <= 0 or sim_duration <= 0 or n == 0:
        raise ConfigError("utilization needs positive n, t_dur and duration")
    rho = (interventions * t_dur) / (n * sim_duration)
    return UtilizationReport(rho=rho, level=classify_utilization(rho))


def resource_boundaries(interventions: int, t_dur: float,
                        sim_duration: float) -> dict[str, int]:
    """Largest pool size per utilization band for a reference demand.

    n_level = floor(demand / (threshold * duration)) with demand =
    interventions * t_dur; bands whose boundary falls below one resource
    are omitted.
    """
    demand = interventions * t_dur
    out: dict[str, int] = {}
    for name, thr in _LEVEL_THRESHOLDS:
        n = int(math.floor(demand / (thr * sim_duration)))
        if n >= 1:
            out[name] = n
    return out


# --- state assembly --------------------------------------------------------


@dataclass(frozen=True)
class PrefixEstimates:
    """Everything known about one decision point before resources enter.

    Model estimates and workload features depend only on the log and the
    fitted artifacts, so they are precomputed once and shared across
    variants, pool sizes, and replications.
    """

    case_id: str
    k: int
    t: float
    op: float
    tu: float
    iw: float
    ciw_lo: float
    ciw_hi: float
    p1: float
    p0: float
    te: float
    cte_lo: float
    cte_hi: float
    cate_lo: float
    cate_hi: float
    cop_neg: bool
    cop_pos: bool
    wip: float
    arrival_rate: float


@dataclass(frozen=True)
class NormalizationStats:
    """Per-component min-max bounds from the training split.

    Components with known ranges (set flags, tu, eta, effect bounds) are
    fixed; the free-resource count is normalized by pool size at runtime.
    """

    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def fit(cls, rows: list[PrefixEstimates]) -> "NormalizationStats":
        if not rows:
            raise DataError("normalization stats need at least one prefix")
        lo = np.zeros(len(COMPONENTS))
        hi = np.ones(len(COMPONENTS))
        lo[_I_CTE_LO] = lo[_I_CTE_HI] = -1.0
        for idx, attr in ((_I_CIW_LO, "ciw_lo"), (_I_CIW_HI, "ciw_hi"),
                          (_I_WIP, "wip"), (_I_RATE, "arrival_rate")):
            vals = np.array([getattr(r, attr) for r in rows], dtype=float)
            lo[idx] = float(vals.min())
            hi[idx] = float(vals.max())
        return cls(lo=lo, hi=hi)

    def normalize(self, idx: int, value: float) -> float:
        d = self.hi[idx] - self.lo[idx]
        if d <= 0:
            return 0.0
        return min(max((value - self.lo[idx]) / d, 0.0), 1.0)

    def to_dict(self) -> dict:
        return {"lo": [float(v) for v in self.lo], "hi": [float(v) for v in self.hi]}

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationStats":
        return cls(lo=np.array(d["lo"], dtype=float), hi=np.array(d["hi"], dtype=float))


@dataclass(frozen=True)
class StateVector:
    """Raw components and the normalized, variant-masked observation."""

    raw: tuple
    observed: np.ndarray

    def component(self, name: str):
        return self.raw[COMPONENTS.index(name)]


@dataclass(frozen=True)
class StepRecord:
    t: float
    case_id: str
    k: int
    action: int
    reward: float
    resource_available: bool
    state_raw: tuple
    state_observed: tuple


@dataclass(frozen=True)
class EpisodeRecord:
    case_id: str
    completion_index: int
    end_time: float
    frequency: int
    final_outcome: int
    gain: float
    steps: tuple[StepRecord, ...] = field(repr=False)


class ReplayEnvironment:
    """Chronological replay of test-set decision points against one policy.

    The caller drives it: inspect ``state()`` (and ``point()`` for raw
    estimates), call ``step(action)``, collect the reward and, when the
    stepped case had its last decision point, its finished episode.
    """

    def __init__(self, points: list[PrefixEstimates],
                 po_table: dict[str, PotentialOutcomes],
                 case_end_times: dict[str, float],
                 n_total: int | None, t_dur: float,
                 reward_params: RewardParams,
                 norm: NormalizationStats,
                 variant: str = "all",
                 te_mode: str = "estimate"):
        if variant not in VARIANTS:
            raise ConfigError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
        if te_mode not in ("estimate", "realized"):
            raise ConfigError(f"unknown te_mode {te_mode!r}")
        if not points:
            raise DataError("replay needs at least one decision point")
        self._points = sorted(points, key=lambda p: (p.t, p.case_id, p.k))
        missing = {p.case_id for p in self._points} - set(po_table)
        if missing:
            raise DataError(f"potential outcomes missing for {len(missing)} cases, "
                            f"e.g. {sorted(missing)[:3]}")
        self._po = po_table
        self._ends = case_end_times
        self._n_total = n_total
        self._t_dur = t_dur
        self._params = reward_params
        self._norm = norm
        self._variant = variant
        self._te_mode = te_mode
        self._last_idx: dict[str, int] = {}
        for i, p in enumerate(self._points):
            self._last_idx[p.case_id] = i
        self.reset()

    def reset(self) -> None:
        self._pool = ResourcePool(self._n_total, self._t_dur)
        self._i = 0
        self._freq: dict[str, int] = {}
        self._executed: set[str] = set()
        self._steps: dict[str, list[StepRecord]] = {}
        self.records: list[EpisodeRecord] = []
        self._pool.release_expired(self._points[0].t)
        self._snapshot()

    def _snapshot(self) -> None:
        self._avail = self._pool.available
        self._state = self._assemble(self._points[self._i])

    def _assemble(self, pt: PrefixEstimates) -> StateVector:
        if self._variant == "withCATE":
            cte_lo, cte_hi = pt.cate_lo, pt.cate_hi
        else:
            cte_lo, cte_hi = pt.cte_lo, pt.cte_hi
        n_free = self._pool.n_free
        eta = self._pool.eta
        raw = (pt.ciw_lo, pt.ciw_hi, float(pt.cop_neg), float(pt.cop_pos), pt.tu,
               cte_lo, cte_hi, float(pt.wip), eta, n_free, pt.arrival_rate)
        obs = np.empty(len(COMPONENTS))
        for idx in range(len(COMPONENTS)):
            if idx == _I_NFREE:
                obs[idx] = 1.0 if n_free is None else n_free / self._n_total
            else:
                obs[idx] = self._norm.normalize(idx, float(raw[idx]))
        if self._variant == "withoutCIW":
            obs[_I_CIW_LO] = 0.0
            obs[_I_CIW_HI] = 0.0
        elif self._variant == "withoutTU":
            obs[_I_TU] = 0.0
        return StateVector(raw=raw, observed=obs)

    @property
    def finished(self) -> bool:
        return self._i >= len(self._points)

    @property
    def n_points(self) -> int:
        return len(self._points)

    def state(self) -> StateVector:
        if self.finished:
            raise ProtocolError("environment is finished; no state to observe")
        return self._state

    def point(self) -> PrefixEstimates:
        if self.finished:
            raise ProtocolError("environment is finished; no decision point")
        return self._points[self._i]

    def executed(self, case_id: str) -> bool:
        return case_id in self._executed

    @property
    def interventions(self) -> int:
        """Resourced intervention executions so far."""
        return len(self._pool.reservations)

    @property
    def reservations(self) -> list[Reservation]:
        return self._pool.reservations

    def step(self, action: int) -> tuple[float, EpisodeRecord | None]:
        if self.finished:
            raise ProtocolError("step() called on a finished environment")
        if action not in (0, 1):
            raise ProtocolError(f"action must be 0 or 1, got {action}")
        pt = self._points[self._i]
        avail = self._avail
        if action == 1 and avail:
            if not self._pool.acquire(pt.case_id, pt.t):
                raise ProtocolError("pool refused an acquire while available")
            self._freq[pt.case_id] = self._freq.get(pt.case_id, 0) + 1
            self._executed.add(pt.case_id)
        po = self._po[pt.case_id]
        te = pt.te if self._te_mode == "estimate" else float(po.y1 - po.y0)
        reward = reward_of(action, avail, effect_sign(po), te, po.y0, self._params)
        rec = StepRecord(
            t=pt.t, case_id=pt.case_id, k=pt.k, action=action, reward=reward,
            resource_available=avail, state_raw=self._state.raw,
            state_observed=tuple(float(v) for v in self._state.observed),
        )
        self._steps.setdefault(pt.case_id, []).append(rec)
        episode = None
        if self._i == self._last_idx[pt.case_id]:
            outcome = po.y1 if pt.case_id in self._executed else po.y0
            freq = self._freq.get(pt.case_id, 0)
            episode = EpisodeRecord(
                case_id=pt.case_id,
                completion_index=len(self.records),
                end_time=self._ends.get(pt.case_id, pt.t),
                frequency=freq,
                final_outcome=outcome,
                gain=episode_gain(outcome, freq, self._params),
                steps=tuple(self._steps.pop(pt.case_id)),
            )
            self.records.append(episode)
        self._i += 1
        if not self.finished:
            self._pool.release_expired(self._points[self._i].t)
            self._snapshot()
        return reward, episode

    def gain_curve(self) -> np.ndarray:
        """Cumulative total gain over completed episodes, in completion order."""
        return np.cumsum([r.gain for r in self.records])
