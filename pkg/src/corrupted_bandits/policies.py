"""Bandit policies sharing one interaction contract.

Every policy exposes ``select_arm(rng) -> int`` and ``update(arm, reward)``;
index policies rank arms by estimate-plus-bonus with uniform random
tie-breaking, and an infinite bonus always wins (forced exploration).

One policy instance serves one episode; state is never shared across
replications.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import confidence
from .confidence import HuberParams, chebyshev_p
from .envs import BanditEnv
from .estimators import (
    SequentialHuber,
    _huber_root_sorted,
    default_root_tol,
    floor_pow2,
    mad_scale,
    median_of_means,
)

__all__ = [
    "HuberUCB",
    "SeqHuberUCB",
    "UCB1",
    "RobustUCBCatoni",
    "RobustUCBMOM",
    "Exp3",
    "POLICY_NAMES",
    "build_huber_params",
    "resolve_p",
    "make_policy",
    "PolicyBuild",
]

INF = math.inf
TIE_TOL = 1e-12


class _ArmBuffer:
    """Reward store for one arm: chronological and sorted views plus prefix sums."""

    def __init__(self, capacity: int = 64):
        cap = max(capacity, 1)
        self._chron = np.empty(cap, dtype=float)
        self._sorted = np.empty(cap, dtype=float)
        self._prefix = np.zeros(cap + 1, dtype=float)
        self.count = 0

    def _grow(self) -> None:
        cap = self._chron.size * 2
        for name in ("_chron", "_sorted"):
            new = np.empty(cap, dtype=float)
            new[: self.count] = getattr(self, name)[: self.count]
            setattr(self, name, new)
        new_prefix = np.zeros(cap + 1, dtype=float)
        new_prefix[: self.count + 1] = self._prefix[: self.count + 1]
        self._prefix = new_prefix

    def append(self, x: float) -> None:
        if self.count == self._chron.size:
            self._grow()
        n = self.count
        self._chron[n] = x
        pos = int(np.searchsorted(self._sorted[:n], x))
        self._sorted[pos + 1 : n + 1] = self._sorted[pos:n]
        self._sorted[pos] = x
        self.count = n + 1
        np.cumsum(self._sorted[: self.count], out=self._prefix[1 : self.count + 1])

    @property
    def values(self) -> np.ndarray:
        return self._chron[: self.count]

    def huber_root(self, beta: float, guess: float | None = None) -> float:
        xs = self._sorted[: self.count]
        if xs[0] == xs[-1]:
            return float(xs[0])
        tol = default_root_tol(self.count, beta)
        return _huber_root_sorted(
            xs, self._prefix[: self.count + 1], beta, tol, guess=guess
        )


class _BasePolicy:
    """Counts, step bookkeeping, and argmax selection with random tie-breaking."""

    def __init__(self, k: int):
        if k < 1:
            raise ValueError("need at least one arm")
        self.k = k
        self.t = 0
        self.counts = np.zeros(k, dtype=np.int64)

    def arm_index(self, arm: int, t: int) -> float:
        raise NotImplementedError

    def indices(self) -> np.ndarray:
        t = self.t + 1
        return np.array([self.arm_index(i, t) for i in range(self.k)])

    def select_arm(self, rng: np.random.Generator) -> int:
        vals = self.indices()
        top = vals.max()
        if math.isinf(top):
            # Forced exploration: among the under-explored arms, favour the
            # least-pulled ones so the opening pulls cover every arm before
            # any repeat; ties broken uniformly.
            candidates = np.flatnonzero(np.isinf(vals))
            counts = self.counts[candidates]
            candidates = candidates[counts == counts.min()]
        else:
            candidates = np.flatnonzero(vals >= top - TIE_TOL)
        if candidates.size == 1:
            return int(candidates[0])
        return int(candidates[rng.integers(candidates.size)])

    def _record(self, arm: int) -> None:
        if not 0 <= arm < self.k:
            raise IndexError("arm out of range")
        self.counts[arm] += 1
        self.t += 1

    def update(self, arm: int, reward: float) -> None:
        raise NotImplementedError


class HuberUCB(_BasePolicy):
    """Index policy on batch Huber estimates with corruption-aware bonuses.

    The pulled arm's estimate is recomputed from its full buffer on every
    update; other arms keep their cached estimates.  With ``sigma_mode="mad"``
    the scale (and with it ``beta``, ``p``, ``bias``) is re-derived from the
    arm's own data at power-of-two pull counts instead of being fixed.
    """

    def __init__(
        self,
        arm_params: Sequence[HuberParams],
        horizon: int | None = None,
        sigma_mode: str = "known",
        beta_mult: float = 4.0,
    ):
        super().__init__(len(arm_params))
        if sigma_mode not in ("known", "mad"):
            raise ValueError("sigma_mode must be 'known' or 'mad'")
        self.params = list(arm_params)
        self.sigma_mode = sigma_mode
        self.beta_mult = beta_mult
        cap = horizon if horizon else 64
        self.buffers = [_ArmBuffer(cap) for _ in range(self.k)]
        self.estimates = np.zeros(self.k)

    def _refresh_params_from_data(self, arm: int) -> None:
        sigma = mad_scale(self.buffers[arm].values)
        if sigma <= 0:
            return
        old = self.params[arm]
        beta = self.beta_mult * sigma
        p = resolve_p("chebyshev", None, sigma, beta, old.eps)
        self.params[arm] = HuberParams(
            beta=beta, sigma=sigma, eps=old.eps, p=p, bias=old.bias
        )

    def update(self, arm: int, reward: float) -> None:
        self._record(arm)
        buf = self.buffers[arm]
        buf.append(reward)
        if self.sigma_mode == "mad" and buf.count == floor_pow2(buf.count):
            self._refresh_params_from_data(arm)
        guess = self.estimates[arm] if buf.count > 1 else None
        self.estimates[arm] = buf.huber_root(self.params[arm].beta, guess=guess)

    def arm_index(self, arm: int, t: int) -> float:
        s = int(self.counts[arm])
        bonus = confidence.huber_bonus(s, t, self.params[arm])
        if math.isinf(bonus):
            return INF
        return self.estimates[arm] + bonus


class SeqHuberUCB(_BasePolicy):
    """Index policy on streaming Huber estimates with staleness-widened bonuses."""

    def __init__(self, arm_params: Sequence[HuberParams], horizon: int | None = None):
        super().__init__(len(arm_params))
        self.params = list(arm_params)
        cap = horizon if horizon else 64
        self.estimators = [
            SequentialHuber(p.beta, capacity=cap) for p in self.params
        ]

    def update(self, arm: int, reward: float) -> None:
        self._record(arm)
        self.estimators[arm].update(reward)

    def arm_index(self, arm: int, t: int) -> float:
        s = int(self.counts[arm])
        bonus = confidence.seq_huber_bonus(s, t, self.params[arm])
        if math.isinf(bonus):
            return INF
        return self.estimators[arm].value + bonus


class UCB1(_BasePolicy):
    """Classical mean-plus-sqrt(2 ln t / s) index; non-robust baseline."""

    def __init__(self, k: int):
        super().__init__(k)
        self.sums = np.zeros(k)

    def update(self, arm: int, reward: float) -> None:
        self._record(arm)
        self.sums[arm] += reward

    def arm_index(self, arm: int, t: int) -> float:
        s = int(self.counts[arm])
        if s == 0:
            return INF
        return self.sums[arm] / s + math.sqrt(2.0 * math.log(t) / s)


class RobustUCBCatoni(_BasePolicy):
    """Heavy-tail-tuned baseline: clipping threshold grows like sigma * sqrt(s).

    Efficient without corruption, fragile with it: the growing threshold ends
    up tracking the corrupted mixture mean.  Bonus shape
    ``sigma * sqrt(8 ln t / s)``.
    """

    def __init__(self, sigmas: Sequence[float], horizon: int | None = None, scale: float = 1.0):
        super().__init__(len(sigmas))
        if any(s <= 0 for s in sigmas):
            raise ValueError("sigmas must be positive")
        self.sigmas = [float(s) for s in sigmas]
        self.scale = scale
        cap = horizon if horizon else 64
        self.buffers = [_ArmBuffer(cap) for _ in range(self.k)]
        self.estimates = np.zeros(self.k)

    def update(self, arm: int, reward: float) -> None:
        self._record(arm)
        buf = self.buffers[arm]
        buf.append(reward)
        beta = self.scale * self.sigmas[arm] * math.sqrt(buf.count)
        guess = self.estimates[arm] if buf.count > 1 else None
        self.estimates[arm] = buf.huber_root(beta, guess=guess)

    def arm_index(self, arm: int, t: int) -> float:
        s = int(self.counts[arm])
        if s == 0:
            return INF
        return self.estimates[arm] + self.sigmas[arm] * math.sqrt(
            8.0 * math.log(t) / s
        )


class RobustUCBMOM(_BasePolicy):
    """Median-of-means baseline: ceil(8 ln t) blocks (capped at s), bonus 12 sigma sqrt(ln t / s)."""

    def __init__(self, sigmas: Sequence[float], horizon: int | None = None):
        super().__init__(len(sigmas))
        if any(s <= 0 for s in sigmas):
            raise ValueError("sigmas must be positive")
        self.sigmas = [float(s) for s in sigmas]
        cap = horizon if horizon else 64
        self.buffers = [_ArmBuffer(cap) for _ in range(self.k)]
        self._cache: list[tuple[int, int, float]] = [(-1, -1, 0.0)] * self.k

    @staticmethod
    def block_count(s: int, t: int) -> int:
        return max(1, min(s, math.ceil(8.0 * math.log(t))))

    def update(self, arm: int, reward: float) -> None:
        self._record(arm)
        self.buffers[arm].append(reward)

    def _estimate(self, arm: int, t: int) -> float:
        s = self.buffers[arm].count
        blocks = self.block_count(s, t)
        key_s, key_b, value = self._cache[arm]
        if key_s == s and key_b == blocks:
            return value
        value = median_of_means(self.buffers[arm].values, blocks)
        self._cache[arm] = (s, blocks, value)
        return value

    def arm_index(self, arm: int, t: int) -> float:
        s = int(self.counts[arm])
        if s == 0:
            return INF
        return self._estimate(arm, t) + 12.0 * self.sigmas[arm] * math.sqrt(
            math.log(t) / s
        )


class Exp3(_BasePolicy):
    """Exponential weights with importance-weighted gains on clipped rewards.

    Rewards are clipped into ``clip`` and rescaled to [0, 1] before the
    update (the weights diverge under unbounded observations otherwise); a
    reward at the bottom of the range leaves the weights untouched.
    Learning rate ``sqrt(ln k / (k n))`` for a known horizon ``n``.
    Weights are kept in log space.
    """

    def __init__(self, k: int, horizon: int, clip: tuple[float, float] = (-10.0, 10.0)):
        super().__init__(k)
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        lo, hi = clip
        if not lo < hi:
            raise ValueError("clip range must be nondegenerate")
        self.clip = (float(lo), float(hi))
        self.eta = math.sqrt(math.log(k) / (k * horizon))
        self.log_weights = np.zeros(k)

    def probabilities(self) -> np.ndarray:
        shifted = self.log_weights - self.log_weights.max()
        w = np.exp(shifted)
        return w / w.sum()

    def select_arm(self, rng: np.random.Generator) -> int:
        return int(rng.choice(self.k, p=self.probabilities()))

    def update(self, arm: int, reward: float) -> None:
        probs = self.probabilities()
        self._record(arm)
        lo, hi = self.clip
        clipped = min(max(reward, lo), hi)
        gain = (clipped - lo) / (hi - lo)
        self.log_weights[arm] += self.eta * gain / probs[arm]


POLICY_NAMES = (
    "huber_ucb",
    "seq_huber_ucb",
    "ucb1",
    "robust_ucb_catoni",
    "robust_ucb_mom",
    "exp3",
)

SIGMA_FLOOR = 1e-12

BIAS_RULES = ("zero", "second_moment", "half_second_moment")


def resolve_p(
    mode: str,
    value: float | None,
    sigma: float,
    beta: float,
    eps: float,
    inlier=None,
) -> float:
    """Pick the concentration probability ``p`` for one arm.

    ``explicit`` takes ``value`` as given.  ``exact`` integrates the inlier
    law over ``[mean - beta/2, mean + beta/2]``.  ``chebyshev`` (the default
    mode elsewhere) uses the distribution-free bound, floored at 3/4 (the
    canonical value at ``beta = 4 sigma``) so that small-``beta``
    configurations remain runnable; when ``5 eps`` crowds out the floor, the
    midpoint of ``(5 eps, 1)`` is used instead.  In every mode the result must
    exceed ``5 eps`` or the configuration is rejected.
    """
    if not 0.0 <= eps < 0.5:
        raise ValueError("eps must lie in [0, 0.5)")
    if mode == "explicit":
        if value is None:
            raise ValueError("explicit p mode requires a value")
        p = float(value)
    elif mode == "exact":
        if inlier is None:
            raise ValueError("exact p mode requires the inlier law")
        mu = inlier.mean()
        p = inlier.interval_prob(mu - beta / 2.0, mu + beta / 2.0)
    elif mode == "chebyshev":
        if 5.0 * eps >= 1.0:
            raise ValueError("5*eps >= 1: no valid p exists")
        floor = 0.75 if 5.0 * eps < 0.75 else 0.5 * (1.0 + 5.0 * eps)
        p = max(chebyshev_p(sigma, beta), floor)
    else:
        raise ValueError("p mode must be 'explicit', 'exact', or 'chebyshev'")
    if not 0.0 < p <= 1.0 or p <= 5.0 * eps:
        raise ValueError(
            f"resolved p={p:g} unusable (needs 5*eps={5 * eps:g} < p <= 1)"
        )
    return p


def build_huber_params(
    env: BanditEnv,
    eps_assumed: float,
    beta_mult: float = 4.0,
    bias_rule: str = "zero",
    p_mode: str = "chebyshev",
    p_value: float | None = None,
    sigma_override: Sequence[float] | None = None,
) -> list[HuberParams]:
    """Per-arm parameters from an environment's analytic inlier moments."""
    if bias_rule not in BIAS_RULES:
        raise ValueError(f"bias_rule must be one of {BIAS_RULES}")
    if beta_mult <= 0:
        raise ValueError("beta_mult must be positive")
    params = []
    for i, arm in enumerate(env.arms):
        sigma = (
            float(sigma_override[i]) if sigma_override is not None
            else float(env.sigmas[i])
        )
        sigma = max(sigma, SIGMA_FLOOR)
        beta = beta_mult * sigma
        p = resolve_p(p_mode, p_value, sigma, beta, eps_assumed, inlier=arm.inlier)
        if bias_rule == "zero":
            bias = 0.0
        elif bias_rule == "second_moment":
            bias = 2.0 * sigma * sigma / beta
        else:
            bias = sigma * sigma / beta
        params.append(HuberParams(beta=beta, sigma=sigma, eps=eps_assumed, p=p, bias=bias))
    return params


@dataclass(frozen=True)
class PolicyBuild:
    """Picklable recipe for constructing a fresh policy per replication."""

    name: str
    k: int
    horizon: int
    arm_params: tuple[HuberParams, ...] = ()
    sigmas: tuple[float, ...] = ()
    sigma_mode: str = "known"
    beta_mult: float = 4.0
    catoni_scale: float = 1.0
    exp3_clip: tuple[float, float] = (-10.0, 10.0)

    def build(self):
        if self.name == "huber_ucb":
            return HuberUCB(
                self.arm_params,
                horizon=self.horizon,
                sigma_mode=self.sigma_mode,
                beta_mult=self.beta_mult,
            )
        if self.name == "seq_huber_ucb":
            return SeqHuberUCB(self.arm_params, horizon=self.horizon)
        if self.name == "ucb1":
            return UCB1(self.k)
        if self.name == "robust_ucb_catoni":
            return RobustUCBCatoni(self.sigmas, horizon=self.horizon, scale=self.catoni_scale)
        if self.name == "robust_ucb_mom":
            return RobustUCBMOM(self.sigmas, horizon=self.horizon)
        if self.name == "exp3":
            return Exp3(self.k, self.horizon, clip=self.exp3_clip)
        raise ValueError(f"unknown policy {self.name!r}; choose from {POLICY_NAMES}")


def make_policy(
    name: str,
    env: BanditEnv,
    horizon: int,
    eps_assumed: float = 0.0,
    beta_mult: float = 4.0,
    bias_rule: str = "zero",
    p_mode: str = "chebyshev",
    p_value: float | None = None,
    sigma_override: Sequence[float] | None = None,
    sigma_mode: str = "known",
    exp3_clip: tuple[float, float] = (-10.0, 10.0),
    catoni_scale: float = 1.0,
) -> PolicyBuild:
    """Resolve a named policy against an environment into a picklable build recipe."""
    if name not in POLICY_NAMES:
        raise ValueError(f"unknown policy {name!r}; choose from {POLICY_NAMES}")
    arm_params: tuple[HuberParams, ...] = ()
    sigmas: tuple[float, ...] = ()
    if name in ("huber_ucb", "seq_huber_ucb"):
        arm_params = tuple(
            build_huber_params(
                env,
                eps_assumed,
                beta_mult=beta_mult,
                bias_rule=bias_rule,
                p_mode=p_mode,
                p_value=p_value,
                sigma_override=sigma_override,
            )
        )
    elif name in ("robust_ucb_catoni", "robust_ucb_mom"):
        raw = (
            tuple(float(s) for s in sigma_override)
            if sigma_override is not None
            else tuple(float(s) for s in env.sigmas)
        )
        sigmas = tuple(max(s, SIGMA_FLOOR) for s in raw)
    return PolicyBuild(
        name=name,
        k=env.k,
        horizon=horizon,
        arm_params=arm_params,
        sigmas=sigmas,
        sigma_mode=sigma_mode,
        beta_mult=beta_mult,
        catoni_scale=catoni_scale,
        exp3_clip=exp3_clip,
    )
