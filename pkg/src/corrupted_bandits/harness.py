"""Experiment orchestration: seeded episodes, Monte-Carlo regret, sweeps, CSV output.

Randomness is counter-based: every (base seed, replication, arm) triple keys
its own Philox stream, and the policy's tie-breaking randomness gets the
stream at arm index ``k``.  Replications are therefore order-independent and
can run in parallel without any shared state; results are merged by
replication index so output is seed-deterministic regardless of worker count.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .envs import BanditEnv, make_env
from .policies import PolicyBuild, make_policy
from .theory import (
    GapProfile,
    max_pulls_huber_ucb_simplified,
    max_pulls_seq_huber_ucb,
    regret_decomposition,
)

__all__ = [
    "ExperimentConfig",
    "EpisodeResult",
    "RegretCurve",
    "run_episode",
    "monte_carlo_regret",
    "sweep",
    "bound_overlay",
    "write_results",
    "read_results",
    "PRESET_DEFAULTS",
]

# Reproduction defaults per preset: threshold multiplier, bias handling, and
# the reward range Exp3 clips into (canonical [0, 1] for Bernoulli rewards).
PRESET_DEFAULTS = {
    "bernoulli": {"beta_mult": 0.1, "bias_rule": "zero", "exp3_clip": (0.0, 1.0)},
    "student": {"beta_mult": 1.0, "bias_rule": "zero"},
    "pareto": {"beta_mult": 1.5, "bias_rule": "half_second_moment"},
    "weibull": {"beta_mult": 5.0, "bias_rule": "zero"},
}

SWEEP_AXES = ("beta_mult", "eps_assumed", "eps_true")


@dataclass
class ExperimentConfig:
    """One experiment: environment, policy parameters, horizon, replications."""

    env: str = "bernoulli"
    eps_true: float = 0.0
    policy: str = "huber_ucb"
    horizon: int = 5000
    reps: int = 100
    seed: int = 0
    beta_mult: float | None = None
    eps_assumed: float | None = None
    bias_rule: str | None = None
    p_mode: str = "chebyshev"
    p_value: float | None = None
    exp3_clip: tuple[float, float] | None = None
    out: str | None = None
    overlay: bool = False
    sweep_axis: str | None = None
    sweep_values: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if not 0.0 <= self.eps_true < 0.5:
            raise ValueError("eps_true must lie in [0, 0.5)")
        if self.eps_assumed is not None and not 0.0 <= self.eps_assumed < 0.5:
            raise ValueError("eps_assumed must lie in [0, 0.5)")
        if self.sweep_axis is not None and self.sweep_axis not in SWEEP_AXES:
            raise ValueError(f"sweep_axis must be one of {SWEEP_AXES}")

    def resolved(self) -> "ExperimentConfig":
        """Fill preset-dependent defaults for unset fields."""
        defaults = PRESET_DEFAULTS.get(self.env, {})
        out = ExperimentConfig(**{**asdict(self), **{}})
        if out.beta_mult is None:
            out.beta_mult = defaults.get("beta_mult", 4.0)
        if out.eps_assumed is None:
            out.eps_assumed = self.eps_true
        if out.bias_rule is None:
            out.bias_rule = defaults.get("bias_rule", "zero")
        if out.exp3_clip is None:
            out.exp3_clip = tuple(defaults.get("exp3_clip", (-10.0, 10.0)))
        return out

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        if data.get("exp3_clip") is not None:
            data["exp3_clip"] = tuple(data["exp3_clip"])
        return cls(**data)


@dataclass
class EpisodeResult:
    actions: np.ndarray
    rewards: np.ndarray
    corrupted: np.ndarray


def _arm_rngs(seed: int, rep: int, k: int) -> list[np.random.Generator]:
    # One counter-based stream per (seed, replication, arm); index k is the
    # policy's own stream for tie-breaking and sampling.
    return [
        np.random.Generator(np.random.Philox([seed, rep, i]))
        for i in range(k + 1)
    ]


def run_episode(
    env: BanditEnv, build: PolicyBuild, horizon: int, seed: int, rep: int = 0
) -> EpisodeResult:
    """Play one seeded episode; deterministic in (seed, rep)."""
    streams = _arm_rngs(seed, rep, env.k)
    policy_rng = streams[env.k]
    policy = build.build()
    actions = np.empty(horizon, dtype=np.int64)
    rewards = np.empty(horizon, dtype=float)
    corrupted = np.empty(horizon, dtype=bool)
    for step in range(horizon):
        arm = policy.select_arm(policy_rng)
        x, was_corrupted = env.arms[arm].sample(streams[arm])
        policy.update(arm, x)
        actions[step] = arm
        rewards[step] = x
        corrupted[step] = was_corrupted
    return EpisodeResult(actions, rewards, corrupted)


@dataclass
class RegretCurve:
    """Monte-Carlo regret estimate with per-step replication scatter."""

    label: str
    steps: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    mean_pulls: np.ndarray
    gaps: np.ndarray
    reps: int

    @property
    def final(self) -> float:
        return float(self.mean[-1])

    def value_at(self, t: int) -> float:
        return float(self.mean[t - 1])

    def growth_ratio(self) -> float:
        """Final regret over the regret at half the horizon."""
        half = len(self.steps) // 2
        return self.final / float(self.mean[half - 1])


def _mc_task(args):
    env, build, horizon, seed, rep = args
    result = run_episode(env, build, horizon, seed, rep)
    return rep, result.actions


def _counts_cube(actions_by_rep: list[np.ndarray], k: int) -> np.ndarray:
    """Cumulative per-step pull counts, shape (reps, horizon, k)."""
    reps = len(actions_by_rep)
    horizon = actions_by_rep[0].size
    cube = np.zeros((reps, horizon, k), dtype=np.float64)
    eye = np.eye(k)
    for m, actions in enumerate(actions_by_rep):
        np.cumsum(eye[actions], axis=0, out=cube[m])
    return cube


def monte_carlo_regret(
    config: ExperimentConfig,
    env: BanditEnv | None = None,
    n_jobs: int = 1,
    label: str | None = None,
) -> RegretCurve:
    """Average the gap-weighted pull counts of ``reps`` independent episodes.

    Replication ``m`` always uses the streams keyed by ``(seed, m, arm)``, so
    the curve does not depend on ``n_jobs`` or completion order.
    """
    cfg = config.resolved()
    if env is None:
        env = make_env(cfg.env, cfg.eps_true)
    build = make_policy(
        cfg.policy,
        env,
        horizon=cfg.horizon,
        eps_assumed=cfg.eps_assumed,
        beta_mult=cfg.beta_mult,
        bias_rule=cfg.bias_rule,
        p_mode=cfg.p_mode,
        p_value=cfg.p_value,
        exp3_clip=tuple(cfg.exp3_clip),
    )
    tasks = [(env, build, cfg.horizon, cfg.seed, m) for m in range(cfg.reps)]
    if n_jobs == 1 or cfg.reps == 1:
        results = [_mc_task(t) for t in tasks]
    else:
        workers = n_jobs if n_jobs > 0 else (os.cpu_count() or 1)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_mc_task, tasks, chunksize=max(1, cfg.reps // (4 * workers))))
    results.sort(key=lambda pair: pair[0])
    actions_by_rep = [actions for _, actions in results]

    cube = _counts_cube(actions_by_rep, env.k)
    gaps = env.gaps
    mean_counts = cube.mean(axis=0)
    mean = np.array([regret_decomposition(gaps, mean_counts[t]) for t in range(cfg.horizon)])
    per_rep = cube @ gaps
    if cfg.reps > 1:
        stderr = per_rep.std(axis=0, ddof=1) / math.sqrt(cfg.reps)
    else:
        stderr = np.zeros(cfg.horizon)
    return RegretCurve(
        label=label or cfg.policy,
        steps=np.arange(1, cfg.horizon + 1),
        mean=mean,
        stderr=stderr,
        mean_pulls=mean_counts[-1],
        gaps=gaps.copy(),
        reps=cfg.reps,
    )


def sweep(
    config: ExperimentConfig, n_jobs: int = 1
) -> list[tuple[float, RegretCurve]]:
    """One curve per axis value, sharing the base seed for variance reduction."""
    if config.sweep_axis is None or not config.sweep_values:
        raise ValueError("sweep requires sweep_axis and nonempty sweep_values")
    curves = []
    for value in config.sweep_values:
        # apply the axis before resolving defaults, so dependent fields (an
        # unset assumed corruption rate tracks the true one) follow the point
        point = ExperimentConfig.from_dict(config.to_dict())
        setattr(point, config.sweep_axis, value)
        point.sweep_axis = None
        point.sweep_values = []
        curve = monte_carlo_regret(
            point,
            n_jobs=n_jobs,
            label=f"{config.policy}[{config.sweep_axis}={value:g}]",
        )
        curves.append((value, curve))
    return curves


def bound_overlay(config: ExperimentConfig, env: BanditEnv | None = None) -> np.ndarray:
    """Per-step theoretical regret bound, gap-weighted across suboptimal arms.

    Uses the simplified explicit-constant bounds with the environment's
    analytic scales and the policy's configured parameters; ``inf`` where a
    shifted gap is nonpositive (bound inapplicable).
    """
    cfg = config.resolved()
    if cfg.policy not in ("huber_ucb", "seq_huber_ucb"):
        raise ValueError("bound overlays exist only for the robust index policies")
    if env is None:
        env = make_env(cfg.env, cfg.eps_true)
    build = make_policy(
        cfg.policy,
        env,
        horizon=cfg.horizon,
        eps_assumed=cfg.eps_assumed,
        beta_mult=cfg.beta_mult,
        bias_rule=cfg.bias_rule,
        p_mode=cfg.p_mode,
        p_value=cfg.p_value,
    )
    bound_fn = (
        max_pulls_huber_ucb_simplified
        if cfg.policy == "huber_ucb"
        else max_pulls_seq_huber_ucb
    )
    steps = np.arange(1, cfg.horizon + 1)
    overlay = np.zeros(cfg.horizon)
    for i, arm_cfg in enumerate(build.arm_params):
        gap = float(env.gaps[i])
        if gap == 0.0:
            continue
        profile = GapProfile(gap, arm_cfg.sigma, arm_cfg.eps)
        try:
            values = np.array([bound_fn(int(t), profile, arm_cfg) for t in steps])
        except ValueError:
            values = np.full(cfg.horizon, math.inf)
        overlay = overlay + gap * values
    return overlay


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_results(
    curves: list[RegretCurve],
    path: str | Path,
    overlays: dict[str, np.ndarray] | None = None,
    config: ExperimentConfig | None = None,
) -> Path:
    """CSV of per-step curves plus a JSON sidecar with the full configuration.

    Floats are written with 17 significant digits so a reparse reproduces the
    arrays bit-exactly.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    overlays = overlays or {}
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["step", "policy", "mean_regret", "stderr"]
        if overlays:
            header.append("bound_overlay")
        writer.writerow(header)
        for curve in curves:
            overlay = overlays.get(curve.label)
            for i, step in enumerate(curve.steps):
                row = [int(step), curve.label, _fmt(curve.mean[i]), _fmt(curve.stderr[i])]
                if overlays:
                    row.append(_fmt(overlay[i]) if overlay is not None else "")
                writer.writerow(row)
    meta = {
        "config": config.to_dict() if config is not None else None,
        "base_seed": config.seed if config is not None else None,
        "curves": [
            {"label": c.label, "reps": c.reps, "final_regret": c.final}
            for c in curves
        ],
    }
    meta_path = path.with_suffix(".meta.json")
    meta_path.write_text(json.dumps(meta, indent=2))
    return path


def read_results(path: str | Path) -> dict[str, dict[str, np.ndarray]]:
    """Reparse a results CSV into per-label arrays (bit-exact round trip)."""
    out: dict[str, dict[str, list[float]]] = {}
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            entry = out.setdefault(
                row["policy"], {"step": [], "mean_regret": [], "stderr": [], "bound_overlay": []}
            )
            entry["step"].append(int(row["step"]))
            entry["mean_regret"].append(float(row["mean_regret"]))
            entry["stderr"].append(float(row["stderr"]))
            if row.get("bound_overlay"):
                entry["bound_overlay"].append(float(row["bound_overlay"]))
    return {
        label: {key: np.asarray(vals) for key, vals in entry.items() if vals}
        for label, entry in out.items()
    }
