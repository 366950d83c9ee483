"""Bayesian inference over a finite family of programmatic opponent strategies.

The observed agent is assumed to follow one hidden strategy.  Each
observation reweights hypotheses by the probability that hypothesis assigns
to the observed choice; the predictive distribution is the posterior-weighted
mixture of per-hypothesis choice distributions.
"""
from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import stream
from .games.g08a import HIGH, LOW, G08AState, g08a_step
from .strategies import (KINDS, VAR_DIFFS, StrategyAgent, StrategySpec, deterministic_choice,
                         next_choice)

EPSILON = 1e-6
SUPPORT = np.arange(LOW, HIGH + 1)


@dataclass(frozen=True)
class Env:
    """What a strategy's choice depends on: the round and last round's target."""

    round: int
    previous_target: Fraction | None = None


@dataclass(frozen=True)
class Hypothesis:
    spec: StrategySpec
    weight: float
    group: str


def _normal_cdf(x: float, mu: float, sd: float) -> float:
    return 0.5 * (1.0 + math.erf((x - mu) / (sd * math.sqrt(2.0))))


@functools.lru_cache(maxsize=65536)
def base_pmf(spec: StrategySpec, env: Env) -> np.ndarray:
    """Unsmoothed distribution of the strategy's choice over 1..100 (read-only, cached)."""
    centre = float(deterministic_choice(spec, env.round, env.previous_target))
    pmf = np.zeros(len(SUPPORT))
    if spec.kind in ("ZeroLevelVar", "LastBidsVar"):
        cdf = np.array([_normal_cdf(k + 0.5, centre, spec.sd) for k in SUPPORT])
        pmf = np.diff(np.concatenate(([0.0], cdf)))
        # rounding then clamping puts all outer tail mass on the end points
        pmf[-1] += 1.0 - cdf[-1]
    else:
        pmf[_clamped_index(centre)] = 1.0
    pmf.setflags(write=False)
    return pmf


def _clamped_index(x: float) -> int:
    return min(HIGH, max(LOW, math.floor(x + 0.5))) - LOW


def pmf(spec: StrategySpec, env: Env, eps: float = EPSILON) -> np.ndarray:
    """Smoothed choice distribution: never zero anywhere, still sums to one."""
    return (1.0 - len(SUPPORT) * eps) * base_pmf(spec, env) + eps


def likelihood(spec: StrategySpec, env: Env, action: int, eps: float = EPSILON) -> float:
    """Smoothed probability of one observed choice, computed without the full pmf."""
    if not LOW <= action <= HIGH:
        return eps
    centre = float(deterministic_choice(spec, env.round, env.previous_target))
    if spec.kind in ("ZeroLevelVar", "LastBidsVar"):
        upper = 1.0 if action == HIGH else _normal_cdf(action + 0.5, centre, spec.sd)
        lower = 0.0 if action == LOW else _normal_cdf(action - 0.5, centre, spec.sd)
        mass = upper - lower
    else:
        mass = 1.0 if _clamped_index(centre) == action - LOW else 0.0
    return (1.0 - len(SUPPORT) * eps) * mass + eps


class HypothesisSpace:
    def __init__(self, hypotheses: Sequence[Hypothesis]) -> None:
        if not hypotheses:
            raise ValueError("empty hypothesis space")
        total = sum(h.weight for h in hypotheses)
        if any(h.weight <= 0 for h in hypotheses):
            raise ValueError("prior weights must be positive")
        self.hypotheses = tuple(replace(h, weight=h.weight / total) for h in hypotheses)

    def __len__(self) -> int:
        return len(self.hypotheses)

    @property
    def groups(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(h.group for h in self.hypotheses))

    @classmethod
    def from_specs(cls, specs: Iterable[StrategySpec]) -> "HypothesisSpace":
        """Uniform prior over strategies.

        A MonoTrendVar spec expands into one sub-hypothesis per possible drawn
        difference, sharing that strategy's prior mass.
        """
        specs = list(specs)
        hyps = []
        for s in specs:
            if s.kind == "MonoTrendVar":
                for d in VAR_DIFFS:
                    hyps.append(Hypothesis(replace(s, common_diff=d), 1.0 / len(VAR_DIFFS), s.kind))
            else:
                hyps.append(Hypothesis(s, 1.0, s.kind))
        return cls(hyps)

    @classmethod
    def standard_family(cls, common_diff: int = 3, spread: float = 5.0,
                        spread_mode: str = "variance") -> "HypothesisSpace":
        return cls.from_specs(
            StrategySpec(k, common_diff=common_diff, spread=spread, spread_mode=spread_mode) for k in KINDS
        )


@dataclass
class Posterior:
    space: HypothesisSpace
    log_weights: np.ndarray
    observations: int = 0
    flags: list[str] = field(default_factory=list)

    @classmethod
    def prior(cls, space: HypothesisSpace) -> "Posterior":
        return cls(space, np.log([h.weight for h in space.hypotheses]))

    @property
    def weights(self) -> np.ndarray:
        w = np.exp(self.log_weights - self.log_weights.max())
        return w / w.sum()

    def group_weights(self) -> dict[str, float]:
        w = self.weights
        out = dict.fromkeys(self.space.groups, 0.0)
        for h, x in zip(self.space.hypotheses, w):
            out[h.group] += float(x)
        return out


def posterior_update(post: Posterior, env: Env, action: int, eps: float = EPSILON) -> Posterior:
    lik = np.array([likelihood(h.spec, env, action, eps) for h in post.space.hypotheses])
    flags = list(post.flags)
    if not np.any(lik > 0):
        flags.append(f"degenerate observation {action} at round {env.round}; reset to uniform")
        logw = np.full(len(lik), -math.log(len(lik)))
    else:
        with np.errstate(divide="ignore"):
            logw = post.log_weights + np.log(lik)
        logw = logw - np.logaddexp.reduce(logw)
    return Posterior(post.space, logw, post.observations + 1, flags)


def predictive_matrix(space: HypothesisSpace, env: Env, eps: float = EPSILON) -> np.ndarray:
    return np.stack([pmf(h.spec, env, eps) for h in space.hypotheses])


def predict_next(post: Posterior, env: Env, eps: float = EPSILON) -> tuple[np.ndarray, float]:
    """Mixture distribution over 1..100 and its mean (the point prediction)."""
    dist = post.weights @ predictive_matrix(post.space, env, eps)
    return dist, float(dist @ SUPPORT)


# --------------------------------------------------------------------------
# synthetic games for concentration checks

def simulate_choices(spec: StrategySpec, seed: int, rounds: int, num_agents: int = 5,
                     observed: int = 0) -> tuple[list[Env], list[int]]:
    """Every agent plays ``spec`` in a G0.8A game; returns the observed agent's envs and choices."""
    agents = [StrategyAgent(spec, seed, i) for i in range(num_agents)]
    state = G08AState.new(num_agents)
    history: dict[int, list] = {i: [] for i in range(num_agents)}
    envs, seen = [], []
    for t in range(1, rounds + 1):
        envs.append(Env(t, state.last_target))
        choices = [
            next_choice(a.spec, history, t, stream(seed, i, t, "decide")) for i, a in enumerate(agents)
        ]
        seen.append(choices[observed])
        for i, c in enumerate(choices):
            history[i].append(({}, c))
        state, _, _ = g08a_step(state, choices)
    return envs, seen


def trace(space: HypothesisSpace, envs: Sequence[Env], actions: Sequence[int],
          eps: float = EPSILON) -> list[dict]:
    """Posterior and prediction error before each observation.

    Row ``t`` (1-based) holds the prediction for the t-th action using the
    first t-1 observations, and the group posterior after observing it.
    """
    post = Posterior.prior(space)
    rows = []
    for t, (env, a) in enumerate(zip(envs, actions), start=1):
        _, mean = predict_next(post, env, eps)
        post = posterior_update(post, env, a, eps)
        rows.append({"t": t, "prediction": mean, "actual": a, "deviation": abs(mean - a),
                     **{f"w_{g}": w for g, w in post.group_weights().items()}})
    return rows


def export_csv(rows: Sequence[dict], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    return path
