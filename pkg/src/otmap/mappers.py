"""The two latent-distribution mapping trainers plus their supporting pieces.

Both trainers teach a network to carry a uniform noise prior onto a target
point distribution, using exact assignments as the supervision signal:

- ``train_ottrans`` solves one large assignment between a fixed noise pool
  and the full target pool up front, then regresses the network onto those
  frozen pairs with minibatch Adam.
- ``train_otgen`` re-solves a small assignment every step, between the
  network's current batch of predictions and a fresh batch of targets, and
  regresses each prediction onto its matched target.

The assignment is always treated as a constant during backprop: it is
piecewise constant in the network weights, so no gradient flows through
the solver.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidCount, SpecError, TooFewPoints, UnsupportedMetric
from .nn import AdamState, Mlp, _backward_from_cache, _forward_cached, adam_step, init_adam
from .ot import (
    Assignment,
    CostMetric,
    PointSet,
    matched_distances,
    pairwise_cost,
    solve_assignment,
)

# Above this batch size the diversity penalty subsamples pairs instead of
# enumerating all k(k-1)/2 of them.
DIVERSITY_EXACT_MAX_K = 512


@dataclass(frozen=True)
class PriorSpec:
    """Uniform symmetric noise prior on [low, high)^dim."""

    dim: int
    low: float = -1.0
    high: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise SpecError(f"prior dim must be >= 1, got {self.dim}")
        if not self.low < self.high:
            raise SpecError(f"prior needs low < high, got [{self.low}, {self.high})")


def sample_prior(spec: PriorSpec, k: int, rng: np.random.Generator | None = None) -> PointSet:
    """k i.i.d. draws from the prior; deterministic per (seed, call order).

    A fresh call without ``rng`` always starts from ``spec.seed``; trainers
    pass their own stream so successive draws advance.
    """
    if k < 1:
        raise InvalidCount(f"need k >= 1 prior samples, got {k}")
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    return PointSet(rng.uniform(spec.low, spec.high, size=(k, spec.dim)))


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one training run.

    ``prior`` is required by the mapper trainers and ignored by the
    autoencoder trainer.
    """

    prior: PriorSpec | None = None
    steps: int = 10_000
    batch_k: int = 128
    lr: float = 3e-4
    lambda_div: float = 0.0
    transport_pool_m: int = 4096
    seed: int = 0
    cost: CostMetric = CostMetric.SQUARED_EUCLIDEAN
    trace_every: int = 0  # 0 disables feedback traces

    def __post_init__(self) -> None:
        if self.steps < 1:
            raise SpecError(f"steps must be >= 1, got {self.steps}")
        if self.batch_k < 1:
            raise SpecError(f"batch_k must be >= 1, got {self.batch_k}")
        if self.lr <= 0:
            raise SpecError(f"lr must be positive, got {self.lr}")
        if self.lambda_div < 0:
            raise SpecError(f"lambda_div must be >= 0, got {self.lambda_div}")
        if self.batch_k > self.transport_pool_m:
            raise SpecError(
                f"batch_k ({self.batch_k}) cannot exceed transport_pool_m ({self.transport_pool_m})"
            )
        if self.trace_every < 0:
            raise SpecError(f"trace_every must be >= 0, got {self.trace_every}")


@dataclass(frozen=True)
class FeedbackTrace:
    """Snapshot of one training step's assignment feedback, for plotting."""

    step: int
    noise: PointSet
    predictions: PointSet
    targets: PointSet
    sigma: Assignment
    loss: float


@dataclass
class TrainResult:
    """Trained network plus the per-step loss curve.

    ``losses`` holds the training objective per step (squared cost plus any
    weighted diversity term); ``matched_dist`` the mean Euclidean distance
    over that step's matched pairs, a cheap running divergence estimate.
    """

    net: Mlp
    losses: np.ndarray
    matched_dist: np.ndarray
    traces: list[FeedbackTrace] = field(default_factory=list)
    pairing_digest: str | None = None
    pairing_digest_after: str | None = None


def _mean_pair_distance(x: np.ndarray, pairs: tuple[np.ndarray, np.ndarray]) -> float:
    i, j = pairs
    return float(np.linalg.norm(x[i] - x[j], axis=1).mean())


def _pair_indices(k: int, rng: np.random.Generator | None) -> tuple[np.ndarray, np.ndarray]:
    if k <= DIVERSITY_EXACT_MAX_K:
        return np.triu_indices(k, 1)
    # Subsample 2k unordered pairs; O(k^2) enumeration is not worth it here.
    if rng is None:
        rng = np.random.default_rng(0)
    i = rng.integers(0, k, size=2 * k)
    j = rng.integers(0, k - 1, size=2 * k)
    j = np.where(j >= i, j + 1, j)  # j != i, uniform over the rest
    return i, j


def diversity_penalty(
    p: PointSet, z: PointSet, rng: np.random.Generator | None = None
) -> tuple[float, np.ndarray]:
    """|mean pairwise distance of p - mean pairwise distance of z| and d/dp.

    Pulls the generated points' average spread toward the target points'
    average spread; z is treated as a constant.  For k above
    ``DIVERSITY_EXACT_MAX_K`` both means use one shared random subsample of
    2k point pairs (pass ``rng`` to control it).
    """
    if p.k != z.k or p.d != z.d:
        raise TooFewPoints(f"sets must match in shape: ({p.k}, {p.d}) vs ({z.k}, {z.d})")
    if p.k < 2:
        raise TooFewPoints(f"diversity penalty needs k >= 2, got k={p.k}")
    pairs = _pair_indices(p.k, rng)
    mpd_p = _mean_pair_distance(p.data, pairs)
    mpd_z = _mean_pair_distance(z.data, pairs)
    value = abs(mpd_p - mpd_z)
    sign = np.sign(mpd_p - mpd_z)
    i, j = pairs
    diff = p.data[i] - p.data[j]
    norms = np.linalg.norm(diff, axis=1)
    units = diff / np.maximum(norms, 1e-12)[:, None]
    grad = np.zeros_like(p.data)
    np.add.at(grad, i, units)
    np.add.at(grad, j, -units)
    grad *= sign / len(i)
    return value, grad


def generate(net: Mlp, prior: PriorSpec, n: int, rng: np.random.Generator | None = None) -> PointSet:
    """Push n fresh prior samples through the network."""
    if n < 1:
        raise InvalidCount(f"need n >= 1 generated points, got {n}")
    noise = sample_prior(prior, n, rng)
    from .nn import forward  # local import keeps module load order simple

    return forward(net, noise)


def pool_sampler(
    pool: PointSet, batch_k: int, seed: int
) -> Callable[[], PointSet]:
    """Epoch-style batch source: without replacement, reshuffled when spent."""
    if batch_k > pool.k:
        raise SpecError(f"batch_k ({batch_k}) exceeds pool size ({pool.k})")
    rng = np.random.default_rng(seed)
    order = rng.permutation(pool.k)
    cursor = 0

    def next_batch() -> PointSet:
        nonlocal order, cursor
        if cursor + batch_k > pool.k:
            order = rng.permutation(pool.k)
            cursor = 0
        idx = order[cursor : cursor + batch_k]
        cursor += batch_k
        return PointSet(pool.data[idx])

    return next_batch


def _pairing_digest(noise: np.ndarray, matched: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(noise).tobytes())
    h.update(np.ascontiguousarray(matched).tobytes())
    return h.hexdigest()


def _squared_cost_and_grad(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    # (1/k) sum_i ||pred_i - target_i||^2 and its gradient wrt pred.
    diff = pred.astype(np.float64) - target
    loss = float(np.einsum("ij,ij->", diff, diff) / len(diff))
    return loss, (2.0 / len(diff)) * diff


def train_ottrans(targets: PointSet, cfg: TrainConfig, net: Mlp) -> TrainResult:
    """Learn one precomputed noise-to-target bijection by minibatch regression.

    The pool is ``targets`` itself: a matching noise pool of the same size m
    is drawn once, one m x m assignment is solved, and the resulting pairs
    stay frozen while the network trains on random minibatches of them.
    """
    if cfg.cost is not CostMetric.SQUARED_EUCLIDEAN:
        raise UnsupportedMetric("training requires the squared Euclidean cost")
    if cfg.prior is None:
        raise SpecError("mapper training needs a prior spec")
    m = targets.k
    if cfg.batch_k > m:
        raise SpecError(f"batch_k ({cfg.batch_k}) exceeds the target pool size ({m})")
    if net.in_dim != cfg.prior.dim:
        raise SpecError(f"network input dim {net.in_dim} != prior dim {cfg.prior.dim}")
    if net.out_dim != targets.d:
        raise SpecError(f"network output dim {net.out_dim} != target dim {targets.d}")

    prior_rng, batch_rng = _spawn_rngs(cfg.seed, 2)
    noise = sample_prior(cfg.prior, m, prior_rng)  # PoolTooLarge surfaces in pairwise_cost
    sigma = solve_assignment(pairwise_cost(noise, targets, cfg.cost))
    matched = targets.data[sigma.perm]
    matched.setflags(write=False)
    digest = _pairing_digest(noise.data, matched)

    adam = init_adam(net)
    losses = np.empty(cfg.steps)
    dists = np.empty(cfg.steps)
    for step in range(cfg.steps):
        idx = batch_rng.choice(m, size=cfg.batch_k, replace=False)
        x = noise.data[idx]
        y = matched[idx]
        out, cache = _forward_cached(net, x)
        loss, out_grad = _squared_cost_and_grad(out, y)
        grads, _ = _backward_from_cache(net, cache, out_grad)
        adam_step(net, grads, adam, cfg.lr)
        losses[step] = loss
        dists[step] = float(np.linalg.norm(out.astype(np.float64) - y, axis=1).mean())

    return TrainResult(
        net=net,
        losses=losses,
        matched_dist=dists,
        pairing_digest=digest,
        pairing_digest_after=_pairing_digest(noise.data, matched),
    )


def train_otgen(
    target_sampler: Callable[[], PointSet], cfg: TrainConfig, net: Mlp
) -> TrainResult:
    """Train by re-matching predictions to fresh target batches every step.

    Per step: draw targets Z and noise N (both of size batch_k), predict
    P = net(N), solve the k x k assignment from P to Z, then take one Adam
    step on the matched squared cost plus ``lambda_div`` times the diversity
    penalty, with the assignment held fixed.
    """
    if cfg.cost is not CostMetric.SQUARED_EUCLIDEAN:
        raise UnsupportedMetric("training requires the squared Euclidean cost")
    if cfg.prior is None:
        raise SpecError("mapper training needs a prior spec")
    if net.in_dim != cfg.prior.dim:
        raise SpecError(f"network input dim {net.in_dim} != prior dim {cfg.prior.dim}")

    prior_rng, div_rng = _spawn_rngs(cfg.seed, 2)
    adam = init_adam(net)
    losses = np.empty(cfg.steps)
    dists = np.empty(cfg.steps)
    traces: list[FeedbackTrace] = []
    for step in range(cfg.steps):
        z = target_sampler()
        if z.k != cfg.batch_k:
            raise SpecError(f"target sampler returned {z.k} points, expected {cfg.batch_k}")
        noise = sample_prior(cfg.prior, cfg.batch_k, prior_rng)
        out, cache = _forward_cached(net, noise.data)
        preds = PointSet(out)
        sigma = solve_assignment(pairwise_cost(preds, z, cfg.cost))
        loss, out_grad = _squared_cost_and_grad(out, z.data[sigma.perm])
        if cfg.lambda_div > 0:
            dval, dgrad = diversity_penalty(preds, z, div_rng)
            loss += cfg.lambda_div * dval
            out_grad = out_grad + cfg.lambda_div * dgrad
        grads, _ = _backward_from_cache(net, cache, out_grad)
        adam_step(net, grads, adam, cfg.lr)
        losses[step] = loss
        dists[step] = float(matched_distances(preds, z, sigma, CostMetric.EUCLIDEAN).mean())
        if cfg.trace_every and (step % cfg.trace_every == 0 or step == cfg.steps - 1):
            traces.append(
                FeedbackTrace(
                    step=step, noise=noise, predictions=preds, targets=z,
                    sigma=sigma, loss=loss,
                )
            )

    return TrainResult(net=net, losses=losses, matched_dist=dists, traces=traces)


def _spawn_rngs(seed: int, n: int) -> list[np.random.Generator]:
    return [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(n)]


# ---------------------------------------------------------------------------
# Feedback trace serialization (consumed by the plot command)
# ---------------------------------------------------------------------------


def feedback_traces_to_json(traces: list[FeedbackTrace]) -> str:
    """JSON array of trace objects; schema documented in the README."""
    import json

    return json.dumps(
        [
            {
                "step": t.step,
                "loss": t.loss,
                "noise": t.noise.data.tolist(),
                "predictions": t.predictions.data.tolist(),
                "targets": t.targets.data.tolist(),
                "perm": t.sigma.perm.tolist(),
                "total_cost": t.sigma.total_cost,
            }
            for t in traces
        ]
    )


def feedback_traces_from_json(text: str) -> list[FeedbackTrace]:
    """Inverse of :func:`feedback_traces_to_json`; raises SpecError with the
    offending array index on malformed entries."""
    import json

    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"trace file is not valid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise SpecError("trace file must hold a JSON array")
    traces = []
    for i, obj in enumerate(raw):
        try:
            traces.append(
                FeedbackTrace(
                    step=int(obj["step"]),
                    noise=PointSet(np.asarray(obj["noise"])),
                    predictions=PointSet(np.asarray(obj["predictions"])),
                    targets=PointSet(np.asarray(obj["targets"])),
                    sigma=Assignment(
                        perm=np.asarray(obj["perm"], dtype=np.int64),
                        total_cost=float(obj["total_cost"]),
                    ),
                    loss=float(obj["loss"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"trace entry {i} is malformed: {exc}") from exc
    return traces
