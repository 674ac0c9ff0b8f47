"""End-to-end coded computation with a simulated worker pool.

``run_pipeline`` encodes, lets every worker apply ``f``, lets the adversary
overwrite its share, decodes and scores the estimates.  ``run_repeated``
averages that over fresh random inputs.

The reported error is the realised error of one fixed attack strategy, so it
is a lower bound on the worst case over all adversaries.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Callable, Optional

import numpy as np

from . import adversary, codec
from .adversary import AttackPlan
from .codec import CodedTask
from .errors import NotFound

THREADS_ENV = "CODEDSPLINE_THREADS"


@dataclass(frozen=True)
class ComputeFunction:
    """A function ``R^d -> [-M, M]^m`` with the box its inputs are drawn from."""

    id: str
    d: int
    m: int
    M: float
    fn: Callable[[np.ndarray], np.ndarray]
    box: tuple = (0.0, 1.0)
    nu: Optional[float] = None  # bound on |f'|
    eta: Optional[float] = None  # bound on |f''|

    def __call__(self, x) -> np.ndarray:
        """Evaluate on rows of ``x`` (shape (n, d)); returns shape (n, m)."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, self.d)
        y = np.asarray(self.fn(x), dtype=float).reshape(x.shape[0], self.m)
        return np.clip(y, -self.M, self.M)

    def sample_inputs(self, K: int, rng: np.random.Generator, distribution: str = "uniform") -> np.ndarray:
        """K input points: i.i.d. uniform on the box, or the deterministic
        ``grid`` placing x_k at fraction k/(K+1) of the box (collinear in alpha)."""
        lo, hi = self.box
        if distribution == "uniform":
            return rng.uniform(lo, hi, size=(K, self.d))
        if distribution == "grid":
            frac = codec.default_alpha(K)[:, None]
            return np.repeat(lo + (hi - lo) * frac, self.d, axis=1)
        raise ValueError(f"unknown input distribution {distribution!r}")


def _xsinx(x):
    return x * np.sin(x)


def _cubic(x):
    return x**3 - x


_ACTIVATIONS = {"tanh": np.tanh, "linear": lambda z: z, "relu": lambda z: np.maximum(z, 0.0)}


def load_mlp(net: dict) -> ComputeFunction:
    layers = [(np.asarray(L["w"], float), np.asarray(L["b"], float), _ACTIVATIONS[L["act"]]) for L in net["layers"]]

    def forward(x):
        h = x
        for w, b, act in layers:
            h = act(h @ w.T + b)
        return h

    return ComputeFunction("mlp_small", int(net["d"]), int(net["m"]), float(net["M"]), forward)


def _mlp_small() -> ComputeFunction:
    text = resources.files("codedspline").joinpath("data/mlp_small.json").read_text()
    return load_mlp(json.loads(text))


# M bounds |f| over every coded input the interpolating encoder produced in
# 5000 sorted uniform draws (all within [-0.73, 1.73]), so honest replies are
# never clipped.  nu and eta bound |f'| and |f''| on the unit box.
_REGISTRY = {
    "xsinx": lambda: ComputeFunction("xsinx", 1, 1, 2.0, _xsinx, nu=1.39, eta=2.0),
    "identity": lambda: ComputeFunction("identity", 1, 1, 4.0, lambda x: x, nu=1.0, eta=0.0),
    "cubic": lambda: ComputeFunction("cubic", 1, 1, 4.0, _cubic, nu=2.0, eta=6.0),
    "mlp_small": _mlp_small,
}


def registry_ids() -> list[str]:
    return sorted(_REGISTRY)


def registry_get(fid: str) -> ComputeFunction:
    try:
        return _REGISTRY[fid]()
    except KeyError:
        raise NotFound(f"unknown function id {fid!r}; known: {registry_ids()}") from None


@dataclass(frozen=True)
class PipelineResult:
    estimates: np.ndarray
    per_point_sq_error: np.ndarray
    avg_error: float
    metadata: dict = field(default_factory=dict)


def run_pipeline(
    task: CodedTask,
    f: ComputeFunction,
    plan: AttackPlan,
    lambda_d: float,
    lambda_e: float = 0.0,
) -> PipelineResult:
    if f.d != task.d:
        raise ValueError(f"function expects d = {f.d}, inputs have d = {task.d}")
    encoder = codec.design_encoder(task, lambda_e)
    coded = codec.encode(encoder, task.beta)
    honest = f(coded)
    B = adversary.select_corrupted(plan, task)
    replies = adversary.corrupt_responses(plan, B, honest, task, encoder)
    est = codec.decode(task.beta, replies, lambda_d, task.alpha, M=f.M)
    truth = f(task.inputs)
    sq = np.sum((est - truth) ** 2, axis=1)
    meta = {
        "N": task.N,
        "K": task.K,
        "gamma": plan.gamma,
        "corrupted": int(B.size),
        "lambda_d": float(lambda_d),
        "strategy": plan.strategy,
        "seed": plan.seed,
    }
    return PipelineResult(est, sq, float(sq.mean()), meta)


@dataclass(frozen=True)
class RepeatedResult:
    results: list
    mean: float
    stddev: Optional[float]


def _thread_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    cap = os.cpu_count() or 1
    if raw:
        try:
            cap = max(1, int(raw))
        except ValueError:
            pass
    return cap


def run_repeated(
    f: ComputeFunction,
    K: int,
    N: int,
    plan: AttackPlan,
    lambda_d: float,
    repetitions: int = 20,
    seed: int = 0,
    lambda_e: float = 0.0,
    sort_inputs: bool = True,
    distribution: str = "uniform",
) -> RepeatedResult:
    """Average ``run_pipeline`` over ``repetitions`` independent input draws.

    Repetition ``r`` takes its own stream from ``SeedSequence(seed).spawn``;
    the adversary's seed is derived from the same stream so each repetition
    is reproducible on its own.

    With ``sort_inputs`` and scalar inputs, the draw is assigned to the
    encoder points in increasing order.  The set of values being computed is
    unchanged, but the encoder no longer has to zig-zag between unrelated
    neighbours, which keeps ``f(u_e(.))`` smooth.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    children = np.random.SeedSequence(seed).spawn(repetitions)

    def one(r: int) -> PipelineResult:
        rng = np.random.default_rng(children[r])
        x = f.sample_inputs(K, rng, distribution)
        if sort_inputs and f.d == 1:
            x = np.sort(x, axis=0)
        task = CodedTask.create(x, N, f.M, f.m)
        rep_plan = replace(plan, seed=int(children[r].generate_state(1, np.uint64)[0]))
        return run_pipeline(task, f, rep_plan, lambda_d, lambda_e)

    workers = min(_thread_count(), repetitions)
    if workers == 1:
        results = [one(r) for r in range(repetitions)]
    else:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, range(repetitions)))

    errs = np.array([r.avg_error for r in results])
    std = float(errs.std(ddof=1)) if repetitions > 1 else None
    return RepeatedResult(results, float(errs.mean()), std)
