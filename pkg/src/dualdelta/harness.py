"""Experiment driver: input generation and the paired evaluation loop.

Each trial draws one input, evaluates both implementations plus the oracle,
and appends one error value per implementation at the same trial index.
That positional pairing carries through to the signed-rank/sign tests, so
trials with non-finite implementation output are excluded from *both*
distributions rather than from one.
"""
from __future__ import annotations

import hashlib
import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .kernels import KernelConfig, matmul_emulated, matmul_oracle
from .matrix import Matrix
from .metrics import METRIC_NAMES, resolve_metric
from .minifloat import BINARY16, FloatFormat, quantize_array
from .protocol import ExternalProcess, ProtocolError
from .stats import DeltaDistribution

__all__ = [
    "EDGE_POOL",
    "InputSpec",
    "ImplementationHandle",
    "ExperimentConfig",
    "RunMetadata",
    "generate_input",
    "run_dual_delta",
]

EDGE_POOL = ("zeros", "const_quarter_max", "alternating_large", "one_hot_rows", "subnormal_fill")

DISTRIBUTIONS = ("standard_normal", "uniform", "lognormal")

# beyond this exclusion fraction a run no longer supports a verdict
MAX_EXCLUDED_FRACTION = 0.01


@dataclass(frozen=True)
class InputSpec:
    """Shape, sampling distribution and edge-case policy for trial inputs.

    A is rows_a x cols_a, B is cols_a x cols_b.  Sampled values are
    quantized to ``element_format``, so generated inputs are always
    representable in it.  With probability ``edge_case_rate`` a trial draws
    from the deterministic edge pool instead of the random distribution.
    """

    rows_a: int = 64
    cols_a: int = 64
    cols_b: int = 64
    distribution: str = "standard_normal"
    dist_params: tuple[float, ...] = ()
    element_format: FloatFormat = BINARY16
    edge_case_rate: float = 0.0
    edge_pool: tuple[str, ...] = EDGE_POOL

    def __post_init__(self) -> None:
        for name in ("rows_a", "cols_a", "cols_b"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0.0 <= self.edge_case_rate <= 1.0:
            raise ValueError(f"edge_case_rate must be in [0, 1], got {self.edge_case_rate}")
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(
                f"distribution must be one of {DISTRIBUTIONS}, got {self.distribution!r}")
        params = tuple(float(p) for p in self.dist_params)
        object.__setattr__(self, "dist_params", params)
        if self.distribution == "standard_normal" and params:
            raise ValueError("standard_normal takes no parameters")
        if self.distribution == "uniform":
            if len(params) != 2 or not params[0] < params[1]:
                raise ValueError("uniform needs parameters (lo, hi) with lo < hi")
        if self.distribution == "lognormal":
            if len(params) != 2 or not params[1] > 0:
                raise ValueError("lognormal needs parameters (mu, sigma) with sigma > 0")
        pool = tuple(self.edge_pool)
        for case in pool:
            if case not in EDGE_POOL:
                raise ValueError(f"unknown edge-pool case {case!r}; known: {EDGE_POOL}")
        if self.edge_case_rate > 0 and not pool:
            raise ValueError("edge_case_rate > 0 requires a nonempty edge pool")
        object.__setattr__(self, "edge_pool", pool)

    def as_dict(self) -> dict:
        return {
            "rows_a": self.rows_a,
            "cols_a": self.cols_a,
            "cols_b": self.cols_b,
            "distribution": self.distribution,
            "dist_params": list(self.dist_params),
            "element_format": self.element_format.spec_string(),
            "edge_case_rate": self.edge_case_rate,
            "edge_pool": list(self.edge_pool),
        }


@dataclass(frozen=True)
class ImplementationHandle:
    """A named implementation: a builtin kernel config or a child command."""

    label: str
    kernel: KernelConfig | None = None
    command: tuple[str, ...] | str | None = None
    timeout: float = 30.0

    def __post_init__(self) -> None:
        if (self.kernel is None) == (self.command is None):
            raise ValueError("exactly one of kernel/command must be set")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")

    @property
    def kind(self) -> str:
        return "builtin" if self.kernel is not None else "external"

    def as_dict(self) -> dict:
        d: dict = {"label": self.label, "kind": self.kind}
        if self.kernel is not None:
            d.update(self.kernel.as_dict())
        else:
            cmd = self.command
            d["command"] = cmd if isinstance(cmd, str) else " ".join(cmd)
            d["timeout"] = self.timeout
        return d


@dataclass(frozen=True)
class ExperimentConfig:
    impl_1: ImplementationHandle
    impl_2: ImplementationHandle
    input_spec: InputSpec = InputSpec()
    metric: str = "max_hybrid"
    num_tests: int = 1000
    seed: int = 0
    alpha: float = 0.01

    def __post_init__(self) -> None:
        if self.num_tests < 1:
            raise ValueError(f"num_tests must be >= 1, got {self.num_tests}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.metric not in METRIC_NAMES:
            raise ValueError(f"metric must be one of {METRIC_NAMES}, got {self.metric!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def as_dict(self) -> dict:
        return {
            "experiment": {
                "num_tests": self.num_tests,
                "seed": self.seed,
                "alpha": self.alpha,
                "metric": self.metric,
            },
            "input": self.input_spec.as_dict(),
            "impl_1": self.impl_1.as_dict(),
            "impl_2": self.impl_2.as_dict(),
        }

    def config_hash(self) -> str:
        canon = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class RunMetadata:
    seed: int
    config_hash: str
    n_requested: int
    n_kept: int
    kept_trials: tuple[int, ...]
    excluded: tuple[dict, ...]
    valid: bool
    invalid_reason: str | None
    jobs: int
    wall_time_s: float
    timestamp: str

    def as_dict(self, include_timing: bool = True) -> dict:
        d = {
            "seed": self.seed,
            "config_hash": self.config_hash,
            "n_requested": self.n_requested,
            "n_kept": self.n_kept,
            "kept_trials": list(self.kept_trials),
            "excluded": [dict(e) for e in self.excluded],
            "valid": self.valid,
            "invalid_reason": self.invalid_reason,
        }
        if include_timing:
            # execution details that legitimately vary between invocations
            # of the same config; suppressed for byte-reproducible reports
            d["jobs"] = self.jobs
            d["wall_time_s"] = self.wall_time_s
            d["timestamp"] = self.timestamp
        return d


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-based per-trial stream: a function of (seed, trial) only.

    Philox keyed on (seed, trial) gives independent streams per trial, so
    serial and parallel executions agree bitwise.
    """
    key = np.array([seed, trial], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _sample(spec: InputSpec, rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
    if spec.distribution == "standard_normal":
        return rng.standard_normal(shape)
    if spec.distribution == "uniform":
        lo, hi = spec.dist_params
        return rng.uniform(lo, hi, shape)
    mu, sigma = spec.dist_params
    return rng.lognormal(mu, sigma, shape)


def _edge_case(case: str, spec: InputSpec, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    fmt = spec.element_format
    sa = (spec.rows_a, spec.cols_a)
    sb = (spec.cols_a, spec.cols_b)
    if case == "zeros":
        return np.zeros(sa), np.zeros(sb)
    if case == "const_quarter_max":
        c = fmt.max_finite / 4.0  # exactly representable: same significand, exponent - 2
        return np.full(sa, c), np.full(sb, c)
    if case == "alternating_large":
        c = fmt.max_finite / 4.0
        ia = np.add.outer(np.arange(sa[0]), np.arange(sa[1]))
        ib = np.add.outer(np.arange(sb[0]), np.arange(sb[1]))
        return c * (-1.0) ** ia, c * (-1.0) ** ib
    if case == "one_hot_rows":
        a = np.zeros(sa)
        hot = rng.integers(0, sa[1], size=sa[0])
        a[np.arange(sa[0]), hot] = 1.0
        b = quantize_array(_sample(spec, rng, sb), fmt)
        return a, b
    # subnormal_fill
    a = rng.uniform(-fmt.min_normal, fmt.min_normal, sa)
    b = rng.uniform(-fmt.min_normal, fmt.min_normal, sb)
    return a, b


def generate_input(spec: InputSpec, rng: np.random.Generator) -> tuple[Matrix, Matrix]:
    """Draw one (A, B) pair, quantized to the input element format."""
    fmt = spec.element_format
    if spec.edge_case_rate > 0.0 and rng.random() < spec.edge_case_rate:
        case = spec.edge_pool[int(rng.integers(0, len(spec.edge_pool)))]
        a, b = _edge_case(case, spec, rng)
    else:
        a = _sample(spec, rng, (spec.rows_a, spec.cols_a))
        b = _sample(spec, rng, (spec.cols_a, spec.cols_b))
    return (
        Matrix(quantize_array(a, fmt), format_tag=fmt),
        Matrix(quantize_array(b, fmt), format_tag=fmt),
    )


class _Evaluator:
    """Resolves an ImplementationHandle to a callable, owning any child process."""

    def __init__(self, handle: ImplementationHandle):
        self.handle = handle
        self._proc: ExternalProcess | None = None
        self._lock = threading.Lock()
        if handle.kind == "external":
            self._proc = ExternalProcess(handle.command, handle.label, handle.timeout)
            self._proc.start()

    def __call__(self, trial: int, a: Matrix, b: Matrix) -> Matrix:
        if self._proc is None:
            return matmul_emulated(a, b, self.handle.kernel)
        # one in-flight request per child process
        with self._lock:
            return self._proc.eval(trial, a, b)

    def close(self) -> None:
        if self._proc is not None:
            self._proc.shutdown()


def _nonfinite_reason(m: Matrix) -> str | None:
    bad = ~np.isfinite(m.data)
    if not bad.any():
        return None
    i, j = (int(v) for v in np.argwhere(bad)[0])
    return f"non-finite output {m.data[i, j]!r} at ({i}, {j})"


def run_dual_delta(
    cfg: ExperimentConfig, jobs: int = 1,
) -> tuple[DeltaDistribution, DeltaDistribution, RunMetadata]:
    """Run the full experiment loop and collect both error distributions.

    Identical configs (including seed) produce bitwise identical results
    for any ``jobs`` value.  A trial whose implementation or oracle output
    contains non-finite values is excluded from both distributions and
    logged; more than ``MAX_EXCLUDED_FRACTION`` exclusions marks the run
    invalid.  Protocol failures of external implementations abort the run
    with the offending trial index.
    """
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs}")
    metric_fn = resolve_metric(cfg.metric)
    start = time.monotonic()
    timestamp = datetime.now(timezone.utc).isoformat()

    ev1 = _Evaluator(cfg.impl_1)
    try:
        ev2 = _Evaluator(cfg.impl_2)
    except BaseException:
        ev1.close()
        raise

    def one_trial(i: int):
        rng = trial_rng(cfg.seed, i)
        a, b = generate_input(cfg.input_spec, rng)
        try:
            y1 = ev1(i, a, b)
            y2 = ev2(i, a, b)
        except ProtocolError as exc:
            raise ProtocolError(f"trial {i}: {exc}") from None
        yo = matmul_oracle(a, b)
        exclusions = []
        for source, out in (("impl_1", y1), ("impl_2", y2), ("oracle", yo)):
            reason = _nonfinite_reason(out)
            if reason is not None:
                exclusions.append({"trial": i, "source": source, "reason": reason})
        if exclusions:
            return i, None, None, exclusions
        return i, metric_fn(y1, yo), metric_fn(y2, yo), []

    try:
        if jobs == 1:
            results = [one_trial(i) for i in range(cfg.num_tests)]
        else:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(one_trial, range(cfg.num_tests)))
    finally:
        ev1.close()
        ev2.close()

    results.sort(key=lambda r: r[0])
    kept: list[int] = []
    v1: list[float] = []
    v2: list[float] = []
    excluded: list[dict] = []
    for i, dv1, dv2, exc in results:
        if exc:
            excluded.extend(exc)
        else:
            kept.append(i)
            v1.append(dv1)
            v2.append(dv2)

    excluded_trials = {e["trial"] for e in excluded}
    valid = True
    invalid_reason = None
    if len(excluded_trials) > MAX_EXCLUDED_FRACTION * cfg.num_tests:
        valid = False
        invalid_reason = (f"{len(excluded_trials)} of {cfg.num_tests} trials excluded "
                          f"(> {MAX_EXCLUDED_FRACTION:.0%})")
    if not kept:
        valid = False
        invalid_reason = "every trial was excluded"
        raise RuntimeError(f"run produced no usable trials: {invalid_reason}")

    meta = RunMetadata(
        seed=cfg.seed,
        config_hash=cfg.config_hash(),
        n_requested=cfg.num_tests,
        n_kept=len(kept),
        kept_trials=tuple(kept),
        excluded=tuple(excluded),
        valid=valid,
        invalid_reason=invalid_reason,
        jobs=jobs,
        wall_time_s=time.monotonic() - start,
        timestamp=timestamp,
    )
    d1 = DeltaDistribution(tuple(v1), label=cfg.impl_1.label, metric=cfg.metric)
    d2 = DeltaDistribution(tuple(v2), label=cfg.impl_2.label, metric=cfg.metric)
    return d1, d2, meta
