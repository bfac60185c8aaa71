"""Harness: reproducibility, pairing, input generation, exclusion policy."""
from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

from dualdelta.protocol import ProtocolError
from dualdelta.harness import (
    EDGE_POOL,
    ExperimentConfig,
    ImplementationHandle,
    InputSpec,
    generate_input,
    run_dual_delta,
    trial_rng,
)
from dualdelta.kernels import KernelConfig
from dualdelta.matrix import representable
from dualdelta.minifloat import BINARY16, BINARY32, BINARY64

B16_KERNEL = KernelConfig(BINARY16, BINARY16, "sequential", 32, BINARY16)
B32_KERNEL = KernelConfig(BINARY16, BINARY32, "sequential", 32, BINARY16)
B64_KERNEL = KernelConfig(BINARY64, BINARY64, "sequential", 32, BINARY64)

SMALL_SPEC = InputSpec(rows_a=6, cols_a=12, cols_b=6)


def small_config(**kw) -> ExperimentConfig:
    args = dict(
        impl_1=ImplementationHandle("one", kernel=B16_KERNEL),
        impl_2=ImplementationHandle("two", kernel=B32_KERNEL),
        input_spec=SMALL_SPEC,
        num_tests=40,
        seed=11,
    )
    args.update(kw)
    return ExperimentConfig(**args)


def test_input_spec_validation():
    with pytest.raises(ValueError, match="edge_case_rate"):
        InputSpec(edge_case_rate=1.5)
    with pytest.raises(ValueError, match="rows_a"):
        InputSpec(rows_a=0)
    with pytest.raises(ValueError, match="distribution"):
        InputSpec(distribution="cauchy")
    with pytest.raises(ValueError, match="uniform"):
        InputSpec(distribution="uniform", dist_params=(2.0, 1.0))
    with pytest.raises(ValueError, match="edge-pool"):
        InputSpec(edge_pool=("wild",))


def test_handle_validation():
    with pytest.raises(ValueError, match="exactly one"):
        ImplementationHandle("x")
    with pytest.raises(ValueError, match="exactly one"):
        ImplementationHandle("x", kernel=B16_KERNEL, command=("echo",))
    assert ImplementationHandle("x", kernel=B16_KERNEL).kind == "builtin"
    assert ImplementationHandle("x", command=("srv",)).kind == "external"


def test_generate_input_deterministic_per_seed():
    spec = InputSpec(rows_a=4, cols_a=5, cols_b=3)
    a1, b1 = generate_input(spec, trial_rng(99, 7))
    a2, b2 = generate_input(spec, trial_rng(99, 7))
    assert a1.bitwise_equal(a2) and b1.bitwise_equal(b2)
    a3, _ = generate_input(spec, trial_rng(99, 8))
    assert not a1.bitwise_equal(a3)


def test_trial_stream_independent_of_run_length():
    # trial i's input depends on (seed, i) only, never on N or visit order
    cfg_a = small_config(num_tests=10)
    cfg_b = small_config(num_tests=25)
    d1a, _, _ = run_dual_delta(cfg_a)
    d1b, _, _ = run_dual_delta(cfg_b)
    assert d1a.values == d1b.values[:10]


def test_inputs_are_representable_in_element_format():
    spec = InputSpec(rows_a=3, cols_a=4, cols_b=2, element_format=BINARY16)
    for trial in range(10):
        a, b = generate_input(spec, trial_rng(5, trial))
        assert a.format_tag == BINARY16 and b.format_tag == BINARY16
        assert representable(a.data, BINARY16)
        assert representable(b.data, BINARY16)


def test_standard_normal_moments():
    spec = InputSpec(rows_a=100, cols_a=100, cols_b=1)
    samples = []
    for trial in range(10):
        a, _ = generate_input(spec, trial_rng(123, trial))
        samples.append(a.data.ravel())
    x = np.concatenate(samples)  # 10^5 quantized standard-normal draws
    assert abs(x.mean()) <= 0.02
    assert 0.98 <= x.std() <= 1.02


def test_uniform_and_lognormal_sampling():
    spec = InputSpec(rows_a=40, cols_a=40, cols_b=1,
                     distribution="uniform", dist_params=(-2.0, 3.0))
    a, _ = generate_input(spec, trial_rng(3, 0))
    assert a.data.min() >= -2.0 - 1e-3 and a.data.max() <= 3.0 + 1e-3
    spec = InputSpec(rows_a=40, cols_a=40, cols_b=1,
                     distribution="lognormal", dist_params=(0.0, 0.5))
    a, _ = generate_input(spec, trial_rng(3, 0))
    assert (a.data > 0).all()


def test_edge_pool_zeros_only():
    spec = InputSpec(rows_a=3, cols_a=3, cols_b=3, edge_case_rate=1.0,
                     edge_pool=("zeros",))
    a, b = generate_input(spec, trial_rng(1, 0))
    assert not a.data.any() and not b.data.any()


def test_edge_pool_cases_constructible():
    for case in EDGE_POOL:
        spec = InputSpec(rows_a=4, cols_a=6, cols_b=5, edge_case_rate=1.0,
                         edge_pool=(case,))
        a, b = generate_input(spec, trial_rng(2, 3))
        assert a.shape == (4, 6) and b.shape == (6, 5)
        assert representable(a.data, BINARY16)
        assert representable(b.data, BINARY16)


def test_edge_rate_mixes_pool_and_random():
    spec = InputSpec(rows_a=2, cols_a=2, cols_b=2, edge_case_rate=0.5,
                     edge_pool=("zeros",))
    zero_trials = sum(
        not generate_input(spec, trial_rng(7, t))[0].data.any()
        for t in range(200))
    assert 60 <= zero_trials <= 140


def test_run_identical_impls_gives_identical_deltas():
    cfg = small_config(impl_1=ImplementationHandle("a", kernel=B32_KERNEL),
                       impl_2=ImplementationHandle("b", kernel=B32_KERNEL))
    d1, d2, meta = run_dual_delta(cfg)
    assert d1.values == d2.values
    assert meta.valid and meta.n_kept == cfg.num_tests


def test_run_oracle_config_gives_zero_deltas():
    cfg = small_config(
        impl_1=ImplementationHandle("oracle-cfg", kernel=B64_KERNEL),
        impl_2=ImplementationHandle(
            "narrow", kernel=KernelConfig(BINARY64, BINARY32, "sequential", 32, BINARY32)),
        input_spec=InputSpec(rows_a=4, cols_a=8, cols_b=4, element_format=BINARY64))
    d1, d2, _ = run_dual_delta(cfg)
    assert all(v == 0.0 for v in d1.values)
    assert any(v > 0.0 for v in d2.values)


def test_run_reproducible_bitwise():
    cfg = small_config()
    d1a, d2a, ma = run_dual_delta(cfg)
    d1b, d2b, mb = run_dual_delta(cfg)
    assert d1a.values == d1b.values and d2a.values == d2b.values
    assert ma.config_hash == mb.config_hash


def test_run_parallel_matches_serial_bitwise():
    cfg = small_config(num_tests=60)
    serial = run_dual_delta(cfg, jobs=1)
    parallel = run_dual_delta(cfg, jobs=8)
    assert serial[0].values == parallel[0].values
    assert serial[1].values == parallel[1].values
    assert serial[2].kept_trials == parallel[2].kept_trials


def test_pairing_preserved_under_exclusion():
    # constant max_finite/4 inputs overflow the binary16 accumulator at
    # K = 12, so every edge trial drops from both distributions
    spec = InputSpec(rows_a=2, cols_a=12, cols_b=2, edge_case_rate=0.3,
                     edge_pool=("const_quarter_max",))
    cfg = small_config(input_spec=spec, num_tests=50)
    d1, d2, meta = run_dual_delta(cfg)
    assert len(d1) == len(d2) == meta.n_kept
    assert meta.n_kept + len({e["trial"] for e in meta.excluded}) == 50
    assert meta.excluded  # some trials did overflow
    # the binary16 output quantization overflows for both implementations
    assert {e["source"] for e in meta.excluded} <= {"impl_1", "impl_2"}
    assert not meta.valid  # way past the 1% budget
    assert "excluded" in meta.invalid_reason


def test_run_seed_changes_results():
    d1a, _, _ = run_dual_delta(small_config(seed=1))
    d1b, _, _ = run_dual_delta(small_config(seed=2))
    assert d1a.values != d1b.values


def test_config_validation():
    with pytest.raises(ValueError, match="num_tests"):
        small_config(num_tests=0)
    with pytest.raises(ValueError, match="alpha"):
        small_config(alpha=1.5)
    with pytest.raises(ValueError, match="metric"):
        small_config(metric="ulp")
    with pytest.raises(ValueError, match="seed"):
        small_config(seed=-1)


def test_config_hash_stable_and_sensitive():
    assert small_config().config_hash() == small_config().config_hash()
    assert small_config().config_hash() != small_config(seed=12).config_hash()


MOCK = str(Path(__file__).parent / "helpers" / "mock_server.py")


def test_external_implementation_in_run():
    # child baseline computes the same sequential binary64 matmul as the
    # oracle: for 1xK x Kx1 shapes its deltas are exactly zero
    cfg = small_config(
        impl_2=ImplementationHandle("child", command=(sys.executable, MOCK, "matmul64")),
        input_spec=InputSpec(rows_a=1, cols_a=16, cols_b=1),
        num_tests=12)
    d1, d2, meta = run_dual_delta(cfg)
    assert meta.n_kept == 12
    assert all(v == 0.0 for v in d2.values)
    assert any(v > 0.0 for v in d1.values)


def test_external_failure_aborts_with_trial_index():
    cfg = small_config(
        impl_2=ImplementationHandle("child", command=(sys.executable, MOCK, "error-on-3")),
        input_spec=InputSpec(rows_a=3, cols_a=3, cols_b=3),
        num_tests=10)
    with pytest.raises(ProtocolError, match="trial 3"):
        run_dual_delta(cfg)
