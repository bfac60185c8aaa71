"""dualdelta: compare two numerical-kernel implementations against a
high-precision oracle via paired per-trial error distributions.

The experiment loop samples inputs, evaluates both implementations plus a
binary64 oracle, reduces each output pair to a scalar error, and compares
the two resulting error samples with descriptive statistics, nonparametric
hypothesis tests and a categorical verdict.
"""

__version__ = "0.1.0"

from .harness import (
    ExperimentConfig,
    ImplementationHandle,
    InputSpec,
    RunMetadata,
    generate_input,
    run_dual_delta,
)
from .kernels import KernelConfig, dot_reduce, matmul_emulated, matmul_oracle
from .matrix import Matrix
from .metrics import max_hybrid_error, normwise_relative_error
from .minifloat import (
    BFLOAT16,
    BINARY16,
    BINARY32,
    BINARY64,
    FP8_E4M3,
    FP8_E5M2,
    FloatFormat,
    format_properties,
    parse_format,
    quantize,
    quantize_array,
    quantize_matrix,
)
from .report import build_report, histogram_shared_bins, qq_points, render_report
from .stats import (
    DeltaDistribution,
    DescriptiveSummary,
    TestResult,
    describe,
    ks_two_sample,
    paired_t_test,
    shapiro_wilk,
    sign_test,
    variance_test,
    wilcoxon_signed_rank,
)
from .verdict import Verdict, compare_summaries, decide_verdict

__all__ = [
    "__version__",
    "BFLOAT16", "BINARY16", "BINARY32", "BINARY64", "FP8_E4M3", "FP8_E5M2",
    "DeltaDistribution", "DescriptiveSummary", "ExperimentConfig", "FloatFormat",
    "ImplementationHandle", "InputSpec", "KernelConfig", "Matrix", "RunMetadata",
    "TestResult", "Verdict",
    "build_report", "compare_summaries", "decide_verdict", "describe", "dot_reduce",
    "format_properties", "generate_input", "histogram_shared_bins", "ks_two_sample",
    "matmul_emulated", "matmul_oracle", "max_hybrid_error", "normwise_relative_error",
    "paired_t_test", "parse_format", "qq_points", "quantize", "quantize_array",
    "quantize_matrix", "render_report", "run_dual_delta", "shapiro_wilk", "sign_test",
    "variance_test", "wilcoxon_signed_rank",
]
