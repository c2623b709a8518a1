"""Sparse matrix formats, SpMV kernels, tuning, and benchmark drivers.

The package centers on three storage layouts (COO, CSR, DIA) with two
kernel families each: plain scalar-order implementations and vector-style
variants driven by masked-lane primitives.  Around the kernels sit format
conversions, Matrix Market I/O and synthetic generators, a run-first format
auto-tuner, a dataflow pipeline model with a cycle estimator, a distributed
conjugate-gradient mini-benchmark, and a CSV-producing benchmark CLI.
"""

from .autotune import Measurement, TuneChoice, distribution_report, measure, tune
from .convert import (
    DiaFillPolicy,
    coo_to_csr,
    coo_to_dia,
    csr_to_coo,
    dense_to_coo,
    dia_to_coo,
    sort_coo,
    switch_format,
    to_format,
)
from .dataflow import (
    CycleEstimate,
    DataflowConfig,
    PaddedCoo,
    dataflow_spmv,
    estimate_cycles,
    multiply_stage,
    pad_inputs,
    reduce_stage,
)
from .errors import (
    AllCandidatesFailed,
    DimensionMismatch,
    Diverged,
    EmptyInput,
    FillRatioExceeded,
    IndexOverflow,
    MissingBaseline,
    ParseError,
    SparseError,
    UnsortedInput,
    UnsupportedCombination,
    UnsupportedField,
    VerificationFailed,
)
from .formats import (
    CooMatrix,
    CsrMatrix,
    DiaMatrix,
    DynamicMatrix,
    Format,
    MatrixShape,
    validate,
)
from .hpcg import (
    CgState,
    HpcgReport,
    ProblemSpec,
    RankSystem,
    build_problem,
    cg_solve,
    distributed_spmv,
    gather_global,
    halo_exchange,
    run_phases,
)
from .kernels import (
    KernelRegistry,
    KernelVersion,
    default_registry,
    dispatch,
    spmv_coo_plain,
    spmv_coo_vla,
    spmv_csr_plain,
    spmv_csr_vla,
    spmv_dia_plain,
    spmv_dia_vla,
)
from .lanes import LaneConfig
from .matrixio import (
    CorpusEntry,
    gen_banded,
    gen_random_sparse,
    gen_stencil27,
    load_entry,
    load_manifest,
    read_matrix_market,
    write_matrix_market,
)

__version__ = "0.1.0"
