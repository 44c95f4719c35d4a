"""Finite element Poisson benchmarks analysed with Time-Accuracy-Size metrics."""

__version__ = "0.1.0"

from .exceptions import (
    CapabilityError,
    DomainError,
    InvalidResolutionError,
    NotSPDError,
    RecordParseError,
    RecordValidationError,
    SchemaVersionError,
    TasError,
)
from .meshgen import Mesh, refine_uniform, unit_cube, unit_square
from .fem import FunctionSpace, MmsCase, assemble, build_space, mms_case
from .linsolve import SolveReport, pcg
from .errnorm import doa, dos, l2_error
from .tascore import (
    BenchmarkRecord,
    ModelParams,
    TasSeries,
    derive_series,
    doe,
    group_records,
    model_curves,
    model_records,
)
from .records import RecordFile, read_records, write_records
from .report import DiagramSpec, render_svg, render_table

__all__ = [
    "BenchmarkRecord", "CapabilityError", "DiagramSpec", "DomainError", "FunctionSpace",
    "InvalidResolutionError", "Mesh", "MmsCase", "ModelParams", "NotSPDError", "RecordFile",
    "RecordParseError", "RecordValidationError", "SchemaVersionError", "SolveReport", "TasError",
    "TasSeries", "assemble", "build_space", "derive_series", "doa", "doe", "dos", "group_records",
    "l2_error", "mms_case", "model_curves", "model_records", "pcg", "read_records", "refine_uniform",
    "render_svg", "render_table", "unit_cube", "unit_square", "write_records",
]
