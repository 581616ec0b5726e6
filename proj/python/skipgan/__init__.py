"""Skip-logic-aware conditional tabular GAN with a synthetic-data evaluation harness.

Tables are numeric arrays: categorical cells hold category indices (BLANK is
the last category of an omissible feature), continuous cells hold values.
"""

from ._core import (
    Error,
    FormatError,
    Model,
    NumericError,
    ParseError,
    Population,
    Schema,
    SchemaMismatchError,
    Table,
    ValidationError,
    ablate,
    auroc,
    benchmark,
    classifier_names,
    conflict,
    evaluate,
    load_model,
    read_table,
    restrict,
    simulate,
    split,
    table_from_csv,
    table_to_csv,
    train,
    validate_row,
)

__all__ = [
    "Error",
    "FormatError",
    "Model",
    "NumericError",
    "ParseError",
    "Population",
    "Schema",
    "SchemaMismatchError",
    "Table",
    "ValidationError",
    "ablate",
    "auroc",
    "benchmark",
    "classifier_names",
    "conflict",
    "evaluate",
    "load_model",
    "read_table",
    "restrict",
    "simulate",
    "split",
    "table_from_csv",
    "table_to_csv",
    "train",
    "validate_row",
]
