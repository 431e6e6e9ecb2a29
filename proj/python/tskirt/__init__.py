"""Temporal, structured-knowledge item response models.

The heavy lifting happens in the compiled ``_tskirt`` extension; this module
re-exports it and adds a couple of conveniences.
"""

from ._tskirt import (
    ConceptGraph,
    DataError,
    Dataset,
    GraphError,
    ItemBank,
    ItemParams,
    ModelVariant,
    auc,
    calibrate,
    effective_discrimination,
    evaluate,
    gaussian_probit_integral,
    log_probit,
    preprocess,
    prior_precision,
    probit,
    response_probability,
    run_cli,
    simulate,
    sweep,
)

__version__ = "0.1.0"

__all__ = [
    "ConceptGraph",
    "DataError",
    "Dataset",
    "GraphError",
    "ItemBank",
    "ItemParams",
    "ModelVariant",
    "auc",
    "calibrate",
    "effective_discrimination",
    "evaluate",
    "gaussian_probit_integral",
    "log_probit",
    "main",
    "preprocess",
    "prior_precision",
    "probit",
    "response_probability",
    "run_cli",
    "simulate",
    "sweep",
]


def main(argv=None):
    """Entry point mirroring the ``tskirt`` executable."""
    import sys

    code, out, err = run_cli(list(sys.argv[1:] if argv is None else argv))
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code
