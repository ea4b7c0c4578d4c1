"""Adaptive trust-region and line-search methods under corrupted oracles,
with the machinery to check their high-probability complexity bounds."""

from .engine import IterationRecord, RunTrace, classify_iteration, run
from .oracles import (
    CzoSpec,
    OracleSample,
    OracleSuite,
    SfoSpec,
    SzoSpec,
    czo_sample,
    minibatch_clean_prob,
    sfo_sample,
    szo_sample,
)
from .problems import ProblemInstance, grad_norm, make_problem
from .theory import MethodParams, TheoryReport, build_report

__version__ = "0.1.0"

__all__ = [
    "CzoSpec",
    "IterationRecord",
    "MethodParams",
    "OracleSample",
    "OracleSuite",
    "ProblemInstance",
    "RunTrace",
    "SfoSpec",
    "SzoSpec",
    "TheoryReport",
    "build_report",
    "classify_iteration",
    "czo_sample",
    "grad_norm",
    "make_problem",
    "minibatch_clean_prob",
    "run",
    "sfo_sample",
    "szo_sample",
]
