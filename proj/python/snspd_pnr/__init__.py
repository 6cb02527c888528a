"""Photon-number discrimination for superconducting nanowire detector pulses."""

import json as _json

from . import _core
from ._core import (
    DegenerateData,
    EmptyResult,
    FilterPolicy,
    FitFailure,
    InsufficientData,
    NoCrossing,
    ParseError,
    PnrError,
    SaturationError,
    ShiftSchedule,
    SyntheticConfig,
    calibrate_nbar,
    choose_component_count,
    classify,
    confidence,
    expected_count_rate,
    extract_edges,
    fit_pca,
    generate_synthetic,
    poisson_pmf,
    quantize_time,
    read_waveform_file,
    write_waveform_file,
)

__version__ = "0.1.0"


def filter_traces(samples, sample_period, policy=None, t0=0.0):
    """Accepted, windowed, baseline-subtracted traces, their row ids and the filter report."""
    kept, ids, report = _core.filter_traces(samples, sample_period, policy or FilterPolicy(), t0)
    return kept, ids, _json.loads(report)


def fit_mixture(values, K, n_min=1, bins=None):
    return _json.loads(_core.fit_mixture(values, K, n_min, bins))


def find_optimal_angle(w1, w2, K, n_min=1, coarse_step=0.5):
    return _json.loads(_core.find_optimal_angle(w1, w2, K, n_min, coarse_step))


def run_synthetic(configs, count, training_per_group=1000, coarse_step=0.5, edge_path=True):
    """Run report (dict) for synthetic groups, one per config."""
    return _json.loads(_core.run_synthetic(list(configs), count, training_per_group, coarse_step, edge_path))
