"""Scalar-projection signal-to-distortion ratio."""

import csv
import math
from dataclasses import dataclass

import numpy as np

SDR_CAP_DB = 100.0
METRIC_HEADER = ("file", "method", "snr_db", "sdr_in", "sdr_out", "delta_sdr")


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class SdrReport:
    sdr_db: float
    ref_len: int
    est_len: int


def sdr(reference, estimate):
    """SDR of ``estimate`` against ``reference`` after projecting onto it.

    The estimate is truncated or zero-padded to the reference length; the
    result is clamped to +/-100 dB.
    """
    if reference.sample_rate != estimate.sample_rate:
        raise MetricError("reference and estimate sample rates differ")
    ref = reference.samples
    est = estimate.samples
    n = ref.shape[0]
    if est.shape[0] >= n:
        est = est[:n]
    else:
        est = np.concatenate([est, np.zeros(n - est.shape[0])])
    ref_energy = float(ref @ ref)
    if ref_energy == 0.0:
        raise MetricError("reference signal is all zeros")
    target = (float(est @ ref) / ref_energy) * ref
    distortion = est - target
    t_energy = float(target @ target)
    d_energy = float(distortion @ distortion)
    if t_energy == 0.0:
        value = -SDR_CAP_DB
    elif d_energy == 0.0:
        value = SDR_CAP_DB
    else:
        value = min(max(10.0 * math.log10(t_energy / d_energy), -SDR_CAP_DB), SDR_CAP_DB)
    return SdrReport(value, n, estimate.samples.shape[0])


def write_metric_table(path, rows, append=False):
    """Write rows of ``file,method,snr_db,sdr_in,sdr_out,delta_sdr``."""
    mode = "a" if append else "w"
    with open(path, mode, newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if not append or fh.tell() == 0:
            writer.writerow(METRIC_HEADER)
        for r in rows:
            writer.writerow(format_metric_row(*r))


def format_metric_row(file, method, snr_db, sdr_in, sdr_out):
    def f(v):
        return "" if v is None else f"{v:.4f}"
    delta = None if sdr_in is None or sdr_out is None else sdr_out - sdr_in
    return [file, method, f(snr_db), f(sdr_in), f(sdr_out), f(delta)]
