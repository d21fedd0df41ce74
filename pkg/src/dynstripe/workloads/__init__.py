"""Trace generators for the IOR, netflow and scan/random-read workloads."""

from .ior import IorSpec, gen_ior
from .netflow import ASYNC, SYNC, NetflowSpec, gen_netflow_data, gen_netflow_trace
from .presets import Experiment, experiment_presets
from .scan import ScanRandomSpec, gen_scan_random

__all__ = ["ASYNC", "SYNC", "IorSpec", "gen_ior", "NetflowSpec", "gen_netflow_data", "gen_netflow_trace",
           "ScanRandomSpec", "gen_scan_random", "Experiment", "experiment_presets"]
