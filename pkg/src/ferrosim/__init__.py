"""Device-level simulator and metrics toolkit for HZO/WOx ferroelectric FET synapses."""

from .domains import (
    DomainEnsemble,
    EnsembleConfig,
    Hysteron,
    apply_voltage,
    build_ensemble,
    polarization,
    run_waveform,
    set_wakeup,
)
from .electrostatics import DeviceStack, PhysConstants
from .traces import Trace, Waveform

__all__ = [
    "DeviceStack",
    "DomainEnsemble",
    "EnsembleConfig",
    "Hysteron",
    "PhysConstants",
    "Trace",
    "Waveform",
    "apply_voltage",
    "build_ensemble",
    "polarization",
    "run_waveform",
    "set_wakeup",
]

__version__ = "0.1.0"
