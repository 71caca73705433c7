"""Seed-reproducible Monte Carlo experiments built on the engine."""
from .initial import InitialLaw, Bernoulli, Poisson, sample_initial
from .probes import ProbeEstimate, fixation_probe, activity_probe, wilson_interval
from .barrier import ExplorationRecord, BarrierState, run_barrier_algorithm
from .delta_a import DeltaASample, sample_delta_A_tilde, delta_A_convergence
from .trapezoid import TrapezoidGeometry, TrapezoidResult, choose_K, trapezoid_stabilize
from .phase import PhaseRow, PhaseTable, phase_sweep, detect_crossing

__all__ = [
    "InitialLaw", "Bernoulli", "Poisson", "sample_initial",
    "ProbeEstimate", "fixation_probe", "activity_probe", "wilson_interval",
    "ExplorationRecord", "BarrierState", "run_barrier_algorithm",
    "DeltaASample", "sample_delta_A_tilde", "delta_A_convergence",
    "TrapezoidGeometry", "TrapezoidResult", "choose_K", "trapezoid_stabilize",
    "PhaseRow", "PhaseTable", "phase_sweep", "detect_crossing",
]
