"""Free-evolution conditional rotation on an NV electron / 13C register."""

from .dsl import ParseDiagnostic, ParseError, Program, parse, serialize
from .engine import (
    CleanupU,
    CleanupV,
    Delay,
    Laser,
    Measure,
    MwPulse,
    PhysicsInvariantError,
    Sequence,
    SimOptions,
    SwapEN,
    U180e,
    element_propagator,
    fluorescence,
    init_optical,
    laser_channel,
    propagate,
    sweep_delay,
)
from .linalg import eig_hermitian, expm_unitary, kron, partial_trace_electron, state_fidelity
from .model import (
    PhysicalParams,
    evolution_period,
    interaction_frame_hamiltonian,
    lab_hamiltonian,
    load_params,
    min_gate_time,
    resonance_defect,
    subspace_hamiltonian,
    u_cr,
)
from .results import SweepResult

__version__ = "0.1.0"

__all__ = [
    "ParseDiagnostic",
    "ParseError",
    "Program",
    "parse",
    "serialize",
    "CleanupU",
    "CleanupV",
    "Delay",
    "Laser",
    "Measure",
    "MwPulse",
    "PhysicsInvariantError",
    "Sequence",
    "SimOptions",
    "SwapEN",
    "U180e",
    "element_propagator",
    "fluorescence",
    "init_optical",
    "laser_channel",
    "propagate",
    "sweep_delay",
    "eig_hermitian",
    "expm_unitary",
    "kron",
    "partial_trace_electron",
    "state_fidelity",
    "PhysicalParams",
    "evolution_period",
    "interaction_frame_hamiltonian",
    "lab_hamiltonian",
    "load_params",
    "min_gate_time",
    "resonance_defect",
    "subspace_hamiltonian",
    "u_cr",
    "SweepResult",
]
