"""1D time-dependent Schrodinger equation demonstration of the protocol."""

from .calibrate import ReferencePacket, calibrate_barrier, max_stable_height, scattering_transmission
from .grid import (
    Grid1D,
    RegionPartition,
    Wavefunction1D,
    gaussian_ground_state,
    init_ground_state,
    region_probabilities,
)
from .leapfrog import FluxTrigger, advance, apply_hamiltonian, stability_limit, stagger, step
from .potential import Barrier, Composite, Flat, Harmonic, PotentialSchedule, Split, Stage, Tabulated
from .scenario import (
    CollapsePolicy,
    Scenario,
    ScenarioResult,
    build_protocol_scenario,
    load_scenario,
    reference_packet,
    run_scenario,
    scenario_from_dict,
    scenario_to_dict,
)
