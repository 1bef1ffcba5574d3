"""Multicomponent optical-lattice band structures: layered Dirac cones,
flavour mixing with CP violation, and engineered power-law dispersions.
"""

from .errors import ConelabError, ContractError, ValidationError
from .lattice import (
    BlochModel,
    RhoVector,
    analytic_spectrum,
    bloch_hamiltonian,
    bloch_vector,
    double_layer_eps,
    hopping_pair,
    rho4_from_angles,
    su2_rho,
)
from .linalg import Spectrum, eigh, eigh_batch, eigvalsh, eigvalsh_batch
from .mixing import (
    FLAVOURS,
    MixingSpec,
    PmnsParams,
    flavour_hamiltonian,
    m_matrix,
    mass_basis_hamiltonian,
    pmns_matrix,
)
from .oscillation import (
    K_POINT,
    OscillationTrace,
    WavePacketState,
    anisotropic_energies,
    continuum_probability,
    direction_sweep,
    delta_sweep,
    evolve,
    prepare_flavour_state,
    t_asymmetry,
)
from .dispersion import DispersionFit, LadderMixModel, fit_dispersion_exponent, ladder_hamiltonian
from .topology import (
    BandGrid,
    DiracPointReport,
    DiracPointSearch,
    band_gap,
    berry_phase_loop,
    chiral_winding,
    dirac_points_analytic,
    fermi_velocities,
    find_band_touchings,
    sample_bands,
)
from .scenario import Scenario, parse_scenario

__version__ = "0.1.0"
