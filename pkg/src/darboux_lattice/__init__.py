"""Reflectionless and invisible tight-binding lattices from Darboux steps."""
from .darboux import (LevelSpec, SeedKind, SeedSolution, add_level_pair, build_seed,
                      darboux_step, factorize, family_hops, family_levels,
                      iterate_family, iterate_family_mp, iterate_vs_closed_form,
                      partner_bound_state, synthesize_family)
from .dynamics import WavepacketSpec, distortion, evolve, time_of_flight
from .extended import scatter_family_dd, transfer_scatter_dd
from .errors import (LatticeToolError, NumericalError, ParameterError)
from .lattice import Lattice, apply_hamiltonian, defect_window, spectrum
from .scattering import (group_delay, scatter_analytic, scatter_numeric,
                         transmission_phase)
from .waveguide import (effective_gamma, realize_lattice, solve_modulation,
                        verify_averaging)

__version__ = "0.1.0"
