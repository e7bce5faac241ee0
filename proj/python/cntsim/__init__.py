"""Two-tube electron-phonon exact diagonalization.

Thin layer over the compiled core. Energies are in units of U; couplings are
the dimensionless ratios lambda, t/U, V/U and omega0/U.
"""

from ._core import (
    atomic_energy,
    atomic_ground_manifold,
    classify_phase,
    coupling_constant,
    critical_lambdas,
    effective_attraction,
    hamiltonian,
    mutual_information,
    negativity,
    phonon_number_estimate,
    reduced_density_matrix,
    solve_point,
    von_neumann_entropy,
)
from ._core import main as _main

__all__ = [
    "atomic_energy",
    "atomic_ground_manifold",
    "classify_phase",
    "coupling_constant",
    "critical_lambdas",
    "effective_attraction",
    "hamiltonian",
    "mutual_information",
    "negativity",
    "phonon_number_estimate",
    "reduced_density_matrix",
    "run_cli",
    "solve_point",
    "von_neumann_entropy",
]


def run_cli(args):
    """Run the command line with ``args``; returns (exit code, stdout, stderr)."""
    return _main([str(a) for a in args])
