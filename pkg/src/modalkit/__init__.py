"""Modal decompositions of space-time data.

Every decomposition is a factorisation ``D = Phi Sigma Psi^T`` of an
``n_s x n_t`` snapshot matrix, completed from one chosen basis.
"""
from .basis import (BasisMatrix, Projector, autoencoder, delta_basis, fourier_basis, project,
                    project_columns, project_rows, transform_2d, vandermonde_basis)
from .datamatrix import (DataMatrix, EnergyReport, GridMeta, convergence_curve, energy_report,
                         flatten, pod_convergence, remove_mean, total_energy, unflatten)
from .decomp import (delta_decomposition, dft_decomposition, dmd, dmd_eigenvalues, pod,
                     pod_eigensystem)
from .estimators import DFT, DMD, MPOD, POD, Delta
from .exceptions import (ConjugatePairingError, DegenerateInputError, DomainError,
                         NonUniquenessWarning, NumericalConsistencyError, RankDeficiencyWarning,
                         ShapeError, ValidityWarning)
from .factorize import Decomposition, complete_from_phi, complete_from_psi, reconstruct
from .filtering import (CirculantOperator, FirKernel, circulant, cross_spectral_density,
                        design_fir, diagonalize_circulant, filter_correlation, filter_rows,
                        fourier_permutation)
from .mpod import FrequencySplitting, MpodResult, ScaleBank, build_scale_bank, mpod, scale_energies
from .synthdata import (PlantedMode, PoiseuilleParams, planted_modes, poiseuille_amplitude,
                        poiseuille_dataset, poiseuille_modes, two_forcing_dataset)

__version__ = "0.1.0"
