"""Thermodynamic formalism on subshifts of finite type and conformal IFS models.

The package estimates topological pressure of additive and sub/superadditive
potential sequences by several independent methods, optimizes free energy over
Markov measures, builds first-return horseshoes with variable return times,
and solves Bowen's equation for Hausdorff dimensions of conformal Cantor sets.
"""

from .errors import (CapExceededError, EmptyBranchSetError,
                     ReducibleSystemError, RootBracketError,
                     SingularMatrixError, SpecFileError, ThermoshiftError)
from .geometry import (BowenRoot, BoxDimensionEstimate, ConformalIFS,
                       IFSBranch, bowen_root, box_dimension,
                       dimension_lower_bound, ifs_dimension, moran_root,
                       unstable_potential)
from .potentials import (KingmanRate, MatrixCocycle, Potential,
                         PotentialSequence, TemperedVariationProfile,
                         additive_sequence, birkhoff_sum,
                         cocycle_norm_sequence, constant_potential,
                         kingman_rate_integral, random_potential,
                         tempered_variation_profile, zero_sequence)
from .pressure import (PressureEstimate, caratheodory_pressure,
                       periodic_orbit_pressure, perron_pressure,
                       separated_pressure, sequence_pressure,
                       spanning_pressure)
from .symbolic import (Branch, BranchSystem, DEFAULT_ENUMERATION_CAP,
                       SubshiftOfFiniteType, Word, count_periodic,
                       count_words, enumerate_periodic, enumerate_words,
                       first_return_horseshoe, saturate_pressure,
                       transitive_subsystems)
from .variational import (BasicSetSupremum, HyperbolicGap, MarkovMeasure,
                          block_system, entropy_rate, equilibrium_measure,
                          free_energy, generic_branches, hyperbolic_gap,
                          integrate, max_mean_cycle, restrict_sequence,
                          spanning_free_energy, sup_over_basic_sets)

__version__ = "0.1.0"
