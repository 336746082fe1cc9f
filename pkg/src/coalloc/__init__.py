"""Shapley allocation of portfolio variance, standard deviation and mean-variance utility."""

from coalloc._backend import NAME as BACKEND
from coalloc.dataio import ReturnsMatrix, load_covariance, load_mean, load_returns, sample_moments
from coalloc.games import (
    GuardError,
    PermutationSampleConfig,
    TabularGame,
    additive_game,
    coalition,
    find_dummies,
    fuse,
    in_anticore,
    in_core,
    is_submodular,
    is_supermodular,
    members,
    satisfies_fusion_property,
    shapley_exact,
    shapley_permutations,
    shapley_sampled,
    symmetric_pairs,
)
from coalloc.majorization import (
    ConjectureReport,
    majorizes,
    n2_margin,
    normalized_allocations,
    sample_sorted_sphere,
    verify_conjecture_diagonal,
    verify_conjecture_general,
)
from coalloc.variance import (
    CovarianceMatrix,
    DecomposedGame,
    UtilityParams,
    decompose_variance_game,
    decomposed_shapley,
    sd_game,
    sd_shapley,
    utility_allocation,
    utility_game,
    variance_game,
    variance_shapley,
)

__version__ = "0.1.0"
