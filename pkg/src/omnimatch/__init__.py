"""Seeded multiple-graph matching via joint spectral embedding."""

from .assign import (
    CostMatrix,
    MatchResult,
    OmniMatchResult,
    SoftMatch,
    cost_matrix,
    mlap_cost,
    omnimatch,
    rematch,
    soft_match,
    solve_lap,
)
from .core import (
    DegenerateInputError,
    Graph,
    NumericFailure,
    PermutationMap,
    SeedSplit,
    UndefinedResultError,
    apply_shuffle,
    compose,
    induced_seed_subgraph,
)
from .models import (
    LatentPositions,
    ModelConfig,
    perturb_latents,
    random_shuffle,
    sample_dirichlet_latents,
    sample_jrdpg,
    sample_rdpg,
)
from .oos import oos_embed, oos_embed_all
from .omni import OmnibusMatrix, build_omnibus, omni_embed
from .spectral import EmbeddingMatrix, Spectrum, ase, eig_symmetric, procrustes, select_dimension

__version__ = "0.1.0"
