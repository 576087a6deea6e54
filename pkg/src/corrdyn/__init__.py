"""Numerical laboratory for hierarchies of quantum correlation operators."""

__version__ = "0.1.0"

from .cumulants import (
    CorrelationSequence,
    cumulant_clustered,
    cumulant_plain,
    nested_cumulant,
    nonlinear_cumulant,
    nonlinear_group_apply,
    reduced_cumulant,
)
from .dynamics import ModelSpec, default_model, group_apply, partition_group_apply
from .functionals import InitialCorrelations, correlation_functional, scattering_cumulant
from .hierarchy import (
    SeriesConfig,
    SeriesResult,
    bbgky_residual,
    marginal_series_cumulant,
    vn_hierarchy_residual,
    von_neumann_solve,
)
from .kinetics import (
    generalized_kinetic_integrate,
    hartree_evolve,
    iterated_series_g1,
    limit_correlations,
    vlasov_correlated_integrate,
    vlasov_integrate,
)
from .meanfield import chaos_decay_check, meanfield_sweep, term_scaling_check
from .operators import DomainError, LabeledOperator, ResourceError, partial_trace, trace_norm
