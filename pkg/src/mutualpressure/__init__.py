"""Pressure, entropy, and permutation-micro-state mutual pressure.

A numerical library and CLI for computing pressure and Gibbs measures on
finite product spaces and on [-R,R]^n, the mutual pressure of a potential
with respect to fixed marginals (exact at finite N, by Monte Carlo, and in
the limit via its entropic dual), and for verifying the duality identities
that tie these quantities to Shannon entropy and mutual information.
"""

from .measures import (
    Alphabet,
    JointPmf,
    Pmf,
    marginals,
    mutual_information,
    product_measure,
    relative_entropy,
    shannon_entropy,
)
from .pressure import (
    PotentialTensor,
    gibbs_measure,
    marginal_potential,
    pressure,
    variational_gap,
)
from .microstates import (
    ContingencyTensor,
    EnumerationBudgetExceeded,
    MutualPressureEstimate,
    SortedSample,
    TypeCounts,
    approximating_sample,
    brute_force_value,
    coset_log_count,
    enumerate_contingency,
    finite_n_value,
    kappa,
    mc_value,
)
from .dual import (
    DualityReport,
    SinkhornNonConvergence,
    duality_report,
    equilibrium_check,
    i_sym,
    mutual_pressure_limit,
    sinkhorn_coupling,
    verify_legendre,
)
from .continuous import (
    ContinuousPotential,
    MarginalSpec,
    QuadratureGrid,
    QuantileSample,
    catalog_potential,
    continuous_duality_check,
    continuous_marginal_potential,
    continuous_mutual_pressure,
    discretize,
    embed_discrete,
    expression_potential,
    mc_value_continuous,
    quadrature_pressure,
    quantile_sample,
)
from .sanov import TypicalSetSpec, ldp_rate, lemma31_check, typical_set_log_prob

__version__ = "0.1.0"
