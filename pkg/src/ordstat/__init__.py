"""Order-statistic count models: discrete parents, order-statistic
distributions, exact conditional augmentation, Gibbs building blocks,
end-to-end models, and validation tools."""

from .parents import (
    NegBinParent,
    ParentDistribution,
    PoissonParent,
    SupportRegion,
    negbin_cdf,
    poisson_cdf,
    sample_truncated,
)
from .orderstats import (
    DispersionEstimate,
    OrderSpec,
    OrderStatDistribution,
    estimate_dispersion,
    os_cdf,
    os_pmf,
    os_sample,
)
from .augment import (
    AugmentedDraw,
    Category,
    SufficientStats,
    brute_force_conditional,
    category_probs,
    prob_os_equals_y,
    sample_conditional,
)
from .special_fn import (
    gaussian_orderstat_variance,
    log_binom,
    reg_inc_beta,
    reg_upper_inc_gamma,
)

__version__ = "0.1.0"
