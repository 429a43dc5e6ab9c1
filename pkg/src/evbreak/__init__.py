"""Change-point detection for the dependence structure of block maxima.

The package tests whether the Pickands dependence function of a
multivariate series of block maxima stays constant over time.  A rank-based
CUSUM statistic compares Pickands estimates before and after every
candidate split; a multiplier bootstrap calibrates its distribution without
re-ranking.  Known marginal change-points can be absorbed by break-adapted
ranks so that only dependence changes trigger rejections.

Typical use::

    from evbreak import run_test
    report = run_test(values, n_boot=1000, seed=1)
    print(report.p_value, report.k_hat)
"""

from .bootstrap import (
    BootstrapReport,
    MultiplierBootstrap,
    MultiplierSet,
    draw_multipliers,
    replicate_field,
    run_test,
    weight_terms,
)
from .copulas import (
    DgpScenario,
    GevParams,
    GumbelHougaardParams,
    KhoudrajiParams,
    MultivariateSample,
    NormalParams,
    Segment,
    copula_cdf,
    evc_cdf,
    generate_scenario,
    gev_cdf,
    gev_quantile,
    gumbel_vartheta_for_tau,
    kendall_tau_oracle,
    khoudraji_sample,
    pickands_gumbel,
    pickands_khoudraji,
    sample_copula,
    sample_gumbel,
    vartheta_matching_tau,
)
from .cusum import (
    CusumField,
    GridMeasure,
    cusum_field,
    default_measure,
    field_table,
    statistic_at,
    statistic_max,
)
from .errors import ConfigError, DataError, EvbreakError, NumericError
from .harness import (
    CellSpec,
    ExperimentConfig,
    ResultRow,
    ResultTable,
    TestSpec,
    dependence_break_cell,
    experiment_from_dict,
    iid_cell,
    load_experiment,
    margin_break_cell,
    run_experiment,
)
from .pickands import (
    PickandsEstimate,
    default_bandwidth,
    derivative_A,
    estimate_pickands,
    subsample_A,
    subsample_A_theta,
    subsample_S,
    subsample_S_theta,
)
from .ranks import BreakSpec, PseudoObsBlock, empirical_copula, pseudo_obs, pseudo_obs_breaks

__version__ = "0.1.0"
