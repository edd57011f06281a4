"""Moment expansions of E phi(U_x) for convolution families."""

from .exactmath import RatPoly, RatSeries, series_exp, series_log
from .expansion import CollectedSeries, Expansion, build_expansion, collect_powers, evaluate, render
from .families import (
    FamilySpec,
    binomial,
    bkn_poisson,
    central_moments,
    ckn_table,
    custom_iid,
    family_mean_index,
    g_series,
    gamma,
    negbinomial,
    poisson,
)
from .oracle import digamma_reference, expect, expect_binomial, expect_gamma, expect_negbinomial, expect_poisson
from .phicat import PhiSpec, log, power, xlogx
from .verify import coefficient_check, decay_slope, error_table

__version__ = "0.1.0"
