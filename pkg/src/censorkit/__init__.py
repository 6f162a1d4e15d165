"""Optimal disclosure censors, silence-decay valuations and Monte Carlo checks
for geometric-Brownian observation models with Poisson private arrivals."""

from .params import (DerivedParams, IntensityTable, ModelSpec, SpecError, TildeParams,
                     common_sized, derive, load_spec, single_agent, spec_from_dict, symmetric,
                     tilde_at)
from .mathkit import (CutoffSolution, at_the_money, hemi_mean, lpm_quadrature, mu_factor,
                      normal_cdf, solve_cutoff)
from .paths import PathBundle, TimeGrid, sample_arrivals, simulate_paths
from .regression import RegressionLaw, conditional_mean, law_at, terminal_valuation
from .censor_single import (SingleSchedule, censor_schedule, decay_intensity, decay_segment,
                            reinitialize, rk4_decay)
from .censor_multi import (MultiSchedule, aggregate_cutoffs, aggregated_intensity,
                           hypothetical_cutoff, multi_reinitialize, multi_valuation,
                           partial_covariances)
from .market import (DisclosureEvent, ValuationTrack, martingale_report, run_disclosure_game,
                     simulate_game)

__version__ = "0.1.0"
