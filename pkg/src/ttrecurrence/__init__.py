"""Quantitative recurrence for T,T^-1 skew products over subshifts of finite type."""

__version__ = "0.1.0"

from .cocycle import (Cocycle, CocycleError, birkhoff_sums, exact_walk_distribution, fourier_eigenvalue,  # noqa: E402
                      llt_check, make_cocycle, sigma2)
from .dynamics import (BallPairData, EventSeries, TTSystem, ball_pair_data, first_return,  # noqa: E402
                       first_returns, point_process, recurrence_rate, simulate_returns, tt_system,
                       z_extension_process, zeta_prefactor)
from .limit import (BrownianPath, LocalTimeField, ZParams, local_time, sample_brownian,  # noqa: E402
                    sample_first_return_limit, sample_Z)
from .moments import (ColoringMatrix, MCParams, MomentSpec, H_integral, enumerate_surjections, limit_moment,  # noqa: E402
                      poisson_integral_moment, poisson_moment, stirling2)
from .symbolic import (MarkovMeasure, MarkovShift, ball_generation, cylinder_measure, dimension,  # noqa: E402
                       full_shift, golden_mean_shift, load_shift, make_shift, markov_measure, parry_measure,
                       sample_path)
