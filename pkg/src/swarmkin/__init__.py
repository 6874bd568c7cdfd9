"""Pairwise swarm consensus dynamics on the circle.

Monte Carlo simulation of midpoint-collision and leader-following particle
dynamics, with analytic, kinetic-hierarchy and master-equation oracles for
their equilibrium correlation structure.
"""

__version__ = "0.1.0"

from .histograms import (Histogram1D, Histogram2D, circular_std, compare,
                         pair_difference_profile)
from .oracle import (CorrelationParams, FourierMarginal, chaos_deficiency,
                     eval_marginal, m_density, m_fourier, marginal_recursion)
from .particles import (BIASED_BDG, CL, UNBIASED_BDG, DynamicsConfig,
                        EnsembleState, MacroObservables, bdg_step,
                        biased_bdg_step, cl_step, ensemble_marginals,
                        macro_observables, run_to_equilibrium,
                        sample_ordered_pair, sample_unordered_pair)
from .torus import (BiasModel, NoiseModel, acceptance_probability,
                    half_angle_offset, pair_midpoint,
                    sample_wrapped_gaussian, wrap, wrapped_gaussian_density)

__all__ = [
    "BIASED_BDG", "BiasModel", "CL", "CorrelationParams", "DynamicsConfig",
    "EnsembleState", "FourierMarginal", "Histogram1D", "Histogram2D",
    "MacroObservables", "NoiseModel", "UNBIASED_BDG",
    "acceptance_probability", "bdg_step", "biased_bdg_step",
    "chaos_deficiency", "circular_std", "cl_step", "compare",
    "ensemble_marginals", "eval_marginal", "half_angle_offset", "m_density",
    "m_fourier", "macro_observables", "marginal_recursion",
    "pair_difference_profile", "pair_midpoint", "run_to_equilibrium",
    "sample_ordered_pair", "sample_unordered_pair", "sample_wrapped_gaussian",
    "wrap", "wrapped_gaussian_density",
]
