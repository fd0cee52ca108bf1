"""Numerical companion for entropy production in Kac's particle model.

Convolution powers of the square-law density, normalization functions on the
energy sphere, marginals of conditioned product states, their entropy and
entropy production, and a particle simulator of the master equation.
"""
from ._accel import backend
from .clt import FourierPlan, clt_certificate, conv_power, log_conv_power, measured_eps
from .densities import Delta, Density, char_fn, delta_schedule, f_delta, h_delta, sigma2
from .functionals import (PolarGrid, entropy, gamma_ratio, mc_numerator, paper_numerator_bound,
                          production_numerator, villani_scaling_check)
from .normalization import LogValue, log_Z, log_Z_ratio
from .sphere import importance_expectation, marginal_kernel, uniform_sphere_sample

__version__ = "0.1.0"

__all__ = [
    "Delta", "Density", "FourierPlan", "LogValue", "PolarGrid", "backend", "char_fn",
    "clt_certificate", "conv_power", "delta_schedule", "entropy", "f_delta", "gamma_ratio",
    "h_delta", "importance_expectation", "log_Z", "log_Z_ratio", "log_conv_power",
    "marginal_kernel", "mc_numerator", "measured_eps", "paper_numerator_bound",
    "production_numerator", "sigma2", "uniform_sphere_sample", "villani_scaling_check",
]
