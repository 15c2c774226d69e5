"""Relative-entropy stability lab for scalar balance laws with a Hilbert source.

The most used entry points are re-exported here; the submodules hold the rest.
"""
from .calculus import (ConvexFlux, EntropyFluxPair, burgers_flux, burgers_pair,
                       exponential_flux, get_pair, quartic_entropy_pair, quartic_flux,
                       quartic_flux_pair, relative_entropy, relative_entropy_flux,
                       relative_flux, shock_speed, sigma_c1_check)
from .config import ScenarioConfig, dump_config, load_config, parse_config
from .dissipation import (ShockQuadruple, decompose_intervals, dissipation_direct,
                          dissipation_interval_form, estimate_negativity_constant,
                          lax_entropic_check, negativity_margin)
from .errors import (BHLabError, BlowUpError, ConfigurationError, DomainError, EscapeError,
                     GapViolationError, PreconditionError, QuadratureError, ResolutionError,
                     SingularityError)
from .filippov import characteristic_ladder, filippov_bracket_check, solve_characteristic
from .hilbert import SpectralGrid, apply_source, hilbert_source, hilbert_transform, zero_source
from .reference import AnalyticReference, CutoffPerturbation, FittedReference
from .solver import Field, SchemeConfig, evolve, read_checkpoint, step, write_checkpoint
from .stability import StabilityScenario, run_stability

__version__ = "0.1.0"
