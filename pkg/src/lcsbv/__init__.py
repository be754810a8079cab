"""Nematic and smectic liquid-crystal energies with free discontinuities.

Q-tensor algebra, energy densities, grid discretizations, jump sets,
orientability of line fields, constrained minimizers and scripted
experiments.
"""
from .errors import InvalidInputError, InvalidModelError, UnderResolvedError
from .grid import EnergyResult, Field, GridSpec, energy_and_gradient, total_energy
from .jumpset import JumpSet, SbvField, SbvProfile
from .minimize import (MinimizeOptions, MinimizeReport, minimize_director, minimize_field,
                       minimize_q, minimize_sbv_1d)
from .models import (EricksenModel, FrankModel, LdGModel, SmecticModel, UniaxialLift,
                     WAlphaModel)
from .orient import LineField, OrientReport, try_orient

__version__ = "0.1.0"
