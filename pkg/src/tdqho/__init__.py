"""Time-dependent quantum harmonic oscillator via the Ermakov equation."""

__version__ = "0.1.0"

from .protocols import (Constant, LinearSymmetric, NonlinearSymmetric, OscillatorParams,  # noqa: E402
                        Sampled, SuddenQuench, Tanh)
from .ermakov import equilibrium_ics, adiabatic_ics, integrate  # noqa: E402

__all__ = ["Constant", "LinearSymmetric", "NonlinearSymmetric", "OscillatorParams", "Sampled",
           "SuddenQuench", "Tanh", "adiabatic_ics", "equilibrium_ics", "integrate", "__version__"]
