from ghostlab.constraints.verification import nonexistence_report
from ghostlab.core.field import ScalarAmplitudeField, SpectralField
from ghostlab.core.lattice import ModeSet, WaveVector
from ghostlab.dynamics.galerkin import GalerkinSpec, GalerkinSystem
from ghostlab.dynamics.ghost_check import Verdict, ghost_check
from ghostlab.dynamics.integrator import integrate
