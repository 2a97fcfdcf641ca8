"""Quantum phase transition detection in spin chains via residual entanglement.

Exact diagonalization of small periodic chains plus a free-fermion engine for
the XY chain with multi-site interactions; both feed the same two-site
detectors (concurrence, EOF, von Neumann entropies, quantum discord) and the
residual multipartite entanglement tau_SEF.
"""

from qptdetect.errors import (
    ConvergenceError,
    InsufficientDataError,
    InvalidModelError,
    NumericalIntegrityError,
    QptError,
    UnsupportedSectorError,
)
from qptdetect.hilbert import BasisMap, ModelSpec, SparseHamiltonian, apply, build_hamiltonian
from qptdetect.eigensolver import GroundState, ground_state, low_spectrum
from qptdetect.rdm import Rdm1, Rdm2, rdm1, rdm2
from qptdetect.measures import (
    DiscordConfig,
    TauConfig,
    concurrence,
    eof,
    one_vs_rest,
    quantum_discord,
    tau_sef,
    vn_entropy,
)

__version__ = "0.1.0"

__all__ = [
    "BasisMap",
    "ConvergenceError",
    "DiscordConfig",
    "GroundState",
    "InsufficientDataError",
    "InvalidModelError",
    "ModelSpec",
    "NumericalIntegrityError",
    "QptError",
    "Rdm1",
    "Rdm2",
    "SparseHamiltonian",
    "TauConfig",
    "UnsupportedSectorError",
    "apply",
    "build_hamiltonian",
    "concurrence",
    "eof",
    "ground_state",
    "low_spectrum",
    "one_vs_rest",
    "quantum_discord",
    "rdm1",
    "rdm2",
    "tau_sef",
    "vn_entropy",
]
