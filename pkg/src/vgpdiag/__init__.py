"""Sign-problem diagnostics for spin-1/2 Hamiltonians written as sums of Pauli strings."""
from .diagnostics import diagnose, f_eta, f_stoq, f_vgp
from .pauli import PauliSum, PauliTerm, parse_hamiltonian, serialize_hamiltonian, to_dense
from .pmr import PMRForm, pmr_decompose

__version__ = "0.1.0"
__all__ = ["PauliSum", "PauliTerm", "PMRForm", "diagnose", "f_eta", "f_stoq", "f_vgp",
           "parse_hamiltonian", "pmr_decompose", "serialize_hamiltonian", "to_dense"]
