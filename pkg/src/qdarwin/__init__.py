"""Redundancy of records in pure-decoherence models and the typical quantum Chernoff information."""

__version__ = "0.1.0"

from .chernoff import (
    chernoff_overlap,
    chernoff_report,
    empirical_error_exponent,
    min_chernoff_overlap,
    redundancy_estimate,
    typical_chernoff_information,
)
from .errors import InputError, QDarwinError, ResourceError, UnsupportedPathError
from .metrics import (
    FragmentSampler,
    fano_lower_bound,
    fidelity_upper_bound,
    fragment_average,
    helstrom_error,
    holevo,
    holevo_dense,
    holevo_pure_branches,
    information_report,
    mutual_information,
    pe_star_bound,
    redundancy,
)
from .model import (
    DecoherenceModel,
    Fragment,
    PointerSpec,
    SubsystemSpec,
    branch_ensemble,
    iid_qubit_model,
    validate_model,
)
