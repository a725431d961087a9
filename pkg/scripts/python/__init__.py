"""
Quasi-extremity toolkit for Drury-Arveson multipliers
"""

import sys
from pathlib import Path

_here = str(Path(__file__).resolve().parent)
if _here not in sys.path:
    sys.path.insert(0, _here)

from poly import Poly  # noqa: E402
from settings import Tolerances, load_settings  # noqa: E402
from linalg_utils import ContractivityError, InconclusiveError, QuasiExtremeError  # noqa: E402
from dbr import (  # noqa: E402
    INCONCLUSIVE,
    NOT_QUASI_EXTREME,
    QUASI_EXTREME,
    hb_norm_sq,
    kb_eval,
    make_context,
    membership_score,
    qe_verdict,
    sample_nodes,
)
from gleason import gleason_operators, solve_min_defect  # noqa: E402
from realization import construct_a, transfer_eval, transfer_taylor  # noqa: E402
from onevar import outer_a, szego_integral  # noqa: E402
from fock import FockCoeffs, free_operator_norm, shift_nonvanishing, symmetrize  # noqa: E402

__all__ = [
    'Poly',
    'Tolerances',
    'load_settings',
    'ContractivityError',
    'InconclusiveError',
    'QuasiExtremeError',
    'QUASI_EXTREME',
    'NOT_QUASI_EXTREME',
    'INCONCLUSIVE',
    'hb_norm_sq',
    'kb_eval',
    'make_context',
    'membership_score',
    'qe_verdict',
    'sample_nodes',
    'gleason_operators',
    'solve_min_defect',
    'construct_a',
    'transfer_eval',
    'transfer_taylor',
    'outer_a',
    'szego_integral',
    'FockCoeffs',
    'free_operator_norm',
    'shift_nonvanishing',
    'symmetrize',
]
