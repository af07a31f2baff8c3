__version__ = "0.1.0"

from .field import FieldTower, FieldElement, Transcendental, Algebraic, extend_tower, coerce, trdeg
from .structure import (ColouredStructure, delta, delta_rel, is_closed, closure, dim, in_CL,
    basis_and_core, check_class_membership)
from .extension import decompose, classify_minimal, free_amalgam, MinimalStepKind
from .generic import (new_state, realize_extension, insert_density_witnesses, embed_structure,
    check_axioms, back_and_forth_audit)
from .isomorphism import types_equal, fingerprint
from .scenarios import build_dprank_witness, build_nondistal_witness, window_indiscernible
from .manifest import parse_manifest, pretty_print
from .utils import start_logging

from . import field
from . import structure
from . import extension
from . import isomorphism
from . import generic
from . import scenarios
from . import manifest
from . import cache
from . import utils
