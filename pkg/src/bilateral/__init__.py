"""Forward, backward and bilateral ergodic averages on concrete systems."""
from .averages import (AveragesTrace, averages_trace, classify_trace, cross_identity_check,
                       domination_run, oscillation_count, residual_identity_check)
from .combinatorics import (DeltaSet, WitnessPair, lemma1_exhaustive, lemma1_witness,
                            lemma2_trace, lemma4_exhaustive, lemma4_witness, passage_times)
from .dynsys import (BernoulliShift, CircleRotation, CyclicRotation, Odometer, ProductZmCircle,
                     make_system, orbit_window, sample_point, step)
from .errors import *  # noqa: F401,F403
from .fillscheme import (FillingResult, bilateral_sup, extract_coboundary, filling_sup_exact,
                         truncated_filling_sup, verify_filling_equation)
from .observables import (HeavyTail, RokhlinV, SmoothCircle, TableLookup, make_coboundary,
                          make_prop1_f, make_remarks_f, make_rokhlin_v)
from .recurrence import (CharacterTriple, KroneckerGroup, doubling_index, estimate_EN_a,
                         furstenberg_character, furstenberg_lhs, furstenberg_rhs)

__version__ = "0.1.0"
