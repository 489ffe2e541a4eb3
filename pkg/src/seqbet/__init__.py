"""Exact sequence-set betting on Cantor space.

Clopen-set algebra, betting strategies and their equivalent forms, and a
construction of two strategies that split the work of doubling capital on a
small enumerated set of cylinders.
"""

from .betting import (CapitalTrajectory, MartingaleProcessTable, NonmonotonicStrategy,
                      SequenceOracle, StrategyTable, ValidationReport, capital,
                      play, play_nonmonotonic, validate_strategy)
from .construction import (ConstructionTrace, Limits, NodeRecord, init_instance,
                           instance_params, run_construction)
from .core import (ClopenSet, Rational, common_granularity, difference, format_rational,
                   intersect, measure, parse_rational, refine, union)
from .equivalences import (MLTestLevels, StepBudget, mltest_from_strategy, mp_to_strategy,
                           nm_to_seqset, seqset_to_nm, strategy_to_mp)
from .errors import (BudgetError, InputError, InsufficiencyError, InternalError,
                     LimitError, OracleError, RefinementError, SeqBetError)
from .verify import CheckReport, PrefixFreeSelection, run_all

__version__ = "0.1.0"
