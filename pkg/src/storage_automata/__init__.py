"""Weighted automata with data storage, storage approximation and coarse-to-fine n-best parsing."""

from .approx import (
    ApproximationStrategy,
    approximate_automaton,
    approximate_storage,
    compose,
    identity,
    make_bd_k,
    make_cf,
    make_count_abstraction,
    make_eo,
    make_eo_on,
    make_incomp_k,
    make_merge,
    make_top,
    make_top_k,
    make_uniq,
    parse_chain,
    parse_strategy,
)
from .automaton import (
    Automaton,
    MachineConfiguration,
    Run,
    RunBudget,
    Transition,
    WeightedAutomaton,
    language,
    make_automaton,
    recognizes,
    runs_on,
    step,
    validate,
    weight_of_word,
    weighted,
    word_weights,
)
from .fileformat import FormatError, load_automaton, load_example, save_automaton
from .parse import (
    BestFirstRuns,
    SearchLimits,
    coarse_to_fine_nbest,
    enumerate_runs_best_first,
    exhaustive_nbest,
    is_run,
    preimage_sequences,
)
from .semiring import BOOLEAN, COUNTING, TROPICAL, Semiring, counting, get_semiring, product_seq, sum_finite
from .storage import (
    DataStorage,
    TreeStack,
    apply_instruction,
    branching_bound,
    check_predicate,
    count_storage,
    pushdown_storage,
    tree_stack_storage,
)
from .transform import FsaAutomaton, determinize_bounded, determinize_powerset, predicate_free, to_fsa

__version__ = "0.1.0"
