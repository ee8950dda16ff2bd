"""Controller synthesis for homogeneous stochastic multi-agent systems under
co-safe counting LTL, using dual-tree value iteration over rank-1 witness
probabilities."""

__version__ = "0.1.0"

from .cltl import CountingProp, parse, eval_trace, eval_counting_prop
from .automaton import Dfa, compile_dfa, run, letter_to_assignment
from .guards import AgentCube, guard_to_bdd, extract_cubes, guard_cubes, cube_count_report
from .model import SingleAgentMdp, abstract_1d_gaussian, joint_label
from .dualtree import DualTree, single_agent_operator, run_tree
from .policy import DecoupledStrategy, initial_strategy, optimize_policies
from .oracle import monolithic_evaluate, monte_carlo, flat_witness_tree_run

__all__ = [
    "CountingProp", "parse", "eval_trace", "eval_counting_prop",
    "Dfa", "compile_dfa", "run", "letter_to_assignment",
    "AgentCube", "guard_to_bdd", "extract_cubes", "guard_cubes", "cube_count_report",
    "SingleAgentMdp", "abstract_1d_gaussian", "joint_label",
    "DualTree", "single_agent_operator", "run_tree",
    "DecoupledStrategy", "initial_strategy", "optimize_policies",
    "monolithic_evaluate", "monte_carlo", "flat_witness_tree_run",
]
