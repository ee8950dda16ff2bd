"""
From a counting formula to bundled DFA guards
=============================================

A counting atom ``[p, m]`` reads "at least m agents carry p". The formula is
compiled into a DFA over atom truth values, and every DFA guard is expanded
into per-agent cubes through a BDD.
"""

from cltl_synth import compile_dfa, cube_count_report, guard_cubes, parse
from cltl_synth.cltl import Atom, CountingProp
from cltl_synth.guards import extract_cubes, guard_to_bdd

props = ("p1", "p2")

# "nobody crowds p1 (two or more agents) until someone reaches p2", for 4 agents;
# N/2 and N/3 are rounded down
formula = parse("(! [p1, N/2]) U [p2, N/3]", props, n_agents=4)
print("formula:", formula)

dfa = compile_dfa(formula)
print(dfa.to_text())

# each guard becomes a disjoint set of per-agent cubes
for row, cubes in zip(cube_count_report(dfa, 4, props), guard_cubes(dfa, 4, props)):
    print(f"{row['source']} -> {row['target']}: {row['cubes']} cubes cover {row['letters']} joint letters")
    for c in cubes[:3]:
        print("    ", c.format(props))

# "at least one of six agents carries p" holds on 2**6 - 1 joint letters,
# yet the BDD needs only six cubes to list them
b = guard_to_bdd(Atom(CountingProp("p", 1)), 6, ("p",))
print("\n[p,1] at N=6:", b.satcount(), "letters in", len(extract_cubes(b)), "cubes")
