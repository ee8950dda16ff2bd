"""
What sharing value vectors saves
================================

The flat witness tree stores one vector per (vertex, agent). The dual tree
stores each distinct vector once. Both compute the same bound; here we watch
the stored-vector counts diverge as agents are added, and emit the series as
CSV.
"""

import sys

from cltl_synth.experiments import RunConfig, rows_to_csv, sweep_agents

config = RunConfig(case="mu1", horizon=3, prune_product=1e-2, prune_single=1e-2)
rows = sweep_agents(config, [4, 5, 6], ["dual", "flat"])

for n in (4, 5, 6):
    dual, flat = (next(r for r in rows if r["agents"] == n and r["method"] == m) for m in ("dual", "flat"))
    print(f"N={n}: |Z|={dual['vertices']}, dual stores {dual['single_vertices']} vectors, "
          f"flat stores {flat['single_vertices']}; bounds {dual['bound']:.6f} / {flat['bound']:.6f}")

sys.stdout.write("\n" + rows_to_csv(rows))
