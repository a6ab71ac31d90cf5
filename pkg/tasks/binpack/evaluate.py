"""Score a priority function by the resources it strands on the fixture workload."""

import json
import runpy
import sys

from codevolve.bench_math.binpack import fixture_workload, simulate_binpack

ns = runpy.run_path(sys.argv[1])
quick = len(sys.argv) > 2 and sys.argv[2] == "--quick"
jobs, machines = fixture_workload(num_jobs=100 if quick else 500, num_machines=10 if quick else 50)
res = simulate_binpack(jobs, machines, ns["priority"])
stranded = res["stranded_cpu"] + res["stranded_mem"]
print("EVOLVE_METRICS: " + json.dumps({"neg_stranded": -stranded, "placed_fraction": res["placed"] / len(jobs)}))
