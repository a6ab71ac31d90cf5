"""Print VALUE from the program given on the command line as the score."""

import json
import runpy
import sys

ns = runpy.run_path(sys.argv[1])
print("EVOLVE_METRICS: " + json.dumps({"score": float(ns["VALUE"])}))
