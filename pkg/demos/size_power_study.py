"""
A small size and power study
============================

Loads the packaged reduced study configuration, shrinks it so the demo
finishes in about a minute on one core, and prints the rejection-rate
table.  Cells with a constant copula report empirical size (should sit
near alpha = 0.05); cells with a dependence break report power.
"""

from dataclasses import replace
from importlib import resources

from evbreak import load_experiment, run_experiment

config_path = resources.files("evbreak") / "configs" / "table1_reduced.json"
config = load_experiment(str(config_path))
config = replace(config, replications=50, n_boot=200, workers=1)

print(f"study: {config.name}")
print(f"cells: {len(config.cells)}, replications = {config.replications}, "
      f"B = {config.n_boot}, seed = {config.seed}")
print()

table = run_experiment(config)
print(table.pretty())
