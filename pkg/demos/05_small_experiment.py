"""A miniature version of the full Monte Carlo study.

Twenty replications per cell keep this under a minute; the command-line tool
runs the full-size version with the same code path.
"""

from sflr.harness import ExperimentConfig, format_tables, run_experiment

config = ExperimentConfig(n_list=(10, 15, 20), replications=20, seed=0)
report = run_experiment(config)
print(format_tables(report))
