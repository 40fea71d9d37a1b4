"""Minimax fair representation learning on tabular data.

Trains an invariant encoder, a fair predictor that never sees sensitive
attributes, and a sensitive-aware adversary, then benchmarks the result
against standard representation baselines with accuracy and fairness metrics
over seeded repeated runs.
"""

__version__ = "0.1.0"
