"""Benchmark recipes, brute-force oracles and the command line."""

from .oracles import (oracle_qubo_value, oracle_enumerate_qubo,
                      oracle_enumerate_qubo_batch, oracle_chebyshev,
                      oracle_best_aggregate, oracle_objective)
from .recipes import (RECIPES, BEST_KNOWN, TIME_COLUMNS, RecipeResult,
                      run_recipe, to_csv, write_outputs)

__all__ = [
    "oracle_qubo_value", "oracle_enumerate_qubo",
    "oracle_enumerate_qubo_batch", "oracle_chebyshev",
    "oracle_best_aggregate", "oracle_objective",
    "RECIPES", "BEST_KNOWN", "TIME_COLUMNS", "RecipeResult",
    "run_recipe", "to_csv", "write_outputs",
]
