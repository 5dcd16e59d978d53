"""Load-aware informative path planning with Gaussian-process fields."""

from .baselines import CippQuery, GreedyQuery, solve_cipp, solve_greedy
from .errors import InfeasiblePlanError, InputError, LippError, NumericalError, ScenarioError
from .gp_field import (
    Estimator,
    FieldModel,
    Kernel,
    VarianceEvaluator,
    llse_objective,
    optimal_llse,
    posterior_variance,
)
from .graph_world import EnergyParams, Plan, Scenario, Vertex, World, path_distance, path_energy, terrain_cost
from .miqp import build_miqp, export_model, validate_assignment
from .scenarios import ScenarioSpec, generate_scenario, make_scenario
from .solver import PlanQuery, SolveReport, distance_bound, enumerate_bruteforce, solve_exact

__version__ = "0.1.0"
