"""freudquad: weighted quadrature on R^d for Freud-type weights.

Truncated Gauss rules in one dimension, Smolyak sparse rules on step
hyperbolic crosses in d dimensions, adversarial lower-bound witnesses,
and a convergence-rate benchmarking harness.
"""

from .weights import (FREUD, MARKOV_SONIN, UnsupportedWeight, WeightSpec,
                      eval_weight, freud, gamma_lambda, gaussian_measure_weight,
                      integral, markov_sonin, mrs_number,
                      recip_weight_derivative_coeffs, spec_from_json,
                      spec_to_json)
from .orthopoly import (CLOSED_FORM, STIELTJES, ConvergenceFailure,
                        DiscretizationControl, EigenFailure, GaussData,
                        RecurrenceTable, gauss_rule, gauss_to_csv,
                        node_spacing_profile, recurrence_closed_form,
                        recurrence_stieltjes, recurrence_table, zero_bound)
from .quad1d import (FULL_GAUSS, TRUNCATED_GAUSS, BudgetTooSmall, DyadicRules,
                     QuadRule1D, apply_rule, center_rule, dyadic_rule,
                     full_rule, j_of_m, select_m_for_budget, truncated_rule)
from .sparse import (SparseIndexSet, SparseRule, SVGDimension, apply_sparse,
                     build_sparse_rule, build_sparse_rule_combination,
                     count_nodes_pre_dedup, delta_terms, rule_to_csv,
                     rule_to_svg, select_xi_for_budget)
from .fooling import (BumpSpec, FoolingFunction, FreeBox,
                      InternalPigeonholeViolation, WitnessReport,
                      box_skeleton, build_fooling, bump_derivative, bump_spec,
                      find_free_box, gamma_count, gamma_set,
                      lower_bound_witness, smallest_pigeonhole_m)
from .bench import (SPARSE, ConvergenceReport, ReferenceMismatch, TestFunction,
                    bump_chain, builtin_families, compare_full_vs_truncated,
                    constant_one, gaussian_poly, runge_product, run_sweep,
                    tail_mass)

__version__ = "0.1.0"
