"""Falls-classification toolkit for UPDRS-style motor-score cohorts.

Library layers: cohort ingestion and predictor schemes (``cohort``),
synthetic-cohort generation (``synth``), decision trees and bootstrap
forests (``tree``, ``forest``), Bayesian logistic regression with Laplace
evidence (``logistic``), forward selection and model averaging
(``selection``), evaluation and descriptive statistics (``evaluation``,
``stats``), scikit-learn-style wrappers (``estimators``), the batch grid
engine (``suite``), and the command line (``cli``).
"""

from .cohort import (COMPOSITES, GENDERS, HORIZONS, LIVING, SCHEMES,
                     AggregateSpec, CohortDataset, FeatureView, ItemSchema,
                     ParticipantRecord, aggregate_specs, build_view,
                     derive_aggregates, load_cohort, reference_schema,
                     validate_record, write_cohort)
from .errors import (DegenerateVariance, DimensionMismatch,
                     DuplicateParticipant, EmptyFile, EmptyNode,
                     InvalidConfig, InvalidFieldValue, MissingColumn,
                     NegativeWeight, NonConvergence, OutOfRangeScore,
                     SingleClass, SingularHessian, UnknownItem,
                     UpdrsFallsError, ZeroMarginal)
from .estimators import (BayesLogitClassifier, BMAClassifier,
                         ForestClassifier, ForwardSelectClassifier,
                         TreeClassifier)
from .evaluation import (ConfusionCounts, ConfusionMetrics, EvaluationReport,
                         RocCurve, choose_threshold, confusion_at,
                         evaluate_scores, loocv_scores, metrics_from_counts,
                         roc_and_auc, threshold_candidates, trapezoid_auc,
                         write_roc_csv)
from .forest import (DEFAULT_N_TREES, Forest, ForestConfig, default_mtry,
                     feature_importance, fit_forest, forest_scores,
                     predict_forest, write_importance_csv)
from .logistic import (DEFAULT_V0, LogitFit, LogitModel, OddsRatioEstimate,
                       coefficient_sds, fit_map, laplace_lml, log_joint,
                       log_joint_gradient, odds_ratios, predict_prob,
                       predict_prob_matrix, write_fit_summary)
from .selection import (ModelAverage, SelectionTrace, bma_average,
                        bma_predict, forward_select,
                        inclusion_probabilities, write_membership_table)
from .stats import (CohortSummary, SummaryRow, chi_square_2x2,
                    describe_cohort, mann_whitney)
from .suite import (METHODS, CellResult, SuiteOptions, SuiteReport,
                    cell_seed, run_cell, run_scheme_suite,
                    write_metrics_grid, write_variables_grid)
from .synth import ScenarioConfig, generate_synthetic, load_scenario, parse_scenario
from .tree import (SplitRule, TreeConfig, TreeNode, best_split,
                   entropy_impurity, fit_tree, gini_impurity, predict_tree,
                   tree_to_text)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
