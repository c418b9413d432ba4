from .models import (
    FEATURE_NAMES,
    KINDS,
    TASKS,
    BaselineError,
    BaselineModel,
    FeatureMatrix,
    feature_matrix,
    fit_baseline,
    fit_gradient_boost,
    fit_random_forest,
    fit_svr,
    load_baseline,
    predict,
    save_baseline,
    structured_features,
)
from .tree import LEAF, DecisionTree, best_split, fit_tree
