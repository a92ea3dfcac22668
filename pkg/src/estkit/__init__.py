"""estkit: a small composable estimator toolkit.

Everything learnable shares one contract: parameterized construction,
``fit`` for learning, and capability-gated ``predict`` / ``transform`` /
``score``. Estimators compose through pipelines and feature unions, lift
to multiclass through meta-estimators, tune through cross-validated
search, and persist to a versioned binary archive. Registered kinds are
interchangeable everywhere, including third-party registrations.
"""

from ._version import __version__
from .errors import (
    CapabilityError,
    ConstructionError,
    DataError,
    EstkitError,
    FitError,
    NotFittedError,
    PersistenceError,
)
from .matrix import (
    Dataset,
    csr_from_triplets,
    hstack,
    is_sparse,
    load_csv,
    load_svmlight,
    take_rows,
    to_dense,
    vstack,
)
from .estimator import (
    Capabilities,
    EstimatorDef,
    EstimatorHandle,
    Param,
    audit_registry,
    clone,
    construct,
    params_equal,
    register,
    registered_kinds,
    unregister,
)
from .transformers import PCA, HashingVectorizer, KernelPCA, SelectKBest, StandardScaler
from .predictors import KMeans, LogisticRegression, SVC
from .compose import FeatureUnion, Pipeline
from .multiclass import OneVsOneClassifier, OneVsRestClassifier
from .model_selection import (
    Choice,
    Distribution,
    GridSearchCV,
    IntegerUniform,
    KFold,
    LeaveOneOut,
    LogUniform,
    RandomizedSearchCV,
    Splitter,
    StratifiedKFold,
    Uniform,
    expand_grid,
    sample_params,
    score_metric,
    split,
)
from .persistence import ModelArchive, load, load_archive, save

__all__ = [
    "__version__",
    "CapabilityError",
    "Capabilities",
    "Choice",
    "ConstructionError",
    "DataError",
    "Dataset",
    "Distribution",
    "EstimatorDef",
    "EstimatorHandle",
    "EstkitError",
    "FeatureUnion",
    "FitError",
    "GridSearchCV",
    "HashingVectorizer",
    "IntegerUniform",
    "KFold",
    "KMeans",
    "KernelPCA",
    "LeaveOneOut",
    "LogUniform",
    "LogisticRegression",
    "ModelArchive",
    "NotFittedError",
    "OneVsOneClassifier",
    "OneVsRestClassifier",
    "PCA",
    "Param",
    "PersistenceError",
    "Pipeline",
    "RandomizedSearchCV",
    "SVC",
    "SelectKBest",
    "Splitter",
    "StandardScaler",
    "StratifiedKFold",
    "Uniform",
    "audit_registry",
    "clone",
    "construct",
    "csr_from_triplets",
    "expand_grid",
    "hstack",
    "is_sparse",
    "load",
    "load_archive",
    "load_csv",
    "load_svmlight",
    "params_equal",
    "register",
    "registered_kinds",
    "sample_params",
    "save",
    "score_metric",
    "split",
    "take_rows",
    "to_dense",
    "unregister",
    "vstack",
]
