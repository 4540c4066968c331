"""Interpretable Bernoulli classifiers for individuals of knowledge graphs."""

from .dataset import (
    ConstantImputer,
    Dataset,
    FeatureInfo,
    SoftMatrix,
    TernaryValue,
    VarianceSelector,
    dump_csv,
    impute_constant,
    load_csv,
    variance_select,
)
from .em import EmConfig, EmTrace, MultivariateBernoulliNBEM, em_phase1, em_phase2
from .evaluation import (
    BenchmarkConfig,
    compute_metrics,
    friedman_nemenyi,
    generate_problems,
    run_benchmark,
    stratified_kfold,
)
from .kg import Feature, KnowledgeBase, encode_individuals, entail, generate_features, parse_kb
from .mbnb import (
    Decision,
    DecisionLabel,
    MbnbParams,
    MultivariateBernoulliNB,
    classify,
    expected_missing,
    fit_mle,
    log_likelihood,
    posterior,
)
from .mixture import (
    BernoulliMixture,
    HbmModel,
    HierarchicalBernoulliClassifier,
    MixtureParams,
    fit_hbm,
    fit_mixture,
    hbm_posterior,
    mixture_impute,
    mixture_log_likelihood,
    responsibilities,
    select_k,
)
from .rules import extract_axiom, extract_disjunctive, extract_rule, render

__version__ = "0.1.0"
