"""attrens: ensembling and evaluation of feature-attribution explanation maps."""

__version__ = "0.1.0"

from .autoweighted import (
    AutoweightedEnsembler,
    EnsembleScores,
    PerturbationEvidence,
    autoweighted_ensemble,
    consistency_score,
    ensemble_scores,
    stability_score,
)
from .core import (
    EnsembleResult,
    ExplanationSet,
    MaskSet,
    StatSummary,
    compute_stats,
    validate_bundle,
)
from .ensemble import NormEnsembleXAI, aggregate, norm_ensemble_xai
from .krr import Kernel, WeightedKernelRidge, gram_matrix, krr_fit, krr_predict
from .manifest import Bundle, OracleConfig, load_bundle
from .metrics import (
    MetricReport,
    evaluate_all,
    local_lipschitz,
    pixel_flipping,
    pointing_game,
    random_logit,
    sparseness_gini,
)
from .normalization import (
    ExplanationNormalizer,
    normalize,
    normalize_robust,
    normalize_second_moment,
    normalize_standard,
)
from .npyio import read_npy, write_npy
from .oracles import BuiltinLinear, CallbackOracle, ExternalCommandOracle
from .supervised import (
    SupervisedDesign,
    SupervisedXAIRegressor,
    build_design,
    mask_weights,
    supervised_xai,
)

__all__ = [
    "AutoweightedEnsembler",
    "Bundle",
    "BuiltinLinear",
    "CallbackOracle",
    "EnsembleResult",
    "EnsembleScores",
    "ExplanationNormalizer",
    "ExplanationSet",
    "ExternalCommandOracle",
    "Kernel",
    "MaskSet",
    "MetricReport",
    "NormEnsembleXAI",
    "OracleConfig",
    "PerturbationEvidence",
    "StatSummary",
    "SupervisedDesign",
    "SupervisedXAIRegressor",
    "WeightedKernelRidge",
    "aggregate",
    "autoweighted_ensemble",
    "build_design",
    "compute_stats",
    "consistency_score",
    "ensemble_scores",
    "evaluate_all",
    "gram_matrix",
    "krr_fit",
    "krr_predict",
    "load_bundle",
    "local_lipschitz",
    "mask_weights",
    "norm_ensemble_xai",
    "normalize",
    "normalize_robust",
    "normalize_second_moment",
    "normalize_standard",
    "pixel_flipping",
    "pointing_game",
    "random_logit",
    "read_npy",
    "sparseness_gini",
    "stability_score",
    "supervised_xai",
    "validate_bundle",
    "write_npy",
]
