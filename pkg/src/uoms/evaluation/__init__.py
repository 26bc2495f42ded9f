from .compare import (
    IFOREST_R,
    RANDOM,
    MethodSummary,
    PerfTable,
    differences,
    family_means,
    model_spread,
    pairwise_pvalues,
    random_from_family_means,
    summarize,
    winners,
)
from .metrics import METRICS, average_precision, evaluate, precision_at_k, roc_auc
from .stats import WilcoxonResult, baseline_family, baseline_random, smallest_q, wilcoxon_one_sided
