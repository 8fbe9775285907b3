"""fairlens: multi-metric group fairness audits for binary classifiers.

The package computes thirteen group-wise performance metrics per trained
model, assembles them into a metrics matrix, clusters the metric columns by
correlation distance, and projects group rows into a reference-aligned PCA
plane to show which groups an intervention would actually help or harm.
"""

__version__ = "0.1.0"

METRIC_NAMES = (
    "AUC", "A", "BA", "FPR", "TPR", "FNR", "TNR",
    "PPV", "NPV", "FDR", "FOR", "PPR", "PPREV",
)

MODEL_KINDS = ("logit", "mlp", "knn", "rf", "tree", "nb")
