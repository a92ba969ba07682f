"""
QJH Bench - ill-conditioned Gaussian sampling and Airy eigenvalue inference.
"""

from .airy import (
    AiryModel,
    AiryPrior,
    AiryProblem,
    EigenErrorReport,
    TridiagonalMatrix,
    airy_convergence_order,
    airy_discretize,
    airy_domain_length,
    airy_eigenvalues,
    airy_exact_eigenvalues,
    airy_fisher_information,
    airy_initial_guess,
    airy_posterior,
    eigen_error_report,
    run_airy_inference,
    synthesize_airy_data,
)
from .gaussian import (
    PUBLISHED_KL,
    GaussianBenchmarkResult,
    GaussianTarget,
    KLRow,
    PreconditioningComparison,
    checkpoints,
    compare_preconditioning,
    iterations_to_threshold,
    kl_gaussian,
    kl_trace,
    make_illconditioned_gaussian,
    run_gaussian_benchmark,
)

__all__ = [
    "AiryModel",
    "AiryPrior",
    "AiryProblem",
    "EigenErrorReport",
    "TridiagonalMatrix",
    "airy_convergence_order",
    "airy_discretize",
    "airy_domain_length",
    "airy_eigenvalues",
    "airy_exact_eigenvalues",
    "airy_fisher_information",
    "airy_initial_guess",
    "airy_posterior",
    "eigen_error_report",
    "run_airy_inference",
    "synthesize_airy_data",
    "PUBLISHED_KL",
    "GaussianBenchmarkResult",
    "GaussianTarget",
    "KLRow",
    "PreconditioningComparison",
    "checkpoints",
    "compare_preconditioning",
    "iterations_to_threshold",
    "kl_gaussian",
    "kl_trace",
    "make_illconditioned_gaussian",
    "run_gaussian_benchmark",
]
