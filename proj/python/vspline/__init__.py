"""Adaptive smoothing of position/velocity trajectories with V-splines."""

import json as _json

from ._vspline import (
    build_gram,
    CorrelationSpec,
    cv_brute_force,
    cv_closed_form,
    DegenerateScoreError,
    DomainError,
    eval_r0,
    eval_r1,
    eval_r1_ds,
    eval_r1_dsdt,
    eval_r1_dt,
    fit_basis,
    fit_report as _fit_report,
    fit_vspline,
    gcv_correlated,
    gcv_score,
    GramSystem,
    hat_matrices,
    HatMatrices,
    HermiteBasis,
    InvalidInputError,
    KernelConfig,
    optimize_params,
    posterior_mean_diffuse,
    posterior_mean_finite_rho,
    PosteriorSummary,
    rescale_domain,
    ScaleRecord,
    SearchGrid,
    simulate,
    SingularSystemError,
    VSplineFit,
)


def fit_report(t, y, v, lam, gamma):
    """Fit raw-domain data and return the report as a dict."""
    return _json.loads(_fit_report(t, y, v, lam, gamma))


__all__ = [name for name in dir() if not name.startswith("_")]
