"""Module for running a ResamplePlan against a binarized dataset"""
import logging

from .counterfactual_engine import cfa_oversample
from .resampling import Method, unchanged
from .smote_family import adasyn, borderline_smote, safe_level_smote, smote

_logger = logging.getLogger(__name__)

SMOTE_FAMILY = {
    Method.SMOTE: smote,
    Method.BSMOTE: borderline_smote,
    Method.ADASYN: adasyn,
    Method.SLSMOTE: safe_level_smote,
}


def resample(ds, plan, verify_model=None, n_jobs=1):
    """
    Augment `ds` per `plan`. `verify_model` is only consulted by CFA, where it
    drops candidates the model does not label POSITIVE.
    """
    _logger.info("Resampling %d rows with %s (seed %d)", ds.n_instances,
                 plan.method.label, plan.seed)
    if plan.method is Method.BASELINE:
        return unchanged(ds, "baseline; no resampling")
    if plan.method is Method.CFA:
        return cfa_oversample(ds, tol_factor=plan.tol_factor, max_diffs=plan.max_diffs,
                              target=plan.target, seed=plan.seed,
                              verify=verify_model if plan.verify else None, n_jobs=n_jobs)
    return SMOTE_FAMILY[plan.method](ds, plan)
