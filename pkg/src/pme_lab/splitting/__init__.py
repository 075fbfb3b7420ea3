"""Splitting scheme, monolithic reference solver and consistency checks."""

from pme_lab.splitting.monolithic import monolithic_solve, monolithic_step
from pme_lab.splitting.refinement import RefinementReport, fit_rate, splitting_refinement_study
from pme_lab.splitting.scheme import HolderCheck, LqGrowthCheck, SplitRun, split_solve
from pme_lab.splitting.weak_form import (
    TestFunction,
    WeakFormReport,
    default_test_functions,
    weak_form_residual,
)

__all__ = [
    "HolderCheck",
    "LqGrowthCheck",
    "SplitRun",
    "split_solve",
    "monolithic_step",
    "monolithic_solve",
    "RefinementReport",
    "fit_rate",
    "splitting_refinement_study",
    "TestFunction",
    "WeakFormReport",
    "default_test_functions",
    "weak_form_residual",
]
