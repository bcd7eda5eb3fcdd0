"""Smooth-pursuit impairment analytics for a 0.4 Hz circular stimulus.

Submodules: ``trace`` (types, geometry, file formats), ``synth`` (cohort
simulator), ``preprocess`` (blink masks), ``features`` (per-run metrics),
``stats`` (paired tests, effect sizes, power), ``classify`` (linear SVM and
ROC/AUC), ``report``/``svg`` (figures) and ``cli``.
"""

__version__ = "0.1.0"
