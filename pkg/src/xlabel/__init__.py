"""Explainable labeling workbench.

Subpackages: ``ebm`` (boosted additive classifier), ``labeling`` (sampling,
mislabel detection, label application), ``ncd`` (record schema, feature
extraction, rule baseline, synthetic data), ``experiments`` (simulation
harnesses + CLI), ``service`` (HTTP labeling API).
"""
from xlabel.ebm import MISSING, BinMap, EbmModel, TrainConfig, build_bins, fit

__version__ = "0.1.0"

__all__ = ["MISSING", "BinMap", "EbmModel", "TrainConfig", "build_bins",
           "fit", "__version__"]
