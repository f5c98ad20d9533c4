# hybrid
# Semi-symbolic inference for a small probabilistic modelling language.

__version__ = "0.1.0"
