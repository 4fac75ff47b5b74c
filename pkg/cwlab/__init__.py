"""
Curie-Weiss laboratory: exact laws, De Finetti mixtures, surrogates and limit theorems
"""

__version__ = "0.3.0"
