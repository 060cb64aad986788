"""
RankLab - Stationary laws of rank-based interacting diffusions and their mean-field limit
"""

__version__ = "1.0.0"
