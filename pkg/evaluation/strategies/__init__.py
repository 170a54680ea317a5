from .retrieval import HammingRankingStrategy, HashLookupStrategy

__all__ = ['HammingRankingStrategy', 'HashLookupStrategy']
