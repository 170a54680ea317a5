"""
Design patterns package for the hashing toolkit.
Contains base classes and implementations for:
- Strategy Pattern
- Factory Pattern
- Builder Pattern
"""

from .strategy import IStrategy
from .factory import IFactory, BaseFactory
from .builder import IBuilder, BaseBuilder

__all__ = [
    'IStrategy',
    'IFactory',
    'BaseFactory',
    'IBuilder',
    'BaseBuilder',
]
