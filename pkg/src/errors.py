"""
Error Types Module

Exceptions raised across the laboratory. Each carries the process exit code
the command line maps it to:
- ConfigurationError: malformed configuration or failed validation (2)
- LaplaceDomainError: a transform evaluated outside its domain (3)
- NumericalError: quadrature, root finding or a statistical gate failed (4)
"""

from typing import Optional


class RankLabError(Exception):
    """
    Base class for all laboratory errors
    """

    exit_code = 1


class ConfigurationError(RankLabError, ValueError):
    """
    Raised for malformed configuration files and invalid drift models
    """

    exit_code = 2

    def __init__(self, message: str, location: Optional[str] = None):
        """
        Args:
            message (str): Description of the problem
            location (Optional[str]): JSON path or file location of the problem
        """
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)


class LaplaceDomainError(RankLabError, ValueError):
    """
    Raised when a Laplace transform is requested outside the set where it is finite
    """

    exit_code = 3

    def __init__(self, message: str, bound: Optional[str] = None, k: Optional[int] = None):
        """
        Args:
            message (str): Description of the violation
            bound (Optional[str]): Name of the violated bound ('lower' or 'upper')
            k (Optional[int]): Offending gap index for product formulas
        """
        self.bound = bound
        self.k = k
        super().__init__(message)


class NumericalError(RankLabError, RuntimeError):
    """
    Raised when a numerical routine does not converge or a statistical gate fails
    """

    exit_code = 4
