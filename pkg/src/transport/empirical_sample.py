"""
Empirical Sample Module

Seeded, tagged collections of scalar or k-dimensional draws. Samplers,
simulations and the Wasserstein metrics all exchange this type.
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class SampleProvenance:
    sampler: str
    seed: Optional[int]
    n: Optional[int]
    count: int


@dataclass
class EmpiricalSample:
    """
    Draws stored row-wise as an array of shape (count, k)
    """

    draws: np.ndarray
    provenance: SampleProvenance
    effective_sample_size: Optional[float] = None
    times: Optional[np.ndarray] = None

    def __post_init__(self):
        draws = np.asarray(self.draws, dtype=float)
        if draws.ndim == 1:
            draws = draws[:, None]
        if draws.ndim != 2 or draws.shape[0] < 1:
            raise ValueError(f"a sample needs at least one draw of shape (k,), got array {draws.shape}")
        self.draws = draws
        if self.times is not None:
            self.times = np.asarray(self.times, dtype=float)
            if self.times.shape != (draws.shape[0],):
                raise ValueError(f"times must have one entry per draw, got {self.times.shape}")

    @property
    def dimension(self) -> int:
        return self.draws.shape[1]

    @property
    def count(self) -> int:
        return self.draws.shape[0]

    def values(self) -> np.ndarray:
        """
        Returns:
            np.ndarray: The draws of a one-dimensional sample as a flat array
        """
        if self.dimension != 1:
            raise ValueError(f"sample has dimension {self.dimension}, expected 1")
        return self.draws[:, 0]

    def resample(self, rng: np.random.Generator) -> 'EmpiricalSample':
        """
        Bootstrap resample with replacement, same size
        """
        index = rng.integers(0, self.count, size=self.count)
        return EmpiricalSample(self.draws[index], replace(self.provenance, sampler=f"{self.provenance.sampler}+bootstrap"))

    @classmethod
    def from_values(cls, values, sampler: str, seed: Optional[int] = None,
                    n: Optional[int] = None) -> 'EmpiricalSample':
        """
        Build a sample from raw values

        Args:
            values (array-like): Array of shape (count,) or (count, k)
            sampler (str): Sampler identifier for the provenance tag
            seed (Optional[int]): Seed used to draw the values
            n (Optional[int]): Particle count of the generating law, if any

        Returns:
            EmpiricalSample: Tagged sample
        """
        array = np.asarray(values, dtype=float)
        return cls(array, SampleProvenance(sampler, seed, n, int(array.shape[0])))
