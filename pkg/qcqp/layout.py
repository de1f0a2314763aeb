"""
layout.py - position of every named quantity in the stacked QCQP vector.

x = [bid, pg, pd, lam, sigma, delta, zeta, xi, phi, psi, theta]

bid holds one entry per strategic unit (B_S a); phi and psi exist only for
lines with finite capacity.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
from dataclasses import dataclass
from functools import cached_property

# Import external packages
import numpy as np

# Import functions from local modules
from market.market_model import MarketCase

#####################################
# Segments
#####################################

SEGMENTS: tuple[str, ...] = ("bid", "pg", "pd", "lam", "sigma", "delta", "zeta", "xi", "phi", "psi", "theta")

# multipliers that must stay nonnegative
DUAL_SEGMENTS: tuple[str, ...] = ("sigma", "delta", "zeta", "xi", "phi", "psi")


@dataclass(frozen=True)
class VariableLayout:
    sizes: tuple[tuple[str, int], ...]
    strategic: tuple[int, ...]  # fleet index of each strategic unit, in bid order

    @classmethod
    def for_case(cls, case: MarketCase) -> "VariableLayout":
        n_g = len(case.generators)
        n_d = len(case.loads)
        n_b = case.network.n_buses
        n_f = len(case.network.limited_lines)
        counts = {
            "bid": case.generators.n_strategic,
            "pg": n_g,
            "pd": n_d,
            "lam": n_b,
            "sigma": n_g,
            "delta": n_g,
            "zeta": n_d,
            "xi": n_d,
            "phi": n_f,
            "psi": n_f,
            "theta": n_b,
        }
        return cls(sizes=tuple((name, counts[name]) for name in SEGMENTS), strategic=case.generators.strategic_indices)

    @cached_property
    def _offsets(self) -> dict[str, int]:
        offsets, pos = {}, 0
        for name, size in self.sizes:
            offsets[name] = pos
            pos += size
        return offsets

    @property
    def n(self) -> int:
        return sum(size for _, size in self.sizes)

    def size(self, name: str) -> int:
        return dict(self.sizes)[name]

    def offset(self, name: str) -> int:
        return self._offsets[name]

    def slice(self, name: str) -> slice:
        start = self.offset(name)
        return slice(start, start + self.size(name))

    def indices(self, name: str) -> np.ndarray:
        return np.arange(self.offset(name), self.offset(name) + self.size(name))

    def index(self, name: str, element: int) -> int:
        """Position of element `element` of segment `name`."""
        if not 0 <= element < self.size(name):
            raise IndexError(f"{name}[{element}] outside segment of length {self.size(name)}")
        return self.offset(name) + element

    def selector(self, name: str, generator: int) -> int:
        """Position of a generator's quantity; 'bid' accepts strategic units only."""
        if name == "bid":
            if generator not in self.strategic:
                raise KeyError(f"generator {generator} is not strategic")
            return self.index("bid", self.strategic.index(generator))
        return self.index(name, generator)

    def basis(self, name: str, element: int) -> np.ndarray:
        """Standard basis vector e_l picking one entry of x."""
        e = np.zeros(self.n)
        e[self.index(name, element)] = 1.0
        return e

    def locate(self, position: int) -> tuple[str, int]:
        """Inverse of index: (segment, element) owning a position."""
        for name, size in self.sizes:
            start = self.offset(name)
            if start <= position < start + size:
                return name, position - start
        raise IndexError(f"position {position} outside layout of length {self.n}")

    def label(self, position: int) -> str:
        name, element = self.locate(position)
        return f"{name}[{element}]"

    def split(self, x: np.ndarray) -> dict[str, np.ndarray]:
        return {name: np.asarray(x)[self.slice(name)] for name, _ in self.sizes}

    def stack(self, parts: dict[str, np.ndarray]) -> np.ndarray:
        x = np.zeros(self.n)
        for name, size in self.sizes:
            value = np.asarray(parts.get(name, np.zeros(size)), dtype=float).reshape(-1)
            if value.size != size:
                raise ValueError(f"segment {name} needs {size} entries, got {value.size}")
            x[self.slice(name)] = value
        return x


def variable_census(layout: VariableLayout) -> dict[str, int]:
    """Length of each segment plus the total."""
    census = {name: size for name, size in layout.sizes}
    census["total"] = layout.n
    return census


def format_census(census: dict[str, int]) -> str:
    width = max(len(name) for name in census)
    return "\n".join(f"  {name:<{width}}  {count:>6}" for name, count in census.items())
