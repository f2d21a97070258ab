"""Shared value types: feasible box, coordinate ownership, actions, agent states.

Conventions used throughout the package:

* ``p`` is the length of the global decision vector; each of the ``n`` agents
  owns a disjoint block of its coordinates (one coordinate each by default).
* States at index ``t`` are the ones produced by the update that used step
  size ``alpha(t-1)`` and the round-``t`` gradient signal; index 0 is the
  initial state (zero duals, primal = projection of the zero dual).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class ActionBox:
    """Per-coordinate interval constraints [lo[k], hi[k]] for the decision vector."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise ConfigError("box bounds must be 1-d arrays of equal length")
        if not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
            raise ConfigError("box bounds must be finite")
        if np.any(hi < lo):
            raise ConfigError("box has hi < lo in some coordinate")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def uniform(cls, lo: float, hi: float, p: int) -> "ActionBox":
        """Box with the same scalar interval in every one of ``p`` coordinates."""
        return cls(np.full(p, float(lo)), np.full(p, float(hi)))

    @property
    def p(self) -> int:
        return self.lo.shape[0]

    @property
    def diameter(self) -> float:
        """Largest per-coordinate width, max_k (hi[k] - lo[k])."""
        return float(np.max(self.hi - self.lo))

    @property
    def radius(self) -> float:
        """Euclidean norm of the farthest box point from the origin."""
        return float(np.sqrt(np.sum(np.maximum(self.lo**2, self.hi**2))))

    def clamp(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lo, self.hi)

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))


@dataclass(frozen=True)
class BlockMap:
    """Partition of coordinates {0..p-1} into per-agent blocks.

    ``blocks[i]`` lists the coordinates agent ``i`` contributes to the network
    action and injects gradient signal into. Default is the scalar case
    p = n with block(i) = {i}.
    """

    blocks: tuple

    def __post_init__(self):
        blocks = tuple(tuple(int(k) for k in b) for b in self.blocks)
        if not blocks or any(len(b) == 0 for b in blocks):
            raise ConfigError("every agent must own at least one coordinate")
        flat = [k for b in blocks for k in b]
        p = len(flat)
        if sorted(flat) != list(range(p)):
            raise ConfigError("blocks must partition 0..p-1 without gaps or overlap")
        object.__setattr__(self, "blocks", blocks)
        owner = np.empty(p, dtype=int)
        for i, b in enumerate(blocks):
            for k in b:
                owner[k] = i
        object.__setattr__(self, "_owner", owner)

    @classmethod
    def scalar(cls, n: int) -> "BlockMap":
        """One coordinate per agent: p = n, block(i) = {i}."""
        return cls(tuple((i,) for i in range(n)))

    @property
    def n(self) -> int:
        return len(self.blocks)

    @property
    def p(self) -> int:
        return self._owner.shape[0]

    @property
    def owner(self) -> np.ndarray:
        """owner[k] = index of the agent whose block contains coordinate k."""
        return self._owner


@dataclass(frozen=True)
class NetworkAction:
    """The stacked decision vector scored at round ``t`` (t >= 1)."""

    x: np.ndarray
    round: int


@dataclass
class AgentState:
    """One agent's iterates: dual ``z``, primal ``x``, broadcast weight ``w``.

    ``w`` is fixed at 1.0 and unused by the circulation engine; the push-sum
    engine keeps it strictly positive.
    """

    z: np.ndarray
    x: np.ndarray
    w: float = 1.0


def extract_network_action(states, blocks: BlockMap, t: int) -> NetworkAction:
    """Assemble x(t): coordinate k is taken from the agent that owns k.

    Raises ConfigError when the state list does not match the block map.
    """
    if len(states) != blocks.n:
        raise ConfigError(f"expected {blocks.n} agent states, got {len(states)}")
    p = blocks.p
    x = np.empty(p)
    for i, b in enumerate(blocks.blocks):
        for k in b:
            x[k] = states[i].x[k]
    return NetworkAction(x=x, round=t)


def block_embed(agent: int, u: np.ndarray, blocks: BlockMap, p: int) -> np.ndarray:
    """Place agent ``agent``'s block values into a length-``p`` vector, zeros elsewhere."""
    b = blocks.blocks[agent]
    u = np.asarray(u, dtype=float)
    if u.shape != (len(b),):
        raise ConfigError(f"agent {agent} owns {len(b)} coordinates, got {u.shape}")
    out = np.zeros(p)
    out[list(b)] = u
    return out
