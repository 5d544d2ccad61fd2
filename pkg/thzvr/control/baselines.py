"""Exhaustive and random phase-configuration selection."""
import itertools
import logging
from dataclasses import dataclass

from thzvr.errors import ConfigError
from thzvr.phy import PhaseConfig

log = logging.getLogger(__name__)

MAX_FULL_SPACE = 2 ** 20


@dataclass(frozen=True)
class Selection:
    config: PhaseConfig
    value: float
    index: int  # codebook index, -1 for a full-space pick
    evaluated: int


def full_space(n_elements, bits):
    levels = range(2 ** bits)
    for combo in itertools.product(levels, repeat=n_elements):
        yield PhaseConfig(combo, bits)


def exhaustive_select(score, n_elements, bits, codebook=None, full=False,
                      max_space=MAX_FULL_SPACE):
    """argmax of `score(PhaseConfig)` over the full L^N space or over the codebook.

    A full enumeration larger than `max_space` is refused; with a codebook at
    hand the search falls back to it, otherwise ConfigError.
    """
    if full:
        space = (2 ** bits) ** n_elements
        if space <= max_space:
            candidates = list(full_space(n_elements, bits))
            return _best(score, candidates, indexed=False)
        if codebook is None:
            raise ConfigError(f"refusing to enumerate {space} configurations (limit {max_space})")
        log.warning("full space of %d configurations exceeds %d; searching the codebook",
                    space, max_space)
    if codebook is None:
        raise ConfigError("exhaustive search needs a codebook or full=True")
    return _best(score, list(codebook), indexed=True)


def _best(score, candidates, indexed):
    best_i, best_v = 0, float("-inf")
    for i, cfg in enumerate(candidates):
        v = score(cfg)
        if v > best_v:
            best_i, best_v = i, v
    return Selection(candidates[best_i], best_v, best_i if indexed else -1, len(candidates))


def random_select(codebook, rng):
    index = int(rng.integers(len(codebook)))
    return index, codebook[index]
