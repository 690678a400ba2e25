"""
Pattern Catalog

Named reveal-mask families and reference graphons. Each family entry records
how to generate its k x k mask, the graphon its masks converge to (up to
relabeling), and whether that limit admits stable recovery.
"""

from typing import Callable, Dict

import numpy as np

from mclab.errors import PreconditionError
from mclab.graphon import (
    StepGraphon,
    constant,
    diagonal_blocks,
    gen_full,
    gen_half_rows,
    gen_parity,
    gen_quasirandom,
    half_plane,
)

pattern_families = {
    'half-rows': {
        'generate': lambda k, density=0.5: gen_half_rows(k),
        'limit': half_plane,
        'admits_recovery': False,
        'description': 'Only the top half of the rows is revealed',
    },
    'parity': {
        'generate': lambda k, density=0.5: gen_parity(k),
        'limit': diagonal_blocks,
        'admits_recovery': False,
        'description': 'Entry (i, j) revealed iff i and j have the same parity',
    },
    'quasirandom': {
        'generate': gen_quasirandom,
        'limit': lambda density=0.5: constant(density),
        'admits_recovery': True,
        'description': 'Paley-type quadratic-residue mask with a target density',
    },
    'full': {
        'generate': lambda k, density=0.5: gen_full(k),
        'limit': lambda: constant(1.0),
        'admits_recovery': True,
        'description': 'Every entry revealed',
    },
}

reference_graphons: Dict[str, Callable[[], StepGraphon]] = {
    'half-plane': half_plane,
    'diagonal-blocks': diagonal_blocks,
    'constant-half': lambda: constant(0.5),
    'constant-one': lambda: constant(1.0),
}


def family_names():
    return sorted(pattern_families)


def _family(name: str) -> dict:
    try:
        return pattern_families[name]
    except KeyError:
        raise PreconditionError(f"unknown pattern family {name!r}; choose from {', '.join(family_names())}") from None


def generate_mask(name: str, k: int, density: float = 0.5) -> np.ndarray:
    """k x k mask of the named family."""
    return _family(name)['generate'](k, density=density)


def family_limit(name: str, density: float = 0.5) -> StepGraphon:
    limit = _family(name)['limit']
    return limit(density) if name == 'quasirandom' else limit()


def reference_graphon(name: str) -> StepGraphon:
    try:
        return reference_graphons[name]()
    except KeyError:
        raise PreconditionError(
            f"unknown graphon {name!r}; choose from {', '.join(sorted(reference_graphons))}"
        ) from None
