"""Deterministic RNG stream derivation from the scenario seed.

Every satellite link gets its own PCG64 generator so that adding or
removing a satellite never perturbs the draw sequence of any other link,
and the filter initialization draw lives on a stream of its own. The
splitting rule is fixed: the scenario seed XORed with an sv_id-indexed
64-bit constant.
"""

import numpy as np

_MASK = (1 << 64) - 1
_SV_SALT = 0x9E3779B97F4A7C15  # 2^64 / golden ratio, odd
_INIT_SALT = 0xD1B54A32D192ED03


def sv_stream(seed: int, sv_id: int) -> np.random.Generator:
    """Independent generator for one satellite link."""
    return np.random.default_rng((seed ^ ((sv_id + 1) * _SV_SALT & _MASK)) & _MASK)


def init_stream(seed: int) -> np.random.Generator:
    """Generator for the filter's initial-error draw."""
    return np.random.default_rng((seed ^ _INIT_SALT) & _MASK)
