"""Verifier constructions for concrete languages, addressable by name."""

from __future__ import annotations

import re
from functools import lru_cache
from typing import Callable

from ..exactnum import DomainError
from .common import Construction

# fixed oracle horizons for the registry entries; large enough for inputs of a few dozen symbols
UNARY_HORIZON = 160
BINARY_HORIZON = 96


def _usquare_mapfa():
    from .unary import build_usquare_mapfa

    return build_usquare_mapfa()


def _usquare_mapostqfa():
    from .unary import build_usquare_mapostqfa

    return build_usquare_mapostqfa()


def _usquare_mapostpfa():
    from .postpfa import build_usquare_mapostpfa

    return build_usquare_mapostpfa()[0]


def _upower():
    from .unary import build_upower_mapfa

    return build_upower_mapfa()


def _upower_mapostqfa():
    from .unary import build_upower_mapostqfa

    return build_upower_mapostqfa()


def _upower_mapostpfa():
    from .postpfa import build_upower_mapostpfa

    return build_upower_mapostpfa()[0]


def _unary_alpha():
    from .alpha import build_unary_alpha_verifier, pow2_oracle

    return build_unary_alpha_verifier(pow2_oracle(UNARY_HORIZON)).construction()


def _binary_alpha():
    from .alpha import build_binary_alpha_verifier, language_oracle

    oracle = language_oracle(lambda s: s.count("a") % 2 == 0, BINARY_HORIZON)
    return build_binary_alpha_verifier(oracle).construction()


def _subsetsum():
    from .subsetsum import build_subsetsum_verifier

    return build_subsetsum_verifier(3)


def _history(name):
    def build():
        from ..counter_machine import DEMO_MACHINES, build_history_verifier

        return build_history_verifier(DEMO_MACHINES[name]())[0]

    return build


REGISTRY: dict[str, Callable[[], Construction]] = {
    "usquare-mapfa": _usquare_mapfa,
    "usquare-mapostqfa": _usquare_mapostqfa,
    "usquare-mapostpfa": _usquare_mapostpfa,
    "upower": _upower,
    "upower-mapostqfa": _upower_mapostqfa,
    "upower-mapostpfa": _upower_mapostpfa,
    "unary-alpha": _unary_alpha,
    "binary-alpha": _binary_alpha,
    "subsetsum": _subsetsum,
    "history-even": _history("even"),
    "history-pow2": _history("pow2"),
}

_UPOLY = re.compile(r"upoly-(\d+)(-mapostqfa|-mapostpfa)?$")


def names() -> list[str]:
    """Registered names; ``upoly-K`` (and its ``-mapostqfa`` / ``-mapostpfa`` variants) accept any K >= 2."""
    return sorted(REGISTRY) + ["upoly-K", "upoly-K-mapostqfa", "upoly-K-mapostpfa"]


@lru_cache(maxsize=None)
def get_construction(name: str) -> Construction:
    if name in REGISTRY:
        return REGISTRY[name]()
    m = _UPOLY.match(name)
    if m:
        k = int(m.group(1))
        if k < 2:
            raise DomainError("upoly needs k >= 2")
        variant = m.group(2) or ""
        if variant == "-mapostqfa":
            from .unary import build_upoly_mapostqfa

            return build_upoly_mapostqfa(k)
        if variant == "-mapostpfa":
            from .postpfa import build_upoly_mapostpfa

            return build_upoly_mapostpfa(k)[0]
        from .unary import build_upoly_mapfa

        return build_upoly_mapfa(k)
    raise KeyError(f"unknown construction {name!r}; known: {', '.join(names())}")
