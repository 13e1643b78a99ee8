"""Photon-level simulator and time-tag analysis toolkit.

The heavy lifting lives in the compiled ``_qrelay`` extension; this package
re-exports its public surface.
"""

try:
    from ._qrelay import (  # type: ignore[import-not-found]
        concurrence,
        fidelity_phi_plus,
        g2_histogram,
        mle_reconstruct,
        pair_state_at_delay,
        run,
        validate_config,
    )
except ImportError:
    # development layout: the extension sits on sys.path (CMake build tree)
    from _qrelay import (  # type: ignore[import-not-found]
        concurrence,
        fidelity_phi_plus,
        g2_histogram,
        mle_reconstruct,
        pair_state_at_delay,
        run,
        validate_config,
    )

__all__ = [
    "concurrence",
    "fidelity_phi_plus",
    "g2_histogram",
    "mle_reconstruct",
    "pair_state_at_delay",
    "run",
    "validate_config",
]
