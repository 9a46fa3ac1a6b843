"""Backend selection for the Monte Carlo hot kernels.

The compiled extension (`tailagg._condmc`, Cython) is used when it imported
successfully; otherwise the numpy fallback runs.  Set TAILAGG_BACKEND=python
or =compiled to force a choice (forcing `compiled` without a built extension
raises at import of this module's `pair_chunk`).

Both backends consume identical normal draws, so estimates differ only by
last-ulp rounding in the special functions; per-backend results are
bit-reproducible for a fixed (seed, n, params).
"""

from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _condmc as _compiled
except ImportError:
    _compiled = None

_mode = os.environ.get("TAILAGG_BACKEND", "auto").lower()
if _mode not in ("auto", "python", "compiled"):
    raise ValueError(f"TAILAGG_BACKEND must be auto/python/compiled, got {_mode!r}")
if _mode == "compiled" and _compiled is None:
    raise ImportError("TAILAGG_BACKEND=compiled but tailagg._condmc is not built")

_use_compiled = _compiled is not None and _mode in ("auto", "compiled")


def backend_name() -> str:
    return "compiled" if _use_compiled else "python"


def compiled_available() -> bool:
    return _compiled is not None


def pair_chunk(z1, z2, nu1, nu2, s1, s2, rho, x, force=None):
    """(sum, sumsq) of conditional-estimator values for one chunk, d = 2."""
    if force == "python" or (force is None and not _use_compiled):
        return _kernels_py.cond_mc_pair_chunk(z1, z2, nu1, nu2, s1, s2, rho, x)
    if _compiled is None:
        raise ImportError("compiled kernel requested but not built")
    return _compiled.cond_mc_pair_chunk(z1, z2, nu1, nu2, s1, s2, rho, x)


def equicorr_chunk(z, nu, sig, rho, x):
    """(sum, sumsq) for the general-d kernel (numpy only; d > 2 is cold path)."""
    return _kernels_py.cond_mc_equicorr_chunk(z, nu, sig, rho, x)
