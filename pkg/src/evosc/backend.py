"""Selection between numba-jitted kernels and their pure-numpy twins.

Every hot inner loop in the package exists twice: once compiled with
``numba.njit`` and once as plain vectorized numpy. The environment variable
``EVOSC_BACKEND`` picks the implementation:

    EVOSC_BACKEND=numba   require numba, fail loudly if it is missing
    EVOSC_BACKEND=numpy   force the pure-numpy fallback
    EVOSC_BACKEND=auto    (default) numba when it imports, numpy otherwise

The variable is read on every kernel call, so tests can flip backends with a
plain ``monkeypatch.setenv``. See ``benchmarks/bench_backends.py`` for a
speed comparison of the two paths.
"""

import os

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

ENV_VAR = "EVOSC_BACKEND"
_CHOICES = ("auto", "numba", "numpy")


def requested_backend() -> str:
    """The raw (lowercased) value of EVOSC_BACKEND, defaulting to 'auto'."""
    return os.environ.get(ENV_VAR, "auto").strip().lower() or "auto"


def active_backend() -> str:
    """Resolve the backend to use right now: 'numba' or 'numpy'."""
    choice = requested_backend()
    if choice not in _CHOICES:
        raise RuntimeError(
            f"{ENV_VAR}={choice!r} is not one of {', '.join(_CHOICES)}"
        )
    if choice == "numpy":
        return "numpy"
    if choice == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError(f"{ENV_VAR}=numba but numba is not importable")
        return "numba"
    return "numba" if HAVE_NUMBA else "numpy"


def use_numba() -> bool:
    return active_backend() == "numba"
