"""Pick the compiled kernels when available, else the numpy fallback.

Set ``ABSCS_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _fallback

kernels = _fallback
BACKEND = "python"

if os.environ.get("ABSCS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        kernels = _kernels
        BACKEND = "compiled"
