"""Element kernel backend, chosen at import.

The compiled extension is used when it is importable; set the environment
variable ``IRKFSI_PURE_PYTHON=1`` to force the NumPy implementation.
"""

import os

if os.environ.get("IRKFSI_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels_cy as _impl
    except ImportError:
        from . import _kernels_py as _impl

BACKEND = _impl.BACKEND
fluid_residual = _impl.fluid_residual
fluid_jacobian = _impl.fluid_jacobian
fluid_shape_fd = _impl.fluid_shape_fd
solid_residual = _impl.solid_residual
solid_jacobian = _impl.solid_jacobian
dissipation = _impl.dissipation
