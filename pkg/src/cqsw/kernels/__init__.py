"""Eigensolver kernel selection: compiled extension if built, else pure Python."""

from __future__ import annotations

try:
    from cqsw.kernels._jacobi import jacobi_cyclic

    BACKEND = "compiled"
except ImportError:  # extension not built
    from cqsw.kernels.jacobi_py import jacobi_cyclic

    BACKEND = "python"

__all__ = ["jacobi_cyclic", "BACKEND"]
