"""Tensor-core mixed-precision GEMM emulator."""
