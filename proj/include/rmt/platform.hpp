#pragma once

namespace rmt {

/// OpenBLAS 0.3.20 picks AVX-512 kernels on recent Xeons that return wrong
/// eigenvectors for n ≳ 500. Call first thing in main(): if such a kernel is
/// active and OPENBLAS_CORETYPE is unset, the process re-executes itself
/// with OPENBLAS_CORETYPE=Haswell. Otherwise it returns immediately.
void ensure_reliable_blas(int argc, char** argv);

/// Name of the active OpenBLAS kernel.
const char* blas_core_name();

}  // namespace rmt
