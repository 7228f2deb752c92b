#pragma once

#include <cstddef>
#include <cstdint>

namespace subic::simd {

enum class Isa { scalar, avx2 };

// Kernel set chosen at first use: AVX2+FMA when the CPU has them, scalar
// otherwise. The environment variable SUBIC_ISA (scalar|avx2) overrides
// detection; an unsupported request falls back to scalar.
Isa active_isa();
void force_isa(Isa isa);  // throws subic::error if the ISA is unsupported
const char* isa_name(Isa isa);

double dot(const double* a, const double* b, size_t n);
double l2sqr(const double* a, const double* b, size_t n);
void axpy(double alpha, const double* x, double* y, size_t n);  // y += alpha*x

// For each of `count` records: out[r] = sum over blocks b of
// table[b*k + idx[r*m + b]]. idx is record-major. Additions stay in block
// order per record, so results match the scalar path exactly on every ISA.
void gather_accumulate(const double* table, uint32_t m, uint32_t k,
                       const uint32_t* idx, size_t count, double* out);

// Scalar reference kernels, exposed for equivalence tests.
namespace ref {
double dot(const double* a, const double* b, size_t n);
double l2sqr(const double* a, const double* b, size_t n);
void axpy(double alpha, const double* x, double* y, size_t n);
void gather_accumulate(const double* table, uint32_t m, uint32_t k,
                       const uint32_t* idx, size_t count, double* out);
}  // namespace ref

#ifdef SUBIC_HAVE_AVX2
namespace avx2 {
double dot(const double* a, const double* b, size_t n);
double l2sqr(const double* a, const double* b, size_t n);
void axpy(double alpha, const double* x, double* y, size_t n);
void gather_accumulate(const double* table, uint32_t m, uint32_t k,
                       const uint32_t* idx, size_t count, double* out);
}  // namespace avx2
#endif

}  // namespace subic::simd
