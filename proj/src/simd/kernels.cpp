#include "subic/simd/kernels.hpp"

#include <cstdlib>
#include <string_view>

#include "subic/error.hpp"

namespace subic::simd {

namespace ref {

double dot(const double* a, const double* b, size_t n) {
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

double l2sqr(const double* a, const double* b, size_t n) {
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

void axpy(double alpha, const double* x, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gather_accumulate(const double* table, uint32_t m, uint32_t k,
                       const uint32_t* idx, size_t count, double* out) {
    for (size_t r = 0; r < count; ++r) {
        const uint32_t* rec = idx + r * m;
        double sum = table[rec[0]];
        for (uint32_t b = 1; b < m; ++b) sum += table[static_cast<size_t>(b) * k + rec[b]];
        out[r] = sum;
    }
}

}  // namespace ref

namespace {

bool avx2_supported() {
#ifdef SUBIC_HAVE_AVX2
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa detect() {
    if (const char* env = std::getenv("SUBIC_ISA")) {
        std::string_view v(env);
        if (v == "scalar") return Isa::scalar;
        if (v == "avx2" && avx2_supported()) return Isa::avx2;
    }
    return avx2_supported() ? Isa::avx2 : Isa::scalar;
}

Isa& current() {
    static Isa isa = detect();
    return isa;
}

}  // namespace

Isa active_isa() {
    return current();
}

void force_isa(Isa isa) {
    if (isa == Isa::avx2 && !avx2_supported())
        throw error("avx2 kernels are not supported on this cpu/build");
    current() = isa;
}

const char* isa_name(Isa isa) {
    return isa == Isa::avx2 ? "avx2" : "scalar";
}

double dot(const double* a, const double* b, size_t n) {
#ifdef SUBIC_HAVE_AVX2
    if (current() == Isa::avx2) return avx2::dot(a, b, n);
#endif
    return ref::dot(a, b, n);
}

double l2sqr(const double* a, const double* b, size_t n) {
#ifdef SUBIC_HAVE_AVX2
    if (current() == Isa::avx2) return avx2::l2sqr(a, b, n);
#endif
    return ref::l2sqr(a, b, n);
}

void axpy(double alpha, const double* x, double* y, size_t n) {
#ifdef SUBIC_HAVE_AVX2
    if (current() == Isa::avx2) return avx2::axpy(alpha, x, y, n);
#endif
    return ref::axpy(alpha, x, y, n);
}

void gather_accumulate(const double* table, uint32_t m, uint32_t k,
                       const uint32_t* idx, size_t count, double* out) {
#ifdef SUBIC_HAVE_AVX2
    if (current() == Isa::avx2) return avx2::gather_accumulate(table, m, k, idx, count, out);
#endif
    return ref::gather_accumulate(table, m, k, idx, count, out);
}

}  // namespace subic::simd
