// AVX2+FMA kernel variants; compiled with -mavx2 -mfma and called only
// after a runtime cpuid check.

#include "subic/simd/kernels.hpp"

#ifdef SUBIC_HAVE_AVX2

#include <immintrin.h>

namespace subic::simd::avx2 {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

}  // namespace

double dot(const double* a, const double* b, size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    double sum = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

double l2sqr(const double* a, const double* b, size_t n) {
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double sum = hsum(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

void axpy(double alpha, const double* x, double* y, size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d r = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(y + i, r);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void gather_accumulate(const double* table, uint32_t m, uint32_t k,
                       const uint32_t* idx, size_t count, double* out) {
    // Four records in flight to break the per-record add dependency chain.
    // Plain indexed loads outrun vgatherdpd for this access pattern, so the
    // fast lane stays scalar inside; each record still sums in block order,
    // matching the reference kernel value for value.
    size_t r = 0;
    for (; r + 4 <= count; r += 4) {
        const uint32_t* rec0 = idx + (r + 0) * m;
        const uint32_t* rec1 = idx + (r + 1) * m;
        const uint32_t* rec2 = idx + (r + 2) * m;
        const uint32_t* rec3 = idx + (r + 3) * m;
        double s0 = table[rec0[0]];
        double s1 = table[rec1[0]];
        double s2 = table[rec2[0]];
        double s3 = table[rec3[0]];
        for (uint32_t b = 1; b < m; ++b) {
            const double* row = table + static_cast<size_t>(b) * k;
            s0 += row[rec0[b]];
            s1 += row[rec1[b]];
            s2 += row[rec2[b]];
            s3 += row[rec3[b]];
        }
        out[r + 0] = s0;
        out[r + 1] = s1;
        out[r + 2] = s2;
        out[r + 3] = s3;
    }
    if (r < count) ref::gather_accumulate(table, m, k, idx + r * m, count - r, out + r);
}

}  // namespace subic::simd::avx2

#endif  // SUBIC_HAVE_AVX2
