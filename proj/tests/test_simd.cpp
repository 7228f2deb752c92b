#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "subic/simd/kernels.hpp"

using namespace subic;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, size_t n) {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

struct IsaGuard {
    simd::Isa saved = simd::active_isa();
    ~IsaGuard() { simd::force_isa(saved); }
};

}  // namespace

TEST_CASE("scalar reference kernels") {
    const std::vector<double> a{1.0, 2.0, 3.0};
    const std::vector<double> b{4.0, -5.0, 6.0};
    CHECK(simd::ref::dot(a.data(), b.data(), 3) == 12.0);
    CHECK(simd::ref::l2sqr(a.data(), b.data(), 3) == 67.0);
    std::vector<double> y{1.0, 1.0, 1.0};
    simd::ref::axpy(2.0, a.data(), y.data(), 3);
    CHECK(y == std::vector<double>{3.0, 5.0, 7.0});
    CHECK(simd::ref::dot(a.data(), b.data(), 0) == 0.0);
}

TEST_CASE("isa dispatch can be forced") {
    IsaGuard guard;
    simd::force_isa(simd::Isa::scalar);
    CHECK(simd::active_isa() == simd::Isa::scalar);
    CHECK(simd::isa_name(simd::Isa::scalar) == std::string("scalar"));
#ifdef SUBIC_HAVE_AVX2
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
        simd::force_isa(simd::Isa::avx2);
        CHECK(simd::active_isa() == simd::Isa::avx2);
    }
#endif
}

#ifdef SUBIC_HAVE_AVX2

TEST_CASE("avx2 kernels match the scalar reference") {
    if (!(__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))) return;
    std::mt19937_64 rng(31);
    for (size_t n : {size_t(0), size_t(1), size_t(3), size_t(4), size_t(7), size_t(8),
                     size_t(13), size_t(32), size_t(100), size_t(1001)}) {
        const auto a = random_vector(rng, n);
        const auto b = random_vector(rng, n);
        const double scale = std::max(1.0, std::abs(simd::ref::dot(a.data(), b.data(), n)));
        CHECK(std::abs(simd::avx2::dot(a.data(), b.data(), n) -
                       simd::ref::dot(a.data(), b.data(), n)) < 1e-12 * scale);
        CHECK(std::abs(simd::avx2::l2sqr(a.data(), b.data(), n) -
                       simd::ref::l2sqr(a.data(), b.data(), n)) <
              1e-12 * std::max(1.0, simd::ref::l2sqr(a.data(), b.data(), n)));

        auto y_ref = b, y_avx = b;
        simd::ref::axpy(1.75, a.data(), y_ref.data(), n);
        simd::avx2::axpy(1.75, a.data(), y_avx.data(), n);
        for (size_t i = 0; i < n; ++i) CHECK(std::abs(y_ref[i] - y_avx[i]) < 1e-14);
    }
}

TEST_CASE("gather_accumulate is exact across isas") {
    if (!(__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))) return;
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 50; ++trial) {
        std::uniform_int_distribution<uint32_t> um(1, 9), uk(2, 300);
        std::uniform_int_distribution<size_t> un(1, 600);
        const uint32_t m = um(rng), k = uk(rng);
        const size_t count = un(rng);
        const auto table = random_vector(rng, size_t(m) * k);
        std::vector<uint32_t> idx(count * m);
        std::uniform_int_distribution<uint32_t> ui(0, k - 1);
        for (auto& v : idx) v = ui(rng);

        std::vector<double> out_ref(count), out_avx(count);
        simd::ref::gather_accumulate(table.data(), m, k, idx.data(), count, out_ref.data());
        simd::avx2::gather_accumulate(table.data(), m, k, idx.data(), count, out_avx.data());
        for (size_t r = 0; r < count; ++r) CHECK(out_ref[r] == out_avx[r]);
    }
}

#endif  // SUBIC_HAVE_AVX2

TEST_CASE("dispatched kernels follow the forced isa") {
    IsaGuard guard;
    std::mt19937_64 rng(41);
    const auto a = random_vector(rng, 37);
    const auto b = random_vector(rng, 37);
    simd::force_isa(simd::Isa::scalar);
    const double scalar_dot = simd::dot(a.data(), b.data(), 37);
    CHECK(scalar_dot == simd::ref::dot(a.data(), b.data(), 37));
#ifdef SUBIC_HAVE_AVX2
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
        simd::force_isa(simd::Isa::avx2);
        CHECK(simd::dot(a.data(), b.data(), 37) == simd::avx2::dot(a.data(), b.data(), 37));
    }
#endif
}
