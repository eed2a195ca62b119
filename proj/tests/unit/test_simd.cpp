#include <cmath>
#include <vector>

#include "csc/random.hpp"
#include "csc/simd.hpp"
#include "doctest.h"

using namespace csc;

namespace {

std::vector<float> random_vec(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<float> v(n);
  for (float& x : v) x = static_cast<float>(uniform(rng, lo, hi));
  return v;
}

void check_close(const std::vector<float>& a, const std::vector<float>& b, double tol) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    INFO("index " << i);
    CHECK(std::abs(a[i] - b[i]) <= tol * (1.0 + std::abs(a[i])));
  }
}

std::vector<const simd::Kernels*> vector_tables() {
  std::vector<const simd::Kernels*> out;
  for (auto isa : {simd::Isa::avx2, simd::Isa::neon})
    if (const auto* k = simd::kernels_for(isa)) out.push_back(k);
  return out;
}

}  // namespace

TEST_CASE("scalar table is always available and dispatch picks a compiled table") {
  REQUIRE(simd::kernels_for(simd::Isa::scalar) == &simd::scalar::table);
  const auto& a = simd::active();
  CHECK(simd::kernels_for(a.isa) == &a);
  CHECK(simd::isa_name(a.isa) == std::string_view(a.name));
}

TEST_CASE("vector kernels match the scalar reference") {
  const auto& ref = simd::scalar::table;
  Rng rng(42);
  for (const auto* k : vector_tables()) {
    CAPTURE(k->name);
    for (std::size_t m : {1u, 3u, 8u, 17u})
      for (std::size_t kk : {1u, 7u, 16u, 33u})
        for (std::size_t n : {1u, 5u, 8u, 31u}) {
          const auto a = random_vec(rng, m * kk), b = random_vec(rng, kk * n), c0 = random_vec(rng, m * n);
          auto c_ref = c0, c_vec = c0;
          ref.gemm_nn(a.data(), b.data(), c_ref.data(), m, kk, n);
          k->gemm_nn(a.data(), b.data(), c_vec.data(), m, kk, n);
          check_close(c_ref, c_vec, 1e-5);

          const auto at = random_vec(rng, m * kk), bt = random_vec(rng, m * n), ct0 = random_vec(rng, kk * n);
          auto t_ref = ct0, t_vec = ct0;
          ref.gemm_tn(at.data(), bt.data(), t_ref.data(), m, kk, n);
          k->gemm_tn(at.data(), bt.data(), t_vec.data(), m, kk, n);
          check_close(t_ref, t_vec, 1e-5);

          const auto an = random_vec(rng, m * n), bn = random_vec(rng, kk * n), cn0 = random_vec(rng, m * kk);
          auto n_ref = cn0, n_vec = cn0;
          ref.gemm_nt(an.data(), bn.data(), n_ref.data(), m, n, kk);
          k->gemm_nt(an.data(), bn.data(), n_vec.data(), m, n, kk);
          check_close(n_ref, n_vec, 1e-5);
        }

    for (std::size_t n : {1u, 7u, 64u, 129u})
      for (std::size_t d : {1u, 2u, 9u, 50u}) {
        const auto x = random_vec(rng, n * d), q = random_vec(rng, d);
        std::vector<float> o_ref(n), o_vec(n);
        ref.sq_dists(x.data(), n, d, q.data(), o_ref.data());
        k->sq_dists(x.data(), n, d, q.data(), o_vec.data());
        check_close(o_ref, o_vec, 1e-5);
      }

    for (std::size_t n : {1u, 9u, 100u, 257u}) {
      const auto dist = random_vec(rng, n, 0.0, 40.0);
      for (float beta : {0.01f, 1.0f, 5.0f}) {
        std::vector<float> o_ref(n), o_vec(n);
        double s_ref, w_ref, s_vec, w_vec;
        ref.gaussian_row(dist.data(), n, beta, o_ref.data(), &s_ref, &w_ref);
        k->gaussian_row(dist.data(), n, beta, o_vec.data(), &s_vec, &w_vec);
        check_close(o_ref, o_vec, 1e-5);
        CHECK(s_vec == doctest::Approx(s_ref).epsilon(1e-5));
        CHECK(w_vec == doctest::Approx(w_ref).epsilon(1e-5));
      }
    }

    for (std::size_t n : {2u, 9u, 40u, 101u}) {
      const auto yx = random_vec(rng, n, -5, 5), yy = random_vec(rng, n, -5, 5);
      std::vector<float> p(n * n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) p[i * n + j] = p[j * n + i] = i == j ? 0.0f : static_cast<float>(uniform01(rng) / (n * n));
      std::vector<float> ax_r(n), ay_r(n), rx_r(n), ry_r(n), ax_v(n), ay_v(n), rx_v(n), ry_v(n);
      const double z_r = ref.tsne_forces(yx.data(), yy.data(), p.data(), n, ax_r.data(), ay_r.data(), rx_r.data(), ry_r.data());
      const double z_v = k->tsne_forces(yx.data(), yy.data(), p.data(), n, ax_v.data(), ay_v.data(), rx_v.data(), ry_v.data());
      CHECK(z_v == doctest::Approx(z_r).epsilon(1e-5));
      double scale = 0;
      for (std::size_t i = 0; i < n; ++i) scale = std::max({scale, (double)std::abs(rx_r[i]), (double)std::abs(ry_r[i])});
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(std::abs(rx_r[i] - rx_v[i]) <= 1e-5 * (1 + scale));
        CHECK(std::abs(ry_r[i] - ry_v[i]) <= 1e-5 * (1 + scale));
        CHECK(std::abs(ax_r[i] - ax_v[i]) <= 1e-6);
        CHECK(std::abs(ay_r[i] - ay_v[i]) <= 1e-6);
      }
    }

    for (std::size_t n : {1u, 8u, 13u, 300u}) {
      const auto xs = random_vec(rng, n, 0, 4), ys = random_vec(rng, n, 0, 4);
      std::vector<std::uint32_t> i_ref(n), i_vec(n);
      for (int trial = 0; trial < 5; ++trial) {
        const float qx = static_cast<float>(uniform(rng, 0, 4)), qy = static_cast<float>(uniform(rng, 0, 4));
        const std::size_t c_ref = ref.radius_2d(xs.data(), ys.data(), n, qx, qy, 1.0f, i_ref.data());
        const std::size_t c_vec = k->radius_2d(xs.data(), ys.data(), n, qx, qy, 1.0f, i_vec.data());
        REQUIRE(c_ref == c_vec);
        for (std::size_t i = 0; i < c_ref; ++i) CHECK(i_ref[i] == i_vec[i]);
      }
    }
  }
}

TEST_CASE("kernels are reproducible run to run") {
  const auto& k = simd::active();
  Rng rng(7);
  const auto a = random_vec(rng, 37 * 29), b = random_vec(rng, 29 * 11);
  std::vector<float> c1(37 * 11), c2(37 * 11);
  k.gemm_nn(a.data(), b.data(), c1.data(), 37, 29, 11);
  k.gemm_nn(a.data(), b.data(), c2.data(), 37, 29, 11);
  CHECK(c1 == c2);
}
