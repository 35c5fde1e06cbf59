#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "spectra/group.hpp"
#include "spectra/transform.hpp"

using namespace spectra;

namespace {

Level p2(int n) { return make_level(GroupDescriptor::padic(2, 1), n); }

GridFunction random_grid(const Level& lv, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    GridFunction f = GridFunction::zeros(lv);
    for (auto& z : f.v) z = {g(rng), g(rng)};
    return f;
}

GridFunction character_column(const Level& lv, std::int64_t canonical) {
    auto xi = dual_at(lv, canonical);
    GridFunction f = GridFunction::zeros(lv);
    for (std::int64_t x = 0; x < lv.m(); ++x)
        f.v[static_cast<std::size_t>(x)] = character(xi, lv.point_at(x), lv);
    return f;
}

double max_dev(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace

TEST_CASE("forward of the 2-point indicator", "[transform]") {
    Level lv = p2(1);
    GridFunction f{lv, {cplx(1, 0), cplx(0, 0)}};
    SpectrumFunction phi = forward(f);
    // oracle: direct 2-point sum gives (1/2, 1/2) on (0, 1/2)
    CHECK(std::abs(phi.v[0] - cplx(0.5, 0)) < 1e-15);
    CHECK(std::abs(phi.v[1] - cplx(0.5, 0)) < 1e-15);

    GridFunction back = inverse(phi);
    CHECK(std::abs(back.v[0] - cplx(1, 0)) < 1e-15);
    CHECK(std::abs(back.v[1]) < 1e-15);
}

TEST_CASE("forward of a constant is the dual delta, exactly", "[transform]") {
    for (const auto& lv : {p2(5), make_level(GroupDescriptor::padic(3, 1), 3),
                           make_level(GroupDescriptor::vilenkin({2, 3, 2, 3}), 4)}) {
        GridFunction one{lv, std::vector<cplx>(static_cast<std::size_t>(lv.m()), cplx(1, 0))};
        SpectrumFunction phi = forward(one);
        CHECK(phi.v[0] == cplx(1, 0));
        for (std::size_t i = 1; i < phi.v.size(); ++i) CHECK(phi.v[i] == cplx(0, 0));
    }
}

TEST_CASE("forward maps a character to its dual delta", "[transform]") {
    Level lv = p2(2);
    GridFunction f = character_column(lv, 2);  // xi = 1/4
    SpectrumFunction phi = forward(f);
    for (std::int64_t c = 0; c < lv.m(); ++c)
        CHECK(std::abs(phi.v[static_cast<std::size_t>(c)] - (c == 2 ? 1.0 : 0.0)) < 1e-15);
}

TEST_CASE("fast transform agrees with the naive double sum", "[transform]") {
    std::uint64_t seed = 11;
    for (const auto& lv :
         {p2(6), make_level(GroupDescriptor::padic(3, 1), 4),
          make_level(GroupDescriptor::padic(5, 1), 3),
          make_level(GroupDescriptor::padic(2, 2), 3),
          make_level(GroupDescriptor::padic(7, 1), 2),
          make_level(GroupDescriptor::vilenkin({2, 3, 4, 5}), 4),
          make_level(GroupDescriptor::vilenkin({6, 10}), 2)}) {
        for (int rep = 0; rep < 5; ++rep) {
            GridFunction f = random_grid(lv, seed++);
            CHECK(max_dev(forward(f).v, naive_forward(f).v) < 1e-12);
        }
    }
}

TEST_CASE("inverse(forward(f)) = f and Parseval holds", "[transform]") {
    std::uint64_t seed = 99;
    for (const auto& lv : {p2(10), make_level(GroupDescriptor::padic(3, 1), 6),
                           make_level(GroupDescriptor::vilenkin({2, 3, 2, 5, 3}), 5)}) {
        GridFunction f = random_grid(lv, seed++);
        SpectrumFunction phi = forward(f);
        CHECK(max_dev(inverse(phi).v, f.v) < 1e-12);

        double sum_hat = 0.0;
        for (const cplx& z : phi.v) sum_hat += std::norm(z);
        double sum_grid = 0.0;
        for (const cplx& z : f.v) sum_grid += std::norm(z);
        sum_grid /= static_cast<double>(lv.m());
        CHECK(std::abs(sum_hat - sum_grid) < 1e-12 * std::max(1.0, sum_grid));
    }
}

TEST_CASE("level-0 transform is the identity on one point", "[transform]") {
    Level lv = p2(0);
    GridFunction f{lv, {cplx(2.5, -1)}};
    CHECK(forward(f).v[0] == cplx(2.5, -1));
    CHECK(inverse(forward(f)).v[0] == cplx(2.5, -1));
}

TEST_CASE("lr_norm basics", "[transform]") {
    Level lv = p2(1);
    GridFunction c{lv, {cplx(3, 4), cplx(3, 4)}};
    CHECK(lr_norm(c, 1) == Catch::Approx(5.0));
    CHECK(lr_norm(c, 2) == Catch::Approx(5.0));
    CHECK(lr_norm(c, std::numeric_limits<double>::infinity()) == Catch::Approx(5.0));

    GridFunction f{lv, {cplx(1, 0), cplx(0, 0)}};
    CHECK(lr_norm(f, 2) == Catch::Approx(std::sqrt(0.5)));
    CHECK(lr_norm(f, std::numeric_limits<double>::infinity()) == 1.0);

    CHECK_THROWS_AS(lr_norm(f, 0.5), BadExponent);
}

TEST_CASE("sobolev_apply multiplier scales", "[transform]") {
    Level lv = p2(2);
    GridFunction f = random_grid(lv, 5);

    // J_0 = identity
    CHECK(max_dev(sobolev_apply(f, 0.0).v, f.v) < 1e-13);

    // D^1 chi_{1/2} = 2 chi_{1/2}  (eigenvalue ||1/2|| = 2)
    GridFunction chi = character_column(lv, 1);
    GridFunction d1 = sobolev_apply(chi, 1.0, FrequencyScale::vladimirov);
    for (std::size_t i = 0; i < chi.v.size(); ++i)
        CHECK(std::abs(d1.v[i] - 2.0 * chi.v[i]) < 1e-13);

    // J_s then J_{-s} = identity
    GridFunction round = sobolev_apply(sobolev_apply(f, 1.7), -1.7);
    CHECK(max_dev(round.v, f.v) < 1e-12);

    // composition J_s J_t = J_{s+t}
    GridFunction lhs = sobolev_apply(sobolev_apply(f, 0.9), 1.3);
    GridFunction rhs = sobolev_apply(f, 2.2);
    CHECK(max_dev(lhs.v, rhs.v) < 1e-12);
}

TEST_CASE("sobolev_norm examples", "[transform]") {
    Level lv = p2(2);
    GridFunction f = random_grid(lv, 17);
    CHECK(sobolev_norm(f, 0.0, 2.0) == Catch::Approx(lr_norm(f, 2.0)));

    GridFunction chi = character_column(lv, 2);  // <1/4> = 4
    CHECK(sobolev_norm(chi, 1.0, 2.0) == Catch::Approx(4.0));

    GridFunction one{lv, std::vector<cplx>(4, cplx(1, 0))};
    CHECK(sobolev_norm(one, 3.7, 2.0) == Catch::Approx(1.0));
}

TEST_CASE("square function of a single character has modulus one", "[transform]") {
    Level lv = p2(3);
    GridFunction chi = character_column(lv, 5);
    GridFunction s = square_function(chi);
    for (const cplx& z : s.v) CHECK(std::abs(z - 1.0) < 1e-12);
}

TEST_CASE("square function preserves the L2 norm over disjoint shells", "[transform]") {
    for (const auto& lv : {p2(3), make_level(GroupDescriptor::vilenkin({3, 2, 4}), 3)}) {
        GridFunction f = random_grid(lv, 23);
        CHECK(lr_norm(square_function(f), 2.0) == Catch::Approx(lr_norm(f, 2.0)).epsilon(1e-12));
    }
}

TEST_CASE("square function L^r ratios stay within recorded bounds", "[transform]") {
    // empirical Littlewood-Paley constants at p=2, N=3: recorded, not asserted sharp
    Level lv = p2(3);
    double lo = 1e9, hi = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        GridFunction f = random_grid(lv, 100 + static_cast<std::uint64_t>(rep));
        for (double r : {1.5, 3.0}) {
            const double ratio = lr_norm(square_function(f), r) / lr_norm(f, r);
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
        }
    }
    INFO("empirical square-function ratio range: [" << lo << ", " << hi << "]");
    CHECK(lo > 0.0);
    CHECK(hi < 10.0);
}

TEST_CASE("embedding constant closed forms", "[transform]") {
    CHECK(embedding_constant(p2(1), 2.0, 2.0) ==
          Catch::Approx(std::sqrt(1.0 + 1.0 / 16.0)).epsilon(1e-14));
    CHECK(embedding_constant(p2(2), 1.0, 2.0) ==
          Catch::Approx(std::sqrt(1.375)).epsilon(1e-14));
    // s -> inf leaves only the trivial character
    CHECK(embedding_constant(p2(3), 60.0, 2.0) == Catch::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(embedding_constant(p2(2), 0.5, 2.0), BadExponent);
    CHECK_THROWS_AS(embedding_constant(make_level(GroupDescriptor::padic(2, 2), 2), 1.0, 2.0),
                    BadExponent);
}

TEST_CASE("embedding inequality holds for random functions", "[transform]") {
    Level lv = p2(4);
    const double s = 1.0, r = 2.0;
    const double c = embedding_constant(lv, s, r);
    for (int rep = 0; rep < 25; ++rep) {
        GridFunction f = random_grid(lv, 900 + static_cast<std::uint64_t>(rep));
        const double lhs = lr_norm(f, std::numeric_limits<double>::infinity());
        const double rhs = c * sobolev_norm(f, s, r);
        CHECK(lhs <= rhs * (1.0 + 1e-12));
    }
}
