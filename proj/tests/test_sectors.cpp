#include "doctest.h"

#include <cmath>
#include <complex>

#include "halfline/sectors.hpp"

using halfline::Complex;

namespace {

Complex ray(double deg) { return std::polar(1.0, deg * halfline::pi() / 180.0); }

// Reference comparator: ordering of Re(lambda b_j) at a sampled lambda.
bool ordered_at(const std::vector<Complex>& b, const std::vector<int>& perm,
                Complex lambda) {
    for (size_t i = 0; i + 1 < perm.size(); ++i) {
        double hi = (lambda * b[perm[i]]).real();
        double lo = (lambda * b[perm[i + 1]]).real();
        if (hi < lo - 1e-10) return false;
    }
    return true;
}

}  // namespace

TEST_SUITE("sectors") {

TEST_CASE("two distinct b on the real axis: four quarter-plane-like sectors") {
    std::vector<Complex> b = {Complex(1.0, 0.0), Complex(-1.0, 0.0)};
    auto geo = halfline::compute_sectors(b);
    REQUIRE(geo.sectors.size() == 2);
    // rays at arg = pi/2 and 3pi/2 split the plane in two half-planes;
    // Re(lambda(b1-b2)) = 2 Re(lambda) changes sign there.
    for (const auto& s : geo.sectors) {
        CHECK(s.arc.width() == doctest::Approx(halfline::pi()).epsilon(1e-12));
        Complex mid = std::polar(1.0, s.arc.midpoint());
        CHECK(ordered_at(b, s.perm, mid));
    }
    const auto& right = geo.locate(Complex(1.0, 0.1));
    CHECK(right.perm == std::vector<int>{0, 1});
    const auto& left = geo.locate(Complex(-1.0, 0.1));
    CHECK(left.perm == std::vector<int>{1, 0});
}

TEST_CASE("equal b degenerates to the full plane") {
    auto geo = halfline::compute_sectors({Complex(2.0, 0.0), Complex(2.0, 0.0)});
    CHECK(geo.full_plane);
    REQUIRE(geo.sectors.size() == 1);
    CHECK(geo.sectors[0].perm == std::vector<int>{0, 1});
    CHECK(geo.sectors[0].arc.width() == doctest::Approx(2.0 * halfline::pi()));
}

TEST_CASE("cube roots of unity: six sectors of opening pi/3") {
    auto b = halfline::roots_of_unity_ordered(3);
    auto geo = halfline::compute_sectors(b);
    REQUIRE(geo.sectors.size() == 6);
    for (const auto& s : geo.sectors) {
        CHECK(s.arc.width() == doctest::Approx(halfline::pi() / 3.0).epsilon(1e-12));
        Complex mid = std::polar(1.0, s.arc.midpoint());
        CHECK(ordered_at(b, s.perm, mid));
    }
    // kappa = 1 must be the sector starting at arg lambda = 0.
    const auto& s1 = geo.by_kappa(1);
    CHECK(s1.arc.lo == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(s1.arc.hi == doctest::Approx(halfline::pi() / 3.0).epsilon(1e-12));

    // formula geometry agrees with the computed one
    auto fg = halfline::formula_sectors(3);
    REQUIRE(fg.sectors.size() == 6);
    for (int k = 1; k <= 6; ++k) {
        const auto& a = geo.by_kappa(k);
        const auto& f = fg.by_kappa(k);
        CHECK(a.arc.lo == doctest::Approx(f.arc.lo).epsilon(1e-12));
        CHECK(a.arc.hi == doctest::Approx(f.arc.hi).epsilon(1e-12));
        CHECK(a.perm == f.perm);
    }
}

TEST_CASE("fourth roots: eight sectors, permutations flip pairwise across rays") {
    auto b = halfline::roots_of_unity_ordered(4);
    auto geo = halfline::compute_sectors(b);
    REQUIRE(geo.sectors.size() == 8);
    // adjacent sectors differ by one adjacent transposition or more, but the
    // ordering is valid strictly inside each sector
    for (const auto& s : geo.sectors) {
        Complex lo = std::polar(1.0, s.arc.lo + 0.02);
        Complex hi = std::polar(1.0, s.arc.hi - 0.02);
        CHECK(ordered_at(b, s.perm, lo));
        CHECK(ordered_at(b, s.perm, hi));
    }
    auto fg = halfline::formula_sectors(4);
    for (int k = 1; k <= 8; ++k) CHECK(geo.by_kappa(k).perm == fg.by_kappa(k).perm);
}

TEST_CASE("locate on a boundary ray returns a sector whose closure contains it") {
    auto geo = halfline::compute_sectors(halfline::roots_of_unity_ordered(3));
    Complex boundary = std::polar(1.0, halfline::pi() / 3.0);
    const auto& s = geo.locate(boundary);
    CHECK(s.arc.contains_closure(boundary));
    CHECK_THROWS(geo.locate(Complex(0.0, 0.0)));
}

TEST_CASE("neighboring-sector data for n = 4, m = 2") {
    auto spec = halfline::make_system(4, halfline::roots_of_unity_ordered(4),
                                      halfline::CoeffMatrix(4), {},
                                      halfline::WeightFunction());
    auto ls = halfline::large_sector(spec, 2);
    CHECK(ls.sigma == 8);
    // Omega_2 = (-pi/4, pi/4), Lambda = (-pi/8, pi/8)
    CHECK(ls.omega_region.lo == doctest::Approx(-halfline::pi() / 4.0));
    CHECK(ls.omega_region.hi == doctest::Approx(halfline::pi() / 4.0));
    CHECK(ls.lambda_region.lo == doctest::Approx(-halfline::pi() / 8.0));
    CHECK(ls.lambda_region.hi == doctest::Approx(halfline::pi() / 8.0));
    // omega on Lambda: b_2 e^{i pi/4} = e^{-i pi/2} e^{i pi/4} = e^{-i pi/4}
    CHECK(std::abs(ls.omega_mid - std::polar(1.0, -halfline::pi() / 4.0)) < 1e-14);
    CHECK(std::abs(ls.omega_gamma1 - Complex(0.0, -1.0)) < 1e-15);     // b_2
    CHECK(std::abs(ls.omega_gammasigma - Complex(0.0, 1.0)) < 1e-15);  // b_3
}

TEST_CASE("neighboring-sector data for n = 4, m = 3 and n = 3, m = 3") {
    auto spec4 = halfline::make_system(4, halfline::roots_of_unity_ordered(4),
                                       halfline::CoeffMatrix(4), {},
                                       halfline::WeightFunction());
    auto ls3 = halfline::large_sector(spec4, 3);
    CHECK(ls3.sigma == 2);
    CHECK(ls3.lambda_region.lo == doctest::Approx(halfline::pi() / 8.0));
    CHECK(ls3.lambda_region.hi == doctest::Approx(3.0 * halfline::pi() / 8.0));
    // omega on Lambda: b_3 e^{-i pi/4} = e^{i pi/2} e^{-i pi/4} = e^{i pi/4}
    CHECK(std::abs(ls3.omega_mid - std::polar(1.0, halfline::pi() / 4.0)) < 1e-14);
    CHECK(std::abs(ls3.omega_gamma1 - Complex(0.0, 1.0)) < 1e-15); // b_3
    CHECK(std::abs(ls3.omega_gammasigma - Complex(-1.0, 0.0)) < 1e-15); // b_4

    auto spec3 = halfline::make_system(3, halfline::roots_of_unity_ordered(3),
                                       halfline::CoeffMatrix(3), {},
                                       halfline::WeightFunction());
    auto lsn = halfline::large_sector(spec3, 3); // m = n: omega_gammasigma = b_n
    CHECK(std::abs(lsn.omega_gamma1 - std::polar(1.0, 2.0 * halfline::pi() / 3.0)) <
          1e-14);
    CHECK(std::abs(lsn.omega_gammasigma - lsn.omega_gamma1) < 1e-14);

    CHECK_THROWS_AS(halfline::large_sector(spec4, 1), std::invalid_argument);
    CHECK_THROWS_AS(halfline::large_sector(spec4, 5), std::invalid_argument);
}

TEST_CASE("ordering check: slack signs across a sector boundary") {
    auto b = halfline::roots_of_unity_ordered(2); // (1, -1)
    // omega = b_2: the l = pivot row pins the slack at exactly zero, and the
    // check degrades to the j < pivot inequality Re(lambda) >= -Re(lambda).
    auto ok = halfline::check_ordering(b, 1, b[1], ray(10.0));
    CHECK(ok.ok);
    CHECK(ok.min_slack == doctest::Approx(0.0));
    auto bad = halfline::check_ordering(b, 1, b[1], ray(100.0));
    CHECK_FALSE(bad.ok);
    CHECK(bad.min_slack < 0.0);

    // mid-sector weight omega = -i separates strictly inside the wedge
    auto strict = halfline::check_ordering(b, 1, Complex(0.0, -1.0), ray(-10.0));
    CHECK(strict.ok);
    CHECK(strict.min_slack > 0.5);
}

}
