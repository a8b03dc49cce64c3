#include <doctest.h>

#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "omicscl/special.hpp"

TEST_CASE("chi-square tail at textbook critical values") {
    CHECK(omicscl::chi2_sf(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-10));
    CHECK(omicscl::chi2_sf(6.634896601021214, 1) == doctest::Approx(0.01).epsilon(1e-10));
    CHECK(omicscl::chi2_sf(7.814727903251178, 3) == doctest::Approx(0.05).epsilon(1e-10));
    CHECK(omicscl::chi2_sf(0.0, 4) == 1.0);
}

TEST_CASE("df = 2 has the closed form exp(-x/2)") {
    for (double x : {0.1, 1.0, 5.0, 20.0, 80.0}) CHECK(omicscl::chi2_sf(x, 2) == doctest::Approx(std::exp(-x / 2)).epsilon(1e-12));
}

TEST_CASE("incomplete gamma matches Boost across both branches") {
    for (double a : {0.5, 1.0, 1.5, 2.0, 4.0, 10.0, 25.0})
        for (double x : {0.01, 0.3, 1.0, 2.5, 7.0, 15.0, 40.0, 120.0}) {
            const double q = boost::math::gamma_q(a, x);
            CHECK(omicscl::gamma_q(a, x) == doctest::Approx(q).epsilon(1e-10));
            CHECK(omicscl::gamma_p(a, x) + omicscl::gamma_q(a, x) == doctest::Approx(1.0).epsilon(1e-14));
        }
}

TEST_CASE("invalid arguments throw") {
    CHECK_THROWS(omicscl::chi2_sf(-1.0, 1));
    CHECK_THROWS(omicscl::chi2_sf(1.0, 0));
}
