#include <catch2/catch_amalgamated.hpp>

#include "gnsskit/time.hpp"

using namespace gnsskit;

TEST_CASE("GnssTime normalization keeps tow in range") {
    const GnssTime t(100, 604800.0 + 5.0);
    CHECK(t.week == 101);
    CHECK(t.tow == Catch::Approx(5.0));

    const GnssTime u(100, -1.0);
    CHECK(u.week == 99);
    CHECK(u.tow == Catch::Approx(604799.0));
}

TEST_CASE("differencing is antisymmetric across week rollover") {
    const GnssTime t1(2099, 604799.5);
    const GnssTime t2(2100, 0.5);
    CHECK(t2 - t1 == Catch::Approx(1.0));
    CHECK((t2 - t1) == -(t1 - t2));
    CHECK(t1 < t2);
}

TEST_CASE("arithmetic round trips") {
    const GnssTime t(2100, 100.0);
    CHECK(((t + 604800.0) - t) == Catch::Approx(604800.0));
    CHECK((t + 10.0) - (t - 10.0) == Catch::Approx(20.0));
}

TEST_CASE("civil conversion hits known week boundaries") {
    const GnssTime epoch = civil_to_gnss(1980, 1, 6, 0, 0, 0.0);
    CHECK(epoch.week == 0);
    CHECK(epoch.tow == Catch::Approx(0.0));

    const GnssTime w1 = civil_to_gnss(1980, 1, 13, 0, 0, 0.0);
    CHECK(w1.week == 1);

    // start of GPS week 2048
    const GnssTime w2048 = civil_to_gnss(2019, 4, 7, 0, 0, 0.0);
    CHECK(w2048.week == 2048);
    CHECK(w2048.tow == Catch::Approx(0.0));

    const GnssTime mid = civil_to_gnss(2019, 4, 9, 12, 30, 15.5);
    CHECK(mid.week == 2048);
    CHECK(mid.tow == Catch::Approx(2.0 * 86400.0 + 12 * 3600.0 + 30 * 60.0 + 15.5));
}
