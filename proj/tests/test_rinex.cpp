#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "gnsskit/rinex.hpp"
#include "gnsskit/synth.hpp"

using namespace gnsskit;

namespace {
const char* kHeader3 =
    "     3.04           N: GNSS NAV DATA    M: MIXED            RINEX VERSION / TYPE\n"
    "                                                            END OF HEADER\n";
}

TEST_CASE("empty body with valid header parses to empty list") {
    std::stringstream ss(kHeader3);
    const auto r = parse_rinex_nav(ss);
    CHECK(r.records.empty());
    CHECK(r.skipped == 0);
}

TEST_CASE("missing header is an error") {
    std::stringstream ss("G01 2020 01 01 00 00 00 0.0 0.0 0.0\n");
    CHECK_THROWS_AS(parse_rinex_nav(ss), HeaderMissing);
}

TEST_CASE("unsupported version is an error") {
    std::stringstream ss(
        "     4.10           N: GNSS NAV DATA    M: MIXED            RINEX VERSION / TYPE\n"
        "                                                            END OF HEADER\n");
    CHECK_THROWS_AS(parse_rinex_nav(ss), UnsupportedVersion);
}

TEST_CASE("hand-written RINEX 3 GPS record round trips exactly") {
    // D-exponent notation must be handled
    std::string body =
        "G07 2020 04 12 02 00 00 1.234000000000D-05-2.500000000000D-12 0.000000000000D+00\n"
        "     5.100000000000D+01 6.250000000000D+01 4.300000000000D-09 1.500000000000D+00\n"
        "     3.300000000000D-06 1.230000000000D-02 7.700000000000D-06 5.153700000000D+03\n"
        "     7.200000000000D+03 9.500000000000D-08 2.300000000000D+00-1.100000000000D-07\n"
        "     9.600000000000D-01 2.100000000000D+02 1.100000000000D+00-7.900000000000D-09\n"
        "     4.100000000000D-10 0.000000000000D+00 2.100000000000D+03 0.000000000000D+00\n"
        "     2.000000000000D+00 0.000000000000D+00 5.600000000000D-09 0.000000000000D+00\n"
        "     0.000000000000D+00 4.000000000000D+00 0.000000000000D+00 0.000000000000D+00\n";
    std::stringstream ss(std::string(kHeader3) + body);
    const auto r = parse_rinex_nav(ss);
    REQUIRE(r.records.size() == 1);
    REQUIRE(r.skipped == 0);
    const auto& [sat, any] = r.records[0];
    CHECK(sat.constellation == Constellation::GPS);
    CHECK(sat.prn_or_slot == 7);
    const auto& e = std::get<KeplerEphemeris>(any);
    CHECK(e.af0 == Catch::Approx(1.234e-05).epsilon(1e-15));
    CHECK(e.af1 == Catch::Approx(-2.5e-12).epsilon(1e-15));
    CHECK(e.crs == Catch::Approx(62.5));
    CHECK(e.delta_n == Catch::Approx(4.3e-9));
    CHECK(e.m0 == Catch::Approx(1.5));
    CHECK(e.cuc == Catch::Approx(3.3e-6));
    CHECK(e.e == Catch::Approx(1.23e-2));
    CHECK(e.sqrt_a == Catch::Approx(5153.7));
    CHECK(e.toe.tow == Catch::Approx(7200.0));
    CHECK(e.toe.week == 2100);
    CHECK(e.omega0 == Catch::Approx(2.3));
    CHECK(e.cis == Catch::Approx(-1.1e-7));
    CHECK(e.i0 == Catch::Approx(0.96));
    CHECK(e.crc == Catch::Approx(210.0));
    CHECK(e.omega == Catch::Approx(1.1));
    CHECK(e.omega_dot == Catch::Approx(-7.9e-9));
    CHECK(e.idot == Catch::Approx(4.1e-10));
    CHECK(e.tgd == Catch::Approx(5.6e-9));
    // toc: 2020-04-12 is in week 2101, day 0
    CHECK(e.toc.week == 2101);
    CHECK(e.toc.tow == Catch::Approx(7200.0));
}

TEST_CASE("truncated record is skipped with a line diagnostic") {
    std::string body =
        "G07 2020 04 12 02 00 00 1.234000000000D-05 0.000000000000D+00 0.000000000000D+00\n"
        "     5.100000000000D+01 6.250000000000D+01 4.300000000000D-09 1.500000000000D+00\n";
    std::stringstream ss(std::string(kHeader3) + body);
    const auto r = parse_rinex_nav(ss);
    CHECK(r.records.empty());
    CHECK(r.skipped == 1);
    REQUIRE(r.diagnostics.size() == 1);
    CHECK(r.diagnostics[0].find("line 3") != std::string::npos);
}

TEST_CASE("RINEX 3 GLONASS record parses with UTC to GPS conversion") {
    std::string body =
        "R05 2020 04 12 00 15 00-6.100000000000D-05 9.090000000000D-13 0.000000000000D+00\n"
        "     1.123400000000D+04 1.250000000000D+00 9.300000000000D-10 0.000000000000D+00\n"
        "     2.100000000000D+04-2.330000000000D+00 1.860000000000D-09 1.000000000000D+00\n"
        "    -8.100000000000D+03 3.100000000000D+00-2.790000000000D-09 0.000000000000D+00\n";
    std::stringstream ss(std::string(kHeader3) + body);
    const auto r = parse_rinex_nav(ss, 18.0);
    REQUIRE(r.records.size() == 1);
    const auto& [sat, any] = r.records[0];
    CHECK(sat.constellation == Constellation::GLONASS);
    CHECK(sat.prn_or_slot == 5);
    CHECK(sat.freq_channel == 1);
    const auto& e = std::get<GlonassEphemeris>(any);
    CHECK(e.tau_n == Catch::Approx(6.1e-5));
    CHECK(e.gamma_n == Catch::Approx(9.09e-13));
    CHECK(e.position.x() == Catch::Approx(1.12340e7));
    CHECK(e.position.y() == Catch::Approx(2.1e7));
    CHECK(e.position.z() == Catch::Approx(-8.1e6));
    CHECK(e.velocity.x() == Catch::Approx(1250.0));
    CHECK(e.acceleration.z() == Catch::Approx(-2.79e-6));
    // tb = UTC epoch + leap seconds
    const GnssTime utc = civil_to_gnss(2020, 4, 12, 0, 15, 0.0);
    CHECK(e.tb - utc == Catch::Approx(18.0));
}

TEST_CASE("RINEX 2 GPS record parses") {
    std::string content =
        "     2.11           N: GPS NAV DATA                         RINEX VERSION / TYPE\n"
        "                                                            END OF HEADER\n"
        " 7 20  4 12  2  0  0.0 1.234000000000D-05-2.500000000000D-12 0.000000000000D+00\n"
        "    5.100000000000D+01 6.250000000000D+01 4.300000000000D-09 1.500000000000D+00\n"
        "    3.300000000000D-06 1.230000000000D-02 7.700000000000D-06 5.153700000000D+03\n"
        "    7.200000000000D+03 9.500000000000D-08 2.300000000000D+00-1.100000000000D-07\n"
        "    9.600000000000D-01 2.100000000000D+02 1.100000000000D+00-7.900000000000D-09\n"
        "    4.100000000000D-10 0.000000000000D+00 2.100000000000D+03 0.000000000000D+00\n"
        "    2.000000000000D+00 0.000000000000D+00 5.600000000000D-09 0.000000000000D+00\n"
        "    0.000000000000D+00 4.000000000000D+00 0.000000000000D+00 0.000000000000D+00\n";
    std::stringstream ss(content);
    const auto r = parse_rinex_nav(ss);
    REQUIRE(r.records.size() == 1);
    const auto& e = std::get<KeplerEphemeris>(r.records[0].second);
    CHECK(e.sqrt_a == Catch::Approx(5153.7));
    CHECK(e.m0 == Catch::Approx(1.5));
}

TEST_CASE("iono coefficients from RINEX 3 header") {
    std::string content =
        "     3.04           N: GNSS NAV DATA    M: MIXED            RINEX VERSION / TYPE\n"
        "GPSA   1.1176D-08 -7.4506D-09 -5.9605D-08  1.1921D-07       IONOSPHERIC CORR\n"
        "GPSB   1.1674D+05 -2.2938D+05 -1.3107D+05  1.0486D+06       IONOSPHERIC CORR\n"
        "                                                            END OF HEADER\n";
    std::stringstream ss(content);
    const auto r = parse_rinex_nav(ss);
    CHECK(r.iono.valid);
    CHECK(r.iono.alpha[0] == Catch::Approx(1.1176e-8));
    CHECK(r.iono.beta[3] == Catch::Approx(1.0486e6));
}

TEST_CASE("writer output reparses to identical fields") {
    SyntheticScene sc;
    sc.n_sats = 6;
    const auto records = synth_detail::make_constellation(sc);
    std::stringstream ss;
    write_rinex3_gps_nav(ss, records);
    const auto r = parse_rinex_nav(ss);
    REQUIRE(r.records.size() == records.size());
    CHECK(r.skipped == 0);
    for (size_t i = 0; i < records.size(); ++i) {
        const auto& orig = records[i].second;
        const auto& back = std::get<KeplerEphemeris>(r.records[i].second);
        CHECK(back.sqrt_a == Catch::Approx(orig.sqrt_a).epsilon(1e-12));
        CHECK(back.e == Catch::Approx(orig.e).epsilon(1e-12));
        CHECK(back.m0 == Catch::Approx(orig.m0).epsilon(1e-12));
        CHECK(back.omega0 == Catch::Approx(orig.omega0).epsilon(1e-12));
        CHECK(back.af0 == Catch::Approx(orig.af0).epsilon(1e-12));
        CHECK(back.toe.week == orig.toe.week);
        CHECK(back.toe.tow == Catch::Approx(orig.toe.tow).margin(1e-6));
    }
}
