#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "gnsskit/corrections.hpp"
#include "gnsskit/raw.hpp"
#include "gnsskit/synth.hpp"

using namespace gnsskit;

TEST_CASE("raw csv round trip and epoch grouping") {
    RawGnssRecord a;
    a.time = GnssTime(2100, 345600.0);
    a.sat = {Constellation::GPS, 7, 0};
    a.pseudorange = 2.2e7;
    a.doppler = -1234.5;
    a.cn0 = 44.0;
    a.pr_std = 1.5;
    RawGnssRecord b = a;
    b.sat = {Constellation::GLONASS, 3, -2};
    b.carrier_phase = 1.1e8;
    b.pr_std.reset();
    RawGnssRecord c = a;
    c.time = a.time + 1.0;

    std::stringstream ss;
    ss << raw_csv_header() << "\n"
       << format_raw_line(a) << "\n"
       << format_raw_line(b) << "\n"
       << format_raw_line(c) << "\n";
    const auto r = parse_raw_records(ss);
    CHECK(r.skipped == 0);
    REQUIRE(r.epochs.size() == 2);
    REQUIRE(r.epochs[0].records.size() == 2);
    const auto& ra = r.epochs[0].records[0];
    CHECK(ra.pseudorange == Catch::Approx(2.2e7).margin(1e-5));
    CHECK(ra.doppler == Catch::Approx(-1234.5));
    CHECK(ra.pr_std);
    CHECK(*ra.pr_std == Catch::Approx(1.5));
    CHECK_FALSE(ra.carrier_phase);
    const auto& rb = r.epochs[0].records[1];
    CHECK(rb.sat.constellation == Constellation::GLONASS);
    CHECK(rb.sat.freq_channel == -2);
    CHECK_FALSE(rb.pr_std);
    REQUIRE(rb.carrier_phase);
    CHECK(*rb.carrier_phase == Catch::Approx(1.1e8));
}

TEST_CASE("raw csv rejects invalid rows with diagnostics") {
    std::stringstream ss;
    ss << raw_csv_header() << "\n"
       << "2100,345600.0,G,7,0,0.0,-100.0,,45.0,\n"          // zero pseudorange
       << "2100,345600.0,X,7,0,2.2e7,-100.0,,45.0,\n"        // bad constellation
       << "2100,345600.0,G,77,0,2.2e7,-100.0,,45.0,\n"       // bad PRN
       << "2100,345600.0,G,7,0,2.2e7,-100.0,,99.0,\n"        // cn0 out of range
       << "2100,345600.0,G,7,0,2.2e7,-100.0,,45.0,-1.0\n"    // negative pr_std
       << "2100,345599.0,G,7,0,2.2e7,-100.0,,45.0,\n"        // non-monotonic (vs none yet: ok)
       << "2100,345598.0,G,8,0,2.2e7,-100.0,,45.0,\n";       // now non-monotonic
    const auto r = parse_raw_records(ss);
    CHECK(r.skipped == 6);
    REQUIRE(r.epochs.size() == 1);
    CHECK(r.diagnostics.size() == 6);
    CHECK(r.diagnostics[0].find("line 2") != std::string::npos);
}

TEST_CASE("sagnac rotation identity and matrix oracle") {
    const Eigen::Vector3d p(1.5e7, -2.0e7, 1.0e7);
    CHECK((sagnac_rotate(p, 0.0) - p).norm() == 0.0);

    const double tau = 0.075;
    const Eigen::Matrix3d rot =
        Eigen::AngleAxisd(-OMEGA_EARTH * tau, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    CHECK((sagnac_rotate(p, tau) - rot * p).norm() < 1e-9);
}

namespace {

EphemerisStore toy_store(double af0 = 2e-5) {
    KeplerEphemeris eph;
    eph.toe = GnssTime(2100, 345600.0);
    eph.toc = eph.toe;
    eph.sqrt_a = std::sqrt(26560e3);
    eph.af0 = af0;
    EphemerisStore store;
    store.insert(SatId{Constellation::GPS, 1, 0}, eph);
    return store;
}

}  // namespace

TEST_CASE("transmit time solve matches a bisection oracle") {
    const EphemerisStore store = toy_store();
    RawGnssRecord rec;
    rec.time = GnssTime(2100, 345700.0);
    rec.sat = {Constellation::GPS, 1, 0};
    rec.pseudorange = 2.2e7;

    const TransmitSolution ts = transmit_time_solve(rec, store);

    // oracle: bisection on f(tau) = tau - pr/c - clk(t - tau)
    auto f = [&](double tau) {
        const SatState st = store.state_at(rec.sat, rec.time - tau);
        return tau - rec.pseudorange / SPEED_OF_LIGHT - st.clock_bias;
    };
    double lo = 0.05, hi = 0.1;
    REQUIRE(f(lo) < 0.0);
    REQUIRE(f(hi) > 0.0);
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    CHECK(ts.transit_time == Catch::Approx(0.5 * (lo + hi)).margin(1e-12));

    // returned state is the rotated state at the solved transmit time
    const SatState raw_state = store.state_at(rec.sat, rec.time - ts.transit_time);
    CHECK((ts.state.position - sagnac_rotate(raw_state.position, ts.transit_time)).norm() < 1e-9);
    CHECK(ts.t_transmit - (rec.time - ts.transit_time) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("azimuth and elevation geometry") {
    const GeodeticPosition g{37.0, -122.0, 0.0};
    const EcefPosition rx = geodetic_to_ecef(g);
    double az = 0.0, el = 0.0;

    // straight up
    const GeodeticPosition up{37.0, -122.0, 2.0e7};
    azel_of(rx, geodetic_to_ecef(up), az, el);
    CHECK(el == Catch::Approx(PI / 2.0).margin(1e-6));

    // due north on the local tangent plane
    const Eigen::Matrix3d ned = ned_matrix_at(g);
    azel_of(rx, EcefPosition(rx + ned.transpose() * Eigen::Vector3d(1e5, 0.0, 0.0)), az, el);
    CHECK(az == Catch::Approx(0.0).margin(1e-3));
    CHECK(std::abs(el) < 0.01);

    // due east
    azel_of(rx, EcefPosition(rx + ned.transpose() * Eigen::Vector3d(0.0, 1e5, 0.0)), az, el);
    CHECK(az == Catch::Approx(PI / 2.0).margin(1e-3));
}

TEST_CASE("klobuchar with zero coefficients reduces to the floor term") {
    IonoParams iono;
    iono.valid = true;  // all alpha/beta zero
    const GeodeticPosition g{37.0, -122.0, 0.0};
    for (double el_deg : {15.0, 30.0, 60.0, 90.0}) {
        const double el = el_deg * DEG2RAD;
        const double d = klobuchar_delay(iono, g, 0.5, el, GnssTime(2100, 100.0));
        // amplitude clamps at zero, period at 72000 s: the night-time floor
        CHECK(d >= SPEED_OF_LIGHT * 5e-9 * klobuchar_obliquity(el) * 0.999);
        CHECK(d <= SPEED_OF_LIGHT * 5e-9 * klobuchar_obliquity(el) * 1.25);
    }
}

TEST_CASE("klobuchar obliquity anchors") {
    // zenith: el_sc = 0.5, F = 1 + 16 * 0.03^3
    CHECK(klobuchar_obliquity(PI / 2.0) == Catch::Approx(1.0 + 16.0 * std::pow(0.03, 3)));
    // 5 degrees: el_sc = 5/180
    const double el_sc = 5.0 / 180.0;
    CHECK(klobuchar_obliquity(5.0 * DEG2RAD) ==
          Catch::Approx(1.0 + 16.0 * std::pow(0.53 - el_sc, 3)));
    // strictly decreasing in elevation
    double prev = klobuchar_obliquity(5.0 * DEG2RAD);
    for (double e = 10.0; e <= 90.0; e += 5.0) {
        const double cur = klobuchar_obliquity(e * DEG2RAD);
        REQUIRE(cur < prev);
        prev = cur;
    }
}

TEST_CASE("klobuchar daytime delay exceeds nighttime") {
    IonoParams iono;
    iono.valid = true;
    const double a[4] = {1.1e-8, -1.5e-8, -6.0e-8, 1.2e-7};
    const double b[4] = {1.2e5, -1.6e5, -6.6e4, 4.6e5};
    for (int i = 0; i < 4; ++i) {
        iono.alpha[i] = a[i];
        iono.beta[i] = b[i];
    }
    const GeodeticPosition g{37.0, -122.0, 0.0};
    // local time enters through tow + 4.32e4 * lambda_i; pick tows hitting
    // local noon and local 2am at this longitude
    const double lon_shift = -4.32e4 * (-122.0 / 180.0);
    const double day = klobuchar_delay(iono, g, 0.0, PI / 3.0, GnssTime(2100, 50400.0 + lon_shift));
    const double night =
        klobuchar_delay(iono, g, 0.0, PI / 3.0, GnssTime(2100, 7200.0 + lon_shift));
    CHECK(day > night);
    CHECK(day > 1.0);
    CHECK(day < 30.0);
    CHECK(night == Catch::Approx(SPEED_OF_LIGHT * 5e-9 * klobuchar_obliquity(PI / 3.0)));
}

TEST_CASE("saastamoinen zenith delay and mapping") {
    const GeodeticPosition sea{37.0, -122.0, 0.0};
    const double zenith = saastamoinen_delay(sea, PI / 2.0);
    CHECK(zenith > 2.2);
    CHECK(zenith < 2.6);

    // 1/sin mapping: delay at 30 degrees is exactly twice the zenith delay
    CHECK(saastamoinen_delay(sea, PI / 6.0) == Catch::Approx(2.0 * zenith).epsilon(1e-12));

    // thinner atmosphere above
    double prev = zenith;
    for (double h : {500.0, 1500.0, 3000.0, 6000.0}) {
        const double cur = saastamoinen_delay({37.0, -122.0, h}, PI / 2.0);
        REQUIRE(cur < prev);
        prev = cur;
    }
}

TEST_CASE("measurement weights") {
    RawGnssRecord rec;
    rec.cn0 = 45.0;
    CHECK(weight_of(rec, PI / 2.0) == Catch::Approx(1.0));          // sigma = 1 m anchor
    CHECK(weight_of(rec, PI / 6.0) == Catch::Approx(0.25));         // sigma doubles at 30 deg
    rec.cn0 = 25.0;
    CHECK(weight_of(rec, PI / 2.0) == Catch::Approx(0.01));         // -20 dB-Hz: sigma = 10 m
    rec.pr_std = 2.0;
    CHECK(weight_of(rec, PI / 6.0) == Catch::Approx(0.25));         // reported sigma wins
}

TEST_CASE("pseudorange rate recovers the generated range rate") {
    RawGnssRecord rec;
    rec.sat = {Constellation::GPS, 4, 0};
    const double rate = -512.25;
    rec.doppler = -rate / wavelength_of(rec.sat);
    CHECK(-wavelength_of(rec.sat) * rec.doppler == Catch::Approx(rate).epsilon(1e-12));

    rec.sat = {Constellation::GLONASS, 4, -5};
    rec.doppler = -rate / wavelength_of(rec.sat);
    CHECK(-wavelength_of(rec.sat) * rec.doppler == Catch::Approx(rate).epsilon(1e-12));
    // channel-dependent wavelength actually differs
    CHECK(wavelength_of({Constellation::GLONASS, 4, -5}) !=
          wavelength_of({Constellation::GLONASS, 4, 3}));
}

TEST_CASE("processed measurements close the forward model with atmosphere on") {
    SyntheticScene sc;
    sc.duration_s = 1.0;
    sc.rate_hz = 1.0;
    sc.atmosphere = true;
    const SyntheticDrive drive = generate_drive(sc);

    std::stringstream ss(drive.raw_csv);
    const auto parsed = parse_raw_records(ss);
    REQUIRE(parsed.epochs.size() == 1);

    const EcefPosition rx = drive.truth[0].position;
    const auto ms = process_epoch(parsed.epochs[0], drive.ephemeris, drive.iono, rx);
    REQUIRE(ms.size() >= 6);
    for (const auto& m : ms) {
        // corrected_pr - iono - tropo = geometric range + receiver clock bias
        const double lhs = m.corrected_pseudorange - m.iono_delay - m.tropo_delay;
        const double rhs = (m.sat_state.position - rx).norm() + sc.clock_bias_m;
        REQUIRE(std::abs(lhs - rhs) < 1e-5);
        REQUIRE(m.elevation > sc.elevation_mask_deg * DEG2RAD - 1e-9);
        REQUIRE(m.weight > 0.0);
    }
}

TEST_CASE("process_epoch diagnostics account for every input") {
    SyntheticScene sc;
    sc.duration_s = 1.0;
    sc.rate_hz = 1.0;
    const SyntheticDrive drive = generate_drive(sc);
    std::stringstream ss(drive.raw_csv);
    auto parsed = parse_raw_records(ss);
    REQUIRE(parsed.epochs.size() == 1);
    auto& epoch = parsed.epochs[0];

    // degrade one record below the C/N0 floor, point another at a missing SV
    REQUIRE(epoch.records.size() >= 3);
    epoch.records[0].cn0 = 10.0;
    epoch.records[1].sat.prn_or_slot = 31;
    epoch.records[1].sat.constellation = Constellation::GPS;

    ProcessConfig cfg;
    cfg.elevation_mask_deg = 85.0;  // kills everything else
    EpochDiagnostics diag;
    const auto ms =
        process_epoch(epoch, drive.ephemeris, drive.iono, drive.truth[0].position, cfg, &diag);
    CHECK(diag.n_input == static_cast<int>(epoch.records.size()));
    CHECK(diag.n_low_cn0 == 1);
    CHECK(diag.n_no_ephemeris >= 1);
    CHECK(diag.n_used == static_cast<int>(ms.size()));
    CHECK(diag.n_low_cn0 + diag.n_no_ephemeris + diag.n_below_mask + diag.n_used == diag.n_input);
}
