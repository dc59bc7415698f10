#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <sstream>

#include "gnsskit/synth.hpp"
#include "gnsskit/wls.hpp"

using namespace gnsskit;

TEST_CASE("noiseless drives are recovered to sub-micrometer by wls") {
    SyntheticScene sc;
    sc.duration_s = 5.0;
    sc.rate_hz = 2.0;
    const SyntheticDrive drive = generate_drive(sc);

    std::stringstream ss(drive.raw_csv);
    const auto parsed = parse_raw_records(ss);
    REQUIRE(parsed.epochs.size() == 10);
    REQUIRE(parsed.skipped == 0);

    // the drive carries no atmosphere, so the corrections must stay off
    ProcessConfig cfg;
    cfg.apply_iono = cfg.apply_tropo = false;
    for (size_t k = 0; k < parsed.epochs.size(); ++k) {
        const EcefPosition truth = drive.truth[k].position;
        const auto ms = process_epoch(parsed.epochs[k], drive.ephemeris, drive.iono, truth, cfg);
        REQUIRE(ms.size() >= 5);
        const PvtSolution sol = wls_solve(ms, truth);
        const double t = static_cast<double>(k) / sc.rate_hz;
        REQUIRE((sol.position - truth).norm() < 1e-6);
        REQUIRE(std::abs(sol.clock_bias - (sc.clock_bias_m + sc.clock_drift_ms * t)) < 1e-6);
        // doppler-derived velocity against the constant truth velocity;
        // earth-rotation rate terms leave a few mm/s
        REQUIRE((sol.velocity - scene_velocity_ecef(sc)).norm() < 2e-2);
        REQUIRE(std::abs(sol.clock_drift - sc.clock_drift_ms) < 2e-2);
    }
}

TEST_CASE("generation is bit-identical for a fixed seed") {
    SyntheticScene sc;
    sc.duration_s = 3.0;
    sc.rate_hz = 2.0;
    sc.pr_sigma_m = 2.0;
    sc.rate_sigma_ms = 0.05;
    const SyntheticDrive a = generate_drive(sc);
    const SyntheticDrive b = generate_drive(sc);
    CHECK(a.raw_csv == b.raw_csv);
    CHECK(a.truth_pose_csv == b.truth_pose_csv);
    CHECK(a.rinex_nav == b.rinex_nav);

    SyntheticScene other = sc;
    other.seed = 2;
    CHECK(generate_drive(other).raw_csv != a.raw_csv);
}

TEST_CASE("finite differences of pseudoranges match the generated rates") {
    SyntheticScene sc;
    sc.duration_s = 3.0;
    sc.rate_hz = 10.0;
    const SyntheticDrive drive = generate_drive(sc);
    std::stringstream ss(drive.raw_csv);
    const auto parsed = parse_raw_records(ss);
    const double dt = 1.0 / sc.rate_hz;

    // per satellite: central difference of the pseudorange time series
    std::map<int, std::map<size_t, const RawGnssRecord*>> by_sat;
    for (size_t k = 0; k < parsed.epochs.size(); ++k)
        for (const auto& r : parsed.epochs[k].records) by_sat[r.sat.prn_or_slot][k] = &r;

    int checked = 0;
    for (const auto& [prn, series] : by_sat) {
        for (const auto& [k, rec] : series) {
            const auto prev = series.find(k - 1);
            const auto next = series.find(k + 1);
            if (k == 0 || prev == series.end() || next == series.end()) continue;
            const double fd = (next->second->pseudorange - prev->second->pseudorange) / (2.0 * dt);
            const double rate = -wavelength_of(rec->sat) * rec->doppler;
            REQUIRE(std::abs(fd - rate) < 1e-3);
            ++checked;
        }
    }
    CHECK(checked > 100);
}

TEST_CASE("emitted pr_std reflects the configured noise") {
    SyntheticScene sc;
    sc.duration_s = 1.0;
    sc.rate_hz = 1.0;
    sc.pr_sigma_m = 2.0;
    const SyntheticDrive noisy = generate_drive(sc);
    std::stringstream ss(noisy.raw_csv);
    const auto parsed = parse_raw_records(ss);
    for (const auto& r : parsed.epochs[0].records) {
        REQUIRE(r.pr_std);
        REQUIRE(*r.pr_std == 2.0);
    }

    sc.pr_sigma_m = 0.0;
    const SyntheticDrive clean = generate_drive(sc);
    std::stringstream ss2(clean.raw_csv);
    for (const auto& r : parse_raw_records(ss2).epochs[0].records) REQUIRE(!r.pr_std);
}

TEST_CASE("truth pose csv and rinex are consistent with the drive") {
    SyntheticScene sc;
    sc.duration_s = 2.0;
    sc.rate_hz = 1.0;
    const SyntheticDrive drive = generate_drive(sc);

    std::stringstream ps(drive.truth_pose_csv);
    const auto poses = read_pose_csv(ps);
    REQUIRE(poses.size() == drive.truth.size());
    for (size_t i = 0; i < poses.size(); ++i)
        REQUIRE((poses[i].position - drive.truth[i].position).norm() < 1e-4);

    std::stringstream ns(drive.rinex_nav);
    const auto nav = parse_rinex_nav(ns);
    CHECK(nav.records.size() == static_cast<size_t>(sc.n_sats));
    CHECK(nav.skipped == 0);
}

TEST_CASE("scene config parsing") {
    std::stringstream ss(
        "# drive description\n"
        "seed = 42\n"
        "n_sats = 12   # trailing comment\n"
        "duration_s = 30\n"
        "rate_hz = 5\n"
        "vel_north = 10.5\n"
        "vel_east = -2.0\n"
        "pr_sigma_m = 1.5\n"
        "atmosphere = true\n"
        "start_lat_deg = 48.1\n"
        "\n");
    const SyntheticScene sc = parse_scene_config(ss);
    CHECK(sc.seed == 42);
    CHECK(sc.n_sats == 12);
    CHECK(sc.duration_s == 30.0);
    CHECK(sc.rate_hz == 5.0);
    CHECK(sc.vel_ned.x() == 10.5);
    CHECK(sc.vel_ned.y() == -2.0);
    CHECK(sc.pr_sigma_m == 1.5);
    CHECK(sc.atmosphere);
    CHECK(sc.start.lat_deg == 48.1);

    std::stringstream bad("velocity_north = 10\n");
    CHECK_THROWS_AS(parse_scene_config(bad), std::runtime_error);
}
