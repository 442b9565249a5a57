#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "modr/config.hpp"
#include "modr/csv.hpp"
#include "modr/runner.hpp"
#include "modr/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

using namespace modr;

TEST_CASE("empty config yields the all-defaults scenario") {
    const Scenario sc = parse_config("");
    CHECK(sc.id == "default");
    CHECK(sc.sys.g_ground == doctest::Approx(11.52));
    CHECK(sc.sys.g_excited == doctest::Approx(7.7));
    CHECK(sc.mw_mode.nu_c == doctest::Approx(12.155e9));
    CHECK(sc.drive.depth == doctest::Approx(0.45));
    CHECK(sc.servo.input_lowpass_corner == doctest::Approx(151.8));
    CHECK(sc.packets == 4096);
}

TEST_CASE("drive section parses quoted quantities and percent depths") {
    const Scenario sc = parse_config("[drive]\npower = \"5 dBm\"\ndepth = 0.45\n");
    CHECK(sc.drive.power_in.dim == Dimension::PowerDbm);
    CHECK(sc.drive.power_in.value == doctest::Approx(5.0));
    CHECK(sc.drive.depth == doctest::Approx(0.45));

    const Scenario pc = parse_config("[drive]\ndepth = \"45 %\"\n");
    CHECK(pc.drive.depth == doctest::Approx(0.45));
}

TEST_CASE("nested sections, comments and booleans") {
    const Scenario sc = parse_config(
        "# comment\n"
        "[lock.servo]\n"
        "unity_gain_bandwidth = \"60 Hz\"  # trailing comment\n"
        "input_lowpass = \"151.8 Hz\"\n"
        "\n"
        "[scan]\n"
        "transition = \"O_23\"\n"
        "temperature = \"2.9 K\"\n");
    CHECK(sc.servo.unity_gain_bandwidth == doctest::Approx(60.0));
    CHECK(sc.transition == Transition::O_23);
    CHECK(sc.temperature.value == doctest::Approx(2.9));
}

TEST_CASE("config errors carry line and column") {
    try {
        parse_config("[drive]\npower = \"5 dBm\"\nbogus_key = 1\n");
        FAIL("expected config_error");
    } catch (const config_error& e) {
        CHECK(e.line == 3);
        CHECK(std::string(e.what()).find("unknown key") != std::string::npos);
        CHECK(std::string(e.what()).find("drive.bogus_key") != std::string::npos);
    }
    try {
        parse_config("[drive]\ndepth = 0.4\ndepth = 0.5\n");
        FAIL("expected config_error");
    } catch (const config_error& e) {
        CHECK(e.line == 3);
        CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
    }
    try {
        parse_config("[mw_mode]\nfrequency = \"4 K\"\n");
        FAIL("expected config_error");
    } catch (const config_error& e) {
        CHECK(e.line == 2);
        CHECK(std::string(e.what()).find("dimension mismatch") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("[unterminated\n"), config_error);
    CHECK_THROWS_AS(parse_config("key_without_section = 1\n"), config_error);
    CHECK_THROWS_AS(parse_config("[scan]\nfield_start = \"oops mT\"\n"), config_error);
    CHECK_THROWS_AS(parse_config("[scan]\nfield_start =\n"), config_error);
    CHECK_THROWS_AS(parse_config("[drive]\npower = \"5 dBm\" trailing\n"), config_error);
}

TEST_CASE("scenario assembles consistent physics objects") {
    Scenario sc = parse_config(bundled_scenarios().at("fig6e"));
    sc.packets = 128;
    const auto spins = sc.spin_packets();
    CHECK(spins.size() == 128);
    CHECK(spins.front().gamma_h == doctest::Approx(sc.gamma_spin));
    const auto opt = sc.optical_coupling();
    CHECK(opt.g_total == doctest::Approx(4.45e9));
    const OdmrSetup setup = sc.odmr_setup();
    CHECK(setup.optical_transition == Transition::O_24);
    CHECK(setup.drive.insertion_loss_db == doctest::Approx(40.0));
}

TEST_CASE("every bundled scenario parses") {
    for (const auto& [id, text] : bundled_scenarios()) {
        const Scenario sc = parse_config(text);
        CHECK(sc.id == id);
    }
}

TEST_CASE("CSV round-trips scan values and metadata") {
    ScanResult scan;
    scan.scenario_id = "roundtrip";
    scan.seed = 99;
    scan.axis1 = {"field", "T", {0.07, 0.08, 0.09}};
    scan.axis2 = Axis{"laser_detuning", "Hz", {-1e6, 0.0, 1e6, 2e6}};
    scan.value_names = {"reflectance"};
    scan.value_units = {""};
    scan.values.assign(1, {});
    for (int i = 0; i < 12; ++i)
        scan.values[0].push_back(0.1 * i - 0.3);

    const std::string text = csv_from_scan(scan);
    const CsvTable t = parse_csv(text);
    CHECK(t.names.size() == 3);
    CHECK(t.names[0] == "field");
    CHECK(t.units[0] == "T");
    CHECK(t.names[2] == "reflectance");
    CHECK(t.units[2] == "");
    CHECK(t.rows() == 12);
    CHECK(t.columns[0][0] == doctest::Approx(0.07).epsilon(1e-9));
    CHECK(t.columns[2][11] == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(t.comments[0].find("roundtrip") != std::string::npos);
    CHECK(t.comments[1].find("99") != std::string::npos);
}

TEST_CASE("CSV parse errors") {
    CHECK_THROWS_AS(parse_csv(""), io_error);
    CHECK_THROWS_AS(parse_csv("a(),b()\n1,2\n3\n"), io_error);
    CHECK_THROWS_AS(parse_csv("a(),b()\n1,zebra\n"), io_error);
    const CsvTable t = parse_csv("a(Hz),b\n1,2\n");
    CHECK(t.units[0] == "Hz");
    CHECK(t.units[1] == "");
    CHECK_THROWS_AS(t.column("missing"), io_error);
}

TEST_CASE("two-point line sheet renders exactly one polyline with two vertices") {
    ScanResult scan;
    scan.axis1 = {"x", "Hz", {0.0, 1.0}};
    scan.value_names = {"y"};
    scan.value_units = {"Hz"};
    scan.values = {{2.0, 3.0}};
    const std::string svg = emit_svg(scan, PlotStyle::Line);

    std::size_t count = 0, pos = 0;
    while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
        ++count;
        ++pos;
    }
    CHECK(count == 1);
    const std::size_t points = svg.find("points=\"");
    REQUIRE(points != std::string::npos);
    const std::size_t close = svg.find('"', points + 8);
    const std::string coords = svg.substr(points + 8, close - points - 8);
    CHECK(std::count(coords.begin(), coords.end(), ',') == 2);

    // determinism is byte-level
    CHECK(emit_svg(scan, PlotStyle::Line) == svg);
    CHECK_THROWS_AS(emit_svg(scan, PlotStyle::Heatmap), std::invalid_argument);
}

TEST_CASE("heatmap puts its brightest cell at the grid argmax") {
    ScanResult scan;
    scan.axis1 = {"field", "T", {0.0, 1.0, 2.0}};
    scan.axis2 = Axis{"f", "Hz", {0.0, 1.0, 2.0, 3.0}};
    scan.value_names = {"amplitude"};
    scan.value_units = {"Hz"};
    scan.values.assign(1, std::vector<double>(12, 0.1));
    scan.values[0][7] = 5.0; // unique maximum

    const std::string svg = emit_svg(scan, PlotStyle::Heatmap);
    // cell rects are emitted in grid-index order and carry hex fills; the
    // colormap has monotone luminance, so the brightest cell is the argmax
    std::vector<double> lums;
    std::size_t pos = 0;
    while ((pos = svg.find("fill=\"#", pos)) != std::string::npos) {
        const std::string hex = svg.substr(pos + 7, 6);
        const int r = std::stoi(hex.substr(0, 2), nullptr, 16);
        const int g = std::stoi(hex.substr(2, 2), nullptr, 16);
        const int b = std::stoi(hex.substr(4, 2), nullptr, 16);
        lums.push_back(0.2126 * r + 0.7152 * g + 0.0722 * b);
        ++pos;
    }
    REQUIRE(lums.size() == 12);
    const std::size_t best =
        static_cast<std::size_t>(std::max_element(lums.begin(), lums.end()) -
                                 lums.begin());
    CHECK(best == 7);
}

TEST_CASE("scan output is deterministic and thread-count independent") {
    Scenario sc = parse_config(bundled_scenarios().at("fig3b"));
    sc.packets = 256;
    sc.field_points = 41;

    setenv("MODR_THREADS", "1", 1);
    const std::string one = csv_from_scan(run_scenario(sc, Task::EprSweep));
    setenv("MODR_THREADS", "4", 1);
    const std::string four = csv_from_scan(run_scenario(sc, Task::EprSweep));
    unsetenv("MODR_THREADS");
    CHECK(one == four);

    // same seed reproduces bytes; a different seed changes the noise
    const std::string again = csv_from_scan(run_scenario(sc, Task::EprSweep));
    CHECK(again == one);
    sc.seed += 1;
    CHECK(csv_from_scan(run_scenario(sc, Task::EprSweep)) != one);
}

TEST_CASE("fsr table parsing applies column units") {
    const FsrTable t = fsr_table_from_csv(parse_csv(bundled_fsr_csv()));
    REQUIRE(t.rows.size() == 7);
    CHECK(t.rows[0].m_offset == 3);
    CHECK(t.rows[0].fsr == doctest::Approx(12.3255e9));
    CHECK(t.rows[0].sigma == doctest::Approx(0.5e6));
    CHECK(t.rows[6].m_offset == -3);
}

TEST_CASE("every task produces a consistent scan from a compact scenario") {
    Scenario sc = parse_config(bundled_scenarios().at("fig6e"));
    sc.packets = 128;
    sc.field_points = 7;
    sc.mw_points = 7;
    sc.laser_points = 41;
    sc.power_points = 5;
    sc.field_start = 75.3e-3;
    sc.field_stop = 75.5e-3;

    for (const Task t : {Task::SpectrumMap, Task::EprSweep, Task::OdmrMap,
                         Task::SaturationSeries, Task::FsrAnalysis}) {
        const ScanResult scan = run_scenario(sc, t);
        scan.validate();
        CHECK(scan.grid_size() > 0);
        CHECK(scan.scenario_id == "fig6e");
        const std::string csv = csv_from_scan(scan);
        CHECK(parse_csv(csv).rows() == scan.grid_size());
    }
}

TEST_CASE("task names round-trip and unknown tasks are rejected") {
    for (const Task t : {Task::SpectrumMap, Task::EprSweep, Task::OdmrMap,
                         Task::SaturationSeries, Task::FsrAnalysis})
        CHECK(task_from_name(task_name(t)) == t);
    CHECK_THROWS_AS(task_from_name("make-coffee"), std::invalid_argument);
}
