#include <cmath>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "spanel/error.hpp"
#include "spanel/panel.hpp"

using namespace spanel;
using testutil::temp_dir;

namespace {

// synthetic raw-schema CSV with smoothly varying positive values
std::string raw_panel_csv(int countries, int year_from, int year_to,
                          const std::string& skip_country = "", int skip_year = 0) {
    std::ostringstream out;
    out << "country,year,co2,gdp,energy,population,urban_population,dvx,fva,gross_exports\n";
    for (int i = 0; i < countries; ++i) {
        for (int y = year_from; y <= year_to; ++y) {
            const std::string name = "C" + std::to_string(i + 1);
            if (name == skip_country && y == skip_year) continue;
            const double base = 1.0 + 0.01 * i + 0.002 * (y - year_from);
            out << name << ',' << y << ',' << 2.0e9 * base << ',' << 1.0e9 * base << ',' << 3.0e8 * base << ','
                << 1.0e6 << ',' << 5.0e5 << ',' << 3.0e7 * base << ',' << 2.0e7 * base << ',' << 1.0e8 * base
                << '\n';
        }
    }
    return out.str();
}

PanelDataset panel_from_ci(const std::vector<std::vector<double>>& ci, int year0 = 2000) {
    const int n = static_cast<int>(ci.size());
    const int T = static_cast<int>(ci[0].size());
    std::vector<int> years;
    for (int t = 0; t < T; ++t) years.push_back(year0 + t);
    std::array<Eigen::MatrixXd, 5> values;
    for (auto& m : values) m = Eigen::MatrixXd::Constant(n, T, 1.0);
    for (int i = 0; i < n; ++i) {
        for (int t = 0; t < T; ++t) values[0](i, t) = ci[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)];
    }
    return PanelDataset(testutil::labels(n), years, values);
}

}  // namespace

TEST_CASE("participation ratio") {
    CHECK(compute_gvc(0.0, 0.0, 100.0) == 0.0);
    CHECK(compute_gvc(30.0, 20.0, 100.0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(compute_gvc(10.0, 10.0, 0.0), Error);
    CHECK_THROWS_AS(compute_gvc(-1.0, 0.0, 10.0), Error);

    // homogeneous of degree zero
    spanel::Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        const double dvx = rng.uniform(0.0, 10.0), fva = rng.uniform(0.0, 10.0), exp = rng.uniform(0.1, 10.0);
        const double c = rng.uniform(0.001, 1000.0);
        CHECK(compute_gvc(c * dvx, c * fva, c * exp) == doctest::Approx(compute_gvc(dvx, fva, exp)).epsilon(1e-12));
    }
}

TEST_CASE("indicator derivation") {
    RawPanelRow row;
    row.country = "X";
    row.year = 2000;
    row.co2 = 2.0e9;
    row.gdp = 1.0e9;
    row.energy = 5.0e8;
    row.population = 1.0e6;
    row.urban_population = 1.0e6;
    row.dvx = 1.0;
    row.fva = 1.0;
    row.gross_exports = 10.0;
    const DerivedIndicators d = derive_indicators(row);
    CHECK(d.ci == doctest::Approx(2.0));
    CHECK(d.ur == doctest::Approx(1.0));  // urban equals total population
    CHECK(d.y == doctest::Approx(1000.0));
    CHECK(d.ei == doctest::Approx(0.5));

    row.co2 = 0.0;
    CHECK(derive_indicators(row).ci == 0.0);  // valid measurement, rejected later by logs

    row.gdp = 0.0;
    CHECK_THROWS_AS(derive_indicators(row), Error);
    row.gdp = 1.0e9;
    row.population = 0.0;
    CHECK_THROWS_AS(derive_indicators(row), Error);
    row.population = 1.0e6;
    row.urban_population = 2.0e6;
    CHECK_THROWS_AS(derive_indicators(row), Error);

    // scale consistency: common factor on co2 and gdp leaves CI unchanged
    row.urban_population = 5.0e5;
    row.co2 = 3.3e9;
    const double base_ci = derive_indicators(row).ci;
    row.co2 *= 7.5;
    row.gdp *= 7.5;
    CHECK(derive_indicators(row).ci == doctest::Approx(base_ci).epsilon(1e-12));
}

TEST_CASE("panel loading at survey scale") {
    const auto dir = temp_dir("panel_load");
    testutil::write_file(dir / "panel.csv", raw_panel_csv(101, 1997, 2014));
    const PanelDataset panel = load_panel((dir / "panel.csv").string());
    CHECK(panel.n() == 101);
    CHECK(panel.periods() == 18);
    CHECK(panel.years().front() == 1997);
    CHECK(panel.years().back() == 2014);
    CHECK(panel.at(Indicator::CI, 0, 0) == doctest::Approx(2.0));
}

TEST_CASE("single observation loads but is tiny") {
    const auto dir = temp_dir("panel_single");
    testutil::write_file(dir / "panel.csv", raw_panel_csv(1, 2000, 2000));
    const PanelDataset panel = load_panel((dir / "panel.csv").string());
    CHECK(panel.n() == 1);
    CHECK(panel.periods() == 1);
}

TEST_CASE("missing year: strict errors, drop mode reports") {
    const auto dir = temp_dir("panel_balance");
    testutil::write_file(dir / "panel.csv", raw_panel_csv(3, 2000, 2004, "C2", 2002));
    CHECK_THROWS_WITH_AS(load_panel((dir / "panel.csv").string()), doctest::Contains("C2"), Error);

    PanelLoadOptions drop;
    drop.balance = BalancePolicy::drop;
    const PanelDataset panel = load_panel((dir / "panel.csv").string(), drop);
    CHECK(panel.n() == 2);
    CHECK(panel.dropped_countries() == std::vector<std::string>{"C2"});
}

TEST_CASE("year-range restriction narrows the panel") {
    const auto dir = temp_dir("panel_range");
    testutil::write_file(dir / "panel.csv", raw_panel_csv(4, 2000, 2010));
    PanelLoadOptions options;
    options.year_from = 2003;
    options.year_to = 2007;
    const PanelDataset panel = load_panel((dir / "panel.csv").string(), options);
    CHECK(panel.periods() == 5);
    CHECK(panel.years().front() == 2003);
    CHECK(panel.years().back() == 2007);
    CHECK(panel.n() == 4);
}

TEST_CASE("ingestion errors name the offending row") {
    const auto dir = temp_dir("panel_bad");
    std::string csv = "country,year,ci,y,ei,ur,gvc\nA,2000,1.0,2.0,0.5,0.5,0.4\nA,2001,oops,2.0,0.5,0.5,0.4\n";
    testutil::write_file(dir / "panel.csv", csv);
    CHECK_THROWS_WITH_AS(load_panel((dir / "panel.csv").string()), doctest::Contains("row 3"), Error);

    std::string dup = "country,year,ci,y,ei,ur,gvc\nA,2000,1,2,3,0.5,0.4\nA,2000,1,2,3,0.5,0.4\n";
    testutil::write_file(dir / "dup.csv", dup);
    CHECK_THROWS_WITH_AS(load_panel((dir / "dup.csv").string()), doctest::Contains("duplicate"), Error);
}

TEST_CASE("indicator schema is auto-detected") {
    const auto dir = temp_dir("panel_ind");
    std::string csv = "country,year,ci,y,ei,ur,gvc\n";
    for (int y = 2000; y <= 2003; ++y) {
        csv += "A," + std::to_string(y) + ",1.5,2.0,0.5,0.5,0.4\n";
        csv += "B," + std::to_string(y) + ",2.5,3.0,0.6,0.6,0.5\n";
    }
    testutil::write_file(dir / "panel.csv", csv);
    const PanelDataset panel = load_panel((dir / "panel.csv").string());
    CHECK(panel.n() == 2);
    CHECK(panel.at(Indicator::GVC, 0, 0) == doctest::Approx(0.4));
}

TEST_CASE("frame construction on exponential levels matches hand-computed logs") {
    // CI_it = e^t: growth is identically one, lagged log level is t-1
    const int T = 6;
    std::vector<std::vector<double>> ci(3, std::vector<double>(T));
    for (int i = 0; i < 3; ++i) {
        for (int t = 0; t < T; ++t) ci[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] = std::exp(t);
    }
    const PanelDataset panel = panel_from_ci(ci);
    const RegressionFrame frame = build_frame(panel, std::vector<Indicator>{});
    CHECK(frame.n == 3);
    CHECK(frame.T_eff == T - 1);
    CHECK(frame.X.cols() == 1);
    for (int t = 1; t < T; ++t) {
        for (int i = 0; i < 3; ++i) {
            const Eigen::Index row = static_cast<Eigen::Index>(t - 1) * 3 + i;
            CHECK(frame.y(row) == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(frame.X(row, 0) == doctest::Approx(t - 1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("constant levels give an identically zero dependent variable") {
    std::vector<std::vector<double>> ci(2, std::vector<double>(4, 3.0));
    const PanelDataset panel = panel_from_ci(ci);
    const RegressionFrame frame = build_frame(panel, std::vector<Indicator>{});
    CHECK(frame.y.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("frame matches the log-ratio identity and is deterministic") {
    const auto dir = temp_dir("panel_frame");
    testutil::write_file(dir / "panel.csv", raw_panel_csv(101, 1997, 2014));
    const PanelDataset panel = load_panel((dir / "panel.csv").string());
    const auto covs = covariate_block(4);
    const RegressionFrame frame = build_frame(panel, covs);
    CHECK(frame.y.size() == 101 * 17);
    CHECK(frame.X.cols() == 5);
    CHECK(frame.regressor_names[0] == "Ln(CI)_t-1");

    for (int t = 1; t < panel.periods(); ++t) {
        for (int i = 0; i < panel.n(); ++i) {
            const Eigen::Index row = static_cast<Eigen::Index>(t - 1) * panel.n() + i;
            const double ratio = std::log(panel.at(Indicator::CI, i, t) / panel.at(Indicator::CI, i, t - 1));
            CHECK(std::fabs(frame.y(row) - ratio) < 1e-12);
        }
    }

    const RegressionFrame again = build_frame(panel, covs);
    CHECK(std::memcmp(frame.y.data(), again.y.data(), sizeof(double) * frame.y.size()) == 0);
    CHECK(std::memcmp(frame.X.data(), again.X.data(), sizeof(double) * frame.X.size()) == 0);
}

TEST_CASE("frame rejects nonpositive values under the log") {
    std::vector<std::vector<double>> ci(2, std::vector<double>(4, 1.0));
    ci[1][2] = 0.0;
    const PanelDataset panel = panel_from_ci(ci);
    CHECK_THROWS_WITH_AS(build_frame(panel, std::vector<Indicator>{}), doctest::Contains("C2"), Error);
}

TEST_CASE("frame needs at least three periods") {
    std::vector<std::vector<double>> ci(2, std::vector<double>(2, 1.0));
    const PanelDataset panel = panel_from_ci(ci);
    CHECK_THROWS_AS(build_frame(panel, std::vector<Indicator>{}), Error);
}

TEST_CASE("covariate blocks match the model grid") {
    CHECK(covariate_block(1) == std::vector<Indicator>{Indicator::Y, Indicator::EI, Indicator::GVC});
    CHECK(covariate_block(2) == std::vector<Indicator>{Indicator::UR, Indicator::GVC});
    CHECK(covariate_block(3) == std::vector<Indicator>{Indicator::EI, Indicator::UR, Indicator::GVC});
    CHECK(covariate_block(4) == std::vector<Indicator>{Indicator::Y, Indicator::EI, Indicator::UR, Indicator::GVC});
    CHECK_THROWS_AS(covariate_block(5), Error);
}

TEST_CASE("years must be consecutive") {
    std::vector<int> years{2000, 2002};
    std::array<Eigen::MatrixXd, 5> values;
    for (auto& m : values) m = Eigen::MatrixXd::Constant(1, 2, 1.0);
    CHECK_THROWS_AS(PanelDataset({"A"}, years, values), Error);
}
