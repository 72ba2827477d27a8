#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spanel {

// One raw observation as it arrives from a statistics provider.
struct RawPanelRow {
    std::string country;
    int year = 0;
    double co2 = 0.0;               // kg
    double gdp = 0.0;               // constant-price currency
    double energy = 0.0;            // kg oil equivalent
    double population = 0.0;        // persons
    double urban_population = 0.0;  // persons
    double dvx = 0.0;               // indirect domestic value-added in exports
    double fva = 0.0;               // foreign value-added in exports
    double gross_exports = 0.0;     // total export value
};

// Derived model variables, in canonical order.
enum class Indicator { CI, Y, EI, UR, GVC };

constexpr std::array<Indicator, 5> kAllIndicators{Indicator::CI, Indicator::Y, Indicator::EI, Indicator::UR,
                                                  Indicator::GVC};

const char* indicator_name(Indicator v);

struct DerivedIndicators {
    double ci = 0.0;   // emissions per unit of output
    double y = 0.0;    // output per person
    double ei = 0.0;   // energy per unit of output
    double ur = 0.0;   // urban share of population
    double gvc = 0.0;  // value-chain participation ratio
    double get(Indicator v) const;
};

// participation ratio (dvx + fva) / gross_exports
double compute_gvc(double dvx, double fva, double gross_exports);

DerivedIndicators derive_indicators(const RawPanelRow& raw);

// Balanced country-by-year table of the derived variables. Years are
// consecutive; every (country, year) cell is populated. Immutable.
class PanelDataset {
  public:
    PanelDataset(std::vector<std::string> countries, std::vector<int> years,
                 std::array<Eigen::MatrixXd, 5> values, std::vector<std::string> dropped = {});

    int n() const { return static_cast<int>(countries_.size()); }
    int periods() const { return static_cast<int>(years_.size()); }
    const std::vector<std::string>& countries() const { return countries_; }
    const std::vector<int>& years() const { return years_; }
    const Eigen::MatrixXd& values(Indicator v) const { return values_[static_cast<int>(v)]; }
    double at(Indicator v, int country, int period) const { return values(v)(country, period); }

    // countries removed for missing years under the drop policy
    const std::vector<std::string>& dropped_countries() const { return dropped_; }

  private:
    std::vector<std::string> countries_;
    std::vector<int> years_;
    std::array<Eigen::MatrixXd, 5> values_;  // each n x T
    std::vector<std::string> dropped_;
};

// Column mapping for panel CSV ingestion. Two shapes are understood: raw
// provider columns and precomputed indicator columns.
struct PanelSchema {
    enum class Kind { raw, indicators };
    Kind kind = Kind::raw;
    std::string country = "country";
    std::string year = "year";
    // raw columns
    std::string co2 = "co2", gdp = "gdp", energy = "energy", population = "population",
                urban_population = "urban_population", dvx = "dvx", fva = "fva",
                gross_exports = "gross_exports";
    // indicator columns
    std::string ci = "ci", y = "y", ei = "ei", ur = "ur", gvc = "gvc";

    static PanelSchema raw_columns() { return PanelSchema{}; }
    static PanelSchema indicator_columns();
};

enum class BalancePolicy {
    strict,  // any country missing any year of the range is an error
    drop,    // such countries are removed and reported
};

struct PanelLoadOptions {
    std::optional<PanelSchema> schema;  // auto-detected from the header when unset
    BalancePolicy balance = BalancePolicy::strict;
    std::optional<int> year_from;
    std::optional<int> year_to;
};

PanelDataset load_panel(const std::string& path, const PanelLoadOptions& options = {});

// Stacked estimation frame for the growth regression. Rows are ordered
// country-major within each year: row (t-2)*n + i holds country i at year t.
struct RegressionFrame {
    Eigen::VectorXd y;  // ln(CI_t) - ln(CI_t-1)
    Eigen::MatrixXd X;  // lagged log levels, first column ln(CI)_t-1
    std::vector<std::string> regressor_names;
    std::vector<std::string> countries;
    int n = 0;
    int T_eff = 0;

    std::string dependent_name = "Ln(CI_t/CI_t-1)";
};

// The four covariate sets used by the sixteen-model grid.
std::vector<Indicator> covariate_block(int block);  // 1..4

RegressionFrame build_frame(const PanelDataset& panel, std::span<const Indicator> covariates);

}  // namespace spanel
