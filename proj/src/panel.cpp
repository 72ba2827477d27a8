#include "spanel/panel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "spanel/csv.hpp"
#include "spanel/error.hpp"

namespace spanel {

const char* indicator_name(Indicator v) {
    switch (v) {
        case Indicator::CI: return "CI";
        case Indicator::Y: return "Y";
        case Indicator::EI: return "EI";
        case Indicator::UR: return "UR";
        case Indicator::GVC: return "GVC";
    }
    return "?";
}

double DerivedIndicators::get(Indicator v) const {
    switch (v) {
        case Indicator::CI: return ci;
        case Indicator::Y: return y;
        case Indicator::EI: return ei;
        case Indicator::UR: return ur;
        case Indicator::GVC: return gvc;
    }
    return 0.0;
}

double compute_gvc(double dvx, double fva, double gross_exports) {
    if (!(gross_exports > 0.0)) fail(errc::domain, "gross exports must be positive");
    if (dvx < 0.0 || fva < 0.0) fail(errc::domain, "value-added components must be nonnegative");
    return (dvx + fva) / gross_exports;
}

DerivedIndicators derive_indicators(const RawPanelRow& raw) {
    if (!(raw.gdp > 0.0)) fail(errc::domain, raw.country + "/" + std::to_string(raw.year) + ": gdp must be positive");
    if (!(raw.population > 0.0)) {
        fail(errc::domain, raw.country + "/" + std::to_string(raw.year) + ": population must be positive");
    }
    if (raw.co2 < 0.0 || raw.energy < 0.0) {
        fail(errc::domain, raw.country + "/" + std::to_string(raw.year) + ": negative emissions or energy");
    }
    if (raw.urban_population < 0.0 || raw.urban_population > raw.population) {
        fail(errc::domain,
             raw.country + "/" + std::to_string(raw.year) + ": urban population outside [0, population]");
    }
    DerivedIndicators out;
    out.ci = raw.co2 / raw.gdp;
    out.y = raw.gdp / raw.population;
    out.ei = raw.energy / raw.gdp;
    out.ur = raw.urban_population / raw.population;
    out.gvc = compute_gvc(raw.dvx, raw.fva, raw.gross_exports);
    return out;
}

PanelDataset::PanelDataset(std::vector<std::string> countries, std::vector<int> years,
                           std::array<Eigen::MatrixXd, 5> values, std::vector<std::string> dropped)
    : countries_(std::move(countries)), years_(std::move(years)), values_(std::move(values)),
      dropped_(std::move(dropped)) {
    if (countries_.empty() || years_.empty()) fail(errc::validation, "empty panel");
    for (std::size_t t = 1; t < years_.size(); ++t) {
        if (years_[t] != years_[t - 1] + 1) {
            fail(errc::balance, "years are not consecutive: " + std::to_string(years_[t - 1]) + " followed by " +
                                    std::to_string(years_[t]));
        }
    }
    for (const auto& m : values_) {
        if (m.rows() != static_cast<Eigen::Index>(countries_.size()) ||
            m.cols() != static_cast<Eigen::Index>(years_.size())) {
            fail(errc::validation, "panel value table dimension mismatch");
        }
        if (!m.allFinite()) fail(errc::validation, "panel contains non-finite values");
    }
}

PanelSchema PanelSchema::indicator_columns() {
    PanelSchema s;
    s.kind = Kind::indicators;
    return s;
}

namespace {

PanelSchema detect_schema(const CsvTable& table) {
    const PanelSchema raw = PanelSchema::raw_columns();
    const PanelSchema ind = PanelSchema::indicator_columns();
    if (table.column(raw.co2) >= 0 && table.column(raw.gdp) >= 0) return raw;
    if (table.column(ind.ci) >= 0) return ind;
    fail(errc::ingestion,
         "cannot detect panel schema: need raw columns (co2, gdp, ...) or indicator columns (ci, y, ei, ur, gvc)");
}

int require_column(const CsvTable& table, const std::string& name, const std::string& path) {
    const int idx = table.column(name);
    if (idx < 0) fail(errc::ingestion, path + ": missing column '" + name + "'");
    return idx;
}

}  // namespace

PanelDataset load_panel(const std::string& path, const PanelLoadOptions& options) {
    const CsvTable table = read_csv(path);
    const PanelSchema schema = options.schema ? *options.schema : detect_schema(table);

    const int c_country = require_column(table, schema.country, path);
    const int c_year = require_column(table, schema.year, path);
    std::vector<int> cols;  // value columns in ingestion order
    if (schema.kind == PanelSchema::Kind::raw) {
        for (const std::string* name : {&schema.co2, &schema.gdp, &schema.energy, &schema.population,
                                        &schema.urban_population, &schema.dvx, &schema.fva, &schema.gross_exports}) {
            cols.push_back(require_column(table, *name, path));
        }
    } else {
        for (const std::string* name : {&schema.ci, &schema.y, &schema.ei, &schema.ur, &schema.gvc}) {
            cols.push_back(require_column(table, *name, path));
        }
    }

    // (country, year) -> derived record, uniqueness enforced
    std::map<std::string, std::map<int, DerivedIndicators>> by_country;
    std::set<int> years_seen;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string context = path + " row " + std::to_string(r + 2);
        const std::string country = row[c_country];
        if (country.empty()) fail(errc::ingestion, context + ": empty country label");
        const int year = static_cast<int>(parse_long(row[c_year], context));
        if (options.year_from && year < *options.year_from) continue;
        if (options.year_to && year > *options.year_to) continue;

        DerivedIndicators derived;
        if (schema.kind == PanelSchema::Kind::raw) {
            RawPanelRow raw;
            raw.country = country;
            raw.year = year;
            raw.co2 = parse_double(row[cols[0]], context);
            raw.gdp = parse_double(row[cols[1]], context);
            raw.energy = parse_double(row[cols[2]], context);
            raw.population = parse_double(row[cols[3]], context);
            raw.urban_population = parse_double(row[cols[4]], context);
            raw.dvx = parse_double(row[cols[5]], context);
            raw.fva = parse_double(row[cols[6]], context);
            raw.gross_exports = parse_double(row[cols[7]], context);
            derived = derive_indicators(raw);
        } else {
            derived.ci = parse_double(row[cols[0]], context);
            derived.y = parse_double(row[cols[1]], context);
            derived.ei = parse_double(row[cols[2]], context);
            derived.ur = parse_double(row[cols[3]], context);
            derived.gvc = parse_double(row[cols[4]], context);
            for (Indicator v : kAllIndicators) {
                if (derived.get(v) < 0.0) {
                    fail(errc::domain, context + ": negative " + indicator_name(v));
                }
            }
        }
        if (!by_country[country].emplace(year, derived).second) {
            fail(errc::ingestion, context + ": duplicate observation for " + country + "/" + std::to_string(year));
        }
        years_seen.insert(year);
    }
    if (by_country.empty()) fail(errc::ingestion, path + ": no usable rows");

    const int year_lo = options.year_from.value_or(*years_seen.begin());
    const int year_hi = options.year_to.value_or(*years_seen.rbegin());
    std::vector<int> years;
    for (int y = year_lo; y <= year_hi; ++y) years.push_back(y);

    std::vector<std::string> countries, dropped;
    for (const auto& [country, obs] : by_country) {
        std::vector<int> gaps;
        for (int y : years) {
            if (!obs.count(y)) gaps.push_back(y);
        }
        if (gaps.empty()) {
            countries.push_back(country);
        } else if (options.balance == BalancePolicy::strict) {
            std::ostringstream msg;
            msg << country << " is missing year";
            if (gaps.size() > 1) msg << 's';
            for (int y : gaps) msg << ' ' << y;
            fail(errc::balance, msg.str());
        } else {
            dropped.push_back(country);
        }
    }
    if (countries.empty()) fail(errc::balance, "no country covers the full year range");

    const int n = static_cast<int>(countries.size());
    const int T = static_cast<int>(years.size());
    std::array<Eigen::MatrixXd, 5> values;
    for (auto& m : values) m.resize(n, T);
    for (int i = 0; i < n; ++i) {
        const auto& obs = by_country[countries[i]];
        for (int t = 0; t < T; ++t) {
            const DerivedIndicators& d = obs.at(years[t]);
            for (Indicator v : kAllIndicators) values[static_cast<int>(v)](i, t) = d.get(v);
        }
    }
    return PanelDataset(std::move(countries), std::move(years), std::move(values), std::move(dropped));
}

std::vector<Indicator> covariate_block(int block) {
    switch (block) {
        case 1: return {Indicator::Y, Indicator::EI, Indicator::GVC};
        case 2: return {Indicator::UR, Indicator::GVC};
        case 3: return {Indicator::EI, Indicator::UR, Indicator::GVC};
        case 4: return {Indicator::Y, Indicator::EI, Indicator::UR, Indicator::GVC};
    }
    fail(errc::usage, "covariate block must be 1..4, got " + std::to_string(block));
}

RegressionFrame build_frame(const PanelDataset& panel, std::span<const Indicator> covariates) {
    const int n = panel.n();
    const int T = panel.periods();
    if (T < 3) fail(errc::dimension, "at least 3 periods are required, got " + std::to_string(T));
    for (Indicator v : covariates) {
        if (v == Indicator::CI) fail(errc::usage, "CI is the dependent variable, not a covariate");
    }

    auto checked_log = [&panel](Indicator v, int i, int t) {
        const double value = panel.at(v, i, t);
        if (!(value > 0.0)) {
            fail(errc::domain, std::string("cannot take log of ") + indicator_name(v) + " = " +
                                   std::to_string(value) + " for " + panel.countries()[i] + "/" +
                                   std::to_string(panel.years()[t]));
        }
        return std::log(value);
    };

    RegressionFrame frame;
    frame.n = n;
    frame.T_eff = T - 1;
    frame.countries = panel.countries();
    frame.regressor_names.push_back("Ln(CI)_t-1");
    for (Indicator v : covariates) {
        frame.regressor_names.push_back(std::string("Ln(") + indicator_name(v) + ")_t-1");
    }
    const int k = static_cast<int>(frame.regressor_names.size());
    frame.y.resize(static_cast<Eigen::Index>(n) * frame.T_eff);
    frame.X.resize(static_cast<Eigen::Index>(n) * frame.T_eff, k);

    for (int t = 1; t < T; ++t) {
        for (int i = 0; i < n; ++i) {
            const Eigen::Index row = static_cast<Eigen::Index>(t - 1) * n + i;
            const double log_ci_lag = checked_log(Indicator::CI, i, t - 1);
            frame.y(row) = checked_log(Indicator::CI, i, t) - log_ci_lag;
            frame.X(row, 0) = log_ci_lag;
            for (std::size_t c = 0; c < covariates.size(); ++c) {
                frame.X(row, static_cast<Eigen::Index>(c) + 1) = checked_log(covariates[c], i, t - 1);
            }
        }
    }
    return frame;
}

}  // namespace spanel
