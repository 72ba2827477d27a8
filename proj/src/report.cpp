#include "spanel/report.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "spanel/stats.hpp"

namespace spanel::report {

namespace {

std::string fixed(double value, int digits) {
    if (!std::isfinite(value)) return "";
    std::ostringstream out;
    out << std::fixed << std::setprecision(digits) << value;
    return out.str();
}

// "estimate^tier [se]" cell in the table renderings
std::string coef_cell(double estimate, double se) {
    const double p = se > 0.0 ? stats::normal_two_tailed_p(estimate / se) : (estimate == 0.0 ? 1.0 : 0.0);
    return fixed(estimate, 4) + significance_tier(p) + " [" + fixed(se, 4) + "]";
}

std::string pad(const std::string& text, std::size_t width) {
    return text + std::string(text.size() >= width ? 0 : width - text.size(), ' ');
}

std::string render_table(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> widths;
    for (const auto& row : rows) {
        if (widths.size() < row.size()) widths.resize(row.size(), 0);
        for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
    }
    std::ostringstream out;
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out << (c ? "  " : "") << (c + 1 == row.size() ? row[c] : pad(row[c], widths[c]));
        }
        out << '\n';
    }
    return out.str();
}

double coef_p(double estimate, double se) {
    return se > 0.0 ? stats::normal_two_tailed_p(estimate / se) : (estimate == 0.0 ? 1.0 : 0.0);
}

json coefficient_json(const std::string& name, double estimate, double se) {
    const double p = coef_p(estimate, se);
    return json{{"name", name}, {"estimate", estimate}, {"se", se}, {"p_value", p}, {"tier", significance_tier(p)}};
}

}  // namespace

std::string significance_tier(double p) {
    if (p < 0.01) return "a";
    if (p < 0.05) return "b";
    if (p < 0.1) return "c";
    return "";
}

json test_to_json(const TestResult& test) {
    json out{{"name", test.name},        {"statistic", test.statistic}, {"expectation", test.expectation},
             {"sd", test.sd},            {"z", test.z},                 {"p_value", test.p_value},
             {"tails", test.tails}};
    if (test.df > 0) out["df"] = test.df;
    if (!test.note.empty()) out["note"] = test.note;
    return out;
}

// --- autocorrelation ----------------------------------------------------

json to_json(const AutocorrReport& report) {
    json tests = json::array();
    for (const auto& t : report.tests) tests.push_back(test_to_json(t));
    return json{{"variable", report.variable}, {"growth", report.growth_mode}, {"n", report.n}, {"tests", tests}};
}

std::string to_text(const AutocorrReport& report) {
    std::ostringstream out;
    out << "Spatial autocorrelation of " << report.variable << " (n = " << report.n << ", " << report.growth_mode
        << " growth)\n";
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"Test", "Statistic", "E", "SD", "Z", "P-value"});
    for (const auto& t : report.tests) {
        rows.push_back({t.name, fixed(t.statistic, 4), fixed(t.expectation, 4), fixed(t.sd, 4), fixed(t.z, 4),
                        fixed(t.p_value, 4)});
    }
    out << render_table(rows);
    out << "2-tail test, null hypothesis: spatial randomization\n";
    return out.str();
}

CsvTable to_csv(const AutocorrReport& report) {
    CsvTable table;
    table.header = {"test", "statistic", "expectation", "sd", "z", "p_value"};
    for (const auto& t : report.tests) {
        table.rows.push_back({t.name, format_double(t.statistic), format_double(t.expectation),
                              format_double(t.sd), format_double(t.z), format_double(t.p_value)});
    }
    return table;
}

// --- regression grid ----------------------------------------------------

namespace {

json fit_to_json(const FitResult& fit) {
    json coefficients = json::array();
    for (Eigen::Index j = 0; j < fit.beta.size(); ++j) {
        coefficients.push_back(coefficient_json(fit.regressor_names[static_cast<std::size_t>(j)], fit.beta(j),
                                                fit.beta_se(j)));
    }
    json lagged = json::array();
    for (Eigen::Index j = 0; j < fit.gamma.size(); ++j) {
        lagged.push_back(coefficient_json(fit.lagged_names[static_cast<std::size_t>(j)], fit.gamma(j),
                                          fit.gamma_se(j)));
    }
    json out{{"model", model_name(fit.kind)},
             {"coefficients", coefficients},
             {"lagged", lagged},
             {"sigma2", fit.sigma2},
             {"loglik", fit.loglik},
             {"pseudo_r2", fit.pseudo_r2},
             {"pseudo_r2_definition", "squared correlation of fitted and observed within variation"},
             {"n", fit.n},
             {"T_eff", fit.T_eff}};
    if (fit.rho) out["rho"] = coefficient_json("rho", *fit.rho, fit.rho_se.value_or(0.0));
    if (fit.lambda) out["lambda"] = coefficient_json("lambda", *fit.lambda, fit.lambda_se.value_or(0.0));
    if (fit.intercept) out["intercept"] = *fit.intercept;
    if (!fit.warnings.empty()) out["warnings"] = fit.warnings;
    return out;
}

}  // namespace

json to_json(const FitReport& report) {
    json columns = json::array();
    for (const auto& column : report.columns) {
        json entry{{"block", column.block},
                   {"model_number", column.model_number},
                   {"fit", fit_to_json(column.fit)},
                   {"wald", test_to_json(column.wald)}};
        columns.push_back(std::move(entry));
    }
    json tests = json::object();
    for (const auto& [block, block_tests] : report.block_tests) {
        json entry = json::object();
        if (block_tests.hausman) entry["hausman"] = test_to_json(*block_tests.hausman);
        if (block_tests.lr_sar_sdm) entry["lr_sar_sdm"] = test_to_json(*block_tests.lr_sar_sdm);
        if (block_tests.lr_sem_sdm) entry["lr_sem_sdm"] = test_to_json(*block_tests.lr_sem_sdm);
        tests[std::to_string(block)] = std::move(entry);
    }
    return json{{"dependent", report.dependent}, {"columns", columns}, {"block_tests", tests}};
}

std::string to_text(const FitReport& report) {
    std::ostringstream out;
    out << "Estimated panel regressions\nDependent variable: " << report.dependent << "\n\n";

    // collect the union of row labels in first-seen order
    std::vector<std::string> terms;
    auto add_term = [&terms](const std::string& name) {
        for (const auto& t : terms) {
            if (t == name) return;
        }
        terms.push_back(name);
    };
    for (const auto& column : report.columns) {
        for (const auto& name : column.fit.regressor_names) add_term(name);
    }
    std::vector<std::string> spatial_terms;
    auto add_spatial = [&spatial_terms](const std::string& name) {
        for (const auto& t : spatial_terms) {
            if (t == name) return;
        }
        spatial_terms.push_back(name);
    };
    for (const auto& column : report.columns) {
        if (column.fit.rho) add_spatial("rho");
        if (column.fit.lambda) add_spatial("lambda");
        for (const auto& name : column.fit.lagged_names) add_spatial(name);
    }

    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{"Variable"};
    for (const auto& column : report.columns) {
        header.push_back(std::to_string(column.model_number) + " " + model_name(column.fit.kind));
    }
    rows.push_back(header);
    for (const auto& term : terms) {
        std::vector<std::string> row{term};
        for (const auto& column : report.columns) {
            std::string cell;
            for (Eigen::Index j = 0; j < column.fit.beta.size(); ++j) {
                if (column.fit.regressor_names[static_cast<std::size_t>(j)] == term) {
                    cell = coef_cell(column.fit.beta(j), column.fit.beta_se(j));
                }
            }
            row.push_back(cell);
        }
        rows.push_back(std::move(row));
    }
    for (const auto& term : spatial_terms) {
        std::vector<std::string> row{term};
        for (const auto& column : report.columns) {
            std::string cell;
            if (term == "rho" && column.fit.rho) cell = coef_cell(*column.fit.rho, column.fit.rho_se.value_or(0.0));
            if (term == "lambda" && column.fit.lambda) {
                cell = coef_cell(*column.fit.lambda, column.fit.lambda_se.value_or(0.0));
            }
            for (Eigen::Index j = 0; j < column.fit.gamma.size(); ++j) {
                if (column.fit.lagged_names[static_cast<std::size_t>(j)] == term) {
                    cell = coef_cell(column.fit.gamma(j), column.fit.gamma_se(j));
                }
            }
            row.push_back(cell);
        }
        rows.push_back(std::move(row));
    }
    {
        std::vector<std::string> row{"Wald (p)"};
        for (const auto& column : report.columns) {
            row.push_back(fixed(column.wald.statistic, 1) + " (" + fixed(column.wald.p_value, 3) + ")");
        }
        rows.push_back(std::move(row));
    }
    {
        std::vector<std::string> row{"Pseudo R2"};
        for (const auto& column : report.columns) row.push_back(fixed(column.fit.pseudo_r2, 2));
        rows.push_back(std::move(row));
    }
    {
        std::vector<std::string> row{"Log-likelihood"};
        for (const auto& column : report.columns) row.push_back(fixed(column.fit.loglik, 2));
        rows.push_back(std::move(row));
    }
    out << render_table(rows);

    for (const auto& [block, tests] : report.block_tests) {
        out << "\nBlock " << block << " model selection:\n";
        auto line = [&out](const char* label, const TestResult& t) {
            out << "  " << label << ": chi2(" << t.df << ") = " << fixed(t.statistic, 1)
                << ", p = " << fixed(t.p_value, 3) << "\n";
        };
        if (tests.hausman) line("Hausman FE vs RE", *tests.hausman);
        if (tests.lr_sar_sdm) line("LR SAR vs SDM", *tests.lr_sar_sdm);
        if (tests.lr_sem_sdm) line("LR SEM vs SDM", *tests.lr_sem_sdm);
    }
    out << "\na: p < 0.01, b: p < 0.05, c: p < 0.1; standard errors in brackets\n";
    return out.str();
}

CsvTable to_csv(const FitReport& report) {
    CsvTable table;
    table.header = {"block", "model_number", "model", "term", "estimate", "se", "p_value", "tier"};
    for (const auto& column : report.columns) {
        auto push = [&table, &column](const std::string& term, double estimate, double se) {
            const double p = coef_p(estimate, se);
            table.rows.push_back({std::to_string(column.block), std::to_string(column.model_number),
                                  model_name(column.fit.kind), term, format_double(estimate), format_double(se),
                                  format_double(p), significance_tier(p)});
        };
        for (Eigen::Index j = 0; j < column.fit.beta.size(); ++j) {
            push(column.fit.regressor_names[static_cast<std::size_t>(j)], column.fit.beta(j), column.fit.beta_se(j));
        }
        for (Eigen::Index j = 0; j < column.fit.gamma.size(); ++j) {
            push(column.fit.lagged_names[static_cast<std::size_t>(j)], column.fit.gamma(j), column.fit.gamma_se(j));
        }
        if (column.fit.rho) push("rho", *column.fit.rho, column.fit.rho_se.value_or(0.0));
        if (column.fit.lambda) push("lambda", *column.fit.lambda, column.fit.lambda_se.value_or(0.0));
    }
    return table;
}

// --- effects decomposition ----------------------------------------------

json to_json(const EffectsReport& report) {
    json columns = json::array();
    for (const auto& column : report.columns) {
        json rows = json::array();
        for (const auto& row : column.table.rows) {
            json entry{{"name", row.name},
                       {"direct", row.direct},
                       {"direct_se", row.direct_se},
                       {"direct_p", row.direct_p},
                       {"total", row.total},
                       {"total_se", row.total_se},
                       {"total_p", row.total_p}};
            if (row.indirect) {
                entry["indirect"] = *row.indirect;
                entry["indirect_se"] = row.indirect_se.value_or(0.0);
                entry["indirect_p"] = row.indirect_p.value_or(1.0);
            } else {
                entry["indirect"] = nullptr;  // not applicable for this model
            }
            rows.push_back(std::move(entry));
        }
        json entry{{"block", column.block},
                   {"model_number", column.model_number},
                   {"model", model_name(column.model)},
                   {"spillovers", column.table.spillovers},
                   {"draws", column.table.draws},
                   {"seed", column.table.seed},
                   {"rejected_draws", column.table.rejected_draws},
                   {"rows", rows}};
        if (column.convergence) {
            entry["convergence"] = json{{"B", column.convergence->B},
                                        {"rate", column.convergence->rate},
                                        {"significant", column.convergence->significant},
                                        {"divergent", column.convergence->divergent}};
        }
        columns.push_back(std::move(entry));
    }
    return json{{"dependent", report.dependent}, {"columns", columns}};
}

std::string to_text(const EffectsReport& report) {
    std::ostringstream out;
    out << "Direct, indirect and total effects\nDependent variable: " << report.dependent << "\n\n";

    std::vector<std::string> terms;
    for (const auto& column : report.columns) {
        for (const auto& row : column.table.rows) {
            bool found = false;
            for (const auto& t : terms) found = found || t == row.name;
            if (!found) terms.push_back(row.name);
        }
    }

    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{"Effect", "Variable"};
    for (const auto& column : report.columns) {
        header.push_back(std::to_string(column.model_number) + " " + model_name(column.model));
    }
    rows.push_back(header);
    const char* kinds[] = {"Direct", "Indirect", "Total"};
    for (const char* kind : kinds) {
        for (const auto& term : terms) {
            std::vector<std::string> row{kind, term};
            for (const auto& column : report.columns) {
                std::string cell;
                for (const auto& effect : column.table.rows) {
                    if (effect.name != term) continue;
                    if (std::string(kind) == "Direct") {
                        cell = coef_cell(effect.direct, effect.direct_se);
                    } else if (std::string(kind) == "Total") {
                        cell = coef_cell(effect.total, effect.total_se);
                    } else if (effect.indirect) {
                        cell = coef_cell(*effect.indirect, effect.indirect_se.value_or(0.0));
                    } else {
                        cell = "n/a";
                    }
                }
                row.push_back(cell);
            }
            rows.push_back(std::move(row));
        }
    }
    {
        std::vector<std::string> row{"Convergence", "rate"};
        for (const auto& column : report.columns) {
            row.push_back(column.convergence ? fixed(column.convergence->rate, 4) : "");
        }
        rows.push_back(std::move(row));
    }
    out << render_table(rows);
    out << "\na: p < 0.01, b: p < 0.05, c: p < 0.1; standard errors in brackets; n/a = not applicable\n";
    return out.str();
}

CsvTable to_csv(const EffectsReport& report) {
    CsvTable table;
    table.header = {"block", "model_number", "model", "effect", "term", "estimate", "se", "p_value"};
    for (const auto& column : report.columns) {
        for (const auto& row : column.table.rows) {
            table.rows.push_back({std::to_string(column.block), std::to_string(column.model_number),
                                  model_name(column.model), "direct", row.name, format_double(row.direct),
                                  format_double(row.direct_se), format_double(row.direct_p)});
            if (row.indirect) {
                table.rows.push_back({std::to_string(column.block), std::to_string(column.model_number),
                                      model_name(column.model), "indirect", row.name, format_double(*row.indirect),
                                      format_double(row.indirect_se.value_or(0.0)),
                                      format_double(row.indirect_p.value_or(1.0))});
            }
            table.rows.push_back({std::to_string(column.block), std::to_string(column.model_number),
                                  model_name(column.model), "total", row.name, format_double(row.total),
                                  format_double(row.total_se), format_double(row.total_p)});
        }
        if (column.convergence) {
            table.rows.push_back({std::to_string(column.block), std::to_string(column.model_number),
                                  model_name(column.model), "convergence_rate", "Ln(CI)_t-1",
                                  format_double(column.convergence->rate), "", ""});
        }
    }
    return table;
}

// --- panel unit roots ----------------------------------------------------

json to_json(const UnitRootReport& report) {
    json rows = json::array();
    for (const auto& [variable, result] : report.rows) {
        rows.push_back(json{{"variable", variable},
                            {"adjusted_t", result.adjusted_t},
                            {"p_value", result.p_value},
                            {"lags", result.lags},
                            {"n", result.n},
                            {"T", result.T}});
    }
    return json{{"null", "common unit root process"}, {"rows", rows}};
}

std::string to_text(const UnitRootReport& report) {
    std::ostringstream out;
    out << "Pooled panel unit root tests\n";
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"Variable", "Adjusted t*", "Probability", "Lags"});
    for (const auto& [variable, result] : report.rows) {
        rows.push_back({variable, fixed(result.adjusted_t, 4), fixed(result.p_value, 4),
                        std::to_string(result.lags)});
    }
    out << render_table(rows);
    out << "Null hypothesis: unit root (common unit root process)\n";
    return out.str();
}

CsvTable to_csv(const UnitRootReport& report) {
    CsvTable table;
    table.header = {"variable", "adjusted_t", "p_value", "lags", "n", "T"};
    for (const auto& [variable, result] : report.rows) {
        table.rows.push_back({variable, format_double(result.adjusted_t), format_double(result.p_value),
                              std::to_string(result.lags), std::to_string(result.n), std::to_string(result.T)});
    }
    return table;
}

// --- simulation campaign ---------------------------------------------------

json to_json(const CampaignReport& report) {
    json estimators = json::array();
    for (const auto& summary : report.estimators) {
        json coefficients = json::array();
        for (const auto& c : summary.coefficients) {
            coefficients.push_back(json{{"name", c.name},
                                        {"truth", c.truth},
                                        {"bias", c.bias},
                                        {"rmse", c.rmse},
                                        {"coverage", c.coverage}});
        }
        json entry{{"model", model_name(summary.model)},
                   {"reps_ok", summary.reps_ok},
                   {"reps_failed", summary.reps_failed},
                   {"coefficients", coefficients},
                   {"mean_convergence_rate", summary.mean_convergence_rate}};
        if (!summary.spatial.name.empty()) {
            entry["spatial"] = json{{"name", summary.spatial.name},
                                    {"truth", summary.spatial.truth},
                                    {"bias", summary.spatial.bias},
                                    {"rmse", summary.spatial.rmse},
                                    {"coverage", summary.spatial.coverage}};
        }
        estimators.push_back(std::move(entry));
    }
    json out{{"reps", report.reps}, {"seed", report.seed}, {"estimators", estimators}};
    if (report.has_rate_comparison) out["fe_rate_below_sdm"] = report.fe_rate_below_sdm;
    return out;
}

std::string to_text(const CampaignReport& report) {
    std::ostringstream out;
    out << "Simulation campaign (" << report.reps << " replications, seed " << report.seed << ")\n";
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"Estimator", "Term", "Truth", "Bias", "RMSE", "Coverage"});
    for (const auto& summary : report.estimators) {
        if (!summary.spatial.name.empty()) {
            rows.push_back({model_name(summary.model), summary.spatial.name, fixed(summary.spatial.truth, 3),
                            fixed(summary.spatial.bias, 4), fixed(summary.spatial.rmse, 4),
                            fixed(summary.spatial.coverage, 3)});
        }
        for (const auto& c : summary.coefficients) {
            rows.push_back({model_name(summary.model), c.name, fixed(c.truth, 3), fixed(c.bias, 4),
                            fixed(c.rmse, 4), fixed(c.coverage, 3)});
        }
        rows.push_back({model_name(summary.model), "convergence rate", "", fixed(summary.mean_convergence_rate, 4),
                        "", ""});
    }
    out << render_table(rows);
    for (const auto& summary : report.estimators) {
        if (summary.reps_failed > 0) {
            out << model_name(summary.model) << ": " << summary.reps_failed << " failed replications\n";
        }
    }
    if (report.has_rate_comparison) {
        out << "FE mean convergence rate " << (report.fe_rate_below_sdm ? "below" : "not below")
            << " SDM mean convergence rate\n";
    }
    return out.str();
}

CsvTable to_csv(const CampaignReport& report) {
    CsvTable table;
    table.header = {"model", "term", "truth", "bias", "rmse", "coverage"};
    for (const auto& summary : report.estimators) {
        if (!summary.spatial.name.empty()) {
            table.rows.push_back({model_name(summary.model), summary.spatial.name,
                                  format_double(summary.spatial.truth), format_double(summary.spatial.bias),
                                  format_double(summary.spatial.rmse), format_double(summary.spatial.coverage)});
        }
        for (const auto& c : summary.coefficients) {
            table.rows.push_back({model_name(summary.model), c.name, format_double(c.truth),
                                  format_double(c.bias), format_double(c.rmse), format_double(c.coverage)});
        }
        table.rows.push_back({model_name(summary.model), "mean_convergence_rate", "",
                              format_double(summary.mean_convergence_rate), "", ""});
    }
    return table;
}

}  // namespace spanel::report
