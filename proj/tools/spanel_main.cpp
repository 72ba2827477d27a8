#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spanel/autocorr.hpp"
#include "spanel/csv.hpp"
#include "spanel/effects.hpp"
#include "spanel/error.hpp"
#include "spanel/estimators.hpp"
#include "spanel/montecarlo.hpp"
#include "spanel/panel.hpp"
#include "spanel/report.hpp"
#include "spanel/rng.hpp"
#include "spanel/unitroot.hpp"
#include "spanel/weights.hpp"

namespace {

using namespace spanel;
namespace fs = std::filesystem;

bool log_enabled() {
    const char* level = std::getenv("SPANEL_LOG");
    return level != nullptr && std::string(level) != "quiet";
}

void log_stage(const std::string& message) {
    if (log_enabled()) std::cerr << "[spanel] " << message << '\n';
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string item;
    for (char c : csv) {
        if (c == ',') {
            if (!item.empty()) out.push_back(item);
            item.clear();
        } else {
            item += c;
        }
    }
    if (!item.empty()) out.push_back(item);
    return out;
}

struct OutputOptions {
    std::string out_dir = ".";
    std::string formats = "json,text";
};

void add_output_options(CLI::App* cmd, OutputOptions& options) {
    cmd->add_option("--out", options.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--format", options.formats, "comma list of json,text,csv")->capture_default_str();
}

// writes <stem>.json/.txt/.csv per the requested formats
void emit(const OutputOptions& options, const std::string& stem, const report::json& machine,
          const std::string& human, const CsvTable& table) {
    fs::create_directories(options.out_dir);
    std::set<std::string> formats;
    for (const auto& f : split_list(options.formats)) formats.insert(f);
    for (const auto& format : formats) {
        if (format != "json" && format != "text" && format != "csv") {
            fail(errc::usage, "unknown format '" + format + "' (expected json, text or csv)");
        }
    }
    const fs::path base = fs::path(options.out_dir) / stem;
    if (formats.count("json")) {
        std::ofstream out(base.string() + ".json");
        if (!out) fail(errc::io, "cannot write " + base.string() + ".json");
        out << machine.dump(2) << '\n';
    }
    if (formats.count("text")) {
        std::ofstream out(base.string() + ".txt");
        if (!out) fail(errc::io, "cannot write " + base.string() + ".txt");
        out << human;
        std::cout << human;
    }
    if (formats.count("csv")) write_csv(base.string() + ".csv", table);
    log_stage("wrote " + stem + " outputs to " + options.out_dir);
}

// --- shared input loading -------------------------------------------------

struct WeightSource {
    std::string flows_path;
    std::string weights_path;
    std::string labels_path;
    std::optional<int> year_from, year_to;
};

void add_weight_source(CLI::App* cmd, WeightSource& source) {
    auto* flows = cmd->add_option("--flows", source.flows_path, "bilateral flow CSV (origin,dest,year,value)");
    auto* weights = cmd->add_option("--weights", source.weights_path, "labeled weight-matrix CSV");
    flows->excludes(weights);
    cmd->add_option("--labels", source.labels_path, "country list file, one label per line");
    cmd->add_option("--from", source.year_from, "first flow year to aggregate");
    cmd->add_option("--to", source.year_to, "last flow year to aggregate");
}

std::vector<std::string> read_label_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::io, "cannot open '" + path + "'");
    std::vector<std::string> labels;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) labels.push_back(line);
    }
    return labels;
}

WeightBuildResult build_from_flows(const WeightSource& source) {
    const std::vector<FlowRecord> flows = load_flows(source.flows_path);
    std::vector<std::string> labels;
    if (!source.labels_path.empty()) {
        labels = read_label_file(source.labels_path);
    } else {
        std::set<std::string> seen;
        for (const auto& f : flows) {
            seen.insert(f.origin);
            seen.insert(f.dest);
        }
        labels.assign(seen.begin(), seen.end());
    }
    WeightBuildOptions options;
    options.year_from = source.year_from;
    options.year_to = source.year_to;
    return build_weights(flows, labels, options);
}

WeightMatrix load_weight_source(const WeightSource& source) {
    if (!source.flows_path.empty()) {
        auto result = build_from_flows(source);
        for (int idx : result.weights.isolated()) {
            std::cerr << "warning: " << result.weights.labels()[static_cast<std::size_t>(idx)]
                      << " has no recorded flows (isolated)\n";
        }
        if (result.duplicate_records > 0) {
            std::cerr << "warning: " << result.duplicate_records << " duplicate flow records were summed\n";
        }
        return std::move(result.weights);
    }
    if (!source.weights_path.empty()) return load_weights(source.weights_path);
    fail(errc::usage, "a weight source is required: pass --flows or --weights");
}

struct PanelArgs {
    std::string path;
    std::string schema = "auto";
    std::string balance = "strict";
    std::optional<int> year_from, year_to;
};

void add_panel_options(CLI::App* cmd, PanelArgs& args) {
    cmd->add_option("--panel", args.path, "panel CSV")->required();
    cmd->add_option("--schema", args.schema, "auto, raw or indicators")->capture_default_str();
    cmd->add_option("--balance", args.balance, "strict or drop")->capture_default_str();
    cmd->add_option("--panel-from", args.year_from, "first panel year");
    cmd->add_option("--panel-to", args.year_to, "last panel year");
}

PanelDataset load_panel_args(const PanelArgs& args) {
    PanelLoadOptions options;
    if (args.schema == "raw") {
        options.schema = PanelSchema::raw_columns();
    } else if (args.schema == "indicators") {
        options.schema = PanelSchema::indicator_columns();
    } else if (args.schema != "auto") {
        fail(errc::usage, "unknown schema '" + args.schema + "'");
    }
    if (args.balance == "drop") {
        options.balance = BalancePolicy::drop;
    } else if (args.balance != "strict") {
        fail(errc::usage, "unknown balance policy '" + args.balance + "'");
    }
    options.year_from = args.year_from;
    options.year_to = args.year_to;
    PanelDataset panel = load_panel(args.path, options);
    for (const auto& dropped : panel.dropped_countries()) {
        std::cerr << "warning: dropped " << dropped << " (missing years)\n";
    }
    return panel;
}

// panel and weights must describe the same countries in the same order
void check_country_match(const PanelDataset& panel, const WeightMatrix& weights) {
    if (panel.countries() != weights.labels()) {
        fail(errc::usage, "panel countries and weight labels do not match; rebuild the weights for this panel");
    }
}

// --- covariate/model grids -------------------------------------------------

struct GridArgs {
    std::string covariates = "block1,block2,block3,block4";
    std::string models = "FE,SAR,SEM,SDM";
    std::string lag = "Ln(GVC)_t-1";
};

void add_grid_options(CLI::App* cmd, GridArgs& args) {
    cmd->add_option("--covariates", args.covariates, "blocks (block1..block4) or custom:Y,EI,UR,GVC")
        ->capture_default_str();
    cmd->add_option("--models", args.models, "comma list of FE,RE,SAR,SEM,SDM")->capture_default_str();
    cmd->add_option("--lag", args.lag, "regressors receiving a W-lag in the SDM (comma list)")
        ->capture_default_str();
}

Indicator parse_indicator(const std::string& name) {
    for (Indicator v : kAllIndicators) {
        if (name == indicator_name(v)) return v;
    }
    fail(errc::usage, "unknown variable '" + name + "' (expected Y, EI, UR or GVC)");
}

struct CovariateSet {
    int block = 0;  // 0 for custom
    std::vector<Indicator> covariates;
};

// "block1,block4" or "custom:Y,GVC"; bare variable names extend the most
// recent custom set, so several custom sets can be mixed with blocks
std::vector<CovariateSet> parse_covariates(const std::string& spec) {
    std::vector<CovariateSet> sets;
    bool custom_open = false;
    for (const auto& item : split_list(spec)) {
        if (item.rfind("block", 0) == 0) {
            CovariateSet set;
            set.block = std::atoi(item.c_str() + 5);
            set.covariates = covariate_block(set.block);
            sets.push_back(std::move(set));
            custom_open = false;
        } else if (item.rfind("custom:", 0) == 0) {
            CovariateSet set;
            const std::string first = item.substr(7);
            if (!first.empty()) set.covariates.push_back(parse_indicator(first));
            sets.push_back(std::move(set));
            custom_open = true;
        } else if (custom_open) {
            sets.back().covariates.push_back(parse_indicator(item));
        } else {
            fail(errc::usage, "unknown covariate set '" + item + "' (expected blockN or custom:...)");
        }
    }
    if (sets.empty()) fail(errc::usage, "no covariate sets requested");
    for (const auto& set : sets) {
        if (set.covariates.empty()) fail(errc::usage, "empty custom covariate set");
    }
    return sets;
}

std::vector<ModelKind> parse_models(const std::string& spec) {
    std::vector<ModelKind> models;
    for (const auto& name : split_list(spec)) models.push_back(parse_model(name));
    if (models.empty()) fail(errc::usage, "no models requested");
    return models;
}

struct FittedGrid {
    report::FitReport fit_report;
    std::vector<RegressionFrame> frames;
};

FittedGrid fit_grid(const PanelDataset& panel, const WeightMatrix* weights,
                    const std::vector<CovariateSet>& sets, const std::vector<ModelKind>& models,
                    const std::vector<std::string>& lag, const FitOptions& fit_options) {
    FittedGrid grid;
    grid.fit_report.dependent = "Ln(CI_t/CI_t-1)";
    int model_number = 0;
    for (std::size_t s = 0; s < sets.size(); ++s) {
        const RegressionFrame frame = build_frame(panel, sets[s].covariates);
        grid.frames.push_back(frame);
        const int block = sets[s].block != 0 ? sets[s].block : static_cast<int>(s + 1);

        std::optional<FitResult> fe, re, sar, sem, sdm;
        for (ModelKind kind : models) {
            log_stage("fitting " + std::string(model_name(kind)) + " on set " + std::to_string(s + 1));
            ModelSpec spec;
            spec.kind = kind;
            spec.options = fit_options;
            if (kind == ModelKind::SDM) {
                spec.spatial_lag_regressors = lag;
                for (const auto& name : lag) {
                    if (std::find(frame.regressor_names.begin(), frame.regressor_names.end(), name) ==
                        frame.regressor_names.end()) {
                        fail(errc::usage, "W-lag regressor '" + name +
                                              "' is not in this covariate set; pass --lag explicitly");
                    }
                }
            }
            FitResult fit = fit_model(spec, frame, weights);
            for (const auto& warning : fit.warnings) std::cerr << "warning: " << warning << '\n';
            report::ModelColumn column;
            column.block = block;
            column.model_number = ++model_number;
            column.wald = wald_test(fit);
            column.fit = std::move(fit);
            switch (kind) {
                case ModelKind::FE: fe = column.fit; break;
                case ModelKind::RE: re = column.fit; break;
                case ModelKind::SAR: sar = column.fit; break;
                case ModelKind::SEM: sem = column.fit; break;
                case ModelKind::SDM: sdm = column.fit; break;
            }
            grid.fit_report.columns.push_back(std::move(column));
        }

        report::BlockTests tests;
        if (fe) {
            if (!re) re = fit_re(frame);  // the specification test needs the RE side
            tests.hausman = hausman_test(*fe, *re);
        }
        if (sar && sdm) tests.lr_sar_sdm = lr_test(*sar, *sdm);
        if (sem && sdm) tests.lr_sem_sdm = lr_test(*sem, *sdm);
        grid.fit_report.block_tests[block] = tests;
    }
    return grid;
}

// --- subcommands ------------------------------------------------------------

int cmd_weights(const WeightSource& source, const OutputOptions& output) {
    log_stage("building weight matrix");
    if (source.flows_path.empty()) fail(errc::usage, "weights subcommand needs --flows");
    auto result = build_from_flows(source);
    for (int idx : result.weights.isolated()) {
        std::cerr << "warning: " << result.weights.labels()[static_cast<std::size_t>(idx)]
                  << " has no recorded flows (isolated)\n";
    }
    if (result.duplicate_records > 0) {
        std::cerr << "warning: " << result.duplicate_records << " duplicate flow records were summed\n";
    }
    fs::create_directories(output.out_dir);
    const fs::path dir(output.out_dir);
    save_weights((dir / "weights.csv").string(), result.weights);
    save_raw_base((dir / "proximity.csv").string(), result.weights);
    export_graph(result.weights, (dir / "graph.gml").string());
    std::cout << "wrote " << (dir / "weights.csv").string() << ", " << (dir / "proximity.csv").string()
              << " and " << (dir / "graph.gml").string() << " (" << result.weights.size() << " countries, "
              << result.skipped_records << " skipped records)\n";
    return 0;
}

std::vector<double> ci_growth(const PanelDataset& panel, const std::string& mode) {
    const int last = panel.periods() - 1;
    std::vector<double> z(static_cast<std::size_t>(panel.n()));
    for (int i = 0; i < panel.n(); ++i) {
        const double first_ci = panel.at(Indicator::CI, i, 0);
        const double last_ci = panel.at(Indicator::CI, i, last);
        if (!(first_ci > 0.0) || !(last_ci > 0.0)) {
            fail(errc::domain, "nonpositive CI for " + panel.countries()[i]);
        }
        double growth = std::log(last_ci / first_ci);
        if (mode == "annual") growth /= std::max(1, last);
        z[static_cast<std::size_t>(i)] = growth;
    }
    return z;
}

int cmd_autocorr(const PanelArgs& panel_args, const WeightSource& source, const std::string& growth,
                 int permutations, std::uint64_t seed, const OutputOptions& output) {
    const PanelDataset panel = load_panel_args(panel_args);
    const WeightMatrix weights = load_weight_source(source);
    check_country_match(panel, weights);
    if (growth != "total" && growth != "annual") fail(errc::usage, "growth must be total or annual");
    const std::vector<double> z = ci_growth(panel, growth);

    report::AutocorrReport rep;
    rep.variable = "CI growth";
    rep.growth_mode = growth;
    rep.n = panel.n();
    rep.tests.push_back(morans_i(z, weights));
    rep.tests.push_back(gearys_c(z, weights));
    if (permutations > 0) {
        rep.tests.push_back(permutation_test(z, weights, AutocorrStatistic::moran, permutations,
                                             derive_seed(seed, "autocorr-moran")));
        rep.tests.push_back(permutation_test(z, weights, AutocorrStatistic::geary, permutations,
                                             derive_seed(seed, "autocorr-geary")));
    }
    emit(output, "autocorr", report::to_json(rep), report::to_text(rep), report::to_csv(rep));
    return 0;
}

int cmd_fit(const PanelArgs& panel_args, const WeightSource& source, const GridArgs& grid_args,
            bool orthonormal, bool numerical_hessian, const OutputOptions& output) {
    const PanelDataset panel = load_panel_args(panel_args);
    const std::vector<CovariateSet> sets = parse_covariates(grid_args.covariates);
    const std::vector<ModelKind> models = parse_models(grid_args.models);
    const bool needs_weights = std::any_of(models.begin(), models.end(), [](ModelKind m) {
        return m == ModelKind::SAR || m == ModelKind::SEM || m == ModelKind::SDM;
    });
    std::optional<WeightMatrix> weights;
    if (needs_weights) {
        if (source.flows_path.empty() && source.weights_path.empty()) {
            fail(errc::usage, "spatial models need --flows or --weights");
        }
        weights = load_weight_source(source);
        check_country_match(panel, *weights);
    }
    FitOptions fit_options;
    fit_options.orthonormal_transform = orthonormal;
    fit_options.numerical_hessian = numerical_hessian;
    const FittedGrid grid = fit_grid(panel, weights ? &*weights : nullptr, sets, models,
                                     split_list(grid_args.lag), fit_options);
    emit(output, "fit", report::to_json(grid.fit_report), report::to_text(grid.fit_report),
         report::to_csv(grid.fit_report));
    return 0;
}

int cmd_effects(const PanelArgs& panel_args, const WeightSource& source, const GridArgs& grid_args,
                int draws, std::uint64_t seed, const OutputOptions& output) {
    const PanelDataset panel = load_panel_args(panel_args);
    const WeightMatrix weights = load_weight_source(source);
    check_country_match(panel, weights);
    const std::vector<CovariateSet> sets = parse_covariates(grid_args.covariates);
    const std::vector<ModelKind> models = parse_models(grid_args.models);
    const FittedGrid grid = fit_grid(panel, &weights, sets, models, split_list(grid_args.lag), {});

    report::EffectsReport rep;
    rep.dependent = "Ln(CI_t/CI_t-1)";
    for (std::size_t c = 0; c < grid.fit_report.columns.size(); ++c) {
        const auto& column = grid.fit_report.columns[c];
        report::EffectsColumn out;
        out.block = column.block;
        out.model_number = column.model_number;
        out.model = column.fit.kind;
        log_stage("effects for model " + std::to_string(column.model_number));
        out.table = effects_inference(column.fit, weights, draws,
                                      derive_seed(seed, "effects", static_cast<std::uint64_t>(c)));
        out.convergence = convergence_from_effects(out.table);
        if (out.convergence->divergent) {
            std::cerr << "warning: model " << column.model_number
                      << " has a positive total effect of the lagged level (divergence)\n";
        }
        rep.columns.push_back(std::move(out));
    }
    emit(output, "effects", report::to_json(rep), report::to_text(rep), report::to_csv(rep));
    return 0;
}

int cmd_unitroot(const PanelArgs& panel_args, std::optional<int> lags, const std::string& deterministic,
                 const OutputOptions& output) {
    const PanelDataset panel = load_panel_args(panel_args);
    LlcOptions options;
    options.lags = lags;
    if (deterministic == "none") {
        options.deterministic = LlcDeterministic::none;
    } else if (deterministic == "intercept") {
        options.deterministic = LlcDeterministic::intercept;
    } else if (deterministic == "trend") {
        options.deterministic = LlcDeterministic::trend;
    } else {
        fail(errc::usage, "deterministic must be none, intercept or trend");
    }

    report::UnitRootReport rep;
    for (Indicator v : kAllIndicators) {
        Eigen::MatrixXd logs(panel.n(), panel.periods());
        for (int i = 0; i < panel.n(); ++i) {
            for (int t = 0; t < panel.periods(); ++t) {
                const double value = panel.at(v, i, t);
                if (!(value > 0.0)) {
                    fail(errc::domain, std::string("cannot take log of ") + indicator_name(v) + " for " +
                                           panel.countries()[i] + "/" + std::to_string(panel.years()[t]));
                }
                logs(i, t) = std::log(value);
            }
        }
        log_stage(std::string("unit-root test for Ln(") + indicator_name(v) + ")");
        rep.rows.emplace_back(std::string("Ln(") + indicator_name(v) + ")", llc_test(logs, options));
    }
    emit(output, "unitroot", report::to_json(rep), report::to_text(rep), report::to_csv(rep));
    return 0;
}

struct SimArgs {
    int n = 50;
    int T = 10;
    std::string model = "SDM";
    double rho = 0.4;
    std::string beta = "-0.2,0.1";
    std::string gamma = "-0.16";
    std::string lag_indices = "2";
    double sigma = 0.1;
    double mu_scale = 1.0;
    double degree = 6.0;
    int reps = 200;
    std::string estimators = "FE,SAR,SEM,SDM";
    std::uint64_t seed = 1;
};

int cmd_simulate(const SimArgs& args, const OutputOptions& output) {
    if (args.reps <= 0) fail(errc::usage, "reps must be positive");
    SimConfig cfg;
    cfg.n = args.n;
    cfg.T_eff = args.T;
    cfg.model = parse_model(args.model);
    cfg.spatial_param = args.rho;
    cfg.beta.clear();
    for (const auto& b : split_list(args.beta)) cfg.beta.push_back(std::atof(b.c_str()));
    cfg.sigma = args.sigma;
    cfg.mu_scale = args.mu_scale;
    cfg.expected_degree = args.degree;
    cfg.seed = args.seed;
    if (cfg.model == ModelKind::SDM) {
        for (const auto& g : split_list(args.gamma)) cfg.gamma.push_back(std::atof(g.c_str()));
        for (const auto& idx : split_list(args.lag_indices)) {
            cfg.lagged_regressors.push_back(std::atoi(idx.c_str()) - 1);  // 1-based on the CLI
        }
    }
    const std::vector<ModelKind> estimators = parse_models(args.estimators);
    log_stage("running campaign: " + std::to_string(args.reps) + " replications");
    const CampaignReport rep = run_campaign(cfg, args.reps, estimators);
    emit(output, "campaign", report::to_json(rep), report::to_text(rep), report::to_csv(rep));
    return 0;
}

// --- report umbrella --------------------------------------------------------

std::map<std::string, std::string> read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::io, "cannot open config '" + path + "'");
    std::map<std::string, std::string> config;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(errc::ingestion, "config line without '=': " + line);
        std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
            while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
        };
        trim(key);
        trim(value);
        config[key] = value;
    }
    return config;
}

int cmd_report(const std::string& config_path, const OutputOptions& cli_output, bool out_flag_given,
               bool format_flag_given) {
    const auto config = read_config(config_path);
    auto get = [&config](const std::string& key, const std::string& fallback) {
        const auto it = config.find(key);
        return it == config.end() ? fallback : it->second;
    };

    // explicit flags win over config keys
    OutputOptions output = cli_output;
    if (!out_flag_given && config.count("out")) output.out_dir = config.at("out");
    if (!format_flag_given && config.count("format")) output.formats = config.at("format");

    PanelArgs panel_args;
    panel_args.path = get("panel", "");
    if (panel_args.path.empty()) fail(errc::usage, "config needs panel=<csv>");
    panel_args.schema = get("schema", "auto");
    panel_args.balance = get("balance", "strict");

    WeightSource source;
    source.flows_path = get("flows", "");
    source.weights_path = get("weights", "");
    source.labels_path = get("labels", "");
    if (source.flows_path.empty() && source.weights_path.empty()) {
        fail(errc::usage, "config needs flows=<csv> or weights=<csv>");
    }
    if (!source.flows_path.empty() && !source.weights_path.empty()) {
        fail(errc::usage, "config must name exactly one weight source");
    }

    GridArgs grid_args;
    grid_args.covariates = get("covariates", grid_args.covariates);
    grid_args.models = get("models", grid_args.models);
    grid_args.lag = get("lag", grid_args.lag);

    const std::uint64_t seed = std::strtoull(get("seed", "1").c_str(), nullptr, 10);
    const int draws = std::atoi(get("draws", "1000").c_str());
    const int permutations = std::atoi(get("permutations", "999").c_str());
    const std::string growth = get("growth", "total");
    std::optional<int> llc_lags;
    if (config.count("lags")) llc_lags = std::atoi(config.at("lags").c_str());
    const std::string deterministic = get("deterministic", "intercept");

    // stage order mirrors the pipeline: weights, autocorrelation, unit
    // roots, regressions, effects
    if (!source.flows_path.empty()) cmd_weights(source, output);
    cmd_autocorr(panel_args, source, growth, permutations, seed, output);
    cmd_unitroot(panel_args, llc_lags, deterministic, output);
    cmd_fit(panel_args, source, grid_args, false, false, output);
    cmd_effects(panel_args, source, grid_args, draws, seed, output);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spatial panel toolkit: trade-flow weights, autocorrelation statistics, ML spatial "
                 "panel regressions, effect decompositions and convergence rates"};
    app.require_subcommand(1);

    OutputOptions output;
    WeightSource source;
    PanelArgs panel_args;
    GridArgs grid_args;
    std::string growth = "total";
    int permutations = 0;
    std::uint64_t seed = 1;
    int draws = 1000;
    bool orthonormal = false, numerical_hessian = false;
    std::optional<int> llc_lags;
    std::string deterministic = "intercept";
    SimArgs sim_args;
    std::string config_path;

    auto* weights_cmd = app.add_subcommand("weights", "build the trade-flow weight matrix and graph");
    add_weight_source(weights_cmd, source);
    add_output_options(weights_cmd, output);

    auto* autocorr_cmd = app.add_subcommand("autocorr", "global autocorrelation of CI growth");
    add_panel_options(autocorr_cmd, panel_args);
    add_weight_source(autocorr_cmd, source);
    autocorr_cmd->add_option("--growth", growth, "total or annual")->capture_default_str();
    autocorr_cmd->add_option("--permutations", permutations, "permutation replications (0 = off)")
        ->capture_default_str();
    autocorr_cmd->add_option("--seed", seed, "master seed")->capture_default_str();
    add_output_options(autocorr_cmd, output);

    auto* fit_cmd = app.add_subcommand("fit", "estimate the panel regression grid");
    add_panel_options(fit_cmd, panel_args);
    add_weight_source(fit_cmd, source);
    add_grid_options(fit_cmd, grid_args);
    fit_cmd->add_flag("--orthonormal", orthonormal, "forward orthogonal deviations instead of demeaning");
    fit_cmd->add_flag("--numerical-hessian", numerical_hessian, "numerical-Hessian standard errors");
    add_output_options(fit_cmd, output);

    auto* effects_cmd = app.add_subcommand("effects", "direct/indirect/total effects and convergence rates");
    add_panel_options(effects_cmd, panel_args);
    add_weight_source(effects_cmd, source);
    add_grid_options(effects_cmd, grid_args);
    effects_cmd->add_option("--draws", draws, "simulation draws for effect inference")->capture_default_str();
    effects_cmd->add_option("--seed", seed, "master seed")->capture_default_str();
    add_output_options(effects_cmd, output);

    auto* unitroot_cmd = app.add_subcommand("unitroot", "pooled panel unit-root tests of the log variables");
    add_panel_options(unitroot_cmd, panel_args);
    unitroot_cmd->add_option("--lags", llc_lags, "common ADF lag order (default ceil(T^(1/4)))");
    unitroot_cmd->add_option("--deterministic", deterministic, "none, intercept or trend")
        ->capture_default_str();
    add_output_options(unitroot_cmd, output);

    auto* simulate_cmd = app.add_subcommand("simulate", "estimator-validation campaign on synthetic panels");
    simulate_cmd->add_option("--n", sim_args.n, "cross-section size")->capture_default_str();
    simulate_cmd->add_option("--T", sim_args.T, "time periods")->capture_default_str();
    simulate_cmd->add_option("--model", sim_args.model, "generating model: SAR, SEM or SDM")
        ->capture_default_str();
    simulate_cmd->add_option("--rho", sim_args.rho, "true spatial parameter")->capture_default_str();
    simulate_cmd->add_option("--beta", sim_args.beta, "true coefficients (comma list)")->capture_default_str();
    simulate_cmd->add_option("--gamma", sim_args.gamma, "true W-lag coefficients (SDM)")->capture_default_str();
    simulate_cmd->add_option("--lag-index", sim_args.lag_indices, "1-based regressor indices receiving W-lags")
        ->capture_default_str();
    simulate_cmd->add_option("--sigma", sim_args.sigma, "error standard deviation")->capture_default_str();
    simulate_cmd->add_option("--mu-scale", sim_args.mu_scale, "fixed-effect dispersion")->capture_default_str();
    simulate_cmd->add_option("--degree", sim_args.degree, "expected degree of the synthetic graph")
        ->capture_default_str();
    simulate_cmd->add_option("--reps", sim_args.reps, "replications")->capture_default_str();
    simulate_cmd->add_option("--estimators", sim_args.estimators, "models to fit per replication")
        ->capture_default_str();
    simulate_cmd->add_option("--seed", sim_args.seed, "master seed")->capture_default_str();
    add_output_options(simulate_cmd, output);

    auto* report_cmd = app.add_subcommand("report", "run the full pipeline from a key=value config file");
    report_cmd->add_option("--config", config_path, "plain-text config file")->required();
    add_output_options(report_cmd, output);

    CLI11_PARSE(app, argc, argv);

    try {
        if (weights_cmd->parsed()) return cmd_weights(source, output);
        if (autocorr_cmd->parsed()) return cmd_autocorr(panel_args, source, growth, permutations, seed, output);
        if (fit_cmd->parsed()) return cmd_fit(panel_args, source, grid_args, orthonormal, numerical_hessian, output);
        if (effects_cmd->parsed()) return cmd_effects(panel_args, source, grid_args, draws, seed, output);
        if (unitroot_cmd->parsed()) return cmd_unitroot(panel_args, llc_lags, deterministic, output);
        if (simulate_cmd->parsed()) return cmd_simulate(sim_args, output);
        if (report_cmd->parsed()) {
            return cmd_report(config_path, output, report_cmd->count("--out") > 0,
                              report_cmd->count("--format") > 0);
        }
    } catch (const spanel::Error& error) {
        std::cerr << "error: " << error.what() << '\n';
        return 1;
    } catch (const std::exception& error) {
        std::cerr << "unexpected error: " << error.what() << '\n';
        return 2;
    }
    return 0;
}
