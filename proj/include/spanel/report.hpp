#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "spanel/csv.hpp"
#include "spanel/effects.hpp"
#include "spanel/estimators.hpp"
#include "spanel/montecarlo.hpp"
#include "spanel/testresult.hpp"
#include "spanel/unitroot.hpp"

namespace spanel::report {

using nlohmann::json;

// significance letters: a (p < .01), b (p < .05), c (p < .1)
std::string significance_tier(double p);

json test_to_json(const TestResult& test);

// --- autocorrelation ---------------------------------------------------

struct AutocorrReport {
    std::string variable;     // what the cross-section values are
    std::string growth_mode;  // "total" or "annual"
    int n = 0;
    std::vector<TestResult> tests;
};

json to_json(const AutocorrReport& report);
std::string to_text(const AutocorrReport& report);
CsvTable to_csv(const AutocorrReport& report);

// --- regression grid ----------------------------------------------------

struct ModelColumn {
    int block = 0;          // covariate block (0 for custom sets)
    int model_number = 0;   // 1-based position in the grid
    FitResult fit;
    TestResult wald;
};

struct BlockTests {
    std::optional<TestResult> hausman;
    std::optional<TestResult> lr_sar_sdm;
    std::optional<TestResult> lr_sem_sdm;
};

struct FitReport {
    std::string dependent;
    std::vector<ModelColumn> columns;
    std::map<int, BlockTests> block_tests;
};

json to_json(const FitReport& report);
std::string to_text(const FitReport& report);
CsvTable to_csv(const FitReport& report);

// --- effects decomposition ----------------------------------------------

struct EffectsColumn {
    int block = 0;
    int model_number = 0;
    ModelKind model = ModelKind::FE;
    EffectsTable table;
    std::optional<ConvergenceReport> convergence;
};

struct EffectsReport {
    std::string dependent;
    std::vector<EffectsColumn> columns;
};

json to_json(const EffectsReport& report);
std::string to_text(const EffectsReport& report);
CsvTable to_csv(const EffectsReport& report);

// --- panel unit roots ----------------------------------------------------

struct UnitRootReport {
    std::vector<std::pair<std::string, LlcResult>> rows;
};

json to_json(const UnitRootReport& report);
std::string to_text(const UnitRootReport& report);
CsvTable to_csv(const UnitRootReport& report);

// --- simulation campaign ---------------------------------------------------

json to_json(const CampaignReport& report);
std::string to_text(const CampaignReport& report);
CsvTable to_csv(const CampaignReport& report);

}  // namespace spanel::report
