#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spanel {

// One bilateral value-added trade observation.
struct FlowRecord {
    std::string origin;
    std::string dest;
    int year = 0;
    double value = 0.0;
};

// Row-standardized economic-proximity matrix W together with its symmetric
// raw base S (aggregated bilateral flow totals). Immutable once built.
class WeightMatrix {
  public:
    // raw must be symmetric with a zero diagonal; rows of W are raw rows
    // divided by their sums, zero rows kept as zero
    WeightMatrix(std::vector<std::string> labels, Eigen::MatrixXd raw);

    // loader path: keeps an already-standardized matrix bit-for-bit while
    // carrying the reconstructed raw base alongside it
    WeightMatrix(std::vector<std::string> labels, Eigen::MatrixXd raw, Eigen::MatrixXd standardized);

    int size() const { return static_cast<int>(labels_.size()); }
    const std::vector<std::string>& labels() const { return labels_; }
    const Eigen::MatrixXd& standardized() const { return w_; }
    const Eigen::MatrixXd& raw() const { return s_; }

    // countries whose raw row is identically zero (no recorded flows)
    const std::vector<int>& isolated() const { return isolated_; }

    // weighted degree: sum of incident raw proximities
    double weighted_degree(int i) const { return s_.row(i).sum(); }

    // Real spectrum of W. W = D^-1 S with S symmetric, so W is similar to
    // the symmetric D^-1/2 S D^-1/2 and its eigenvalues are real; computed
    // once at construction (shared by every likelihood evaluation, safe
    // for concurrent readers).
    const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }

    // open interval of spatial parameters keeping I - rho*W nonsingular,
    // (1/min_eig, 1/max_eig) from the nonzero eigenvalues
    std::pair<double, double> admissible_interval() const;

  private:
    void compute_eigenvalues();

    std::vector<std::string> labels_;
    Eigen::MatrixXd s_;
    Eigen::MatrixXd w_;
    std::vector<int> isolated_;
    Eigen::VectorXd eigenvalues_;
};

struct WeightBuildOptions {
    // records whose countries are not in the label list are skipped when
    // true, otherwise they raise a validation error
    bool skip_unknown_countries = true;
    // restrict aggregation to [year_from, year_to] when set
    std::optional<int> year_from;
    std::optional<int> year_to;
};

struct WeightBuildResult {
    WeightMatrix weights;
    std::size_t duplicate_records = 0;  // repeated (origin,dest,year) triples, summed
    std::size_t skipped_records = 0;    // records naming unknown countries
};

// Aggregates S_ij = sum over the period of (flow i->j + flow j->i) and row
// standardizes. The full-period aggregation makes W time-invariant.
WeightBuildResult build_weights(std::span<const FlowRecord> flows, const std::vector<std::string>& labels,
                                const WeightBuildOptions& options = {});

std::vector<FlowRecord> load_flows(const std::string& path);

// Labeled square matrix file. A body whose rows do not all sum to one is
// treated as a raw proximity base: symmetry-checked and standardized. A
// row-stochastic body is accepted as W and its raw base is reconstructed.
WeightMatrix load_weights(const std::string& path);

// writes the standardized matrix with a label header row/column
void save_weights(const std::string& path, const WeightMatrix& w);
// writes the symmetric raw base in the same layout
void save_raw_base(const std::string& path, const WeightMatrix& w);

// Undirected weighted graph over the raw base S in GML form: one node per
// country with its weighted degree, one edge per positive S_ij.
void export_graph(const WeightMatrix& w, const std::string& path);

}  // namespace spanel
