#include "spanel/weights.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "spanel/csv.hpp"
#include "spanel/error.hpp"

namespace spanel {

namespace {

constexpr double kSymmetryTol = 1e-9;
constexpr double kRowSumTol = 1e-8;

void check_square_nonnegative(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) {
        fail(errc::validation, "weight matrix must be square, got " + std::to_string(m.rows()) + "x" +
                                   std::to_string(m.cols()));
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (!(m(i, j) >= 0.0) || !std::isfinite(m(i, j))) {
                fail(errc::validation, "weight entry (" + std::to_string(i) + "," + std::to_string(j) +
                                           ") is negative or non-finite");
            }
        }
    }
}

Eigen::MatrixXd row_standardize(const Eigen::MatrixXd& s, std::vector<int>& isolated) {
    const Eigen::Index n = s.rows();
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    isolated.clear();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double row_sum = s.row(i).sum();
        if (row_sum > 0.0) {
            w.row(i) = s.row(i) / row_sum;
        } else {
            isolated.push_back(static_cast<int>(i));
        }
    }
    return w;
}

}  // namespace

WeightMatrix::WeightMatrix(std::vector<std::string> labels, Eigen::MatrixXd raw)
    : labels_(std::move(labels)), s_(std::move(raw)) {
    check_square_nonnegative(s_);
    if (static_cast<std::size_t>(s_.rows()) != labels_.size()) {
        fail(errc::validation, "label count does not match matrix dimension");
    }
    const double scale = std::max(1.0, s_.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < s_.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < s_.cols(); ++j) {
            if (std::fabs(s_(i, j) - s_(j, i)) > kSymmetryTol * scale) {
                fail(errc::validation, "raw proximity matrix asymmetric at (" + labels_[i] + "," + labels_[j] +
                                           "): " + format_double(s_(i, j)) + " vs " + format_double(s_(j, i)));
            }
            s_(j, i) = s_(i, j);  // exact symmetry
        }
        s_(i, i) = 0.0;  // self-proximity excluded
    }
    w_ = row_standardize(s_, isolated_);
    compute_eigenvalues();
}

WeightMatrix::WeightMatrix(std::vector<std::string> labels, Eigen::MatrixXd raw, Eigen::MatrixXd standardized)
    : WeightMatrix(std::move(labels), std::move(raw)) {
    if (standardized.rows() != s_.rows() || standardized.cols() != s_.cols()) {
        fail(errc::validation, "standardized matrix dimension mismatch");
    }
    if (((standardized.array() > 0.0) != (s_.array() > 0.0)).any()) {
        fail(errc::validation, "standardized matrix support differs from raw base");
    }
    w_ = std::move(standardized);
}

void WeightMatrix::compute_eigenvalues() {
    const int n = size();
    std::vector<int> active;
    active.reserve(n);
    for (int i = 0; i < n; ++i) {
        if (s_.row(i).sum() > 0.0) active.push_back(i);
    }
    Eigen::VectorXd eigs = Eigen::VectorXd::Zero(n);
    if (!active.empty()) {
        // W = D^-1 S shares its spectrum with the symmetric D^-1/2 S D^-1/2
        // restricted to rows with positive sums; isolated rows add zeros.
        const int m = static_cast<int>(active.size());
        Eigen::VectorXd inv_sqrt(m);
        for (int a = 0; a < m; ++a) inv_sqrt(a) = 1.0 / std::sqrt(s_.row(active[a]).sum());
        Eigen::MatrixXd sym(m, m);
        for (int a = 0; a < m; ++a) {
            for (int b = 0; b < m; ++b) {
                sym(a, b) = s_(active[a], active[b]) * inv_sqrt(a) * inv_sqrt(b);
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
        if (solver.info() != Eigen::Success) fail(errc::numerical, "eigenvalue computation failed");
        eigs.head(m) = solver.eigenvalues();
    }
    std::sort(eigs.data(), eigs.data() + eigs.size());
    eigenvalues_ = std::move(eigs);
}

std::pair<double, double> WeightMatrix::admissible_interval() const {
    const Eigen::VectorXd& eigs = eigenvalues();
    const double min_eig = eigs(0);
    const double max_eig = eigs(eigs.size() - 1);
    if (max_eig <= 0.0) fail(errc::degenerate, "weight matrix has no positive eigenvalue");
    const double lo = min_eig < 0.0 ? 1.0 / min_eig : -1e12;
    return {lo, 1.0 / max_eig};
}

WeightBuildResult build_weights(std::span<const FlowRecord> flows, const std::vector<std::string>& labels,
                                const WeightBuildOptions& options) {
    if (flows.empty()) fail(errc::validation, "no flow records");
    if (labels.empty()) fail(errc::validation, "empty country label list");
    std::unordered_map<std::string, int> index;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!index.emplace(labels[i], static_cast<int>(i)).second) {
            fail(errc::validation, "duplicate country label '" + labels[i] + "'");
        }
    }

    const int n = static_cast<int>(labels.size());
    Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(n, n);
    std::unordered_set<std::string> seen;
    std::size_t duplicates = 0, skipped = 0, used = 0;
    for (const FlowRecord& rec : flows) {
        if (options.year_from && rec.year < *options.year_from) continue;
        if (options.year_to && rec.year > *options.year_to) continue;
        auto oi = index.find(rec.origin);
        auto di = index.find(rec.dest);
        if (oi == index.end() || di == index.end()) {
            if (!options.skip_unknown_countries) {
                fail(errc::validation, "flow references unknown country '" +
                                           (oi == index.end() ? rec.origin : rec.dest) + "'");
            }
            ++skipped;
            continue;
        }
        if (rec.value < 0.0 || !std::isfinite(rec.value)) {
            fail(errc::validation, "negative or non-finite flow " + rec.origin + "->" + rec.dest + " in " +
                                       std::to_string(rec.year));
        }
        if (oi->second == di->second) continue;  // domestic flows excluded
        if (!seen.insert(rec.origin + '\x1f' + rec.dest + '\x1f' + std::to_string(rec.year)).second) {
            ++duplicates;
        }
        // both directions enter the symmetric total
        raw(oi->second, di->second) += rec.value;
        raw(di->second, oi->second) += rec.value;
        ++used;
    }
    if (used == 0) fail(errc::validation, "no flow records within the requested period and label set");
    return WeightBuildResult{WeightMatrix(labels, std::move(raw)), duplicates, skipped};
}

std::vector<FlowRecord> load_flows(const std::string& path) {
    const CsvTable table = read_csv(path);
    const int c_origin = table.column("origin");
    const int c_dest = table.column("dest");
    const int c_year = table.column("year");
    const int c_value = table.column("value");
    if (c_origin < 0 || c_dest < 0 || c_year < 0 || c_value < 0) {
        fail(errc::ingestion, path + ": expected columns origin,dest,year,value");
    }
    std::vector<FlowRecord> flows;
    flows.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string context = path + " row " + std::to_string(r + 2);
        flows.push_back(FlowRecord{row[c_origin], row[c_dest],
                                   static_cast<int>(parse_long(row[c_year], context)),
                                   parse_double(row[c_value], context)});
    }
    return flows;
}

namespace {

// Reconstruct the symmetric base behind a row-stochastic W: find row scales
// d with d_i w_ij = d_j w_ji across each connected component (the matrix is
// reversible exactly when it came from a symmetric proximity base).
Eigen::MatrixXd reconstruct_raw_base(const std::vector<std::string>& labels, const Eigen::MatrixXd& w) {
    const int n = static_cast<int>(w.rows());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if ((w(i, j) > 0.0) != (w(j, i) > 0.0)) {
                fail(errc::validation, "standardized matrix support asymmetric at (" + labels[i] + "," +
                                           labels[j] + ")");
            }
        }
    }
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
    std::vector<char> visited(n, 0);
    for (int root = 0; root < n; ++root) {
        if (visited[root] || w.row(root).sum() == 0.0) continue;
        std::vector<int> component;
        std::deque<int> queue{root};
        visited[root] = 1;
        d(root) = 1.0;
        while (!queue.empty()) {
            const int i = queue.front();
            queue.pop_front();
            component.push_back(i);
            for (int j = 0; j < n; ++j) {
                if (w(i, j) <= 0.0 || visited[j]) continue;
                d(j) = d(i) * w(i, j) / w(j, i);
                visited[j] = 1;
                queue.push_back(j);
            }
        }
        double max_d = 0.0;
        for (int i : component) max_d = std::max(max_d, d(i));
        for (int i : component) d(i) /= max_d;
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (w(i, j) > 0.0 && std::fabs(d(i) * w(i, j) - d(j) * w(j, i)) > kSymmetryTol) {
                fail(errc::validation, "standardized matrix is not derived from a symmetric proximity base (" +
                                           labels[i] + "," + labels[j] + ")");
            }
        }
    }
    Eigen::MatrixXd raw(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) raw(i, j) = d(i) * w(i, j);
    }
    return raw;
}

std::pair<std::vector<std::string>, Eigen::MatrixXd> read_matrix_file(const std::string& path) {
    const CsvTable table = read_csv(path);
    if (table.header.size() < 2) fail(errc::validation, path + ": matrix file needs a label header");
    std::vector<std::string> labels(table.header.begin() + 1, table.header.end());
    const int n = static_cast<int>(labels.size());
    if (static_cast<int>(table.rows.size()) != n) {
        fail(errc::validation, path + ": matrix not square (" + std::to_string(table.rows.size()) + " rows, " +
                                   std::to_string(n) + " columns)");
    }
    Eigen::MatrixXd body(n, n);
    for (int i = 0; i < n; ++i) {
        const auto& row = table.rows[i];
        if (row[0] != labels[i]) {
            fail(errc::validation, path + ": row label '" + row[0] + "' does not match column label '" +
                                       labels[i] + "'");
        }
        for (int j = 0; j < n; ++j) {
            body(i, j) = parse_double(row[j + 1], path + " row " + std::to_string(i + 2));
        }
    }
    return {std::move(labels), std::move(body)};
}

}  // namespace

WeightMatrix load_weights(const std::string& path) {
    auto [labels, body] = read_matrix_file(path);
    check_square_nonnegative(body);
    bool standardized = true;
    for (Eigen::Index i = 0; i < body.rows() && standardized; ++i) {
        const double row_sum = body.row(i).sum();
        if (row_sum != 0.0 && std::fabs(row_sum - 1.0) > kRowSumTol) standardized = false;
    }
    if (!standardized) {
        return WeightMatrix(std::move(labels), std::move(body));
    }
    for (Eigen::Index i = 0; i < body.rows(); ++i) {
        if (body(i, i) != 0.0) fail(errc::validation, path + ": standardized matrix has a nonzero diagonal");
    }
    Eigen::MatrixXd raw = reconstruct_raw_base(labels, body);
    return WeightMatrix(std::move(labels), std::move(raw), std::move(body));
}

namespace {

void save_matrix(const std::string& path, const std::vector<std::string>& labels, const Eigen::MatrixXd& m) {
    CsvTable table;
    table.header.push_back("country");
    table.header.insert(table.header.end(), labels.begin(), labels.end());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<std::string> row;
        row.reserve(labels.size() + 1);
        row.push_back(labels[i]);
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(format_double(m(i, j)));
        table.rows.push_back(std::move(row));
    }
    write_csv(path, table);
}

}  // namespace

void save_weights(const std::string& path, const WeightMatrix& w) {
    save_matrix(path, w.labels(), w.standardized());
}

void save_raw_base(const std::string& path, const WeightMatrix& w) { save_matrix(path, w.labels(), w.raw()); }

void export_graph(const WeightMatrix& w, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(errc::io, "cannot open '" + path + "' for writing");
    const int n = w.size();
    out << "graph [\n  directed 0\n";
    for (int i = 0; i < n; ++i) {
        out << "  node [\n    id " << i << "\n    label \"" << w.labels()[i] << "\"\n    weighted_degree "
            << format_double(w.weighted_degree(i)) << "\n  ]\n";
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (w.raw()(i, j) > 0.0) {
                out << "  edge [\n    source " << i << "\n    target " << j << "\n    weight "
                    << format_double(w.raw()(i, j)) << "\n  ]\n";
            }
        }
    }
    out << "]\n";
    if (!out) fail(errc::io, "write failed for '" + path + "'");
}

}  // namespace spanel
