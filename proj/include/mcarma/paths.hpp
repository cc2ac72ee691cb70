#pragma once

#include "mcarma/matops.hpp"
#include "mcarma/rng.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace mcarma {

struct PathMeta {
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> stream_ids;
    double truncation_T = 0.0;
    std::string scheme;
};

/// Sample paths on a common grid. Column k of X[i] is vec(X_{t_k}) of path i; Z[i] holds the stacked state.
struct PathBundle {
    Eigen::Index n = 1, m = 1, p = 1;
    std::vector<double> grid;
    std::vector<Mat> Z;
    std::vector<Mat> X;
    std::vector<Mat> L;  ///< cumulative noise L_t - L_{t_0}, when recorded
    PathMeta meta;

    std::size_t paths() const { return X.size(); }
    std::size_t steps() const { return grid.size(); }
    Mat X_at(std::size_t path, std::size_t k) const { return unvec(X[path].col(static_cast<Eigen::Index>(k)), n, m); }
    Mat Z_block(std::size_t path, std::size_t k, Eigen::Index i) const {
        return unvec(Z[path].col(static_cast<Eigen::Index>(k)).segment(i * n * m, n * m), n, m);
    }
};

inline nlohmann::json to_json(const PathMeta& m) {
    return {{"seed", m.seed}, {"stream_ids", m.stream_ids}, {"truncation_T", m.truncation_T}, {"scheme", m.scheme}};
}

}  // namespace mcarma
