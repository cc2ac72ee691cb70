#pragma once

#include "mcarma/matops.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace mcarma {

/// Point estimate with entrywise standard errors from batch means.
struct Estimate {
    Mat value;
    Mat se;
    std::size_t batches = 0;
};

/// Split each series (columns are time) into k contiguous batches.
inline std::vector<Mat> split_batches(const std::vector<Mat>& series, std::size_t k) {
    std::vector<Mat> out;
    for (const auto& s : series) {
        const Eigen::Index len = s.cols() / static_cast<Eigen::Index>(k);
        if (len < 2) throw std::invalid_argument("split_batches: series too short for the batch count");
        for (std::size_t b = 0; b < k; ++b) out.push_back(s.middleCols(static_cast<Eigen::Index>(b) * len, len));
    }
    return out;
}

namespace detail {

inline Estimate batch_summary(const std::vector<Mat>& per_batch, const std::vector<double>& weights) {
    const std::size_t B = per_batch.size();
    if (B < 2) throw std::invalid_argument("batch estimate needs at least two batches");
    double wsum = 0.0;
    Mat mean = Mat::Zero(per_batch[0].rows(), per_batch[0].cols());
    for (std::size_t b = 0; b < B; ++b) {
        mean += weights[b] * per_batch[b];
        wsum += weights[b];
    }
    mean /= wsum;
    // batch-means variance of the weighted mean
    Mat var = Mat::Zero(mean.rows(), mean.cols());
    for (std::size_t b = 0; b < B; ++b) {
        const double r = weights[b] / wsum * static_cast<double>(B);
        var += (r * r) * (per_batch[b] - mean).cwiseAbs2();
    }
    var /= static_cast<double>(B) * static_cast<double>(B - 1);
    return {mean, var.cwiseSqrt(), B};
}

}  // namespace detail

/// Mean of vector-valued samples; each batch contributes its sample mean.
inline Estimate estimate_mean(const std::vector<Mat>& batches) {
    std::vector<Mat> means;
    std::vector<double> w;
    for (const auto& b : batches) {
        means.push_back(b.rowwise().mean());
        w.push_back(static_cast<double>(b.cols()));
    }
    return detail::batch_summary(means, w);
}

/// Cov[x_{t+h}, x_t] at an integer sample lag, centred at the pooled mean.
inline Estimate estimate_acov(const std::vector<Mat>& batches, Eigen::Index lag, const Vec* centre = nullptr) {
    if (lag < 0) throw std::invalid_argument("estimate_acov: lag must be nonnegative");
    Vec mu;
    if (centre) {
        mu = *centre;
    } else {
        mu = Vec::Zero(batches.at(0).rows());
        double count = 0.0;
        for (const auto& b : batches) {
            mu += b.rowwise().sum();
            count += static_cast<double>(b.cols());
        }
        mu /= count;
    }
    std::vector<Mat> covs;
    std::vector<double> w;
    for (const auto& b : batches) {
        const Eigen::Index T = b.cols() - lag;
        if (T < 1) throw std::invalid_argument("estimate_acov: batch shorter than the lag");
        const Mat c = b.colwise() - mu;
        covs.push_back(c.middleCols(lag, T) * c.leftCols(T).transpose() / static_cast<double>(T));
        w.push_back(static_cast<double>(T));
    }
    return detail::batch_summary(covs, w);
}

/// (estimate - theory) / se entrywise; zero standard errors with exact agreement give z = 0.
inline Mat z_scores(const Estimate& e, const Mat& theory) {
    if (e.value.rows() != theory.rows() || e.value.cols() != theory.cols()) throw DimensionError("z_scores: shape mismatch");
    Mat z(theory.rows(), theory.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i)
        for (Eigen::Index j = 0; j < z.cols(); ++j) {
            const double diff = e.value(i, j) - theory(i, j);
            const double se = e.se(i, j);
            if (se > 0)
                z(i, j) = diff / se;
            else
                z(i, j) = std::abs(diff) <= 1e-12 * std::max(1.0, std::abs(theory(i, j))) ? 0.0 : std::copysign(1e300, diff);
        }
    return z;
}

struct Comparison {
    std::string metric;
    Mat theory;
    Estimate estimate;
    Mat z;
    double max_abs_z = 0.0;
};

inline Comparison compare(std::string metric, const Mat& theory, const Estimate& est) {
    Comparison c{std::move(metric), theory, est, z_scores(est, theory), 0.0};
    c.max_abs_z = c.z.size() ? c.z.cwiseAbs().maxCoeff() : 0.0;
    return c;
}

inline nlohmann::json to_json(const Comparison& c) {
    auto flat = [](const Mat& x) {
        std::vector<double> v(x.data(), x.data() + x.size());
        return v;
    };
    return {{"metric", c.metric},     {"theory", flat(c.theory)}, {"estimate", flat(c.estimate.value)},
            {"SE", flat(c.estimate.se)}, {"z", flat(c.z)},          {"max_abs_z", c.max_abs_z}};
}

}  // namespace mcarma
