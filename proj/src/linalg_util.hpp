#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace countreg::detail {

struct RankCheck {
    Eigen::Index rank = 0;
    std::vector<Eigen::Index> dependent;
};

// Rank of X after scaling every column to unit norm, so the answer does not
// depend on predictor units. Dependent columns are the ones pivoted last.
inline RankCheck check_rank(const Eigen::MatrixXd& X, double threshold = 1e-10) {
    Eigen::MatrixXd scaled = X;
    for (Eigen::Index j = 0; j < scaled.cols(); ++j) {
        const double norm = scaled.col(j).norm();
        if (norm > 0.0) scaled.col(j) /= norm;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
    qr.setThreshold(threshold);
    RankCheck out;
    out.rank = qr.rank();
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index k = out.rank; k < scaled.cols(); ++k) out.dependent.push_back(perm(k));
    std::sort(out.dependent.begin(), out.dependent.end());
    return out;
}

inline std::string join_names(const std::vector<std::string>& names) {
    std::string out;
    for (const auto& n : names) out += (out.empty() ? "" : ", ") + n;
    return out;
}

}  // namespace countreg::detail
