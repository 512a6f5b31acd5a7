#include "memoria/spline.hpp"

#include "memoria/numerics.hpp"

#include <algorithm>
#include <stdexcept>

namespace memoria::smooth {

SplineBasis::SplineBasis(Eigen::VectorXd knots) : knots_(std::move(knots)) {
    const int k = static_cast<int>(knots_.size());
    if (k < 2)
        throw std::invalid_argument("spline basis needs at least 2 knots");
    if (k > 10)
        throw std::invalid_argument("spline basis dimension capped at 10");
    for (int j = 1; j < k; ++j)
        if (!(knots_(j) > knots_(j - 1)))
            throw std::invalid_argument("spline knots must be strictly increasing");

    f_mat_ = Eigen::MatrixXd::Zero(k, k);
    penalty_ = Eigen::MatrixXd::Zero(k, k);
    if (k == 2)
        return; // a line: no curvature anywhere

    // h_j = knot spacing; D maps knot values to second-divided differences,
    // B is the Gram matrix of the natural-spline curvature representation.
    const Eigen::VectorXd h = knots_.tail(k - 1) - knots_.head(k - 1);
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(k - 2, k);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(k - 2, k - 2);
    for (int i = 0; i < k - 2; ++i) {
        D(i, i) = 1.0 / h(i);
        D(i, i + 1) = -1.0 / h(i) - 1.0 / h(i + 1);
        D(i, i + 2) = 1.0 / h(i + 1);
        B(i, i) = (h(i) + h(i + 1)) / 3.0;
        if (i + 1 < k - 2) {
            B(i, i + 1) = h(i + 1) / 6.0;
            B(i + 1, i) = h(i + 1) / 6.0;
        }
    }
    const Eigen::MatrixXd inner = B.llt().solve(D); // second derivatives at interior knots
    f_mat_.block(1, 0, k - 2, k) = inner;
    penalty_ = D.transpose() * inner;
    penalty_ = ((penalty_ + penalty_.transpose()) / 2.0).eval();
}

Eigen::RowVectorXd SplineBasis::row(double x) const {
    const int k = dimension();
    Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(k);

    if (x <= knots_(0)) {
        // Linear extension from the first knot.
        const double h = knots_(1) - knots_(0);
        Eigen::RowVectorXd slope = -f_mat_.row(1) * (h / 6.0);
        slope(0) -= 1.0 / h;
        slope(1) += 1.0 / h;
        b(0) = 1.0;
        b += (x - knots_(0)) * slope;
        return b;
    }
    if (x >= knots_(k - 1)) {
        const double h = knots_(k - 1) - knots_(k - 2);
        Eigen::RowVectorXd slope = f_mat_.row(k - 2) * (h / 6.0);
        slope(k - 2) -= 1.0 / h;
        slope(k - 1) += 1.0 / h;
        b(k - 1) = 1.0;
        b += (x - knots_(k - 1)) * slope;
        return b;
    }

    // Interval with knots_(j) <= x < knots_(j+1).
    int j = static_cast<int>(std::upper_bound(knots_.data(), knots_.data() + k, x) -
                             knots_.data()) -
            1;
    j = std::min(j, k - 2);
    const double h = knots_(j + 1) - knots_(j);
    const double below = x - knots_(j);
    const double above = knots_(j + 1) - x;
    const double c_lo = (above * above * above / h - h * above) / 6.0;
    const double c_hi = (below * below * below / h - h * below) / 6.0;
    b(j) = above / h;
    b(j + 1) = below / h;
    b += c_lo * f_mat_.row(j) + c_hi * f_mat_.row(j + 1);
    return b;
}

Eigen::MatrixXd SplineBasis::matrix(const std::vector<double>& xs) const {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(xs.size()), dimension());
    for (std::size_t i = 0; i < xs.size(); ++i)
        m.row(static_cast<Eigen::Index>(i)) = row(xs[i]);
    return m;
}

SplineBasis cubic_spline_basis(const std::vector<double>& x, int dimension,
                               int* reduced_dimension) {
    if (dimension < 2)
        throw std::invalid_argument("spline dimension must be at least 2");
    std::vector<double> distinct(x);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2)
        throw std::invalid_argument("need at least 2 distinct values to place knots");

    const int k = std::min<int>(dimension, static_cast<int>(distinct.size()));
    if (reduced_dimension)
        *reduced_dimension = k;
    Eigen::VectorXd knots(k);
    for (int j = 0; j < k; ++j)
        knots(j) = quantile_sorted(distinct, static_cast<double>(j) / (k - 1));
    return SplineBasis(std::move(knots));
}

} // namespace memoria::smooth
