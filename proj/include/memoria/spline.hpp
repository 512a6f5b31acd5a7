#pragma once

#include <Eigen/Dense>

#include <vector>

namespace memoria::smooth {

// Natural cubic regression spline on fixed knots, parameterized by the
// function values at the knots. The curve interpolates its coefficients at
// the knots, reproduces linear functions exactly, and extends linearly
// outside [knots.front(), knots.back()]. Every basis row sums to 1.
class SplineBasis {
public:
    // Knots must be strictly increasing, between 2 and 10 entries.
    explicit SplineBasis(Eigen::VectorXd knots);

    int dimension() const { return static_cast<int>(knots_.size()); }
    const Eigen::VectorXd& knots() const { return knots_; }
    double domain_min() const { return knots_(0); }
    double domain_max() const { return knots_(knots_.size() - 1); }

    // Integrated squared second derivative: coef' * penalty() * coef.
    // Symmetric PSD with rank dimension-2 (linear functions unpenalized).
    const Eigen::MatrixXd& penalty() const { return penalty_; }

    Eigen::RowVectorXd row(double x) const;
    Eigen::MatrixXd matrix(const std::vector<double>& xs) const;

private:
    Eigen::VectorXd knots_;
    Eigen::MatrixXd f_mat_; // knot second derivatives = f_mat_ * coef
    Eigen::MatrixXd penalty_;
};

// Places knots at evenly spaced quantiles of the distinct values of x.
// dimension is reduced to the distinct-value count when necessary (reported
// through *reduced_dimension); fewer than 2 distinct values is an error.
SplineBasis cubic_spline_basis(const std::vector<double>& x, int dimension,
                               int* reduced_dimension = nullptr);

} // namespace memoria::smooth
