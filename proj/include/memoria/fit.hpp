#pragma once

#include "memoria/design.hpp"
#include "memoria/family.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace memoria::smooth {

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FitOptions {
    int max_newton_iterations = 200;
    double gradient_tol = 1e-8; // relative to 1 + |objective|

    int lambda_grid = 30; // log-spaced per penalized block
    double lambda_min = 1e-6;
    double lambda_max = 1e6;
    int lambda_sweeps = 2; // coordinate-descent passes over the blocks

    // Non-empty: skip smoothing selection and fit at exactly these values
    // (one per block; zeros allowed).
    std::vector<double> fixed_lambdas;

    // Search start; empty means the grid midpoint for every block.
    std::vector<double> initial_lambdas;

    // >= 0 restricts each block's candidates to this many grid steps around
    // initial_lambdas; negative searches the whole grid.
    int lambda_neighborhood = -1;

    // > 0 freezes the dispersion instead of estimating it.
    double fixed_dispersion = 0.0;

    const Eigen::VectorXd* warm_start = nullptr;
};

struct FittedSmoothModel {
    DesignLayout layout;
    Family family;
    Eigen::VectorXd coefficients;
    std::vector<double> lambdas; // one per layout block
    double edf = 0.0;
    double gcv_score = 0.0;
    double log_likelihood = 0.0; // weighted, unpenalized, at the fit
    double deviance = 0.0;
    std::vector<std::string> warnings;

    double predict(double age, double time) const;
    Eigen::VectorXd predict(const std::vector<std::pair<double, double>>& points) const;
    // Inverse-linked predictions for precomputed design rows.
    Eigen::VectorXd predict_rows(const Eigen::MatrixXd& rows) const;
};

// Maximizes the weighted penalized log-likelihood with GCV-selected
// smoothing parameters and estimated dispersion. Throws FitError when the
// final Newton solve fails to converge.
FittedSmoothModel fit(const SmoothDesign& design, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& w, Family family,
                      const FitOptions& options = {});

// The objective fit() maximizes, and its analytic gradient, at an arbitrary
// coefficient vector.
double penalized_loglik(const SmoothDesign& design, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& w, const Family& family,
                        const std::vector<double>& lambdas, const Eigen::VectorXd& beta,
                        Eigen::VectorXd* gradient = nullptr);

// Fits at the given lambdas and returns n*D/(n - edf)^2 with n the weighted
// observation count; +infinity when edf reaches n.
double gcv_score(const SmoothDesign& design, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                 Family family, const std::vector<double>& lambdas);

double aic(const FittedSmoothModel& model);

// Serialization for caching between pipeline stages; round-trips exactly.
nlohmann::json model_to_json(const FittedSmoothModel& model);
FittedSmoothModel model_from_json(const nlohmann::json& doc);

} // namespace memoria::smooth
