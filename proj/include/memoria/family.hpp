#pragma once

#include <Eigen/Dense>

#include <string>

namespace memoria::smooth {

enum class FamilyKind { BetaLogit, NegativeBinomialLog, GaussianLog };

const std::string& to_string(FamilyKind kind);
FamilyKind family_kind_from_string(const std::string& s);

// Response distribution plus link. dispersion is theta for the negative
// binomial (var = mu + mu^2/theta), phi for the beta (precision), and
// sigma^2 for the Gaussian. Weights are replication weights: they multiply
// per-observation log-likelihood terms and are applied by the caller.
struct Family {
    FamilyKind kind = FamilyKind::GaussianLog;
    double dispersion = 1.0;

    double inverse_link(double eta) const; // logistic or exp
    double initial_eta(double y) const;
    void validate_response(const Eigen::VectorXd& y) const;

    // Full per-observation log-likelihood, normalizing constants included.
    double loglik(double y, double eta) const;

    // First and second derivatives of loglik in eta; fisher is the negative
    // expected second derivative (always >= 0), d2_obs the observed one.
    void derivs(double y, double eta, double& d1, double& d2_obs, double& fisher) const;

    // Weighted log-likelihood of the per-observation maximizer; reference
    // point for deviance. For the beta family the maximizer is found by a
    // short Newton solve per observation (it is not mu = y exactly).
    double saturated_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& w) const;

    // Family deviance: 2 * (saturated - attained) for beta and negative
    // binomial; the unscaled weighted residual sum of squares for Gaussian.
    double deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& eta,
                    const Eigen::VectorXd& w) const;
};

} // namespace memoria::smooth
