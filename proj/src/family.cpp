#include "memoria/family.hpp"

#include "memoria/numerics.hpp"

#include <cmath>
#include <stdexcept>

namespace memoria::smooth {

namespace {

double logistic(double eta) {
    if (eta >= 0.0)
        return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

constexpr double kEtaCap = 690.0; // exp stays finite

double capped_exp(double eta) { return std::exp(std::min(eta, kEtaCap)); }

// Maximizes the beta log-likelihood over mu for one observation: solves
// psi(mu phi) - psi((1-mu) phi) = logit(y). Monotone in mu, so plain Newton
// from mu = y converges in a handful of steps.
double beta_saturated_mu(double y, double phi) {
    double mu = y;
    for (int it = 0; it < 50; ++it) {
        const double r = digamma(mu * phi) - digamma((1.0 - mu) * phi) -
                         (std::log(y) - std::log1p(-y));
        const double slope = phi * (trigamma(mu * phi) + trigamma((1.0 - mu) * phi));
        double next = mu - r / slope;
        next = std::min(std::max(next, 1e-13), 1.0 - 1e-13);
        if (std::abs(next - mu) <= 1e-13 * (1.0 + std::abs(mu)))
            return next;
        mu = next;
    }
    return mu;
}

} // namespace

const std::string& to_string(FamilyKind kind) {
    static const std::string names[] = {"beta_logit", "negative_binomial_log", "gaussian_log"};
    return names[static_cast<int>(kind)];
}

FamilyKind family_kind_from_string(const std::string& s) {
    for (const auto kind :
         {FamilyKind::BetaLogit, FamilyKind::NegativeBinomialLog, FamilyKind::GaussianLog})
        if (s == to_string(kind))
            return kind;
    throw std::invalid_argument("unknown family '" + s + "'");
}

double Family::inverse_link(double eta) const {
    return kind == FamilyKind::BetaLogit ? logistic(eta) : capped_exp(eta);
}

double Family::initial_eta(double y) const {
    switch (kind) {
    case FamilyKind::BetaLogit: {
        const double p = std::min(std::max(y, 1e-3), 1.0 - 1e-3);
        return std::log(p) - std::log1p(-p);
    }
    case FamilyKind::NegativeBinomialLog:
        return std::log(std::max(y, 0.5));
    case FamilyKind::GaussianLog:
        return std::log(std::max(y, 1e-8));
    }
    return 0.0;
}

void Family::validate_response(const Eigen::VectorXd& y) const {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double v = y(i);
        if (!std::isfinite(v))
            throw std::invalid_argument("response contains a non-finite value");
        switch (kind) {
        case FamilyKind::BetaLogit:
            if (v <= 0.0 || v >= 1.0)
                throw std::invalid_argument("beta response must lie strictly in (0,1)");
            break;
        case FamilyKind::NegativeBinomialLog:
            if (v < 0.0)
                throw std::invalid_argument("negative binomial response must be non-negative");
            break;
        case FamilyKind::GaussianLog:
            if (v <= 0.0)
                throw std::invalid_argument("log-link Gaussian response must be positive here");
            break;
        }
    }
}

double Family::loglik(double y, double eta) const {
    switch (kind) {
    case FamilyKind::BetaLogit: {
        const double phi = dispersion;
        const double mu = logistic(eta);
        return std::lgamma(phi) - std::lgamma(mu * phi) - std::lgamma((1.0 - mu) * phi) +
               (mu * phi - 1.0) * std::log(y) + ((1.0 - mu) * phi - 1.0) * std::log1p(-y);
    }
    case FamilyKind::NegativeBinomialLog: {
        const double theta = dispersion;
        const double mu = capped_exp(eta);
        return std::lgamma(y + theta) - std::lgamma(theta) - std::lgamma(y + 1.0) +
               theta * std::log(theta) + y * std::min(eta, kEtaCap) -
               (y + theta) * std::log(theta + mu);
    }
    case FamilyKind::GaussianLog: {
        const double s2 = dispersion;
        const double r = y - capped_exp(eta);
        return -0.5 * std::log(2.0 * M_PI * s2) - r * r / (2.0 * s2);
    }
    }
    return 0.0;
}

void Family::derivs(double y, double eta, double& d1, double& d2_obs, double& fisher) const {
    switch (kind) {
    case FamilyKind::BetaLogit: {
        const double phi = dispersion;
        const double mu = logistic(eta);
        const double v = mu * (1.0 - mu);
        const double ystar = std::log(y) - std::log1p(-y);
        const double mustar = digamma(mu * phi) - digamma((1.0 - mu) * phi);
        const double curv = phi * phi * (trigamma(mu * phi) + trigamma((1.0 - mu) * phi));
        d1 = phi * (ystar - mustar) * v;
        fisher = curv * v * v;
        d2_obs = -fisher + phi * (ystar - mustar) * v * (1.0 - 2.0 * mu);
        return;
    }
    case FamilyKind::NegativeBinomialLog: {
        const double theta = dispersion;
        const double mu = capped_exp(eta);
        const double denom = theta + mu;
        d1 = y - (y + theta) * mu / denom;
        d2_obs = -theta * mu * (y + theta) / (denom * denom);
        fisher = theta * mu / denom;
        return;
    }
    case FamilyKind::GaussianLog: {
        const double s2 = dispersion;
        const double mu = capped_exp(eta);
        d1 = (y - mu) * mu / s2;
        d2_obs = ((y - mu) * mu - mu * mu) / s2;
        fisher = mu * mu / s2;
        return;
    }
    }
}

double Family::saturated_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& w) const {
    double total = 0.0;
    switch (kind) {
    case FamilyKind::BetaLogit:
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            if (w(i) == 0.0)
                continue;
            const double mu = beta_saturated_mu(y(i), dispersion);
            const double eta = std::log(mu) - std::log1p(-mu);
            total += w(i) * loglik(y(i), eta);
        }
        return total;
    case FamilyKind::NegativeBinomialLog: {
        const double theta = dispersion;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            if (w(i) == 0.0)
                continue;
            const double yi = y(i);
            double term = std::lgamma(yi + theta) - std::lgamma(theta) - std::lgamma(yi + 1.0) +
                          theta * std::log(theta) - (yi + theta) * std::log(theta + yi);
            if (yi > 0.0)
                term += yi * std::log(yi);
            total += w(i) * term;
        }
        return total;
    }
    case FamilyKind::GaussianLog:
        for (Eigen::Index i = 0; i < y.size(); ++i)
            total += w(i) * (-0.5 * std::log(2.0 * M_PI * dispersion));
        return total;
    }
    return total;
}

double Family::deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& eta,
                        const Eigen::VectorXd& w) const {
    if (kind == FamilyKind::GaussianLog) {
        double rss = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double r = y(i) - capped_exp(eta(i));
            rss += w(i) * r * r;
        }
        return rss;
    }
    double attained = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i)
        if (w(i) != 0.0)
            attained += w(i) * loglik(y(i), eta(i));
    return 2.0 * (saturated_loglik(y, w) - attained);
}

} // namespace memoria::smooth
