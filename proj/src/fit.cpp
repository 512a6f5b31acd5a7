#include "memoria/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace memoria::smooth {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd assemble_penalty(const DesignLayout& layout, const std::vector<double>& lambdas) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(layout.cols, layout.cols);
    for (std::size_t b = 0; b < layout.blocks.size(); ++b) {
        const auto& block = layout.blocks[b];
        s.block(block.col_start, block.col_start, block.cols, block.cols) +=
            lambdas[b] * block.penalty;
    }
    return s;
}

double weighted_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& eta,
                       const Eigen::VectorXd& w, const Family& family) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i)
        if (w(i) != 0.0)
            total += w(i) * family.loglik(y(i), eta(i));
    return total;
}

struct InnerFit {
    Eigen::VectorXd beta;
    Eigen::VectorXd eta;
    double loglik = -kInf;
    double objective = -kInf;
    bool converged = false;
};

// Maximizes sum_i w_i loglik(y_i, x_i'beta) - 0.5 beta' Slam beta by Newton
// steps with an observed-Hessian/Fisher/ridge ladder and step halving.
InnerFit newton_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                    const Family& family, const Eigen::MatrixXd& slam,
                    const Eigen::VectorXd& beta0, const FitOptions& options) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    InnerFit fit;
    fit.beta = beta0;
    fit.eta = x * beta0;
    fit.loglik = weighted_loglik(y, fit.eta, w, family);
    fit.objective = fit.loglik - 0.5 * fit.beta.dot(slam * fit.beta);

    Eigen::VectorXd d1(n), d2o(n), fisher(n), grad(p), delta(p), beta_try, eta_try;
    Eigen::MatrixXd scaled(n, p), neg_h(p, p);

    for (int iter = 0; iter < options.max_newton_iterations; ++iter) {
        for (Eigen::Index i = 0; i < n; ++i)
            family.derivs(y(i), fit.eta(i), d1(i), d2o(i), fisher(i));
        grad.noalias() = x.transpose() * (w.cwiseProduct(d1));
        grad.noalias() -= slam * fit.beta;
        if (grad.lpNorm<Eigen::Infinity>() <=
            options.gradient_tol * (1.0 + std::abs(fit.objective))) {
            fit.converged = true;
            return fit;
        }

        // Observed Hessian first; fall back to Fisher, then to an escalating
        // ridge, whenever the factorization is not positive definite.
        bool solved = false;
        bool ridged = false;
        for (int mode = 0; mode < 2 && !solved; ++mode) {
            const Eigen::VectorXd curv =
                mode == 0 ? Eigen::VectorXd(-w.cwiseProduct(d2o)) : Eigen::VectorXd(w.cwiseProduct(fisher));
            if (!(curv.minCoeff() >= 0.0))
                continue;
            scaled = x.array().colwise() * curv.array();
            neg_h.noalias() = x.transpose() * scaled;
            neg_h += slam;
            Eigen::LLT<Eigen::MatrixXd> llt(neg_h);
            if (llt.info() == Eigen::Success) {
                delta = llt.solve(grad);
                solved = true;
            }
        }
        if (!solved) {
            ridged = true;
            scaled = x.array().colwise() * (w.cwiseProduct(fisher)).array();
            neg_h.noalias() = x.transpose() * scaled;
            neg_h += slam;
            double ridge = 1e-8 * (1.0 + neg_h.diagonal().maxCoeff());
            for (int tries = 0; tries < 20 && !solved; ++tries, ridge *= 10.0) {
                Eigen::MatrixXd ridged = neg_h;
                ridged.diagonal().array() += ridge;
                Eigen::LLT<Eigen::MatrixXd> llt(ridged);
                if (llt.info() == Eigen::Success) {
                    delta = llt.solve(grad);
                    solved = true;
                }
            }
            if (!solved)
                return fit; // hopeless curvature; report non-convergence
        }

        // Newton decrement: the remaining objective gain is about half of
        // g'delta. When that is at the objective's floating-point noise
        // floor, no step can make progress even if the curvature scale keeps
        // the raw gradient norm above tolerance (tiny dispersion, huge
        // lambda). Skipped for ridged solves, whose delta understates it.
        const double obj_noise =
            std::numeric_limits<double>::epsilon() * (1.0 + std::abs(fit.objective));
        if (!ridged) {
            const double decrement = grad.dot(delta);
            if (!(decrement > 32.0 * obj_noise)) {
                fit.converged = true;
                return fit;
            }
        }

        double step = 1.0;
        bool improved = false;
        for (int half = 0; half < 40; ++half, step *= 0.5) {
            beta_try = fit.beta + step * delta;
            eta_try = x * beta_try;
            const double ll_try = weighted_loglik(y, eta_try, w, family);
            const double obj_try = ll_try - 0.5 * beta_try.dot(slam * beta_try);
            if (obj_try > fit.objective) {
                fit.beta.swap(beta_try);
                fit.eta.swap(eta_try);
                fit.loglik = ll_try;
                fit.objective = obj_try;
                improved = true;
                break;
            }
        }
        if (!improved) {
            // A positive decrement but no improving step: progress is below
            // the objective's representable resolution.
            if (!ridged && grad.dot(delta) <= 2048.0 * obj_noise)
                fit.converged = true;
            return fit;
        }
    }
    return fit;
}

// edf = p - tr((X'WX + Slam)^-1 Slam) at Fisher weights W.
double effective_dof(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                     const Family& family, const Eigen::MatrixXd& slam,
                     const Eigen::VectorXd& eta) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    Eigen::VectorXd fw(n);
    double d1, d2o, fi;
    for (Eigen::Index i = 0; i < n; ++i) {
        family.derivs(y(i), eta(i), d1, d2o, fi);
        fw(i) = w(i) * fi;
    }
    Eigen::MatrixXd a = x.transpose() * (x.array().colwise() * fw.array()).matrix();
    a += slam;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) {
        a.diagonal().array() += 1e-8 * (1.0 + a.diagonal().maxCoeff());
        llt.compute(a);
        if (llt.info() != Eigen::Success)
            throw FitError("effective degrees of freedom: information matrix not factorizable");
    }
    return static_cast<double>(p) - llt.solve(slam).trace();
}

struct Scored {
    InnerFit fit;
    double edf = 0.0;
    double deviance = 0.0;
    double gcv = kInf;
};

Scored score_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                 const Family& family, const DesignLayout& layout,
                 const std::vector<double>& lambdas, const Eigen::VectorXd& beta0,
                 const FitOptions& options) {
    Scored out;
    const Eigen::MatrixXd slam = assemble_penalty(layout, lambdas);
    out.fit = newton_fit(x, y, w, family, slam, beta0, options);
    if (!out.fit.converged)
        return out;
    out.edf = effective_dof(x, y, w, family, slam, out.fit.eta);
    out.deviance = std::max(family.deviance(y, out.fit.eta, w), 0.0);
    const double n_eff = w.sum();
    if (out.edf >= n_eff)
        out.gcv = kInf;
    else
        out.gcv = n_eff * out.deviance / ((n_eff - out.edf) * (n_eff - out.edf));
    return out;
}

std::vector<double> log_grid(const FitOptions& options) {
    std::vector<double> grid(options.lambda_grid);
    const double lo = std::log(options.lambda_min);
    const double hi = std::log(options.lambda_max);
    for (int i = 0; i < options.lambda_grid; ++i)
        grid[i] = std::exp(lo + (hi - lo) * i / (options.lambda_grid - 1));
    return grid;
}

int nearest_grid_index(const std::vector<double>& grid, double value) {
    int best = 0;
    double best_dist = kInf;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double d = std::abs(std::log(grid[i]) - std::log(value));
        if (d < best_dist) {
            best_dist = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

// Coordinate descent over the per-block lambda grid, minimizing GCV. beta and
// lambdas are updated in place; returns the best scored fit seen.
Scored select_lambdas(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& w, const Family& family, const DesignLayout& layout,
                      std::vector<double>& lambdas, Eigen::VectorXd& beta, int sweeps,
                      const FitOptions& options) {
    const auto grid = log_grid(options);
    const int nblocks = static_cast<int>(layout.blocks.size());
    Scored current = score_fit(x, y, w, family, layout, lambdas, beta, options);
    if (current.fit.converged)
        beta = current.fit.beta;
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        for (int b = 0; b < nblocks; ++b) {
            int lo = 0;
            int hi = options.lambda_grid - 1;
            if (options.lambda_neighborhood >= 0) {
                const int center = nearest_grid_index(grid, lambdas[b]);
                lo = std::max(0, center - options.lambda_neighborhood);
                hi = std::min(options.lambda_grid - 1, center + options.lambda_neighborhood);
            }
            std::vector<double> trial = lambdas;
            double best_gcv = current.fit.converged ? current.gcv : kInf;
            int best_index = -1;
            Scored best_fit;
            for (int gi = lo; gi <= hi; ++gi) {
                if (grid[gi] == lambdas[b])
                    continue; // current value already scored
                trial[b] = grid[gi];
                Scored cand = score_fit(x, y, w, family, layout, trial, beta, options);
                if (cand.fit.converged && cand.gcv < best_gcv) {
                    best_gcv = cand.gcv;
                    best_index = gi;
                    best_fit = std::move(cand);
                }
            }
            if (best_index >= 0) {
                lambdas[b] = grid[best_index];
                current = std::move(best_fit);
                beta = current.fit.beta;
            }
        }
    }
    if (!current.fit.converged)
        current = score_fit(x, y, w, family, layout, lambdas, beta, options);
    return current;
}

double weighted_mean(const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
    return y.dot(w) / w.sum();
}

double weighted_var(const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
    const double m = weighted_mean(y, w);
    return (y.array() - m).square().matrix().dot(w) / w.sum();
}

double initial_dispersion(const Eigen::VectorXd& y, const Eigen::VectorXd& w, FamilyKind kind) {
    const double m = weighted_mean(y, w);
    const double v = weighted_var(y, w);
    switch (kind) {
    case FamilyKind::GaussianLog:
        return std::max(v, 1e-12 * std::max(1.0, m * m));
    case FamilyKind::NegativeBinomialLog: {
        const double excess = v - m;
        const double theta = excess > 0.0 ? m * m / excess : std::exp(10.0);
        return std::clamp(theta, std::exp(-5.0), std::exp(10.0));
    }
    case FamilyKind::BetaLogit: {
        const double bound = m * (1.0 - m);
        const double phi = (v > 0.0 && v < bound) ? bound / v - 1.0 : 10.0;
        return std::clamp(phi, std::exp(-5.0), std::exp(15.0));
    }
    }
    return 1.0;
}

// Golden-section maximization of f over [lo, hi]; tolerance on the argument.
double golden_max(double lo, double hi, double tol, const std::function<double(double)>& f) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    return fc > fd ? c : d;
}

Eigen::VectorXd initial_beta(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& w, const Family& family) {
    const Eigen::Index n = x.rows();
    Eigen::VectorXd eta0(n);
    for (Eigen::Index i = 0; i < n; ++i)
        eta0(i) = family.initial_eta(y(i));
    const Eigen::MatrixXd xw = x.array().colwise() * w.array();
    Eigen::MatrixXd a = x.transpose() * xw;
    a.diagonal().array() += 1e-7 * (1.0 + a.diagonal().maxCoeff());
    return a.llt().solve(x.transpose() * (w.cwiseProduct(eta0)));
}

} // namespace

double penalized_loglik(const SmoothDesign& design, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& w, const Family& family,
                        const std::vector<double>& lambdas, const Eigen::VectorXd& beta,
                        Eigen::VectorXd* gradient) {
    if (lambdas.size() != design.layout.blocks.size())
        throw std::invalid_argument("one lambda per penalized block required");
    const Eigen::MatrixXd slam = assemble_penalty(design.layout, lambdas);
    const Eigen::VectorXd eta = design.x * beta;
    const double obj = weighted_loglik(y, eta, w, family) - 0.5 * beta.dot(slam * beta);
    if (gradient) {
        const Eigen::Index n = design.x.rows();
        Eigen::VectorXd d1(n);
        double a, b, c;
        for (Eigen::Index i = 0; i < n; ++i) {
            family.derivs(y(i), eta(i), a, b, c);
            d1(i) = a;
        }
        gradient->noalias() = design.x.transpose() * (w.cwiseProduct(d1));
        gradient->noalias() -= slam * beta;
    }
    return obj;
}

double gcv_score(const SmoothDesign& design, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                 Family family, const std::vector<double>& lambdas) {
    if (lambdas.size() != design.layout.blocks.size())
        throw std::invalid_argument("one lambda per penalized block required");
    FitOptions options;
    const Eigen::VectorXd beta0 = initial_beta(design.x, y, w, family);
    const Scored scored =
        score_fit(design.x, y, w, family, design.layout, lambdas, beta0, options);
    if (!scored.fit.converged)
        throw FitError("gcv_score: inner fit did not converge");
    return scored.gcv;
}

FittedSmoothModel fit(const SmoothDesign& design, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& w, Family family, const FitOptions& options) {
    const Eigen::MatrixXd& x = design.x;
    const DesignLayout& layout = design.layout;
    if (x.rows() == 0)
        throw std::invalid_argument("cannot fit a model with zero observations");
    if (y.size() != x.rows() || w.size() != x.rows())
        throw std::invalid_argument("response/weights length must match the design");
    if (x.cols() != layout.cols)
        throw std::invalid_argument("design matrix does not match its layout");
    if (w.minCoeff() < 0.0)
        throw std::invalid_argument("weights must be non-negative");
    if (!(w.sum() > 0.0))
        throw std::invalid_argument("weights must not be all zero");
    family.validate_response(y);

    const int nblocks = static_cast<int>(layout.blocks.size());
    const bool estimate_dispersion = options.fixed_dispersion <= 0.0;
    family.dispersion = estimate_dispersion ? initial_dispersion(y, w, family.kind)
                                            : options.fixed_dispersion;

    std::vector<double> lambdas;
    const bool select = options.fixed_lambdas.empty();
    if (!select) {
        if (static_cast<int>(options.fixed_lambdas.size()) != nblocks)
            throw std::invalid_argument("fixed_lambdas must supply one value per block");
        lambdas = options.fixed_lambdas;
    } else if (!options.initial_lambdas.empty()) {
        if (static_cast<int>(options.initial_lambdas.size()) != nblocks)
            throw std::invalid_argument("initial_lambdas must supply one value per block");
        lambdas = options.initial_lambdas;
    } else {
        lambdas.assign(nblocks, log_grid(options)[options.lambda_grid / 2]);
    }

    Eigen::VectorXd beta =
        options.warm_start ? *options.warm_start : initial_beta(x, y, w, family);
    if (beta.size() != layout.cols)
        throw std::invalid_argument("warm start has the wrong length");

    auto run_selection = [&](int sweeps) {
        return select_lambdas(x, y, w, family, layout, lambdas, beta, sweeps, options);
    };
    Scored scored = select ? run_selection(options.lambda_sweeps)
                           : score_fit(x, y, w, family, layout, lambdas, beta, options);
    if (scored.fit.converged)
        beta = scored.fit.beta;

    if (estimate_dispersion) {
        switch (family.kind) {
        case FamilyKind::GaussianLog:
            for (int round = 0; round < 3; ++round) {
                const double denom = std::max(w.sum() - scored.edf, 1.0);
                const double floor = 1e-12 * std::max(1.0, std::pow(weighted_mean(y, w), 2));
                const double next = std::max(scored.deviance / denom, floor);
                if (std::abs(next - family.dispersion) <=
                    1e-8 * (1.0 + std::abs(family.dispersion))) {
                    family.dispersion = next;
                    break;
                }
                family.dispersion = next;
                scored = select ? run_selection(1)
                                : score_fit(x, y, w, family, layout, lambdas, beta, options);
                if (scored.fit.converged)
                    beta = scored.fit.beta;
            }
            break;
        case FamilyKind::NegativeBinomialLog:
        case FamilyKind::BetaLogit: {
            const double lo = -5.0;
            const double hi = family.kind == FamilyKind::NegativeBinomialLog ? 10.0 : 15.0;
            // Profile of the penalized objective in log dispersion at the
            // currently selected lambdas.
            const double best_log = golden_max(lo, hi, 1e-3, [&](double log_disp) {
                Family trial = family;
                trial.dispersion = std::exp(log_disp);
                const Eigen::MatrixXd slam = assemble_penalty(layout, lambdas);
                const InnerFit inner = newton_fit(x, y, w, trial, slam, beta, options);
                return inner.converged ? inner.objective : -kInf;
            });
            family.dispersion = std::exp(best_log);
            scored = select ? run_selection(1)
                            : score_fit(x, y, w, family, layout, lambdas, beta, options);
            if (scored.fit.converged)
                beta = scored.fit.beta;
            break;
        }
        }
    }

    if (!scored.fit.converged)
        scored = score_fit(x, y, w, family, layout, lambdas, beta, options);
    if (!scored.fit.converged)
        throw FitError("penalized likelihood optimization did not converge");

    FittedSmoothModel model;
    model.layout = layout;
    model.family = family;
    model.coefficients = scored.fit.beta;
    model.lambdas = lambdas;
    model.edf = scored.edf;
    model.gcv_score = scored.gcv;
    model.log_likelihood = scored.fit.loglik;
    model.deviance = scored.deviance;
    model.warnings = layout.notes;
    if (select) {
        const auto grid = log_grid(options);
        for (int b = 0; b < nblocks; ++b)
            if (lambdas[b] == grid.front() || lambdas[b] == grid.back())
                model.warnings.push_back("lambda for block '" + layout.blocks[b].name +
                                         "' selected at the grid boundary");
    }
    return model;
}

double FittedSmoothModel::predict(double age, double time) const {
    return family.inverse_link(layout.row(age, time).dot(coefficients));
}

Eigen::VectorXd
FittedSmoothModel::predict(const std::vector<std::pair<double, double>>& points) const {
    return predict_rows(layout.matrix(points));
}

Eigen::VectorXd FittedSmoothModel::predict_rows(const Eigen::MatrixXd& rows) const {
    Eigen::VectorXd eta = rows * coefficients;
    for (Eigen::Index i = 0; i < eta.size(); ++i)
        eta(i) = family.inverse_link(eta(i));
    return eta;
}

double aic(const FittedSmoothModel& model) {
    return -2.0 * model.log_likelihood + 2.0 * model.edf;
}

namespace {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        arr.push_back(v(i));
    return arr;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& arr) {
    Eigen::VectorXd v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
    return v;
}

} // namespace

nlohmann::json model_to_json(const FittedSmoothModel& model) {
    nlohmann::json doc;
    doc["family"] = {{"kind", to_string(model.family.kind)},
                     {"dispersion", model.family.dispersion}};
    if (model.layout.age)
        doc["age"] = {{"knots", vector_to_json(model.layout.age->basis.knots())},
                      {"constraint", vector_to_json(model.layout.age->constraint)}};
    if (model.layout.time)
        doc["time"] = {{"knots", vector_to_json(model.layout.time->basis.knots())},
                       {"constraint", vector_to_json(model.layout.time->constraint)}};
    doc["interaction"] = model.layout.interaction;
    doc["coefficients"] = vector_to_json(model.coefficients);
    doc["lambdas"] = model.lambdas;
    doc["edf"] = model.edf;
    doc["gcv_score"] = model.gcv_score;
    doc["log_likelihood"] = model.log_likelihood;
    doc["deviance"] = model.deviance;
    return doc;
}

FittedSmoothModel model_from_json(const nlohmann::json& doc) {
    FittedSmoothModel model;
    model.family.kind = family_kind_from_string(doc.at("family").at("kind").get<std::string>());
    model.family.dispersion = doc.at("family").at("dispersion").get<double>();
    auto load_margin = [&](const char* key) -> std::optional<MarginLayout> {
        if (!doc.contains(key))
            return std::nullopt;
        MarginLayout margin{SplineBasis(vector_from_json(doc.at(key).at("knots"))),
                            vector_from_json(doc.at(key).at("constraint")),
                            {}};
        margin.z = null_space_transform(margin.constraint);
        return margin;
    };
    model.layout.age = load_margin("age");
    model.layout.time = load_margin("time");
    model.layout.interaction = doc.at("interaction").get<bool>();
    finalize_blocks(model.layout);
    model.coefficients = vector_from_json(doc.at("coefficients"));
    if (model.coefficients.size() != model.layout.cols)
        throw std::invalid_argument("model document: coefficient length mismatch");
    model.lambdas = doc.at("lambdas").get<std::vector<double>>();
    if (model.lambdas.size() != model.layout.blocks.size())
        throw std::invalid_argument("model document: lambda count mismatch");
    model.edf = doc.at("edf").get<double>();
    model.gcv_score = doc.at("gcv_score").get<double>();
    model.log_likelihood = doc.at("log_likelihood").get<double>();
    model.deviance = doc.at("deviance").get<double>();
    return model;
}

} // namespace memoria::smooth
