#include "memoria/design.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace memoria::smooth {

namespace {

int distinct_count(const std::vector<double>& x) {
    return static_cast<int>(std::set<double>(x.begin(), x.end()).size());
}

// kron(a, b) as a row: index (i, j) -> i * b.size() + j.
Eigen::RowVectorXd row_kron(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
    Eigen::RowVectorXd out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i)
        out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

MarginLayout make_margin(SplineBasis basis, const Eigen::MatrixXd& raw) {
    MarginLayout margin{std::move(basis), raw.colwise().sum().transpose(), {}};
    margin.z = null_space_transform(margin.constraint);
    return margin;
}

Eigen::MatrixXd reduced_penalty(const MarginLayout& margin) {
    return margin.z.transpose() * margin.basis.penalty() * margin.z;
}

} // namespace

Eigen::MatrixXd null_space_transform(const Eigen::VectorXd& c) {
    const Eigen::Index k = c.size();
    if (k < 2)
        throw std::invalid_argument("constraint must have at least 2 entries");
    const double norm = c.norm();
    if (norm == 0.0)
        throw std::invalid_argument("zero constraint vector");
    Eigen::VectorXd v = c;
    v(0) += (c(0) >= 0.0 ? norm : -norm);
    const double scale = 2.0 / v.squaredNorm();
    // Columns 2..k of the reflector I - scale * v v'.
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(k, k - 1);
    for (Eigen::Index j = 1; j < k; ++j) {
        z.col(j - 1) = -scale * v(j) * v;
        z(j, j - 1) += 1.0;
    }
    return z;
}

void finalize_blocks(DesignLayout& layout) {
    layout.blocks.clear();
    layout.cols = 1;
    if (layout.interaction && (!layout.age || !layout.time))
        throw std::invalid_argument("interaction requires both margins");
    if (layout.age) {
        const int ka = layout.age->basis.dimension() - 1;
        layout.blocks.push_back({"age", layout.cols, ka, reduced_penalty(*layout.age)});
        layout.cols += ka;
    }
    if (layout.time) {
        const int kt = layout.time->basis.dimension() - 1;
        layout.blocks.push_back({"time", layout.cols, kt, reduced_penalty(*layout.time)});
        layout.cols += kt;
    }
    if (layout.interaction) {
        const int ka = layout.age->basis.dimension() - 1;
        const int kt = layout.time->basis.dimension() - 1;
        // One roughness penalty for the whole block: age curvature plus time
        // curvature of the interaction surface.
        const Eigen::MatrixXd pi =
            kron(reduced_penalty(*layout.age), Eigen::MatrixXd::Identity(kt, kt)) +
            kron(Eigen::MatrixXd::Identity(ka, ka), reduced_penalty(*layout.time));
        layout.blocks.push_back({"age:time", layout.cols, ka * kt, pi});
        layout.cols += ka * kt;
    }
}

Eigen::RowVectorXd DesignLayout::row(double age_value, double time_value) const {
    Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(cols);
    out(0) = 1.0;
    int at = 1;
    Eigen::RowVectorXd age_row, time_row;
    if (age) {
        age_row = age->basis.row(age_value) * age->z;
        out.segment(at, age_row.size()) = age_row;
        at += static_cast<int>(age_row.size());
    }
    if (time) {
        time_row = time->basis.row(time_value) * time->z;
        out.segment(at, time_row.size()) = time_row;
        at += static_cast<int>(time_row.size());
    }
    if (interaction) {
        const Eigen::RowVectorXd inter = row_kron(age_row, time_row);
        out.segment(at, inter.size()) = inter;
    }
    return out;
}

Eigen::MatrixXd DesignLayout::matrix(const std::vector<std::pair<double, double>>& points) const {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(points.size()), cols);
    for (std::size_t i = 0; i < points.size(); ++i)
        m.row(static_cast<Eigen::Index>(i)) = row(points[i].first, points[i].second);
    return m;
}

SmoothDesign build_univariate_design(const std::vector<double>& ages, int dimension) {
    if (ages.empty())
        throw std::invalid_argument("design requires at least one observation");
    SmoothDesign design;
    auto& layout = design.layout;
    int reduced = 0;
    SplineBasis basis = cubic_spline_basis(ages, dimension, &reduced);
    if (reduced < dimension)
        layout.notes.push_back("age basis reduced to dimension " + std::to_string(reduced));
    const Eigen::MatrixXd raw = basis.matrix(ages);
    layout.age = make_margin(std::move(basis), raw);
    finalize_blocks(layout);

    design.x.resize(raw.rows(), layout.cols);
    design.x.col(0).setOnes();
    design.x.rightCols(layout.cols - 1) = raw * layout.age->z;
    return design;
}

SmoothDesign build_tensor_design(const std::vector<double>& ages,
                                 const std::vector<double>& times, int age_dimension,
                                 int time_dimension) {
    if (ages.size() != times.size())
        throw std::invalid_argument("age and time lists must have equal length");
    if (ages.empty())
        throw std::invalid_argument("design requires at least one observation");
    SmoothDesign design;
    auto& layout = design.layout;
    const Eigen::Index n = static_cast<Eigen::Index>(ages.size());

    Eigen::MatrixXd age_cols, time_cols;
    if (distinct_count(ages) >= 2) {
        int reduced = 0;
        SplineBasis basis = cubic_spline_basis(ages, age_dimension, &reduced);
        if (reduced < age_dimension)
            layout.notes.push_back("age basis reduced to dimension " + std::to_string(reduced));
        const Eigen::MatrixXd raw = basis.matrix(ages);
        layout.age = make_margin(std::move(basis), raw);
        age_cols = raw * layout.age->z;
    } else {
        layout.notes.push_back("age margin dropped: fewer than 2 distinct values");
    }
    if (distinct_count(times) >= 2) {
        int reduced = 0;
        SplineBasis basis = cubic_spline_basis(times, time_dimension, &reduced);
        if (reduced < time_dimension)
            layout.notes.push_back("time basis reduced to dimension " + std::to_string(reduced));
        const Eigen::MatrixXd raw = basis.matrix(times);
        layout.time = make_margin(std::move(basis), raw);
        time_cols = raw * layout.time->z;
    } else {
        layout.notes.push_back("time margin dropped: fewer than 2 distinct values");
    }
    layout.interaction = layout.age.has_value() && layout.time.has_value();
    finalize_blocks(layout);

    design.x.resize(n, layout.cols);
    design.x.col(0).setOnes();
    int at = 1;
    if (layout.age) {
        design.x.middleCols(at, age_cols.cols()) = age_cols;
        at += static_cast<int>(age_cols.cols());
    }
    if (layout.time) {
        design.x.middleCols(at, time_cols.cols()) = time_cols;
        at += static_cast<int>(time_cols.cols());
    }
    if (layout.interaction)
        for (Eigen::Index i = 0; i < n; ++i)
            design.x.row(i).tail(age_cols.cols() * time_cols.cols()) =
                row_kron(age_cols.row(i), time_cols.row(i));
    return design;
}

} // namespace memoria::smooth
