#pragma once

#include "memoria/spline.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace memoria::smooth {

struct SmoothBlock {
    std::string name;       // "age", "time", "age:time"
    int col_start = 0;      // within the full design
    int cols = 0;
    Eigen::MatrixXd penalty; // cols x cols, symmetric PSD
};

// One constrained marginal smooth: raw basis columns are mapped through z,
// the null-space transform of the training-sample column sums, so fitted
// effects sum to zero over the training rows.
struct MarginLayout {
    SplineBasis basis;
    Eigen::VectorXd constraint; // column sums of basis over training rows
    Eigen::MatrixXd z;          // dimension x (dimension-1)
};

// Everything needed to evaluate design rows at arbitrary points: column 0 is
// the intercept, followed by the present blocks in order age, time, age:time.
struct DesignLayout {
    std::optional<MarginLayout> age;
    std::optional<MarginLayout> time;
    bool interaction = false;
    std::vector<SmoothBlock> blocks;
    int cols = 1;
    std::vector<std::string> notes; // degeneracies: reduced dimensions, dropped margins

    Eigen::RowVectorXd row(double age_value, double time_value) const;
    Eigen::MatrixXd matrix(const std::vector<std::pair<double, double>>& points) const;
};

struct SmoothDesign {
    DesignLayout layout;
    Eigen::MatrixXd x; // n x layout.cols, evaluated at the training points
};

// Orthonormal basis of the hyperplane {v : c'v = 0}, via the Householder
// reflector taking c to a multiple of e1. Deterministic in c.
Eigen::MatrixXd null_space_transform(const Eigen::VectorXd& c);

// Fills blocks and cols from the margins and interaction flag already set on
// the layout. Used by the design builders and by model deserialization.
void finalize_blocks(DesignLayout& layout);

// [1 | age smooth] for a one-dimensional smooth of age.
SmoothDesign build_univariate_design(const std::vector<double>& ages, int dimension);

// [1 | age | time | age x time] functional-ANOVA design. A margin with fewer
// than 2 distinct values is dropped (with a note) along with the interaction.
SmoothDesign build_tensor_design(const std::vector<double>& ages,
                                 const std::vector<double>& times, int age_dimension,
                                 int time_dimension);

} // namespace memoria::smooth
