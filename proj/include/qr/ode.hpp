#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qr/errors.hpp"

namespace qr {

inline constexpr double kRtolDefault = 1e-9;
inline constexpr double kAtolDefault = 1e-12;
inline constexpr double kEscapeNormDefault = 1e8;
/// Escape times are refined against this norm level (or the escape norm,
/// whichever is smaller), so estimates are comparable across escape norms.
inline constexpr double kEscapeRefineNorm = 1e6;

/// Right-hand side y' = f(t, y) over the flattened real state.
using OdeRhs = std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dydt)>;

/// Path integral advanced alongside the state with the same error control
/// and dense output. The integrand sees the core state only.
struct Accumulator {
    std::string label;
    int width = 1;
    std::function<void(double t, const Eigen::VectorXd& y, double* out)> integrand;
};

/// First-order problem over `dimension` quaternion slots (4 reals each).
struct OdeProblem {
    int dimension = 1;
    OdeRhs rhs;
    double t0 = 0.0;
    Eigen::VectorXd y0;
    double escape_norm = kEscapeNormDefault;
    /// Euclidean norm over the first `escape_dims` reals is compared against
    /// escape_norm; <= 0 means the whole core state.
    int escape_dims = 0;
};

enum class SolveStatus {
    ReachedEnd,
    Escaped,
    StiffnessFailure,
};

/// Dense solution of one integration sweep. Queries interpolate the stored
/// per-step polynomials (4th order); endpoint queries return the accepted
/// states exactly.
class Trajectory {
  public:
    struct Step {
        double t = 0.0;
        double h = 0.0;
        // Interpolation data: value = r0 + th*(r1 + (1-th)*(r2 + th*(r3 + (1-th)*r4)))
        Eigen::MatrixXd rcont;  // (augmented dim) x 5
    };

    [[nodiscard]] double t_begin() const { return t_begin_; }
    [[nodiscard]] double t_end() const { return t_end_; }
    [[nodiscard]] SolveStatus status() const { return status_; }
    /// Refined escape time; meaningful only when status() == Escaped.
    [[nodiscard]] std::optional<double> escape_time() const { return escape_time_; }

    /// Full augmented state (core followed by accumulator slots).
    [[nodiscard]] Eigen::VectorXd query_raw(double t) const;
    /// Core state only.
    [[nodiscard]] Eigen::VectorXd query(double t) const;
    /// One labelled accumulator.
    [[nodiscard]] Eigen::VectorXd query_accumulator(const std::string& label, double t) const;

    [[nodiscard]] const Eigen::VectorXd& final_state_raw() const { return y_final_; }
    [[nodiscard]] int core_dimension() const { return core_dim_; }
    [[nodiscard]] size_t step_count() const { return steps_.size(); }

  private:
    friend Trajectory solve(const OdeProblem&, double, double, double,
                            const std::vector<Accumulator>&);
    [[nodiscard]] Eigen::VectorXd eval_step(const Step& s, double t) const;

    std::vector<Step> steps_;
    Eigen::VectorXd y_begin_, y_final_;
    double t_begin_ = 0.0, t_end_ = 0.0;
    int core_dim_ = 0;
    std::vector<std::pair<std::string, std::pair<int, int>>> accum_layout_;  // label -> (offset, width)
    SolveStatus status_ = SolveStatus::ReachedEnd;
    std::optional<double> escape_time_;
};

/// Adaptive embedded 5(4) integration of `problem` up to t_end. Escape and
/// step-size collapse are reported through the trajectory status, never as
/// exceptions.
[[nodiscard]] Trajectory solve(const OdeProblem& problem, double t_end,
                               double rtol = kRtolDefault, double atol = kAtolDefault,
                               const std::vector<Accumulator>& accumulators = {});

}  // namespace qr
