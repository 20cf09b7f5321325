#pragma once

// Space-homogeneous collision dynamics d/dt f = 2 Q(M+f, M+f) on one velocity
// slice: the collision substep of the splitting scheme.

#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "bsplit/collision.hpp"
#include "bsplit/moments.hpp"

namespace bsplit {

enum class Scheme {
  explicit_euler,
  rk4,
  /// Integrating-factor RK4: the linear part exactly through exp(tL), the
  /// quadratic part by classical RK4 stages.
  lawson_rk4,
};

std::string to_string(Scheme s);
/// Accepts "explicit-euler", "rk4", "lawson-rk4".
Scheme parse_scheme(const std::string& name);

struct StepperConfig {
  Scheme scheme = Scheme::lawson_rk4;
  double dt = 0.025;
  /// Safety multiplier on stability_heuristic when adaptive is set.
  double max_dt_factor = 1.0;
  bool adaptive = false;
  bool conserve = true;
  /// Weight exponent of the blow-up guard.
  double guard_q = 8.0;
  /// Largest growth of the guarded norm allowed in one substep. Fast modes
  /// legitimately reshape the tail within a substep, so this is loose;
  /// genuine instabilities grow geometrically and trip it within a few.
  double guard_factor = 10.0;

  void validate() const;
  bool operator==(const StepperConfig&) const = default;
};

class BlowUpError : public Error {
 public:
  using Error::Error;
};

/// Default constant of stability_heuristic, calibrated so that explicit
/// Euler is stable at dt_max and unstable at 8 dt_max.
inline constexpr double kStabilityConstant = 0.005;

/// c * spacing^{2s} / Lambda with Lambda = (M * |.|^{gamma+2s}) at the grid
/// corner, the largest value over the grid.
double stability_heuristic(const VelocityGrid& grid, const PhysParams& params,
                           double c = kStabilityConstant);

struct StepReport {
  int substeps = 0;
  double dt = 0.0;
  /// min over nodes and substeps of M + f.
  double min_density = 0.0;
  /// Entropy of M + f before the step and after every substep.
  std::vector<double> entropy;
  /// sup <v>^guard_q |f| after every substep.
  std::vector<double> weighted_sup;
};

/// Owns a collision model and its right-hand side; step() is safe to call
/// concurrently on distinct slices.
class HomogeneousSolver {
 public:
  HomogeneousSolver(const VelocityGrid& grid, const PhysParams& params,
                    const QuadratureSpec& spec, StepperConfig cfg);
  HomogeneousSolver(const HomogeneousSolver&) = delete;
  HomogeneousSolver& operator=(const HomogeneousSolver&) = delete;

  const CollisionModel& model() const { return model_; }
  const PerturbativeRhs& rhs_operator() const { return rhs_; }
  const StepperConfig& config() const { return cfg_; }
  const MomentProjector& projector() const { return proj_; }

  /// 2 Q(M+f, M+f) at every node.
  void rhs(std::span<const double> f, std::span<double> out) const;
  std::vector<double> rhs(std::span<const double> f) const;

  /// Advances f in place by total time h with h / ceil(h / dt) substeps.
  /// Throws BlowUpError when sup <v>^guard_q |f| grows by more than
  /// guard_factor in one substep.
  StepReport step(std::span<double> f, double h) const;

  /// Substep actually used for a step of length h.
  double substep(double h) const;

 private:
  struct Exponentials {
    std::vector<double> half;  // exp(dt/2 L), row-major
    std::vector<double> full;  // exp(dt L)
  };
  const Exponentials& exponentials(double dt) const;
  void advance(std::span<double> f, double dt, std::vector<double>& work) const;

  CollisionModel model_;
  PerturbativeRhs rhs_;
  MomentProjector proj_;
  StepperConfig cfg_;
  std::vector<double> weight_;  // <v>^guard_q
  mutable std::mutex cache_mutex_;
  mutable std::map<double, std::shared_ptr<const Exponentials>> cache_;
};

}  // namespace bsplit
