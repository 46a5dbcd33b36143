#pragma once

#include <string>
#include <vector>

namespace sgl {

enum class HorizonMode { Log, Power };

HorizonMode parse_horizon_mode(const std::string& name);  // "log" / "power"
const char* to_string(HorizonMode mode);

// Power-law step, query radius and rollout length, shared by all players:
//   gamma^t = gamma_scale / (t+1)^gamma_exp
//   delta^t = delta_scale / (t+1)^delta_exp
//   T^t     = ceil(T0 log(t+2)) + 1      (log mode)
//           = ceil((t+1)^T0) + 1         (power mode)
struct Schedule {
  double gamma_exp = 1.0;
  double delta_exp = 1.0 / 3.0;
  double gamma_scale = 1.0;
  double delta_scale = 0.1;
  HorizonMode horizon_mode = HorizonMode::Log;
  double horizon_param = 2.0;

  double gamma(long long t) const;
  double delta(long long t) const;
  long long horizon(long long t) const;
};

// gamma_scale 1, delta_scale 0.25 * min safety radius, (p, q) = (1, 1/3),
// log horizon with T0 = 2 tau. Instant mixing (tau = 0) gives T^t = 1: one
// transition already lands in the stationary distribution.
Schedule default_schedule(double tau, double min_radius);
// (p, q) = (1, 1/3) with T^t = ceil(sqrt(t+1)) + 1.
Schedule paper_suitable_schedule(double min_radius);
// "default" or "paper-suitable"; throws ConfigError otherwise.
Schedule preset_schedule(const std::string& name, double tau, double min_radius);

struct ConditionCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ScheduleReport {
  std::vector<ConditionCheck> conditions;
  bool all_pass() const;
};

// The five summability requirements of the convergence theorem, decided
// symbolically for power-law schedules:
//   vanishing steps        p > 0 and q > 0
//   sum gamma = inf        p <= 1
//   sum gamma delta < inf  p + q > 1
//   sum (gamma/delta)^2    p - q > 1/2
//   horizon bias           log mode: p - q + T0/tau > 1; power mode: T0 > 0
// Strict inequalities need a margin of 1e-12. tau = 0 (instant mixing)
// makes the horizon term vanish.
ScheduleReport validate_schedule(const Schedule& schedule, double tau);

}  // namespace sgl
