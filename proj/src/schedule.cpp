#include "sgl/schedule.hpp"

#include <cmath>
#include <sstream>

#include "sgl/errors.hpp"

namespace sgl {

namespace {

constexpr double kStrictMargin = 1e-12;

std::string describe(const char* expr, double value, const char* bound) {
  std::ostringstream msg;
  msg << expr << " = " << value << bound;
  return msg.str();
}

}  // namespace

HorizonMode parse_horizon_mode(const std::string& name) {
  if (name == "log") return HorizonMode::Log;
  if (name == "power") return HorizonMode::Power;
  throw ConfigError("unknown horizon mode '" + name + "' (expected log or power)");
}

const char* to_string(HorizonMode mode) { return mode == HorizonMode::Log ? "log" : "power"; }

double Schedule::gamma(long long t) const { return gamma_scale / std::pow(static_cast<double>(t + 1), gamma_exp); }

double Schedule::delta(long long t) const { return delta_scale / std::pow(static_cast<double>(t + 1), delta_exp); }

long long Schedule::horizon(long long t) const {
  const double base = horizon_mode == HorizonMode::Log ? horizon_param * std::log(static_cast<double>(t + 2))
                                                       : std::pow(static_cast<double>(t + 1), horizon_param);
  return static_cast<long long>(std::ceil(base)) + 1;
}

Schedule default_schedule(double tau, double min_radius) {
  Schedule s;
  s.delta_scale = 0.25 * min_radius;
  s.horizon_param = 2.0 * tau;
  return s;
}

Schedule paper_suitable_schedule(double min_radius) {
  Schedule s;
  s.delta_scale = 0.25 * min_radius;
  s.horizon_mode = HorizonMode::Power;
  s.horizon_param = 0.5;
  return s;
}

Schedule preset_schedule(const std::string& name, double tau, double min_radius) {
  if (name == "default") return default_schedule(tau, min_radius);
  if (name == "paper-suitable") return paper_suitable_schedule(min_radius);
  throw ConfigError("unknown schedule preset '" + name + "' (expected default or paper-suitable)");
}

bool ScheduleReport::all_pass() const {
  for (const auto& c : conditions)
    if (!c.pass) return false;
  return true;
}

ScheduleReport validate_schedule(const Schedule& schedule, double tau) {
  const double p = schedule.gamma_exp;
  const double q = schedule.delta_exp;
  ScheduleReport report;
  report.conditions.push_back({"vanishing-steps", p > 0.0 && q > 0.0,
                               describe("min(p, q)", std::min(p, q), " must be > 0")});
  report.conditions.push_back({"sum-gamma-diverges", p <= 1.0, describe("p", p, " must be <= 1")});
  report.conditions.push_back({"sum-gamma-delta-finite", p + q > 1.0 + kStrictMargin,
                               describe("p + q", p + q, " must be > 1")});
  report.conditions.push_back({"sum-gamma-over-delta-squared-finite", p - q > 0.5 + kStrictMargin,
                               describe("p - q", p - q, " must be > 1/2")});
  ConditionCheck horizon{"horizon-bias-summable", false, ""};
  if (tau == 0.0) {
    horizon.pass = true;
    horizon.detail = "tau = 0: rollouts start stationary after one step";
  } else if (schedule.horizon_mode == HorizonMode::Power) {
    horizon.pass = schedule.horizon_param > 0.0;
    horizon.detail = describe("T0", schedule.horizon_param, " must be > 0 (power horizon)");
  } else if (std::isinf(tau)) {
    horizon.detail = "tau = inf: chain does not mix";
  } else {
    const double lhs = p - q + schedule.horizon_param / tau;
    horizon.pass = lhs > 1.0 + kStrictMargin;
    horizon.detail = describe("p - q + T0/tau", lhs, " must be > 1");
  }
  report.conditions.push_back(std::move(horizon));
  return report;
}

}  // namespace sgl
