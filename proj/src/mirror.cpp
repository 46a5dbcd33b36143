#include "sgl/mirror.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "sgl/errors.hpp"

namespace sgl {

namespace {

constexpr double kRowTolerance = 1e-9;

bool is_distribution(const Eigen::VectorXd& row) {
  return row.minCoeff() >= -1e-12 && std::abs(row.sum() - 1.0) <= kRowTolerance;
}

double row_value(const Regularizer& reg, const Eigen::VectorXd& row) {
  if (reg.kind == RegularizerKind::Euclidean) return 0.5 * row.squaredNorm();
  double total = 0.0;
  for (Eigen::Index a = 0; a < row.size(); ++a)
    if (row(a) > 0.0) total += row(a) * std::log(row(a));
  return total;
}

double log_sum_exp(const Eigen::VectorXd& y) {
  const double top = y.maxCoeff();
  return top + std::log((y.array() - top).exp().sum());
}

Eigen::VectorXd softmax(const Eigen::VectorXd& y) {
  Eigen::VectorXd w = (y.array() - y.maxCoeff()).exp();
  return w / w.sum();
}

Eigen::VectorXd map_row(const Regularizer& reg, const Eigen::VectorXd& y) {
  return reg.kind == RegularizerKind::Entropic ? softmax(y) : project_to_simplex(y);
}

double conjugate_row(const Regularizer& reg, const Eigen::VectorXd& y) {
  if (reg.kind == RegularizerKind::Entropic) return log_sum_exp(y);
  const Eigen::VectorXd x = project_to_simplex(y);
  return y.dot(x) - 0.5 * x.squaredNorm();
}

double sum_blocks(const ProfileTensor& t, const std::function<double(int)>& f) {
  double total = 0.0;
  for (int i = 0; i < static_cast<int>(t.size()); ++i) total += f(i);
  return total;
}

}  // namespace

Regularizer Regularizer::parse(const std::string& name) {
  if (name == "entropy" || name == "entropic") return entropic();
  if (name == "euclidean") return euclidean();
  throw ConfigError("unknown mirror map '" + name + "' (expected entropy or euclidean)");
}

std::string Regularizer::name() const { return kind == RegularizerKind::Entropic ? "entropy" : "euclidean"; }

double regularizer_value(const Regularizer& reg, const Eigen::MatrixXd& block) {
  double total = 0.0;
  for (Eigen::Index s = 0; s < block.rows(); ++s) {
    const Eigen::VectorXd row = block.row(s).transpose();
    if (!is_distribution(row)) return std::numeric_limits<double>::infinity();
    total += row_value(reg, row);
  }
  return total;
}

double regularizer_value(const Regularizer& reg, const PolicyProfile& policy) {
  return sum_blocks(policy.probs, [&](int i) { return regularizer_value(reg, policy[i]); });
}

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& y) {
  const auto n = y.size();
  std::vector<double> sorted(y.data(), y.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double shift = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) shift = candidate;
  }
  return (y.array() - shift).max(0.0).matrix();
}

Eigen::MatrixXd mirror_map(const Regularizer& reg, const Eigen::MatrixXd& scores) {
  Eigen::MatrixXd out(scores.rows(), scores.cols());
  for (Eigen::Index s = 0; s < scores.rows(); ++s) {
    if (!scores.row(s).allFinite()) throw DomainError("mirror map received a non-finite dual score");
    out.row(s) = map_row(reg, scores.row(s).transpose()).transpose();
  }
  return out;
}

PolicyProfile mirror_map(const Regularizer& reg, const DualScore& scores) {
  PolicyProfile out;
  for (const auto& block : scores) out.probs.push_back(mirror_map(reg, block));
  return out;
}

double conjugate(const Regularizer& reg, const Eigen::MatrixXd& scores) {
  double total = 0.0;
  for (Eigen::Index s = 0; s < scores.rows(); ++s) total += conjugate_row(reg, scores.row(s).transpose());
  return total;
}

double conjugate(const Regularizer& reg, const DualScore& scores) {
  return sum_blocks(scores, [&](int i) { return conjugate(reg, scores[i]); });
}

FenchelReport fenchel_coupling(const Regularizer& reg, const PolicyProfile& p, const DualScore& scores) {
  if (p.probs.size() != scores.size()) throw DimensionError("policy and dual score have different player counts");
  FenchelReport out;
  double bregman = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (p.probs[i].rows() != scores[i].rows() || p.probs[i].cols() != scores[i].cols())
      throw DimensionError("policy and dual score blocks differ in shape for player " + std::to_string(i));
    for (Eigen::Index s = 0; s < scores[i].rows(); ++s) {
      const Eigen::VectorXd y = scores[i].row(s).transpose();
      const Eigen::VectorXd x = p.probs[i].row(s).transpose();
      if (!is_distribution(x)) throw DomainError("fenchel_coupling needs a valid policy");
      const double h_star = conjugate_row(reg, y);
      out.conjugate += h_star;
      out.coupling += row_value(reg, x) + h_star - y.dot(x);

      const Eigen::VectorXd q = map_row(reg, y);
      if (q.minCoeff() <= 0.0) {
        out.boundary = true;
        continue;
      }
      const Eigen::VectorXd grad =
          reg.kind == RegularizerKind::Entropic ? Eigen::VectorXd((q.array().log() + 1.0).matrix()) : q;
      bregman += row_value(reg, x) - row_value(reg, q) - grad.dot(x - q);
    }
  }
  if (!out.boundary) out.bregman = bregman;
  return out;
}

StepBound fenchel_step_bound_check(const Regularizer& reg, const PolicyProfile& p, const DualScore& before,
                                   const DualScore& after) {
  StepBound out;
  out.lhs = fenchel_coupling(reg, p, after).coupling;
  const PolicyProfile q = mirror_map(reg, before);
  double linear = 0.0;
  double squared = 0.0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    const Eigen::MatrixXd step = after[i] - before[i];
    linear += (step.array() * (q.probs[i] - p.probs[i]).array()).sum();
    squared += step.squaredNorm();
  }
  out.rhs = fenchel_coupling(reg, p, before).coupling + linear + squared / (2.0 * reg.modulus);
  out.holds = out.lhs <= out.rhs + 1e-9;
  return out;
}

DualScore dual_from_policy(const Regularizer& reg, const PolicyProfile& policy) {
  DualScore out;
  for (const auto& block : policy.probs) {
    Eigen::MatrixXd y(block.rows(), block.cols());
    if (reg.kind == RegularizerKind::Entropic) {
      if (block.minCoeff() <= 0.0) throw DomainError("entropic dual score needs a strictly positive policy");
      y = block.array().log().matrix();
    } else {
      y = block;
    }
    for (Eigen::Index s = 0; s < y.rows(); ++s) y.row(s).array() -= y.row(s).mean();
    out.push_back(std::move(y));
  }
  return out;
}

}  // namespace sgl
