#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "aliaslab/nn.hpp"
#include "aliaslab/tensor.hpp"

namespace aliaslab {

struct GradReport {
  bool pass = false;
  double max_rel_err = 0.0;
  double step = 0.0;
  double tol = 0.0;
  std::string worst_param;
  int worst_coord = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::string note;  // set when a non-finite value aborts the check
};

// Compares reverse-mode gradients against central finite differences for
// every coordinate of `params`. `f` must be deterministic given the
// parameter values, return the scalar loss, and accumulate d loss / d params
// into the grad slots (i.e. call Tape::backward).
inline GradReport grad_check(ParamSet& params, const std::function<double(ParamSet&)>& f, double step,
                             double tol) {
  detail::require(step > 0.0, "grad_check: step must be positive");
  detail::require(tol >= 0.0, "grad_check: tol must be non-negative");
  GradReport report;
  report.step = step;
  report.tol = tol;

  params.zero_grad();
  const double base = f(params);
  if (!std::isfinite(base)) {
    report.note = "non-finite loss at base point";
    return report;
  }
  std::vector<std::vector<double>> analytic;
  for (auto& [name, t] : params.items()) analytic.push_back(t.g);

  size_t item = 0;
  for (auto& [name, t] : params.items()) {
    for (size_t i = 0; i < t.v.size(); ++i) {
      const double orig = t.v[i];
      t.v[i] = orig + step;
      params.zero_grad();
      const double fp = f(params);
      t.v[i] = orig - step;
      params.zero_grad();
      const double fm = f(params);
      t.v[i] = orig;
      if (!std::isfinite(fp) || !std::isfinite(fm)) {
        report.note = "non-finite loss at " + name + "[" + std::to_string(i) + "]";
        report.worst_param = name;
        report.worst_coord = static_cast<int>(i);
        report.pass = false;
        return report;
      }
      const double numeric = (fp - fm) / (2.0 * step);
      const double a = analytic[item][i];
      const double rel = std::fabs(a - numeric) / std::max({1.0, std::fabs(a), std::fabs(numeric)});
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = name;
        report.worst_coord = static_cast<int>(i);
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
    ++item;
  }
  params.zero_grad();
  report.pass = report.max_rel_err <= tol;
  return report;
}

}  // namespace aliaslab
