#include "pref/gradcheck.hpp"

#include <cmath>
#include <cstdio>

namespace pref::ad {

std::string GradCheckReport::to_string() const {
  std::string out;
  char line[160];
  for (const auto& e : params) {
    std::snprintf(line, sizeof(line), "  %-24s max_rel_err=%.3e (analytic=%.6e numeric=%.6e)\n",
                  e.name.c_str(), e.max_rel_err, e.analytic, e.numeric);
    out += line;
  }
  std::snprintf(line, sizeof(line), "  overall max_rel_err=%.3e -> %s\n", max_rel_err,
                pass ? "pass" : "FAIL");
  out += line;
  return out;
}

GradCheckReport grad_check(
    const std::function<Tensor<double>(const std::vector<Tensor<double>>&)>& f,
    std::vector<Tensor<double>> params, double step, double tol) {
  if (params.empty()) throw ShapeError("grad_check: no parameters given");
  for (auto& p : params) {
    if (!p.requires_grad())
      throw ShapeError("grad_check: parameter '" + p.name() + "' does not require gradients");
    p.zero_grad();
  }

  Tensor<double> y = f(params);
  if (y.numel() != 1)
    throw ShapeError("grad_check: f must return a scalar, got " + format_shape(y.shape()));
  backward(y);

  std::vector<std::vector<double>> analytic;
  for (const auto& p : params)
    analytic.push_back(p.has_grad() ? p.grad() : std::vector<double>(p.data().size(), 0.0));

  auto eval = [&]() {
    NoGradGuard guard;
    return f(params).item();
  };

  GradCheckReport report;
  report.pass = true;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& values = params[pi].impl()->data;
    GradCheckEntry entry;
    entry.name = params[pi].name().empty() ? ("param" + std::to_string(pi)) : params[pi].name();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double orig = values[i];
      values[i] = orig + step;
      const double plus = eval();
      values[i] = orig - step;
      const double minus = eval();
      values[i] = orig;
      const double numeric = (plus - minus) / (2.0 * step);
      const double a = analytic[pi][i];
      const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-6});
      const double rel = std::fabs(a - numeric) / denom;
      if (rel > entry.max_rel_err) {
        entry.max_rel_err = rel;
        entry.worst_index = static_cast<std::int64_t>(i);
        entry.analytic = a;
        entry.numeric = numeric;
      }
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.params.push_back(std::move(entry));
  }
  report.pass = report.max_rel_err < tol;
  return report;
}

}  // namespace pref::ad
