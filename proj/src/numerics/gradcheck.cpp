#include "jrt/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace jrt {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

bool GradCheckReport::passed() const {
  return std::all_of(blocks.begin(), blocks.end(), [](const BlockCheck& b) { return b.passed; });
}

double GradCheckReport::max_rel_error() const {
  double m = 0;
  for (const auto& b : blocks) m = std::max(m, b.max_rel_error);
  return m;
}

GradCheckReport finite_diff_check(const Objective& f, const ParamSet<double>& params, double step,
                                  double tolerance) {
  if (!(step > 0)) throw InvalidArgument("finite_diff_check: step must be positive");
  GradCheckReport report;
  report.step = step;
  report.tolerance = tolerance;

  ParamSet<double> analytic = params.zeros_like();
  const double base = f(params, &analytic);
  if (!std::isfinite(base)) throw NonFiniteError("finite_diff_check: objective is non-finite");

  ParamSet<double> work = params;
  for (std::size_t bi = 0; bi < work.blocks().size(); ++bi) {
    auto& block = work.blocks()[bi];
    const auto& grad = analytic.blocks()[bi].value;
    BlockCheck check;
    check.name = block.name;
    check.elements = block.value.size();
    for (std::size_t i = 0; i < block.value.size(); ++i) {
      const double orig = block.value[i];
      block.value[i] = orig + step;
      const double up = f(work, nullptr);
      block.value[i] = orig - step;
      const double down = f(work, nullptr);
      block.value[i] = orig;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NonFiniteError("finite_diff_check: non-finite objective perturbing block " +
                             block.name);
      }
      const double numeric = (up - down) / (2 * step);
      const double err = relative_error(grad[i], numeric);
      if (err > check.max_rel_error || i == 0) {
        check.max_rel_error = err;
        check.worst_index = i;
        check.analytic_at_worst = grad[i];
        check.numeric_at_worst = numeric;
      }
    }
    check.passed = check.max_rel_error <= tolerance;
    report.blocks.push_back(std::move(check));
  }
  return report;
}

void print_report(std::ostream& os, const GradCheckReport& report) {
  os << "gradcheck h=" << report.step << " tol=" << report.tolerance << '\n';
  for (const auto& b : report.blocks) {
    os << (b.passed ? "  ok   " : "  FAIL ") << std::left << std::setw(36) << b.name << std::right
       << " n=" << std::setw(5) << b.elements << "  max_rel_err=" << std::scientific
       << std::setprecision(3) << b.max_rel_error << std::defaultfloat;
    if (!b.passed) {
      os << "  (at " << b.worst_index << ": ad=" << b.analytic_at_worst
         << " fd=" << b.numeric_at_worst << ')';
    }
    os << '\n';
  }
  os << (report.passed() ? "PASS" : "FAIL") << " max_rel_err=" << report.max_rel_error() << '\n';
}

}  // namespace jrt
