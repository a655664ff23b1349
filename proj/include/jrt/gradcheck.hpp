#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "jrt/params.hpp"

namespace jrt {

// Scalar objective over a parameter set. When `grad` is non-null the
// callee writes analytic gradients into it (same layout as `params`).
using Objective = std::function<double(const ParamSet<double>& params, ParamSet<double>* grad)>;

struct BlockCheck {
  std::string name;
  std::size_t elements = 0;
  double max_rel_error = 0;
  std::size_t worst_index = 0;
  double analytic_at_worst = 0;
  double numeric_at_worst = 0;
  bool passed = false;
};

struct GradCheckReport {
  double step = 0;
  double tolerance = 0;
  std::vector<BlockCheck> blocks;

  bool passed() const;
  double max_rel_error() const;
};

// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

// Central differences (f(w+h) - f(w-h)) / 2h on every element of every
// block. 64-bit only. Throws NonFiniteError naming the block if any
// evaluation is NaN/Inf, InvalidArgument if step <= 0.
GradCheckReport finite_diff_check(const Objective& f, const ParamSet<double>& params, double step,
                                  double tolerance);

void print_report(std::ostream& os, const GradCheckReport& report);

}  // namespace jrt
