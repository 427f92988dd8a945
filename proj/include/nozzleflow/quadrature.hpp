#pragma once

// Gauss-Legendre rules on [-1, 1], computed once per order and cached.

#include <functional>
#include <vector>

namespace nozzleflow {

struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Nodes/weights for an n-point rule (Newton on the Legendre recurrence,
// converged to machine precision). Cached for repeated n.
const GaussRule& gauss_rule(int n);

// Integral of f over [a, b] with the n-point rule.
double gauss_integrate(const std::function<double(double)>& f, double a,
                       double b, int n = 16);

}  // namespace nozzleflow
