#include "statsel/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace statsel::oracle {

OracleReport make_report(std::string name, std::string instance, double reference, double candidate,
                         double tolerance, bool relative) {
  OracleReport r;
  r.name = std::move(name);
  r.instance = std::move(instance);
  r.reference = reference;
  r.candidate = candidate;
  r.abs_error = std::fabs(candidate - reference);
  r.rel_error = reference != 0.0 ? r.abs_error / std::fabs(reference) : r.abs_error;
  r.tolerance = tolerance;
  r.relative = relative;
  r.pass = (relative ? r.rel_error : r.abs_error) <= tolerance;
  return r;
}

OracleReport make_bound_report(std::string name, std::string instance, double bound, double candidate) {
  OracleReport r = make_report(std::move(name), std::move(instance), bound, candidate, 0.0, false);
  r.pass = candidate >= bound;
  return r;
}

std::string report_table_header() {
  return "name,instance,reference,candidate,abs_error,rel_error,tolerance,pass\n";
}

std::string format_report_row(const OracleReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%s,%s,%.12g,%.12g,%.12g,%.12g,%.12g,%s\n", r.name.c_str(), r.instance.c_str(),
                r.reference, r.candidate, r.abs_error, r.rel_error, r.tolerance, r.pass ? "pass" : "FAIL");
  return buf;
}

ExhaustiveResult exhaustive_select(const SubsetObjective& objective, int n, int size) {
  if (size < 0 || size > n) throw std::invalid_argument("exhaustive_select: L must lie in [0, N]");
  double count = 1.0;
  for (int i = 0; i < size; ++i) count = count * (n - i) / (i + 1);
  if (count > 1e6) throw std::invalid_argument("exhaustive_select: instance too large");

  std::vector<int> cur(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) cur[static_cast<std::size_t>(i)] = i;
  ExhaustiveResult best;
  bool first = true;
  while (true) {
    const double v = objective(std::span<const int>(cur));
    if (first || v > best.value) {
      best.value = v;
      best.subset = cur;
      first = false;
    }
    // Next combination in lexicographic order.
    int i = size - 1;
    while (i >= 0 && cur[static_cast<std::size_t>(i)] == n - size + i) --i;
    if (i < 0) break;
    ++cur[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < size; ++j) cur[static_cast<std::size_t>(j)] = cur[static_cast<std::size_t>(j - 1)] + 1;
  }
  return best;
}

double logdet_eig(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(0.5 * (a + a.adjoint()), Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) s += std::log(eig.eigenvalues()(i));
  return s;
}

CMatrix dense_inverse(const CMatrix& a) { return a.fullPivLu().inverse(); }

double subset_logdet(const CMatrix& b, std::span<const int> subset) {
  const auto l = static_cast<Eigen::Index>(subset.size());
  CMatrix m = CMatrix::Identity(l, l);
  for (Eigen::Index i = 0; i < l; ++i) {
    for (Eigen::Index j = 0; j < l; ++j) m(i, j) += b(subset[static_cast<std::size_t>(i)], subset[static_cast<std::size_t>(j)]);
  }
  return logdet_eig(m);
}

std::pair<double, double> scalar_fp_reference(double noise_power, double omega, double lambda) {
  const double s2 = noise_power;
  const double c = omega * lambda * s2;
  // Positive root of a^2 + s2 a - c = 0 in cancellation-free form.
  const double a = c > 0.0 ? 2.0 * c / (s2 + std::sqrt(s2 * s2 + 4.0 * c)) : 0.0;
  const double gamma = 1.0 / (s2 + a);
  const double psi = omega > 0.0 ? a / omega : lambda;
  return {gamma, psi};
}

namespace {

struct Eig {
  RVector values;
  CMatrix vectors;
};

Eig eig_of(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> e(0.5 * (a + a.adjoint()));
  return {e.eigenvalues(), e.eigenvectors()};
}

CMatrix psd_root(const CMatrix& a) {
  const Eig e = eig_of(a);
  return e.vectors * e.values.cwiseMax(0.0).cwiseSqrt().cast<cdouble>().asDiagonal() * e.vectors.adjoint();
}

// Euclidean projection of eigenvalues onto {x >= 0, sum x <= p}.
RVector project_simplex_cap(const RVector& x, double p) {
  RVector y = x.cwiseMax(0.0);
  if (y.sum() <= p) return y;
  double lo = 0.0;
  double hi = x.maxCoeff();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if ((x.array() - mid).cwiseMax(0.0).sum() > p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return (x.array() - hi).cwiseMax(0.0).matrix();
}

CMatrix project(const CMatrix& q, double p) {
  const Eig e = eig_of(q);
  const RVector v = project_simplex_cap(e.values, p);
  return e.vectors * v.cast<cdouble>().asDiagonal() * e.vectors.adjoint();
}

}  // namespace

double relaxed_objective(const CMatrix& xi_hat, const CMatrix& delta, const CMatrix& q, int num_users) {
  const CMatrix root = psd_root(xi_hat);
  const CMatrix m = CMatrix::Identity(q.rows(), q.cols()) + root * q * root;
  return num_users * logdet_eig(m) - (delta * q).trace().real();
}

CMatrix pg_solve_relaxed(const CMatrix& xi_hat, const CMatrix& delta, double budget, int num_users, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("pg_solve_relaxed: tol must be positive");
  const Eigen::Index n = xi_hat.rows();
  const CMatrix root = psd_root(xi_hat);
  auto value = [&](const CMatrix& q) { return relaxed_objective(xi_hat, delta, q, num_users); };
  auto gradient = [&](const CMatrix& q) {
    const CMatrix inner = CMatrix::Identity(n, n) + root * q * root;
    CMatrix g = num_users * root * dense_inverse(inner) * root - delta;
    return CMatrix(0.5 * (g + g.adjoint()));
  };

  CMatrix q = CMatrix::Identity(n, n) * (budget / static_cast<double>(std::max<Eigen::Index>(n, 1)));
  double f = value(q);
  const double xi_max = eig_of(xi_hat).values.maxCoeff();
  double step = 1.0 / std::max(num_users * xi_max * xi_max, 1e-6);
  const int max_iter = 200000;
  int it = 0;
  for (; it < max_iter; ++it) {
    const CMatrix g = gradient(q);
    // Backtracking on the projected step.
    double t = step * 4.0;
    CMatrix cand;
    double fc = 0.0;
    for (int halvings = 0; halvings < 200; ++halvings) {
      cand = project(q + t * g, budget);
      fc = value(cand);
      const CMatrix d = cand - q;
      if (fc >= f + (g.adjoint() * d).trace().real() - d.squaredNorm() / (2.0 * t)) break;
      t *= 0.5;
    }
    step = t;
    const double moved = (cand - q).norm();
    q = cand;
    const double gain = fc - f;
    f = fc;
    if (moved <= tol * 1e-3 * std::max(1.0, budget) && std::fabs(gain) <= tol * 1e-3) break;
  }
  if (it == max_iter) throw std::runtime_error("pg_solve_relaxed: iteration cap reached");
  return q;
}

namespace {

// exp(x) E1(x), finite for every x > 0.
double scaled_e1(double x) {
  constexpr double euler = 0.57721566490153286060651209;
  if (x <= 1.0) {
    double sum = 0.0;
    double term = 1.0;
    for (int k = 1; k < 200; ++k) {
      term *= -x / k;
      const double add = -term / k;
      sum += add;
      if (std::fabs(add) < 1e-17 * std::fabs(sum)) break;
    }
    return std::exp(x) * (-euler - std::log(x) + sum);
  }
  // Lentz evaluation of the continued fraction
  // E1(x) = e^-x / (x + 1 / (1 + 1 / (x + 2 / (1 + 2 / (x + ...))))).
  const double tiny = 1e-300;
  double b = x + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (an * d + b);
    c = b + an / c;
    const double del = c * d;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return h;
}

}  // namespace

double expint_e1(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("expint_e1: x must be positive");
  return scaled_e1(x) * std::exp(-x);
}

double exact_siso_rate(double power, double gain, double noise_power) {
  if (!(gain > 0.0) || !(noise_power > 0.0) || power < 0.0) {
    throw std::invalid_argument("exact_siso_rate: inputs must be positive");
  }
  if (power == 0.0) return 0.0;
  return scaled_e1(noise_power / (power * gain));
}

}  // namespace statsel::oracle
