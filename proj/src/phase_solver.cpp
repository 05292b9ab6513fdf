#include "cpprop/phase_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "cpprop/errors.hpp"

namespace cpprop {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr cplx kI{0.0, 1.0};

// Building jets costs a few thousand gamma evaluations, so engines are shared.
std::shared_ptr<const ComposedTaylor> taylor_for(PulseModel model, ErrorKind error,
                                                 Series2::Shape shape) {
  using Key = std::tuple<int, int, int, int, int>;
  static std::mutex mutex;
  static std::map<Key, std::shared_ptr<const ComposedTaylor>> cache;
  const Key key{static_cast<int>(model), static_cast<int>(error), shape.eps_order,
                shape.delta_order, shape.total_order};
  std::lock_guard lock(mutex);
  auto it = cache.find(key);
  if (it == cache.end()) {
    it = cache.emplace(key, std::make_shared<const ComposedTaylor>(model, error, shape)).first;
  }
  return it->second;
}

Series2::Shape shape_for(const std::vector<DerivativeIndex>& idx, int max_order) {
  Series2::Shape s{0, 0, max_order};
  for (const auto& d : idx) {
    s.eps_order = std::max(s.eps_order, d.eps);
    s.delta_order = std::max(s.delta_order, d.delta);
  }
  return s;
}

double wrap(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // A root at 0 often converges from below; report it as 0, not 2 pi.
  if (r >= kTwoPi - 1e-9) r = 0.0;
  return r;
}

double circular_distance(double x, double y) {
  const double d = wrap(x - y);
  return std::min(d, kTwoPi - d);
}

void check_phase_count(const std::vector<double>& free_phases, int n_pulses) {
  if (n_pulses < 3 || n_pulses % 2 == 0 ||
      static_cast<int>(free_phases.size()) * 2 + 1 != n_pulses) {
    throw ConfigError(fmt::format("phase solver: N = {} with {} free phases", n_pulses,
                                  free_phases.size()));
  }
}

struct Prediction {
  DerivativeIndex index;
  cplx value;
};

// Hand-derived constraints (see README) and the derivative values they
// predict, for the systems where such expressions are known.
void closed_forms(PulseModel model, ErrorKind error, const std::vector<double>& x,
                  std::vector<double>& exprs, std::vector<Prediction>& pred) {
  if (error != ErrorKind::Alternating) return;
  const std::size_t n = x.size();
  using std::cos;
  if (model == PulseModel::Resonant) {
    if (n == 1) {
      const double c = cos(x[0]) - 0.5;
      exprs = {c};
      pred = {{{1, 0}, -c}};
    } else if (n == 2) {
      const double p2 = x[0], p3 = x[1];
      const double c1 = 4 * cos(p2) + 2 * cos(2 * p2 - p3) - 2 * cos(p3) - 1;
      const double c2 = cos(p2 - p3) - cos(2 * p2 - p3) - 0.5;
      exprs = {c1, c2};
      pred = {{{1, 0}, -c2}, {{2, 0}, 0.0}, {{3, 0}, 0.75 * c1 + 4.75 * c2}};
    }
    return;
  }
  if (model != PulseModel::RosenZener) return;
  const double pi_ln4 = kPi * std::log(4.0);
  if (n == 1) {
    const double c = cos(x[0]) - 0.5;
    exprs = {c};
    pred = {{{1, 0}, -kPi * c}, {{0, 1}, -kI * kPi * c}};
  } else if (n == 2) {
    const double p2 = x[0], p3 = x[1];
    const double ca = 1 - 2 * cos(p2 - p3) + 2 * cos(2 * p2 - p3);
    const double cb = 1 + 2 * cos(p2 - p3) + 2 * cos(2 * p2 - p3);
    exprs = {ca, cb};
    pred = {{{1, 0}, 0.5 * kPi * ca},   {{0, 1}, kI * 0.5 * kPi * ca},
            {{2, 0}, 0.0},              {{0, 2}, pi_ln4 * cb},
            {{1, 1}, -kI * 0.5 * pi_ln4 * cb}};
  } else if (n == 3) {
    const double p2 = x[0], p3 = x[1], p4 = x[2];
    const double ca = 1 - 2 * cos(p3 - p4) + 2 * cos(p2 - 2 * p3 + p4) - 2 * cos(2 * p2 - 2 * p3 + p4);
    const double cb = 1 + 2 * cos(p3 - p4) + 2 * cos(p2 - 2 * p3 + p4) + 2 * cos(2 * p2 - 2 * p3 + p4);
    exprs = {ca, cb};
    pred = {{{1, 0}, 0.5 * kPi * ca},   {{0, 1}, kI * 0.5 * kPi * ca},
            {{2, 0}, 0.0},              {{0, 2}, -pi_ln4 * cb},
            {{1, 1}, kI * 0.5 * pi_ln4 * cb}};
  }
}

// Stacked real residual vector (Re, Im of each constrained derivative) and
// its Jacobian with respect to the free phases.
class System {
 public:
  System(CompClass c, int n_free, int max_order, std::optional<PulseModel> model)
      : indices_(class_constraints(c, max_order)),
        taylor_(taylor_for(model.value_or(class_pulse_model(c)), class_error_kind(c),
                           shape_for(indices_, max_order))) {
    (void)n_free;
  }

  std::size_t rows() const { return 2 * indices_.size(); }

  double max_abs(const std::vector<double>& x) const {
    const Series2 s = taylor_->a_series_free(x, nullptr);
    double m = 0.0;
    for (const auto& d : indices_) m = std::max(m, std::abs(s.derivative(d.eps, d.delta)));
    return m;
  }

  double cost(const std::vector<double>& x) const {
    const Series2 s = taylor_->a_series_free(x, nullptr);
    double c = 0.0;
    for (const auto& d : indices_) c += std::norm(s.derivative(d.eps, d.delta));
    return c;
  }

  void evaluate(const std::vector<double>& x, Eigen::VectorXd& r, Eigen::MatrixXd& jac) const {
    std::vector<Series2> grad;
    const Series2 s = taylor_->a_series_free(x, &grad);
    r.resize(static_cast<Eigen::Index>(rows()));
    jac.resize(static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(x.size()));
    for (std::size_t k = 0; k < indices_.size(); ++k) {
      const auto& d = indices_[k];
      const cplx v = s.derivative(d.eps, d.delta);
      r(2 * k) = v.real();
      r(2 * k + 1) = v.imag();
      for (std::size_t m = 0; m < x.size(); ++m) {
        const cplx g = grad[m].derivative(d.eps, d.delta);
        jac(2 * k, m) = g.real();
        jac(2 * k + 1, m) = g.imag();
      }
    }
  }

 private:
  std::vector<DerivativeIndex> indices_;
  std::shared_ptr<const ComposedTaylor> taylor_;
};

PolishResult run_lm(const System& sys, std::vector<double> x, double tolerance,
                    int max_iterations) {
  PolishResult out;
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  sys.evaluate(x, r, jac);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  // Iterate well past the acceptance tolerance so that converged roots are
  // stable to many more digits than the deduplication tolerance.
  const double target = std::min(1e-13, 1e-4 * tolerance);
  int it = 0;
  for (; it < max_iterations; ++it) {
    if (r.lpNorm<Eigen::Infinity>() < target) break;
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;
    const double scale = std::max(jtj.diagonal().maxCoeff(), 1e-300);
    bool accepted = false;
    while (lambda < 1e12) {
      Eigen::MatrixXd a = jtj;
      a.diagonal().array() += lambda * scale;
      const Eigen::VectorXd step = a.ldlt().solve(-jtr);
      std::vector<double> trial(x.size());
      for (Eigen::Index k = 0; k < n; ++k) trial[k] = x[k] + step(k);
      Eigen::VectorXd r2;
      Eigen::MatrixXd j2;
      sys.evaluate(trial, r2, j2);
      const double c2 = r2.squaredNorm();
      if (std::isfinite(c2) && c2 < cost) {
        x = trial;
        r = r2;
        jac = j2;
        const bool tiny = step.norm() < 1e-15 * (1.0 + std::sqrt(double(n)) * kTwoPi);
        cost = c2;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = !tiny;
        break;
      }
      lambda *= 4.0;
    }
    if (!accepted) break;
  }
  for (auto& v : x) v = wrap(v);
  out.free_phases = x;
  out.iterations = it;
  out.residual = sys.max_abs(x);
  out.converged = out.residual < tolerance;
  return out;
}

}  // namespace

double ResidualReport::max_residual() const {
  double m = 0.0;
  for (double r : residuals) m = std::max(m, r);
  return m;
}

double ResidualReport::max_residual_at_order(int order) const {
  double m = 0.0;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k].order() == order) m = std::max(m, residuals[k]);
  }
  return m;
}

int default_max_order(CompClass c, int n_pulses) {
  return c == CompClass::AlternatingAmplitude ? n_pulses - 2 : (n_pulses - 1) / 2;
}

PulseModel class_pulse_model(CompClass c) {
  return c == CompClass::AlternatingAmplitude ? PulseModel::Resonant : PulseModel::RosenZener;
}

ErrorKind class_error_kind(CompClass c) {
  switch (c) {
    case CompClass::AlternatingAmplitude:
    case CompClass::CombinedSech: return ErrorKind::Alternating;
    case CompClass::DetuningOnly: return ErrorKind::None;
    case CompClass::Uniform: return ErrorKind::Uniform;
  }
  return ErrorKind::None;
}

std::vector<DerivativeIndex> class_constraints(CompClass c, int max_order) {
  if (max_order < 1) throw ConfigError("phase solver: max_order must be >= 1");
  std::vector<DerivativeIndex> out;
  switch (c) {
    case CompClass::AlternatingAmplitude:
      // Even orders vanish identically for anagram sequences.
      for (int l = 1; l <= max_order; l += 2) out.push_back({l, 0});
      break;
    case CompClass::DetuningOnly:
      for (int j = 1; j <= max_order; ++j) out.push_back({0, j});
      break;
    case CompClass::CombinedSech:
    case CompClass::Uniform:
      for (int total = 1; total <= max_order; ++total) {
        for (int i = total; i >= 0; --i) out.push_back({i, total - i});
      }
      break;
  }
  return out;
}

ResidualReport class_residuals(CompClass c, const std::vector<double>& free_phases, int n_pulses,
                               int max_order, std::optional<PulseModel> model) {
  check_phase_count(free_phases, n_pulses);
  const PulseModel pm = model.value_or(class_pulse_model(c));
  const ErrorKind ek = class_error_kind(c);
  ResidualReport rep;
  rep.indices = class_constraints(c, max_order);
  const auto taylor = taylor_for(pm, ek, shape_for(rep.indices, max_order));
  const Series2 s = taylor->a_series_free(free_phases, nullptr);
  for (const auto& d : rep.indices) {
    rep.derivatives.push_back(s.derivative(d.eps, d.delta));
    rep.residuals.push_back(std::abs(rep.derivatives.back()));
  }

  std::vector<Prediction> pred;
  closed_forms(pm, ek, free_phases, rep.closed_forms, pred);
  rep.closed_form_discrepancy = std::numeric_limits<double>::quiet_NaN();
  for (const auto& p : pred) {
    if (p.index.order() > max_order || p.index.eps > taylor->shape().eps_order ||
        p.index.delta > taylor->shape().delta_order) {
      continue;
    }
    const double diff = std::abs(s.derivative(p.index.eps, p.index.delta) - p.value);
    rep.closed_form_discrepancy =
        std::isnan(rep.closed_form_discrepancy) ? diff : std::max(rep.closed_form_discrepancy, diff);
  }
  return rep;
}

ResidualReport amplitude_residuals(const std::vector<double>& free_phases, int n_pulses,
                                   int max_order) {
  if (max_order % 2 == 0 || max_order > n_pulses - 2) {
    throw ConfigError(fmt::format(
        "amplitude residuals: max_order = {} must be odd and at most N - 2 = {}", max_order,
        n_pulses - 2));
  }
  return class_residuals(CompClass::AlternatingAmplitude, free_phases, n_pulses, max_order);
}

ResidualReport combined_residuals(const std::vector<double>& free_phases, int n_pulses,
                                  int max_order) {
  if (max_order > (n_pulses - 1) / 2) {
    throw ConfigError(fmt::format("combined residuals: max_order = {} exceeds (N - 1)/2 = {}",
                                  max_order, (n_pulses - 1) / 2));
  }
  return class_residuals(CompClass::CombinedSech, free_phases, n_pulses, max_order);
}

PolishResult polish(CompClass c, const std::vector<double>& free_phases, int max_order,
                    std::optional<PulseModel> model, double tolerance, int max_iterations) {
  const System sys(c, static_cast<int>(free_phases.size()), max_order, model);
  return run_lm(sys, free_phases, tolerance, max_iterations);
}

std::vector<double> canonical_phases(const std::vector<double>& free_phases) {
  std::vector<double> x, y;
  for (double v : free_phases) {
    x.push_back(wrap(v));
    y.push_back(wrap(-v));
  }
  // Entries within 1e-9 of each other (or of the 0 / 2 pi seam) count as equal.
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (circular_distance(x[k], y[k]) < 1e-9) continue;
    return x[k] < y[k] ? x : y;
  }
  return x;
}

double max_phase_distance(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) m = std::max(m, circular_distance(x[k], y[k]));
  return m;
}

int expected_root_count(CompClass c, int n_pulses) {
  const int n = (n_pulses - 1) / 2;
  if (c == CompClass::AlternatingAmplitude && n >= 1 && n_pulses <= 9) return 1 << (n - 1);
  if (c == CompClass::CombinedSech) {
    switch (n_pulses) {
      case 3: return 1;
      case 5: return 2;
      case 7: return 6;
      case 9: return 12;
      default: break;
    }
  }
  return -1;
}

SolveReport solve(int n_pulses, CompClass c, int max_order, const SolveOptions& options) {
  if (n_pulses < 3 || n_pulses > 9 || n_pulses % 2 == 0) {
    throw ConfigError(fmt::format("solve: N = {} must be odd with 3 <= N <= 9", n_pulses));
  }
  if (options.seed_grid_density < 2) throw ConfigError("solve: seed_grid_density must be >= 2");
  const int n = (n_pulses - 1) / 2;
  const int g = options.seed_grid_density;
  const System sys(c, n, max_order, std::nullopt);

  SolveReport rep;
  rep.expected_count = expected_root_count(c, n_pulses);

  long total = 1;
  for (int k = 0; k < n; ++k) total *= g;
  rep.seeds = total;

  auto seed_point = [&](long idx) {
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      x[static_cast<std::size_t>(k)] = kTwoPi * (double(idx % g) + 0.5) / g;
      idx /= g;
    }
    return x;
  };

  std::vector<double> cost(static_cast<std::size_t>(total));
  for (long i = 0; i < total; ++i) cost[static_cast<std::size_t>(i)] = sys.cost(seed_point(i));

  // Lattice local minima (periodic neighbourhood) plus the lowest-cost fraction.
  std::vector<char> selected(static_cast<std::size_t>(total), 0);
  long neighbours = 1;
  for (int k = 0; k < n; ++k) neighbours *= 3;
  for (long i = 0; i < total; ++i) {
    bool is_min = true;
    for (long nb = 0; nb < neighbours && is_min; ++nb) {
      long rem = nb, idx = i, stride = 1, j = 0;
      bool self = true;
      for (int k = 0; k < n; ++k) {
        const long off = rem % 3 - 1;
        rem /= 3;
        if (off != 0) self = false;
        const long digit = idx % g;
        idx /= g;
        j += ((digit + off + g) % g) * stride;
        stride *= g;
      }
      if (!self && cost[static_cast<std::size_t>(j)] < cost[static_cast<std::size_t>(i)]) {
        is_min = false;
      }
    }
    if (is_min) selected[static_cast<std::size_t>(i)] = 1;
  }
  const auto n_best = static_cast<long>(std::ceil(options.screen_fraction * double(total)));
  if (n_best > 0) {
    std::vector<long> order(static_cast<std::size_t>(total));
    for (long i = 0; i < total; ++i) order[static_cast<std::size_t>(i)] = i;
    std::nth_element(order.begin(), order.begin() + (n_best - 1), order.end(), [&](long a, long b) {
      return cost[static_cast<std::size_t>(a)] < cost[static_cast<std::size_t>(b)];
    });
    for (long k = 0; k < n_best; ++k) selected[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = 1;
  }

  std::vector<PhaseSequence> found;
  for (long i = 0; i < total; ++i) {
    if (!selected[static_cast<std::size_t>(i)]) continue;
    ++rep.polished;
    const PolishResult pr = run_lm(sys, seed_point(i), options.tolerance, options.max_iterations);
    if (!pr.converged) continue;
    ++rep.converged;
    const auto canon = canonical_phases(pr.free_phases);
    const auto mirror = canonical_phases([&] {
      std::vector<double> m;
      for (double v : canon) m.push_back(-v);
      return m;
    }());
    const bool dup = std::any_of(found.begin(), found.end(), [&](const PhaseSequence& s) {
      return max_phase_distance(s.free_phases, canon) < options.dedup_tolerance ||
             max_phase_distance(s.free_phases, mirror) < options.dedup_tolerance;
    });
    if (dup) continue;
    PhaseSequence seq;
    seq.n_pulses = n_pulses;
    seq.free_phases = canon;
    seq.comp_class = c;
    seq.max_nullified_order = max_order;
    seq.residual_norm = pr.residual;
    seq.provenance = "solver";
    found.push_back(std::move(seq));
  }
  std::sort(found.begin(), found.end(), [](const PhaseSequence& a, const PhaseSequence& b) {
    return a.free_phases < b.free_phases;
  });
  rep.sequences = std::move(found);
  rep.seed_density_warning =
      rep.expected_count >= 0 && static_cast<int>(rep.sequences.size()) < rep.expected_count;
  return rep;
}

TableVerification verify_table(const std::string& entry_name) {
  const TableEntry& entry = find_entry(entry_name);
  TableVerification v;
  v.name = entry.name;
  v.exact = entry.exact();
  const int n_pulses = entry.n_pulses();
  v.max_order = default_max_order(entry.comp_class, n_pulses);
  const auto printed = entry.free_phases();
  v.at_table = class_residuals(entry.comp_class, printed, n_pulses, v.max_order);
  constexpr double kTol = 1e-9;

  if (v.exact) {
    v.root = printed;
    v.root_residual = v.at_table.max_residual();
    v.pass = v.root_residual < kTol;
    return v;
  }

  const PolishResult pr = polish(entry.comp_class, printed, v.max_order);
  v.root = pr.free_phases;
  v.root_residual = pr.residual;
  bool within = true;
  double worst_ratio = -1.0;
  for (std::size_t k = 0; k < printed.size(); ++k) {
    const std::string& s = entry.phases_pi[k];
    double allowed = 1e-6;
    if (!is_exact_spelling(s)) {
      const auto digits = static_cast<int>(s.size() - s.find('.') - 1);
      allowed = std::pow(10.0, -digits) * kPi;
    }
    const double dev = circular_distance(v.root[k], printed[k]);
    if (dev > allowed) within = false;
    if (dev / allowed > worst_ratio) {
      worst_ratio = dev / allowed;
      v.max_phase_deviation = dev;
      v.allowed_phase_deviation = allowed;
    }
  }
  v.pass = pr.converged && within;
  return v;
}

SquareDeviationReport square_pulse_deviation_check(const std::vector<double>& free_phases,
                                                   int n_pulses, int max_order) {
  if (n_pulses != 5 && n_pulses != 7 && n_pulses != 9) {
    throw ConfigError("square_pulse_deviation_check: N must be 5, 7 or 9");
  }
  check_phase_count(free_phases, n_pulses);
  const int sech_order = (n_pulses - 1) / 2;
  if (max_order < 0) max_order = sech_order;
  const PolishResult pr = polish(CompClass::CombinedSech, free_phases, sech_order);
  SquareDeviationReport rep;
  rep.phases = pr.free_phases;
  const auto sq = class_residuals(CompClass::CombinedSech, rep.phases, n_pulses, max_order,
                                  PulseModel::Square);
  const auto sech = class_residuals(CompClass::CombinedSech, rep.phases, n_pulses, max_order);
  for (int o = 1; o <= max_order; ++o) {
    rep.max_residual.push_back(sq.max_residual_at_order(o));
    rep.sech_max_residual.push_back(sech.max_residual_at_order(o));
    rep.nullified.push_back(rep.max_residual.back() < 1e-8);
  }
  return rep;
}

}  // namespace cpprop
