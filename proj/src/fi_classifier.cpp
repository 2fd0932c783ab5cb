#include "inkwell/fi_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "inkwell/dataset_io.hpp"
#include "inkwell/kernels.hpp"

namespace inkwell {

TemplateMatrix train_templates(const std::map<FaultVariant, std::vector<Signal>>& by_class) {
  if (by_class.empty()) throw ValidationError("template training needs at least one class");
  const Signal* ref = nullptr;
  for (const auto& [label, signals] : by_class) {
    if (label == FaultVariant::Healthy) throw ValidationError("healthy is not an isolation class");
    if (signals.empty()) {
      throw ValidationError("class " + std::string(to_string(label)) + " has no training signals");
    }
    for (const Signal& s : signals) {
      if (ref == nullptr) ref = &s;
      if (!s.same_grid(*ref)) throw ValidationError("training residuals do not share a grid");
    }
  }

  TemplateMatrix t;
  const auto n = static_cast<Eigen::Index>(ref->size());
  t.grid = {ref->t_a, ref->dt, static_cast<int>(n)};
  t.R = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(by_class.size()));
  Eigen::Index col = 0;
  for (const auto& [label, signals] : by_class) {
    std::span<double> acc(t.R.col(col).data(), static_cast<std::size_t>(n));
    for (const Signal& s : signals) kernels::axpy(1.0, s.samples, acc);
    t.R.col(col) /= static_cast<double>(signals.size());
    t.class_order.push_back(label);
    ++col;
  }
  return t;
}

TemplateMatrix train_templates(const LabeledDataset& residuals) {
  std::map<FaultVariant, std::vector<Signal>> by_class;
  for (const auto& e : residuals.entries) {
    if (e.label != FaultVariant::Healthy) by_class[e.label].push_back(e.signal);
  }
  return train_templates(by_class);
}

std::string templates_csv(const TemplateMatrix& t) {
  std::ostringstream os;
  for (std::size_t i = 0; i < t.class_order.size(); ++i) {
    os << (i ? "," : "") << to_string(t.class_order[i]);
  }
  os << '\n';
  for (Eigen::Index k = 0; k < t.R.rows(); ++k) {
    for (Eigen::Index c = 0; c < t.R.cols(); ++c) os << (c ? "," : "") << format_double(t.R(k, c));
    os << '\n';
  }
  return os.str();
}

TemplateMatrix parse_templates_csv(const std::string& text, const SampleGrid& grid) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("template CSV is empty");
  TemplateMatrix t;
  t.grid = grid;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream fs(s);
    while (std::getline(fs, field, ',')) out.push_back(field);
    return out;
  };
  for (const auto& name : split(line)) {
    const FaultVariant v = parse_fault_variant(name);
    if (std::find(t.class_order.begin(), t.class_order.end(), v) != t.class_order.end()) {
      throw ValidationError("duplicate class in template CSV");
    }
    t.class_order.push_back(v);
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto& f : split(line)) row.push_back(parse_double(f));
    if (row.size() != t.class_order.size()) throw IoError("template CSV row has the wrong width");
    rows.push_back(std::move(row));
  }
  t.R.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.class_order.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (std::size_t c = 0; c < rows[k].size(); ++c) {
      t.R(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = rows[k][c];
    }
  }
  if (t.R.rows() != grid.n) throw ValidationError("template length does not match its grid");
  if (!t.R.allFinite()) throw ValidationError("template CSV has non-finite values");
  return t;
}

nlohmann::json templates_metadata(const TemplateMatrix& t) {
  std::vector<std::string> names;
  for (FaultVariant v : t.class_order) names.emplace_back(to_string(v));
  return nlohmann::json{{"classes", names}, {"grid", t.grid}};
}

// Simplex least squares --------------------------------------------------

namespace {

// Equality-constrained minimizer of 0.5 x'Gx - c'x over the free set with
// sum(x) = 1. Returns {x_free, nu} where G x - c + nu = 0 on the free set.
std::pair<Eigen::VectorXd, double> solve_face(const Eigen::MatrixXd& G, const Eigen::VectorXd& c,
                                              const std::vector<Eigen::Index>& free) {
  const auto m = static_cast<Eigen::Index>(free.size());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m + 1, m + 1);
  Eigen::VectorXd rhs(m + 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) K(i, j) = G(free[static_cast<std::size_t>(i)], free[static_cast<std::size_t>(j)]);
    K(i, m) = 1.0;
    K(m, i) = 1.0;
    rhs(i) = c(free[static_cast<std::size_t>(i)]);
  }
  rhs(m) = 1.0;
  const Eigen::VectorXd sol = K.completeOrthogonalDecomposition().solve(rhs);
  return {sol.head(m), sol(m)};
}

double quad_objective(const Eigen::MatrixXd& R, const Eigen::VectorXd& r, const Eigen::VectorXd& phi) {
  return (R * phi - r).squaredNorm();
}

Eigen::VectorXd project_feasible(Eigen::VectorXd phi) {
  phi = phi.cwiseMax(0.0);
  const double s = phi.sum();
  if (s > 0.0) {
    phi /= s;
  } else {
    phi.setConstant(1.0 / static_cast<double>(phi.size()));
  }
  return phi;
}

}  // namespace

double simplex_kkt_residual(const Eigen::MatrixXd& R, const Eigen::VectorXd& r,
                            const Eigen::VectorXd& phi) {
  const Eigen::VectorXd g = R.transpose() * (R * phi - r);
  // On the support the gradient is constant (= -nu); off it, g_i >= -nu.
  double nu_sum = 0.0;
  int support = 0;
  for (Eigen::Index i = 0; i < phi.size(); ++i) {
    if (phi(i) > 0.0) {
      nu_sum -= g(i);
      ++support;
    }
  }
  const double nu = support > 0 ? nu_sum / support : 0.0;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < phi.size(); ++i) {
    const double gi = g(i) + nu;
    worst = std::max(worst, phi(i) > 0.0 ? std::abs(gi) : std::max(0.0, -gi));
  }
  return worst;
}

SimplexLsResult solve_simplex_ls(const Eigen::MatrixXd& R, const Eigen::VectorXd& r) {
  const Eigen::Index nf = R.cols();
  if (nf == 0) throw ValidationError("simplex least squares needs at least one column");
  if (R.rows() != r.size()) throw ValidationError("template and residual lengths differ");
  if (!R.allFinite() || !r.allFinite()) throw ValidationError("non-finite simplex LS input");

  SimplexLsResult res;
  // Unit-scaled normal equations keep the sum constraint comparable to G in
  // the face solves.
  Eigen::MatrixXd G = R.transpose() * R;
  Eigen::VectorXd c = R.transpose() * r;
  const double scale = std::max({G.cwiseAbs().maxCoeff(), c.cwiseAbs().maxCoeff(), 1e-300});
  G /= scale;
  c /= scale;

  // Start at the best vertex.
  Eigen::Index start = 0;
  for (Eigen::Index i = 1; i < nf; ++i) {
    if (0.5 * G(i, i) - c(i) < 0.5 * G(start, start) - c(start)) start = i;
  }
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(nf);
  phi(start) = 1.0;
  std::vector<bool> active(static_cast<std::size_t>(nf), true);
  active[static_cast<std::size_t>(start)] = false;

  const int max_iterations = 50 * static_cast<int>(nf) + 50;
  bool done = false;
  for (; res.iterations < max_iterations && !done; ++res.iterations) {
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < nf; ++i) {
      if (!active[static_cast<std::size_t>(i)]) free.push_back(i);
    }
    const auto [target, nu] = solve_face(G, c, free);
    Eigen::VectorXd step = Eigen::VectorXd::Zero(nf);
    for (std::size_t i = 0; i < free.size(); ++i) {
      step(free[i]) = target(static_cast<Eigen::Index>(i)) - phi(free[i]);
    }

    if (step.cwiseAbs().maxCoeff() <= 1e-12) {
      // Stationary on this face: release the most negative multiplier.
      const Eigen::VectorXd g = G * phi - c;
      Eigen::Index release = -1;
      double most_negative = -1e-13;
      for (Eigen::Index i = 0; i < nf; ++i) {
        if (!active[static_cast<std::size_t>(i)]) continue;
        const double mult = g(i) + nu;
        if (mult < most_negative) {
          most_negative = mult;
          release = i;
        }
      }
      if (release < 0) {
        done = true;
      } else {
        active[static_cast<std::size_t>(release)] = false;
      }
      continue;
    }

    double t = 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index i : free) {
      if (step(i) < 0.0) {
        const double ti = -phi(i) / step(i);
        if (ti < t) {
          t = ti;
          blocking = i;
        }
      }
    }
    phi += t * step;
    if (blocking >= 0) {
      phi(blocking) = 0.0;
      active[static_cast<std::size_t>(blocking)] = true;
    }
  }

  res.phi = project_feasible(phi);
  res.objective = quad_objective(R, r, res.phi);
  if (!done) {
    throw SolverError("simplex least squares did not converge in " +
                          std::to_string(max_iterations) + " iterations",
                      res.phi);
  }
  return res;
}

Eigen::VectorXd solve_simplex_ls(const TemplateMatrix& t, const Signal& r) {
  if (static_cast<Eigen::Index>(r.size()) != t.R.rows() || r.dt != t.grid.dt) {
    throw ValidationError("residual is not on the template grid");
  }
  return solve_simplex_ls(t.R, Eigen::Map<const Eigen::VectorXd>(r.samples.data(), t.R.rows())).phi;
}

Eigen::Index argmax_lowest(const Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

IsolationResult isolate_lr(const TemplateMatrix& t, const Signal& r) {
  IsolationResult res;
  res.method = IsolationMethod::LR;
  res.phi = solve_simplex_ls(t, r);
  res.winner = t.class_order[static_cast<std::size_t>(argmax_lowest(res.phi))];
  return res;
}

// Nearest neighbour ------------------------------------------------------

KnnClassifier::KnnClassifier(std::span<const LabeledSignal> train) {
  if (train.empty()) throw ValidationError("nearest-neighbour corpus is empty");
  const Signal& ref = train.front().signal;
  samples_.resize(static_cast<Eigen::Index>(ref.size()), static_cast<Eigen::Index>(train.size()));
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (!train[i].signal.same_grid(ref)) throw ValidationError("training signals do not share a grid");
    samples_.col(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::VectorXd>(train[i].signal.samples.data(), samples_.rows());
    labels_.push_back(train[i].label);
  }
  for (FaultVariant v : kAllClasses) {
    if (std::find(labels_.begin(), labels_.end(), v) != labels_.end()) class_order_.push_back(v);
  }
}

IsolationResult KnnClassifier::isolate(const Signal& r, int k) const {
  if (labels_.empty()) throw ValidationError("nearest-neighbour corpus is empty");
  if (k < 1 || static_cast<std::size_t>(k) > labels_.size()) {
    throw ValidationError("k must lie in [1, training size]");
  }
  if (static_cast<Eigen::Index>(r.size()) != samples_.rows()) {
    throw ValidationError("signal length does not match the training corpus");
  }
  const std::size_t n = labels_.size();
  const std::span<const double> query(r.samples);
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    dist[i] = std::sqrt(kernels::squared_distance(
        query, std::span<const double>(samples_.col(static_cast<Eigen::Index>(i)).data(), r.size())));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](std::size_t a, std::size_t b) {
    return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
  });

  const std::size_t nc = class_order_.size();
  std::vector<int> votes(nc, 0);
  std::vector<double> total(nc, 0.0);
  for (int i = 0; i < k; ++i) {
    const std::size_t j = order[static_cast<std::size_t>(i)];
    const auto c = static_cast<std::size_t>(
        std::find(class_order_.begin(), class_order_.end(), labels_[j]) - class_order_.begin());
    ++votes[c];
    total[c] += dist[j];
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < nc; ++c) {
    if (votes[c] > votes[best] || (votes[c] == votes[best] && total[c] < total[best])) best = c;
  }

  IsolationResult res;
  res.method = IsolationMethod::KNN;
  res.phi.resize(static_cast<Eigen::Index>(nc));
  for (std::size_t c = 0; c < nc; ++c) res.phi(static_cast<Eigen::Index>(c)) = static_cast<double>(votes[c]) / k;
  res.winner = class_order_[best];
  return res;
}

IsolationResult isolate_knn(std::span<const LabeledSignal> train, const Signal& r, int k) {
  return KnnClassifier(train).isolate(r, k);
}

}  // namespace inkwell
