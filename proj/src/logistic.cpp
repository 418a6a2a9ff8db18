#include "eggs/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "eggs/error.hpp"
#include "eggs/log.hpp"
#include "eggs/rng.hpp"
#include "model_json.hpp"

namespace eggs {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void check_columns(const LinearModel& model, const FeatureMatrix& X) {
  if (X.cols() != model.weights.size() || X.dictionary().fingerprint() != model.fingerprint)
    throw DataError("feature columns do not match the model dictionary");
}

// Parameters in standardized space; raw-space margins come from the
// effective weights w_c / s_c and bias b - Σ w_c m_c / s_c.
struct Problem {
  const FeatureMatrix& X;
  std::span<const double> y;
  const std::vector<double>& mean;
  const std::vector<double>& scale;
  double l2;

  std::size_t dim() const { return mean.size(); }

  void margins(const std::vector<double>& w, double b, std::vector<double>& z) const {
    double shift = b;
    std::vector<double> eff(dim());
    for (std::size_t c = 0; c < dim(); ++c) {
      eff[c] = w[c] / scale[c];
      shift -= eff[c] * mean[c];
    }
    z.resize(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) {
      double s = shift;
      for (const auto& e : X.row(i)) s += eff[e.column] * e.value;
      z[i] = s;
    }
  }

  double value(const std::vector<double>& w, double b) const {
    std::vector<double> z;
    margins(w, b, z);
    double loss = 0;
    for (std::size_t i = 0; i < z.size(); ++i) loss += softplus(z[i]) - y[i] * z[i];
    loss /= static_cast<double>(std::max<std::size_t>(1, z.size()));
    double reg = 0;
    for (double v : w) reg += v * v;
    return loss + 0.5 * l2 * reg;
  }

  // Returns the objective; fills gradient (weights) and bias gradient.
  double gradient(const std::vector<double>& w, double b, std::vector<double>& gw,
                  double& gb) const {
    std::vector<double> z;
    margins(w, b, z);
    const double inv_n = 1.0 / static_cast<double>(std::max<std::size_t>(1, z.size()));
    std::vector<double> raw(dim(), 0.0);
    double rsum = 0, loss = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double r = sigmoid(z[i]) - y[i];
      loss += softplus(z[i]) - y[i] * z[i];
      rsum += r;
      for (const auto& e : X.row(i)) raw[e.column] += r * e.value;
    }
    gw.assign(dim(), 0.0);
    double reg = 0;
    for (std::size_t c = 0; c < dim(); ++c) {
      gw[c] = (raw[c] - mean[c] * rsum) / scale[c] * inv_n + l2 * w[c];
      reg += w[c] * w[c];
    }
    gb = rsum * inv_n;
    return loss * inv_n + 0.5 * l2 * reg;
  }
};

void fit_scaler(const FeatureMatrix& X, bool standardize, std::vector<double>& mean,
                std::vector<double>& scale) {
  const std::size_t d = X.cols();
  mean.assign(d, 0.0);
  scale.assign(d, 1.0);
  if (!standardize || X.rows() == 0) return;
  std::vector<double> sum(d, 0.0), sq(d, 0.0);
  for (std::size_t i = 0; i < X.rows(); ++i)
    for (const auto& e : X.row(i)) {
      sum[e.column] += e.value;
      sq[e.column] += e.value * e.value;
    }
  const double n = static_cast<double>(X.rows());
  for (std::size_t c = 0; c < d; ++c) {
    if (X.dictionary()[c].kind != ColumnKind::kDense) continue;
    const double mu = sum[c] / n;
    const double var = std::max(0.0, sq[c] / n - mu * mu);
    mean[c] = mu;
    scale[c] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
}

void train_full_batch(const Problem& p, const LogisticOptions& opts, LinearModel& m) {
  std::vector<double> w(p.dim(), 0.0), gw, w_new, gw_new;
  double b = 0, gb = 0, gb_new = 0;
  double f = p.gradient(w, b, gw, gb);
  m.loss_trace.push_back(f);
  double step = 1.0;
  auto norm2 = [](const std::vector<double>& g, double gbias) {
    double s = gbias * gbias;
    for (double v : g) s += v * v;
    return s;
  };
  for (int it = 0; it < opts.max_iter; ++it) {
    const double gnorm2 = norm2(gw, gb);
    if (std::sqrt(gnorm2) <= opts.tol) {
      m.converged = true;
      break;
    }
    // Armijo backtracking from the current trial step.
    double t = step;
    double f_new = 0;
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      w_new.resize(w.size());
      for (std::size_t c = 0; c < w.size(); ++c) w_new[c] = w[c] - t * gw[c];
      const double b_new = b - t * gb;
      f_new = p.value(w_new, b_new);
      if (f_new <= f - 1e-4 * t * gnorm2) {
        f_new = p.gradient(w_new, b_new, gw_new, gb_new);
        // Barzilai-Borwein trial step for the next iteration.
        double sy = 0, ss = 0;
        for (std::size_t c = 0; c < w.size(); ++c) {
          const double s = w_new[c] - w[c];
          sy += s * (gw_new[c] - gw[c]);
          ss += s * s;
        }
        const double sb = b_new - b;
        sy += sb * (gb_new - gb);
        ss += sb * sb;
        step = (sy > 1e-300) ? std::clamp(ss / sy, 1e-10, 1e10) : t * 2.0;
        w.swap(w_new);
        gw.swap(gw_new);
        b = b_new;
        gb = gb_new;
        f = f_new;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    m.iterations = it + 1;
    if (!accepted) {
      // No descent possible at machine precision; treat as converged.
      m.converged = std::sqrt(gnorm2) <= std::max(opts.tol, 1e-8);
      break;
    }
    m.loss_trace.push_back(f);
  }
  if (!m.converged && std::sqrt(norm2(gw, gb)) <= opts.tol) m.converged = true;
  m.weights = std::move(w);
  m.bias = b;
}

void train_stochastic(const Problem& p, const LogisticOptions& opts, LinearModel& m) {
  const std::size_t n = p.X.rows();
  std::vector<double> w(p.dim(), 0.0);
  double b = 0;
  Rng rng(opts.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Columns whose centering touches every row, present or not.
  std::vector<std::size_t> centered;
  for (std::size_t c = 0; c < p.dim(); ++c)
    if (p.mean[c] != 0.0) centered.push_back(c);
  std::size_t t = 0;
  const std::size_t batch = std::max<std::size_t>(1, opts.batch_size);
  for (int epoch = 0; epoch < opts.max_iter; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      std::vector<double> g(p.dim(), 0.0);
      double gb = 0, rsum = 0;
      double shift = 0;
      for (std::size_t c : centered) shift -= w[c] * p.mean[c] / p.scale[c];
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        double z = b + shift;
        for (const auto& e : p.X.row(i)) z += w[e.column] * e.value / p.scale[e.column];
        const double r = sigmoid(z) - p.y[i];
        gb += r;
        rsum += r;
        for (const auto& e : p.X.row(i)) g[e.column] += r * e.value / p.scale[e.column];
      }
      for (std::size_t c : centered) g[c] -= rsum * p.mean[c] / p.scale[c];
      const double bn = static_cast<double>(end - start);
      const double lr = opts.learning_rate / std::sqrt(1.0 + static_cast<double>(t++));
      for (std::size_t c = 0; c < p.dim(); ++c) w[c] -= lr * (g[c] / bn + p.l2 * w[c]);
      b -= lr * gb / bn;
    }
    m.loss_trace.push_back(p.value(w, b));
    m.iterations = epoch + 1;
  }
  std::vector<double> gw;
  double gb = 0;
  p.gradient(w, b, gw, gb);
  double s = gb * gb;
  for (double v : gw) s += v * v;
  m.converged = std::sqrt(s) <= opts.tol;
  m.weights = std::move(w);
  m.bias = b;
}

}  // namespace

double logistic_objective(const LinearModel& model, const FeatureMatrix& X,
                          std::span<const double> y) {
  check_columns(model, X);
  Problem p{X, y, model.mean, model.scale, model.l2};
  return p.value(model.weights, model.bias);
}

LinearModel train_logistic(const FeatureMatrix& X, std::span<const double> y,
                           const LogisticOptions& opts) {
  if (y.size() != X.rows()) throw DataError("label count does not match feature rows");
  if (opts.l2 < 0) throw ConfigError("l2 must be non-negative");
  LinearModel m;
  m.columns = X.dictionary().columns();
  m.fingerprint = X.dictionary().fingerprint();
  m.l2 = opts.l2;
  fit_scaler(X, opts.standardize, m.mean, m.scale);

  const double positives = std::accumulate(y.begin(), y.end(), 0.0);
  if (X.rows() == 0 || positives == 0.0 || positives == static_cast<double>(X.rows())) {
    log::warn("single-class training data; returning a constant-probability model");
    const double prevalence = X.rows() == 0 ? 0.5 : positives / static_cast<double>(X.rows());
    const double c = std::clamp(prevalence, 1e-9, 1.0 - 1e-9);
    m.weights.assign(X.cols(), 0.0);
    m.bias = std::log(c / (1.0 - c));
    m.converged = true;
    return m;
  }

  Problem p{X, y, m.mean, m.scale, opts.l2};
  if (opts.stochastic) {
    train_stochastic(p, opts, m);
  } else {
    train_full_batch(p, opts, m);
  }
  return m;
}

std::vector<double> decision_function(const LinearModel& model, const FeatureMatrix& X) {
  check_columns(model, X);
  Problem p{X, {}, model.mean, model.scale, model.l2};
  std::vector<double> z;
  p.margins(model.weights, model.bias, z);
  return z;
}

std::vector<double> predict_proba(const LinearModel& model, const FeatureMatrix& X) {
  auto z = decision_function(model, X);
  for (double& v : z) v = sigmoid(v);
  return z;
}

namespace detail {

nlohmann::ordered_json linear_model_to_json(const LinearModel& m) {
  nlohmann::ordered_json j;
  j["format"] = "eggs-linear-model";
  j["version"] = 1;
  std::ostringstream fp;
  fp << std::hex << m.fingerprint;
  j["dictionary_fingerprint"] = fp.str();
  auto& cols = j["columns"] = nlohmann::ordered_json::array();
  for (const auto& c : m.columns)
    cols.push_back({c.name, c.kind == ColumnKind::kBinary ? "binary" : "dense", c.family});
  j["weights"] = m.weights;
  j["bias"] = m.bias;
  j["scaler_mean"] = m.mean;
  j["scaler_scale"] = m.scale;
  j["l2"] = m.l2;
  j["iterations"] = m.iterations;
  j["converged"] = m.converged;
  return j;
}

LinearModel linear_model_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "eggs-linear-model") throw DataError("not a linear model document");
  if (j.value("version", 0) != 1) throw DataError("unsupported linear model version");
  LinearModel m;
  for (const auto& c : j.at("columns"))
    m.columns.push_back(Column{c.at(0).get<std::string>(),
                               c.at(1).get<std::string>() == "binary" ? ColumnKind::kBinary
                                                                      : ColumnKind::kDense,
                               c.at(2).get<std::string>()});
  m.fingerprint = std::stoull(j.at("dictionary_fingerprint").get<std::string>(), nullptr, 16);
  m.weights = j.at("weights").get<std::vector<double>>();
  m.bias = j.at("bias").get<double>();
  m.mean = j.at("scaler_mean").get<std::vector<double>>();
  m.scale = j.at("scaler_scale").get<std::vector<double>>();
  m.l2 = j.at("l2").get<double>();
  m.iterations = j.at("iterations").get<int>();
  m.converged = j.at("converged").get<bool>();
  if (m.weights.size() != m.columns.size()) throw DataError("weight count != column count");
  return m;
}

}  // namespace detail

void write_linear_model(std::ostream& out, const LinearModel& m) {
  out << detail::linear_model_to_json(m).dump(1) << '\n';
}

LinearModel read_linear_model(std::istream& in) {
  return detail::linear_model_from_json(nlohmann::json::parse(in));
}

}  // namespace eggs
