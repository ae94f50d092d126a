#include "srlvm/model.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "srlvm/error.hpp"

namespace srlvm {

using nlohmann::json;

namespace {

void require_columns(const Eigen::MatrixXd& X, Eigen::Index expected, const char* what) {
  if (X.cols() != expected) {
    throw InvalidArgument(std::string("dimension mismatch: ") + what + " has " +
                          std::to_string(X.cols()) + " columns, model expects " +
                          std::to_string(expected));
  }
}

json matrix_to_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

const json& field(const json& doc, const char* name) {
  auto it = doc.find(name);
  if (it == doc.end()) throw SchemaError(name, "missing field");
  return *it;
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw SchemaError(where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw SchemaError(where, "non-finite value");
  return v;
}

Eigen::VectorXd json_to_vector(const json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError(where, "expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = number(j[i], where + "[" + std::to_string(i) + "]");
  }
  return v;
}

Eigen::MatrixXd json_to_matrix(const json& j, const std::string& where, Eigen::Index rows,
                               Eigen::Index cols) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw SchemaError(where, "expected " + std::to_string(rows) + " rows");
  }
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::string row_name = where + "[" + std::to_string(r) + "]";
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw SchemaError(row_name, "expected " + std::to_string(cols) + " columns");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      M(r, c) = number(row[static_cast<std::size_t>(c)], row_name + "[" + std::to_string(c) + "]");
    }
  }
  return M;
}

std::size_t positive_int(const json& doc, const char* name) {
  const json& j = field(doc, name);
  if (!j.is_number_integer() || j.get<long long>() < 1) throw SchemaError(name, "expected a positive integer");
  return j.get<std::size_t>();
}

json optim_to_json(const OptimConfig& c) {
  return json{{"strategy", std::string(to_string(c.strategy))},
              {"learning_rate", c.learning_rate},
              {"tol", c.tol},
              {"max_inner_iters", c.max_inner_iters},
              {"sumt_alpha0", c.sumt_alpha0},
              {"sumt_scale", c.sumt_scale},
              {"sumt_iters", c.sumt_iters},
              {"seed", c.seed},
              {"batch_size", c.batch_size ? json(*c.batch_size) : json(nullptr)},
              {"gram_schmidt", c.gram_schmidt},
              {"hessian_damping", c.hessian_damping},
              {"regularise", c.regularise}};
}

OptimConfig optim_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("optim_config", "expected an object");
  OptimConfig c;
  try {
    c.strategy = parse_strategy(j.at("strategy").get<std::string>());
    c.learning_rate = j.at("learning_rate").get<double>();
    c.tol = j.at("tol").get<double>();
    c.max_inner_iters = j.at("max_inner_iters").get<int>();
    c.sumt_alpha0 = j.at("sumt_alpha0").get<double>();
    c.sumt_scale = j.at("sumt_scale").get<double>();
    c.sumt_iters = j.at("sumt_iters").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    const json& batch = j.at("batch_size");
    if (!batch.is_null()) c.batch_size = batch.get<std::size_t>();
    c.gram_schmidt = j.at("gram_schmidt").get<bool>();
    c.hessian_damping = j.at("hessian_damping").get<double>();
    c.regularise = j.at("regularise").get<bool>();
  } catch (const json::exception& ex) {
    throw SchemaError("optim_config", ex.what());
  }
  return c;
}

json diagnostics_to_json(const FitDiagnostics& d) {
  json comps = json::array();
  for (const auto& c : d.components) {
    comps.push_back(json{{"iterations", c.iterations},
                         {"objective", c.objective},
                         {"penalty", c.penalty},
                         {"gradient_norm", c.gradient_norm},
                         {"converged", c.converged},
                         {"stage_iterations", c.stage_iterations}});
  }
  return json{{"alpha_trace", d.alpha_trace}, {"components", std::move(comps)}};
}

FitDiagnostics diagnostics_from_json(const json& j) {
  FitDiagnostics d;
  try {
    d.alpha_trace = j.at("alpha_trace").get<std::vector<double>>();
    for (const auto& c : j.at("components")) {
      ComponentDiagnostics cd;
      cd.iterations = c.at("iterations").get<int>();
      cd.objective = c.at("objective").get<double>();
      cd.penalty = c.at("penalty").get<double>();
      cd.gradient_norm = c.at("gradient_norm").get<double>();
      cd.converged = c.at("converged").get<bool>();
      cd.stage_iterations = c.at("stage_iterations").get<std::vector<int>>();
      d.components.push_back(std::move(cd));
    }
  } catch (const json::exception& ex) {
    throw SchemaError("diagnostics", ex.what());
  }
  return d;
}

Eigen::MatrixXd inverse_whitening(const Eigen::MatrixXd& K) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (K + K.transpose()));
  if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0)) {
    throw NumericalError("whitening matrix is not positive definite");
  }
  return eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& M) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cutoff = std::numeric_limits<double>::epsilon() *
                        static_cast<double>(std::max(M.rows(), M.cols())) *
                        (s.size() > 0 ? s(0) : 0.0);
  Eigen::VectorXd inv(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) inv(i) = s(i) > cutoff ? 1.0 / s(i) : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

FittedModel FittedModel::from_parts(Eigen::MatrixXd W, HankelConfig hankel, Eigen::VectorXd mean,
                                    std::optional<Eigen::VectorXd> scale,
                                    std::optional<Eigen::MatrixXd> whitening) {
  const Eigen::Index dim = static_cast<Eigen::Index>(hankel.window_length);
  if (W.rows() < 1 || W.cols() != dim) throw InvalidArgument("W must be d x window_length with d >= 1");
  if (mean.size() != dim) throw InvalidArgument("mean must have window_length entries");
  if (scale && scale->size() != dim) throw InvalidArgument("scale must have window_length entries");
  if (whitening && (whitening->rows() != dim || whitening->cols() != dim)) {
    throw InvalidArgument("whitening matrix must be window_length x window_length");
  }
  FittedModel m;
  m.W_ = std::move(W);
  m.A_ = pseudo_inverse(m.W_);
  m.mean_ = std::move(mean);
  m.scale_ = std::move(scale);
  m.whitening_ = std::move(whitening);
  if (m.whitening_) m.dewhitening_ = inverse_whitening(*m.whitening_);
  m.hankel_ = hankel;
  for (Eigen::Index i = 0; i < m.W_.rows(); ++i) m.spectra_.push_back(power_spectrum(m.W_.row(i).transpose()));
  return m;
}

FittedModel FittedModel::fit(const Signal& signal, const HankelConfig& hankel,
                             const ObjectivePtr& objective, std::size_t d, const OptimConfig& optim,
                             Preprocessing preprocessing) {
  if (!objective) throw InvalidArgument("no objective given");
  hankel.validate(signal.size());
  if (d < 1 || d > hankel.window_length) {
    throw InvalidArgument("component count " + std::to_string(d) + " outside [1, " +
                          std::to_string(hankel.window_length) + "]");
  }
  optim.validate();

  DataMatrix data = center(hankelise(signal, hankel), preprocessing.scale);
  std::optional<Eigen::MatrixXd> K;
  if (preprocessing.whiten) {
    K = whitening_matrix(data.values);
    data.values = data.values * *K;
  }

  FitResult result = fit_all(data.values, *objective, d, optim);
  if (result.error) {
    throw FitError("fit failed after " + std::to_string(result.W.rows()) + " of " +
                       std::to_string(d) + " components: " + *result.error,
                   std::move(result));
  }

  FittedModel m = from_parts(std::move(result.W), hankel, data.mean,
                             preprocessing.scale ? data.scale : std::nullopt, std::move(K));
  m.spectra_ = std::move(result.spectra);
  m.diagnostics_ = std::move(result.diagnostics);
  m.optim_ = optim;
  m.objective_name_ = objective->name();
  return m;
}

Eigen::MatrixXd FittedModel::preprocess(const Eigen::MatrixXd& X) const {
  require_columns(X, W_.cols(), "input");
  Eigen::MatrixXd out = X.rowwise() - mean_.transpose();
  if (scale_) out = out.array().rowwise() / scale_->transpose().array();
  if (whitening_) out = out * *whitening_;
  return out;
}

Eigen::MatrixXd FittedModel::transform(const Eigen::MatrixXd& X) const {
  return preprocess(X) * W_.transpose();
}

Eigen::MatrixXd FittedModel::transform(const Signal& signal) const {
  return transform(hankelise(signal, hankel_).values);
}

Eigen::MatrixXd FittedModel::inverse_transform(const Eigen::MatrixXd& Z) const {
  if (Z.cols() != W_.rows()) {
    throw InvalidArgument("dimension mismatch: latent matrix has " + std::to_string(Z.cols()) +
                          " columns, model has " + std::to_string(W_.rows()) + " components");
  }
  Eigen::MatrixXd X = Z * A_.transpose();
  if (whitening_) X = X * dewhitening_;
  if (scale_) X = X.array().rowwise() * scale_->transpose().array();
  X.rowwise() += mean_.transpose();
  return X;
}

SourceSpectra FittedModel::source_spectra(const Signal& signal) const {
  const Eigen::MatrixXd Z = transform(signal);
  SourceSpectra out;
  for (Eigen::Index i = 0; i < Z.cols(); ++i) out.power.push_back(power_spectrum(Z.col(i)));
  if (signal.sample_rate_hz()) {
    // latent sources advance one hankel row per `shift` input samples
    const double rate = *signal.sample_rate_hz() / static_cast<double>(hankel_.shift);
    const Eigen::Index rows = Z.rows();
    Eigen::VectorXd freq(rows / 2 + 1);
    for (Eigen::Index k = 0; k < freq.size(); ++k) {
      freq(k) = static_cast<double>(k) * rate / static_cast<double>(rows);
    }
    out.frequency_hz = std::move(freq);
  }
  return out;
}

std::string FittedModel::to_json() const {
  json spectra = json::array();
  for (const auto& s : spectra_) spectra.push_back(vector_to_json(s.bins));
  json doc{
      {"schema_version", kModelSchemaVersion},
      {"window_length", hankel_.window_length},
      {"shift", hankel_.shift},
      {"d", W_.rows()},
      {"mean", vector_to_json(mean_)},
      {"scale", scale_ ? vector_to_json(*scale_) : json(nullptr)},
      {"whitening", whitening_ ? matrix_to_json(*whitening_) : json(nullptr)},
      {"W", matrix_to_json(W_)},
      {"A", matrix_to_json(A_)},
      {"objective", objective_name_},
      {"optim_config", optim_to_json(optim_)},
      {"diagnostics", diagnostics_to_json(diagnostics_)},
      {"spectra", std::move(spectra)},
  };
  return doc.dump(2) + "\n";
}

FittedModel FittedModel::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw SchemaError("<document>", std::string("invalid JSON: ") + ex.what());
  }
  if (!doc.is_object()) throw SchemaError("<document>", "expected a JSON object");

  static const std::set<std::string> known{"schema_version", "window_length", "shift", "d",
                                           "mean", "scale", "whitening", "W", "A", "objective",
                                           "optim_config", "diagnostics", "spectra"};
  for (const auto& item : doc.items()) {
    if (!known.contains(item.key())) throw SchemaError(item.key(), "unknown field");
  }

  const json& version = field(doc, "schema_version");
  if (!version.is_number_integer()) throw SchemaError("schema_version", "expected an integer");
  if (version.get<long long>() != kModelSchemaVersion) {
    throw SchemaError("schema_version", "unsupported version " + version.dump() +
                                            " (this build reads version " +
                                            std::to_string(kModelSchemaVersion) + ")");
  }

  HankelConfig hankel;
  hankel.window_length = positive_int(doc, "window_length");
  hankel.shift = positive_int(doc, "shift");
  const std::size_t d = positive_int(doc, "d");
  const auto dim = static_cast<Eigen::Index>(hankel.window_length);
  const auto rows = static_cast<Eigen::Index>(d);
  if (d > hankel.window_length) throw SchemaError("d", "exceeds window_length");

  FittedModel m;
  m.hankel_ = hankel;
  m.mean_ = json_to_vector(field(doc, "mean"), "mean");
  if (m.mean_.size() != dim) throw SchemaError("mean", "expected window_length entries");
  const json& scale = field(doc, "scale");
  if (!scale.is_null()) {
    m.scale_ = json_to_vector(scale, "scale");
    if (m.scale_->size() != dim) throw SchemaError("scale", "expected window_length entries");
  }
  const json& whitening = field(doc, "whitening");
  if (!whitening.is_null()) {
    m.whitening_ = json_to_matrix(whitening, "whitening", dim, dim);
    m.dewhitening_ = inverse_whitening(*m.whitening_);
  }
  m.W_ = json_to_matrix(field(doc, "W"), "W", rows, dim);
  m.A_ = json_to_matrix(field(doc, "A"), "A", dim, rows);

  const json& objective = field(doc, "objective");
  if (!objective.is_string()) throw SchemaError("objective", "expected a string");
  m.objective_name_ = objective.get<std::string>();
  m.optim_ = optim_from_json(field(doc, "optim_config"));
  m.diagnostics_ = diagnostics_from_json(field(doc, "diagnostics"));

  const json& spectra = field(doc, "spectra");
  if (!spectra.is_array() || spectra.size() != d) throw SchemaError("spectra", "expected d spectra");
  for (std::size_t i = 0; i < d; ++i) {
    Spectrum s{json_to_vector(spectra[i], "spectra[" + std::to_string(i) + "]")};
    if (s.size() != dim) throw SchemaError("spectra", "spectrum length differs from window_length");
    m.spectra_.push_back(std::move(s));
  }
  return m;
}

void FittedModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << to_json();
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

FittedModel FittedModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

}  // namespace srlvm
