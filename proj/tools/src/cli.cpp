#include "srlvm_cli/cli.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <toml.hpp>

#include <srlvm/error.hpp>
#include <srlvm/signal_io.hpp>
#include <srlvm/spectral_reg.hpp>

#include "srlvm_cli/table_io.hpp"

namespace srlvm::cli {

namespace {

// Error raised while running one stage of a subcommand; the message is
// prefixed with the stage name.
template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const FitError&) {
    throw;
  } catch (const std::exception& ex) {
    throw Error(std::string(name) + ": " + ex.what());
  }
}

template <class T>
const T& required(const std::optional<T>& v, const char* flag) {
  if (!v) throw InvalidArgument(std::string("missing required option --") + flag);
  return *v;
}

// Writes through `fn` to the file at `path`, or to `fallback` when unset.
void emit(const std::optional<std::filesystem::path>& path, std::ostream& fallback,
          const std::function<void(std::ostream&)>& fn) {
  if (!path) {
    fn(fallback);
    return;
  }
  std::ofstream file(*path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write '" + path->string() + "'");
  fn(file);
  file.flush();
  if (!file) throw IoError("write failure on '" + path->string() + "'");
}

Signal read_signal(const RunConfig& config) {
  const auto format = parse_signal_format(config.format.value_or("csv"));
  return load_signal(required(config.input, "input"), format, config.sample_rate);
}

HankelConfig hankel_from(const RunConfig& config) {
  HankelConfig h;
  h.window_length = required(config.window, "window");
  h.shift = config.shift.value_or(1);
  if (h.window_length < 1) throw InvalidArgument("--window must be >= 1");
  if (h.shift < 1) throw InvalidArgument("--shift must be >= 1");
  return h;
}

Eigen::VectorXd random_unit(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w(i) = normal(rng);
  return w / w.norm();
}

void print_result(std::ostream& out, const GradCheckResult& r) {
  std::ostringstream line;
  line.imbue(std::locale::classic());
  line << std::left << std::setw(32) << r.target << std::right << std::scientific
       << std::setprecision(3) << std::setw(14) << r.gradient_error << std::setw(14)
       << r.hessian_error << "  " << (passes(r) ? "PASS" : "FAIL") << '\n';
  out << line.str();
}

// --- TOML ------------------------------------------------------------------

template <class T>
T toml_get(const toml::node& node, const std::string& key, const std::string& source) {
  if constexpr (std::is_same_v<T, bool>) {
    if (auto v = node.value_exact<bool>()) return *v;
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (auto v = node.value_exact<std::string>()) return *v;
  } else if constexpr (std::is_floating_point_v<T>) {
    if (node.is_number()) return *node.value<double>();
  } else {
    if (auto v = node.value_exact<std::int64_t>()) {
      if (*v >= 0 || std::is_signed_v<T>) return static_cast<T>(*v);
    }
  }
  throw InvalidArgument(source + ": key '" + key + "' has the wrong type");
}

}  // namespace

RunConfig parse_config(const std::string& toml_text, const std::string& source) {
  toml::table table;
  try {
    table = toml::parse(toml_text, source);
  } catch (const toml::parse_error& ex) {
    std::ostringstream os;
    os << source << ":" << ex.source().begin.line << ": " << ex.description();
    throw InvalidArgument(os.str());
  }

  RunConfig c;
  using Setter = std::function<void(const toml::node&, const std::string&)>;
  auto path = [&](std::optional<std::filesystem::path>& f) -> Setter {
    return [&f, &source](const toml::node& n, const std::string& k) {
      f = toml_get<std::string>(n, k, source);
    };
  };
  auto text = [&](std::optional<std::string>& f) -> Setter {
    return [&f, &source](const toml::node& n, const std::string& k) { f = toml_get<std::string>(n, k, source); };
  };
  auto real = [&](std::optional<double>& f) -> Setter {
    return [&f, &source](const toml::node& n, const std::string& k) { f = toml_get<double>(n, k, source); };
  };
  auto flag = [&](std::optional<bool>& f) -> Setter {
    return [&f, &source](const toml::node& n, const std::string& k) { f = toml_get<bool>(n, k, source); };
  };
  auto count = [&](std::optional<std::size_t>& f) -> Setter {
    return [&f, &source](const toml::node& n, const std::string& k) { f = toml_get<std::size_t>(n, k, source); };
  };
  auto integer = [&](std::optional<int>& f) -> Setter {
    return [&f, &source](const toml::node& n, const std::string& k) { f = toml_get<int>(n, k, source); };
  };

  const std::vector<std::pair<std::string, Setter>> keys{
      {"input", path(c.input)},
      {"format", text(c.format)},
      {"sample_rate", real(c.sample_rate)},
      {"window", count(c.window)},
      {"shift", count(c.shift)},
      {"components", count(c.components)},
      {"objective", text(c.objective)},
      {"gfunc", text(c.gfunc)},
      {"ga", real(c.ga)},
      {"alpha0", real(c.alpha0)},
      {"alpha_scale", real(c.alpha_scale)},
      {"sumt_iters", integer(c.sumt_iters)},
      {"no_regularisation", flag(c.no_regularisation)},
      {"optimiser", text(c.optimiser)},
      {"lr", real(c.lr)},
      {"tol", real(c.tol)},
      {"max_iter", integer(c.max_iter)},
      {"batch_size", count(c.batch_size)},
      {"gram_schmidt", flag(c.gram_schmidt)},
      {"whiten", flag(c.whiten)},
      {"scale", flag(c.scale)},
      {"seed", [&c, &source](const toml::node& n, const std::string& k) {
         c.seed = static_cast<std::uint64_t>(toml_get<std::int64_t>(n, k, source));
       }},
      {"out", path(c.out)},
      {"svg", path(c.svg)},
      {"collapse", text(c.collapse)},
      {"model", path(c.model)},
      {"points", count(c.points)},
  };

  for (const auto& [key, node] : table) {
    const std::string name(key.str());
    const auto it = std::find_if(keys.begin(), keys.end(), [&](const auto& p) { return p.first == name; });
    if (it == keys.end()) throw InvalidArgument(source + ": unknown key '" + name + "'");
    it->second(node, name);
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

RunConfig merge(const RunConfig& file, const RunConfig& flags) {
  RunConfig m = file;
  auto take = [](auto& dst, const auto& src) {
    if (src) dst = src;
  };
  take(m.input, flags.input);
  take(m.format, flags.format);
  take(m.sample_rate, flags.sample_rate);
  take(m.window, flags.window);
  take(m.shift, flags.shift);
  take(m.components, flags.components);
  take(m.objective, flags.objective);
  take(m.gfunc, flags.gfunc);
  take(m.ga, flags.ga);
  take(m.alpha0, flags.alpha0);
  take(m.alpha_scale, flags.alpha_scale);
  take(m.sumt_iters, flags.sumt_iters);
  take(m.no_regularisation, flags.no_regularisation);
  take(m.optimiser, flags.optimiser);
  take(m.lr, flags.lr);
  take(m.tol, flags.tol);
  take(m.max_iter, flags.max_iter);
  take(m.batch_size, flags.batch_size);
  take(m.gram_schmidt, flags.gram_schmidt);
  take(m.whiten, flags.whiten);
  take(m.scale, flags.scale);
  take(m.seed, flags.seed);
  take(m.out, flags.out);
  take(m.svg, flags.svg);
  take(m.collapse, flags.collapse);
  take(m.model, flags.model);
  take(m.points, flags.points);
  return m;
}

OptimConfig optim_config(const RunConfig& config) {
  OptimConfig o;
  if (config.optimiser) o.strategy = parse_strategy(*config.optimiser);
  if (config.lr) o.learning_rate = *config.lr;
  if (config.tol) o.tol = *config.tol;
  if (config.max_iter) o.max_inner_iters = *config.max_iter;
  if (config.alpha0) o.sumt_alpha0 = *config.alpha0;
  if (config.alpha_scale) o.sumt_scale = *config.alpha_scale;
  if (config.sumt_iters) o.sumt_iters = *config.sumt_iters;
  if (config.seed) o.seed = *config.seed;
  o.batch_size = config.batch_size;
  o.gram_schmidt = config.gram_schmidt.value_or(false);
  o.regularise = !config.no_regularisation.value_or(false);
  o.validate();
  return o;
}

ObjectivePtr objective_from(const RunConfig& config) {
  const std::string name = config.objective.value_or("negentropy");
  if (name == "pca") return make_objective(name);
  if (name == "negentropy") {
    return make_objective(name, NegentropyConfig::make(parse_gfunction(config.gfunc.value_or("logcosh")),
                                                       config.ga.value_or(1.0)));
  }
  throw InvalidArgument("unknown objective '" + name + "' (expected pca or negentropy)");
}

double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(a.norm(), b.norm());
  if (scale == 0.0) return 0.0;
  return (a - b).norm() / scale;
}

GradCheckResult check_objective(const Objective& objective, const Eigen::MatrixXd& X,
                                std::size_t points, std::uint64_t seed) {
  GradCheckResult r;
  r.target = objective.name();
  std::mt19937_64 rng(seed);
  for (std::size_t p = 0; p < points; ++p) {
    const Eigen::VectorXd w = random_unit(X.cols(), rng);
    const ScalarFunction f = [&](const Eigen::VectorXd& v) { return objective.value(v, X); };
    const Evaluation e = objective.evaluate(w, X, true);
    r.gradient_error = std::max(r.gradient_error, relative_error(e.gradient, finite_difference_gradient(f, w)));
    r.hessian_error = std::max(r.hessian_error, relative_error(e.hessian, finite_difference_hessian(f, w)));
  }
  return r;
}

GradCheckResult check_penalty(Eigen::Index length, std::size_t priors, std::size_t points,
                              std::uint64_t seed) {
  GradCheckResult r;
  r.target = "spectral-penalty(" + std::to_string(priors) + " priors)";
  std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
  SpectralState state(length, 1.0);
  for (std::size_t j = 0; j < priors; ++j) state.append(power_spectrum(random_unit(length, rng)));
  for (std::size_t p = 0; p < points; ++p) {
    const Eigen::VectorXd w = random_unit(length, rng);
    const ScalarFunction f = [&](const Eigen::VectorXd& v) { return penalty(v, state); };
    r.gradient_error = std::max(r.gradient_error, relative_error(penalty_gradient(w, state),
                                                                 finite_difference_gradient(f, w)));
    r.hessian_error = std::max(r.hessian_error, relative_error(penalty_hessian(w, state),
                                                               finite_difference_hessian(f, w)));
  }
  return r;
}

bool passes(const GradCheckResult& r) {
  return r.gradient_error <= kGradientTolerance && r.hessian_error <= kHessianTolerance;
}

int cmd_fit(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const auto [hankel, objective, optim, d, out_path, pre] = stage("configuration", [&] {
    const HankelConfig h = hankel_from(config);
    const std::size_t d = required(config.components, "components");
    if (d < 1 || d > h.window_length) {
      throw InvalidArgument("--components " + std::to_string(d) + " outside [1, --window " +
                            std::to_string(h.window_length) + "]");
    }
    const auto path = required(config.out, "out");
    required(config.input, "input");
    return std::make_tuple(h, objective_from(config), optim_config(config), d, path,
                           Preprocessing{config.scale.value_or(false), config.whiten.value_or(false)});
  });
  const Signal signal = stage("reading input", [&] { return read_signal(config); });
  FittedModel model = stage("fitting", [&] {
    return FittedModel::fit(signal, hankel, objective, d, optim, pre);
  });
  stage("writing model", [&] {
    model.save(out_path);
    return 0;
  });

  std::ostringstream table;
  table.imbue(std::locale::classic());
  table << std::setw(9) << "component" << std::setw(12) << "iterations" << std::setw(16) << "objective"
        << std::setw(16) << "penalty" << std::setw(16) << "gradient_norm" << std::setw(11) << "converged"
        << '\n';
  const auto& comps = model.diagnostics().components;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const auto& c = comps[i];
    table << std::setw(9) << i + 1 << std::setw(12) << c.iterations << std::scientific
          << std::setprecision(6) << std::setw(16) << c.objective << std::setw(16) << c.penalty
          << std::setw(16) << c.gradient_norm << std::setw(11) << (c.converged ? "yes" : "no") << '\n';
    table << std::defaultfloat;
  }
  out << table.str();
  if (!model.diagnostics().all_converged()) {
    err << "warning: at least one component did not converge\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

int cmd_transform(const RunConfig& config, std::ostream& out, std::ostream&) {
  const FittedModel model = stage("loading model", [&] { return FittedModel::load(required(config.model, "model")); });
  const Signal signal = stage("reading input", [&] { return read_signal(config); });
  const Eigen::MatrixXd Z = stage("transform", [&] { return model.transform(signal); });
  stage("writing output", [&] {
    emit(config.out, out, [&](std::ostream& os) { write_matrix_csv(os, Z, numbered_header("z", Z.cols())); });
    return 0;
  });
  return kExitOk;
}

int cmd_reconstruct(const RunConfig& config, std::ostream& out, std::ostream&) {
  const std::string collapse = config.collapse.value_or("none");
  if (collapse != "none" && collapse != "diagonal") {
    throw InvalidArgument("configuration: --collapse must be none or diagonal");
  }
  const FittedModel model = stage("loading model", [&] { return FittedModel::load(required(config.model, "model")); });
  const Eigen::MatrixXd Z = stage("reading input", [&] { return read_matrix_csv(required(config.input, "input")); });
  const Eigen::MatrixXd X = stage("reconstruction", [&] { return model.inverse_transform(Z); });
  stage("writing output", [&] {
    emit(config.out, out, [&](std::ostream& os) {
      if (collapse == "diagonal") {
        const std::vector<double> signal = diagonal_average(X, model.hankel().shift);
        write_matrix_csv(os, Eigen::Map<const Eigen::VectorXd>(signal.data(), static_cast<Eigen::Index>(signal.size())));
      } else {
        write_matrix_csv(os, X, numbered_header("x", X.cols()));
      }
    });
    return 0;
  });
  return kExitOk;
}

int cmd_spectra(const RunConfig& config, std::ostream& out, std::ostream&) {
  const FittedModel model = stage("loading model", [&] { return FittedModel::load(required(config.model, "model")); });
  const Signal signal = stage("reading input", [&] { return read_signal(config); });
  const SourceSpectra spectra = stage("spectra", [&] { return model.source_spectra(signal); });
  const Eigen::Index rows = spectra.power.empty() ? 0 : spectra.power.front().size();
  const Eigen::Index half = rows / 2 + 1;

  stage("writing output", [&] {
    emit(config.out, out, [&](std::ostream& os) {
      os << "component,bin,frequency_hz,power\n";
      std::string line;
      for (std::size_t i = 0; i < spectra.power.size(); ++i) {
        for (Eigen::Index k = 0; k < half; ++k) {
          line = std::to_string(i + 1) + ',' + std::to_string(k) + ',';
          if (spectra.frequency_hz) line += format_number((*spectra.frequency_hz)(k));
          line += ',' + format_number(spectra.power[i].bins(k)) + '\n';
          os << line;
        }
      }
    });
    if (config.svg) {
      std::vector<Series> series;
      for (std::size_t i = 0; i < spectra.power.size(); ++i) {
        Series s;
        s.label = "component " + std::to_string(i + 1);
        s.x = spectra.frequency_hz ? *spectra.frequency_hz
                                   : Eigen::VectorXd(Eigen::VectorXd::LinSpaced(half, 0.0, static_cast<double>(half - 1)));
        s.y = spectra.power[i].bins.head(half);
        series.push_back(std::move(s));
      }
      const std::string svg = render_svg(series, spectra.frequency_hz ? "frequency [Hz]" : "bin", "power");
      emit(config.svg, out, [&](std::ostream& os) { os << svg; });
    }
    return 0;
  });
  return kExitOk;
}

int cmd_check_grad(const RunConfig& config, std::ostream& out, std::ostream&,
                   ObjectivePtr objective_override) {
  const ObjectivePtr objective = objective_override ? objective_override
                                                    : stage("configuration", [&] { return objective_from(config); });
  const std::size_t points = config.points.value_or(10);
  const std::uint64_t seed = config.seed.value_or(0);
  if (points < 1) throw InvalidArgument("configuration: --points must be >= 1");

  const Eigen::MatrixXd X = stage("preparing data", [&] {
    if (config.input) {
      HankelConfig h = hankel_from(config);
      const Signal signal = read_signal(config);
      h.validate(signal.size());
      return Eigen::MatrixXd(center(hankelise(signal, h), config.scale.value_or(false)).values);
    }
    // uniform samples: zero mean, unit variance and clearly non-Gaussian
    const auto window = static_cast<Eigen::Index>(config.window.value_or(8));
    if (window < 1) throw InvalidArgument("--window must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-std::sqrt(3.0), std::sqrt(3.0));
    Eigen::MatrixXd M(512, window);
    for (Eigen::Index c = 0; c < M.cols(); ++c) {
      for (Eigen::Index r = 0; r < M.rows(); ++r) M(r, c) = u(rng);
    }
    return M;
  });

  const std::vector<GradCheckResult> results = stage("checking derivatives", [&] {
    return std::vector<GradCheckResult>{check_objective(*objective, X, points, seed),
                                        check_penalty(X.cols(), 3, points, seed)};
  });
  std::ostringstream header;
  header << std::left << std::setw(32) << "target" << std::right << std::setw(14) << "grad_rel_err"
         << std::setw(14) << "hess_rel_err" << "  status\n";
  out << header.str();
  bool ok = true;
  for (const auto& r : results) {
    print_result(out, r);
    ok = ok && passes(r);
  }
  return ok ? kExitOk : kExitError;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectrally regularised linear latent variable models for single-channel signals", "srlvm"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  RunConfig flags;
  std::optional<std::filesystem::path> config_path;

  auto add_common = [&](CLI::App* sub) {
    auto text = [&](const char* name, std::optional<std::string>& f, const char* help) {
      sub->add_option_function<std::string>(name, [&f](const std::string& v) { f = v; }, help);
    };
    auto path = [&](const char* name, std::optional<std::filesystem::path>& f, const char* help) {
      sub->add_option_function<std::string>(name, [&f](const std::string& v) { f = v; }, help);
    };
    auto real = [&](const char* name, std::optional<double>& f, const char* help) {
      sub->add_option_function<double>(name, [&f](const double& v) { f = v; }, help);
    };
    auto count = [&](const char* name, std::optional<std::size_t>& f, const char* help) {
      sub->add_option_function<std::size_t>(name, [&f](const std::size_t& v) { f = v; }, help);
    };
    auto integer = [&](const char* name, std::optional<int>& f, const char* help) {
      sub->add_option_function<int>(name, [&f](const int& v) { f = v; }, help);
    };
    auto flag = [&](const char* name, std::optional<bool>& f, const char* help) {
      sub->add_flag_callback(name, [&f] { f = true; }, help);
    };

    path("--input", flags.input, "Input file (signal, or latent CSV for reconstruct)");
    text("--format", flags.format, "Signal format: csv, f32 or f64 (default csv)");
    real("--sample-rate", flags.sample_rate, "Sample rate in Hz");
    count("--window", flags.window, "Hankel window length L_w");
    count("--shift", flags.shift, "Hankel shift L_sft (default 1)");
    count("--components", flags.components, "Number of latent components d");
    text("--objective", flags.objective, "pca or negentropy (default negentropy)");
    text("--gfunc", flags.gfunc, "Negentropy contrast: logcosh, exp or quartic (default logcosh)");
    real("--ga", flags.ga, "logcosh parameter a in [1, 2] (default 1)");
    real("--alpha0", flags.alpha0, "Initial penalty weight (default 1)");
    real("--alpha-scale", flags.alpha_scale, "Penalty growth factor per SUMT stage (default 10)");
    integer("--sumt-iters", flags.sumt_iters, "Number of SUMT stages (default 5)");
    flag("--no-regularisation", flags.no_regularisation, "Disable the spectral penalty");
    text("--optimiser", flags.optimiser, "sd, newton or bfgs (default newton)");
    real("--lr", flags.lr, "Steepest-descent learning rate (default 0.01)");
    real("--tol", flags.tol, "Convergence tolerance (default 1e-6)");
    integer("--max-iter", flags.max_iter, "Iterations per SUMT stage (default 500)");
    count("--batch-size", flags.batch_size, "Rows sampled per iteration (default all)");
    flag("--gram-schmidt", flags.gram_schmidt, "Orthogonalise against earlier components");
    flag("--whiten", flags.whiten, "Whiten the centered data before fitting");
    flag("--scale", flags.scale, "Scale columns to unit variance");
    sub->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& v) { flags.seed = v; },
                                            "Random seed (default 0)");
    path("--out", flags.out, "Output file (stdout when omitted, except for fit)");
    path("--svg", flags.svg, "SVG plot of the latent spectra");
    text("--collapse", flags.collapse, "none or diagonal (default none)");
    path("--model", flags.model, "Model JSON written by fit");
    count("--points", flags.points, "Random points for check-grad (default 10)");
    sub->add_option_function<std::string>("--config", [&](const std::string& v) { config_path = v; },
                                          "TOML config file; flags take precedence");
  };

  using Command = std::function<int(const RunConfig&, std::ostream&, std::ostream&)>;
  const std::vector<std::tuple<const char*, const char*, Command>> commands{
      {"fit", "Fit a model and write it as JSON", cmd_fit},
      {"transform", "Write the latent sources of a signal as CSV", cmd_transform},
      {"reconstruct", "Map latent CSV back to the data space", cmd_reconstruct},
      {"spectra", "Power spectra of the latent sources (CSV, optional SVG)", cmd_spectra},
      {"check-grad", "Compare analytic and finite-difference derivatives",
       [](const RunConfig& c, std::ostream& o, std::ostream& e) { return cmd_check_grad(c, o, e); }},
  };
  for (const auto& [name, help, fn] : commands) add_common(app.add_subcommand(name, help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }

  try {
    RunConfig config = flags;
    if (config_path) config = merge(stage("reading config", [&] { return load_config(*config_path); }), flags);
    for (const auto& [name, help, fn] : commands) {
      if (app.got_subcommand(name)) return fn(config, out, err);
    }
  } catch (const FitError& e) {
    err << "error: fitting: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace srlvm::cli
