#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "io.hpp"
#include "vspline/basis.hpp"
#include "vspline/errors.hpp"
#include "vspline/gram_fit.hpp"

namespace vspline::cli {

namespace {

using nlohmann::json;

constexpr double kMargin = 0.05;

struct Prepared {
  Samples raw;
  RescaledSamples unit;
  KernelConfig cfg = KernelConfig::uniform();
  std::optional<CorrelationSpec> corr;
};

// Tracks the step in progress so failures can name it.
struct Stage {
  std::string name = "starting";
};

// Rethrows library errors with the stage prefixed, keeping the type.
template <typename Fn>
auto staged(const Stage& stage, Fn&& fn) {
  try {
    return fn();
  } catch (const IoError& e) {
    throw IoError(stage.name + ": " + e.what());
  } catch (const DomainError& e) {
    throw DomainError(stage.name + ": " + e.what());
  } catch (const InvalidInputError& e) {
    throw InvalidInputError(stage.name + ": " + e.what());
  } catch (const SingularSystemError& e) {
    throw SingularSystemError(stage.name + ": " + e.what());
  } catch (const DegenerateScoreError& e) {
    throw DegenerateScoreError(stage.name + ": " + e.what());
  }
}

Prepared prepare(const Samples& raw, const std::string& weights_path, const std::string& corr_path, Stage& stage,
                 std::size_t min_count) {
  Prepared p;
  stage.name = "validating input";
  validate_samples(raw, min_count);
  p.raw = raw;
  stage.name = "rescaling time";
  p.unit = rescale_domain(raw, kMargin);
  const std::size_t n = raw.size();
  if (!weights_path.empty()) {
    stage.name = "reading weights";
    auto w = read_weights(weights_path, n + 1);
    const Eigen::VectorXd knots = times_of(p.unit.samples);
    p.cfg = KernelConfig::for_knots(std::span<const double>(knots.data(), n), std::move(w));
  }
  if (!corr_path.empty()) {
    stage.name = "reading correlation";
    p.corr = read_correlation(corr_path, n);
    p.corr->validate(static_cast<Eigen::Index>(n));
  }
  return p;
}

json vector_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

template <typename Fn>
json score_or_null(Fn&& fn) {
  try {
    const double s = fn();
    return std::isfinite(s) ? json(s) : json(nullptr);
  } catch (const DegenerateScoreError&) {
    return nullptr;
  }
}

json fit_prepared(const Prepared& p, double lambda, double gamma, int grid, Stage& stage) {
  const auto& samples = p.unit.samples;
  const auto n = static_cast<Eigen::Index>(samples.size());
  const Eigen::VectorXd knots = times_of(samples), y = positions_of(samples), v = velocities_of(samples);

  stage.name = "building design";
  const DesignMatrices design = build_design(knots, interval_penalties(p.cfg, knots, lambda));
  stage.name = "fitting";
  const Eigen::VectorXd theta = p.corr ? fit_theta(design, y, v, gamma, *p.corr) : fit_theta(design, y, v, gamma);
  const HatMatrices hat = p.corr ? hat_matrices(design, gamma, *p.corr) : hat_matrices(design, gamma);
  const Eigen::VectorXd f = theta.head(n), df = theta.tail(n);

  stage.name = "scoring";
  json scores;
  scores["cv"] = p.corr ? json(nullptr) : score_or_null([&] { return cv_from_hat(hat, f, df, y, v, gamma); });
  scores["gcv"] = p.corr ? json(nullptr) : score_or_null([&] { return gcv_from_hat(hat, f, df, y, v, gamma); });
  scores["gcv_corr"] =
      p.corr ? score_or_null([&] { return gcv_terms(hat, f, df, y, v, gamma, *p.corr).score(n); }) : json(nullptr);

  json representer = nullptr;
  if (!p.corr) {
    stage.name = "representer coefficients";
    try {
      const auto gram = build_gram(samples, p.cfg, lambda, gamma);
      const auto fit = solve_coefficients(gram, y, v);
      representer = {{"d", vector_json(fit.d())}, {"c", vector_json(fit.c())}, {"b", vector_json(fit.b())}};
    } catch (const SingularSystemError&) {
      representer = nullptr;
    }
  }

  stage.name = "sampling curve";
  const ScaleRecord& scale = p.unit.scale;
  const double lo = p.raw.front().t, hi = p.raw.back().t;
  std::vector<double> ct(static_cast<std::size_t>(grid)), cf(ct.size()), cdf(ct.size());
  for (int i = 0; i < grid; ++i) {
    const double s = i + 1 == grid ? hi : lo + (hi - lo) * i / (grid - 1);
    const double u = scale.to_unit(s);
    ct[static_cast<std::size_t>(i)] = s;
    cf[static_cast<std::size_t>(i)] = design.basis.evaluate(theta, u);
    cdf[static_cast<std::size_t>(i)] = scale.velocity_to_raw(design.basis.evaluate_deriv(theta, u));
  }

  json report;
  report["n"] = n;
  report["parameters"] = {{"lambda", lambda},
                          {"gamma", gamma},
                          {"weighted", !p.cfg.is_uniform()},
                          {"correlated", p.corr.has_value()}};
  report["scale"] = {{"offset", scale.offset}, {"rate", scale.rate}, {"margin", kMargin}};
  report["scores"] = scores;
  report["traces"] = {{"S", hat.S.trace()}, {"V", hat.V.trace()}};
  report["coefficients"] = {{"knots_unit", vector_json(knots)},
                            {"theta", {{"values", vector_json(f)}, {"slopes", vector_json(df)}}},
                            {"representer", representer}};
  report["curve"] = {{"t", ct}, {"f", cf}, {"df", cdf}};
  return report;
}

const char* criterion_name(Criterion c) {
  switch (c) {
    case Criterion::automatic: return "auto";
    case Criterion::cv: return "cv";
    case Criterion::gcv: return "gcv";
    case Criterion::gcv_corr: return "gcv-corr";
  }
  return "?";
}

void check_grid(int grid) {
  if (grid < 2) throw InvalidInputError("--grid must be at least 2");
}

SelectResult select_prepared(const Samples& raw, const SelectOptions& options, Stage& stage) {
  const Prepared p = prepare(raw, options.weights_path, options.corr_path, stage, 3);
  stage.name = "checking criterion";
  Criterion criterion = options.criterion;
  if (criterion == Criterion::gcv_corr && !p.corr) throw InvalidInputError("--criterion gcv-corr needs --corr");
  if (criterion == Criterion::automatic && p.corr) criterion = Criterion::gcv_corr;
  if ((criterion == Criterion::cv || criterion == Criterion::gcv) && p.corr) {
    throw InvalidInputError("--corr requires --criterion gcv-corr");
  }
  SelectResult out;
  stage.name = "searching the parameter grid";
  out.selection = optimize_params(p.unit.samples, p.cfg, criterion, p.corr ? &*p.corr : nullptr, options.search);
  out.report = fit_prepared(p, out.selection.best.lambda, out.selection.best.gamma, options.grid, stage);
  out.report["command"] = "select";
  const auto& g = options.search;
  out.report["selection"] = {
      {"criterion", criterion_name(out.selection.criterion)},
      {"score", out.selection.best.value},
      {"lambda_index", out.selection.lambda_index},
      {"gamma_index", out.selection.gamma_index},
      {"search",
       {{"lambda_min", g.lambda_min}, {"lambda_max", g.lambda_max}, {"lambda_points", g.lambda_points},
        {"gamma_min", g.gamma_min}, {"gamma_max", g.gamma_max}, {"gamma_points", g.gamma_points},
        {"refine_sweeps", g.refine_sweeps}}}};
  return out;
}

}  // namespace

Samples simulate(const SimulateOptions& options) {
  if (options.n < 2) throw InvalidInputError("simulate: n must be at least 2");
  const double vnoise = options.velocity_noise.value_or(options.noise);
  if (!(options.noise >= 0.0) || !(vnoise >= 0.0)) throw InvalidInputError("simulate: noise must be nonnegative");
  if (!(options.t_end > options.t_start)) throw InvalidInputError("simulate: need t_end > t_start");

  std::mt19937_64 engine(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto n = static_cast<std::size_t>(options.n);
  const double h = 1.0 / static_cast<double>(n - 1);
  std::vector<double> y(n), v(n);
  switch (options.kind) {
    case SimKind::line:
      for (std::size_t i = 0; i < n; ++i) {
        y[i] = 1.0 + 2.0 * static_cast<double>(i) * h;
        v[i] = 2.0;
      }
      break;
    case SimKind::sine:
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * h;
        y[i] = std::sin(2.0 * M_PI * t);
        v[i] = 2.0 * M_PI * std::cos(2.0 * M_PI * t);
      }
      break;
    case SimKind::iwp: {
      // Over a step of length h: dW = sqrt(h) xi1, int (t+h-u) dW(u) = h/2 dW + sqrt(h^3/12) xi2.
      double z = 0.0, w = 0.0;
      y[0] = v[0] = 0.0;
      for (std::size_t i = 1; i < n; ++i) {
        const double dw = std::sqrt(h) * normal(engine);
        const double integral = 0.5 * h * dw + std::sqrt(h * h * h / 12.0) * normal(engine);
        z += h * w + integral;
        w += dw;
        y[i] = z;
        v[i] = w;
      }
      break;
    }
  }

  const double span = options.t_end - options.t_start;
  Samples out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = i + 1 == n ? options.t_end : options.t_start + span * static_cast<double>(i) * h;
    const double ey = options.noise * normal(engine);
    const double ev = vnoise * normal(engine);
    out[i] = {t, y[i] + ey, v[i] / span + ev};
  }
  return out;
}

nlohmann::json fit_report(const Samples& raw, const FitOptions& options) {
  Stage stage;
  check_grid(options.grid);
  return staged(stage, [&] {
    const Prepared p = prepare(raw, options.weights_path, options.corr_path, stage, 2);
    json report = fit_prepared(p, options.lambda, options.gamma, options.grid, stage);
    report["command"] = "fit";
    return report;
  });
}

SelectResult select_report(const Samples& raw, const SelectOptions& options) {
  Stage stage;
  check_grid(options.grid);
  return staged(stage, [&] { return select_prepared(raw, options, stage); });
}


std::string curve_csv(const nlohmann::json& report) {
  const auto& c = report.at("curve");
  const auto& t = c.at("t");
  const auto& f = c.at("f");
  const auto& df = c.at("df");
  std::string out = "t,f,df\n";
  for (std::size_t i = 0; i < t.size(); ++i) {
    out += format_double(t[i].get<double>()) + ',' + format_double(f[i].get<double>()) + ',' +
           format_double(df[i].get<double>()) + '\n';
  }
  return out;
}

std::string surface_csv(const ParamSelection& selection) {
  std::string out = "lambda,gamma,score\n";
  for (const auto& p : selection.surface) {
    out += format_double(p.lambda) + ',' + format_double(p.gamma) + ',' + format_double(p.score) + '\n';
  }
  return out;
}

namespace {

std::filesystem::path sibling(const std::string& out, const std::string& suffix) {
  std::filesystem::path p(out);
  p.replace_extension();
  return p.string() + suffix;
}

void emit_report(const json& report, const std::string& out_path, const std::string& curve_path, std::ostream& out) {
  const std::string text = report.dump(2) + '\n';
  if (out_path.empty()) {
    out << text;
  } else {
    write_text(out_path, text);
  }
  const std::string curve = !curve_path.empty() ? curve_path
                            : out_path.empty()  ? std::string()
                                                : sibling(out_path, ".curve.csv").string();
  if (!curve.empty()) write_text(curve, curve_csv(report));
}

// Runs a subcommand body, mapping failures to exit codes.
template <typename Fn>
int guarded(const char* command, std::ostream& err, Fn&& body) {
  std::string stage = "starting";
  try {
    body(stage);
    return kOk;
  } catch (const IoError& e) {
    err << "vspline " << command << ": " << (stage.empty() ? "" : stage + ": ") << e.what() << '\n';
    return kUsage;
  } catch (const DomainError& e) {
    err << "vspline " << command << ": " << (stage.empty() ? "" : stage + ": ") << e.what() << '\n';
    return kUsage;
  } catch (const InvalidInputError& e) {
    err << "vspline " << command << ": " << (stage.empty() ? "" : stage + ": ") << e.what() << '\n';
    return kUsage;
  } catch (const DegenerateScoreError& e) {
    err << "vspline " << command << ": " << (stage.empty() ? "" : stage + ": ") << e.what() << '\n';
    return kDegenerate;
  } catch (const SingularSystemError& e) {
    err << "vspline " << command << ": " << (stage.empty() ? "" : stage + ": ") << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    err << "vspline " << command << ": " << (stage.empty() ? "" : stage + ": ") << e.what() << '\n';
    return kNumerical;
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Penalized spline fitting of position and velocity time series", "vspline"};
  app.require_subcommand(1);

  std::string input, out_path, curve_path, surface_path;
  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "fit with fixed lambda and gamma");
  fit_cmd->add_option("input", input, "dataset CSV with header t,y,v")->required();
  fit_cmd->add_option("--lambda", fit.lambda, "smoothing parameter (global scale with --weights)")
      ->required()
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--gamma", fit.gamma, "velocity weight")->required()->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--weights", fit.weights_path, "per-interval penalty weights, n+1 lines");
  fit_cmd->add_option("--corr", fit.corr_path, "correlation sidecar: W then Ucorr, 2n rows");
  fit_cmd->add_option("--grid", fit.grid, "curve points")->capture_default_str();
  fit_cmd->add_option("--out", out_path, "JSON report path (stdout if omitted)");
  fit_cmd->add_option("--curve", curve_path, "curve CSV path (default: <out>.curve.csv)");

  SelectOptions sel;
  std::string criterion = "auto";
  auto* select_cmd = app.add_subcommand("select", "choose lambda and gamma by cross-validation, then fit");
  select_cmd->add_option("input", input, "dataset CSV with header t,y,v")->required();
  select_cmd->add_option("--criterion", criterion, "auto, cv, gcv or gcv-corr")
      ->check(CLI::IsMember({"auto", "cv", "gcv", "gcv-corr"}))
      ->capture_default_str();
  select_cmd->add_option("--lambda-min", sel.search.lambda_min)->check(CLI::PositiveNumber)->capture_default_str();
  select_cmd->add_option("--lambda-max", sel.search.lambda_max)->check(CLI::PositiveNumber)->capture_default_str();
  select_cmd->add_option("--lambda-points", sel.search.lambda_points)->check(CLI::PositiveNumber)->capture_default_str();
  select_cmd->add_option("--gamma-min", sel.search.gamma_min)->check(CLI::PositiveNumber)->capture_default_str();
  select_cmd->add_option("--gamma-max", sel.search.gamma_max)->check(CLI::PositiveNumber)->capture_default_str();
  select_cmd->add_option("--gamma-points", sel.search.gamma_points)->check(CLI::PositiveNumber)->capture_default_str();
  select_cmd->add_option("--sweeps", sel.search.refine_sweeps, "refinement sweeps")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  select_cmd->add_option("--weights", sel.weights_path, "per-interval penalty weights, n+1 lines");
  select_cmd->add_option("--corr", sel.corr_path, "correlation sidecar: W then Ucorr, 2n rows");
  select_cmd->add_option("--grid", sel.grid, "curve points")->capture_default_str();
  select_cmd->add_option("--out", out_path, "JSON report path (stdout if omitted)");
  select_cmd->add_option("--curve", curve_path, "curve CSV path (default: <out>.curve.csv)");
  select_cmd->add_option("--surface", surface_path, "score surface CSV path (default: <out>.surface.csv)");

  SimulateOptions sim;
  std::string kind = "sine";
  double velocity_noise = -1.0;
  auto* sim_cmd = app.add_subcommand("simulate", "write a synthetic dataset");
  sim_cmd->add_option("--kind", kind, "iwp, line or sine")
      ->check(CLI::IsMember({"iwp", "line", "sine"}))
      ->capture_default_str();
  sim_cmd->add_option("--n", sim.n, "number of samples")->check(CLI::Range(2, 1 << 24))->capture_default_str();
  sim_cmd->add_option("--noise", sim.noise, "position noise sd")->check(CLI::NonNegativeNumber)->capture_default_str();
  auto* vn = sim_cmd->add_option("--velocity-noise", velocity_noise, "velocity noise sd (default: --noise)")
                 ->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--seed", sim.seed, "random seed")->required();
  sim_cmd->add_option("--t-start", sim.t_start)->capture_default_str();
  sim_cmd->add_option("--t-end", sim.t_end)->capture_default_str();
  sim_cmd->add_option("--out", out_path, "dataset CSV path (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  if (*fit_cmd) {
    return guarded("fit", err, [&](std::string& stage) {
      stage = "reading input";
      const Samples raw = read_dataset(input);
      stage.clear();
      const json report = fit_report(raw, fit);
      stage = "writing output";
      emit_report(report, out_path, curve_path, out);
    });
  }
  if (*select_cmd) {
    return guarded("select", err, [&](std::string& stage) {
      sel.criterion = criterion == "cv"         ? Criterion::cv
                      : criterion == "gcv"      ? Criterion::gcv
                      : criterion == "gcv-corr" ? Criterion::gcv_corr
                                                : Criterion::automatic;
      stage = "reading input";
      const Samples raw = read_dataset(input);
      stage.clear();
      const SelectResult result = select_report(raw, sel);
      stage = "writing output";
      emit_report(result.report, out_path, curve_path, out);
      const std::string surface = !surface_path.empty() ? surface_path
                                  : out_path.empty()    ? std::string()
                                                        : sibling(out_path, ".surface.csv").string();
      if (!surface.empty()) write_text(surface, surface_csv(result.selection));
    });
  }
  return guarded("simulate", err, [&](std::string& stage) {
    stage = "simulating";
    sim.kind = kind == "iwp" ? SimKind::iwp : kind == "line" ? SimKind::line : SimKind::sine;
    if (vn->count() > 0) sim.velocity_noise = velocity_noise;
    const Samples data = simulate(sim);
    stage = "writing output";
    if (out_path.empty()) {
      out << format_dataset(data);
    } else {
      write_dataset(out_path, data);
    }
  });
}

}  // namespace vspline::cli
