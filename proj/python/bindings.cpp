#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cli.hpp"
#include "vspline/basis.hpp"
#include "vspline/bayes.hpp"
#include "vspline/correlation.hpp"
#include "vspline/errors.hpp"
#include "vspline/gcv.hpp"
#include "vspline/gram_fit.hpp"
#include "vspline/kernel.hpp"
#include "vspline/samples.hpp"

namespace py = pybind11;
using namespace vspline;
using Vec = Eigen::VectorXd;

namespace {

Samples to_samples(const Vec& t, const Vec& y, const Vec& v) {
  if (t.size() != y.size() || t.size() != v.size()) throw InvalidInputError("t, y and v must have equal length");
  Samples s(static_cast<std::size_t>(t.size()));
  for (Eigen::Index i = 0; i < t.size(); ++i) s[static_cast<std::size_t>(i)] = {t[i], y[i], v[i]};
  return s;
}

py::tuple from_samples(const Samples& s) {
  return py::make_tuple(times_of(s), positions_of(s), velocities_of(s));
}

KernelConfig kernel_or_uniform(const std::optional<KernelConfig>& k) { return k ? *k : KernelConfig::uniform(); }

Criterion parse_criterion(const std::string& name) {
  if (name == "auto") return Criterion::automatic;
  if (name == "cv") return Criterion::cv;
  if (name == "gcv") return Criterion::gcv;
  if (name == "gcv-corr" || name == "gcv_corr") return Criterion::gcv_corr;
  throw InvalidInputError("unknown criterion '" + name + "'");
}

// Evaluates fn at every point of t; a scalar argument gives a float back.
template <class Fn>
py::object map_points(py::array_t<double, py::array::c_style | py::array::forcecast> t, Fn fn) {
  py::array_t<double> out(std::vector<py::ssize_t>(t.shape(), t.shape() + t.ndim()));
  const double* in = t.data();
  double* dst = out.mutable_data();
  for (py::ssize_t i = 0; i < t.size(); ++i) dst[i] = fn(in[i]);
  if (t.ndim() == 0) return py::float_(dst[0]);
  return std::move(out);
}

using Points = py::array_t<double, py::array::c_style | py::array::forcecast>;

const char* criterion_name(Criterion c) {
  switch (c) {
    case Criterion::automatic: return "auto";
    case Criterion::cv: return "cv";
    case Criterion::gcv: return "gcv";
    case Criterion::gcv_corr: return "gcv-corr";
  }
  return "?";
}

}  // namespace

PYBIND11_MODULE(_vspline, m) {
  m.doc() = "V-spline smoothing of trajectories observed with positions and velocities";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<InvalidInputError>(m, "InvalidInputError", PyExc_ValueError);
  py::register_exception<SingularSystemError>(m, "SingularSystemError", PyExc_ArithmeticError);
  py::register_exception<DegenerateScoreError>(m, "DegenerateScoreError", PyExc_ArithmeticError);

  py::class_<KernelConfig>(m, "KernelConfig")
      .def_static("uniform", &KernelConfig::uniform)
      .def_static("piecewise", &KernelConfig::piecewise, py::arg("breakpoints"), py::arg("weights"))
      .def_static(
          "for_knots",
          [](const std::vector<double>& knots, std::vector<double> w) { return KernelConfig::for_knots(knots, std::move(w)); },
          py::arg("knots"), py::arg("weights"))
      .def_property_readonly("is_uniform", &KernelConfig::is_uniform)
      .def_property_readonly("breakpoints",
                             [](const KernelConfig& k) { auto b = k.breakpoints(); return std::vector<double>(b.begin(), b.end()); })
      .def_property_readonly("weights",
                             [](const KernelConfig& k) { auto w = k.weights(); return std::vector<double>(w.begin(), w.end()); })
      .def("weight_at", &KernelConfig::weight_at);

  const auto uniform = KernelConfig::uniform();
  m.def("eval_r0", &eval_r0, py::arg("s"), py::arg("t"));
  m.def("eval_r1", &eval_r1, py::arg("s"), py::arg("t"), py::arg("kernel") = uniform);
  m.def("eval_r1_dt", &eval_r1_dt, py::arg("s"), py::arg("t"), py::arg("kernel") = uniform);
  m.def("eval_r1_ds", &eval_r1_ds, py::arg("s"), py::arg("t"), py::arg("kernel") = uniform);
  m.def("eval_r1_dsdt", &eval_r1_dsdt, py::arg("s"), py::arg("t"), py::arg("kernel") = uniform);

  py::class_<ScaleRecord>(m, "ScaleRecord")
      .def_readonly("offset", &ScaleRecord::offset)
      .def_readonly("rate", &ScaleRecord::rate)
      .def("to_unit", &ScaleRecord::to_unit)
      .def("to_raw", &ScaleRecord::to_raw);

  m.def(
      "rescale_domain",
      [](const Vec& t, const Vec& y, const Vec& v, double margin) {
        const auto r = rescale_domain(to_samples(t, y, v), margin);
        return py::make_tuple(from_samples(r.samples), r.scale);
      },
      py::arg("t"), py::arg("y"), py::arg("v"), py::arg("margin") = 0.05,
      "Maps times into (0, 1); returns ((t, y, v), scale).");

  py::class_<GramSystem>(m, "GramSystem")
      .def_readonly("knots", &GramSystem::knots)
      .def_readonly("lambda_", &GramSystem::lambda)
      .def_readonly("gamma", &GramSystem::gamma)
      .def_readonly("T", &GramSystem::T)
      .def_readonly("M", &GramSystem::M)
      .def_readonly("Q", &GramSystem::Q)
      .def_readonly("P", &GramSystem::P)
      .def_readonly("P_prime", &GramSystem::P_prime)
      .def_readonly("Q_prime", &GramSystem::Q_prime);

  m.def(
      "build_gram",
      [](const Vec& knots, double lambda, double gamma, const std::optional<KernelConfig>& k) {
        return build_gram(knots, kernel_or_uniform(k), lambda, gamma);
      },
      py::arg("knots"), py::arg("lam"), py::arg("gamma"), py::arg("kernel") = py::none());

  py::class_<VSplineFit>(m, "VSplineFit")
      .def_property_readonly("d", &VSplineFit::d)
      .def_property_readonly("c", &VSplineFit::c)
      .def_property_readonly("b", &VSplineFit::b)
      .def_property_readonly("knots", &VSplineFit::knots)
      .def_property_readonly("lambda_", &VSplineFit::lambda)
      .def_property_readonly("gamma", &VSplineFit::gamma)
      .def("__call__", [](const VSplineFit& f, Points t) { return map_points(t, [&](double u) { return evaluate(f, u); }); })
      .def("deriv", [](const VSplineFit& f, Points t) { return map_points(t, [&](double u) { return evaluate_deriv(f, u); }); });

  m.def(
      "fit_vspline",
      [](const Vec& t, const Vec& y, const Vec& v, double lambda, double gamma, const std::optional<KernelConfig>& k) {
        return fit_vspline(to_samples(t, y, v), kernel_or_uniform(k), lambda, gamma);
      },
      py::arg("t"), py::arg("y"), py::arg("v"), py::arg("lam"), py::arg("gamma"), py::arg("kernel") = py::none(),
      "Representer-form fit on unit-domain samples.");

  py::class_<CorrelationSpec>(m, "CorrelationSpec")
      .def(py::init([](Eigen::MatrixXd w, Eigen::MatrixXd u) { return CorrelationSpec{std::move(w), std::move(u)}; }),
           py::arg("W"), py::arg("Ucorr"))
      .def_static("identity", &CorrelationSpec::identity)
      .def_readonly("W", &CorrelationSpec::W)
      .def_readonly("Ucorr", &CorrelationSpec::Ucorr)
      .def("validate", &CorrelationSpec::validate);

  py::class_<HermiteBasis>(m, "HermiteBasis")
      .def(py::init<Vec>(), py::arg("knots"))
      .def_property_readonly("knots", &HermiteBasis::knots)
      .def("evaluate", &HermiteBasis::evaluate, py::arg("theta"), py::arg("t"))
      .def("evaluate_deriv", &HermiteBasis::evaluate_deriv, py::arg("theta"), py::arg("t"));

  py::class_<HatMatrices>(m, "HatMatrices")
      .def_readonly("S", &HatMatrices::S)
      .def_readonly("T", &HatMatrices::T)
      .def_readonly("U", &HatMatrices::U)
      .def_readonly("V", &HatMatrices::V);

  m.def(
      "fit_basis",
      [](const Vec& t, const Vec& y, const Vec& v, double lambda, double gamma, const std::optional<KernelConfig>& k,
         const std::optional<CorrelationSpec>& corr) {
        validate_samples(to_samples(t, y, v), 1);
        const auto design = build_design(t, interval_penalties(kernel_or_uniform(k), t, lambda));
        return corr ? fit_theta(design, y, v, gamma, *corr) : fit_theta(design, y, v, gamma);
      },
      py::arg("t"), py::arg("y"), py::arg("v"), py::arg("lam"), py::arg("gamma"), py::arg("kernel") = py::none(),
      py::arg("corr") = py::none(), "Hermite coefficients theta = [values at knots; slopes at knots].");

  m.def(
      "hat_matrices",
      [](const Vec& t, double lambda, double gamma, const std::optional<KernelConfig>& k,
         const std::optional<CorrelationSpec>& corr) {
        const auto design = build_design(t, interval_penalties(kernel_or_uniform(k), t, lambda));
        return corr ? hat_matrices(design, gamma, *corr) : hat_matrices(design, gamma);
      },
      py::arg("t"), py::arg("lam"), py::arg("gamma"), py::arg("kernel") = py::none(), py::arg("corr") = py::none());

  auto score = [&m](const char* name, CvScore (*fn)(std::span<const TimeSeriesSample>, double, double, const KernelConfig&)) {
    m.def(
        name,
        [fn](const Vec& t, const Vec& y, const Vec& v, double lambda, double gamma, const std::optional<KernelConfig>& k) {
          return fn(to_samples(t, y, v), lambda, gamma, kernel_or_uniform(k)).value;
        },
        py::arg("t"), py::arg("y"), py::arg("v"), py::arg("lam"), py::arg("gamma"), py::arg("kernel") = py::none());
  };
  score("cv_brute_force", &cv_brute_force);
  score("cv_closed_form", &cv_closed_form);
  score("gcv_score", &gcv_score);
  m.def(
      "gcv_correlated",
      [](const Vec& t, const Vec& y, const Vec& v, double lambda, double gamma, const CorrelationSpec& corr,
         const std::optional<KernelConfig>& k) {
        return gcv_correlated(to_samples(t, y, v), lambda, gamma, kernel_or_uniform(k), corr).value;
      },
      py::arg("t"), py::arg("y"), py::arg("v"), py::arg("lam"), py::arg("gamma"), py::arg("corr"),
      py::arg("kernel") = py::none());

  py::class_<SearchGrid>(m, "SearchGrid")
      .def(py::init<>())
      .def_readwrite("lambda_min", &SearchGrid::lambda_min)
      .def_readwrite("lambda_max", &SearchGrid::lambda_max)
      .def_readwrite("lambda_points", &SearchGrid::lambda_points)
      .def_readwrite("gamma_min", &SearchGrid::gamma_min)
      .def_readwrite("gamma_max", &SearchGrid::gamma_max)
      .def_readwrite("gamma_points", &SearchGrid::gamma_points)
      .def_readwrite("refine_sweeps", &SearchGrid::refine_sweeps);

  m.def(
      "optimize_params",
      [](const Vec& t, const Vec& y, const Vec& v, const std::string& criterion, const std::optional<KernelConfig>& k,
         const std::optional<CorrelationSpec>& corr, const std::optional<SearchGrid>& grid) {
        const auto sel = optimize_params(to_samples(t, y, v), kernel_or_uniform(k), parse_criterion(criterion),
                                         corr ? &*corr : nullptr, grid.value_or(SearchGrid{}));
        Eigen::MatrixXd surface(static_cast<Eigen::Index>(sel.surface.size()), 3);
        for (std::size_t i = 0; i < sel.surface.size(); ++i) {
          const auto& p = sel.surface[i];
          surface.row(static_cast<Eigen::Index>(i)) << p.lambda, p.gamma, p.score;
        }
        py::dict out;
        out["lambda"] = sel.best.lambda;
        out["gamma"] = sel.best.gamma;
        out["score"] = sel.best.value;
        out["criterion"] = criterion_name(sel.criterion);
        out["lambda_index"] = sel.lambda_index;
        out["gamma_index"] = sel.gamma_index;
        out["surface"] = surface;
        return out;
      },
      py::arg("t"), py::arg("y"), py::arg("v"), py::arg("criterion") = "auto", py::arg("kernel") = py::none(),
      py::arg("corr") = py::none(), py::arg("grid") = py::none(),
      "Grid search plus golden-section refinement; surface rows are (lambda, gamma, score).");

  py::class_<PosteriorSummary>(m, "PosteriorSummary")
      .def_property_readonly("d", &PosteriorSummary::d)
      .def_property_readonly("c", &PosteriorSummary::c)
      .def_property_readonly("b", &PosteriorSummary::b)
      .def_property_readonly("has_variance", &PosteriorSummary::has_variance)
      .def("mean", [](const PosteriorSummary& p, Points t) { return map_points(t, [&](double u) { return p.mean(u); }); })
      .def("mean_deriv", [](const PosteriorSummary& p, Points t) { return map_points(t, [&](double u) { return p.mean_deriv(u); }); })
      .def("variance", [](const PosteriorSummary& p, Points t) { return map_points(t, [&](double u) { return p.variance(u); }); });

  m.def(
      "posterior_mean_finite_rho",
      [](const Vec& t, const Vec& y, const Vec& v, double beta, double rho, double lambda, double gamma,
         const std::optional<KernelConfig>& k) {
        return posterior_mean_finite_rho(to_samples(t, y, v), GpPrior{beta, rho, kernel_or_uniform(k)}, lambda, gamma);
      },
      py::arg("t"), py::arg("y"), py::arg("v"), py::arg("beta"), py::arg("rho"), py::arg("lam"), py::arg("gamma"),
      py::arg("kernel") = py::none());
  m.def(
      "posterior_mean_diffuse",
      [](const Vec& t, const Vec& y, const Vec& v, double beta, double lambda, double gamma,
         const std::optional<KernelConfig>& k) {
        return posterior_mean_diffuse(to_samples(t, y, v), beta, lambda, gamma, kernel_or_uniform(k));
      },
      py::arg("t"), py::arg("y"), py::arg("v"), py::arg("beta"), py::arg("lam"), py::arg("gamma"),
      py::arg("kernel") = py::none());

  m.def(
      "simulate",
      [](const std::string& kind, int n, double noise, std::optional<double> velocity_noise, std::uint64_t seed,
         double t_start, double t_end) {
        cli::SimulateOptions o;
        if (kind == "iwp") o.kind = cli::SimKind::iwp;
        else if (kind == "line") o.kind = cli::SimKind::line;
        else if (kind == "sine") o.kind = cli::SimKind::sine;
        else throw InvalidInputError("unknown simulation kind '" + kind + "'");
        o.n = n;
        o.noise = noise;
        o.velocity_noise = velocity_noise;
        o.seed = seed;
        o.t_start = t_start;
        o.t_end = t_end;
        return from_samples(cli::simulate(o));
      },
      py::arg("kind") = "sine", py::arg("n") = 50, py::arg("noise") = 0.1, py::arg("velocity_noise") = py::none(),
      py::arg("seed") = 1, py::arg("t_start") = 0.0, py::arg("t_end") = 1.0, "Synthetic (t, y, v) arrays.");

  m.def(
      "fit_report",
      [](const Vec& t, const Vec& y, const Vec& v, double lambda, double gamma) {
        cli::FitOptions o;
        o.lambda = lambda;
        o.gamma = gamma;
        return cli::fit_report(to_samples(t, y, v), o).dump();
      },
      py::arg("t"), py::arg("y"), py::arg("v"), py::arg("lam"), py::arg("gamma"),
      "JSON report of a fit on raw-domain data, as produced by the command-line tool.");
}
