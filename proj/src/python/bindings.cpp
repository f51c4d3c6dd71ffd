#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "topkboot/anticoncentration.hpp"
#include "topkboot/bootstrap.hpp"
#include "topkboot/core_stats.hpp"
#include "topkboot/errors.hpp"
#include "topkboot/experiments.hpp"
#include "topkboot/harness.hpp"
#include "topkboot/randgen.hpp"
#include "topkboot/smooth_topk.hpp"
#include "topkboot/version.hpp"

namespace py = pybind11;
using namespace topkboot;

namespace {

CovarianceModel make_covariance(const std::string& kind, int p, double rho,
                                const std::optional<Eigen::MatrixXd>& matrix) {
  if (kind == "identity") return CovarianceModel::identity(p);
  if (kind == "equicorrelated") return CovarianceModel::equicorrelated(p, rho);
  if (kind == "ar1") return CovarianceModel::ar1(p, rho);
  if (kind == "explicit") {
    if (!matrix) throw domain_error("explicit covariance needs a matrix");
    return CovarianceModel::from_matrix(*matrix);
  }
  throw domain_error("unknown covariance kind: " + kind);
}

GeneratorSpec make_generator(const std::string& family,
                             const CovarianceModel& cov, std::uint64_t seed,
                             double student_df, double bound) {
  GeneratorSpec gen;
  gen.family = family_from_string(family);
  gen.covariance = cov;
  gen.seed = seed;
  gen.student_df = student_df;
  gen.bound = bound;
  return gen;
}

KappaSpec make_kappa(int kappa) { return KappaSpec::fixed(kappa); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Smooth top-k statistics, Gaussian-analog simulation and the "
            "multiplier bootstrap";
  m.attr("__version__") = kVersion;

  py::register_exception<domain_error>(m, "DomainError", PyExc_ValueError);
  py::register_exception<numeric_error>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<capability_error>(m, "CapabilityError",
                                           PyExc_RuntimeError);

  // Order statistics and empirical distances.
  m.def("kth_largest",
        [](const std::vector<double>& x, int k) { return kth_largest(x, k); },
        py::arg("x"), py::arg("k"),
        "k-th largest coordinate of x (1-indexed)");
  m.def("top_k_sum",
        [](const std::vector<double>& x, int k) { return top_k_sum(x, k); },
        py::arg("x"), py::arg("k"), "Sum of the k largest coordinates");
  m.def("square_sum_top_d",
        [](const std::vector<double>& x, int d) {
          return square_sum_top_d(x, d);
        },
        py::arg("x"), py::arg("d"), "Sum of the d largest squared coordinates");
  m.def("ks_distance",
        [](std::vector<double> a, std::vector<double> b) {
          return ks_distance(std::move(a), std::move(b));
        },
        py::arg("a"), py::arg("b"),
        "Two-sample Kolmogorov distance between empirical CDFs");

  // Smoothing machinery.
  m.def("capacity",
        [](int p, int kappa) {
          const auto cap = capacity(p, kappa);
          return py::make_tuple(cap.value, cap.bound_two_kappa_ln_p,
                                cap.bound_p_ln2);
        },
        py::arg("p"), py::arg("kappa"),
        "Entropy budget R_{p,k} and its two closed-form ceilings");
  m.def("solve_alpha",
        [](const std::vector<double>& x, int s, double beta) {
          return solve_alpha(x, s, beta);
        },
        py::arg("x"), py::arg("s"), py::arg("beta"),
        "Multiplier solving sum of sigmoid weights = s");

  py::class_<SmoothTopK>(m, "SmoothTopK")
      .def_readonly("beta", &SmoothTopK::beta)
      .def_readonly("s", &SmoothTopK::s)
      .def_readonly("alpha", &SmoothTopK::alpha)
      .def_readonly("weights", &SmoothTopK::weights)
      .def_readonly("value", &SmoothTopK::value)
      .def_readonly("residual", &SmoothTopK::residual);
  m.def("smooth_top_k_sum",
        [](const std::vector<double>& x, int s, double beta) {
          return smooth_top_k_sum(x, s, beta);
        },
        py::arg("x"), py::arg("s"), py::arg("beta"),
        "Entropically smoothed top-s sum with solved weights");
  m.def("smooth_kth",
        [](const std::vector<double>& x, int kappa, double beta) {
          return smooth_kth(x, kappa, beta);
        },
        py::arg("x"), py::arg("kappa"), py::arg("beta"),
        "Smooth surrogate of the k-th largest coordinate");
  m.def("grad_smooth_top_k_sum",
        [](const std::vector<double>& x, int s, double beta) {
          return grad_smooth_top_k_sum(x, s, beta);
        },
        py::arg("x"), py::arg("s"), py::arg("beta"));
  m.def("grad_smooth_kth",
        [](const std::vector<double>& x, int kappa, double beta) {
          return grad_smooth_kth(x, kappa, beta);
        },
        py::arg("x"), py::arg("kappa"), py::arg("beta"));
  m.def("weight_jacobian",
        [](const std::vector<double>& x, int s, double beta) {
          return weight_jacobian(x, s, beta);
        },
        py::arg("x"), py::arg("s"), py::arg("beta"));

  // Data generation.
  m.def("sample_data",
        [](const std::string& family, const std::string& cov_kind, int p,
           double rho, int n, std::uint64_t seed, double student_df,
           double bound) {
          const auto cov = make_covariance(cov_kind, p, rho, std::nullopt);
          const auto gen = make_generator(family, cov, seed, student_df, bound);
          return sample_data(gen, n).data();
        },
        py::arg("family"), py::arg("cov_kind"), py::arg("p"), py::arg("rho"),
        py::arg("n"), py::arg("seed"), py::arg("student_df") = 8.0,
        py::arg("bound") = 0.0,
        "n x p sample with standardized entries mixed through the covariance "
        "factor; deterministic in the seed");
  m.def("rescaled_sum",
        [](const Eigen::MatrixXd& data) {
          return rescaled_sum(SampleMatrix::from_matrix(data));
        },
        py::arg("data"), "Column sums scaled by n^{-1/2}");
  m.def("gaussian_analog",
        [](const Eigen::MatrixXd& data, int reps, std::uint64_t seed) {
          const auto draws =
              gaussian_analog(SampleMatrix::from_matrix(data), reps, seed);
          Eigen::MatrixXd out(reps, data.cols());
          for (int r = 0; r < reps; ++r) out.row(r) = draws[r].transpose();
          return out;
        },
        py::arg("data"), py::arg("reps"), py::arg("seed"),
        "Draws of N(0, Sigma_hat) with the plug-in second-moment matrix");

  // Multiplier bootstrap.
  m.def("multiplier_replicates",
        [](const Eigen::MatrixXd& data, int kappa, int B, std::uint64_t seed) {
          return multiplier_replicates(SampleMatrix::from_matrix(data),
                                       make_kappa(kappa), B, seed)
              .values;
        },
        py::arg("data"), py::arg("kappa"), py::arg("B"), py::arg("seed"),
        "Multiplier-bootstrap replicates of the k-th largest coordinate");
  m.def("conditional_quantile",
        [](std::vector<double> values, double alpha) {
          BootstrapRun run;
          run.replicate_count = static_cast<int>(values.size());
          run.values = std::move(values);
          return conditional_quantile(run, alpha).value;
        },
        py::arg("values"), py::arg("alpha"),
        "ceil(alpha B)-th order statistic (the inf-definition quantile)");
  m.def("gaussian_quantile",
        [](const std::string& cov_kind, int p, double rho, int kappa,
           double alpha, int reps, std::uint64_t seed) {
          const auto cov = make_covariance(cov_kind, p, rho, std::nullopt);
          return gaussian_quantile(cov, make_kappa(kappa), alpha, reps, seed)
              .value;
        },
        py::arg("cov_kind"), py::arg("p"), py::arg("rho"), py::arg("kappa"),
        py::arg("alpha"), py::arg("reps"), py::arg("seed"));
  m.def("quantile_gap_tolerance",
        [](double vartheta, int p, int kappa, double C2) {
          return quantile_gap_tolerance(vartheta, p, make_kappa(kappa), C2)
              .nu_value;
        },
        py::arg("vartheta"), py::arg("p"), py::arg("kappa"),
        py::arg("C2") = 1.0);

  // Harness.
  m.def("run_config_json", &run_config_json, py::arg("config_json"),
        "Execute an experiment config (JSON string); returns the summary "
        "JSON and writes artifacts to its out_dir",
        py::call_guard<py::gil_scoped_release>());
  m.def("list_experiments", []() {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& entry : list_experiments()) {
      out.emplace_back(entry.kind, entry.claim);
    }
    return out;
  });
}
