#include "topkboot/randgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "topkboot/errors.hpp"

namespace topkboot {

namespace {

void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw domain_error("gamma must lie in (0, 1)");
  }
}

double draw_standardized(Family family, const GeneratorSpec& spec,
                         RngStream& stream) {
  switch (family) {
    case Family::gaussian:
      return stream.next_normal();
    case Family::rademacher:
      return stream.next_rademacher();
    case Family::uniform:
      // U[-sqrt(3), sqrt(3)] has unit variance.
      return (2.0 * stream.next_unit() - 1.0) * 1.7320508075688772;
    case Family::centered_exponential:
      return -std::log(stream.next_unit()) - 1.0;
    case Family::student_t: {
      const int df = static_cast<int>(spec.student_df);
      double chi2 = 0.0;
      for (int i = 0; i < df; ++i) {
        const double z = stream.next_normal();
        chi2 += z * z;
      }
      const double t = stream.next_normal() / std::sqrt(chi2 / df);
      return t * std::sqrt((df - 2.0) / df);
    }
    case Family::bounded_scaled: {
      // Three-point law {+B, 0, -B} with P(|x| = B) = 1/B^2, so the
      // variance is one and the envelope is exactly B.
      const double b = spec.envelope_bn();
      const double q = 1.0 / (2.0 * b * b);
      const double u = stream.next_unit();
      if (u < q) return b;
      if (u < 2.0 * q) return -b;
      return 0.0;
    }
  }
  throw domain_error("unknown family");
}

}  // namespace

SampleMatrix SampleMatrix::from_matrix(Eigen::MatrixXd data) {
  if (data.rows() < 1 || data.cols() < 3) {
    throw domain_error("sample matrix needs n >= 1 and p >= 3");
  }
  if (!data.allFinite()) {
    throw domain_error("sample matrix entries must be finite");
  }
  return SampleMatrix(std::move(data));
}

void SampleMatrix::to_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw domain_error("cannot open for writing: " + path);
  for (int j = 0; j < p(); ++j) {
    out << (j ? "," : "") << j;
  }
  out << "\n";
  out.precision(17);
  for (int i = 0; i < n(); ++i) {
    for (int j = 0; j < p(); ++j) {
      out << (j ? "," : "") << data_(i, j);
    }
    out << "\n";
  }
}

SampleMatrix SampleMatrix::from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw domain_error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line)) throw domain_error("empty CSV: " + path);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw domain_error("ragged CSV row in " + path);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw domain_error("CSV has no data rows: " + path);
  Eigen::MatrixXd data(static_cast<int>(rows.size()),
                       static_cast<int>(rows.front().size()));
  for (int i = 0; i < data.rows(); ++i) {
    for (int j = 0; j < data.cols(); ++j) {
      data(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return from_matrix(std::move(data));
}

Family family_from_string(const std::string& name) {
  if (name == "gaussian") return Family::gaussian;
  if (name == "rademacher") return Family::rademacher;
  if (name == "uniform") return Family::uniform;
  if (name == "centered_exponential") return Family::centered_exponential;
  if (name == "student_t") return Family::student_t;
  if (name == "bounded_scaled") return Family::bounded_scaled;
  throw domain_error("unknown family: " + name);
}

std::string family_to_string(Family f) {
  switch (f) {
    case Family::gaussian: return "gaussian";
    case Family::rademacher: return "rademacher";
    case Family::uniform: return "uniform";
    case Family::centered_exponential: return "centered_exponential";
    case Family::student_t: return "student_t";
    case Family::bounded_scaled: return "bounded_scaled";
  }
  return "unknown";
}

double GeneratorSpec::envelope_bn() const {
  const int p = covariance.dim();
  switch (family) {
    case Family::gaussian: return 1.0;
    case Family::rademacher: return 1.0;
    case Family::uniform: return 1.7320508075688772;
    case Family::centered_exponential: return 1.0;
    case Family::student_t: {
      // E2 bookkeeping: B_n with E[(max_j |x_ij|/B_n)^4] <= 4 via the
      // union bound and the standardized kurtosis 3 + 6/(df-4).
      const double m4 = 3.0 + 6.0 / (student_df - 4.0);
      return std::max(1.0, std::pow(p * m4 / 4.0, 0.25));
    }
    case Family::bounded_scaled: {
      if (bound > 0.0) return std::max(1.0, bound);
      const double lp = std::log(static_cast<double>(std::max(p, 3)));
      return std::max(1.0, lp * lp);
    }
  }
  return 1.0;
}

MomentRegime GeneratorSpec::regime() const {
  return family == Family::student_t ? MomentRegime::e2 : MomentRegime::e1;
}

double GeneratorSpec::varsigma() const {
  switch (family) {
    case Family::centered_exponential: return 1.0;
    default: return 2.0;
  }
}

SampleMatrix sample_data(const GeneratorSpec& spec, int n) {
  return sample_data_rep(spec, n, 0);
}

SampleMatrix sample_data_rep(const GeneratorSpec& spec, int n,
                             std::uint64_t rep) {
  if (n < 1) throw domain_error("sample size must be >= 1");
  if (spec.family == Family::student_t) {
    if (spec.student_df <= 4.0 ||
        spec.student_df != std::floor(spec.student_df)) {
      throw domain_error("student_t requires an integer df > 4");
    }
  }
  const int p = spec.covariance.dim();
  if (p < 3) throw domain_error("generator covariance needs p >= 3");
  const bool mix = !spec.covariance.is_identity();
  const Eigen::MatrixXd& fac = spec.covariance.factor();
  Eigen::MatrixXd data(n, p);
  Eigen::VectorXd xi(p);
  for (int i = 0; i < n; ++i) {
    RngStream stream(spec.seed, StreamTag::data, rep, static_cast<std::uint64_t>(i));
    for (int j = 0; j < p; ++j) {
      xi[j] = draw_standardized(spec.family, spec, stream);
    }
    if (mix) {
      data.row(i) = (fac * xi).transpose();
    } else {
      data.row(i) = xi.transpose();
    }
  }
  return SampleMatrix::from_matrix(std::move(data));
}

Eigen::VectorXd rescaled_sum(const SampleMatrix& m) {
  return m.data().colwise().sum().transpose() /
         std::sqrt(static_cast<double>(m.n()));
}

Eigen::MatrixXd empirical_second_moment(const SampleMatrix& m) {
  return m.data().transpose() * m.data() / static_cast<double>(m.n());
}

std::vector<Eigen::VectorXd> gaussian_analog(const SampleMatrix& m, int reps,
                                             std::uint64_t seed) {
  if (reps < 1) throw domain_error("gaussian analog needs reps >= 1");
  const Eigen::MatrixXd fac = psd_factor(empirical_second_moment(m));
  const int p = m.p();
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(reps));
  Eigen::VectorXd g(p);
  for (int r = 0; r < reps; ++r) {
    RngStream stream(seed, StreamTag::gaussian, static_cast<std::uint64_t>(r));
    for (int j = 0; j < p; ++j) g[j] = stream.next_normal();
    out.emplace_back(fac * g);
  }
  return out;
}

Eigen::MatrixXd truncated_matrix(const SampleMatrix& m, double u) {
  if (!(u > 0.0)) throw domain_error("truncation threshold must be positive");
  const Eigen::MatrixXd& x = m.data();
  Eigen::MatrixXd t(x.rows(), x.cols());
  for (int j = 0; j < x.cols(); ++j) {
    const double rms = std::sqrt(x.col(j).squaredNorm() / x.rows());
    const double cut = u * rms;
    double mean = 0.0;
    for (int i = 0; i < x.rows(); ++i) {
      t(i, j) = std::fabs(x(i, j)) <= cut ? x(i, j) : 0.0;
      mean += t(i, j);
    }
    mean /= x.rows();
    t.col(j).array() -= mean;
  }
  return t;
}

MomentSummary moment_summary(const SampleMatrix& m,
                             const std::vector<double>& u_grid,
                             const std::vector<double>& gamma_grid,
                             const std::optional<Eigen::MatrixXd>& reference_cov,
                             const MomentSummaryOptions& opts) {
  if (u_grid.empty() || gamma_grid.empty()) {
    throw domain_error("moment summary needs nonempty u and gamma grids");
  }
  for (double u : u_grid) {
    if (!(u > 0.0)) throw domain_error("u grid entries must be positive");
  }
  for (double g : gamma_grid) check_gamma(g);

  const Eigen::MatrixXd& x = m.data();
  const int n = m.n();
  const int p = m.p();
  MomentSummary out;

  Eigen::VectorXd rms2(p);
  for (int j = 0; j < p; ++j) {
    rms2[j] = x.col(j).squaredNorm() / n;
    if (rms2[j] == 0.0) out.degenerate = true;
  }
  if (out.degenerate) {
    out.note = "some column has zero empirical second moment; truncation and "
               "covariance-gap summaries are skipped";
  }

  for (int mom = 2; mom <= 4; ++mom) {
    double best = 0.0;
    for (int j = 0; j < p; ++j) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += std::pow(std::fabs(x(i, j)), mom);
      }
      best = std::max(best, std::pow(acc / n, 1.0 / mom));
    }
    if (mom == 2) out.M2 = best;
    if (mom == 3) out.M3 = best;
    if (mom == 4) out.M4 = best;
  }

  if (!out.degenerate) {
    for (double u : u_grid) {
      double worst = 0.0;
      for (int j = 0; j < p; ++j) {
        const double cut = u * std::sqrt(rms2[j]);
        double tail = 0.0;
        for (int i = 0; i < n; ++i) {
          if (std::fabs(x(i, j)) > cut) tail += x(i, j) * x(i, j);
        }
        worst = std::max(worst, std::sqrt(tail / n / rms2[j]));
      }
      out.phi_of_u[u] = worst;
    }

    // Envelope quantile by row resampling; normalization fixed to the
    // original sample's per-column rms.
    const int reps = std::max(1, opts.resample_replicates);
    std::vector<double> maxima(static_cast<std::size_t>(reps));
    for (int r = 0; r < reps; ++r) {
      RngStream stream(opts.seed, StreamTag::resample,
                       static_cast<std::uint64_t>(r));
      double worst = 0.0;
      for (int i = 0; i < n; ++i) {
        const int row = static_cast<int>(stream.next_u64() % n);
        for (int j = 0; j < p; ++j) {
          worst = std::max(worst, std::fabs(x(row, j)) / std::sqrt(rms2[j]));
        }
      }
      maxima[static_cast<std::size_t>(r)] = worst;
    }
    std::sort(maxima.begin(), maxima.end());
    for (double g : gamma_grid) {
      const int idx = static_cast<int>(
          std::ceil((1.0 - g) * reps));
      const int clamped = std::clamp(idx, 1, reps);
      out.u_of_gamma[g] = maxima[static_cast<std::size_t>(clamped - 1)];
    }

    if (reference_cov.has_value()) {
      if (reference_cov->rows() != p || reference_cov->cols() != p) {
        throw domain_error("reference covariance dimension mismatch");
      }
      const Eigen::MatrixXd emp = empirical_second_moment(m);
      out.delta = (emp - *reference_cov).cwiseAbs().maxCoeff();
      out.has_delta = true;
    }
  }
  return out;
}

OrliczModulus OrliczModulus::power(double q, double B, double D) {
  if (!(q >= 1.0)) throw domain_error("power modulus needs q >= 1");
  if (!(B > 0.0 && D > 0.0)) throw domain_error("modulus scales must be positive");
  return {Kind::power, q, B, D};
}

OrliczModulus OrliczModulus::exponential(double B, double D) {
  if (!(B > 0.0 && D > 0.0)) throw domain_error("modulus scales must be positive");
  return {Kind::exponential, 0.0, B, D};
}

double OrliczModulus::h_inverse(double t) const {
  switch (kind) {
    case Kind::power: return std::pow(t, 1.0 / q);
    case Kind::exponential: return std::log1p(t);
  }
  throw domain_error("invalid modulus kind");
}

double u_bound_shape(const OrliczModulus& mod, int n, int p, double gamma) {
  check_gamma(gamma);
  if (n < 1 || p < 1) throw domain_error("u bound shape needs n, p >= 1");
  const double envelope = mod.D * mod.h_inverse(n / gamma);
  const double gaussian_part =
      mod.B * std::sqrt(std::log(static_cast<double>(p) * n / gamma));
  return std::max(envelope, gaussian_part);
}

SubWeibullProbe subweibull_probe(const std::vector<double>& samples,
                                 double varsigma, int q_max) {
  if (q_max < 2) throw domain_error("subweibull probe needs q_max >= 2");
  if (!(varsigma >= 1.0 && varsigma <= 2.0)) {
    throw domain_error("varsigma must lie in [1, 2]");
  }
  const double needed = 100.0 * std::pow(2.0, q_max);
  if (static_cast<double>(samples.size()) < needed) {
    throw capability_error(
        "subweibull probe needs at least 100 * 2^q_max samples (" +
        std::to_string(static_cast<long long>(needed)) + "), got " +
        std::to_string(samples.size()));
  }
  SubWeibullProbe probe;
  probe.varsigma = varsigma;
  probe.per_q.reserve(static_cast<std::size_t>(q_max));
  for (int q = 1; q <= q_max; ++q) {
    double acc = 0.0;
    for (double v : samples) acc += std::pow(std::fabs(v), q);
    acc /= static_cast<double>(samples.size());
    const double norm = std::pow(acc, 1.0 / q);
    probe.per_q.push_back(norm / std::pow(static_cast<double>(q), 1.0 / varsigma));
  }
  probe.K2_hat = *std::max_element(probe.per_q.begin(), probe.per_q.end());
  return probe;
}

}  // namespace topkboot
