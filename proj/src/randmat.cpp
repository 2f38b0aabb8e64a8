#include "rectspike/randmat.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>
#include <type_traits>

#include "rectspike/error.hpp"

namespace rectspike {
namespace {

constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

template <typename Scalar>
constexpr bool is_complex_v = !std::is_same_v<Scalar, double>;

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

template <typename Scalar>
Scalar standard_entry(Rng& rng, std::normal_distribution<double>& normal, EntryLaw law) {
  if (law == EntryLaw::gaussian) {
    if constexpr (is_complex_v<Scalar>) {
      const double re = normal(rng);
      const double im = normal(rng);
      return Scalar(re, im) * kInvSqrt2;
    } else {
      return normal(rng);
    }
  }
  const auto sign = [&rng] { return (rng() >> 63) != 0 ? 1.0 : -1.0; };
  if constexpr (is_complex_v<Scalar>) {
    const double re = sign();
    const double im = sign();
    return Scalar(re, im) * kInvSqrt2;
  } else {
    return sign();
  }
}

template <typename Scalar>
Matrix<Scalar> standard_block(std::size_t rows, std::size_t cols, Rng& rng, EntryLaw law) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix<Scalar> g(rows, cols);
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = standard_entry<Scalar>(rng, normal, law);
  return g;
}

template <typename Scalar>
Scalar unit_phase(const Scalar& x) {
  const double mag = std::abs(x);
  return mag > 0.0 ? x / mag : Scalar(1.0);
}

// Orthonormal basis of the column span of g with the triangular factor's
// diagonal made positive (equivalent to Gram-Schmidt). Empty on numerical
// rank deficiency.
template <typename Scalar>
std::optional<Matrix<Scalar>> orthonormal_columns(const Matrix<Scalar>& g) {
  Eigen::HouseholderQR<Matrix<Scalar>> qr(g);
  Matrix<Scalar> q = qr.householderQ() * Matrix<Scalar>::Identity(g.rows(), g.cols());
  const auto diag = qr.matrixQR().diagonal();
  double largest = 0.0;
  double smallest = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < diag.size(); ++j) {
    largest = std::max(largest, std::abs(diag(j)));
    smallest = std::min(smallest, std::abs(diag(j)));
  }
  if (!(smallest > 1e-10 * largest)) return std::nullopt;
  for (Eigen::Index j = 0; j < q.cols(); ++j) q.col(j) *= unit_phase<Scalar>(diag(j));
  return q;
}

template <typename Scalar>
Matrix<Scalar> from_factory(const FromFactory& f, std::size_t n, std::size_t m, Rng& rng) {
  Matrix<Scalar> x;
  if constexpr (is_complex_v<Scalar>) {
    if (!f.complex) throw DimensionError("noise factory provides no complex generator");
    x = f.complex(n, m, rng);
  } else {
    if (!f.real) throw DimensionError("noise factory provides no real generator");
    x = f.real(n, m, rng);
  }
  if (x.rows() != static_cast<Eigen::Index>(n) || x.cols() != static_cast<Eigen::Index>(m)) {
    std::ostringstream os;
    os << "noise factory returned " << x.rows() << "x" << x.cols() << ", expected " << n << "x" << m;
    throw DimensionError(os.str());
  }
  return x;
}

void put_u32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> bytes{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                  static_cast<char>((v >> 16) & 0xff),
                                  static_cast<char>((v >> 24) & 0xff)};
  os.write(bytes.data(), bytes.size());
}

void put_f64(std::ostream& os, double x) {
  const auto bits = std::bit_cast<std::uint64_t>(x);
  std::array<char, 8> bytes{};
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  os.write(bytes.data(), bytes.size());
}

std::uint32_t get_u32(std::istream& is) {
  std::array<unsigned char, 4> b{};
  is.read(reinterpret_cast<char*>(b.data()), b.size());
  if (!is) throw ConfigError("matrix dump: truncated header");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

double get_f64(std::istream& is) {
  std::array<unsigned char, 8> b{};
  is.read(reinterpret_cast<char*>(b.data()), b.size());
  if (!is) throw ConfigError("matrix dump: truncated data");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

Rng make_trial_rng(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t s = seed;
  const std::uint64_t h1 = splitmix64(s);
  std::uint64_t t = index ^ h1;
  const std::uint64_t h2 = splitmix64(t);
  std::seed_seq seq{static_cast<std::uint32_t>(h1), static_cast<std::uint32_t>(h1 >> 32),
                    static_cast<std::uint32_t>(h2), static_cast<std::uint32_t>(h2 >> 32)};
  return Rng(seq);
}

template <typename Scalar>
Matrix<Scalar> sample_noise(const NoiseModel& model, std::size_t n, std::size_t m, Rng& rng) {
  if (n == 0 || m == 0 || n > m) {
    std::ostringstream os;
    os << "noise dimensions " << n << "x" << m << " must satisfy 0 < n <= m";
    throw DimensionError(os.str());
  }
  if (std::holds_alternative<GaussianRect>(model)) {
    Matrix<Scalar> x = standard_block<Scalar>(n, m, rng, EntryLaw::gaussian);
    return x / std::sqrt(static_cast<double>(m));
  }
  if (std::holds_alternative<HaarSquare>(model)) {
    if (n != m) throw DimensionError("Haar noise needs a square matrix");
    const Matrix<Scalar> g = standard_block<Scalar>(n, n, rng, EntryLaw::gaussian);
    Eigen::HouseholderQR<Matrix<Scalar>> qr(g);
    Matrix<Scalar> q = qr.householderQ();
    const auto diag = qr.matrixQR().diagonal();
    for (Eigen::Index j = 0; j < q.cols(); ++j) q.col(j) *= unit_phase<Scalar>(diag(j));
    return q;
  }
  return from_factory<Scalar>(std::get<FromFactory>(model), n, m, rng);
}

template <typename Scalar>
Perturbation<Scalar> sample_perturbation(const SpikeSpec& spec, std::size_t n, std::size_t m,
                                         Rng& rng, EntryLaw law) {
  spec.validate();
  const std::size_t r = spec.rank();
  if (r > std::min(n, m)) throw DimensionError("perturbation rank exceeds min(n, m)");
  Perturbation<Scalar> p;
  p.thetas = spec.thetas;
  if (spec.model == PerturbationModel::iid) {
    p.U = standard_block<Scalar>(n, r, rng, law) / std::sqrt(static_cast<double>(n));
    p.V = standard_block<Scalar>(m, r, rng, law) / std::sqrt(static_cast<double>(m));
  } else {
    for (int attempt = 0;; ++attempt) {
      const Matrix<Scalar> gu = standard_block<Scalar>(n, r, rng, law);
      const Matrix<Scalar> gv = standard_block<Scalar>(m, r, rng, law);
      auto qu = orthonormal_columns(gu);
      auto qv = orthonormal_columns(gv);
      if (qu && qv) {
        p.U = std::move(*qu);
        p.V = std::move(*qv);
        break;
      }
      if (attempt >= 1) throw RankDeficient("perturbation directions are numerically dependent");
    }
  }
  Matrix<Scalar> scaled = p.U;
  for (std::size_t i = 0; i < r; ++i) scaled.col(i) *= Scalar(spec.thetas[i]);
  p.P = scaled * p.V.adjoint();
  return p;
}

template <typename Scalar>
SvdResult<Scalar> svd_dense(const Matrix<Scalar>& a, bool with_vectors) {
  if (a.rows() > a.cols() || a.rows() == 0) throw DimensionError("svd_dense needs 0 < n <= m");
  const unsigned opts = with_vectors ? (Eigen::ComputeThinU | Eigen::ComputeThinV) : 0u;
  Eigen::BDCSVD<Matrix<Scalar>> svd(a, opts);
  if (svd.info() != Eigen::Success || !svd.singularValues().allFinite()) {
    throw ConvergenceFailure("dense SVD failed to converge");
  }
  SvdResult<Scalar> out;
  out.values = svd.singularValues();
  if (with_vectors) {
    out.left = svd.matrixU();
    out.right = svd.matrixV();
  }
  return out;
}

template <typename Scalar>
Eigen::VectorXd singular_values(const Matrix<Scalar>& a) {
  return svd_dense(a, false).values;
}

template <typename Scalar>
ProjectionNorms projection_norms(const Vector<Scalar>& u_tilde, const Vector<Scalar>& v_tilde,
                                 const Perturbation<Scalar>& pert, double theta) {
  std::vector<Eigen::Index> group;
  for (std::size_t i = 0; i < pert.thetas.size(); ++i)
    if (pert.thetas[i] == theta) group.push_back(static_cast<Eigen::Index>(i));
  if (group.empty()) {
    std::ostringstream os;
    os << "theta = " << theta << " does not occur in the perturbation";
    throw UnknownTheta(os.str());
  }
  const auto project = [&group](const Matrix<Scalar>& cols, const Vector<Scalar>& x) {
    Matrix<Scalar> span(cols.rows(), static_cast<Eigen::Index>(group.size()));
    for (std::size_t k = 0; k < group.size(); ++k) span.col(k) = cols.col(group[k]);
    Eigen::HouseholderQR<Matrix<Scalar>> qr(span);
    const Matrix<Scalar> q = qr.householderQ() * Matrix<Scalar>::Identity(span.rows(), span.cols());
    return (q.adjoint() * x).squaredNorm();
  };
  return {project(pert.U, u_tilde), project(pert.V, v_tilde)};
}

Eigen::VectorXd MasterMatrix::singular_values() const {
  return Eigen::JacobiSVD<Eigen::MatrixXcd>(entries).singularValues();
}

double MasterMatrix::relative_residual() const {
  const Eigen::VectorXd s = singular_values();
  return s(s.size() - 1) / s(0);
}

template <typename Scalar>
MasterMatrixEvaluator<Scalar>::MasterMatrixEvaluator(const Matrix<Scalar>& x,
                                                     const Perturbation<Scalar>& pert)
    : x_(x),
      gram_(x * x.adjoint()),
      u_(pert.U),
      v_(pert.V),
      xv_(x * pert.V),
      thetas_(pert.thetas),
      sv_(singular_values(x)) {}

template <typename Scalar>
void MasterMatrixEvaluator<Scalar>::check_shift(double z) const {
  if (!(z > 0.0)) throw DomainError("master matrix needs z > 0");
  const double gap = (sv_.array() - z).abs().minCoeff();
  if (gap <= 1e-8) {
    std::ostringstream os;
    os << "z = " << z << " is within " << gap << " of a singular value of X";
    throw NearSingularShift(os.str());
  }
}

template <typename Scalar>
MasterMatrix MasterMatrixEvaluator<Scalar>::evaluate(double z) const {
  check_shift(z);
  const Eigen::Index n = x_.rows();
  const Eigen::Index r = static_cast<Eigen::Index>(thetas_.size());
  const Matrix<Scalar> shifted = Scalar(z * z) * Matrix<Scalar>::Identity(n, n) - gram_;
  const Eigen::PartialPivLU<Matrix<Scalar>> lu(shifted);
  const Matrix<Scalar> ru = lu.solve(u_);
  const Matrix<Scalar> rxv = lu.solve(xv_);

  // z (z^2 - X^*X)^-1 = (I + X^*(z^2 - XX^*)^-1 X) / z keeps every solve n x n.
  const Matrix<Scalar> a11 = Scalar(z) * (u_.adjoint() * ru);
  const Matrix<Scalar> a12 = u_.adjoint() * rxv;
  const Matrix<Scalar> a21 = xv_.adjoint() * ru;
  const Matrix<Scalar> a22 = (v_.adjoint() * v_ + xv_.adjoint() * rxv) / Scalar(z);

  Eigen::MatrixXcd m(2 * r, 2 * r);
  m.topLeftCorner(r, r) = a11.template cast<Complex>();
  m.topRightCorner(r, r) = a12.template cast<Complex>();
  m.bottomLeftCorner(r, r) = a21.template cast<Complex>();
  m.bottomRightCorner(r, r) = a22.template cast<Complex>();
  for (Eigen::Index i = 0; i < r; ++i) {
    m(i, r + i) -= 1.0 / thetas_[i];
    m(r + i, i) -= 1.0 / thetas_[i];
  }
  return {m};
}

template <typename Scalar>
KernelIdentity MasterMatrixEvaluator<Scalar>::kernel_identity(double z, const Vector<Scalar>& u_tilde,
                                                              const Vector<Scalar>& v_tilde) const {
  check_shift(z);
  const Eigen::Index n = x_.rows();
  const Eigen::Index r = static_cast<Eigen::Index>(thetas_.size());
  Vector<Scalar> x = v_.adjoint() * v_tilde;  // Theta V^* v
  Vector<Scalar> y = u_.adjoint() * u_tilde;  // Theta U^* u
  for (Eigen::Index i = 0; i < r; ++i) {
    x(i) *= Scalar(thetas_[i]);
    y(i) *= Scalar(thetas_[i]);
  }
  KernelIdentity out;
  const MasterMatrix m = evaluate(z);
  Eigen::VectorXcd w(2 * r);
  w.head(r) = x.template cast<Complex>();
  w.tail(r) = y.template cast<Complex>();
  out.kernel_residual = (m.entries * w).norm();

  // u = (z^2 - XX^*)^-1 (z P v + X P^* u), with P v = U x and P^* u = V y.
  const Matrix<Scalar> shifted = Scalar(z * z) * Matrix<Scalar>::Identity(n, n) - gram_;
  const Eigen::PartialPivLU<Matrix<Scalar>> lu(shifted);
  const Vector<Scalar> y1 = Scalar(z) * lu.solve(u_ * x);
  const Vector<Scalar> y2 = lu.solve(xv_ * y);
  out.a = y1.squaredNorm();
  out.b = y2.squaredNorm();
  const Scalar cross = y1.dot(y2);  // conjugate-linear in y1
  out.c = std::real(cross);
  out.d = std::real(cross);
  out.sum_residual = std::abs(out.a + out.b + out.c + out.d - 1.0);
  return out;
}

template <typename Scalar>
MasterMatrix master_matrix(const Matrix<Scalar>& x, const Perturbation<Scalar>& pert, double z) {
  return MasterMatrixEvaluator<Scalar>(x, pert).evaluate(z);
}

template <typename Scalar>
KernelIdentity kernel_identity_residual(const Matrix<Scalar>& x, const Perturbation<Scalar>& pert,
                                        double z, const Vector<Scalar>& u_tilde,
                                        const Vector<Scalar>& v_tilde) {
  return MasterMatrixEvaluator<Scalar>(x, pert).kernel_identity(z, u_tilde, v_tilde);
}

Eigen::MatrixXcd limit_master_matrix(const TransformContext& ctx, const std::vector<double>& thetas,
                                     double z) {
  const Eigen::Index r = static_cast<Eigen::Index>(thetas.size());
  const double c = ctx.c();
  const double p = phi(ctx.mu(), z, ctx.quad_tol());
  const double p_tilde = c * p + (1.0 - c) / z;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2 * r, 2 * r);
  for (Eigen::Index i = 0; i < r; ++i) {
    m(i, i) = p;
    m(r + i, r + i) = p_tilde;
    m(i, r + i) = -1.0 / thetas[i];
    m(r + i, i) = -1.0 / thetas[i];
  }
  return m;
}

template <typename Scalar>
ConcentrationStats empirical_concentration_check(const Matrix<Scalar>& a, const Matrix<Scalar>& b,
                                                 std::size_t r, PerturbationModel model,
                                                 EntryLaw law, std::size_t trials,
                                                 std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(a.rows());
  const auto m = static_cast<std::size_t>(b.cols());
  if (a.rows() != a.cols() || b.rows() != a.rows()) {
    throw DimensionError("concentration check needs A n x n and B n x m");
  }
  SpikeSpec spec{std::vector<double>(r, 1.0), model, Field::real};
  const double mean_trace = std::real(a.trace()) / static_cast<double>(n);
  ConcentrationStats out;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = make_trial_rng(seed, t);
    const Perturbation<Scalar> p = sample_perturbation<Scalar>(spec, n, m, rng, law);
    const Matrix<Scalar> au = a * p.U;
    const Matrix<Scalar> bv = b * p.V;
    const Matrix<Scalar> quad = p.U.adjoint() * au;
    const Matrix<Scalar> mixed = p.U.adjoint() * bv;
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < r; ++j) {
        if (i == j) {
          out.max_diagonal = std::max(out.max_diagonal, std::abs(quad(i, i) - Scalar(mean_trace)));
        } else {
          out.max_cross = std::max(out.max_cross, std::abs(quad(i, j)));
        }
        out.max_mixed = std::max(out.max_mixed, std::abs(mixed(i, j)));
      }
    }
  }
  return out;
}

template <typename Scalar>
void write_matrix_dump(const std::filesystem::path& path, const Matrix<Scalar>& a) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
  os.write("RMSV", 4);
  put_u32(os, static_cast<std::uint32_t>(a.rows()));
  put_u32(os, static_cast<std::uint32_t>(a.cols()));
  put_u32(os, static_cast<std::uint32_t>(is_complex_v<Scalar> ? ScalarTag::complex_f64
                                                               : ScalarTag::real_f64));
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if constexpr (is_complex_v<Scalar>) {
        put_f64(os, a(i, j).real());
        put_f64(os, a(i, j).imag());
      } else {
        put_f64(os, a(i, j));
      }
    }
  }
  if (!os) throw ConfigError("failed writing " + path.string());
}

AnyMatrix read_matrix_dump(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open matrix dump " + path.string());
  std::array<char, 4> magic{};
  is.read(magic.data(), magic.size());
  if (!is || std::string(magic.data(), 4) != "RMSV") throw ConfigError("matrix dump: bad magic");
  const std::uint32_t n = get_u32(is);
  const std::uint32_t m = get_u32(is);
  const std::uint32_t tag = get_u32(is);
  if (tag == static_cast<std::uint32_t>(ScalarTag::real_f64)) {
    Matrix<double> a(n, m);
    for (std::uint32_t j = 0; j < m; ++j)
      for (std::uint32_t i = 0; i < n; ++i) a(i, j) = get_f64(is);
    return a;
  }
  if (tag == static_cast<std::uint32_t>(ScalarTag::complex_f64)) {
    Matrix<Complex> a(n, m);
    for (std::uint32_t j = 0; j < m; ++j) {
      for (std::uint32_t i = 0; i < n; ++i) {
        const double re = get_f64(is);
        const double im = get_f64(is);
        a(i, j) = Complex(re, im);
      }
    }
    return a;
  }
  throw ConfigError("matrix dump: unknown scalar tag " + std::to_string(tag));
}

FromFactory replay_factory(const std::filesystem::path& path, std::optional<SpectralMeasure> limit) {
  auto stored = std::make_shared<const AnyMatrix>(read_matrix_dump(path));
  FromFactory f;
  f.limit = std::move(limit);
  if (std::holds_alternative<Matrix<double>>(*stored)) {
    f.real = [stored](std::size_t, std::size_t, Rng&) { return std::get<Matrix<double>>(*stored); };
  } else {
    f.complex = [stored](std::size_t, std::size_t, Rng&) {
      return std::get<Matrix<Complex>>(*stored);
    };
  }
  return f;
}

#define RECTSPIKE_INSTANTIATE(S)                                                                  \
  template Matrix<S> sample_noise<S>(const NoiseModel&, std::size_t, std::size_t, Rng&);         \
  template Perturbation<S> sample_perturbation<S>(const SpikeSpec&, std::size_t, std::size_t,    \
                                                  Rng&, EntryLaw);                               \
  template SvdResult<S> svd_dense<S>(const Matrix<S>&, bool);                                    \
  template Eigen::VectorXd singular_values<S>(const Matrix<S>&);                                 \
  template ProjectionNorms projection_norms<S>(const Vector<S>&, const Vector<S>&,               \
                                               const Perturbation<S>&, double);                  \
  template class MasterMatrixEvaluator<S>;                                                       \
  template MasterMatrix master_matrix<S>(const Matrix<S>&, const Perturbation<S>&, double);      \
  template KernelIdentity kernel_identity_residual<S>(const Matrix<S>&, const Perturbation<S>&,  \
                                                      double, const Vector<S>&,                  \
                                                      const Vector<S>&);                         \
  template ConcentrationStats empirical_concentration_check<S>(                                  \
      const Matrix<S>&, const Matrix<S>&, std::size_t, PerturbationModel, EntryLaw, std::size_t, \
      std::uint64_t);                                                                            \
  template void write_matrix_dump<S>(const std::filesystem::path&, const Matrix<S>&);

RECTSPIKE_INSTANTIATE(double)
RECTSPIKE_INSTANTIATE(Complex)

#undef RECTSPIKE_INSTANTIATE

}  // namespace rectspike
