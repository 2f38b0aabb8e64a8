#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include "rectspike/measures.hpp"
#include "rectspike/prediction.hpp"
#include "rectspike/transforms.hpp"

namespace rectspike {

using Rng = std::mt19937_64;
using Complex = std::complex<double>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Generator for trial `index` of a run seeded with `seed` (SplitMix64 mixing
/// of both values into a 64-bit Mersenne Twister seed).
Rng make_trial_rng(std::uint64_t seed, std::uint64_t index);

/// Law of the entries of G_u and G_v. Rademacher breaks the fourth-moment
/// condition of the fluctuation limits and is meant for robustness runs only.
enum class EntryLaw { gaussian, rademacher };

/// i.i.d. entries of variance 1/m; complex entries have independent real and
/// imaginary parts of variance 1/(2m) each.
struct GaussianRect {};

/// Haar orthogonal (real) or unitary (complex) square matrix.
struct HaarSquare {};

/// Caller-supplied noise with its declared limit singular-value law.
struct FromFactory {
  std::function<Matrix<double>(std::size_t, std::size_t, Rng&)> real;
  std::function<Matrix<Complex>(std::size_t, std::size_t, Rng&)> complex;
  std::optional<SpectralMeasure> limit;
};

using NoiseModel = std::variant<GaussianRect, HaarSquare, FromFactory>;

template <typename Scalar>
Matrix<Scalar> sample_noise(const NoiseModel& model, std::size_t n, std::size_t m, Rng& rng);

/// P = U diag(thetas) V^* with U (n x r), V (m x r).
template <typename Scalar>
struct Perturbation {
  Matrix<Scalar> U;
  Matrix<Scalar> V;
  std::vector<double> thetas;
  Matrix<Scalar> P;
};

template <typename Scalar>
Perturbation<Scalar> sample_perturbation(const SpikeSpec& spec, std::size_t n, std::size_t m,
                                         Rng& rng, EntryLaw law = EntryLaw::gaussian);

template <typename Scalar>
struct SvdResult {
  Eigen::VectorXd values;  // descending
  Matrix<Scalar> left;     // n x n, empty when vectors were not requested
  Matrix<Scalar> right;    // m x n
};

/// Thin SVD of an n x m matrix with n <= m.
template <typename Scalar>
SvdResult<Scalar> svd_dense(const Matrix<Scalar>& a, bool with_vectors = true);

template <typename Scalar>
Eigen::VectorXd singular_values(const Matrix<Scalar>& a);

using ProjectionNorms = ProjectionLimits;

/// Squared norms of the projections of unit vectors (u_tilde, v_tilde) onto
/// Span{u_i : theta_i == theta} and Span{v_i : theta_i == theta}.
template <typename Scalar>
ProjectionNorms projection_norms(const Vector<Scalar>& u_tilde, const Vector<Scalar>& v_tilde,
                                 const Perturbation<Scalar>& pert, double theta);

/// The 2r x 2r matrix whose singularity at z characterizes singular values of
/// X + P that are not singular values of X.
struct MasterMatrix {
  Eigen::MatrixXcd entries;

  Complex determinant() const { return entries.determinant(); }
  Eigen::VectorXd singular_values() const;
  /// sigma_min / sigma_max.
  double relative_residual() const;
};

struct KernelIdentity {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;  // real part of the cross term; the fourth term is its conjugate
  double d = 0.0;
  double sum_residual = 0.0;     // |a + b + c + d - 1|
  double kernel_residual = 0.0;  // || M(z) [Theta V^* v; Theta U^* u] ||
};

/// Evaluates the master matrix and the kernel identity for a fixed (X, P),
/// reusing X X^*, X V and the singular values of X across evaluation points.
/// Each evaluation factors z^2 I - X X^* once; no inverse is formed.
template <typename Scalar>
class MasterMatrixEvaluator {
 public:
  MasterMatrixEvaluator(const Matrix<Scalar>& x, const Perturbation<Scalar>& pert);

  MasterMatrix evaluate(double z) const;
  KernelIdentity kernel_identity(double z, const Vector<Scalar>& u_tilde,
                                 const Vector<Scalar>& v_tilde) const;
  const Eigen::VectorXd& noise_singular_values() const { return sv_; }

 private:
  void check_shift(double z) const;

  Matrix<Scalar> x_;
  Matrix<Scalar> gram_;  // X X^*
  Matrix<Scalar> u_;
  Matrix<Scalar> v_;
  Matrix<Scalar> xv_;  // X V
  std::vector<double> thetas_;
  Eigen::VectorXd sv_;
};

template <typename Scalar>
MasterMatrix master_matrix(const Matrix<Scalar>& x, const Perturbation<Scalar>& pert, double z);

template <typename Scalar>
KernelIdentity kernel_identity_residual(const Matrix<Scalar>& x, const Perturbation<Scalar>& pert,
                                        double z, const Vector<Scalar>& u_tilde,
                                        const Vector<Scalar>& v_tilde);

/// Deterministic limit [phi(z) I, -Theta^-1; -Theta^-1, phi_tilde(z) I].
Eigen::MatrixXcd limit_master_matrix(const TransformContext& ctx, const std::vector<double>& thetas,
                                     double z);

struct ConcentrationStats {
  double max_diagonal = 0.0;  // max |<u_i, A u_i> - Tr(A)/n|
  double max_cross = 0.0;     // max |<u_i, A u_j>|, i != j
  double max_mixed = 0.0;     // max |<u_i, B v_k>|
};

/// Empirical counterpart of the quadratic-form concentration of the
/// perturbation directions: maxima over `trials` draws and over all indices.
template <typename Scalar>
ConcentrationStats empirical_concentration_check(const Matrix<Scalar>& a, const Matrix<Scalar>& b,
                                                 std::size_t r, PerturbationModel model,
                                                 EntryLaw law, std::size_t trials,
                                                 std::uint64_t seed);

// Matrix dump: 16-byte little-endian header ("RMSV", u32 n, u32 m, u32 tag)
// followed by column-major f64 data (interleaved re/im for complex).
enum class ScalarTag : std::uint32_t { real_f64 = 1, complex_f64 = 2 };

using AnyMatrix = std::variant<Matrix<double>, Matrix<Complex>>;

template <typename Scalar>
void write_matrix_dump(const std::filesystem::path& path, const Matrix<Scalar>& a);

AnyMatrix read_matrix_dump(const std::filesystem::path& path);

/// FromFactory noise that replays the matrix stored in a dump file.
FromFactory replay_factory(const std::filesystem::path& path,
                           std::optional<SpectralMeasure> limit = std::nullopt);

}  // namespace rectspike
