#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace diras {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;

/// Relative pivot threshold below which a factorization counts as singular.
inline constexpr double kPivotTol = 1e-12;

/// Dense LU with partial pivoting plus an explicit singularity test:
/// the factorization is rejected when min |U_ii| < kPivotTol * ||M||_inf.
class LuFactor {
  public:
    LuFactor() = default;
    explicit LuFactor(const Matrix& m);

    bool singular() const noexcept { return singular_; }
    Eigen::Index size() const noexcept { return lu_.rows(); }

    /// Solves M x = rhs. Caller must have checked singular().
    template <typename Rhs>
    auto solve(const Eigen::MatrixBase<Rhs>& rhs) const {
        return lu_.solve(rhs).eval();
    }

  private:
    Eigen::PartialPivLU<Matrix> lu_;
    bool singular_ = true;
};

/// Eigenvalues of a (generally non-symmetric) real matrix.
std::vector<Complex> eigenvalues(const Matrix& m);

double spectral_radius(const std::vector<Complex>& eig);
inline double spectral_radius(const Matrix& m) { return spectral_radius(eigenvalues(m)); }

/// Smallest distance of any eigenvalue to 1 + 0i.
double min_distance_to_one(const std::vector<Complex>& eig);

} // namespace diras
