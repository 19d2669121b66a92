#include "diras/linalg.hpp"

#include <Eigen/Eigenvalues>

namespace diras {

LuFactor::LuFactor(const Matrix& m) {
    lu_.compute(m);
    const double norm = m.cwiseAbs().rowwise().sum().maxCoeff(); // ||M||_inf
    const double floor = kPivotTol * (norm > 0.0 ? norm : 1.0);
    const Vector diag = lu_.matrixLU().diagonal().cwiseAbs();
    singular_ = m.rows() == 0 ? false : (diag.minCoeff() < floor);
}

std::vector<Complex> eigenvalues(const Matrix& m) {
    if (m.rows() == 0) return {};
    Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
    std::vector<Complex> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
    return out;
}

double spectral_radius(const std::vector<Complex>& eig) {
    double rho = 0.0;
    for (const auto& l : eig) rho = std::max(rho, std::abs(l));
    return rho;
}

double min_distance_to_one(const std::vector<Complex>& eig) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& l : eig) d = std::min(d, std::abs(l - Complex{1.0, 0.0}));
    return d;
}

} // namespace diras
