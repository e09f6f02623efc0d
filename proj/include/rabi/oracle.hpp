#pragma once

// Truncated-Fock-space diagonalization of
//   H = a^dag a + g sigma_x (a + a^dag) + eps sigma_x + delta sigma_z
// in the basis |n, s>, index 2n + s with s = 0 (up, sigma_z = +1) and s = 1 (down).

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rabi/model.hpp"

namespace rabi {

using Matrix = Eigen::MatrixXd;

[[nodiscard]] inline Matrix build_matrix(const ModelParams &p, int n_fock)
{
    if (n_fock < 1)
        throw invalid_params("n_fock must be >= 1");
    const int dim = 2 * n_fock;
    Matrix h = Matrix::Zero(dim, dim);
    for (int n = 0; n < n_fock; ++n) {
        const int up = 2 * n;
        const int dn = 2 * n + 1;
        h(up, up) = n + p.delta;
        h(dn, dn) = n - p.delta;
        h(up, dn) = h(dn, up) = p.epsilon;
        if (n + 1 < n_fock) {
            const double c = p.g * std::sqrt(double(n + 1));
            h(up, 2 * (n + 1) + 1) = h(2 * (n + 1) + 1, up) = c;
            h(dn, 2 * (n + 1)) = h(2 * (n + 1), dn) = c;
        }
    }
    return h;
}

// Diagonal of the parity operator exp(i pi a^dag a) sigma_z.
[[nodiscard]] inline Eigen::VectorXd parity_diagonal(int n_fock)
{
    Eigen::VectorXd d(2 * n_fock);
    for (int n = 0; n < n_fock; ++n) {
        const double s = (n % 2 == 0) ? 1.0 : -1.0;
        d(2 * n) = s;
        d(2 * n + 1) = -s;
    }
    return d;
}

struct Decomposition {
    Eigen::VectorXd eigenvalues; // ascending
    Matrix eigenvectors;         // columns
    Eigen::VectorXd parity;      // <v|P|v>
};

// Full dense symmetric eigendecomposition. Within clusters of (numerically)
// degenerate eigenvalues the basis is rotated to diagonalize parity, so that
// exactly degenerate pairs of opposite parity come out with labels +-1.
[[nodiscard]] inline Decomposition eigensolve(const Matrix &h, double cluster_tol = 1e-9)
{
    if (h.rows() != h.cols() || h.rows() % 2 != 0)
        throw invalid_params("oracle matrix must be square with even dimension");
    if ((h - h.transpose()).cwiseAbs().maxCoeff() > 0.0)
        throw invalid_params("oracle matrix must be symmetric");

    Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
    if (solver.info() != Eigen::Success)
        throw eigensolver_failure("dense symmetric eigensolver did not converge");

    Decomposition out;
    out.eigenvalues = solver.eigenvalues();
    out.eigenvectors = solver.eigenvectors();
    const Eigen::VectorXd pdiag = parity_diagonal(static_cast<int>(h.rows() / 2));

    const Eigen::Index dim = h.rows();
    for (Eigen::Index i = 0; i < dim;) {
        Eigen::Index j = i + 1;
        while (j < dim && out.eigenvalues(j) - out.eigenvalues(j - 1) <
                              cluster_tol * std::max(1.0, std::abs(out.eigenvalues(j))))
            ++j;
        if (j - i > 1) {
            auto block = out.eigenvectors.middleCols(i, j - i);
            const Matrix proj = block.transpose() * pdiag.asDiagonal() * block;
            Eigen::SelfAdjointEigenSolver<Matrix> rot(proj);
            const Matrix rotated = block * rot.eigenvectors();
            block = rotated;
        }
        i = j;
    }
    out.parity = (out.eigenvectors.array().square().colwise() * pdiag.array()).colwise().sum().transpose();
    return out;
}

struct OracleOptions {
    int n_fock = 300;
    int certificate_extra = 50;
    double certificate_tol = 1e-9;
    double parity_threshold = 0.99;
};

struct OracleResult {
    // Only the certified leading levels, ascending.
    std::vector<double> eigenvalues;
    std::vector<double> parity;
    // |parity| below the labeling threshold.
    std::vector<bool> parity_flagged;
    int n_fock = 0;
    int converged_count = 0;

    [[nodiscard]] std::vector<double> levels_with_parity(int sign, double e_max) const
    {
        std::vector<double> out;
        for (std::size_t i = 0; i < eigenvalues.size(); ++i)
            if (eigenvalues[i] < e_max && parity[i] * sign > 0.0)
                out.push_back(eigenvalues[i]);
        return out;
    }
};

// Diagonalizes at n_fock and n_fock + certificate_extra; only the leading levels
// that agree to certificate_tol are exposed.
[[nodiscard]] inline OracleResult solve_oracle(const ModelParams &p, const OracleOptions &opt = {})
{
    p.validate();
    if (opt.n_fock < 2)
        throw invalid_params("n_fock must be >= 2");
    const auto base = eigensolve(build_matrix(p, opt.n_fock));
    const auto check = eigensolve(build_matrix(p, opt.n_fock + opt.certificate_extra));

    OracleResult out;
    out.n_fock = opt.n_fock;
    const Eigen::Index n = base.eigenvalues.size();
    Eigen::Index count = 0;
    while (count < n && std::abs(base.eigenvalues(count) - check.eigenvalues(count)) < opt.certificate_tol)
        ++count;
    out.converged_count = static_cast<int>(count);
    for (Eigen::Index i = 0; i < count; ++i) {
        out.eigenvalues.push_back(base.eigenvalues(i));
        out.parity.push_back(base.parity(i));
        out.parity_flagged.push_back(std::abs(base.parity(i)) < opt.parity_threshold);
    }
    return out;
}

// Fock truncation large enough for levels up to x_max with margin; the certificate
// is still the guard.
[[nodiscard]] inline int suggested_n_fock(const ModelParams &p, double x_max)
{
    const double spread = x_max + 4.0 * p.g * p.g + 8.0 * p.g * std::sqrt(std::max(x_max, 1.0));
    return std::max(40, static_cast<int>(std::ceil(1.5 * spread + 40.0)));
}

// Signed gap between the positive- and negative-parity levels nearest to
// E = n - g^2. Zero crossings locate exceptional (Juddian) points.
struct DegeneracyGap {
    double gap = 0.0;
    double e_plus = 0.0;
    double e_minus = 0.0;
};

[[nodiscard]] inline DegeneracyGap degeneracy_gap(const ModelParams &p, int n, const OracleOptions &opt)
{
    const auto res = solve_oracle(p, opt);
    const double target = n - p.g * p.g;
    double best_plus = NAN;
    double best_minus = NAN;
    for (std::size_t i = 0; i < res.eigenvalues.size(); ++i) {
        const double e = res.eigenvalues[i];
        double &slot = res.parity[i] > 0.0 ? best_plus : best_minus;
        if (std::isnan(slot) || std::abs(e - target) < std::abs(slot - target))
            slot = e;
    }
    const double top = res.eigenvalues.empty() ? -INFINITY : res.eigenvalues.back();
    if (std::isnan(best_plus) || std::isnan(best_minus) || top < target + 1.0)
        throw level_not_converged("levels near E=" + std::to_string(target) +
                                  " are outside the certified window; increase n_fock");
    return {best_plus - best_minus, best_plus, best_minus};
}

[[nodiscard]] inline DegeneracyGap degeneracy_gap(const ModelParams &p, int n, int n_fock)
{
    OracleOptions opt;
    opt.n_fock = n_fock;
    return degeneracy_gap(p, n, opt);
}

} // namespace rabi
