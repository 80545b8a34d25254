#include "bql/model.hpp"

#include <algorithm>
#include <cmath>

namespace bql {

namespace {

constexpr double kStateFloor = 1e-12;

double sqrt_floor(double x) { return std::sqrt(std::max(x, kStateFloor)); }

void require_dim(const Vec& sigma, Eigen::Index d) {
    if (sigma.size() != d) throw DomainError("parameter vector has wrong dimension");
}

}  // namespace

std::vector<Mat> DiffusionModel::coefficient_jacobian(double t, std::span<const double> x, const Vec& sigma) const {
    std::vector<Mat> out;
    out.reserve(static_cast<std::size_t>(sigma.size()));
    for (Eigen::Index j = 0; j < sigma.size(); ++j) {
        const double h = 1e-6 * (1.0 + std::abs(sigma[j]));
        Vec up = sigma, dn = sigma;
        up[j] += h;
        dn[j] -= h;
        out.push_back((coefficient(t, x, up) - coefficient(t, x, dn)) / (2.0 * h));
    }
    return out;
}

LocalCovariance DiffusionModel::local_covariance(double t, std::span<const double> x, const Vec& sigma) const {
    const Mat b = coefficient(t, x, sigma);
    if (b.rows() != 2) throw DomainError("coefficient must have two rows");
    LocalCovariance lc;
    lc.c11 = b.row(0).squaredNorm();
    lc.c22 = b.row(1).squaredNorm();
    lc.c12 = b.row(0).dot(b.row(1));
    const auto jac = coefficient_jacobian(t, x, sigma);
    const Eigen::Index d = sigma.size();
    lc.dc11.resize(d);
    lc.dc22.resize(d);
    lc.dc12.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const Mat& db = jac[static_cast<std::size_t>(j)];
        lc.dc11[j] = 2.0 * b.row(0).dot(db.row(0));
        lc.dc22[j] = 2.0 * b.row(1).dot(db.row(1));
        lc.dc12[j] = db.row(0).dot(b.row(1)) + b.row(0).dot(db.row(1));
    }
    return lc;
}

//----------------------------------------------------------------------------

ConstantDiffusion::ConstantDiffusion(Box box) : DiffusionModel(std::move(box)) {
    if (dim() != 3) throw ConfigError("constant diffusion has 3 parameters");
}

Box ConstantDiffusion::default_box() {
    Vec lo(3), hi(3);
    lo << 0.1, -3.0, 0.1;
    hi << 3.0, 3.0, 3.0;
    return {lo, hi};
}

Mat ConstantDiffusion::coefficient(double, std::span<const double>, const Vec& s) const {
    require_dim(s, 3);
    Mat b(2, 2);
    b << s[0], 0.0, s[2], s[1];
    return b;
}

std::vector<Mat> ConstantDiffusion::coefficient_jacobian(double, std::span<const double>, const Vec& s) const {
    require_dim(s, 3);
    std::vector<Mat> out(3, Mat::Zero(2, 2));
    out[0](0, 0) = 1.0;
    out[1](1, 1) = 1.0;
    out[2](1, 0) = 1.0;
    return out;
}

CirDiffusion::CirDiffusion(Box box) : DiffusionModel(std::move(box)) {
    if (dim() != 3) throw ConfigError("CIR diffusion has 3 parameters");
}

Mat CirDiffusion::coefficient(double, std::span<const double> x, const Vec& s) const {
    require_dim(s, 3);
    if (x.size() < 2) throw DomainError("CIR diffusion needs a 2-dimensional state");
    const double r1 = sqrt_floor(x[0]);
    const double r2 = sqrt_floor(x[1]);
    Mat b(2, 2);
    b << s[0] * r1, 0.0, s[2] * r2, s[1] * r2;
    return b;
}

std::vector<Mat> CirDiffusion::coefficient_jacobian(double, std::span<const double> x, const Vec& s) const {
    require_dim(s, 3);
    if (x.size() < 2) throw DomainError("CIR diffusion needs a 2-dimensional state");
    const double r1 = sqrt_floor(x[0]);
    const double r2 = sqrt_floor(x[1]);
    std::vector<Mat> out(3, Mat::Zero(2, 2));
    out[0](0, 0) = r1;
    out[1](1, 1) = r2;
    out[2](1, 0) = r2;
    return out;
}

FunctionalDiffusion::FunctionalDiffusion(std::string name, Box box, CoefficientFn b, JacobianFn db,
                                         bool state_independent)
    : DiffusionModel(std::move(box)),
      name_(std::move(name)),
      b_(std::move(b)),
      db_(std::move(db)),
      state_independent_(state_independent) {
    if (!b_) throw ConfigError("coefficient function is empty");
}

std::vector<Mat> FunctionalDiffusion::coefficient_jacobian(double t, std::span<const double> x, const Vec& s) const {
    if (db_) return db_(t, x, s);
    return DiffusionModel::coefficient_jacobian(t, x, s);
}

std::unique_ptr<DiffusionModel> make_model(const std::string& kind, const Box& box) {
    if (kind == "constant") return std::make_unique<ConstantDiffusion>(box);
    if (kind == "cir") return std::make_unique<CirDiffusion>(box);
    throw ConfigError("unknown diffusion model '" + kind + "'");
}

}  // namespace bql
