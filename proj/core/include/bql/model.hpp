#pragma once

// Diffusion coefficient maps b(t, x, sigma) -> 2 x d1 matrix with rows b^1, b^2.

#include "bql/common.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace bql {

/// |b^1|^2, |b^2|^2 and b^1.b^2 at one point, with their sigma-gradients.
struct LocalCovariance {
    double c11 = 0.0;
    double c22 = 0.0;
    double c12 = 0.0;
    Vec dc11;
    Vec dc22;
    Vec dc12;
};

class DiffusionModel {
public:
    explicit DiffusionModel(Box box) : box_(std::move(box)) {}
    virtual ~DiffusionModel() = default;

    /// Parameter dimension d.
    Eigen::Index dim() const { return box_.dim(); }
    const Box& box() const { return box_; }

    virtual std::string name() const = 0;

    /// b(t, x, sigma), 2 x d1.
    virtual Mat coefficient(double t, std::span<const double> x, const Vec& sigma) const = 0;

    /// d b / d sigma_j for j = 0..d-1. The default uses central differences.
    virtual std::vector<Mat> coefficient_jacobian(double t, std::span<const double> x, const Vec& sigma) const;

    virtual bool has_analytic_jacobian() const { return false; }

    /// True if b does not depend on (t, x).
    virtual bool state_independent() const { return false; }

    /// Coordinates whose sign leaves b b^T unchanged; the likelihood is even in them.
    virtual std::vector<Eigen::Index> sign_symmetric_coordinates() const { return {}; }

    LocalCovariance local_covariance(double t, std::span<const double> x, const Vec& sigma) const;

private:
    Box box_;
};

/// b = [[s1, 0], [s3, s2]] with sigma = (s1, s2, s3).
class ConstantDiffusion final : public DiffusionModel {
public:
    explicit ConstantDiffusion(Box box = default_box());
    static Box default_box();

    std::string name() const override { return "constant"; }
    Mat coefficient(double t, std::span<const double> x, const Vec& sigma) const override;
    std::vector<Mat> coefficient_jacobian(double t, std::span<const double> x, const Vec& sigma) const override;
    bool has_analytic_jacobian() const override { return true; }
    bool state_independent() const override { return true; }
    std::vector<Eigen::Index> sign_symmetric_coordinates() const override { return {1}; }
};

/// b = [[s1 sqrt(x1), 0], [s3 sqrt(x2), s2 sqrt(x2)]]; x is clamped at a tiny
/// positive floor so that noisy local averages near zero stay admissible.
class CirDiffusion final : public DiffusionModel {
public:
    explicit CirDiffusion(Box box = ConstantDiffusion::default_box());

    std::string name() const override { return "cir"; }
    Mat coefficient(double t, std::span<const double> x, const Vec& sigma) const override;
    std::vector<Mat> coefficient_jacobian(double t, std::span<const double> x, const Vec& sigma) const override;
    bool has_analytic_jacobian() const override { return true; }
    std::vector<Eigen::Index> sign_symmetric_coordinates() const override { return {1}; }
};

/// User-supplied coefficient map; the Jacobian falls back to central differences
/// unless one is given.
class FunctionalDiffusion final : public DiffusionModel {
public:
    using CoefficientFn = std::function<Mat(double, std::span<const double>, const Vec&)>;
    using JacobianFn = std::function<std::vector<Mat>(double, std::span<const double>, const Vec&)>;

    FunctionalDiffusion(std::string name, Box box, CoefficientFn b, JacobianFn db = {}, bool state_independent = false);

    std::string name() const override { return name_; }
    Mat coefficient(double t, std::span<const double> x, const Vec& sigma) const override { return b_(t, x, sigma); }
    std::vector<Mat> coefficient_jacobian(double t, std::span<const double> x, const Vec& sigma) const override;
    bool has_analytic_jacobian() const override { return static_cast<bool>(db_); }
    bool state_independent() const override { return state_independent_; }

private:
    std::string name_;
    CoefficientFn b_;
    JacobianFn db_;
    bool state_independent_;
};

std::unique_ptr<DiffusionModel> make_model(const std::string& kind, const Box& box);

}  // namespace bql
