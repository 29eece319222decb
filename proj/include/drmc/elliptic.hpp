#pragma once

#include "drmc/model.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <memory>
#include <optional>
#include <vector>

namespace drmc {

/// Uniform nx-by-ny cell grid on the unit square with lexicographic nodes
/// k = j (nx + 1) + i at (i hx, j hy).
struct Mesh2D {
  int nx = 0;
  int ny = 0;

  Mesh2D(int nx_, int ny_);
  Index num_nodes() const { return Index(nx + 1) * (ny + 1); }
  double hx() const { return 1.0 / nx; }
  double hy() const { return 1.0 / ny; }
  Index node(int i, int j) const { return Index(j) * (nx + 1) + i; }
  Eigen::Vector2d point(Index k) const;
  std::vector<Eigen::Vector2d> nodes() const;
  /// Area of the dual control volume around node k.
  double control_area(Index k) const;
};

/// Four Gaussian plumes, sd 0.05, weights (2, -3, 3, -2).
double forcing_value(const Eigen::Vector2d& s);
Vector build_forcing(const Mesh2D& mesh);

/// Default observation points: 5x5 grid on {1/6, ..., 5/6}².
std::vector<Eigen::Vector2d> default_sensors();

/// Reference log-conductivity: sin(pi x) sin(pi y) plus a 0.5 bump inside
/// the disc of radius 0.15 around (0.7, 0.3).
double true_field_value(const Eigen::Vector2d& s);
Vector true_field(const Mesh2D& mesh);

using SparseMatrix = Eigen::SparseMatrix<double>;
using SparseSolver = Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>;

/// Forward solution p(u) with its factorized constrained system.
struct ForwardSolveResult {
  Vector p;                 // nodal potential, zero mean
  Vector k;                 // conductivity exp(u)
  Vector transmissivity;    // per face
  std::shared_ptr<SparseSolver> factor;
};

/// -div(exp(u) grad p) = f on the unit square, no-flux boundary, zero-mean p.
///
/// Vertex-centred five-point finite volumes with harmonic-mean face
/// transmissivities; the mean constraint enters through one Lagrange
/// multiplier row and column. Immutable once the data are set.
class EllipticProblem {
 public:
  EllipticProblem(Mesh2D mesh, std::vector<Eigen::Vector2d> sensors);

  const Mesh2D& mesh() const { return mesh_; }
  const Vector& forcing() const { return forcing_; }
  void set_forcing(Vector f);
  const std::vector<Eigen::Vector2d>& sensors() const { return sensors_; }
  const SparseMatrix& observation_operator() const { return O_; }
  Index num_faces() const { return static_cast<Index>(faces_.size()); }

  const Vector& data() const { return y_; }
  double noise_sd() const { return noise_sd_; }
  void set_data(Vector y, double noise_sd);

  /// Throws NumericalError on non-finite conductivity.
  ForwardSolveResult solve(const Vector& u) const;
  /// Bilinear interpolation of p at every sensor.
  Vector observe(const Vector& p) const;
  /// Residual-based misfit 1/2 |y - O p|² / sigma².
  double potential(const ForwardSolveResult& fwd) const;
  /// Adjoint gradient of the misfit; one extra solve with the cached factor.
  Vector gradient(const ForwardSolveResult& fwd) const;
  /// Jacobian action J w = O dp (one tangent solve).
  Vector jacobian_action(const ForwardSolveResult& fwd, const Vector& w) const;
  /// Adjoint Jacobian action Jᵀ z (one adjoint solve).
  Vector jacobian_adjoint(const ForwardSolveResult& fwd, const Vector& z) const;
  /// J(u)ᵀ Sigma^{-1} J(u) w (one tangent and one adjoint solve).
  Vector gnh_action(const ForwardSolveResult& fwd, const Vector& w) const;

  /// Relative residual of the augmented system at a solution.
  double residual(const ForwardSolveResult& fwd) const;

 private:
  struct Face {
    Index a, b;
    double coeff;  // face length / node distance
  };
  Mesh2D mesh_;
  std::vector<Eigen::Vector2d> sensors_;
  std::vector<Face> faces_;
  Vector forcing_;
  Vector rhs_;
  SparseMatrix O_;
  Vector y_;
  double noise_sd_ = 1.0;

  SparseMatrix assemble(const Vector& transmissivity) const;
  Vector solve_with(const ForwardSolveResult& fwd, const Vector& rhs) const;
  // Sum over faces of dT_f/du scaled by (x_a - x_b)(p_a - p_b), negated.
  Vector face_chain_rule(const ForwardSolveResult& fwd, const Vector& x) const;
};

/// Observation noise for y = G(u_true) + eta.
struct SyntheticData {
  Vector y;
  Vector clean;   // G(u_true)
  double noise_sd;
};

/// sigma = max(u_true) / snr; an infinite snr yields noiseless data with
/// unit noise scale. Throws std::invalid_argument when max(u_true) <= 0.
SyntheticData generate_data(const Vector& u_true, const EllipticProblem& data_problem,
                            double snr, std::uint64_t seed);

/// ForwardModel adapter: each forward, adjoint and tangent solve counts once.
class EllipticModel final : public ForwardModel {
 public:
  explicit EllipticModel(std::shared_ptr<const EllipticProblem> problem);
  Index dim() const override;
  Index num_observations() const override;
  std::unique_ptr<ModelPoint> evaluate(const Vector& u,
                                       SolveCounter* counter) const override;
  const EllipticProblem& problem() const { return *problem_; }

 private:
  std::shared_ptr<const EllipticProblem> problem_;
};

}  // namespace drmc
