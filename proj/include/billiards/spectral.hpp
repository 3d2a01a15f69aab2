#pragma once

// Discrete Laplacian and shift-invert eigensolver.
//
// The operator acts on the unknown nodes of a Grid (interior and
// slit-adjacent nodes); pinned nodes carry the Dirichlet value 0. Eigenvectors
// are handed out as full-grid functions normalized in the grid measure dx*dy.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "billiards/geometry.hpp"

namespace billiards {

using CsrMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

struct SparseOperator {
  CsrMatrix matrix;                    // -Delta_h restricted to the unknowns
  std::vector<int> node_of_unknown;    // unknown -> grid node
  std::vector<int> unknown_of_node;    // grid node -> unknown, -1 when pinned
  double cell_area = 0.0;

  int dimension() const { return static_cast<int>(matrix.rows()); }
  int grid_size() const { return static_cast<int>(unknown_of_node.size()); }
  Eigen::VectorXd restrict_to_unknowns(std::span<const double> nodes) const;
  std::vector<double> extend_to_grid(const Eigen::Ref<const Eigen::VectorXd>& unknowns) const;
};

// 5-point stencil for -Delta. Dirichlet neighbours contribute only to the
// diagonal; Neumann neighbours (walls, obstacle) drop out as zero-flux faces.
SparseOperator assemble_laplacian(const Grid& grid);

struct EigenPair {
  double lambda = 0.0;
  std::vector<double> vector;  // full grid, sum |u|^2 dx dy = 1
  double residual = 0.0;       // ||(A - lambda) u|| / ||u||
  int cluster = -1;            // pairs with equal cluster id are numerically degenerate

  double h() const;  // semiclassical parameter lambda^{-1/2}
};

struct SpectralWindow {
  double target = 0.0;
  int count = 1;
};

enum class SolverMode : std::uint8_t { automatic, direct, iterative };

struct SolverOptions {
  double tol = 1e-8;
  SolverMode mode = SolverMode::automatic;
  std::uint64_t seed = 0x5eedULL;
  int max_passes = 24;
  // Direct factorization is used up to this many unknowns in automatic mode.
  int direct_limit = 300 * 300;
  double cluster_gap = 1e-6;  // relative gap below which eigenvalues are tagged as a cluster
};

// Number of eigenvalues strictly below sigma, from the inertia of the LDL^T
// factorization of (A - sigma I).
long count_eigenvalues_below(const SparseOperator& op, double sigma);

// The `count` eigenpairs closest to window.target, sorted by |lambda - target|.
// A degenerate cluster straddling the outermost distance is returned whole.
std::vector<EigenPair> eigs_window(const SparseOperator& op, SpectralWindow window,
                                   const SolverOptions& options = {});

// All eigenpairs in [lo, hi], sorted by lambda. In direct mode the result is
// certified complete by a Sturm count.
std::vector<EigenPair> eigs_interval(const SparseOperator& op, double lo, double hi,
                                     const SolverOptions& options = {});

// The first `count` eigenpairs with lambda >= lambda_min (spectrum slicing).
std::vector<EigenPair> eigs_above(const SparseOperator& op, double lambda_min, int count,
                                  const SolverOptions& options = {});

double residual_norm(const SparseOperator& op, double lambda, std::span<const double> grid_vector);
double rayleigh_quotient(const SparseOperator& op, std::span<const double> grid_vector);

// Grid-measure L2 mass of u on the mask. Throws Error{empty_region}.
double mass_in_region(const EigenPair& pair, const NodeMask& mask, const Grid& grid);
double mass_in_region(std::span<const double> u, const NodeMask& mask, const Grid& grid);

void assign_clusters(std::vector<EigenPair>& pairs, double relative_gap);

}  // namespace billiards
