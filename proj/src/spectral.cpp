#include "billiards/spectral.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SparseCholesky>

#include "billiards/errors.hpp"
#include "billiards/kernels.hpp"

namespace billiards {

namespace {

using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Ldlt = Eigen::SimplicialLDLT<ColMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

Eigen::VectorXd apply(const SparseOperator& op, const Eigen::VectorXd& x) {
  Eigen::VectorXd y(x.size());
  kernels::csr_apply(op.matrix, {x.data(), static_cast<std::size_t>(x.size())},
                     {y.data(), static_cast<std::size_t>(y.size())});
  return y;
}

class ShiftedSolver {
 public:
  virtual ~ShiftedSolver() = default;
  virtual Eigen::VectorXd solve(const Eigen::VectorXd& b) const = 0;
  double sigma() const { return sigma_; }

 protected:
  double sigma_ = 0.0;
};

class DirectShift final : public ShiftedSolver {
 public:
  DirectShift(const ColMatrix& a, double sigma) : a_(a) {
    sigma_ = sigma;
    ColMatrix m = a;
    for (int k = 0; k < m.outerSize(); ++k) m.coeffRef(k, k) -= sigma;
    ldlt_.compute(m);
    if (ldlt_.info() != Eigen::Success) {
      throw Error(ErrorKind::shift_breakdown, "factorization failed at sigma=" + std::to_string(sigma));
    }
    const Eigen::VectorXd d = ldlt_.vectorD();
    const double scale = std::max(d.cwiseAbs().maxCoeff(), 1.0);
    for (int i = 0; i < d.size(); ++i) {
      if (!(std::abs(d[i]) > 1e-13 * scale)) {
        throw Error(ErrorKind::shift_breakdown, "singular pivot at sigma=" + std::to_string(sigma));
      }
      if (d[i] < 0.0) ++negatives_;
    }
  }

  // LDL^T without pivoting loses accuracy on indefinite shifts; iterative
  // refinement recovers it.
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const override {
    Eigen::VectorXd x = ldlt_.solve(b);
    for (int step = 0; step < 2; ++step) {
      const Eigen::VectorXd r = b - (a_ * x - sigma_ * x);
      x += ldlt_.solve(r);
    }
    return x;
  }
  long negatives() const { return negatives_; }

 private:
  const ColMatrix& a_;
  Ldlt ldlt_;
  long negatives_ = 0;
};

// MINRES for the symmetric indefinite system (A - sigma I) x = b.
class IterativeShift final : public ShiftedSolver {
 public:
  IterativeShift(const SparseOperator& op, double sigma) : op_(op) { sigma_ = sigma; }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const override {
    const Eigen::Index n = b.size();
    const int max_iter = std::max<int>(1000, 20 * static_cast<int>(n));
    const double tol = 1e-13;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    const double beta1 = b.norm();
    if (beta1 == 0.0) return x;
    Eigen::VectorXd r1 = b;
    Eigen::VectorXd r2 = b;
    Eigen::VectorXd y = b;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd w1 = w;
    Eigen::VectorXd w2 = w;
    double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
    double cs = -1.0, sn = 0.0;
    for (int it = 0; it < max_iter; ++it) {
      const Eigen::VectorXd v = y / beta;
      y = apply(op_, v) - sigma_ * v;
      if (it > 0) y -= (beta / oldb) * r1;
      const double alfa = v.dot(y);
      y -= (alfa / beta) * r2;
      r1 = r2;
      r2 = y;
      oldb = beta;
      beta = y.norm();
      const double oldeps = epsln;
      const double delta = cs * dbar + sn * alfa;
      const double gbar = sn * dbar - cs * alfa;
      epsln = sn * beta;
      dbar = -cs * beta;
      const double gamma = std::max(std::hypot(gbar, beta), std::numeric_limits<double>::min());
      cs = gbar / gamma;
      sn = beta / gamma;
      const double phi = cs * phibar;
      phibar = sn * phibar;
      w1 = w2;
      w2 = w;
      w = (v - oldeps * w1 - delta * w2) / gamma;
      x += phi * w;
      if (phibar <= tol * beta1 || beta == 0.0) return x;
    }
    throw Error(ErrorKind::iteration_cap_exceeded, "MINRES inner solve did not converge");
  }

 private:
  const SparseOperator& op_;
};

class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : rng_(seed) {}
  double operator()() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53 - 0.5; }
  Eigen::VectorXd vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = (*this)();
    return v;
  }

 private:
  std::mt19937_64 rng_;
};

void orthogonalize(Eigen::VectorXd& w, const Eigen::MatrixXd& basis, int cols) {
  if (cols == 0) return;
  for (int pass = 0; pass < 2; ++pass) {
    const Eigen::VectorXd coeff = basis.leftCols(cols).transpose() * w;
    w.noalias() -= basis.leftCols(cols) * coeff;
  }
}

struct Ritz {
  double lambda;
  Eigen::VectorXd vector;
};

struct Interval {
  double lo = -kInf;
  double hi = kInf;
  bool contains(double x, double slack) const { return x >= lo - slack && x <= hi + slack; }
};

// One Lanczos run on (A - sigma)^{-1} with full reorthogonalization against
// its own basis and the already locked vectors. Returns converged Ritz pairs
// falling in `range`, nearest to sigma first, at most `wanted` of them.
std::vector<Ritz> lanczos_pass(const SparseOperator& op, const ShiftedSolver& solver, const Eigen::MatrixXd& locked,
                               int n_locked, Interval range, int wanted, double tol, Uniform& rng) {
  const Eigen::Index n = locked.rows();
  const int avail = static_cast<int>(n) - n_locked;
  if (avail <= 0) return {};
  const int m_cap = std::min(avail, std::max(2 * wanted + 40, 60));
  const double sigma = solver.sigma();
  const double slack = 1e-9 * std::max({1.0, std::abs(range.lo == -kInf ? 0.0 : range.lo),
                                        std::abs(range.hi == kInf ? 0.0 : range.hi)});

  Eigen::MatrixXd v(n, m_cap + 1);
  Eigen::VectorXd start = rng.vector(static_cast<int>(n));
  orthogonalize(start, locked, n_locked);
  v.col(0) = start / start.norm();
  std::vector<double> alpha;
  std::vector<double> beta;

  // Candidates are screened by the cheap Lanczos estimate, then accepted on
  // the true residual ||A y - lambda y||.
  auto extract = [&](int m) -> std::vector<Ritz> {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
    Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), m);
    Eigen::VectorXd sub = m > 1 ? Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(beta.data(), m - 1))
                                : Eigen::VectorXd(0);
    tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    const double beta_m = beta[static_cast<std::size_t>(m - 1)];
    std::vector<std::pair<double, int>> candidates;
    for (int i = 0; i < m; ++i) {
      const double theta = tri.eigenvalues()[i];
      if (theta == 0.0) continue;
      const double lam = sigma + 1.0 / theta;
      if (!range.contains(lam, slack)) continue;
      if (std::abs(beta_m * tri.eigenvectors()(m - 1, i)) > 1e-6 * std::abs(theta)) continue;
      candidates.emplace_back(std::abs(1.0 / theta), i);
    }
    std::sort(candidates.begin(), candidates.end());
    std::vector<Ritz> out;
    for (const auto& [dist, i] : candidates) {
      if (static_cast<int>(out.size()) == wanted) break;
      Eigen::VectorXd y = v.leftCols(m) * tri.eigenvectors().col(i);
      y /= y.norm();
      const double lam = sigma + 1.0 / tri.eigenvalues()[i];
      if ((apply(op, y) - lam * y).norm() > tol) continue;
      out.push_back({lam, std::move(y)});
    }
    return out;
  };

  int m = 0;
  for (int j = 0; j < m_cap; ++j) {
    Eigen::VectorXd w = solver.solve(v.col(j));
    const double a = v.col(j).dot(w);
    alpha.push_back(a);
    orthogonalize(w, locked, n_locked);
    orthogonalize(w, v, j + 1);
    const double b = w.norm();
    beta.push_back(b);
    m = j + 1;
    const bool invariant = b <= 1e-12 * std::max(std::abs(a), 1e-300) || m == avail;
    if (invariant || m == m_cap) break;
    v.col(j + 1) = w / b;
    if (m >= wanted && (m % 10 == 0)) {
      if (static_cast<int>(extract(m).size()) >= wanted) break;
    }
  }
  return extract(m);
}

struct Locked {
  Eigen::MatrixXd basis;
  int count = 0;

  explicit Locked(Eigen::Index n) : basis(n, 16) {}

  void add(const Eigen::VectorXd& x) {
    if (count == basis.cols()) basis.conservativeResize(Eigen::NoChange, basis.cols() * 2);
    Eigen::VectorXd y = x;
    orthogonalize(y, basis, count);
    const double nrm = y.norm();
    if (nrm < 1e-6) return;
    basis.col(count++) = y / nrm;
  }
};

// Rayleigh-Ritz on one shift-invert application of the locked block.
std::vector<Ritz> refine(const SparseOperator& op, const ShiftedSolver& solver, const Locked& locked) {
  if (locked.count == 0) return {};
  Eigen::MatrixXd y(locked.basis.rows(), locked.count);
  for (int c = 0; c < locked.count; ++c) {
    Eigen::VectorXd col = solver.solve(locked.basis.col(c));
    y.col(c) = col / col.norm();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
  Eigen::MatrixXd aq(q.rows(), q.cols());
  for (int c = 0; c < q.cols(); ++c) aq.col(c) = apply(op, q.col(c));
  Eigen::MatrixXd h = q.transpose() * aq;
  h = 0.5 * (h + h.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  std::vector<Ritz> out;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    out.push_back({es.eigenvalues()[i], q * es.eigenvectors().col(i)});
  }
  return out;
}

std::unique_ptr<ShiftedSolver> make_solver(const SparseOperator& op, const ColMatrix* col, double sigma,
                                           bool direct) {
  if (!direct) return std::make_unique<IterativeShift>(op, sigma);
  try {
    return std::make_unique<DirectShift>(*col, sigma);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::shift_breakdown) throw;
    const double bump = 1e-7 * std::max(1.0, std::abs(sigma));
    return std::make_unique<DirectShift>(*col, sigma + bump);
  }
}

long inertia(const ColMatrix& col, double sigma) {
  double s = sigma;
  for (int attempt = 0; attempt < 6; ++attempt) {
    try {
      return DirectShift(col, s).negatives();
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::shift_breakdown) throw;
      s = std::nextafter(s, -kInf) - 1e-10 * std::max(1.0, std::abs(s)) * (attempt + 1);
    }
  }
  throw Error(ErrorKind::shift_breakdown, "inertia count failed near sigma=" + std::to_string(sigma));
}

bool use_direct(const SparseOperator& op, const SolverOptions& options) {
  switch (options.mode) {
    case SolverMode::direct: return true;
    case SolverMode::iterative: return false;
    case SolverMode::automatic: return op.dimension() <= options.direct_limit;
  }
  return true;
}

EigenPair finish(const SparseOperator& op, const Ritz& r) {
  EigenPair p;
  Eigen::VectorXd x = r.vector / r.vector.norm();
  const Eigen::VectorXd res = apply(op, x) - r.lambda * x;
  p.lambda = r.lambda;
  p.residual = res.norm();
  Eigen::Index imax = 0;
  x.cwiseAbs().maxCoeff(&imax);
  if (x[imax] < 0.0) x = -x;
  x /= std::sqrt(op.cell_area);
  p.vector = op.extend_to_grid(x);
  return p;
}

using ShiftFactory = std::function<std::unique_ptr<ShiftedSolver>(double)>;

double true_residual(const SparseOperator& op, const Ritz& r) {
  return (apply(op, r.vector) - r.lambda * r.vector).norm();
}

// Pairs still above tolerance are improved by block inverse iteration with a
// shift placed just beside their cluster, followed by Rayleigh-Ritz with A on
// the whole set so the result stays orthonormal.
void polish(const SparseOperator& op, std::vector<Ritz>& ritz, const ShiftFactory& make_shift, double tol) {
  for (int round = 0; round < 3; ++round) {
    std::vector<double> res(ritz.size());
    bool bad = false;
    for (std::size_t k = 0; k < ritz.size(); ++k) {
      res[k] = true_residual(op, ritz[k]);
      bad = bad || res[k] > tol;
    }
    if (!bad) return;
    std::vector<bool> done(ritz.size(), false);
    for (std::size_t k = 0; k < ritz.size(); ++k) {
      if (done[k] || res[k] <= tol) continue;
      const double lam = ritz[k].lambda;
      const double width = 1e-6 * std::max(1.0, std::abs(lam));
      std::vector<std::size_t> block;
      for (std::size_t q = 0; q < ritz.size(); ++q) {
        if (std::abs(ritz[q].lambda - lam) <= width) block.push_back(q);
      }
      const double lam_max = ritz[block.back()].lambda;
      auto shifted = make_shift(std::max(lam, lam_max) + 1e-5 * std::max(1.0, std::abs(lam)));
      Eigen::MatrixXd x(ritz[k].vector.size(), static_cast<Eigen::Index>(block.size()));
      for (std::size_t c = 0; c < block.size(); ++c) x.col(static_cast<Eigen::Index>(c)) = ritz[block[c]].vector;
      for (int step = 0; step < 2; ++step) {
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
          Eigen::VectorXd y = shifted->solve(x.col(c));
          x.col(c) = y / y.norm();
        }
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
        x = qr.householderQ() * Eigen::MatrixXd::Identity(x.rows(), x.cols());
      }
      for (std::size_t c = 0; c < block.size(); ++c) {
        ritz[block[c]].vector = x.col(static_cast<Eigen::Index>(c));
        done[block[c]] = true;
      }
    }
    Eigen::MatrixXd x(ritz.front().vector.size(), static_cast<Eigen::Index>(ritz.size()));
    for (std::size_t c = 0; c < ritz.size(); ++c) x.col(static_cast<Eigen::Index>(c)) = ritz[c].vector;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(x.rows(), x.cols());
    Eigen::MatrixXd aq(q.rows(), q.cols());
    for (Eigen::Index c = 0; c < q.cols(); ++c) aq.col(c) = apply(op, q.col(c));
    Eigen::MatrixXd h = q.transpose() * aq;
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    for (std::size_t c = 0; c < ritz.size(); ++c) {
      ritz[c] = {es.eigenvalues()[static_cast<Eigen::Index>(c)], q * es.eigenvectors().col(static_cast<Eigen::Index>(c))};
    }
  }
}

// Collects eigenpairs in `range` with shift sigma. `expected` < 0 means the
// count is unknown and passes continue until one finds nothing new.
std::vector<Ritz> collect(const SparseOperator& op, const ShiftedSolver& solver, const ShiftFactory& make_shift,
                          Interval range, long expected, int wanted_hint, Locked& locked,
                          const SolverOptions& options, Uniform& rng) {
  int stale = 0;
  for (int pass = 0; pass < options.max_passes; ++pass) {
    const int have = locked.count;
    if (expected >= 0 && have >= expected) break;
    const int wanted = expected >= 0 ? static_cast<int>(expected - have) : wanted_hint;
    auto found = lanczos_pass(op, solver, locked.basis, locked.count, range, std::max(wanted, 1), 100.0 * options.tol, rng);
    for (const auto& r : found) locked.add(r.vector);
    if (locked.count == have) {
      ++stale;
      if (expected < 0 && stale >= 2) break;
    } else {
      stale = 0;
    }
  }
  if (expected >= 0 && locked.count < expected) {
    throw Error(ErrorKind::convergence_failure,
                "found " + std::to_string(locked.count) + " of " + std::to_string(expected) +
                    " eigenpairs in [" + std::to_string(range.lo) + ", " + std::to_string(range.hi) + "]");
  }
  std::vector<Ritz> out = refine(op, solver, locked);
  polish(op, out, make_shift, options.tol);
  return out;
}

std::vector<EigenPair> to_pairs(const SparseOperator& op, const std::vector<Ritz>& ritz, Interval keep,
                                const SolverOptions& options) {
  std::vector<EigenPair> pairs;
  for (const auto& r : ritz) {
    if (!keep.contains(r.lambda, 0.0)) continue;
    pairs.push_back(finish(op, r));
  }
  for (const auto& p : pairs) {
    if (!(p.residual <= options.tol)) {
      throw Error(ErrorKind::convergence_failure,
                  "residual " + sci(p.residual) + " above tolerance at lambda=" +
                      std::to_string(p.lambda));
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const EigenPair& a, const EigenPair& b) { return a.lambda < b.lambda; });
  return pairs;
}

ColMatrix column_copy(const SparseOperator& op) { return ColMatrix(op.matrix); }

std::vector<EigenPair> interval_core(const SparseOperator& op, const ColMatrix* col, double lo, double hi,
                                     const SolverOptions& options, Locked* seed_locked, Uniform& rng) {
  const bool direct = col != nullptr;
  const double mid = 0.5 * (lo + hi);
  auto solver = make_solver(op, col, mid, direct);
  long expected = -1;
  if (direct) expected = inertia(*col, hi) - inertia(*col, lo);
  Locked locked(op.dimension());
  if (seed_locked != nullptr) {
    for (int c = 0; c < seed_locked->count; ++c) locked.add(seed_locked->basis.col(c));
  }
  if (expected == 0) return {};
  const int hint = expected >= 0 ? static_cast<int>(expected) : 20;
  const ShiftFactory factory = [&](double s) { return make_solver(op, col, s, direct); };
  auto ritz = collect(op, *solver, factory, {lo, hi}, expected, hint, locked, options, rng);
  auto pairs = to_pairs(op, ritz, {lo, hi}, options);
  if (direct && static_cast<long>(pairs.size()) != expected) {
    throw Error(ErrorKind::convergence_failure,
                "Sturm count " + std::to_string(expected) + " but " + std::to_string(pairs.size()) +
                    " eigenpairs resolved in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  assign_clusters(pairs, options.cluster_gap);
  return pairs;
}

}  // namespace

Eigen::VectorXd SparseOperator::restrict_to_unknowns(std::span<const double> nodes) const {
  Eigen::VectorXd x(dimension());
  for (int k = 0; k < dimension(); ++k) x[k] = nodes[static_cast<std::size_t>(node_of_unknown[static_cast<std::size_t>(k)])];
  return x;
}

std::vector<double> SparseOperator::extend_to_grid(const Eigen::Ref<const Eigen::VectorXd>& unknowns) const {
  std::vector<double> out(static_cast<std::size_t>(grid_size()), 0.0);
  for (int k = 0; k < dimension(); ++k) out[static_cast<std::size_t>(node_of_unknown[static_cast<std::size_t>(k)])] = unknowns[k];
  return out;
}

SparseOperator assemble_laplacian(const Grid& grid) {
  SparseOperator op;
  op.cell_area = grid.cell_area();
  op.unknown_of_node.assign(static_cast<std::size_t>(grid.size()), -1);
  for (int idx = 0; idx < grid.size(); ++idx) {
    if (grid.is_unknown(idx)) {
      op.unknown_of_node[static_cast<std::size_t>(idx)] = static_cast<int>(op.node_of_unknown.size());
      op.node_of_unknown.push_back(idx);
    }
  }
  const int n = static_cast<int>(op.node_of_unknown.size());
  if (n == 0) throw Error(ErrorKind::resolution_too_coarse, "grid has no unknown nodes");

  const double wx = 1.0 / (grid.dx * grid.dx);
  const double wy = 1.0 / (grid.dy * grid.dy);
  const int di[4] = {-1, 1, 0, 0};
  const int dj[4] = {0, 0, -1, 1};
  const double wt[4] = {wx, wx, wy, wy};

  std::vector<Eigen::Triplet<double, int>> triplets;
  triplets.reserve(static_cast<std::size_t>(n) * 5);
  for (int k = 0; k < n; ++k) {
    const int idx = op.node_of_unknown[static_cast<std::size_t>(k)];
    const int i = idx % grid.nx;
    const int j = idx / grid.nx;
    double diag = 0.0;
    for (int q = 0; q < 4; ++q) {
      int ni = i + di[q];
      int nj = j + dj[q];
      if (grid.periodic) {
        ni = (ni + grid.nx) % grid.nx;
        nj = (nj + grid.ny) % grid.ny;
      } else if (ni < 0 || nj < 0 || ni >= grid.nx || nj >= grid.ny) {
        if (grid.outer_bc == BoundaryCondition::dirichlet) diag += wt[q];
        continue;
      }
      const int nidx = grid.index(ni, nj);
      switch (grid.node_class[static_cast<std::size_t>(nidx)]) {
        case NodeClass::interior:
        case NodeClass::slit_adjacent:
          diag += wt[q];
          triplets.emplace_back(k, op.unknown_of_node[static_cast<std::size_t>(nidx)], -wt[q]);
          break;
        case NodeClass::slit:
          diag += wt[q];
          break;
        case NodeClass::obstacle:
          if (grid.inner_bc == BoundaryCondition::dirichlet) diag += wt[q];
          break;
        case NodeClass::outer_boundary:
          if (grid.outer_bc == BoundaryCondition::dirichlet) diag += wt[q];
          break;
      }
    }
    triplets.emplace_back(k, k, diag);
  }
  op.matrix.resize(n, n);
  op.matrix.setFromTriplets(triplets.begin(), triplets.end());
  op.matrix.makeCompressed();
  return op;
}

double EigenPair::h() const { return 1.0 / std::sqrt(lambda); }

long count_eigenvalues_below(const SparseOperator& op, double sigma) {
  const ColMatrix col = column_copy(op);
  return DirectShift(col, sigma).negatives();
}

std::vector<EigenPair> eigs_interval(const SparseOperator& op, double lo, double hi, const SolverOptions& options) {
  if (!(lo < hi)) throw Error(ErrorKind::config_error, "empty spectral interval");
  Uniform rng(options.seed);
  if (use_direct(op, options)) {
    const ColMatrix col = column_copy(op);
    return interval_core(op, &col, lo, hi, options, nullptr, rng);
  }
  return interval_core(op, nullptr, lo, hi, options, nullptr, rng);
}

std::vector<EigenPair> eigs_window(const SparseOperator& op, SpectralWindow window, const SolverOptions& options) {
  if (window.count < 1) throw Error(ErrorKind::config_error, "window count must be positive");
  if (window.count > op.dimension()) throw Error(ErrorKind::config_error, "window count exceeds dimension");
  Uniform rng(options.seed);
  const bool direct = use_direct(op, options);
  const ColMatrix col = direct ? column_copy(op) : ColMatrix();
  auto solver = make_solver(op, direct ? &col : nullptr, window.target, direct);

  Locked probe(op.dimension());
  auto first = lanczos_pass(op, *solver, probe.basis, 0, {}, window.count, 100.0 * options.tol, rng);
  for (const auto& r : first) probe.add(r.vector);
  double radius = 0.0;
  for (const auto& r : first) radius = std::max(radius, std::abs(r.lambda - window.target));
  if (radius == 0.0) radius = std::max(1.0, std::abs(window.target)) * 1e-3;
  radius *= 1.0 + 1e-6;

  std::vector<EigenPair> pairs;
  for (int grow = 0; grow < 40; ++grow) {
    const double lo = window.target - radius;
    const double hi = window.target + radius;
    if (direct) {
      const long k = inertia(col, hi) - inertia(col, lo);
      if (k < window.count) {
        radius *= 1.25;
        continue;
      }
    }
    pairs = interval_core(op, direct ? &col : nullptr, lo, hi, options, &probe, rng);
    if (static_cast<int>(pairs.size()) >= window.count) break;
    radius *= 1.25;
  }
  if (static_cast<int>(pairs.size()) < window.count) {
    throw Error(ErrorKind::convergence_failure, "could not enclose the requested window");
  }
  const double t = window.target;
  std::stable_sort(pairs.begin(), pairs.end(), [t](const EigenPair& a, const EigenPair& b) {
    return std::abs(a.lambda - t) < std::abs(b.lambda - t);
  });
  const double edge = std::abs(pairs[static_cast<std::size_t>(window.count - 1)].lambda - t);
  const double gap = options.cluster_gap * std::max(1.0, std::abs(t));
  std::size_t keep = static_cast<std::size_t>(window.count);
  while (keep < pairs.size() && std::abs(pairs[keep].lambda - t) - edge < gap) ++keep;
  pairs.resize(keep);
  assign_clusters(pairs, options.cluster_gap);
  return pairs;
}

std::vector<EigenPair> eigs_above(const SparseOperator& op, double lambda_min, int count, const SolverOptions& options) {
  if (count < 1) throw Error(ErrorKind::config_error, "count must be positive");
  Uniform rng(options.seed);
  const bool direct = use_direct(op, options);
  const ColMatrix col = direct ? column_copy(op) : ColMatrix();

  // Weyl: N(lambda) ~ area lambda / (4 pi), so a slice holding ~m eigenvalues
  // has width 4 pi m / area.
  const double area = op.dimension() * op.cell_area;
  const double per_slice = 24.0;
  double width = 4.0 * M_PI * per_slice / area;
  std::vector<EigenPair> all;
  double lo = lambda_min;
  long below = direct ? inertia(col, lo) : 0;
  while (static_cast<int>(all.size()) < count) {
    double hi = lo + width;
    if (direct) {
      long above = inertia(col, hi);
      while (above - below > 3 * static_cast<long>(per_slice) && hi - lo > 1e-9) {
        width *= 0.5;
        hi = lo + width;
        above = inertia(col, hi);
      }
      if (below >= op.dimension()) break;
      below = above;
    }
    auto slice = interval_core(op, direct ? &col : nullptr, lo, hi, options, nullptr, rng);
    if (!direct && slice.empty() && lo > 4.0 * op.matrix.diagonal().maxCoeff()) break;
    for (auto& p : slice) all.push_back(std::move(p));
    lo = hi;
    if (direct && below >= op.dimension()) break;
  }
  std::sort(all.begin(), all.end(), [](const EigenPair& a, const EigenPair& b) { return a.lambda < b.lambda; });
  if (static_cast<int>(all.size()) > count) {
    const double edge = all[static_cast<std::size_t>(count - 1)].lambda;
    const double gap = options.cluster_gap * std::max(1.0, std::abs(edge));
    std::size_t keep = static_cast<std::size_t>(count);
    while (keep < all.size() && all[keep].lambda - edge < gap) ++keep;
    all.resize(keep);
  }
  assign_clusters(all, options.cluster_gap);
  return all;
}

double residual_norm(const SparseOperator& op, double lambda, std::span<const double> grid_vector) {
  const Eigen::VectorXd x = op.restrict_to_unknowns(grid_vector);
  const double nx = x.norm();
  if (nx == 0.0) return 0.0;
  return (apply(op, x) - lambda * x).norm() / nx;
}

double rayleigh_quotient(const SparseOperator& op, std::span<const double> grid_vector) {
  const Eigen::VectorXd x = op.restrict_to_unknowns(grid_vector);
  return x.dot(apply(op, x)) / x.squaredNorm();
}

double mass_in_region(std::span<const double> u, const NodeMask& mask, const Grid& grid) {
  if (mask.size() != static_cast<std::size_t>(grid.size()) || u.size() != mask.size()) {
    throw Error(ErrorKind::config_error, "mask and vector sizes do not match the grid");
  }
  if (mask_count(mask) == 0) throw Error(ErrorKind::empty_region, "region contains no grid nodes");
  double sum = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (mask[k] != 0U) sum += u[k] * u[k];
  }
  return sum * grid.cell_area();
}

double mass_in_region(const EigenPair& pair, const NodeMask& mask, const Grid& grid) {
  return mass_in_region(std::span<const double>(pair.vector), mask, grid);
}

void assign_clusters(std::vector<EigenPair>& pairs, double relative_gap) {
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pairs[a].lambda < pairs[b].lambda; });
  int id = -1;
  double prev = 0.0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const double lam = pairs[order[r]].lambda;
    if (r == 0 || lam - prev >= relative_gap * std::max(1.0, std::abs(lam))) ++id;
    pairs[order[r]].cluster = id;
    prev = lam;
  }
}

}  // namespace billiards
