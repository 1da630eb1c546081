#ifndef HAPCACHE_CONIC_HPP
#define HAPCACHE_CONIC_HPP

// Path-following barrier solver for small conic programs:
//
//   minimize    c'x
//   subject to  equality forms       a'x + a0  = 0
//               linear forms         a'x + a0 >= 0
//               exponential cones    (u, v, w) with v > 0, v exp(u / v) <= w
//               matrix inequalities  F0 + sum_i x_i F_i  is PSD
//
// Each cone carries the standard logarithmic barrier (log, 3-self-concordant
// exponential-cone barrier, -logdet). A phase-one program with a common slack
// along a fixed interior direction of every cone finds a strictly feasible
// start or certifies infeasibility.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "hapcache/core.hpp"

namespace hapcache::conic {

struct LinearForm {
  std::vector<std::pair<Index, double>> terms;
  double constant = 0.0;

  LinearForm() = default;
  explicit LinearForm(double c) : constant(c) {}

  LinearForm& add(Index var, double coeff) {
    if (coeff != 0.0) terms.emplace_back(var, coeff);
    return *this;
  }

  double operator()(const Eigen::VectorXd& x) const {
    double v = constant;
    for (const auto& [i, a] : terms) v += a * x[i];
    return v;
  }

  double along(const Eigen::VectorXd& dx) const {
    double v = 0.0;
    for (const auto& [i, a] : terms) v += a * dx[i];
    return v;
  }
};

/// (x, y, z) in the closure of { y > 0, y exp(x / y) <= z }.
struct ExpCone {
  LinearForm x, y, z;
};

/// constant + sum_k x_{var_k} coeff_k  must be positive semidefinite.
struct MatrixInequality {
  Eigen::MatrixXd constant;
  std::vector<std::pair<Index, Eigen::MatrixXd>> terms;

  Index dim() const { return constant.rows(); }
};

struct Program {
  Index num_vars = 0;
  std::vector<double> cost;
  std::vector<double> hint;
  std::vector<LinearForm> equalities;
  std::vector<LinearForm> inequalities;
  std::vector<ExpCone> exp_cones;
  std::vector<MatrixInequality> matrix_inequalities;

  Index add_variable(double c = 0.0, double start = 0.0) {
    cost.push_back(c);
    hint.push_back(start);
    return num_vars++;
  }

  double barrier_parameter() const {
    double nu = static_cast<double>(inequalities.size()) + 3.0 * static_cast<double>(exp_cones.size());
    for (const auto& m : matrix_inequalities) nu += static_cast<double>(m.dim());
    return nu;
  }
};

enum class Status { optimal, infeasible, numerical_error };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::numerical_error: return "numerical_error";
  }
  return "?";
}

struct Options {
  double gap_tolerance = 1e-9;          // relative duality gap bound
  double feasibility_tolerance = 1e-7;  // phase-one slack accepted as feasible
  double relaxation_pad = 1e-8;
  double phase_one_target = 1e-3;       // stop phase one once this deep inside
  double phase_one_box = 1e6;           // |x_i| bound applied during phase one only
  double mu = 16.0;
  int max_newton = 80;
  int max_outer = 80;
};

struct Result {
  Status status = Status::numerical_error;
  Eigen::VectorXd x;
  double objective = 0.0;
  double gap_bound = 0.0;       // objective - gap_bound is a lower bound
  double phase_one_slack = 0.0; // most negative common slack reached
  double relaxation = 0.0;      // > 0 when cones were widened by this amount
  int newton_steps = 0;
};

namespace detail {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Barrier of a program with every cone widened by `relax` along its interior
// direction, and optionally a phase-one slack variable appended at index n.
class Barrier {
 public:
  Barrier(const Program& p, double relax, bool phase_one, double box = 0.0)
      : p_(p), relax_(relax), phase_one_(phase_one), box_(phase_one ? box : 0.0), n_(p.num_vars) {}

  Index dim() const { return phase_one_ ? n_ + 1 : n_; }

  double parameter() const {
    return p_.barrier_parameter() + (phase_one_ ? 1.0 : 0.0) + (box_ > 0.0 ? 2.0 * static_cast<double>(n_) : 0.0);
  }

  double shift(const Eigen::VectorXd& x) const { return relax_ + (phase_one_ ? x[n_] : 0.0); }
  double shift_along(const Eigen::VectorXd& dx) const { return phase_one_ ? dx[n_] : 0.0; }

  bool interior(const Eigen::VectorXd& x) const {
    const double s = shift(x);
    for (const auto& f : p_.inequalities)
      if (!(f(x) + s > 0.0)) return false;
    if (phase_one_ && !(x[n_] + 1.0 > 0.0)) return false;
    if (box_ > 0.0)
      for (Index i = 0; i < n_; ++i)
        if (!(std::abs(x[i]) < box_)) return false;
    for (const auto& k : p_.exp_cones) {
      const double u = k.x(x) - s, v = k.y(x) + s, w = k.z(x) + s;
      if (!(v > 0.0 && w > 0.0)) return false;
      if (!(v * std::log(w / v) - u > 0.0)) return false;
    }
    for (const auto& m : p_.matrix_inequalities) {
      Eigen::LLT<Eigen::MatrixXd> llt(matrix(m, x));
      if (llt.info() != Eigen::Success) return false;
    }
    return true;
  }

  // phi(x + dx) - phi(x), or +inf outside the domain.
  double change(const Eigen::VectorXd& x, const Eigen::VectorXd& dx) const {
    const double inf = std::numeric_limits<double>::infinity();
    const double s = shift(x), ds = shift_along(dx);
    double delta = 0.0;
    for (const auto& f : p_.inequalities) {
      const double v = f(x) + s, dv = f.along(dx) + ds;
      const double r = dv / v;
      if (!(r > -1.0)) return inf;
      delta -= std::log1p(r);
    }
    if (phase_one_) {
      const double v = x[n_] + 1.0, r = dx[n_] / v;
      if (!(r > -1.0)) return inf;
      delta -= std::log1p(r);
    }
    if (box_ > 0.0)
      for (Index i = 0; i < n_; ++i) {
        const double up = dx[i] / (box_ - x[i]), dn = dx[i] / (box_ + x[i]);
        if (!(up < 1.0 && dn > -1.0)) return inf;
        delta -= std::log1p(-up) + std::log1p(dn);
      }
    for (const auto& k : p_.exp_cones) {
      const double u = k.x(x) - s, v = k.y(x) + s, w = k.z(x) + s;
      const double u1 = u + k.x.along(dx) - ds, v1 = v + k.y.along(dx) + ds, w1 = w + k.z.along(dx) + ds;
      if (!(v1 > 0.0 && w1 > 0.0)) return inf;
      const double psi = v * std::log(w / v) - u;
      const double psi1 = v1 * std::log(w1 / v1) - u1;
      if (!(psi1 > 0.0)) return inf;
      delta -= std::log(psi1 / psi) + std::log(v1 / v) + std::log(w1 / w);
    }
    for (const auto& m : p_.matrix_inequalities) {
      Eigen::VectorXd x1 = x + dx;
      Eigen::LLT<Eigen::MatrixXd> a(matrix(m, x)), b(matrix(m, x1));
      if (b.info() != Eigen::Success) return inf;
      const Eigen::MatrixXd& la = a.matrixLLT();
      const Eigen::MatrixXd& lb = b.matrixLLT();
      for (Index i = 0; i < la.rows(); ++i) delta -= 2.0 * std::log(lb(i, i) / la(i, i));
    }
    return delta;
  }

  void derivatives(const Eigen::VectorXd& x, Eigen::VectorXd& grad, std::vector<Triplet>& hess) const {
    grad.setZero(dim());
    hess.clear();
    const double s = shift(x);
    std::vector<std::pair<Index, double>> row;

    for (const auto& f : p_.inequalities) {
      const double v = f(x) + s;
      with_slack(f.terms, 1.0, row);
      for (const auto& [i, a] : row) {
        grad[i] -= a / v;
        for (const auto& [j, b] : row) hess.emplace_back(i, j, a * b / (v * v));
      }
    }
    if (phase_one_) {
      const double v = x[n_] + 1.0;
      grad[n_] -= 1.0 / v;
      hess.emplace_back(n_, n_, 1.0 / (v * v));
    }
    if (box_ > 0.0)
      for (Index i = 0; i < n_; ++i) {
        const double a = box_ - x[i], b = box_ + x[i];
        grad[i] += 1.0 / a - 1.0 / b;
        hess.emplace_back(i, i, 1.0 / (a * a) + 1.0 / (b * b));
      }

    std::vector<std::pair<Index, double>> rows[3];
    for (const auto& k : p_.exp_cones) {
      const double u = k.x(x) - s, v = k.y(x) + s, w = k.z(x) + s;
      const double lw = std::log(w / v);
      const double psi = v * lw - u;
      const Eigen::Vector3d dpsi(-1.0, lw - 1.0, v / w);
      Eigen::Matrix3d d2psi = Eigen::Matrix3d::Zero();
      d2psi(1, 1) = -1.0 / v;
      d2psi(1, 2) = d2psi(2, 1) = 1.0 / w;
      d2psi(2, 2) = -v / (w * w);
      const Eigen::Vector3d g = -dpsi / psi - Eigen::Vector3d(0.0, 1.0 / v, 1.0 / w);
      Eigen::Matrix3d h = dpsi * dpsi.transpose() / (psi * psi) - d2psi / psi;
      h(1, 1) += 1.0 / (v * v);
      h(2, 2) += 1.0 / (w * w);

      with_slack(k.x.terms, -1.0, rows[0]);
      with_slack(k.y.terms, 1.0, rows[1]);
      with_slack(k.z.terms, 1.0, rows[2]);
      for (int a = 0; a < 3; ++a) {
        for (const auto& [i, ca] : rows[a]) {
          grad[i] += g[a] * ca;
          for (int b = 0; b < 3; ++b) {
            for (const auto& [j, cb] : rows[b]) hess.emplace_back(i, j, h(a, b) * ca * cb);
          }
        }
      }
    }

    for (const auto& m : p_.matrix_inequalities) {
      Eigen::LLT<Eigen::MatrixXd> llt(matrix(m, x));
      const auto lower = llt.matrixL();
      std::vector<Index> vars;
      std::vector<Eigen::MatrixXd> scaled;
      auto push = [&](Index var, const Eigen::MatrixXd& f) {
        Eigen::MatrixXd t = lower.solve(f);
        Eigen::MatrixXd st = lower.solve(t.transpose()).transpose();
        vars.push_back(var);
        scaled.push_back(std::move(st));
      };
      for (const auto& [var, f] : m.terms) push(var, f);
      if (phase_one_) push(n_, Eigen::MatrixXd::Identity(m.dim(), m.dim()));
      for (std::size_t a = 0; a < vars.size(); ++a) {
        grad[vars[a]] -= scaled[a].trace();
        for (std::size_t b = 0; b <= a; ++b) {
          const double hab = (scaled[a].array() * scaled[b].array()).sum();
          hess.emplace_back(vars[a], vars[b], hab);
          if (a != b) hess.emplace_back(vars[b], vars[a], hab);
        }
      }
    }
  }

  Eigen::MatrixXd matrix(const MatrixInequality& m, const Eigen::VectorXd& x) const {
    Eigen::MatrixXd s = m.constant;
    for (const auto& [i, f] : m.terms) s += x[i] * f;
    s.diagonal().array() += shift(x);
    return s;
  }

 private:
  void with_slack(const std::vector<std::pair<Index, double>>& terms, double slack_coeff,
                  std::vector<std::pair<Index, double>>& out) const {
    out.assign(terms.begin(), terms.end());
    if (phase_one_) out.emplace_back(n_, slack_coeff);
  }

  const Program& p_;
  double relax_;
  bool phase_one_;
  double box_;
  Index n_;
};

struct Equalities {
  SpMat a;
  Eigen::VectorXd b;  // a x = b
};

inline Equalities equality_system(const Program& p, Index cols) {
  Equalities eq;
  const auto m = static_cast<Index>(p.equalities.size());
  eq.a.resize(m, cols);
  eq.b.setZero(m);
  std::vector<Triplet> t;
  for (Index r = 0; r < m; ++r) {
    for (const auto& [i, c] : p.equalities[static_cast<std::size_t>(r)].terms) t.emplace_back(r, i, c);
    eq.b[r] = -p.equalities[static_cast<std::size_t>(r)].constant;
  }
  eq.a.setFromTriplets(t.begin(), t.end());
  return eq;
}

// Solves [H, A'; A, 0] [dx; y] = [r1; r2]. The system is equilibrated with
// D = diag(H)^-1/2 and unit-norm constraint rows, lightly regularized, and
// refined against the unregularized scaled matrix. A pivoting LU is used:
// near the end of a long barrier path the system is too indefinite for LDL'.
class KktSolver {
 public:
  bool solve(const SpMat& h, const SpMat& a, const Eigen::VectorXd& r1, const Eigen::VectorXd& r2,
             Eigen::VectorXd& dx) {
    const Index n = h.rows(), m = a.rows();
    Eigen::VectorXd d = h.diagonal();
    for (Index i = 0; i < n; ++i) d[i] = 1.0 / std::sqrt(std::max(d[i], 1e-300));
    SpMat hs = d.asDiagonal() * h * d.asDiagonal();
    SpMat as = a * d.asDiagonal();
    Eigen::VectorXd e = Eigen::VectorXd::Ones(m);
    {
      Eigen::VectorXd norm2 = Eigen::VectorXd::Zero(m);
      for (Index k = 0; k < as.outerSize(); ++k)
        for (SpMat::InnerIterator it(as, k); it; ++it) norm2[it.row()] += it.value() * it.value();
      for (Index i = 0; i < m; ++i) e[i] = norm2[i] > 0.0 ? 1.0 / std::sqrt(norm2[i]) : 1.0;
    }
    as = e.asDiagonal() * as;

    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(hs.nonZeros() + as.nonZeros() + n + m));
    for (Index k = 0; k < hs.outerSize(); ++k)
      for (SpMat::InnerIterator it(hs, k); it; ++it)
        t.emplace_back(it.row(), it.col(), it.value());
    for (Index k = 0; k < as.outerSize(); ++k)
      for (SpMat::InnerIterator it(as, k); it; ++it) {
        t.emplace_back(n + it.row(), it.col(), it.value());
        t.emplace_back(it.col(), n + it.row(), it.value());
      }
    for (Index i = 0; i < n; ++i) t.emplace_back(i, i, 1e-13);
    for (Index i = 0; i < m; ++i) t.emplace_back(n + i, n + i, -1e-13);

    SpMat k(n + m, n + m);
    k.setFromTriplets(t.begin(), t.end());
    k.makeCompressed();
    if (!analyzed_ || k.nonZeros() != nnz_) {
      lu_.analyzePattern(k);
      analyzed_ = true;
      nnz_ = k.nonZeros();
    }
    lu_.factorize(k);
    if (lu_.info() != Eigen::Success) return false;

    const Eigen::VectorXd b1 = d.cwiseProduct(r1), b2 = e.cwiseProduct(r2);
    Eigen::VectorXd rhs(n + m);
    rhs << b1, b2;
    Eigen::VectorXd sol = lu_.solve(rhs);
    for (int sweep = 0; sweep < 3; ++sweep) {
      Eigen::VectorXd res(n + m);
      res.head(n) = b1 - hs * sol.head(n) - as.transpose() * sol.tail(m);
      res.tail(m) = b2 - as * sol.head(n);
      sol += lu_.solve(res);
    }
    if (!sol.allFinite()) return false;
    dx = d.cwiseProduct(sol.head(n));
    return true;
  }

 private:
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
  bool analyzed_ = false;
  Index nnz_ = -1;
};

struct PathOutcome {
  bool ok = true;
  bool stopped_early = false;
  bool centered = false;  // last centering reached a small Newton decrement
  double t = 1.0;
  int steps = 0;
};

// Minimizes t c'x + phi(x) for an increasing sequence of t, starting from a
// strictly interior x that satisfies the equalities.
template <class Done, class EarlyStop>
PathOutcome follow_path(const Barrier& barrier, const Equalities& eq, const Eigen::VectorXd& c,
                        Eigen::VectorXd& x, double t, const Options& opt, Done done, EarlyStop early) {
  PathOutcome out;
  const Index d = barrier.dim();
  SpMat a = eq.a;
  if (a.cols() != d) a.conservativeResize(a.rows(), d);
  KktSolver kkt;
  Eigen::VectorXd grad, dx;
  std::vector<Triplet> trip;
  SpMat h(d, d);

  Eigen::VectorXd last_good;
  double last_t = t;
  for (int outer = 0; outer < opt.max_outer; ++outer) {
    out.centered = false;
    double best_lambda2 = std::numeric_limits<double>::infinity();
    int flat = 0;
    for (int it = 0; it < opt.max_newton; ++it) {
      barrier.derivatives(x, grad, trip);
      grad += t * c;
      h.setZero();
      h.setFromTriplets(trip.begin(), trip.end());
      Eigen::VectorXd r2 = eq.b - a * x;
      if (!kkt.solve(h, a, -grad, r2, dx)) {
        out.ok = false;
        return out;
      }
      ++out.steps;
      const double lambda2 = dx.dot(h * dx);
      if (lambda2 < 1e-11 && r2.lpNorm<Eigen::Infinity>() < 1e-12 * (1.0 + eq.b.lpNorm<Eigen::Infinity>())) {
        out.centered = true;
        break;
      }
      double slope = grad.dot(dx);
      if (slope >= 0.0 && r2.lpNorm<Eigen::Infinity>() > 0.0) {
        // Restoring the equalities costs objective here. Take the restoring
        // part on its own and line-search only the centering part.
        Eigen::VectorXd fix;
        if (!kkt.solve(h, a, Eigen::VectorXd::Zero(d), r2, fix)) {
          out.ok = false;
          return out;
        }
        double beta = 1.0;
        while (beta > 1e-12 && !std::isfinite(barrier.change(x, beta * fix))) beta *= 0.5;
        if (beta > 1e-12) x += beta * fix;
        dx -= fix;
        slope = grad.dot(dx);
      }
      double alpha = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls) {
        Eigen::VectorXd step = alpha * dx;
        const double df = t * c.dot(step) + barrier.change(x, step);
        if (std::isfinite(df) && df <= 0.01 * alpha * std::min(slope, 0.0) + 1e-14 * std::abs(t)) {
          x += step;
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        out.centered = lambda2 < 1e-6;
        break;
      }
      if (early(x)) {
        out.stopped_early = true;
        out.t = t;
        return out;
      }
      if (alpha == 1.0 && lambda2 < 1e-9) {
        out.centered = true;
        break;
      }
      // Full steps that no longer shrink the decrement are rounding noise.
      flat = (alpha == 1.0 && lambda2 < 1e-6 && lambda2 > 0.25 * best_lambda2) ? flat + 1 : 0;
      best_lambda2 = std::min(best_lambda2, lambda2);
      if (flat >= 3) {
        out.centered = true;
        break;
      }
    }
    out.t = t;
    if (!out.centered && last_good.size() > 0) {
      // Rounding stalled this centering; fall back to the last central point.
      x = last_good;
      out.t = last_t;
      out.centered = true;
      return out;
    }
    if (done(x, t)) return out;
    if (out.centered) {
      last_good = x;
      last_t = t;
    }
    t *= opt.mu;
  }
  out.t = t;
  return out;
}

}  // namespace detail

/// Solves the program; the returned x satisfies every cone strictly (or within
/// `relaxation` when the feasible set has empty interior).
inline Result solve(const Program& p, const Options& opt = {}) {
  using namespace detail;
  Result res;
  const Index n = p.num_vars;
  require(static_cast<Index>(p.cost.size()) == n, "conic: cost size mismatch");

  Equalities eq = equality_system(p, n);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  if (static_cast<Index>(p.hint.size()) == n)
    for (Index i = 0; i < n; ++i) x[i] = p.hint[static_cast<std::size_t>(i)];

  // Least-change projection onto the equality set.
  if (eq.a.rows() > 0) {
    SpMat aat = eq.a * SpMat(eq.a.transpose());
    for (Index i = 0; i < aat.rows(); ++i) aat.coeffRef(i, i) += 1e-12;
    Eigen::SimplicialLDLT<SpMat> ch(aat);
    for (int sweep = 0; sweep < 3; ++sweep) {
      Eigen::VectorXd r = eq.a * x - eq.b;
      x -= eq.a.transpose() * ch.solve(r);
    }
    if ((eq.a * x - eq.b).lpNorm<Eigen::Infinity>() > 1e-8 * (1.0 + eq.b.lpNorm<Eigen::Infinity>())) {
      res.status = Status::infeasible;
      res.x = x;
      return res;
    }
  }

  double relax = 0.0;
  Barrier plain(p, 0.0, false);
  if (!plain.interior(x)) {
    // Phase one: minimize s subject to every cone widened by s, s >= -1.
    Barrier b1(p, 0.0, true, opt.phase_one_box);
    Eigen::VectorXd y(n + 1);
    y.head(n) = x;
    double s0 = 1.0;
    for (const auto& f : p.inequalities) s0 = std::max(s0, -f(x) + 1.0);
    for (const auto& m : p.matrix_inequalities) {
      Eigen::MatrixXd s = m.constant;
      for (const auto& [i, f] : m.terms) s += x[i] * f;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
      s0 = std::max(s0, -es.eigenvalues().minCoeff() + 1.0);
    }
    y[n] = s0;
    for (int grow = 0; grow < 200 && !b1.interior(y); ++grow) y[n] *= 2.0;
    if (!b1.interior(y)) {
      res.status = Status::numerical_error;
      return res;
    }
    Eigen::VectorXd c1 = Eigen::VectorXd::Zero(n + 1);
    c1[n] = 1.0;
    const double nu1 = b1.parameter();
    double best = y[n];
    auto done = [&](const Eigen::VectorXd& z, double t) {
      best = std::min(best, z[n]);
      return nu1 / t < 1e-11 || z[n] - nu1 / t > opt.feasibility_tolerance;
    };
    auto early = [&](const Eigen::VectorXd& z) {
      best = std::min(best, z[n]);
      return z[n] < -opt.phase_one_target;
    };
    PathOutcome po = follow_path(b1, eq, c1, y, nu1 / std::max(1.0, y[n]), opt, done, early);
    res.newton_steps += po.steps;
    res.phase_one_slack = best;
    if (!po.ok && !(y[n] < 0.0)) {
      res.status = Status::numerical_error;
      res.x = y.head(n);
      return res;
    }
    const double s = y[n];
    if (!po.stopped_early) {
      const double lower = s - nu1 / po.t;
      if (lower > opt.feasibility_tolerance) {
        res.status = Status::infeasible;
        res.x = y.head(n);
        return res;
      }
      if (s >= -opt.relaxation_pad) {
        if (s > opt.feasibility_tolerance) {
          res.status = Status::infeasible;
          res.x = y.head(n);
          return res;
        }
        relax = std::max(s, 0.0) + opt.relaxation_pad;
      }
    }
    x = y.head(n);
  }

  Barrier b2(p, relax, false);
  if (!b2.interior(x)) {
    res.status = Status::numerical_error;
    res.x = x;
    return res;
  }
  res.relaxation = relax;

  Eigen::VectorXd c(n);
  for (Index i = 0; i < n; ++i) c[i] = p.cost[static_cast<std::size_t>(i)];
  const double cmax = c.lpNorm<Eigen::Infinity>();
  if (cmax == 0.0) {
    res.status = Status::optimal;
    res.x = x;
    res.objective = 0.0;
    return res;
  }
  const Eigen::VectorXd ch = c / cmax;
  const double nu = b2.parameter();
  const double obj0 = std::abs(ch.dot(x));
  const double floor = 1e-12;
  auto done = [&](const Eigen::VectorXd& z, double t) {
    return nu / t <= opt.gap_tolerance * std::max(std::abs(ch.dot(z)), floor);
  };
  auto never = [](const Eigen::VectorXd&) { return false; };
  const double t0 = nu / std::max(obj0, 1e-8);
  PathOutcome po = follow_path(b2, eq, ch, x, t0, opt, done, never);
  res.newton_steps += po.steps;
  res.x = x;
  res.objective = c.dot(x);
  res.gap_bound = cmax * nu / po.t;
  const bool converged = po.centered && done(x, po.t);
  res.status = (po.ok && converged) ? Status::optimal : Status::numerical_error;
  if (!converged && po.ok && po.centered) {
    // Accept a looser certificate rather than discarding a feasible point.
    const double rel = res.gap_bound / std::max(std::abs(res.objective), 1e-300);
    if (rel < 1e-5) res.status = Status::optimal;
  }
  return res;
}

}  // namespace hapcache::conic

#endif  // HAPCACHE_CONIC_HPP
