#include "drccmdp/convex_kernel.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace drccmdp {

namespace {

struct Eval {
  VectorXd c;
  MatrixXd Dc;  // m x n
  bool ok = false;
};

Eval evaluate_constraints(const ConvexProgram& p, const VectorXd& x) {
  Eval e;
  const int m = static_cast<int>(p.inequalities.size());
  e.c.resize(m);
  for (int i = 0; i < m; ++i) {
    e.c(i) = p.inequalities[i].value(x);
    if (!std::isfinite(e.c(i)) || e.c(i) >= 0.0) return e;
  }
  e.Dc.resize(m, p.n);
  for (int i = 0; i < m; ++i) e.Dc.row(i) = p.inequalities[i].gradient(x);
  e.ok = true;
  return e;
}

bool strictly_feasible(const ConvexProgram& p, const VectorXd& x) {
  for (const auto& c : p.inequalities) {
    const double v = c.value(x);
    if (!std::isfinite(v) || v >= 0.0) return false;
  }
  return true;
}

struct Residual {
  VectorXd dual, cent, pri;
  double norm() const {
    return std::sqrt(dual.squaredNorm() + cent.squaredNorm() + pri.squaredNorm());
  }
};

Residual residual(const ConvexProgram& p, const VectorXd& x, const Eval& e,
                  const VectorXd& lambda, const VectorXd& nu, double t) {
  Residual r;
  r.dual = p.objective.gradient(x);
  if (e.Dc.rows() > 0) r.dual += e.Dc.transpose() * lambda;
  if (p.A.rows() > 0) r.dual += p.A.transpose() * nu;
  r.cent = -(lambda.array() * e.c.array()).matrix() -
           VectorXd::Constant(lambda.size(), 1.0 / t);
  r.pri = p.A.rows() > 0 ? VectorXd(p.A * x - p.b) : VectorXd(0);
  return r;
}

using StopRule = std::function<bool(const VectorXd&)>;

KernelResult primal_dual(const ConvexProgram& p, const VectorXd& x0,
                         const KernelOptions& opt, const StopRule& early) {
  const int n = p.n;
  const int m = static_cast<int>(p.inequalities.size());
  const int q = static_cast<int>(p.A.rows());
  VectorXd x = x0;
  Eval e = evaluate_constraints(p, x);
  if (!e.ok) throw SolverError("interior-point start is not strictly feasible");
  VectorXd lambda = (-e.c).cwiseInverse();
  VectorXd nu = VectorXd::Zero(q);

  KernelResult out;
  for (int it = 0; it < opt.max_iterations; ++it) {
    const double eta = m > 0 ? -e.c.dot(lambda) : 0.0;
    const double t = m > 0 ? opt.mu * m / std::max(eta, 1e-300) : 1.0;
    Residual r = residual(p, x, e, lambda, nu, t);
    const double dual_inf = r.dual.norm();
    const double pri_inf = r.pri.size() ? r.pri.norm() : 0.0;
    out.iterations = it;
    if (early && early(x) && pri_inf <= opt.feas_tol) break;
    if (pri_inf <= opt.feas_tol && dual_inf <= opt.feas_tol &&
        eta <= opt.gap_tol)
      break;

    MatrixXd H = p.objective.hessian ? p.objective.hessian(x)
                                     : MatrixXd::Zero(n, n);
    for (int i = 0; i < m; ++i) {
      if (p.inequalities[i].hessian)
        H += lambda(i) * p.inequalities[i].hessian(x);
      const VectorXd gi = e.Dc.row(i).transpose();
      H += (lambda(i) / -e.c(i)) * gi * gi.transpose();
    }
    VectorXd rhs_x = -r.dual;
    if (m > 0)
      rhs_x -= e.Dc.transpose() * (r.cent.array() / e.c.array()).matrix();

    MatrixXd KKT = MatrixXd::Zero(n + q, n + q);
    KKT.topLeftCorner(n, n) = H;
    if (q > 0) {
      KKT.topRightCorner(n, q) = p.A.transpose();
      KKT.bottomLeftCorner(q, n) = p.A;
    }
    VectorXd rhs(n + q);
    rhs.head(n) = rhs_x;
    if (q > 0) rhs.tail(q) = -r.pri;
    Eigen::PartialPivLU<MatrixXd> lu(KKT);
    VectorXd sol = lu.solve(rhs);
    if (!sol.allFinite()) {
      const double reg = 1e-12 * std::max(1.0, H.cwiseAbs().maxCoeff());
      KKT.topLeftCorner(n, n) += reg * MatrixXd::Identity(n, n);
      if (q > 0) KKT.bottomRightCorner(q, q) -= reg * MatrixXd::Identity(q, q);
      sol = Eigen::FullPivLU<MatrixXd>(KKT).solve(rhs);
      if (!sol.allFinite()) throw SolverError("singular Newton system");
    }
    const VectorXd dx = sol.head(n);
    const VectorXd dnu = sol.tail(q);
    VectorXd dlambda(m);
    if (m > 0)
      dlambda = ((r.cent.array() - lambda.array() * (e.Dc * dx).array()) /
                 e.c.array())
                    .matrix();

    double smax = 1.0;
    for (int i = 0; i < m; ++i)
      if (dlambda(i) < 0.0) smax = std::min(smax, -lambda(i) / dlambda(i));
    double s = 0.99 * smax;
    const double r0 = r.norm();
    bool accepted = false;
    for (int ls = 0; ls < 200; ++ls, s *= 0.5) {
      const VectorXd xn = x + s * dx;
      Eval en = evaluate_constraints(p, xn);
      if (!en.ok) continue;
      const VectorXd ln = lambda + s * dlambda;
      const VectorXd nn = nu + s * dnu;
      const Residual rn = residual(p, xn, en, ln, nn, t);
      if (rn.norm() <= (1.0 - 0.01 * s) * r0 || s < 1e-14) {
        x = xn;
        lambda = ln;
        nu = nn;
        e = std::move(en);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    if (it + 1 == opt.max_iterations)
      out.iterations = opt.max_iterations;
  }

  out.x = x;
  out.lambda = lambda;
  out.nu = nu;
  out.value = p.objective.value(x);
  out.surrogate_gap = m > 0 ? -e.c.dot(lambda) : 0.0;
  Residual r = residual(p, x, e, lambda, nu, 1e300);
  double kkt = r.dual.size() ? r.dual.cwiseAbs().maxCoeff() : 0.0;
  if (r.pri.size()) kkt = std::max(kkt, r.pri.cwiseAbs().maxCoeff());
  if (m > 0)
    kkt = std::max(kkt, (lambda.array() * e.c.array()).abs().maxCoeff());
  out.kkt_residual = kkt;
  return out;
}

}  // namespace

ConvexFunction affine_function(VectorXd a, double c) {
  ConvexFunction f;
  f.value = [a, c](const VectorXd& x) { return a.dot(x) + c; };
  f.gradient = [a](const VectorXd&) { return a; };
  return f;
}

KernelResult convex_kernel(const ConvexProgram& program, const VectorXd& start,
                           const KernelOptions& options) {
  if (start.size() != program.n)
    throw ValidationError("kernel start has wrong dimension");
  VectorXd x0 = start;
  int phase1_iterations = 0;
  if (!strictly_feasible(program, start)) {
    const int n = program.n;
    double worst = 0.0;
    for (const auto& c : program.inequalities) {
      const double v = c.value(start);
      if (!std::isfinite(v))
        throw SolverError("constraint not finite at the kernel start point");
      worst = std::max(worst, v);
    }
    ConvexProgram aux;
    aux.n = n + 1;
    VectorXd unit_s = VectorXd::Zero(n + 1);
    unit_s(n) = 1.0;
    aux.objective = affine_function(unit_s, 0.0);
    for (const auto& c : program.inequalities) {
      ConvexFunction shifted;
      shifted.value = [c, n](const VectorXd& y) {
        return c.value(y.head(n)) - y(n);
      };
      shifted.gradient = [c, n](const VectorXd& y) {
        VectorXd g(n + 1);
        g.head(n) = c.gradient(y.head(n));
        g(n) = -1.0;
        return g;
      };
      if (c.hessian)
        shifted.hessian = [c, n](const VectorXd& y) {
          MatrixXd H = MatrixXd::Zero(n + 1, n + 1);
          H.topLeftCorner(n, n) = c.hessian(y.head(n));
          return H;
        };
      aux.inequalities.push_back(std::move(shifted));
    }
    aux.inequalities.push_back(affine_function(-unit_s, -1.0));
    aux.A = MatrixXd::Zero(program.A.rows(), n + 1);
    if (program.A.rows() > 0) aux.A.leftCols(n) = program.A;
    aux.b = program.b;
    VectorXd y0(n + 1);
    y0.head(n) = start;
    y0(n) = worst + 1.0;
    const KernelResult ph1 = primal_dual(
        aux, y0, options, [n](const VectorXd& y) { return y(n) < -1e-9; });
    phase1_iterations = ph1.iterations;
    if (!(ph1.x(n) < 0.0)) {
      std::ostringstream os;
      os << "no strictly feasible point (phase-1 optimum " << ph1.x(n) << ")";
      throw SolverError(os.str());
    }
    x0 = ph1.x.head(n);
  }
  KernelResult out = primal_dual(program, x0, options, nullptr);
  out.phase1_iterations = phase1_iterations;
  if (out.iterations >= options.max_iterations ||
      out.kkt_residual > 1e3 * options.feas_tol) {
    std::ostringstream os;
    os << "interior-point method stopped after " << out.iterations
       << " iterations with KKT residual " << out.kkt_residual;
    throw SolverError(os.str());
  }
  return out;
}

}  // namespace drccmdp
