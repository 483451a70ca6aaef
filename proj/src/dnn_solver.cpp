#include "drccmdp/dnn_solver.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace drccmdp {

const std::array<const char*, DnnLayout::kNumBlocks> DnnLayout::kBlockNames = {
    "tau", "x", "beta", "chi", "zeta", "theta1", "theta2", "varrho"};

DnnLayout::DnnLayout(const ConstraintCounts& c) {
  size_ = {c.tau, c.x, c.phi, c.g, c.h, c.omega, c.omega, c.nu};
  int off = 0;
  for (int b = 0; b < kNumBlocks; ++b) {
    offset_[b] = off;
    off += size_[b];
  }
  dim_ = off;
}

VectorXd DnnLayout::pack(const DnnState& s) const {
  const Multipliers& m = s.multipliers;
  if (s.tau.size() != size_[kTau] || s.x.size() != size_[kX] ||
      m.beta.size() != size_[kBeta] || m.chi.size() != size_[kChi] ||
      m.theta1.size() != size_[kTheta1] || m.theta2.size() != size_[kTheta2] ||
      m.varrho.size() != size_[kVarrho])
    throw ValidationError("DNN state blocks do not match the layout");
  VectorXd z(dim_);
  z.segment(offset_[kTau], size_[kTau]) = s.tau;
  z.segment(offset_[kX], size_[kX]) = s.x;
  z.segment(offset_[kBeta], size_[kBeta]) = m.beta;
  z.segment(offset_[kChi], size_[kChi]) = m.chi;
  z(offset_[kZeta]) = m.zeta;
  z.segment(offset_[kTheta1], size_[kTheta1]) = m.theta1;
  z.segment(offset_[kTheta2], size_[kTheta2]) = m.theta2;
  z.segment(offset_[kVarrho], size_[kVarrho]) = m.varrho;
  return z;
}

DnnState DnnLayout::unpack(const VectorXd& z) const {
  if (z.size() != dim_)
    throw ValidationError("DNN state has dimension " + std::to_string(z.size()) +
                          ", expected " + std::to_string(dim_));
  DnnState s;
  s.tau = z.segment(offset_[kTau], size_[kTau]);
  s.x = z.segment(offset_[kX], size_[kX]);
  s.multipliers.beta = z.segment(offset_[kBeta], size_[kBeta]);
  s.multipliers.chi = z.segment(offset_[kChi], size_[kChi]);
  s.multipliers.zeta = z(offset_[kZeta]);
  s.multipliers.theta1 = z.segment(offset_[kTheta1], size_[kTheta1]);
  s.multipliers.theta2 = z.segment(offset_[kTheta2], size_[kTheta2]);
  s.multipliers.varrho = z.segment(offset_[kVarrho], size_[kVarrho]);
  return s;
}

namespace {

using L = DnnLayout;

double pos(double v) { return v > 0.0 ? v : 0.0; }
double ind(double v) { return v > 0.0 ? 1.0 : 0.0; }

// Per-constraint quantities shared by the field and its Jacobian.
struct PhiTerms {
  double n = 0.0;          // exact norm
  double n_s = 0.0;        // smoothed norm
  VectorXd sigma_tau;
  double c = 0.0, dc = 0.0, ddc = 0.0;
  double phi = 0.0;
  VectorXd grad_tau;
  double grad_x = 0.0;
};

PhiTerms phi_terms(const ConstraintBundle& b, int k, const VectorXd& tau,
                   double x) {
  const MomentAmbiguity& amb = b.problem().constraints[k];
  PhiTerms t;
  t.sigma_tau = amb.sigma * tau;
  t.n = std::sqrt(std::max(0.0, tau.dot(t.sigma_tau)));
  t.n_s = std::sqrt(t.n * t.n + kNormSmoothing * kNormSmoothing);
  t.c = risk_coefficient(x, amb);
  t.dc = risk_coefficient_dx(x, amb);
  t.ddc = risk_coefficient_dxx(x, amb);
  t.phi = t.c * t.n - tau.dot(amb.mu) + b.problem().xi(k);
  t.grad_tau = t.c * t.sigma_tau / t.n_s - amb.mu;
  t.grad_x = t.dc * t.n;
  return t;
}

}  // namespace

DnnState default_initial_state(const DrccmdpProblem& p) {
  const int L = p.mdp.num_pairs(), K = p.num_constraints(), S = p.mdp.num_states;
  DnnState s;
  s.tau = VectorXd::Constant(L, 1e-3);
  s.x = VectorXd::Constant(K, std::log(p.eps_hat) / K);
  s.multipliers = {VectorXd::Constant(K, 1e-4), VectorXd::Constant(K, 1e-4), 1e-4,
                   VectorXd::Constant(S, 1e-4), VectorXd::Constant(S, 1e-4),
                   VectorXd::Constant(L, 1e-4)};
  return s;
}

DnnSystem::DnnSystem(ConstraintBundle bundle, DnnOptions options)
    : bundle_(std::move(bundle)),
      options_(options),
      layout_(bundle_.counts()) {
  if (!(options_.kappa > 0.0)) throw ValidationError("kappa must be positive");
  if (!(options_.x_margin >= -kXDomainGuard))
    throw ValidationError("x_margin must be at least 1e-12");
}

VectorXd DnnSystem::raw_field(const VectorXd& z) const {
  const DnnState s = layout_.unpack(z);
  const Multipliers& m = s.multipliers;
  const int K = bundle_.num_constraints();
  const MatrixXd& M = bundle_.M();

  VectorXd dtau = bundle_.grad_f(s.tau);
  VectorXd dx = VectorXd::Zero(K);
  VectorXd B(K), C(K);
  for (int k = 0; k < K; ++k) {
    const PhiTerms p = phi_terms(bundle_, k, s.tau, s.x(k));
    B(k) = pos(m.beta(k) + p.phi);
    C(k) = pos(m.chi(k) + s.x(k));
    dtau += B(k) * p.grad_tau;
    dx(k) = p.grad_x * B(k) + C(k);
  }
  const double Z = pos(m.zeta + bundle_.log_eps_hat() - s.x.sum());
  dx.array() -= Z;
  const VectorXd omega = bundle_.omega(s.tau);
  const VectorXd T1 = (m.theta1 + omega).cwiseMax(0.0);
  const VectorXd T2 = (m.theta2 - omega).cwiseMax(0.0);
  const VectorXd V = (m.varrho - s.tau).cwiseMax(0.0);
  dtau += M.transpose() * (T1 - T2) - V;

  VectorXd out(layout_.dimension());
  out.segment(layout_.offset(L::kTau), layout_.size(L::kTau)) = -dtau;
  out.segment(layout_.offset(L::kX), K) = -dx;
  out.segment(layout_.offset(L::kBeta), K) = B - m.beta;
  out.segment(layout_.offset(L::kChi), K) = C - m.chi;
  out(layout_.offset(L::kZeta)) = Z - m.zeta;
  out.segment(layout_.offset(L::kTheta1), T1.size()) = T1 - m.theta1;
  out.segment(layout_.offset(L::kTheta2), T2.size()) = T2 - m.theta2;
  out.segment(layout_.offset(L::kVarrho), V.size()) = V - m.varrho;
  return options_.kappa * out;
}

MatrixXd DnnSystem::raw_jacobian(const VectorXd& z) const {
  const DnnState s = layout_.unpack(z);
  const Multipliers& m = s.multipliers;
  const int K = bundle_.num_constraints();
  const int Ls = bundle_.num_pairs();
  const int S = bundle_.num_states();
  const MatrixXd& M = bundle_.M();
  const int ot = layout_.offset(L::kTau), ox = layout_.offset(L::kX),
            ob = layout_.offset(L::kBeta), oc = layout_.offset(L::kChi),
            oz = layout_.offset(L::kZeta), o1 = layout_.offset(L::kTheta1),
            o2 = layout_.offset(L::kTheta2), ov = layout_.offset(L::kVarrho);

  MatrixXd J = MatrixXd::Zero(layout_.dimension(), layout_.dimension());
  MatrixXd Jtt = bundle_.hess_f(s.tau);

  const double az = ind(m.zeta + bundle_.log_eps_hat() - s.x.sum());
  for (int k = 0; k < K; ++k) {
    const MomentAmbiguity& amb = bundle_.problem().constraints[k];
    const PhiTerms p = phi_terms(bundle_, k, s.tau, s.x(k));
    const double Bk = pos(m.beta(k) + p.phi);
    const double ak = ind(m.beta(k) + p.phi);
    const double ack = ind(m.chi(k) + s.x(k));
    const VectorXd dgrad_dx = p.dc * p.sigma_tau / p.n_s;
    if (Bk > 0.0)
      Jtt += Bk * p.c *
             (amb.sigma / p.n_s -
              p.sigma_tau * p.sigma_tau.transpose() / (p.n_s * p.n_s * p.n_s));
    Jtt += ak * p.grad_tau * p.grad_tau.transpose();

    const VectorXd cross = Bk * dgrad_dx + ak * p.grad_x * p.grad_tau;
    J.block(ot, ox + k, Ls, 1) = -cross;
    J.block(ot, ob + k, Ls, 1) = -ak * p.grad_tau;

    J.block(ox + k, ot, 1, Ls) = -cross.transpose();
    J(ox + k, ox + k) = -(Bk * p.ddc * p.n + ak * p.grad_x * p.grad_x + ack);
    J(ox + k, ob + k) = -ak * p.grad_x;
    J(ox + k, oc + k) = -ack;
    J(ox + k, oz) = az;

    J.block(ob + k, ot, 1, Ls) = ak * p.grad_tau.transpose();
    J(ob + k, ox + k) = ak * p.grad_x;
    J(ob + k, ob + k) = ak - 1.0;

    J(oc + k, ox + k) = ack;
    J(oc + k, oc + k) = ack - 1.0;
  }
  J.block(ox, ox, K, K).array() -= az;
  J.block(oz, ox, 1, K).setConstant(-az);
  J(oz, oz) = az - 1.0;

  const VectorXd omega = bundle_.omega(s.tau);
  VectorXd a1(S), a2(S), av(Ls);
  for (int i = 0; i < S; ++i) {
    a1(i) = ind(m.theta1(i) + omega(i));
    a2(i) = ind(m.theta2(i) - omega(i));
  }
  for (int i = 0; i < Ls; ++i) av(i) = ind(m.varrho(i) - s.tau(i));

  Jtt += M.transpose() * (a1 + a2).asDiagonal() * M;
  Jtt += av.asDiagonal();
  J.block(ot, ot, Ls, Ls) = -Jtt;
  J.block(ot, o1, Ls, S) = -M.transpose() * a1.asDiagonal();
  J.block(ot, o2, Ls, S) = M.transpose() * a2.asDiagonal();
  J.block(ot, ov, Ls, Ls) = av.asDiagonal();

  J.block(o1, ot, S, Ls) = a1.asDiagonal() * M;
  J.block(o1, o1, S, S) = (a1.array() - 1.0).matrix().asDiagonal();
  J.block(o2, ot, S, Ls) = -(a2.asDiagonal() * M);
  J.block(o2, o2, S, S) = (a2.array() - 1.0).matrix().asDiagonal();
  J.block(ov, ot, Ls, Ls) = -MatrixXd(av.asDiagonal());
  J.block(ov, ov, Ls, Ls) = (av.array() - 1.0).matrix().asDiagonal();
  return options_.kappa * J;
}

void DnnSystem::clamp_in_place(VectorXd& z) const {
  const int ox = layout_.offset(L::kX);
  for (int k = 0; k < layout_.size(L::kX); ++k)
    z(ox + k) = std::min(z(ox + k), -options_.x_margin);
}

VectorXd DnnSystem::clamp(const VectorXd& z) const {
  VectorXd out = z;
  clamp_in_place(out);
  return out;
}

VectorXd DnnSystem::integration_field(const VectorXd& z) const {
  return raw_field(clamp(z));
}

MatrixXd DnnSystem::integration_jacobian(const VectorXd& z) const {
  MatrixXd J = raw_jacobian(clamp(z));
  const int ox = layout_.offset(L::kX);
  for (int k = 0; k < layout_.size(L::kX); ++k)
    if (z(ox + k) >= -options_.x_margin) J.col(ox + k).setZero();
  return J;
}

VectorXd DnnSystem::field(const VectorXd& z) const {
  VectorXd d = integration_field(z);
  const int ox = layout_.offset(L::kX);
  for (int k = 0; k < layout_.size(L::kX); ++k)
    if (z(ox + k) >= -options_.x_margin && d(ox + k) > 0.0) d(ox + k) = 0.0;
  return d;
}

VectorXd DnnSystem::plus_arguments(const VectorXd& z) const {
  const DnnState s = layout_.unpack(z);
  const Multipliers& m = s.multipliers;
  const int K = bundle_.num_constraints();
  const int S = bundle_.num_states();
  const int Ls = bundle_.num_pairs();
  VectorXd out(2 * K + 1 + 2 * S + Ls);
  for (int k = 0; k < K; ++k) {
    out(k) = m.beta(k) + bundle_.phi(k, s.tau, s.x(k));
    out(K + k) = m.chi(k) + s.x(k);
  }
  out(2 * K) = m.zeta + bundle_.log_eps_hat() - s.x.sum();
  const VectorXd omega = bundle_.omega(s.tau);
  out.segment(2 * K + 1, S) = m.theta1 + omega;
  out.segment(2 * K + 1 + S, S) = m.theta2 - omega;
  out.segment(2 * K + 1 + 2 * S, Ls) = m.varrho - s.tau;
  return out;
}

double DnnSystem::objective(const VectorXd& z) const {
  return bundle_.f(z.segment(layout_.offset(L::kTau), layout_.size(L::kTau)));
}

VectorXd vector_field(const VectorXd& z, const ConstraintBundle& bundle,
                      double kappa) {
  DnnOptions opt;
  opt.kappa = kappa;
  return DnnSystem(bundle, opt).raw_field(z);
}

std::array<double, DnnLayout::kNumBlocks> block_norms(const VectorXd& dz,
                                                      const DnnLayout& layout) {
  std::array<double, DnnLayout::kNumBlocks> out{};
  for (int b = 0; b < DnnLayout::kNumBlocks; ++b) {
    const auto blk = static_cast<DnnLayout::Block>(b);
    out[b] = dz.segment(layout.offset(blk), layout.size(blk)).norm();
  }
  return out;
}

double accuracy_of(const VectorXd& dz, const DnnLayout& layout) {
  double eps = 0.0;
  for (double v : block_norms(dz, layout)) eps = std::max(eps, v);
  return eps;
}

double accuracy(const VectorXd& z, const DnnSystem& system) {
  return accuracy_of(system.field(z), system.layout());
}

double accuracy(const VectorXd& z, const ConstraintBundle& bundle) {
  return accuracy_of(vector_field(z, bundle), DnnLayout(bundle.counts()));
}

KktReport kkt_residual(const VectorXd& tau, const VectorXd& x,
                       const Multipliers& m, const ConstraintBundle& bundle) {
  const int K = bundle.num_constraints();
  KktReport r;
  VectorXd st = bundle.grad_f(tau);
  VectorXd sx = m.chi;
  VectorXd phi(K);
  for (int k = 0; k < K; ++k) {
    const PhiGradient g = bundle.grad_phi(k, tau, x(k));
    phi(k) = bundle.phi(k, tau, x(k));
    st += m.beta(k) * g.d_tau;
    sx(k) += m.beta(k) * g.d_x;
  }
  sx.array() -= m.zeta;
  st += bundle.M().transpose() * (m.theta1 - m.theta2) - m.varrho;
  r.stationarity_tau = st.norm();
  r.stationarity_x = sx.norm();

  const CouplingValues cv = bundle.coupling(x);
  const VectorXd omega = bundle.omega(tau);
  double comp = 0.0;
  comp = std::max(comp, (m.beta.array() * phi.array()).abs().maxCoeff());
  comp = std::max(comp, (m.chi.array() * cv.g.array()).abs().maxCoeff());
  comp = std::max(comp, std::abs(m.zeta * cv.h));
  comp = std::max(comp, (m.theta1.array() * omega.array()).abs().maxCoeff());
  comp = std::max(comp, (m.theta2.array() * omega.array()).abs().maxCoeff());
  comp = std::max(comp, (m.varrho.array() * tau.array()).abs().maxCoeff());
  r.complementarity = comp;

  double neg = std::max(0.0, -m.zeta);
  neg = std::max(neg, (-m.beta).maxCoeff());
  neg = std::max(neg, (-m.chi).maxCoeff());
  neg = std::max(neg, (-m.theta1).maxCoeff());
  neg = std::max(neg, (-m.theta2).maxCoeff());
  neg = std::max(neg, (-m.varrho).maxCoeff());
  r.dual_sign = std::max(0.0, neg);

  double pri = std::max(0.0, phi.maxCoeff());
  pri = std::max(pri, cv.g.maxCoeff());
  pri = std::max(pri, cv.h);
  pri = std::max(pri, omega.cwiseAbs().maxCoeff());
  pri = std::max(pri, (-tau).maxCoeff());
  r.primal = std::max(0.0, pri);

  r.max = std::max({r.stationarity_tau, r.stationarity_x, r.complementarity,
                    r.dual_sign, r.primal});
  return r;
}

JacobianCertificate jacobian(const VectorXd& z, const ConstraintBundle& bundle,
                             double tol, double step) {
  const DnnSystem sys(bundle);
  const int n = sys.layout().dimension();
  JacobianCertificate c;
  c.analytic = sys.raw_jacobian(z);
  c.finite_difference.resize(n, n);

  const VectorXd args0 = sys.plus_arguments(z);
  c.kink_distance = args0.cwiseAbs().minCoeff();
  auto same_pattern = [&](const VectorXd& args) {
    for (int i = 0; i < args.size(); ++i)
      if ((args(i) > 0.0) != (args0(i) > 0.0)) return false;
    return true;
  };
  bool crossed = false;
  const int ox = sys.layout().offset(DnnLayout::kX);
  for (int j = 0; j < n; ++j) {
    const double h = step * std::max(1.0, std::abs(z(j)));
    VectorXd zp = z, zm = z;
    zp(j) += h;
    zm(j) -= h;
    const bool x_col = j >= ox && j < ox + sys.layout().size(DnnLayout::kX);
    if (x_col && !(zp(j) < kXDomainGuard)) {
      c.indeterminate = true;
      c.status = "indeterminate: x stencil leaves the domain";
      c.finite_difference.col(j) = c.analytic.col(j);
      continue;
    }
    crossed |= !same_pattern(sys.plus_arguments(zp)) ||
               !same_pattern(sys.plus_arguments(zm));
    c.finite_difference.col(j) =
        (sys.raw_field(zp) - sys.raw_field(zm)) / (2.0 * h);
  }
  if (crossed) {
    c.indeterminate = true;
    c.status = "indeterminate at active-set boundary";
  }
  c.mismatch = ((c.analytic - c.finite_difference).array().abs() /
                c.analytic.array().abs().max(1.0))
                   .maxCoeff();

  auto max_sym_eig = [](const MatrixXd& A) {
    const MatrixXd S = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(S, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
  };
  c.max_symmetric_eigenvalue = max_sym_eig(c.finite_difference);
  c.analytic_max_symmetric_eigenvalue = max_sym_eig(c.analytic);
  c.negative_semidefinite = c.max_symmetric_eigenvalue <= tol;
  if (!c.indeterminate) {
    std::ostringstream os;
    os << (c.negative_semidefinite ? "negative semidefinite" : "not negative semidefinite")
       << " (max eigenvalue " << c.max_symmetric_eigenvalue << ")";
    c.status = os.str();
  }
  return c;
}

double lyapunov_value(const VectorXd& z, const VectorXd& z_star,
                      const DnnSystem& system) {
  return system.field(z).squaredNorm() + 0.5 * (z - z_star).squaredNorm();
}

double lyapunov_value(const VectorXd& z, const VectorXd& z_star,
                      const ConstraintBundle& bundle) {
  return vector_field(z, bundle).squaredNorm() +
         0.5 * (z - z_star).squaredNorm();
}

std::vector<double> uniform_times(double t_end, int intervals) {
  if (intervals < 1) throw ValidationError("need at least one interval");
  std::vector<double> t(intervals + 1);
  for (int i = 0; i <= intervals; ++i)
    t[i] = t_end * static_cast<double>(i) / intervals;
  t.back() = t_end;
  return t;
}

Trajectory integrate(const DnnSystem& system, const VectorXd& z0, double t_end,
                     const DnnRunOptions& options) {
  const DnnLayout& layout = system.layout();
  if (z0.size() != layout.dimension())
    throw ValidationError("initial state has dimension " +
                          std::to_string(z0.size()) + ", expected " +
                          std::to_string(layout.dimension()));
  const int ox = layout.offset(DnnLayout::kX);
  for (int k = 0; k < layout.size(DnnLayout::kX); ++k)
    if (!(z0(ox + k) < kXDomainGuard))
      throw ValidationError("initial x must be strictly negative");

  OdeSystem ode;
  ode.f = [&](const VectorXd& z) { return system.integration_field(z); };
  ode.jacobian = [&](const VectorXd& z) {
    return system.integration_jacobian(z);
  };
  ode.project = [&](VectorXd& z) { system.clamp_in_place(z); };

  Trajectory traj;
  const int K = system.bundle().num_constraints();
  const int S = system.bundle().num_states();
  auto constraint_name = [&](int i, int& index) -> std::string {
    if (i < K) return index = i, "phi";
    if (i < 2 * K) return index = i - K, "g";
    if (i == 2 * K) return index = 0, "h";
    if (i < 2 * K + 1 + S) return index = i - 2 * K - 1, "omega+";
    if (i < 2 * K + 1 + 2 * S) return index = i - 2 * K - 1 - S, "omega-";
    return index = i - 2 * K - 1 - 2 * S, "nu";
  };
  VectorXd pattern = system.plus_arguments(system.clamp(z0));
  int below = 0;
  StepObserver observer = [&](double t, const VectorXd& z) {
    if (options.record_events) {
      const VectorXd args = system.plus_arguments(z);
      for (int i = 0; i < args.size(); ++i) {
        if ((args(i) > 0.0) != (pattern(i) > 0.0)) {
          ActiveSetEvent e;
          e.t = t;
          e.constraint = constraint_name(i, e.index);
          e.active = args(i) > 0.0;
          traj.events.push_back(std::move(e));
        }
      }
      pattern = args;
    }
    if (options.stop_accuracy > 0.0) {
      if (accuracy(z, system) <= options.stop_accuracy) {
        if (++below >= options.stop_window) return false;
      } else {
        below = 0;
      }
    }
    return true;
  };

  const OdeSolution sol = integrate_ode(ode, z0, t_end, options.output_times,
                                        options.integrator, observer);
  traj.t = sol.t;
  traj.z = sol.x;
  traj.stats = sol.stats;
  traj.t_final = sol.t_final;
  traj.z_final = sol.x_final;
  traj.reached_equilibrium = sol.stopped_early;
  if (traj.t.empty() || traj.t.back() < traj.t_final) {
    traj.t.push_back(traj.t_final);
    traj.z.push_back(traj.z_final);
  }
  const size_t n = traj.t.size();
  traj.accuracy.resize(n);
  traj.lyapunov.resize(n);
  traj.objective.resize(n);
  for (size_t i = 0; i < n; ++i) {
    traj.accuracy[i] = accuracy(traj.z[i], system);
    traj.lyapunov[i] = lyapunov_value(traj.z[i], traj.z_final, system);
    traj.objective[i] = system.objective(traj.z[i]);
  }
  return traj;
}

}  // namespace drccmdp
