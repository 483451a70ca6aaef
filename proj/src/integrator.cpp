#include "drccmdp/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

namespace drccmdp {

std::string to_string(OdeMethod method) {
  switch (method) {
    case OdeMethod::kDormandPrince45:
      return "rk45";
    case OdeMethod::kRosenbrock4:
      return "rosenbrock4";
  }
  return "unknown";
}

OdeMethod ode_method_from_string(const std::string& name) {
  if (name == "rk45" || name == "dopri5") return OdeMethod::kDormandPrince45;
  if (name == "rosenbrock4" || name == "rosenbrock") return OdeMethod::kRosenbrock4;
  throw ValidationError("unknown integrator '" + name +
                        "' (expected rk45 or rosenbrock4)");
}

namespace {

struct Trial {
  VectorXd x_new;
  VectorXd err;
  bool finite = false;
};

class Stepper {
 public:
  virtual ~Stepper() = default;
  virtual int order() const = 0;
  virtual Trial attempt(const VectorXd& x, double h) = 0;
  /// Called once a trial is accepted, before x_new is projected.
  virtual void accept(const Trial& trial) = 0;
  /// State at fraction s of the last accepted step.
  virtual VectorXd dense(double s) const = 0;
};

class DormandPrince final : public Stepper {
 public:
  DormandPrince(const OdeSystem& sys, IntegratorStats& stats, const VectorXd& x0)
      : sys_(sys), stats_(stats) {
    k_.resize(x0.size(), 7);
    f0_ = eval(x0);
  }

  int order() const override { return 4; }

  Trial attempt(const VectorXd& x, double h) override {
    static constexpr double A[6][5] = {
        {0, 0, 0, 0, 0},
        {1.0 / 5, 0, 0, 0, 0},
        {3.0 / 40, 9.0 / 40, 0, 0, 0},
        {44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0},
        {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0},
        {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176,
         -5103.0 / 18656}};
    static constexpr double B[6] = {35.0 / 384,     0, 500.0 / 1113,
                                    125.0 / 192,    -2187.0 / 6784,
                                    11.0 / 84};
    static constexpr double E[7] = {-71.0 / 57600, 0, 71.0 / 16695,
                                    -71.0 / 1920,  17253.0 / 339200,
                                    -22.0 / 525,   1.0 / 40};
    x_old_ = x;
    h_ = h;
    k_.col(0) = f0_;
    for (int s = 1; s < 6; ++s) {
      VectorXd xs = x;
      for (int j = 0; j < s; ++j)
        if (A[s][j] != 0.0) xs += h * A[s][j] * k_.col(j);
      k_.col(s) = eval(xs);
    }
    Trial t;
    t.x_new = x;
    for (int j = 0; j < 6; ++j)
      if (B[j] != 0.0) t.x_new += h * B[j] * k_.col(j);
    k_.col(6) = eval(t.x_new);
    t.err = VectorXd::Zero(x.size());
    for (int j = 0; j < 7; ++j)
      if (E[j] != 0.0) t.err += h * E[j] * k_.col(j);
    t.finite = t.x_new.allFinite() && t.err.allFinite();
    return t;
  }

  void accept(const Trial& trial) override {
    x_new_ = trial.x_new;
    dense_k_ = k_;
    f0_ = k_.col(6);
  }

  /// The projection may move the state, so the cached derivative is reset.
  void reset(const VectorXd& x) { f0_ = eval(x); }

  VectorXd dense(double s) const override {
    static constexpr double P[7][4] = {
        {1, -8048581381.0 / 2820520608, 8663915743.0 / 2820520608,
         -12715105075.0 / 11282082432},
        {0, 0, 0, 0},
        {0, 131558114200.0 / 32700410799, -68118460800.0 / 10900136933,
         87487479700.0 / 32700410799},
        {0, -1754552775.0 / 470086768, 14199869525.0 / 1410260304,
         -10690763975.0 / 1880347072},
        {0, 127303824393.0 / 49829197408, -318862633887.0 / 49829197408,
         701980252875.0 / 199316789632},
        {0, -282668133.0 / 205662961, 2019193451.0 / 616988883,
         -1453857185.0 / 822651844},
        {0, 40617522.0 / 29380423, -110615467.0 / 29380423,
         69997945.0 / 29380423}};
    const double pw[4] = {s, s * s, s * s * s, s * s * s * s};
    VectorXd out = x_old_;
    for (int j = 0; j < 7; ++j) {
      double w = 0.0;
      for (int p = 0; p < 4; ++p) w += P[j][p] * pw[p];
      if (w != 0.0) out += h_ * w * dense_k_.col(j);
    }
    return out;
  }

 private:
  VectorXd eval(const VectorXd& x) {
    ++stats_.f_evals;
    if (!x.allFinite())
      return VectorXd::Constant(x.size(), std::numeric_limits<double>::quiet_NaN());
    return sys_.f(x);
  }

  const OdeSystem& sys_;
  IntegratorStats& stats_;
  MatrixXd k_, dense_k_;
  VectorXd f0_, x_old_, x_new_;
  double h_ = 0.0;
};

class Rosenbrock4 final : public Stepper {
 public:
  Rosenbrock4(const OdeSystem& sys, IntegratorStats& stats)
      : sys_(sys), stats_(stats) {
    if (!sys_.jacobian)
      throw ValidationError("the Rosenbrock method needs a Jacobian");
  }

  int order() const override { return 3; }

  Trial attempt(const VectorXd& x, double h) override {
    static constexpr double gamma = 0.25;
    static constexpr double c21 = -5.6688, a21 = 1.544;
    static constexpr double c31 = -2.430093356833875, c32 = -0.2063599157091915;
    static constexpr double a31 = 0.9466785280815826, a32 = 0.2557011698983284;
    static constexpr double c41 = -0.1073529058151375, c42 = -9.594562251023355,
                            c43 = -20.47028614809616;
    static constexpr double a41 = 3.314825187068521, a42 = 2.896124015972201,
                            a43 = 0.9986419139977817;
    static constexpr double c51 = 7.496443313967647, c52 = -10.24680431464352,
                            c53 = -33.99990352819905, c54 = 11.70890893206160;
    static constexpr double a51 = 1.221224509226641, a52 = 6.019134481288629,
                            a53 = 12.53708332932087, a54 = -0.6878860361058950;
    static constexpr double c61 = 8.083246795921522, c62 = -7.981132988064893,
                            c63 = -31.52159432874371, c64 = 16.31930543123136,
                            c65 = -6.058818238834054;
    Trial t;
    if (!have_jac_ || !(x_jac_.size() == x.size() && x_jac_ == x)) {
      ++stats_.jacobian_evals;
      J_ = sys_.jacobian(x);
      x_jac_ = x;
      have_jac_ = true;
    }
    MatrixXd W = -J_;
    W.diagonal().array() += 1.0 / (gamma * h);
    Eigen::PartialPivLU<MatrixXd> lu(W);
    auto f = [&](const VectorXd& v) -> VectorXd {
      ++stats_.f_evals;
      if (!v.allFinite())
        return VectorXd::Constant(v.size(), std::numeric_limits<double>::quiet_NaN());
      return sys_.f(v);
    };
    x_old_ = x;
    g1_ = lu.solve(f(x));
    g2_ = lu.solve(f(x + a21 * g1_) + c21 / h * g1_);
    g3_ = lu.solve(f(x + a31 * g1_ + a32 * g2_) + (c31 * g1_ + c32 * g2_) / h);
    g4_ = lu.solve(f(x + a41 * g1_ + a42 * g2_ + a43 * g3_) +
                   (c41 * g1_ + c42 * g2_ + c43 * g3_) / h);
    VectorXd xt = x + a51 * g1_ + a52 * g2_ + a53 * g3_ + a54 * g4_;
    g5_ = lu.solve(f(xt) + (c51 * g1_ + c52 * g2_ + c53 * g3_ + c54 * g4_) / h);
    xt += g5_;
    t.err = lu.solve(f(xt) + (c61 * g1_ + c62 * g2_ + c63 * g3_ + c64 * g4_ +
                              c65 * g5_) /
                                 h);
    t.x_new = xt + t.err;
    t.finite = t.x_new.allFinite() && t.err.allFinite();
    return t;
  }

  void accept(const Trial& trial) override {
    static constexpr double d21 = 10.12623508344586, d22 = -7.487995877610167,
                            d23 = -34.80091861555747, d24 = -7.992771707568823,
                            d25 = 1.025137723295662;
    static constexpr double d31 = -0.6762803392801253, d32 = 6.087714651680015,
                            d33 = 16.43084320892478, d34 = 24.76722511418386,
                            d35 = -6.594389125716872;
    x_new_ = trial.x_new;
    cont3_ = d21 * g1_ + d22 * g2_ + d23 * g3_ + d24 * g4_ + d25 * g5_;
    cont4_ = d31 * g1_ + d32 * g2_ + d33 * g3_ + d34 * g4_ + d35 * g5_;
    have_jac_ = false;
  }

  VectorXd dense(double s) const override {
    const double s1 = 1.0 - s;
    return x_old_ * s1 + s * (x_new_ + s1 * (cont3_ + s * cont4_));
  }

 private:
  const OdeSystem& sys_;
  IntegratorStats& stats_;
  MatrixXd J_;
  VectorXd x_jac_;
  bool have_jac_ = false;
  VectorXd g1_, g2_, g3_, g4_, g5_, x_old_, x_new_, cont3_, cont4_;
};

double error_norm(const VectorXd& err, const VectorXd& x0, const VectorXd& x1,
                  double atol, double rtol) {
  const auto scale =
      atol + rtol * x0.cwiseAbs().cwiseMax(x1.cwiseAbs()).array();
  return std::sqrt((err.array() / scale).square().mean());
}

}  // namespace

OdeSolution integrate_ode(const OdeSystem& system, const VectorXd& x0,
                          double t_end, const std::vector<double>& output_times,
                          const IntegratorOptions& options,
                          const StepObserver& observer) {
  if (!(t_end >= 0.0)) throw ValidationError("t_end must be nonnegative");
  if (!(options.rtol > 0.0 && options.atol > 0.0))
    throw ValidationError("tolerances must be positive");
  if (!std::is_sorted(output_times.begin(), output_times.end()))
    throw ValidationError("output times must be sorted");
  if (!x0.allFinite()) throw IntegrationError("non-finite initial state", 0.0, 0.0);

  OdeSolution sol;
  VectorXd x = x0;
  if (system.project) system.project(x);
  double t = 0.0;
  size_t next_out = 0;
  auto emit_until = [&](double upto, const std::function<VectorXd(double)>& at) {
    while (next_out < output_times.size() && output_times[next_out] <= upto) {
      VectorXd xs = at(output_times[next_out]);
      if (system.project) system.project(xs);
      sol.t.push_back(output_times[next_out]);
      sol.x.push_back(std::move(xs));
      ++next_out;
    }
  };
  emit_until(0.0, [&](double) { return x; });

  std::unique_ptr<Stepper> stepper;
  DormandPrince* dp = nullptr;
  if (options.method == OdeMethod::kDormandPrince45) {
    auto s = std::make_unique<DormandPrince>(system, sol.stats, x);
    dp = s.get();
    stepper = std::move(s);
  } else {
    stepper = std::make_unique<Rosenbrock4>(system, sol.stats);
  }

  const double exponent = 1.0 / (stepper->order() + 1);
  double h = std::min(options.initial_step, t_end);
  double prev_err = 1.0;
  long steps = 0;
  while (t < t_end) {
    if (++steps > options.max_steps) {
      std::ostringstream os;
      os << "step limit " << options.max_steps << " reached at t = " << t;
      throw IntegrationError(os.str(), t, 0.0);
    }
    if (options.max_step > 0.0) h = std::min(h, options.max_step);
    const bool last = h >= t_end - t;
    if (last) h = t_end - t;
    const double h_min = 16.0 * std::numeric_limits<double>::epsilon() *
                         std::max(1.0, std::abs(t));
    if (h < h_min) {
      std::ostringstream os;
      os << "step size underflow at t = " << t << " (h = " << h
         << ", error estimate " << prev_err << ")";
      throw IntegrationError(os.str(), t, prev_err);
    }
    Trial trial = stepper->attempt(x, h);
    const double err =
        trial.finite ? error_norm(trial.err, x, trial.x_new, options.atol,
                                  options.rtol)
                     : std::numeric_limits<double>::infinity();
    if (!std::isfinite(err)) {
      ++sol.stats.rejected;
      h *= 0.25;
      continue;
    }
    if (err > 1.0) {
      ++sol.stats.rejected;
      h *= std::max(0.2, 0.9 * std::pow(err, -exponent));
      continue;
    }
    stepper->accept(trial);
    const double t_new = last ? t_end : t + h;
    const double t_old = t;
    const double h_used = h;
    emit_until(t_new, [&](double ts) {
      return stepper->dense((ts - t_old) / h_used);
    });
    x = trial.x_new;
    if (system.project) system.project(x);
    if (dp && x != trial.x_new) dp->reset(x);
    t = t_new;
    ++sol.stats.accepted;
    sol.stats.last_step = h_used;

    double factor;
    if (options.method == OdeMethod::kDormandPrince45) {
      const double e = std::max(err, 1e-10);
      factor = 0.9 * std::pow(e, -0.7 * exponent) *
               std::pow(std::max(prev_err, 1e-10), 0.4 * exponent);
    } else {
      factor = err > 0.0 ? 0.9 * std::pow(err, -exponent) : 5.0;
    }
    h *= std::clamp(factor, 0.2, options.method == OdeMethod::kDormandPrince45 ? 10.0 : 5.0);
    prev_err = err;

    if (observer && !observer(t, x)) {
      sol.stopped_early = true;
      break;
    }
  }
  sol.t_final = t;
  sol.x_final = x;
  return sol;
}

}  // namespace drccmdp
