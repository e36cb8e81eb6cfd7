#include "ebridge/control_law.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ebridge/error.hpp"

namespace ebridge {

namespace {

class ZeroLaw final : public ControlLaw {
 public:
  explicit ZeroLaw(int m) : m_(m) {}
  int input_dim() const override { return m_; }

  std::unique_ptr<PathController> start() const override {
    class Ctl final : public PathController {
     public:
      explicit Ctl(int m) : u_(Vector::Zero(m)) {}
      Vector control(int, const Vector&) override { return u_; }
      void observe_noise(int, const Vector&) override {}

     private:
      Vector u_;
    };
    return std::make_unique<Ctl>(m_);
  }

 private:
  int m_;
};

class TabulatedLaw final : public ControlLaw {
 public:
  explicit TabulatedLaw(std::vector<Vector> u) : u_(std::move(u)) {}
  int input_dim() const override { return static_cast<int>(u_[0].size()); }

  std::unique_ptr<PathController> start() const override {
    class Ctl final : public PathController {
     public:
      explicit Ctl(const std::vector<Vector>& u) : u_(u) {}
      Vector control(int step, const Vector&) override { return u_.at(step); }
      void observe_noise(int, const Vector&) override {}

     private:
      const std::vector<Vector>& u_;
    };
    return std::make_unique<Ctl>(u_);
  }

 private:
  std::vector<Vector> u_;
};

// Shared streaming evaluator for both feedforward laws: per-step response
// matrices R_j feed an accumulator z, and u_i = Phi_i^T (w - sqrt(eps) z_i).
struct FeedforwardTables {
  std::vector<Matrix> phi;        // Phi(t_f, t_i), i = 0..k-1
  std::vector<Matrix> response;   // R_j, consumed against dW_j
  std::vector<int> bad_step;      // steps whose response is unusable (continuous law only)
  std::vector<double> bad_time;
  Vector steering;                // w
  double sqrt_eps = 0.0;
  int state_dim = 0;
};

class FeedforwardLaw final : public ControlLaw {
 public:
  explicit FeedforwardLaw(FeedforwardTables tables) : t_(std::move(tables)) {}
  int input_dim() const override { return static_cast<int>(t_.phi[0].cols()); }

  std::unique_ptr<PathController> start() const override {
    class Ctl final : public PathController {
     public:
      explicit Ctl(const FeedforwardTables& t) : t_(t), z_(Vector::Zero(t.state_dim)) {}

      Vector control(int step, const Vector&) override {
        if (pending_bad_ >= 0 && step > pending_bad_)
          fail(ErrorCode::singular_gramian,
               "feedforward control: Gramian singular at t=" + std::to_string(pending_time_));
        return t_.phi.at(step).transpose() * (t_.steering - t_.sqrt_eps * z_);
      }

      void observe_noise(int step, const Vector& dw) override {
        for (size_t b = 0; b < t_.bad_step.size(); ++b)
          if (t_.bad_step[b] == step) {
            if (pending_bad_ < 0) {
              pending_bad_ = step;
              pending_time_ = t_.bad_time[b];
            }
            return;  // increment can never be consumed
          }
        z_.noalias() += t_.response.at(step) * dw;
      }

     private:
      const FeedforwardTables& t_;
      Vector z_;
      int pending_bad_ = -1;
      double pending_time_ = 0.0;
    };
    return std::make_unique<Ctl>(t_);
  }

 private:
  FeedforwardTables t_;
};

class MarkovLaw final : public ControlLaw {
 public:
  MarkovLaw(double t_f, double dt, int m) : t_f_(t_f), dt_(dt), m_(m) {}
  int input_dim() const override { return m_; }

  std::unique_ptr<PathController> start() const override {
    class Ctl final : public PathController {
     public:
      Ctl(double t_f, double dt) : t_f_(t_f), dt_(dt) {}
      Vector control(int step, const Vector& x) override {
        return markov_bridge_control(x, step * dt_, t_f_);
      }
      void observe_noise(int, const Vector&) override {}

     private:
      double t_f_, dt_;
    };
    return std::make_unique<Ctl>(t_f_, dt_);
  }

 private:
  double t_f_, dt_;
  int m_;
};

}  // namespace

std::shared_ptr<const ControlLaw> make_zero_law(int input_dim) {
  if (input_dim < 1) fail(ErrorCode::invalid_input, "zero law: input_dim must be >= 1");
  return std::make_shared<ZeroLaw>(input_dim);
}

std::shared_ptr<const ControlLaw> make_deterministic_law(const EnsembleSpec& ens,
                                                         const BridgeProblem& prob) {
  prob.validate(ens);
  const SteeringControl steer = deterministic_steer(ens, prob.x0, prob.xf, prob.t_f);
  std::vector<Vector> u(prob.steps_k);
  for (int i = 0; i < prob.steps_k; ++i) u[i] = steer(i * prob.dt());
  return std::make_shared<TabulatedLaw>(std::move(u));
}

std::shared_ptr<const ControlLaw> make_discrete_law(const EnsembleSpec& ens,
                                                    const BridgeProblem& prob) {
  const ControllerGains gains = ControllerGains::synthesize(ens, prob);
  FeedforwardTables t;
  t.state_dim = ens.state_dim();
  t.sqrt_eps = std::sqrt(prob.eps);
  t.steering = gains.steering_vector();
  t.phi.resize(gains.steps());
  t.response.resize(gains.steps());
  for (int i = 0; i < gains.steps(); ++i) {
    t.phi[i] = gains.phi_step(i);
    t.response[i] = gains.factor(i);
  }
  return std::make_shared<FeedforwardLaw>(std::move(t));
}

std::shared_ptr<const ControlLaw> make_continuous_law(const EnsembleSpec& ens,
                                                      const BridgeProblem& prob) {
  prob.validate(ens);
  const GramianTable table(ens, prob.t_f, prob.steps_k);
  const double gate = 1e-12;
  Eigen::SelfAdjointEigenSolver<Matrix> es0(table.gram_at(0));
  const double scale = es0.eigenvalues().maxCoeff();
  if (!(es0.eigenvalues().minCoeff() > gate * scale))
    fail(ErrorCode::singular_gramian, "continuous law: Gramian singular at t=0");

  FeedforwardTables t;
  t.state_dim = ens.state_dim();
  t.sqrt_eps = std::sqrt(prob.eps);
  const Vector target = prob.xf - ens.averaged_exp(prob.t_f) * prob.x0;
  t.steering = es0.eigenvectors() *
               (es0.eigenvalues().cwiseInverse().asDiagonal() * (es0.eigenvectors().transpose() * target));
  t.phi.resize(prob.steps_k);
  t.response.assign(prob.steps_k, Matrix());
  for (int j = 0; j < prob.steps_k; ++j) {
    t.phi[j] = table.phi_at(j);
    Eigen::SelfAdjointEigenSolver<Matrix> es(table.gram_at(j));
    if (es.eigenvalues().minCoeff() > gate * scale) {
      t.response[j] = es.eigenvectors() * (es.eigenvalues().cwiseInverse().asDiagonal() *
                                           (es.eigenvectors().transpose() * t.phi[j]));
    } else {
      t.response[j] = Matrix::Zero(t.state_dim, ens.input_dim());
      t.bad_step.push_back(j);
      t.bad_time.push_back(table.grid()[j]);
    }
  }
  return std::make_shared<FeedforwardLaw>(std::move(t));
}

std::shared_ptr<const ControlLaw> make_markov_law(const EnsembleSpec& ens,
                                                  const BridgeProblem& prob) {
  prob.validate(ens);
  if (!ens.is_brownian())
    fail(ErrorCode::invalid_input, "markov law: only valid for the Brownian family (A=0, B=I)");
  return std::make_shared<MarkovLaw>(prob.t_f, prob.dt(), ens.input_dim());
}

}  // namespace ebridge
