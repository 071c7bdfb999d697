#pragma once

#include <cstddef>
#include <deque>
#include <memory>
#include <vector>

#include "nfq/batch.hpp"
#include "nfq/costs.hpp"
#include "nfq/observation.hpp"
#include "nfq/qfunc.hpp"
#include "nfq/rng.hpp"

namespace nfq {

// alpha in (-pi, pi], 0 = upright.
struct SimState {
  double x = 0.0;
  double dx = 0.0;
  double alpha = 0.0;
  double dalpha = 0.0;

  Observation observation() const { return Observation::from_angle(x, dx, alpha, dalpha); }

  bool operator==(const SimState&) const = default;
};

struct SimParams {
  double gravity = 9.8;
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double half_length = 0.5;
  double force_bound = 10.0;
  double tau = 0.02;
  double x_bound = 2.4;

  void validate() const;

  bool operator==(const SimParams&) const = default;
};

// Actions take effect delay_cycles steps after they are issued.
struct LatencyModel {
  int delay_cycles = 0;

  bool operator==(const LatencyModel&) const = default;
};

enum class StartMode { center_hanging, continue_from_last, explicit_state };

std::string_view to_string(StartMode mode);
StartMode start_mode_from_string(std::string_view name);

struct StartSpec {
  StartMode mode = StartMode::center_hanging;
  SimState state;  // explicit_state only

  static StartSpec center() { return {}; }
  static StartSpec continued() { return {StartMode::continue_from_last, {}}; }
  static StartSpec at(SimState s) { return {StartMode::explicit_state, s}; }
};

struct StepResult {
  Observation observation;
  bool terminated = false;
};

// Plant interface seen by the training loops. A hardware adapter implements
// the same three calls.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual Observation reset(const StartSpec& start, Rng& rng) = 0;
  virtual StepResult step(double force) = 0;
  virtual bool terminated() const = 0;
  virtual Observation observation() const = 0;
  // How the last reset actually started (continue falls back to fresh-center).
  virtual StartTag last_start() const = 0;
};

// Wraps into (-pi, pi].
double wrap_angle(double alpha);

// One explicit-Euler step of the cart-pole under `force`, no bound checks.
SimState euler_step(const SimParams& p, const SimState& s, double force);

// Kinetic plus potential energy (potential zero at the pivot height).
double mechanical_energy(const SimParams& p, const SimState& s);

class CartPoleSim : public Environment {
 public:
  static constexpr double kStartJitter = 0.05;

  explicit CartPoleSim(SimParams params = {}, LatencyModel latency = {},
                       double start_jitter = kStartJitter);

  Observation reset(const StartSpec& start, Rng& rng) override;
  StepResult step(double force) override;
  bool terminated() const override { return terminated_; }
  Observation observation() const override { return state_.observation(); }
  StartTag last_start() const override { return last_start_; }

  const SimState& state() const { return state_; }
  const SimParams& params() const { return params_; }

 private:
  SimParams params_;
  LatencyModel latency_;
  double jitter_;
  SimState state_;
  bool started_ = false;
  bool terminated_ = false;
  StartTag last_start_ = StartTag::fresh_center;
  std::deque<double> pending_;
};

// Chooses an action index given the stacked state and the raw current observation.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual const ActionSet& actions() const = 0;
  virtual std::size_t choose(const Vector& stacked, const Observation& current) = 0;
};

class GreedyQPolicy : public Policy {
 public:
  explicit GreedyQPolicy(const QFunction& qf, std::vector<bool> mask = {})
      : qf_(qf), mask_(std::move(mask)) {}

  const ActionSet& actions() const override { return qf_.actions(); }
  std::size_t choose(const Vector& stacked, const Observation&) override {
    return greedy_action(qf_, stacked, mask_).index;
  }

 private:
  const QFunction& qf_;
  std::vector<bool> mask_;
};

// Hand-written energy-pumping swing-up with a bang-bang balancer near the
// top. Used to produce demonstration episodes.
class SwingUpController : public Policy {
 public:
  explicit SwingUpController(ActionSet actions = default_sim_actions(), SimParams params = {});

  const ActionSet& actions() const override { return actions_; }
  std::size_t choose(const Vector& stacked, const Observation& current) override;

 private:
  ActionSet actions_;
  SimParams params_;
};

struct RolloutOptions {
  int max_steps = 400;
  double epsilon = 0.0;
  int lookback = 1;
  double action_bound = 10.0;
  StartSpec start;
};

// Rolls `policy` with epsilon-greedy exploration: per step one uniform draw u
// from `explore`; u < epsilon picks a uniformly random action. Costs and
// terminal flags come from `cost`. Stops after max_steps, at a terminal cost,
// or when the environment terminates.
Episode run_episode(Environment& env, Policy& policy, const CostSpec& cost,
                    const RolloutOptions& options, Rng& explore, Rng& env_rng);

}  // namespace nfq
