#include "nfq/env.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "nfq/errors.hpp"

namespace nfq {

void SimParams::validate() const {
  if (!(gravity > 0 && cart_mass > 0 && pole_mass > 0 && half_length > 0 && force_bound > 0 &&
        tau > 0 && x_bound > 0)) {
    throw ConfigError("simulator parameters must all be positive");
  }
}

std::string_view to_string(StartMode mode) {
  switch (mode) {
    case StartMode::center_hanging:
      return "center_hanging";
    case StartMode::continue_from_last:
      return "continue_from_last";
    case StartMode::explicit_state:
      break;
  }
  return "explicit";
}

StartMode start_mode_from_string(std::string_view name) {
  if (name == "center_hanging") return StartMode::center_hanging;
  if (name == "continue_from_last") return StartMode::continue_from_last;
  if (name == "explicit") return StartMode::explicit_state;
  throw ConfigError("unknown start mode '" + std::string(name) + "'");
}

double wrap_angle(double alpha) {
  constexpr double pi = std::numbers::pi;
  if (alpha > -pi && alpha <= pi) return alpha;
  double r = std::fmod(alpha + pi, 2.0 * pi);
  if (r <= 0.0) r += 2.0 * pi;
  return r - pi;
}

SimState euler_step(const SimParams& p, const SimState& s, double force) {
  const double total_mass = p.cart_mass + p.pole_mass;
  const double pole_ml = p.pole_mass * p.half_length;
  const double c = std::cos(s.alpha);
  const double sn = std::sin(s.alpha);
  const double temp = (force + pole_ml * s.dalpha * s.dalpha * sn) / total_mass;
  const double alpha_acc = (p.gravity * sn - c * temp) /
                           (p.half_length * (4.0 / 3.0 - p.pole_mass * c * c / total_mass));
  const double x_acc = temp - pole_ml * alpha_acc * c / total_mass;

  SimState next;
  next.x = s.x + p.tau * s.dx;
  next.dx = s.dx + p.tau * x_acc;
  next.alpha = wrap_angle(s.alpha + p.tau * s.dalpha);
  next.dalpha = s.dalpha + p.tau * alpha_acc;
  return next;
}

double mechanical_energy(const SimParams& p, const SimState& s) {
  const double l = p.half_length;
  const double m = p.pole_mass;
  const double vx = s.dx + l * std::cos(s.alpha) * s.dalpha;
  const double vy = -l * std::sin(s.alpha) * s.dalpha;
  const double kinetic = 0.5 * p.cart_mass * s.dx * s.dx + 0.5 * m * (vx * vx + vy * vy) +
                         0.5 * (m * l * l / 3.0) * s.dalpha * s.dalpha;
  return kinetic + m * p.gravity * l * std::cos(s.alpha);
}

CartPoleSim::CartPoleSim(SimParams params, LatencyModel latency, double start_jitter)
    : params_(params), latency_(latency), jitter_(start_jitter) {
  params_.validate();
  if (latency_.delay_cycles < 0) throw ConfigError("latency delay_cycles must be >= 0");
  if (!(jitter_ >= 0.0 && jitter_ <= kStartJitter)) {
    throw ConfigError("start jitter must lie in [0, 0.05]");
  }
}

Observation CartPoleSim::reset(const StartSpec& start, Rng& rng) {
  StartMode mode = start.mode;
  if (mode == StartMode::continue_from_last && (!started_ || terminated_)) {
    mode = StartMode::center_hanging;
  }
  switch (mode) {
    case StartMode::center_hanging: {
      const double jx = rng.uniform(-1.0, 1.0);
      const double ja = rng.uniform(-1.0, 1.0);
      state_ = {jitter_ * jx, 0.0, wrap_angle(std::numbers::pi + jitter_ * ja), 0.0};
      last_start_ = StartTag::fresh_center;
      break;
    }
    case StartMode::continue_from_last:
      last_start_ = StartTag::continued;
      break;
    case StartMode::explicit_state: {
      const SimState& s = start.state;
      if (!(std::isfinite(s.x) && std::isfinite(s.dx) && std::isfinite(s.alpha) &&
            std::isfinite(s.dalpha)) ||
          std::abs(s.x) > params_.x_bound) {
        throw InputError("explicit start state out of bounds");
      }
      state_ = s;
      state_.alpha = wrap_angle(s.alpha);
      last_start_ = StartTag::fresh_center;
      break;
    }
  }
  started_ = true;
  terminated_ = false;
  pending_.assign(std::size_t(latency_.delay_cycles), 0.0);
  return state_.observation();
}

StepResult CartPoleSim::step(double force) {
  if (!started_) throw ProtocolError("step before reset");
  if (terminated_) throw ProtocolError("step after termination; reset first");
  if (!std::isfinite(force) || std::abs(force) > params_.force_bound) {
    throw InputError("force " + std::to_string(force) + " exceeds the force bound");
  }
  double applied = force;
  if (latency_.delay_cycles > 0) {
    pending_.push_back(force);
    applied = pending_.front();
    pending_.pop_front();
  }
  state_ = euler_step(params_, state_, applied);
  terminated_ = std::abs(state_.x) > params_.x_bound;
  return {state_.observation(), terminated_};
}

SwingUpController::SwingUpController(ActionSet actions, SimParams params)
    : actions_(std::move(actions)), params_(params) {}

std::size_t SwingUpController::choose(const Vector&, const Observation& o) {
  const double fmax = std::min(actions_.max_magnitude(), params_.force_bound);
  double force = 0.0;
  if (o.cos_a > std::cos(0.4)) {
    force = 40.0 * o.angle() + 8.0 * o.da + 1.0 * o.x + 2.0 * o.dx;
  } else {
    // Pump energy toward the upright level while a PD term keeps the cart centered.
    const double l = params_.half_length;
    const double m = params_.pole_mass;
    const double energy =
        0.5 * (4.0 / 3.0) * m * l * l * o.da * o.da + m * params_.gravity * l * (o.cos_a - 1.0);
    force = 50.0 * energy * o.da * o.cos_a - 6.0 * o.x - 6.0 * o.dx;
  }
  force = force > 3.0 ? fmax : (force < -3.0 ? -fmax : 0.0);
  // Nearest available action.
  std::size_t best = 0;
  for (std::size_t i = 1; i < actions_.size(); ++i) {
    if (std::abs(actions_[i] - force) < std::abs(actions_[best] - force)) best = i;
  }
  return best;
}

Episode run_episode(Environment& env, Policy& policy, const CostSpec& cost,
                    const RolloutOptions& options, Rng& explore, Rng& env_rng) {
  if (options.max_steps < 1) throw ConfigError("max_steps must be >= 1");
  if (options.lookback < 1) throw ConfigError("lookback must be >= 1");
  const ActionSet& actions = policy.actions();

  Episode episode;
  std::vector<Observation> history{env.reset(options.start, env_rng)};
  std::vector<double> applied;
  episode.start = env.last_start();

  for (int t = 0; t < options.max_steps; ++t) {
    const Observation& current = history.back();
    const Vector stacked =
        stack_history(history, applied, history.size() - 1, options.lookback, options.action_bound);
    const double u = explore.uniform();
    std::size_t index = 0;
    if (u < options.epsilon) {
      index = explore.index(actions.size());
    } else {
      index = policy.choose(stacked, current);
    }
    const double action = actions[index];
    const StepResult step = env.step(action);
    const CostResult c = transition_cost(cost, current, action, step.observation);

    Transition tr;
    tr.obs = current;
    tr.action_index = index;
    tr.action_value = action;
    tr.next_obs = step.observation;
    tr.cost = c.cost;
    tr.terminal = c.terminal;
    tr.step_index = t;
    episode.transitions.push_back(tr);

    history.push_back(step.observation);
    applied.push_back(action);
    if (c.terminal || step.terminated) break;
  }
  return episode;
}

}  // namespace nfq
