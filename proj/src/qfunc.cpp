#include "nfq/qfunc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nfq/errors.hpp"

namespace nfq {

std::string_view to_string(ActionEncoding encoding) {
  return encoding == ActionEncoding::action_in_input ? "action_in_input" : "action_per_output";
}

ActionEncoding encoding_from_string(std::string_view name) {
  if (name == "action_in_input") return ActionEncoding::action_in_input;
  if (name == "action_per_output") return ActionEncoding::action_per_output;
  throw ConfigError("unknown action encoding '" + std::string(name) + "'");
}

ActionSet::ActionSet(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw InputError("action set is empty");
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) throw InputError("action values must be finite");
    if (i > 0 && !(values_[i - 1] < values_[i])) {
      throw InputError("action values must be strictly increasing");
    }
    if (values_[i] == 0.0) {
      neutral_ = i;
      ++zeros;
    }
  }
  if (zeros != 1) throw InputError("action set must contain exactly one zero action");
}

std::optional<std::size_t> ActionSet::index_of(double value) const {
  const auto it = std::find(values_.begin(), values_.end(), value);
  if (it == values_.end()) return std::nullopt;
  return std::size_t(it - values_.begin());
}

double ActionSet::max_magnitude() const {
  return std::max(std::abs(values_.front()), std::abs(values_.back()));
}

std::vector<bool> ActionSet::mask_excluding(std::span<const double> removed) const {
  std::vector<bool> mask(values_.size(), true);
  for (const double v : removed) {
    const auto idx = index_of(v);
    if (!idx) throw InputError("masked action " + std::to_string(v) + " is not in the action set");
    mask[*idx] = false;
  }
  return mask;
}

ActionSet default_sim_actions() { return ActionSet({-10.0, 0.0, 10.0}); }

ActionSet extended_actions(double scale) {
  static constexpr double kMagnitudes[] = {1,  2,  3,  5,   10,  20,  30,  40,
                                           50, 60, 90, 100, 150, 200, 300, 500};
  std::vector<double> values;
  for (auto it = std::rbegin(kMagnitudes); it != std::rend(kMagnitudes); ++it) {
    values.push_back(-*it * scale);
  }
  values.push_back(0.0);
  for (const double m : kMagnitudes) values.push_back(m * scale);
  return ActionSet(std::move(values));
}

Normalizer Normalizer::identity(Eigen::Index dim) {
  return {Vector::Zero(dim), Vector::Ones(dim), false};
}

Matrix Normalizer::apply(const Matrix& samples) const {
  if (samples.rows() != dim()) throw ShapeError("normalizer dimension mismatch");
  return (samples.colwise() - mean).array().colwise() / std.array();
}

Vector Normalizer::apply(const Vector& sample) const {
  if (sample.size() != dim()) throw ShapeError("normalizer dimension mismatch");
  return (sample - mean).array() / std.array();
}

Matrix Normalizer::invert(const Matrix& normalized) const {
  if (normalized.rows() != dim()) throw ShapeError("normalizer dimension mismatch");
  return (normalized.array().colwise() * std.array()).matrix().colwise() + mean;
}

bool Normalizer::operator==(const Normalizer& other) const {
  return frozen == other.frozen && mean.size() == other.mean.size() && mean == other.mean &&
         std == other.std;
}

Normalizer fit_normalizer(const Matrix& samples) {
  if (samples.cols() < 2) throw InputError("normalizer needs at least 2 samples");
  Normalizer n;
  n.mean = samples.rowwise().mean();
  const Matrix centered = samples.colwise() - n.mean;
  n.std = (centered.array().square().rowwise().sum() / double(samples.cols())).sqrt();
  n.std = n.std.cwiseMax(Normalizer::kMinStd);
  return n;
}

double scale_action(double action, double bound) {
  if (!(bound > 0.0)) throw InputError("action bound must be positive");
  if (std::abs(action) > bound) {
    throw InputError("action " + std::to_string(action) + " exceeds bound " +
                     std::to_string(bound));
  }
  return action / bound;
}

GreedyChoice argmin_masked(const Vector& q, const std::vector<bool>& mask) {
  if (!mask.empty() && mask.size() != std::size_t(q.size())) {
    throw InputError("action mask length does not match action count");
  }
  std::optional<GreedyChoice> best;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    if (!best || q[i] < best->q) best = GreedyChoice{std::size_t(i), q[i]};
  }
  if (!best) throw InputError("every action is masked");
  return *best;
}

Eigen::Index network_input_dim(ActionEncoding encoding, Eigen::Index state_dim) {
  return encoding == ActionEncoding::action_in_input ? state_dim + 1 : state_dim;
}

QFunction::QFunction(ActionEncoding encoding, Network net, Normalizer normalizer,
                     ActionSet actions, double action_bound)
    : encoding_(encoding),
      net_(std::move(net)),
      normalizer_(std::move(normalizer)),
      actions_(std::move(actions)),
      action_bound_(action_bound) {
  if (!(action_bound_ > 0.0)) throw ConfigError("action bound must be positive");
  if (actions_.max_magnitude() > action_bound_) {
    throw ConfigError("action set exceeds the action bound");
  }
  if (net_.input_dim() != network_input_dim(encoding_, normalizer_.dim())) {
    throw ShapeError("network input does not match the encoded state dimension");
  }
  if (encoding_ == ActionEncoding::action_in_input && net_.output_dim() != 1) {
    throw ShapeError("action_in_input networks have a single output");
  }
  if (encoding_ == ActionEncoding::action_per_output &&
      net_.output_dim() != Eigen::Index(actions_.size())) {
    throw ShapeError("action_per_output networks need one output per action");
  }
}

void QFunction::set_network(Network net) {
  if (net.input_dim() != net_.input_dim() || net.output_dim() != net_.output_dim()) {
    throw ShapeError("replacement network has a different interface");
  }
  net_ = std::move(net);
}

void QFunction::set_normalizer(Normalizer normalizer) {
  if (normalizer.dim() != normalizer_.dim()) throw ShapeError("normalizer dimension mismatch");
  normalizer_ = std::move(normalizer);
}

void QFunction::check_state(const Matrix& stacked) const {
  if (stacked.rows() != state_dim()) {
    throw ShapeError("stacked state dimension " + std::to_string(stacked.rows()) +
                     " does not match Q-function state dimension " +
                     std::to_string(state_dim()));
  }
}

Matrix QFunction::q_values_batch(const Matrix& stacked) const {
  return q_values_batch(stacked, actions_);
}

Matrix QFunction::q_values_batch(const Matrix& stacked, const ActionSet& actions) const {
  check_state(stacked);
  const Matrix normalized = normalizer_.apply(stacked);
  const Eigen::Index n = stacked.cols();
  if (encoding_ == ActionEncoding::action_per_output) {
    if (!(actions == actions_)) {
      throw ConfigError("action_per_output Q-function queried with a different action set");
    }
    return forward(net_, normalized);
  }
  const auto count = Eigen::Index(actions.size());
  const Eigen::Index dim = state_dim();
  // Column j * count + a holds (s_j, a): the 1 x (n * count) output reshapes
  // column-major into count x n.
  Matrix inputs(dim + 1, n * count);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index a = 0; a < count; ++a) {
      auto col = inputs.col(j * count + a);
      col.head(dim) = normalized.col(j);
      col[dim] = scale_action(actions[std::size_t(a)], action_bound_);
    }
  }
  const Matrix out = forward(net_, inputs);
  return Eigen::Map<const Matrix>(out.data(), count, n);
}

Matrix QFunction::encode_inputs(const Matrix& stacked, std::span<const std::size_t> actions) const {
  check_state(stacked);
  if (actions.size() != std::size_t(stacked.cols())) {
    throw ShapeError("one action index per stacked state required");
  }
  const Matrix normalized = normalizer_.apply(stacked);
  if (encoding_ == ActionEncoding::action_per_output) return normalized;
  Matrix inputs(state_dim() + 1, stacked.cols());
  inputs.topRows(state_dim()) = normalized;
  for (Eigen::Index j = 0; j < stacked.cols(); ++j) {
    if (actions[j] >= actions_.size()) throw InputError("action index out of range");
    inputs(state_dim(), j) = scale_action(actions_[actions[j]], action_bound_);
  }
  return inputs;
}

Vector QFunction::q_values(const Vector& stacked) const { return q_values(stacked, actions_); }

Vector QFunction::q_values(const Vector& stacked, const ActionSet& actions) const {
  return q_values_batch(Matrix(stacked), actions).col(0);
}

bool QFunction::operator==(const QFunction& other) const {
  return encoding_ == other.encoding_ && net_ == other.net_ &&
         normalizer_ == other.normalizer_ && actions_ == other.actions_ &&
         action_bound_ == other.action_bound_;
}

GreedyChoice greedy_action(const QFunction& qf, const Vector& stacked,
                           const std::vector<bool>& mask) {
  return argmin_masked(qf.q_values(stacked), mask);
}

QFunction extend_action_set(const QFunction& qf, ActionSet actions) {
  if (qf.encoding() != ActionEncoding::action_in_input) {
    throw UnsupportedOperation(
        "action_per_output Q-functions have a fixed head width; the action set cannot change");
  }
  return QFunction(qf.encoding(), qf.network(), qf.normalizer(), std::move(actions),
                   qf.action_bound());
}

}  // namespace nfq
