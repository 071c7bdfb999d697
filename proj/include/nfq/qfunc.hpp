#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "nfq/net.hpp"

namespace nfq {

enum class ActionEncoding { action_in_input, action_per_output };

std::string_view to_string(ActionEncoding encoding);
ActionEncoding encoding_from_string(std::string_view name);

// Discrete action magnitudes, strictly increasing, with exactly one zero.
class ActionSet {
 public:
  ActionSet() = default;
  explicit ActionSet(std::vector<double> values);

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t neutral_index() const { return neutral_; }
  std::optional<std::size_t> index_of(double value) const;
  double max_magnitude() const;

  // Mask over this set that excludes every listed value.
  std::vector<bool> mask_excluding(std::span<const double> removed) const;

  bool operator==(const ActionSet&) const = default;

 private:
  std::vector<double> values_;
  std::size_t neutral_ = 0;
};

// Default cart forces of the simulator, in N.
ActionSet default_sim_actions();

// The 33-entry extension: +-{0, 1, 2, 3, 5, 10, 20, ..., 300, 500}, times `scale`.
ActionSet extended_actions(double scale = 1.0);

// Per-feature standardization of stacked states.
struct Normalizer {
  static constexpr double kMinStd = 1e-6;

  Vector mean;
  Vector std;
  bool frozen = false;

  static Normalizer identity(Eigen::Index dim);

  Eigen::Index dim() const { return mean.size(); }
  Matrix apply(const Matrix& samples) const;
  Vector apply(const Vector& sample) const;
  Matrix invert(const Matrix& normalized) const;

  bool operator==(const Normalizer& other) const;
};

// Empirical mean and standard deviation per feature (rows are features,
// columns are samples), std floored at Normalizer::kMinStd.
Normalizer fit_normalizer(const Matrix& samples);

// a / bound, requires |a| <= bound.
double scale_action(double action, double bound);

// Interface the Bellman sweep needs from a Q approximator. The network-backed
// QFunction implements it; the tests also provide a lookup table.
class QModel {
 public:
  virtual ~QModel() = default;

  virtual std::size_t action_count() const = 0;

  // True when every action has its own output head (targets carry a head index).
  virtual bool headed() const { return false; }

  // Q(s, a) for each column s of raw stacked states: action_count() x samples.
  virtual Matrix q_values_batch(const Matrix& stacked) const = 0;

  // Network inputs for the (stacked state, action index) pairs.
  virtual Matrix encode_inputs(const Matrix& stacked, std::span<const std::size_t> actions) const = 0;
};

struct GreedyChoice {
  std::size_t index = 0;
  double q = 0.0;
};

// Argmin over unmasked entries, ties to the lowest index. An empty mask means
// every action is allowed; a mask entry of false removes the action.
GreedyChoice argmin_masked(const Vector& q, const std::vector<bool>& mask = {});

class QFunction : public QModel {
 public:
  QFunction() = default;
  QFunction(ActionEncoding encoding, Network net, Normalizer normalizer, ActionSet actions,
            double action_bound);

  ActionEncoding encoding() const { return encoding_; }
  const Network& network() const { return net_; }
  Network& network() { return net_; }
  const Normalizer& normalizer() const { return normalizer_; }
  const ActionSet& actions() const { return actions_; }
  double action_bound() const { return action_bound_; }
  Eigen::Index state_dim() const { return normalizer_.dim(); }

  void set_network(Network net);
  void set_normalizer(Normalizer normalizer);

  std::size_t action_count() const override { return actions_.size(); }
  bool headed() const override { return encoding_ == ActionEncoding::action_per_output; }
  Matrix q_values_batch(const Matrix& stacked) const override;
  Matrix encode_inputs(const Matrix& stacked, std::span<const std::size_t> actions) const override;

  // q-values for an arbitrary action set. For action_per_output the set must
  // equal the one the output heads were trained on.
  Matrix q_values_batch(const Matrix& stacked, const ActionSet& actions) const;
  Vector q_values(const Vector& stacked) const;
  Vector q_values(const Vector& stacked, const ActionSet& actions) const;

  bool operator==(const QFunction& other) const;

 private:
  void check_state(const Matrix& stacked) const;

  ActionEncoding encoding_ = ActionEncoding::action_in_input;
  Network net_;
  Normalizer normalizer_;
  ActionSet actions_;
  double action_bound_ = 1.0;
};

// Network input width for a stacked-state dimension under an encoding.
Eigen::Index network_input_dim(ActionEncoding encoding, Eigen::Index state_dim);

GreedyChoice greedy_action(const QFunction& qf, const Vector& stacked,
                           const std::vector<bool>& mask = {});

// Swap in a new action set without touching the network. Action-in-input only.
QFunction extend_action_set(const QFunction& qf, ActionSet actions);

}  // namespace nfq
