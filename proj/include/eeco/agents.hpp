#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <queue>
#include <unordered_map>
#include <vector>

#include "eeco/domain.hpp"
#include "eeco/mlp.hpp"
#include "eeco/rng.hpp"

namespace eeco {

struct HyperParams {
  double alpha = 0.9;           // tabular update step
  // Consecutive rounds are only weakly coupled, and the zero default for
  // unseen pairs acts as optimism: any larger discount keeps rotating the
  // greedy choice toward actions whose footprint state still has unexplored
  // entries, stretching convergence to full state-action coverage.
  double gamma = 0.01;
  double epsilon = 1.0;
  double epsilon_decay = 1e-2;  // subtractive for tabular, multiplicative for DQN
  double epsilon_min = 0.01;
  double learning_rate = 1e-3;  // DQN SGD step
  int batch_size = 64;
  size_t buffer_capacity = 1000;
  int dqn_epoch_steps = 1000;   // epsilon decays once per epoch
  int dqn_hidden = 0;           // 0 = pick from the user count

  void validate() const {
    if (alpha <= 0.0 || alpha > 1.0) throw std::invalid_argument("hyper: alpha must be in (0,1]");
    if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("hyper: gamma must be in [0,1)");
    if (epsilon < 0.0 || epsilon > 1.0) throw std::invalid_argument("hyper: epsilon must be in [0,1]");
    if (batch_size < 1 || buffer_capacity < 1) throw std::invalid_argument("hyper: bad replay sizes");
  }

  static HyperParams q_learning_defaults(int users) {
    HyperParams hp;
    hp.alpha = 0.9;
    switch (users) {
      case 1: hp.epsilon_decay = 1e-1; break;
      case 2: hp.epsilon_decay = 1e-2; break;
      case 3: hp.epsilon_decay = 1e-2; break;
      case 4: hp.epsilon_decay = 1e-3; break;
      default: hp.epsilon_decay = 1e-4; break;
    }
    return hp;
  }

  static HyperParams dqn_defaults(int users) {
    HyperParams hp;
    hp.learning_rate = 1e-3;
    if (users <= 3) hp.epsilon_decay = 0.4;
    else if (users == 4) hp.epsilon_decay = 0.7;
    else hp.epsilon_decay = 0.9;
    hp.dqn_hidden = dqn_hidden_for(users);
    return hp;
  }

  static int dqn_hidden_for(int users) {
    if (users <= 3) return 48;
    if (users == 4) return 64;
    return 128;
  }
};

// Sparse Q-value store over (state key, joint action index). Unseen pairs
// read as 0, which with the all-negative rewards of this problem acts as
// optimistic initialization: the greedy policy works through untried actions
// in canonical order before committing to learned values. The per-state scan
// pointer and a lazy max-heap keep both lookups O(1) amortized even for the
// 10^5-action joint spaces.
class QTable {
 public:
  explicit QTable(uint64_t num_actions) : num_actions_(num_actions) {
    if (num_actions_ == 0) throw std::invalid_argument("QTable: empty action space");
  }

  uint64_t num_actions() const { return num_actions_; }
  size_t num_states() const { return cells_.size(); }

  size_t visited_pairs() const {
    size_t n = 0;
    for (const auto& [k, c] : cells_) n += c.q.size();
    return n;
  }

  double get(uint64_t state_key, uint64_t action) const {
    auto it = cells_.find(state_key);
    if (it == cells_.end()) return 0.0;
    auto q = it->second.q.find(action);
    return q == it->second.q.end() ? 0.0 : q->second;
  }

  void update(uint64_t state_key, uint64_t action, double value) {
    if (action >= num_actions_) throw std::out_of_range("QTable::update: action out of range");
    Cell& c = cells_[state_key];
    auto [it, fresh] = c.q.insert_or_assign(action, value);
    (void)it;
    if (fresh) {
      c.mark_seen(action, num_actions_);
      ++c.seen_count;
    }
    c.heap.push({value, action});
  }

  // Highest Q over the state's actions, counting unseen actions as 0.
  double max_q(uint64_t state_key) {
    auto it = cells_.find(state_key);
    if (it == cells_.end()) return 0.0;
    Cell& c = it->second;
    double best = c.seen_count < num_actions_ ? 0.0 : -std::numeric_limits<double>::infinity();
    if (auto top = c.clean_top()) best = std::max(best, top->first);
    return best;
  }

  // Argmax with deterministic tie-breaking: higher value wins, equal values
  // go to the lower action index (unseen actions carry value 0).
  uint64_t argmax(uint64_t state_key) {
    auto it = cells_.find(state_key);
    if (it == cells_.end()) return 0;
    Cell& c = it->second;
    const bool has_unseen = c.seen_count < num_actions_;
    uint64_t unseen_idx = has_unseen ? c.first_unseen(num_actions_) : 0;
    auto top = c.clean_top();
    if (!top) return has_unseen ? unseen_idx : 0;
    if (!has_unseen) return top->second;
    if (top->first > 0.0) return top->second;
    if (top->first < 0.0) return unseen_idx;
    return std::min(top->second, unseen_idx);  // exact tie at 0
  }

  // Deterministic (sorted) traversal for serialization and warm starts.
  template <typename Fn>
  void for_each_sorted(Fn&& fn) const {
    std::map<uint64_t, const Cell*> ordered;
    for (const auto& [k, c] : cells_) ordered.emplace(k, &c);
    for (const auto& [k, c] : ordered) {
      std::map<uint64_t, double> entries(c->q.begin(), c->q.end());
      for (const auto& [a, v] : entries) fn(k, a, v);
    }
  }

 private:
  struct Cell {
    std::vector<uint64_t> seen_bits;
    uint64_t seen_count = 0;
    uint64_t scan_ptr = 0;
    std::unordered_map<uint64_t, double> q;
    // Lazy max-heap over (value, action); stale entries are skipped at read.
    struct Cmp {
      bool operator()(const std::pair<double, uint64_t>& a,
                      const std::pair<double, uint64_t>& b) const {
        if (a.first != b.first) return a.first < b.first;
        return a.second > b.second;
      }
    };
    std::priority_queue<std::pair<double, uint64_t>, std::vector<std::pair<double, uint64_t>>, Cmp>
        heap;

    void mark_seen(uint64_t action, uint64_t num_actions) {
      if (seen_bits.empty()) seen_bits.assign((num_actions + 63) / 64, 0);
      seen_bits[action >> 6] |= 1ULL << (action & 63);
    }

    bool seen(uint64_t action) const {
      if (seen_bits.empty()) return false;
      return (seen_bits[action >> 6] >> (action & 63)) & 1ULL;
    }

    uint64_t first_unseen(uint64_t num_actions) {
      while (scan_ptr < num_actions && seen(scan_ptr)) ++scan_ptr;
      return scan_ptr;
    }

    // Top of the heap after discarding entries that no longer match the map.
    std::optional<std::pair<double, uint64_t>> clean_top() {
      while (!heap.empty()) {
        const auto& t = heap.top();
        auto it = q.find(t.second);
        if (it != q.end() && it->second == t.first) return t;
        heap.pop();
      }
      return std::nullopt;
    }
  };

  uint64_t num_actions_;
  std::unordered_map<uint64_t, Cell> cells_;
};

// Circular FIFO of transition records for experience replay.
class ReplayBuffer {
 public:
  struct Record {
    DiscreteState state;
    uint64_t action = 0;
    double reward = 0.0;
    DiscreteState next_state;
  };

  explicit ReplayBuffer(size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  }

  size_t capacity() const { return capacity_; }
  size_t size() const { return ring_.size(); }

  void push(Record r) {
    if (ring_.size() < capacity_) {
      ring_.push_back(std::move(r));
    } else {
      ring_[head_] = std::move(r);
      head_ = (head_ + 1) % capacity_;
    }
  }

  // i-th oldest record.
  const Record& at(size_t i) const {
    if (i >= ring_.size()) throw std::out_of_range("ReplayBuffer::at");
    return ring_[(head_ + i) % ring_.size()];
  }

  // k distinct indices into [0, size), for mini-batch sampling.
  std::vector<size_t> sample_indices(size_t k, Rng& rng) const {
    if (k > ring_.size()) throw std::invalid_argument("ReplayBuffer::sample_indices: k > size");
    std::vector<size_t> idx(ring_.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
    idx.resize(k);
    return idx;
  }

 private:
  size_t capacity_;
  size_t head_ = 0;
  std::vector<Record> ring_;
};

// Feature layout shared by the DQN paths: normalized state components
// followed by one one-hot block of per-device actions.
class StateActionEncoder {
 public:
  StateActionEncoder(int num_devices, size_t per_device_actions)
      : num_devices_(num_devices), per_device_(per_device_actions) {}

  int state_dim() const { return 3 * (num_devices_ + 2); }
  int action_dim() const { return num_devices_ * static_cast<int>(per_device_); }
  int total_dim() const { return state_dim() + action_dim(); }

  void write_state(const DiscreteState& s, double* out) const {
    if (static_cast<int>(s.levels.size()) != state_dim())
      throw std::invalid_argument("encoder: state length mismatch");
    for (int i = 0; i < state_dim(); ++i) {
      const bool nine_level = i == 0 || i == 3;  // edge and cloud CPU components
      out[i] = nine_level ? s.levels[i] / 8.0 : static_cast<double>(s.levels[i]);
    }
  }

  // Digits of the joint index, device 0 most significant.
  void action_digits(uint64_t joint_index, uint32_t* digits) const {
    for (int d = num_devices_ - 1; d >= 0; --d) {
      digits[d] = static_cast<uint32_t>(joint_index % per_device_);
      joint_index /= per_device_;
    }
  }

  std::vector<double> encode(const DiscreteState& s, uint64_t joint_index) const {
    std::vector<double> x(total_dim(), 0.0);
    write_state(s, x.data());
    std::vector<uint32_t> digits(num_devices_);
    action_digits(joint_index, digits.data());
    for (int d = 0; d < num_devices_; ++d)
      x[state_dim() + d * per_device_ + digits[d]] = 1.0;
    return x;
  }

 private:
  int num_devices_;
  size_t per_device_;
};

// Orchestration policy interface: pick a joint action, learn from the
// outcome. Exclusively owned by one training loop.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual const ActionSpace& space() const = 0;
  virtual uint64_t greedy_action(const DiscreteState& state) = 0;
  virtual uint64_t select_action(const DiscreteState& state, Rng& rng) = 0;
  virtual void observe(const DiscreteState& s, uint64_t action, double reward,
                       const DiscreteState& next, Rng& rng) = 0;
  virtual double epsilon() const = 0;
  virtual void save(const std::string& path) const = 0;
  virtual const char* kind() const = 0;
};

// Epsilon-greedy tabular Q-learning with the max-bootstrap update.
class QLearningAgent : public Agent {
 public:
  QLearningAgent(ActionSpace space, HyperParams hp)
      : space_(std::move(space)), hp_(hp), table_(space_.joint_count()) {
    hp_.validate();
    epsilon_ = hp_.epsilon;
  }

  const ActionSpace& space() const override { return space_; }
  double epsilon() const override { return epsilon_; }
  const char* kind() const override { return "q_learning"; }
  QTable& table() { return table_; }
  const HyperParams& hyper() const { return hp_; }

  uint64_t greedy_action(const DiscreteState& state) override {
    return table_.argmax(state.key());
  }

  uint64_t select_action(const DiscreteState& state, Rng& rng) override {
    if (rng.uniform() < epsilon_) return rng.below(space_.joint_count());
    return greedy_action(state);
  }

  // Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a)); epsilon decays
  // once per agent invocation.
  void observe(const DiscreteState& s, uint64_t action, double reward, const DiscreteState& next,
               Rng&) override {
    q_update(s, action, reward, next);
    decay_epsilon();
  }

  void q_update(const DiscreteState& s, uint64_t action, double reward,
                const DiscreteState& next) {
    const uint64_t sk = s.key();
    const double target = reward + hp_.gamma * table_.max_q(next.key());
    const double old = table_.get(sk, action);
    table_.update(sk, action, old + hp_.alpha * (target - old));
  }

  void decay_epsilon() { epsilon_ = std::max(hp_.epsilon_min, epsilon_ - hp_.epsilon_decay); }

  void warm_start_from(const QLearningAgent& source) {
    if (source.space_.joint_count() != space_.joint_count() ||
        source.space_.num_devices() != space_.num_devices())
      throw std::invalid_argument("warm_start: incompatible action space shapes");
    table_ = QTable(space_.joint_count());
    source.table_.for_each_sorted(
        [&](uint64_t sk, uint64_t a, double v) { table_.update(sk, a, v); });
  }

  void save(const std::string& path) const override {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("QLearningAgent::save: cannot open " + path);
    f.write("EECOQT1\n", 8);
    auto put_u = [&](uint64_t v) { f.write(reinterpret_cast<const char*>(&v), sizeof v); };
    put_u(static_cast<uint64_t>(space_.num_devices()));
    put_u(space_.per_device_count());
    put_u(space_.joint_count());
    uint64_t entries = table_.visited_pairs();
    put_u(entries);
    table_.for_each_sorted([&](uint64_t sk, uint64_t a, double v) {
      put_u(sk);
      put_u(a);
      f.write(reinterpret_cast<const char*>(&v), sizeof v);
    });
    if (!f) throw std::runtime_error("QLearningAgent::save: write failed for " + path);
  }

  void load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("QLearningAgent::load: cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::string(magic, 8) != "EECOQT1\n")
      throw std::runtime_error("QLearningAgent::load: not a Q-table file: " + path);
    auto get_u = [&]() { uint64_t v = 0; f.read(reinterpret_cast<char*>(&v), sizeof v); return v; };
    const uint64_t devices = get_u(), per_device = get_u(), joint = get_u();
    if (devices != static_cast<uint64_t>(space_.num_devices()) ||
        per_device != space_.per_device_count() || joint != space_.joint_count())
      throw std::invalid_argument("QLearningAgent::load: incompatible action space shapes");
    const uint64_t entries = get_u();
    table_ = QTable(space_.joint_count());
    for (uint64_t i = 0; i < entries; ++i) {
      const uint64_t sk = get_u(), a = get_u();
      double v = 0.0;
      f.read(reinterpret_cast<char*>(&v), sizeof v);
      table_.update(sk, a, v);
    }
    if (!f) throw std::runtime_error("QLearningAgent::load: truncated file: " + path);
  }

 private:
  ActionSpace space_;
  HyperParams hp_;
  QTable table_;
  double epsilon_ = 1.0;
};

// Deep Q-learning with experience replay. The net scores one (state, action)
// encoding at a time; greedy selection and TD targets sweep every joint
// action, which is exact and affordable up to the 3-4 user spaces. Training
// waits until the buffer can fill a mini-batch.
class DqnAgent : public Agent {
 public:
  DqnAgent(ActionSpace space, HyperParams hp, uint64_t seed)
      : space_(std::move(space)),
        hp_(hp),
        encoder_(space_.num_devices(), space_.per_device_count()),
        buffer_(hp.buffer_capacity),
        init_rng_(mix_seed(seed, 0x6471)) {
    hp_.validate();
    epsilon_ = hp_.epsilon;
    const int hidden = hp_.dqn_hidden > 0 ? hp_.dqn_hidden
                                          : HyperParams::dqn_hidden_for(space_.num_devices());
    net_ = Mlp::xavier(encoder_.total_dim(), hidden, init_rng_);
    rebuild_column_cache();
  }

  const ActionSpace& space() const override { return space_; }
  double epsilon() const override { return epsilon_; }
  const char* kind() const override { return "dqn"; }
  Mlp& network() { return net_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const HyperParams& hyper() const { return hp_; }
  uint64_t training_steps() const { return train_steps_; }

  uint64_t greedy_action(const DiscreteState& state) override {
    return best_action(state).first;
  }

  uint64_t select_action(const DiscreteState& state, Rng& rng) override {
    if (rng.uniform() < epsilon_) return rng.below(space_.joint_count());
    return greedy_action(state);
  }

  void observe(const DiscreteState& s, uint64_t action, double reward, const DiscreteState& next,
               Rng& rng) override {
    buffer_.push({s, action, reward, next});
    if (buffer_.size() >= std::min<size_t>(hp_.batch_size, buffer_.capacity())) train_step(rng);
    ++step_count_;
    if (step_count_ % hp_.dqn_epoch_steps == 0) decay_epsilon();
  }

  void decay_epsilon() { epsilon_ = std::max(hp_.epsilon_min, epsilon_ * hp_.epsilon_decay); }

  void warm_start_from(const DqnAgent& source) {
    if (source.net_.input_dim != net_.input_dim || source.net_.hidden_dim != net_.hidden_dim)
      throw std::invalid_argument("warm_start: incompatible network shapes");
    net_ = source.net_;
    rebuild_column_cache();
  }

  void load_network(const std::string& path) {
    Mlp loaded = Mlp::load(path);
    if (loaded.input_dim != net_.input_dim || loaded.hidden_dim != net_.hidden_dim)
      throw std::invalid_argument("DqnAgent::load_network: incompatible network shapes");
    net_ = std::move(loaded);
    rebuild_column_cache();
  }

  void save(const std::string& path) const override { net_.save(path); }

  // Exact greedy sweep: hidden units are evaluated as the state projection
  // plus one cached w1 column per device digit, skipping the zero blocks of
  // the one-hot encoding.
  std::pair<uint64_t, double> best_action(const DiscreteState& state) {
    const int H = net_.hidden_dim;
    std::vector<double> sproj(H);
    state_projection(state, sproj.data());
    std::vector<uint32_t> digits(space_.num_devices());
    std::vector<double> z(H);
    uint64_t best_idx = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (uint64_t a = 0; a < space_.joint_count(); ++a) {
      encoder_.action_digits(a, digits.data());
      std::copy(sproj.begin(), sproj.end(), z.begin());
      for (int d = 0; d < space_.num_devices(); ++d) {
        const double* col = column(d, digits[d]);
        for (int h = 0; h < H; ++h) z[h] += col[h];
      }
      double q = net_.b2;
      for (int h = 0; h < H; ++h)
        if (z[h] > 0.0) q += net_.w2[h] * z[h];
      if (q > best_val) {
        best_val = q;
        best_idx = a;
      }
    }
    return {best_idx, best_val};
  }

 private:
  void state_projection(const DiscreteState& state, double* out) const {
    std::vector<double> feats(encoder_.state_dim());
    encoder_.write_state(state, feats.data());
    for (int h = 0; h < net_.hidden_dim; ++h) {
      const double* row = net_.w1.data() + static_cast<size_t>(h) * net_.input_dim;
      double v = net_.b1[h];
      for (int j = 0; j < encoder_.state_dim(); ++j) v += row[j] * feats[j];
      out[h] = v;
    }
  }

  // w1 columns for the action one-hot block, transposed for contiguous reads.
  void rebuild_column_cache() {
    const int H = net_.hidden_dim;
    const int cols = encoder_.action_dim();
    columns_.assign(static_cast<size_t>(cols) * H, 0.0);
    for (int c = 0; c < cols; ++c)
      for (int h = 0; h < H; ++h)
        columns_[static_cast<size_t>(c) * H + h] =
            net_.w1[static_cast<size_t>(h) * net_.input_dim + encoder_.state_dim() + c];
  }

  const double* column(int device, uint32_t digit) const {
    const size_t c = static_cast<size_t>(device) * space_.per_device_count() + digit;
    return columns_.data() + c * net_.hidden_dim;
  }

  void train_step(Rng& rng) {
    const size_t k = std::min<size_t>(hp_.batch_size, buffer_.size());
    const auto idx = buffer_.sample_indices(k, rng);
    std::vector<std::vector<double>> inputs;
    std::vector<double> targets;
    inputs.reserve(k);
    targets.reserve(k);
    for (size_t i : idx) {
      const auto& rec = buffer_.at(i);
      inputs.push_back(encoder_.encode(rec.state, rec.action));
      targets.push_back(rec.reward + hp_.gamma * best_action(rec.next_state).second);
    }
    MlpGrads grads;
    mse_loss_and_grads(net_, inputs, targets, grads);
    sgd_step(net_, grads, hp_.learning_rate);
    rebuild_column_cache();
    ++train_steps_;
  }

  ActionSpace space_;
  HyperParams hp_;
  StateActionEncoder encoder_;
  ReplayBuffer buffer_;
  Rng init_rng_;
  Mlp net_;
  std::vector<double> columns_;
  double epsilon_ = 1.0;
  uint64_t step_count_ = 0;
  uint64_t train_steps_ = 0;
};

enum class FixedKind { DeviceOnly, EdgeOnly, CloudOnly };

// All devices on one tier, most accurate model.
inline JointAction fixed_policy(FixedKind kind, const ScenarioConfig& sc) {
  Tier tier = kind == FixedKind::DeviceOnly ? Tier::End
              : kind == FixedKind::EdgeOnly ? Tier::Edge
                                            : Tier::Cloud;
  JointAction a;
  a.devices.assign(sc.num_end_devices, DeviceAction{tier, 0});
  return a;
}

// Non-learning agent that always plays one joint action.
class FixedAgent : public Agent {
 public:
  FixedAgent(ActionSpace space, uint64_t action_index)
      : space_(std::move(space)), action_(action_index) {
    if (action_ >= space_.joint_count())
      throw std::out_of_range("FixedAgent: action outside the space");
  }

  const ActionSpace& space() const override { return space_; }
  uint64_t greedy_action(const DiscreteState&) override { return action_; }
  uint64_t select_action(const DiscreteState&, Rng&) override { return action_; }
  void observe(const DiscreteState&, uint64_t, double, const DiscreteState&, Rng&) override {}
  double epsilon() const override { return 0.0; }
  void save(const std::string&) const override {}
  const char* kind() const override { return "fixed"; }

 private:
  ActionSpace space_;
  uint64_t action_;
};

// The offload-only baseline: tabular Q-learning restricted to the three
// placement actions per device, always with the most accurate model.
inline QLearningAgent sota_agent(const ScenarioConfig& sc, HyperParams hp) {
  return QLearningAgent(ActionSpace::offload_only(sc), hp);
}

}  // namespace eeco
