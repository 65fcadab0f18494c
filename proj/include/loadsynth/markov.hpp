#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "quantizer.hpp"
#include "rng.hpp"

namespace loadsynth {

using StateSequence = std::vector<State>;

/// Sparse probability distribution over states, sorted by state.
struct Distribution {
  std::vector<State> states;
  std::vector<double> probs;

  template <typename CountMap>
  static Distribution from_counts(const CountMap& counts) {
    Distribution d;
    double total = 0.0;
    for (const auto& [s, c] : counts) total += static_cast<double>(c);
    for (const auto& [s, c] : counts) {
      d.states.push_back(s);
      d.probs.push_back(static_cast<double>(c) / total);
    }
    return d;
  }

  [[nodiscard]] double sum() const {
    double t = 0.0;
    for (double p : probs) t += p;
    return t;
  }

  [[nodiscard]] double probability(State s) const {
    auto it = std::lower_bound(states.begin(), states.end(), s);
    return it != states.end() && *it == s ? probs[static_cast<std::size_t>(it - states.begin())] : 0.0;
  }

  State sample(Rng& rng) const { return states[rng.categorical(probs)]; }

  friend bool operator==(const Distribution&, const Distribution&) = default;
};

/// Orders contexts lexicographically and accepts spans for lookup.
struct ContextLess {
  using is_transparent = void;
  template <typename A, typename B>
  bool operator()(const A& a, const B& b) const {
    return std::lexicographical_compare(std::begin(a), std::end(a), std::begin(b), std::end(b));
  }
};

using Context = std::vector<State>;
using TransitionTable = std::map<Context, Distribution, ContextLess>;

/// Order-l chain over fixed-length sequences with one transition table
/// per position: tables[i - 1] maps the min(i, order) states preceding
/// position i to the distribution of the state at i.
struct MmcModel {
  std::size_t order = 1;
  std::size_t length = 0;
  std::size_t n_states = 0;
  Distribution initial;
  std::vector<TransitionTable> tables;

  [[nodiscard]] std::size_t context_length(std::size_t position) const { return std::min(position, order); }

  friend bool operator==(const MmcModel&, const MmcModel&) = default;
};

/// Counts position-specific transitions. Only observed contexts are stored.
/// `n_states` of 0 means one more than the largest state seen.
inline MmcModel train_mmc(std::span<const StateSequence> sequences, std::size_t order, std::size_t n_states = 0) {
  if (sequences.empty()) throw ArgumentError("train_mmc: no sequences");
  if (order < 1) throw ArgumentError("train_mmc: order must be at least 1");
  const std::size_t length = sequences.front().size();
  if (length < 2) throw ArgumentError("train_mmc: sequences need length >= 2");
  State max_state = 0;
  for (const auto& s : sequences) {
    if (s.size() != length) throw ArgumentError("train_mmc: sequences have mixed lengths");
    for (State st : s) max_state = std::max(max_state, st);
  }
  if (n_states == 0) n_states = static_cast<std::size_t>(max_state) + 1;
  if (max_state >= n_states) throw ArgumentError("train_mmc: state id exceeds n_states");

  MmcModel model;
  model.order = order;
  model.length = length;
  model.n_states = n_states;

  std::map<State, std::size_t> first;
  for (const auto& s : sequences) ++first[s[0]];
  model.initial = Distribution::from_counts(first);

  model.tables.resize(length - 1);
  for (std::size_t pos = 1; pos < length; ++pos) {
    std::map<Context, std::map<State, std::size_t>, ContextLess> counts;
    const std::size_t ctx = model.context_length(pos);
    for (const auto& s : sequences) {
      auto begin = s.begin() + static_cast<std::ptrdiff_t>(pos - ctx);
      ++counts[Context(begin, s.begin() + static_cast<std::ptrdiff_t>(pos))][s[pos]];
    }
    auto& table = model.tables[pos - 1];
    for (const auto& [context, next] : counts) table.emplace(context, Distribution::from_counts(next));
  }
  return model;
}

inline StateSequence sample_mmc(const MmcModel& model, Rng& rng) {
  StateSequence out;
  out.reserve(model.length);
  out.push_back(model.initial.sample(rng));
  for (std::size_t pos = 1; pos < model.length; ++pos) {
    const std::size_t ctx = model.context_length(pos);
    const std::span<const State> key(out.data() + (pos - ctx), ctx);
    const auto& table = model.tables[pos - 1];
    auto it = table.find(key);
    if (it == table.end()) {
      throw ClosureViolation("closure violation: unseen context at position " + std::to_string(pos));
    }
    out.push_back(it->second.sample(rng));
  }
  return out;
}

inline StateSequence sample_mmc(const MmcModel& model, std::uint64_t seed) {
  Rng rng(seed);
  return sample_mmc(model, rng);
}

/// Position-independent first-order chain pooled over all positions.
struct ClassicMarkovModel {
  std::size_t n_states = 0;
  Distribution initial;
  std::map<State, Distribution> rows;

  friend bool operator==(const ClassicMarkovModel&, const ClassicMarkovModel&) = default;
};

inline ClassicMarkovModel train_classic(std::span<const StateSequence> sequences, std::size_t n_states = 0) {
  if (sequences.empty()) throw ArgumentError("train_classic: no sequences");
  const std::size_t length = sequences.front().size();
  if (length < 2) throw ArgumentError("train_classic: sequences need length >= 2");
  State max_state = 0;
  for (const auto& s : sequences) {
    if (s.size() != length) throw ArgumentError("train_classic: sequences have mixed lengths");
    for (State st : s) max_state = std::max(max_state, st);
  }
  if (n_states == 0) n_states = static_cast<std::size_t>(max_state) + 1;
  if (max_state >= n_states) throw ArgumentError("train_classic: state id exceeds n_states");

  ClassicMarkovModel model;
  model.n_states = n_states;
  std::map<State, std::size_t> first;
  std::map<State, std::map<State, std::size_t>> counts;
  for (const auto& s : sequences) {
    ++first[s[0]];
    for (std::size_t i = 1; i < s.size(); ++i) ++counts[s[i - 1]][s[i]];
  }
  model.initial = Distribution::from_counts(first);
  for (const auto& [from, next] : counts) model.rows.emplace(from, Distribution::from_counts(next));
  return model;
}

/// A state without an outgoing row repeats itself.
inline StateSequence sample_classic(const ClassicMarkovModel& model, std::size_t length, Rng& rng) {
  StateSequence out;
  if (length == 0) return out;
  out.reserve(length);
  out.push_back(model.initial.sample(rng));
  for (std::size_t i = 1; i < length; ++i) {
    auto it = model.rows.find(out.back());
    out.push_back(it == model.rows.end() ? out.back() : it->second.sample(rng));
  }
  return out;
}

inline StateSequence sample_classic(const ClassicMarkovModel& model, std::size_t length, std::uint64_t seed) {
  Rng rng(seed);
  return sample_classic(model, length, rng);
}

/// Calls `fn` on every stored distribution.
inline void for_each_distribution(const MmcModel& m, const std::function<void(const Distribution&)>& fn) {
  fn(m.initial);
  for (const auto& table : m.tables)
    for (const auto& [ctx, d] : table) fn(d);
}

inline void for_each_distribution(const ClassicMarkovModel& m, const std::function<void(const Distribution&)>& fn) {
  fn(m.initial);
  for (const auto& [s, d] : m.rows) fn(d);
}

/// Structural checks: table count, context lengths, state range, row sums.
inline void validate(const MmcModel& m, double tolerance = 1e-9) {
  if (m.length < 2 || m.tables.size() != m.length - 1) throw ValidationError("mmc: wrong number of tables");
  auto check = [&](const Distribution& d) {
    if (d.states.empty() || d.states.size() != d.probs.size()) throw ValidationError("mmc: malformed distribution");
    for (State s : d.states)
      if (s >= m.n_states) throw ValidationError("mmc: state out of range");
    if (std::abs(d.sum() - 1.0) > tolerance) throw ValidationError("mmc: distribution does not sum to 1");
  };
  check(m.initial);
  for (std::size_t pos = 1; pos < m.length; ++pos) {
    if (m.tables[pos - 1].empty()) throw ValidationError("mmc: empty table at position " + std::to_string(pos));
    for (const auto& [ctx, d] : m.tables[pos - 1]) {
      if (ctx.size() != m.context_length(pos)) throw ValidationError("mmc: context has wrong length");
      check(d);
    }
  }
}

}  // namespace loadsynth
