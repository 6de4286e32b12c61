#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace censet {

using TokenId = std::int64_t;

enum class AccessMode {
  UnnormalizedLogits,  // "logits"
  NormalizedLogProbs,  // "logprobs"
};

std::string_view to_string(AccessMode mode) noexcept;
AccessMode parse_access_mode(std::string_view text);

struct RevealedToken {
  TokenId token = 0;
  double score = 0.0;
};

/// One censored next-token observation. `revealed` is kept sorted by
/// non-increasing score; `input_order[i]` is the index that revealed[i] had
/// in the record it was parsed from.
struct TopKObservation {
  std::size_t vocab_size = 0;
  std::vector<RevealedToken> revealed;
  AccessMode mode = AccessMode::UnnormalizedLogits;
  std::string position_id;
  std::vector<std::size_t> input_order;

  std::size_t k() const noexcept { return revealed.size(); }
  std::size_t censored_count() const noexcept { return vocab_size - revealed.size(); }
  double tau() const { return revealed.back().score; }
};

/// Validates and sorts. Throws Error(Validation) on any broken invariant.
TopKObservation make_observation(std::size_t vocab_size,
                                 std::vector<RevealedToken> revealed,
                                 AccessMode mode,
                                 std::string position_id = {});

void validate(const TopKObservation& obs);

/// One JSON record -> observation. `line` is used in error messages only.
TopKObservation parse_observation_line(std::string_view text, std::size_t line = 1);

/// Line-delimited records; blank lines are skipped. Errors carry the line.
std::vector<TopKObservation> parse_observations(std::istream& in);

/// Inverse of parse_observation_line: revealed tokens in their input order.
std::string serialize_observation(const TopKObservation& obs);

/// Log-domain quantities shared by every downstream module.
struct LogSummary {
  std::size_t vocab_size = 0;
  std::size_t m = 0;  // V - K censored tokens
  double log_za = 0.0;
  double tau = 0.0;
  std::vector<double> alpha;           // head conditional, sorted like revealed
  std::vector<TokenId> revealed_ids;   // sorted like revealed
  std::vector<double> scores;          // sorted non-increasing

  std::size_t k() const noexcept { return revealed_ids.size(); }
};

LogSummary summarize(const TopKObservation& obs);

/// Ids in [0, V) that are not revealed, ascending.
std::vector<TokenId> censored_tokens(const LogSummary& summary);

struct TailMass {
  double value = 0.0;   // clamped to [0, 1]
  double raw = 0.0;     // 1 - sum exp(score) before clamping
  bool clamp_reported = false;
};

/// Exact hidden tail mass; only identified under normalized access.
TailMass hidden_tail_mass(const TopKObservation& obs);

}  // namespace censet
