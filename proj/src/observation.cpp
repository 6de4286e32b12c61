#include "censet/observation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_set>

#include <json.hpp>

#include "censet/errors.hpp"
#include "censet/log_math.hpp"
#include "censet/numeric_policy.hpp"

namespace censet {

std::string_view to_string(AccessMode mode) noexcept {
  return mode == AccessMode::UnnormalizedLogits ? "logits" : "logprobs";
}

AccessMode parse_access_mode(std::string_view text) {
  if (text == "logits") return AccessMode::UnnormalizedLogits;
  if (text == "logprobs") return AccessMode::NormalizedLogProbs;
  throw Error(ErrorCode::Validation,
              "mode must be \"logits\" or \"logprobs\", got \"" + std::string(text) + "\"");
}

void validate(const TopKObservation& obs) {
  const std::size_t k = obs.revealed.size();
  if (obs.vocab_size == 0) throw Error(ErrorCode::Validation, "vocab_size must be positive");
  if (k == 0) throw Error(ErrorCode::Validation, "topk must reveal at least one token");
  if (k > obs.vocab_size) {
    throw Error(ErrorCode::Validation, "K=" + std::to_string(k) + " exceeds vocab_size=" +
                                           std::to_string(obs.vocab_size));
  }
  std::unordered_set<TokenId> seen;
  seen.reserve(k);
  for (const auto& r : obs.revealed) {
    if (r.token < 0 || static_cast<std::size_t>(r.token) >= obs.vocab_size) {
      throw Error(ErrorCode::Validation, "token id " + std::to_string(r.token) +
                                             " outside [0, " + std::to_string(obs.vocab_size) + ")");
    }
    if (!seen.insert(r.token).second) {
      throw Error(ErrorCode::Validation, "duplicate token id " + std::to_string(r.token));
    }
    if (!std::isfinite(r.score)) {
      throw Error(ErrorCode::Validation, "non-finite score for token " + std::to_string(r.token));
    }
  }
  for (std::size_t i = 1; i < k; ++i) {
    if (obs.revealed[i].score > obs.revealed[i - 1].score) {
      throw Error(ErrorCode::Validation, "revealed scores are not sorted non-increasing");
    }
  }
  if (obs.input_order.size() != k) {
    throw Error(ErrorCode::Validation, "input_order length does not match K");
  }
  if (obs.mode == AccessMode::NormalizedLogProbs) {
    const double slack = std::log1p(numeric_policy().head_mass_tol);
    std::vector<double> scores(k);
    for (std::size_t i = 0; i < k; ++i) scores[i] = obs.revealed[i].score;
    if (scores.front() > slack) {
      throw Error(ErrorCode::Validation, "log-probability above 0 under logprobs mode");
    }
    const double log_head = log_sum_exp(scores);
    if (log_head > slack) {
      throw Error(ErrorCode::Validation,
                  "normalized head mass " + std::to_string(std::exp(log_head)) + " exceeds 1");
    }
  }
}

TopKObservation make_observation(std::size_t vocab_size, std::vector<RevealedToken> revealed,
                                 AccessMode mode, std::string position_id) {
  TopKObservation obs;
  obs.vocab_size = vocab_size;
  obs.mode = mode;
  obs.position_id = std::move(position_id);

  // Check finiteness before sorting so NaN never reaches the comparator.
  for (const auto& r : revealed) {
    if (!std::isfinite(r.score)) {
      throw Error(ErrorCode::Validation, "non-finite score for token " + std::to_string(r.token));
    }
  }
  std::vector<std::size_t> order(revealed.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return revealed[a].score > revealed[b].score;
  });
  obs.revealed.reserve(revealed.size());
  for (std::size_t i : order) obs.revealed.push_back(revealed[i]);
  obs.input_order = std::move(order);
  validate(obs);
  return obs;
}

namespace {

const nlohmann::json& require(const nlohmann::json& doc, const char* key, std::size_t line) {
  auto it = doc.find(key);
  if (it == doc.end()) {
    throw ParseError(ErrorCode::Parse, line, std::string("missing field '") + key + "'");
  }
  return *it;
}

}  // namespace

TopKObservation parse_observation_line(std::string_view text, std::size_t line) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(ErrorCode::Parse, line, std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError(ErrorCode::Parse, line, "record is not a JSON object");

  try {
    const auto& v = require(doc, "vocab_size", line);
    if (!v.is_number_integer() || v.get<std::int64_t>() <= 0) {
      throw ParseError(ErrorCode::Validation, line, "vocab_size must be a positive integer");
    }
    const auto& m = require(doc, "mode", line);
    if (!m.is_string()) throw ParseError(ErrorCode::Parse, line, "mode must be a string");
    const auto& topk = require(doc, "topk", line);
    if (!topk.is_array()) throw ParseError(ErrorCode::Parse, line, "topk must be an array");

    std::vector<RevealedToken> revealed;
    revealed.reserve(topk.size());
    for (const auto& entry : topk) {
      if (!entry.is_object()) throw ParseError(ErrorCode::Parse, line, "topk entries must be objects");
      const auto& tok = require(entry, "token", line);
      const auto& score = require(entry, "score", line);
      if (!tok.is_number_integer()) throw ParseError(ErrorCode::Parse, line, "token must be an integer");
      if (!score.is_number()) {
        // nlohmann maps NaN/inf literals to errors already; strings land here.
        throw ParseError(ErrorCode::Validation, line, "score must be a finite number");
      }
      revealed.push_back({tok.get<TokenId>(), score.get<double>()});
    }

    std::string position_id;
    if (auto it = doc.find("position_id"); it != doc.end()) {
      if (!it->is_string()) throw ParseError(ErrorCode::Parse, line, "position_id must be a string");
      position_id = it->get<std::string>();
    }
    return make_observation(static_cast<std::size_t>(v.get<std::int64_t>()), std::move(revealed),
                            parse_access_mode(m.get<std::string>()), std::move(position_id));
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(e.code(), line, e.what());
  }
}

std::vector<TopKObservation> parse_observations(std::istream& in) {
  std::vector<TopKObservation> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_observation_line(text, line));
  }
  return out;
}

std::string serialize_observation(const TopKObservation& obs) {
  nlohmann::ordered_json doc;
  doc["vocab_size"] = obs.vocab_size;
  doc["mode"] = std::string(to_string(obs.mode));
  std::vector<const RevealedToken*> original(obs.k());
  for (std::size_t i = 0; i < obs.k(); ++i) original[obs.input_order[i]] = &obs.revealed[i];
  auto topk = nlohmann::ordered_json::array();
  for (const RevealedToken* r : original) topk.push_back({{"token", r->token}, {"score", r->score}});
  doc["topk"] = std::move(topk);
  if (!obs.position_id.empty()) doc["position_id"] = obs.position_id;
  return doc.dump();
}

LogSummary summarize(const TopKObservation& obs) {
  LogSummary s;
  s.vocab_size = obs.vocab_size;
  s.m = obs.vocab_size - obs.k();
  s.scores.reserve(obs.k());
  s.revealed_ids.reserve(obs.k());
  for (const auto& r : obs.revealed) {
    s.scores.push_back(r.score);
    s.revealed_ids.push_back(r.token);
  }
  s.tau = s.scores.back();
  s.log_za = log_sum_exp(s.scores);
  s.alpha.reserve(obs.k());
  for (double z : s.scores) s.alpha.push_back(std::exp(z - s.log_za));
  return s;
}

std::vector<TokenId> censored_tokens(const LogSummary& summary) {
  std::vector<char> revealed(summary.vocab_size, 0);
  for (TokenId id : summary.revealed_ids) revealed[static_cast<std::size_t>(id)] = 1;
  std::vector<TokenId> out;
  out.reserve(summary.m);
  for (std::size_t i = 0; i < summary.vocab_size; ++i) {
    if (!revealed[i]) out.push_back(static_cast<TokenId>(i));
  }
  return out;
}

TailMass hidden_tail_mass(const TopKObservation& obs) {
  if (obs.mode != AccessMode::NormalizedLogProbs) {
    throw Error(ErrorCode::Mode, "hidden tail mass is only identified under logprobs access");
  }
  std::vector<double> scores;
  scores.reserve(obs.k());
  for (const auto& r : obs.revealed) scores.push_back(r.score);
  TailMass out;
  out.raw = -std::expm1(log_sum_exp(scores));
  // Nothing censored: the tail is empty whatever the rounding says.
  out.value = obs.censored_count() == 0 ? 0.0 : std::clamp(out.raw, 0.0, 1.0);
  out.clamp_reported = out.raw < -numeric_policy().clamp_report_tol;
  return out;
}

}  // namespace censet
