#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tbltag/errors.hpp"
#include "tbltag/features.hpp"
#include "tbltag/hash.hpp"

namespace tbltag {

struct TrainedRule {
  Rule rule;
  long long improvement = 0;

  bool operator==(const TrainedRule& o) const {
    return improvement == o.improvement && rule == o.rule;
  }
};

// The ordered model produced by training. Application must respect emission
// order. `passes` is a transient training statistic and takes no part in
// model identity or serialization.
struct RuleSequence {
  std::vector<TrainedRule> rules;
  long long threshold = 2;
  std::uint64_t config_hash = 0;
  int passes = 0;

  bool operator==(const RuleSequence& o) const {
    return rules == o.rules && threshold == o.threshold &&
           config_hash == o.config_hash;
  }
};

// --- rule serialization ----------------------------------------------------
//
// One condition: `feature@distance op value`, conditions joined by ';',
// empty antecedent spelled `none`. Cue values are quoted comma-separated
// patterns. Round-trips bit-exactly.

namespace detail {

inline std::string quote_pattern(const std::vector<std::string>& tokens) {
  std::string out = "\"";
  const std::string joined = join(tokens);
  for (char c : joined) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace detail

inline std::string serialize_condition(const ConditionInstance& inst) {
  std::string out = to_string(inst.cond.feature) + "@" +
                    std::to_string(inst.cond.distance) + " " +
                    to_string(inst.op) + " ";
  switch (inst.cond.feature) {
    case FeatureKind::Length:
      out += std::to_string(inst.int_value);
      break;
    case FeatureKind::Speaker:
    case FeatureKind::Tag:
      out += inst.sym_value;
      break;
    case FeatureKind::SpeakerChange:
      out += inst.bool_value ? "true" : "false";
      break;
    case FeatureKind::Cue: {
      for (std::size_t i = 0; i < inst.patterns.size(); ++i) {
        if (i) out += ',';
        out += detail::quote_pattern(inst.patterns[i]);
      }
      break;
    }
  }
  return out;
}

inline std::string serialize_rule(const Rule& rule) {
  if (rule.antecedent.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < rule.antecedent.size(); ++i) {
    if (i) out += ';';
    out += serialize_condition(rule.antecedent[i]);
  }
  return out;
}

// Total order used to break full ties between equal-improvement rules with
// equal condition counts from the same template.
inline std::string rule_sort_key(const Rule& rule) {
  return serialize_rule(rule) + "\t" + rule.new_tag;
}

namespace detail {

inline std::vector<std::string> split_on(const std::string& s, char sep,
                                         bool respect_quotes) {
  std::vector<std::string> out;
  std::string cur;
  bool in_quotes = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (respect_quotes && c == '\\' && i + 1 < s.size() && in_quotes) {
      cur += c;
      cur += s[++i];
      continue;
    }
    if (respect_quotes && c == '"') in_quotes = !in_quotes;
    if (c == sep && !in_quotes) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::vector<std::string> unquote_pattern(const std::string& s) {
  if (s.size() < 2 || s.front() != '"' || s.back() != '"')
    throw DataError("cue pattern must be quoted: " + s);
  std::string joined;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] == '\\' && i + 2 < s.size()) ++i;
    joined += s[i];
  }
  auto tokens = split_spaces(joined);
  if (tokens.empty()) throw DataError("empty cue pattern");
  return tokens;
}

}  // namespace detail

inline ConditionInstance parse_condition_instance(const std::string& text) {
  const std::string s = detail::trim(text);
  std::size_t at = s.find('@');
  if (at == std::string::npos)
    throw DataError("bad condition '" + s + "' (missing @)");
  std::size_t sp1 = s.find(' ', at);
  if (sp1 == std::string::npos)
    throw DataError("bad condition '" + s + "' (missing op)");
  std::size_t sp2 = s.find(' ', sp1 + 1);
  if (sp2 == std::string::npos)
    throw DataError("bad condition '" + s + "' (missing value)");
  ConditionInstance inst;
  inst.cond.feature = feature_from_string(s.substr(0, at));
  try {
    inst.cond.distance = std::stoi(s.substr(at + 1, sp1 - at - 1));
  } catch (const std::exception&) {
    throw DataError("bad condition distance in '" + s + "'");
  }
  validate_condition(inst.cond);
  const std::string op = s.substr(sp1 + 1, sp2 - sp1 - 1);
  const std::string value = s.substr(sp2 + 1);
  if (op == "eq") {
    inst.op = TestOp::Equals;
  } else if (op == "lt") {
    inst.op = TestOp::LessThan;
  } else if (op == "includes") {
    inst.op = TestOp::Includes;
  } else {
    throw DataError("unknown test op '" + op + "'");
  }
  switch (inst.cond.feature) {
    case FeatureKind::Length:
      if (inst.op == TestOp::Includes)
        throw DataError("length takes eq or lt");
      try {
        inst.int_value = std::stoll(value);
      } catch (const std::exception&) {
        throw DataError("bad length value '" + value + "'");
      }
      break;
    case FeatureKind::Speaker:
    case FeatureKind::Tag:
      if (inst.op != TestOp::Equals)
        throw DataError(to_string(inst.cond.feature) + " takes eq only");
      if (value.empty()) throw DataError("empty symbol value");
      inst.sym_value = value;
      break;
    case FeatureKind::SpeakerChange:
      if (inst.op != TestOp::Equals)
        throw DataError("speaker_change takes eq only");
      if (value == "true") {
        inst.bool_value = true;
      } else if (value == "false") {
        inst.bool_value = false;
      } else {
        throw DataError("speaker_change value must be true or false");
      }
      break;
    case FeatureKind::Cue: {
      if (inst.op != TestOp::Includes) throw DataError("cue takes includes");
      for (const auto& part : detail::split_on(value, ',', true))
        inst.patterns.push_back(detail::unquote_pattern(detail::trim(part)));
      if (inst.patterns.empty()) throw DataError("empty cue pattern list");
      std::sort(inst.patterns.begin(), inst.patterns.end());
      break;
    }
  }
  return inst;
}

inline Rule parse_rule(const std::string& new_tag,
                       const std::string& conditions) {
  Rule r;
  r.new_tag = new_tag;
  if (detail::trim(conditions) != "none") {
    for (const auto& part :
         detail::split_on(conditions, ';', true))
      r.antecedent.push_back(parse_condition_instance(part));
  }
  r.canonicalize();
  return r;
}

// --- .tblm format -----------------------------------------------------------
//
// Header `tblm v1 <config-hash> <threshold>`, then one rule per line:
// improvement <TAB> new_tag <TAB> cond;cond;...

inline void save_model(const RuleSequence& model, std::ostream& out) {
  out << "tblm v1 " << hash_hex(model.config_hash) << ' ' << model.threshold
      << '\n';
  for (const auto& tr : model.rules) {
    out << tr.improvement << '\t' << tr.rule.new_tag << '\t'
        << serialize_rule(tr.rule) << '\n';
  }
}

inline std::string save_model_string(const RuleSequence& model) {
  std::ostringstream os;
  save_model(model, os);
  return os.str();
}

inline RuleSequence load_model(std::istream& in) {
  RuleSequence model;
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw ParseError("empty model file", 1);
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    std::istringstream hs(line);
    std::string magic, version, hash;
    long long threshold = 0;
    if (!(hs >> magic >> version >> hash >> threshold) || magic != "tblm")
      throw ParseError("bad model header", lineno);
    if (version != "v1")
      throw ParseError("unsupported model version '" + version + "'", lineno);
    try {
      model.config_hash = std::stoull(hash, nullptr, 16);
    } catch (const std::exception&) {
      throw ParseError("bad config hash '" + hash + "'", lineno);
    }
    model.threshold = threshold;
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = detail::split_tabs(line);
    if (fields.size() != 3)
      throw ParseError("expected 3 tab-separated fields", lineno);
    TrainedRule tr;
    try {
      tr.improvement = std::stoll(fields[0]);
    } catch (const std::exception&) {
      throw ParseError("bad improvement '" + fields[0] + "'", lineno);
    }
    if (fields[1].empty()) throw ParseError("empty new tag", lineno);
    try {
      tr.rule = parse_rule(fields[1], fields[2]);
    } catch (const DataError& e) {
      throw ParseError(e.what(), lineno);
    }
    model.rules.push_back(std::move(tr));
  }
  return model;
}

inline RuleSequence load_model_string(const std::string& text) {
  std::istringstream in(text);
  return load_model(in);
}

inline RuleSequence load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file: " + path);
  return load_model(in);
}

inline void save_model_file(const RuleSequence& model,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file: " + path);
  save_model(model, out);
}

}  // namespace tbltag
