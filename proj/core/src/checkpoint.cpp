#include "fcp/checkpoint.hpp"

#include <cmath>
#include <fstream>

#include "fcp/errors.hpp"

namespace fcp {

namespace {

using nlohmann::json;

json doubles(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) {
    if (std::isfinite(x)) {
      a.push_back(x);
    } else if (x < 0) {
      a.push_back(nullptr);
    } else {
      throw ContractViolation("cannot checkpoint a non-finite parameter");
    }
  }
  return a;
}

std::vector<double> read_doubles(const json& a) {
  std::vector<double> v;
  v.reserve(a.size());
  for (const auto& x : a) v.push_back(x.is_null() ? -std::numeric_limits<double>::infinity() : x.get<double>());
  return v;
}

json tokens(const std::vector<Token>& t) {
  json a = json::array();
  for (Token x : t) a.push_back(x.id);
  return a;
}

std::vector<Token> read_tokens(const json& a) {
  std::vector<Token> t;
  for (const auto& x : a) t.push_back(Token{x.get<std::uint32_t>()});
  return t;
}

Role role_of(const std::string& s) {
  for (Role r : {Role::kInstruction, Role::kResponse, Role::kFeedback, Role::kContext, Role::kCritiqueContext}) {
    if (to_string(r) == s) return r;
  }
  throw ParseError("unknown role '" + s + "' in checkpoint", 1);
}

json blocks(const std::map<BlockKey, std::vector<double>>& m) {
  json a = json::array();
  for (const auto& [k, v] : m) a.push_back({{"key", tokens(k)}, {"values", doubles(v)}});
  return a;
}

std::map<BlockKey, std::vector<double>> read_blocks(const json& a) {
  std::map<BlockKey, std::vector<double>> m;
  for (const auto& e : a) m[read_tokens(e.at("key"))] = read_doubles(e.at("values"));
  return m;
}

}  // namespace

json checkpoint_to_json(const PolicyParameters& params, const OptimizerState* optimizer) {
  json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["vocab_hash"] = params.vocab_hash;
  j["backend"] = std::string(to_string(params.backend()));
  j["purpose"] = params.purpose == PolicyPurpose::kResponse ? "response" : "critique";
  j["tag"] = params.tag;
  if (params.backend() == Backend::kTabular) {
    const auto& t = params.tabular();
    json spaces = json::array();
    for (const auto& [k, targets] : t.spaces) {
      json tg = json::array();
      for (const auto& s : targets) tg.push_back({{"role", std::string(to_string(s.role()))}, {"tokens", tokens(s.tokens())}});
      spaces.push_back({{"key", tokens(k)}, {"targets", tg}});
    }
    j["tabular"] = {{"vocab_size", t.vocab_size},
                    {"spaces", spaces},
                    {"reference", blocks(t.reference)},
                    {"rows", blocks(t.rows)}};
  } else {
    const auto& w = params.neural();
    j["neural"] = {{"vocab", w.shape.vocab},   {"dim", w.shape.dim},         {"layers", w.shape.layers},
                   {"hidden", w.shape.hidden}, {"max_len", w.shape.max_len}, {"values", doubles(w.values)}};
  }
  if (optimizer) {
    json moments = json::array();
    for (const auto& [k, m] : optimizer->moments) {
      moments.push_back({{"key", tokens(k)}, {"first", doubles(m.first)}, {"second", doubles(m.second)}});
    }
    const auto& s = optimizer->schedule;
    j["optimizer"] = {{"step", optimizer->step},
                      {"beta1", optimizer->adam.beta1},
                      {"beta2", optimizer->adam.beta2},
                      {"eps", optimizer->adam.eps},
                      {"weight_decay", optimizer->adam.weight_decay},
                      {"schedule",
                       {{"kind", s.kind == LrSchedule::Kind::kCosine ? "cosine" : "constant"},
                        {"base_lr", s.base_lr},
                        {"total_steps", s.total_steps},
                        {"warmup_steps", s.warmup_steps}}},
                      {"moments", moments}};
  }
  return j;
}

Checkpoint checkpoint_from_json(const json& j, std::uint64_t expected_vocab_hash) {
  Checkpoint out;
  try {
    if (j.at("format_version").get<int>() != kCheckpointFormatVersion) {
      throw ParseError("unsupported checkpoint format_version", 1);
    }
    auto& p = out.params;
    p.vocab_hash = j.at("vocab_hash").get<std::uint64_t>();
    if (p.vocab_hash != expected_vocab_hash) {
      throw ContractViolation("checkpoint vocabulary hash " + std::to_string(p.vocab_hash) +
                              " does not match the experiment vocabulary " + std::to_string(expected_vocab_hash));
    }
    p.purpose = j.at("purpose").get<std::string>() == "critique" ? PolicyPurpose::kCritique : PolicyPurpose::kResponse;
    p.tag = j.at("tag").get<std::string>();
    if (parse_backend(j.at("backend").get<std::string>()) == Backend::kTabular) {
      const auto& tj = j.at("tabular");
      TabularTable t;
      t.vocab_size = tj.at("vocab_size").get<std::size_t>();
      for (const auto& s : tj.at("spaces")) {
        std::vector<TokenSequence> targets;
        for (const auto& tg : s.at("targets")) {
          targets.emplace_back(role_of(tg.at("role").get<std::string>()), read_tokens(tg.at("tokens")));
        }
        t.spaces[read_tokens(s.at("key"))] = std::move(targets);
      }
      t.reference = read_blocks(tj.at("reference"));
      t.rows = read_blocks(tj.at("rows"));
      p.impl = std::move(t);
    } else {
      const auto& nj = j.at("neural");
      NeuralWeights w;
      w.shape = {nj.at("vocab").get<std::size_t>(), nj.at("dim").get<std::size_t>(), nj.at("layers").get<std::size_t>(),
                 nj.at("hidden").get<std::size_t>(), nj.at("max_len").get<std::size_t>()};
      w.values = read_doubles(nj.at("values"));
      p.impl = std::move(w);
    }
    if (j.contains("optimizer")) {
      const auto& oj = j.at("optimizer");
      OptimizerState s;
      s.step = oj.at("step").get<std::int64_t>();
      s.adam = {oj.at("beta1").get<double>(), oj.at("beta2").get<double>(), oj.at("eps").get<double>(),
                oj.at("weight_decay").get<double>()};
      const auto& sj = oj.at("schedule");
      s.schedule.kind = sj.at("kind").get<std::string>() == "cosine" ? LrSchedule::Kind::kCosine : LrSchedule::Kind::kConstant;
      s.schedule.base_lr = sj.at("base_lr").get<double>();
      s.schedule.total_steps = sj.at("total_steps").get<std::int64_t>();
      s.schedule.warmup_steps = sj.at("warmup_steps").get<std::int64_t>();
      for (const auto& m : oj.at("moments")) {
        s.moments[read_tokens(m.at("key"))] = {read_doubles(m.at("first")), read_doubles(m.at("second"))};
      }
      out.optimizer = std::move(s);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what(), 1);
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const PolicyParameters& params, const OptimizerState* optimizer) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write checkpoint " + path.string());
  f << checkpoint_to_json(params, optimizer).dump() << '\n';
  if (!f) throw IoError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, std::uint64_t expected_vocab_hash) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MissingArtifact("missing checkpoint " + path.string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what(), 1);
  }
  return checkpoint_from_json(j, expected_vocab_hash);
}

std::uint64_t parameter_digest(const PolicyParameters& params) {
  return fnv1a(checkpoint_to_json(params).dump());
}

}  // namespace fcp
