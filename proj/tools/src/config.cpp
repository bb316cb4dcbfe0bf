#include "ecrl_cli/config.hpp"

#include "ecrl/errors.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace ecrl::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general);
  return std::string(buf, res.ptr);
}

std::vector<KeyInfo> build_keys() {
  using V = ValueType;
  return {
      {"env.kind", V::choice, "reach2d", "task: reach2d or push2d", {"reach2d", "push2d"}},
      {"env.workspace_radius", V::real, "1", "radius of the disk workspace", {}},
      {"env.max_steps", V::integer, "50", "steps per episode", {}},
      {"env.success_radius", V::real, "0.1", "goal tolerance", {}},
      {"env.action_scale", V::real, "0.1", "displacement per unit action", {}},
      {"env.noise_std", V::real, "0", "std of isotropic displacement noise", {}},
      {"env.agent_radius", V::real, "0.05", "push2d agent disk radius", {}},
      {"env.block_radius", V::real, "0.1", "push2d block disk radius", {}},
      {"env.start_radius", V::real, "0.5", "push2d agent start disk radius", {}},
      {"env.block_offset_min", V::real, "0.2", "push2d min block distance from agent at reset", {}},
      {"env.block_offset_max", V::real, "0.3", "push2d max block distance from agent at reset", {}},
      {"env.goal_offset", V::real, "0.4", "push2d goal disk radius around the block start", {}},
      {"agent.group", V::text, "c8", "symmetry group cN or dN", {}},
      {"agent.variant", V::choice, "ecrl", "critic variant", {"ecrl", "crl", "pooled"}},
      {"agent.metric", V::choice, "dot", "similarity metric", {"dot", "l2"}},
      {"agent.loss", V::choice, "bce", "contrastive loss", {"bce", "infonce"}},
      {"agent.actor", V::choice, "auto", "actor network kind", {"auto", "equivariant", "plain"}},
      {"agent.repr_k", V::integer, "16", "regular fields in each embedding", {}},
      {"agent.repr_dim_plain", V::integer, "64", "embedding width of the plain critic", {}},
      {"agent.hidden_blocks", V::integer, "32", "regular fields per hidden layer", {}},
      {"agent.hidden_width_plain", V::integer, "256", "hidden width of plain networks", {}},
      {"agent.hidden_layers", V::integer, "2", "hidden layers per network", {}},
      {"agent.init_log_std", V::real, "0", "initial actor log std", {}},
      {"agent.min_log_std", V::real, "-13.815510557964274", "lower clamp of the actor log std", {}},
      {"agent.max_log_std", V::real, "2", "upper clamp of the actor log std", {}},
      {"train.batch_size", V::integer, "256", "batch size", {}},
      {"train.gamma", V::real, "0.99", "discount for future-state sampling", {}},
      {"train.lr", V::real, "0.0003", "Adam learning rate", {}},
      {"train.total_env_steps", V::integer, "100000", "environment steps", {}},
      {"train.warmup_steps", V::integer, "10000", "initial uniform-random steps", {}},
      {"train.train_collect_interval", V::integer, "16", "env steps between update rounds", {}},
      {"train.updates_per_interval", V::integer, "1", "gradient updates per round", {}},
      {"train.replay_capacity", V::integer, "1000000", "replay capacity in transitions", {}},
      {"train.eval_interval", V::integer, "2000", "env steps between evaluations", {}},
      {"train.eval_goals", V::integer, "50", "episodes per evaluation", {}},
      {"train.stop_success", V::real, "0", "stop once evaluation success reaches this (0 = never)", {}},
      {"train.seed", V::integer, "0", "run seed", {}},
      {"entropy.alpha_init", V::real, "1", "initial entropy coefficient", {}},
      {"entropy.auto_tune", V::boolean, "true", "tune the entropy coefficient", {}},
      {"entropy.target", V::real, "0", "target entropy", {}},
      {"offline.lambda", V::real, "0.25", "critic weight in the offline actor loss", {}},
      {"offline.relabel", V::choice, "future", "offline goal relabelling", {"future", "final"}},
      {"offline.gradient_steps", V::integer, "20000", "offline gradient steps", {}},
      {"offline.eval_interval", V::integer, "1000", "gradient steps between offline evaluations", {}},
      {"offline.eval_goals", V::integer, "100", "episodes per offline evaluation", {}},
      {"offline.dataset", V::text, "", "JSON-lines dataset for train-offline", {}},
      {"metrics.wall_clock", V::boolean, "false", "write real elapsed time to the CSV", {}},
  };
}

std::string normalize(const KeyInfo& info, std::string_view raw) {
  const std::string value(trim(raw));
  auto bad = [&](const std::string& why) {
    return ConfigError("invalid value '" + value + "' for key '" + info.key + "': " + why);
  };
  switch (info.type) {
    case ValueType::integer: {
      std::uint64_t v = 0;
      const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
      if (value.empty() || res.ec != std::errc() || res.ptr != value.data() + value.size())
        throw bad("expected a non-negative integer");
      return std::to_string(v);
    }
    case ValueType::real: {
      double v = 0;
      const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
      if (value.empty() || res.ec != std::errc() || res.ptr != value.data() + value.size() || !std::isfinite(v))
        throw bad("expected a finite number");
      return format_real(v);
    }
    case ValueType::boolean: {
      std::string lower = value;
      for (char& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      if (lower == "true" || lower == "1" || lower == "yes" || lower == "on") return "true";
      if (lower == "false" || lower == "0" || lower == "no" || lower == "off") return "false";
      throw bad("expected true or false");
    }
    case ValueType::choice:
      for (const auto& c : info.choices)
        if (c == value) return value;
      {
        std::string list;
        for (const auto& c : info.choices) list += (list.empty() ? "" : ", ") + c;
        throw bad("expected one of " + list);
      }
    case ValueType::text:
      if (value.find('\n') != std::string::npos) throw bad("values must fit on one line");
      if (info.key == "agent.group") {
        try {
          parse_group(value);
        } catch (const Error& e) {
          throw bad(e.what());
        }
      }
      return value;
  }
  return value;
}

struct Preset {
  const char* name;
  std::vector<std::pair<const char*, const char*>> values;
};

std::vector<std::pair<const char*, const char*>> offline_reach(const char* variant) {
  return {{"env.kind", "reach2d"},          {"agent.variant", variant},         {"train.batch_size", "64"},
          {"offline.gradient_steps", "2000"}, {"offline.eval_interval", "250"}, {"offline.eval_goals", "50"}};
}

std::vector<std::pair<const char*, const char*>> push(const char* variant) {
  return {{"env.kind", "push2d"},
          {"agent.variant", variant},
          {"train.total_env_steps", "100000"},
          {"train.updates_per_interval", "2"},
          {"env.block_offset_min", "0.15"},
          {"env.block_offset_max", "0.2"},
          {"env.goal_offset", "0.25"}};
}

const std::vector<Preset>& presets() {
  static const std::vector<Preset> list = {
      {"reach2d_ecrl", {{"env.kind", "reach2d"}, {"agent.variant", "ecrl"}, {"train.total_env_steps", "50000"}}},
      {"reach2d_crl", {{"env.kind", "reach2d"}, {"agent.variant", "crl"}, {"train.total_env_steps", "50000"}}},
      {"reach2d_pooled",
       {{"env.kind", "reach2d"}, {"agent.variant", "pooled"}, {"train.total_env_steps", "50000"}}},
      {"push2d_ecrl", push("ecrl")},
      {"push2d_crl", push("crl")},
      {"push2d_pooled", push("pooled")},
      {"reach2d_offline_ecrl", offline_reach("ecrl")},
      {"reach2d_offline_crl", offline_reach("crl")},
  };
  return list;
}

}  // namespace

const std::vector<KeyInfo>& config_keys() {
  static const std::vector<KeyInfo> keys = build_keys();
  return keys;
}

const KeyInfo* find_key(std::string_view key) {
  for (const auto& info : config_keys())
    if (info.key == key) return &info;
  return nullptr;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& p : presets()) out.emplace_back(p.name);
  return out;
}

bool is_preset(std::string_view name) {
  for (const auto& p : presets())
    if (name == p.name) return true;
  return false;
}

Config::Config() {
  for (const auto& info : config_keys()) set(info.key, info.default_value);
}

Config Config::preset(std::string_view name) {
  for (const auto& p : presets()) {
    if (name != p.name) continue;
    Config c;
    for (const auto& [k, v] : p.values) c.set(k, v);
    return c;
  }
  std::string list;
  for (const auto& n : preset_names()) list += (list.empty() ? "" : ", ") + n;
  throw ConfigError("unknown preset '" + std::string(name) + "' (available: " + list + ")");
}

Config Config::load(const std::string& name_or_path) {
  if (is_preset(name_or_path)) return preset(name_or_path);
  std::ifstream in(name_or_path);
  if (!in) throw ConfigError("config '" + name_or_path + "' is neither a preset nor a readable file");
  std::ostringstream text;
  text << in.rdbuf();
  Config c;
  c.merge_text(text.str(), name_or_path);
  return c;
}

void Config::set(std::string_view key, std::string_view value) {
  const KeyInfo* info = find_key(trim(key));
  if (info == nullptr) throw ConfigError("unknown config key '" + std::string(trim(key)) + "'");
  values_[info->key] = normalize(*info, value);
}

void Config::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ConfigError("override '" + std::string(assignment) + "' must have the form key=value");
  set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

void Config::merge_text(std::string_view text, const std::string& source) {
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected key = value");
    try {
      set(line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

const std::string& Config::get(std::string_view key) const {
  const auto it = values_.find(std::string(key));
  if (it == values_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  return it->second;
}

std::string Config::text() const {
  std::string out;
  for (const auto& info : config_keys()) out += info.key + " = " + values_.at(info.key) + "\n";
  return out;
}

std::string Config::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : text()) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string Config::run_id() const {
  return get("env.kind") + "_" + get("agent.variant") + "_s" + get("train.seed") + "_" + hash().substr(0, 8);
}

TrainConfig Config::train_config() const {
  auto real = [&](const char* k) { return std::stod(get(k)); };
  auto integer = [&](const char* k) { return static_cast<std::size_t>(std::stoull(get(k))); };
  auto boolean = [&](const char* k) { return get(k) == "true"; };

  TrainConfig c;
  c.env.kind = parse_env_kind(get("env.kind"));
  c.env.workspace_radius = real("env.workspace_radius");
  c.env.max_steps = integer("env.max_steps");
  c.env.success_radius = real("env.success_radius");
  c.env.action_scale = real("env.action_scale");
  c.env.noise_std = real("env.noise_std");
  c.env.agent_radius = real("env.agent_radius");
  c.env.block_radius = real("env.block_radius");
  c.env.start_radius = real("env.start_radius");
  c.env.block_offset_min = real("env.block_offset_min");
  c.env.block_offset_max = real("env.block_offset_max");
  c.env.goal_offset = real("env.goal_offset");

  c.net.group = parse_group(get("agent.group"));
  c.net.variant = parse_variant(get("agent.variant"));
  c.net.metric = parse_metric(get("agent.metric"));
  c.loss = parse_loss(get("agent.loss"));
  c.net.actor = parse_actor_kind(get("agent.actor"));
  c.net.repr_k = integer("agent.repr_k");
  c.net.repr_dim_plain = integer("agent.repr_dim_plain");
  c.net.hidden_blocks = integer("agent.hidden_blocks");
  c.net.hidden_width_plain = integer("agent.hidden_width_plain");
  c.net.hidden_layers = integer("agent.hidden_layers");
  c.net.init_log_std = real("agent.init_log_std");
  c.net.min_log_std = real("agent.min_log_std");
  c.net.max_log_std = real("agent.max_log_std");

  c.batch_size = integer("train.batch_size");
  c.gamma = real("train.gamma");
  c.learning_rate = real("train.lr");
  c.total_env_steps = integer("train.total_env_steps");
  c.warmup_steps = integer("train.warmup_steps");
  c.train_collect_interval = integer("train.train_collect_interval");
  c.updates_per_interval = integer("train.updates_per_interval");
  c.replay_capacity = integer("train.replay_capacity");
  c.eval_interval = integer("train.eval_interval");
  c.eval_goals = integer("train.eval_goals");
  c.stop_success = real("train.stop_success");
  c.seed = std::stoull(get("train.seed"));

  c.alpha_init = real("entropy.alpha_init");
  c.auto_alpha = boolean("entropy.auto_tune");
  c.target_entropy = real("entropy.target");

  c.offline_lambda = real("offline.lambda");
  c.offline_relabel = parse_relabel(get("offline.relabel"));
  c.offline_gradient_steps = integer("offline.gradient_steps");
  c.offline_eval_interval = integer("offline.eval_interval");
  c.offline_eval_goals = integer("offline.eval_goals");

  c.wall_clock = boolean("metrics.wall_clock");
  c.validate();
  return c;
}

}  // namespace ecrl::cli
