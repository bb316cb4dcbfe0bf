#include "ecrl/dataset.hpp"

#include "ecrl/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <istream>
#include <ostream>

namespace ecrl {

namespace {

using nlohmann::json;

json to_array(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Vector from_array(const json& arr, const char* field, std::size_t line) {
  if (!arr.is_array()) throw ParseError(line, std::string("field '") + field + "' must be an array");
  Vector v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw ParseError(line, std::string("field '") + field + "' must hold numbers");
    v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  }
  return v;
}

const json& field(const json& obj, const char* name, std::size_t line) {
  const auto it = obj.find(name);
  if (it == obj.end()) throw ParseError(line, std::string("missing field '") + name + "'");
  return *it;
}

}  // namespace

void write_transitions(std::ostream& out, const std::vector<Transition>& transitions) {
  for (const Transition& tr : transitions) {
    json line = {{"episode", tr.episode}, {"t", tr.t},           {"s", to_array(tr.s)},
                 {"a", to_array(tr.a)},   {"s_next", to_array(tr.s_next)}, {"success", tr.success}};
    out << line.dump() << '\n';
  }
}

void write_transitions(const std::string& path, const std::vector<Transition>& transitions) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_transitions(out, transitions);
}

std::vector<Transition> read_transitions(std::istream& in) {
  std::vector<Transition> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(line, "expected a JSON object");
    Transition tr;
    const json& episode = field(obj, "episode", line);
    const json& t = field(obj, "t", line);
    if (!episode.is_number_unsigned() && !(episode.is_number_integer() && episode.get<long long>() >= 0))
      throw ParseError(line, "field 'episode' must be a non-negative integer");
    if (!t.is_number_unsigned() && !(t.is_number_integer() && t.get<long long>() >= 0))
      throw ParseError(line, "field 't' must be a non-negative integer");
    tr.episode = episode.get<std::uint64_t>();
    tr.t = t.get<std::size_t>();
    tr.s = from_array(field(obj, "s", line), "s", line);
    tr.a = from_array(field(obj, "a", line), "a", line);
    tr.s_next = from_array(field(obj, "s_next", line), "s_next", line);
    const json& success = field(obj, "success", line);
    if (!success.is_boolean()) throw ParseError(line, "field 'success' must be a boolean");
    tr.success = success.get<bool>();
    if (tr.s.size() != tr.s_next.size()) throw ParseError(line, "'s' and 's_next' differ in length");
    if (!out.empty()) {
      const Transition& prev = out.back();
      if (prev.s.size() != tr.s.size() || prev.a.size() != tr.a.size())
        throw ParseError(line, "vector lengths differ from earlier lines");
      if (prev.episode == tr.episode && tr.t != prev.t + 1)
        throw ParseError(line, "t must increase by 1 within an episode");
      if (prev.episode == tr.episode && tr.s != prev.s_next)
        throw ParseError(line, "'s' does not continue the previous 's_next'");
    }
    if ((out.empty() || out.back().episode != tr.episode) && tr.t != 0)
      throw ParseError(line, "episodes must start at t = 0");
    out.push_back(std::move(tr));
  }
  return out;
}

std::vector<Transition> read_transitions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_transitions(in);
}

std::vector<Episode> episodes_from_transitions(const std::vector<Transition>& transitions) {
  std::vector<Episode> out;
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    const Transition& tr = transitions[i];
    if (out.empty() || i == 0 || transitions[i - 1].episode != tr.episode) {
      if (tr.t != 0) throw ContractError("episodes must start at t = 0");
      Episode e;
      e.id = tr.episode;
      e.states.push_back(tr.s);
      out.push_back(std::move(e));
    } else if (tr.s != out.back().states.back()) {
      throw ContractError("transition does not continue its episode");
    }
    Episode& e = out.back();
    e.actions.push_back(tr.a);
    e.states.push_back(tr.s_next);
    e.success.push_back(tr.success);
  }
  return out;
}

ReplayBuffer load_offline_dataset(const std::string& path, std::size_t goal_offset, std::size_t goal_dim,
                                  std::size_t capacity) {
  ReplayBuffer buffer(capacity, goal_offset, goal_dim);
  for (Episode& e : episodes_from_transitions(read_transitions(path))) buffer.add_episode(std::move(e));
  return buffer;
}

}  // namespace ecrl
