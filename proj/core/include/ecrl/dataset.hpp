#pragma once

// JSON-lines transition traces: one object per line with
// {episode, t, s, a, s_next, success}.

#include "ecrl/replay.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace ecrl {

void write_transitions(std::ostream& out, const std::vector<Transition>& transitions);
void write_transitions(const std::string& path, const std::vector<Transition>& transitions);

/// Throws ParseError carrying the 1-based line number of the first bad line.
std::vector<Transition> read_transitions(std::istream& in);
std::vector<Transition> read_transitions(const std::string& path);

/// Groups consecutive transitions by episode id into complete episodes.
/// t must count up from 0 and each s must repeat the previous s_next.
std::vector<Episode> episodes_from_transitions(const std::vector<Transition>& transitions);

ReplayBuffer load_offline_dataset(const std::string& path, std::size_t goal_offset, std::size_t goal_dim,
                                  std::size_t capacity = 1000000);

}  // namespace ecrl
