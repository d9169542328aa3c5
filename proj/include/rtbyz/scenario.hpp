#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rtbyz/adversary.hpp"
#include "rtbyz/monitors.hpp"
#include "rtbyz/netsim.hpp"

namespace rtbyz {

/// One world, its scripted events and the horizon to run to.
struct ScenarioConfig {
  WorldConfig world;
  AdversaryConfig adversary;

  struct Broadcast {
    ProcessId sender{};
    Round round = 1;
    Bytes value;
  };
  struct NodeAt {
    ProcessId node{};
    Round round = 1;
  };
  std::vector<Broadcast> broadcasts;
  std::vector<NodeAt> crashes;
  std::vector<NodeAt> silences;
  std::vector<NodeAt> leaves;
  std::vector<Round> joins;

  /// Last round simulated; 0 picks the last scripted round + 8R.
  Round rounds = 0;
};

/// Parses the JSON scenario format. Unknown keys throw ParamError.
ScenarioConfig parse_scenario(const std::string& json_text);

struct ScenarioRun {
  std::unique_ptr<World> world;
  std::vector<ProcessId> joiners;
  std::vector<Violation> violations;
  Round horizon = 0;
};

ScenarioRun run_scenario(const ScenarioConfig& cfg);

}  // namespace rtbyz
