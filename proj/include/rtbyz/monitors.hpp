#pragma once

#include <set>
#include <string>
#include <vector>

#include "rtbyz/event_log.hpp"

namespace rtbyz {

struct Violation {
  std::string property;  // validity, no-duplication, integrity, agreement, timeliness
  std::string what;
};

struct MonitorInput {
  const std::vector<Event>* events = nullptr;
  std::set<ProcessId> byzantine;
  std::vector<ProcessId> nodes;  // every process that ever existed
  Round R = 0;
  /// Last simulated round. Obligations that could only be met after the
  /// horizon (delivery at or after horizon - 3R - 2) are not checked.
  Round horizon = 0;
};

/// Checks the five broadcast properties over a finished run. A process counts
/// as correct when it is not Byzantine and never crashed, was silenced, or
/// left. Joiners are only held to instances issued after they joined.
std::vector<Violation> check_properties(const MonitorInput& in);

std::string describe(const std::vector<Violation>& v);

}  // namespace rtbyz
