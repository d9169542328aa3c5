#include "rtbyz/scenario.hpp"

#include <algorithm>

#include "json_util.hpp"

namespace rtbyz {

using detail::check_keys;
using detail::get_list;
using detail::get_or;
using detail::json;

namespace {

ProcessId node_id(const json& j, const char* key, std::uint32_t limit, std::string_view where) {
  const auto v = get_or<std::int64_t>(j, key, -1, where);
  if (v < 0 || v >= static_cast<std::int64_t>(limit))
    throw ParamError(std::string(where) + "." + key + " out of range");
  return pid(static_cast<std::uint32_t>(v));
}

Round round_at(const json& j, std::string_view where) {
  const auto r = get_or<Round>(j, "round", 1, where);
  if (r < 1) throw ParamError(std::string(where) + ".round must be >= 1");
  return r;
}

std::vector<ScenarioConfig::NodeAt> parse_node_rounds(const json& parent, const char* key, std::uint32_t n) {
  std::vector<ScenarioConfig::NodeAt> out;
  auto it = parent.find(key);
  if (it == parent.end()) return out;
  if (!it->is_array()) throw ParamError(std::string("membership.") + key + " must be a list");
  const std::string where = std::string("membership.") + key;
  for (const auto& e : *it) {
    check_keys(e, {"node", "round"}, where);
    out.push_back({node_id(e, "node", n, where), round_at(e, where)});
  }
  return out;
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& json_text) {
  const json j = detail::parse_text(json_text);
  check_keys(j, {"params", "net", "crypto", "adversary", "membership", "broadcasts", "sim"}, "scenario");
  ScenarioConfig s;

  const json params = j.value("params", json::object());
  check_keys(params, {"n", "R", "rep", "k"}, "params");
  s.world.params = SystemParams::make(get_or<std::uint32_t>(params, "n", 4, "params"),
                                      get_or<Round>(params, "R", 6, "params"),
                                      get_or<std::uint32_t>(params, "rep", 0, "params"),
                                      get_or<std::uint32_t>(params, "k", 0, "params"));
  const std::uint32_t n = s.world.params.n;

  if (auto it = j.find("net"); it != j.end()) s.world.net = detail::parse_net(*it, "net");

  if (auto it = j.find("crypto"); it != j.end()) {
    check_keys(*it, {"backend"}, "crypto");
    s.world.backend = parse_backend(get_or<std::string>(*it, "backend", "sim", "crypto"));
  }

  if (auto it = j.find("adversary"); it != j.end()) {
    check_keys(*it, {"kind", "count", "targets", "split", "suppress_forwarding"}, "adversary");
    auto& a = s.adversary;
    a.kind = parse_strategy(get_or<std::string>(*it, "kind", "none", "adversary"));
    a.count = get_or<std::uint32_t>(*it, "count", 0, "adversary");
    a.suppress_forwarding = get_or<bool>(*it, "suppress_forwarding", false, "adversary");
    if (auto t = it->find("targets"); t != it->end()) {
      if (t->is_string()) {
        if (t->get<std::string>() != "first-k") throw ParamError("adversary.targets must be \"first-k\" or a list");
      } else {
        for (auto v : get_list<std::uint32_t>(*it, "targets", {}, "adversary")) {
          if (v >= n) throw ParamError("adversary.targets out of range");
          a.targets.push_back(pid(v));
        }
        if (a.count == 0) a.count = static_cast<std::uint32_t>(a.targets.size());
        if (a.count != a.targets.size()) throw ParamError("adversary.count disagrees with adversary.targets");
      }
    }
    for (auto v : get_list<std::uint32_t>(*it, "split", {}, "adversary")) {
      if (v >= n) throw ParamError("adversary.split out of range");
      a.split.push_back(pid(v));
    }
    if (a.count > s.world.params.f) throw ParamError("adversary.count exceeds f");
  }

  if (auto it = j.find("membership"); it != j.end()) {
    check_keys(*it, {"crash_detection", "pool", "joins", "leaves", "crashes", "silences"}, "membership");
    s.world.crash_detection = get_or<bool>(*it, "crash_detection", false, "membership");
    for (auto v : get_list<std::uint32_t>(*it, "pool", {}, "membership")) {
      if (v >= n) throw ParamError("membership.pool out of range");
      s.world.pool.push_back(pid(v));
    }
    if (!s.world.pool.empty()) TrustedPool{s.world.pool}.validate();
    if (auto jl = it->find("joins"); jl != it->end()) {
      if (!jl->is_array()) throw ParamError("membership.joins must be a list");
      for (const auto& e : *jl) {
        check_keys(e, {"round"}, "membership.joins");
        s.joins.push_back(round_at(e, "membership.joins"));
      }
    }
    s.leaves = parse_node_rounds(*it, "leaves", n);
    s.crashes = parse_node_rounds(*it, "crashes", n);
    s.silences = parse_node_rounds(*it, "silences", n);
  }

  if (auto it = j.find("broadcasts"); it != j.end()) {
    if (!it->is_array()) throw ParamError("broadcasts must be a list");
    for (const auto& e : *it) {
      check_keys(e, {"sender", "round", "value"}, "broadcasts");
      ScenarioConfig::Broadcast b;
      b.sender = node_id(e, "sender", n, "broadcasts");
      b.round = round_at(e, "broadcasts");
      const auto v = get_or<std::string>(e, "value", "", "broadcasts");
      b.value.assign(v.begin(), v.end());
      s.broadcasts.push_back(std::move(b));
    }
  }

  if (auto it = j.find("sim"); it != j.end()) {
    check_keys(*it, {"seed", "rounds", "self_crash", "revival", "record_messages"}, "sim");
    s.world.seed = get_or<std::uint64_t>(*it, "seed", 1, "sim");
    s.rounds = get_or<Round>(*it, "rounds", 0, "sim");
    s.world.self_crash = get_or<bool>(*it, "self_crash", true, "sim");
    s.world.revival = get_or<bool>(*it, "revival", true, "sim");
    s.world.record_messages = get_or<bool>(*it, "record_messages", false, "sim");
    if (s.rounds < 0) throw ParamError("sim.rounds must be >= 0");
  }
  if (s.world.pool.empty() && !s.joins.empty() && n < 4) throw ParamError("joins need a pool of more than 3");
  return s;
}

ScenarioRun run_scenario(const ScenarioConfig& cfg) {
  ScenarioRun run;
  run.world = std::make_unique<World>(cfg.world);
  World& w = *run.world;
  install_adversaries(w, cfg.adversary);

  Round last = 1;
  for (const auto& b : cfg.broadcasts) {
    w.schedule_broadcast(b.sender, b.round, b.value);
    last = std::max(last, b.round);
  }
  for (const auto& c : cfg.crashes) {
    w.schedule_crash(c.node, c.round);
    last = std::max(last, c.round);
  }
  for (const auto& s : cfg.silences) {
    w.schedule_silence(s.node, s.round);
    last = std::max(last, s.round);
  }
  for (const auto& l : cfg.leaves) {
    w.schedule_leave(l.node, l.round);
    last = std::max(last, l.round);
  }
  for (Round r : cfg.joins) {
    run.joiners.push_back(w.schedule_join(r));
    last = std::max(last, r);
  }
  const Round R = cfg.world.params.R;
  run.horizon = cfg.rounds > 0 ? cfg.rounds : last + 8 * R;
  w.run_until(run.horizon);

  MonitorInput mi;
  mi.events = &w.log().events();
  mi.byzantine = w.byzantine_ids();
  mi.nodes = w.ids();
  mi.R = R;
  mi.horizon = run.horizon;
  run.violations = check_properties(mi);
  return run;
}

}  // namespace rtbyz
