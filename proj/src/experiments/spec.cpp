#include "json_util.hpp"
#include "rtbyz/experiments.hpp"

namespace rtbyz {

using detail::check_keys;
using detail::get_list;
using detail::get_or;
using detail::json;

namespace {

std::vector<NetConfig> parse_nets(const json& section, std::string_view where) {
  std::vector<NetConfig> nets;
  if (auto it = section.find("net"); it != section.end()) {
    if (!it->is_array()) throw ParamError(std::string(where) + ".net must be a list");
    for (const auto& n : *it) nets.push_back(detail::parse_net(n, std::string(where) + ".net"));
  }
  for (double p : get_list<double>(section, "p_loss", {}, where)) {
    NetConfig net;
    net.p_loss = p;
    net.validate();
    nets.push_back(net);
  }
  return nets;
}

template <typename T>
void require_nonempty(const std::vector<T>& v, std::string_view what) {
  if (v.empty()) throw ParamError(std::string(what) + " must not be empty");
}

}  // namespace

ExperimentSpec parse_experiment_spec(const std::string& json_text) {
  const json j = detail::parse_text(json_text);
  check_keys(j, {"seed", "reps", "jobs", "reliability", "shutdown", "window", "latency", "bandwidth"}, "spec");
  ExperimentSpec s;
  s.seed = get_or<std::uint64_t>(j, "seed", 1, "spec");
  s.reps = get_or<std::uint64_t>(j, "reps", 10000, "spec");
  s.jobs = get_or<unsigned>(j, "jobs", 1, "spec");

  if (auto it = j.find("reliability"); it != j.end()) {
    check_keys(*it, {"correct", "R", "net", "p_loss"}, "reliability");
    s.reliability.enabled = true;
    s.reliability.correct = get_list<std::uint32_t>(*it, "correct", {}, "reliability");
    s.reliability.R = get_list<Round>(*it, "R", {}, "reliability");
    s.reliability.nets = parse_nets(*it, "reliability");
    require_nonempty(s.reliability.correct, "reliability.correct");
    require_nonempty(s.reliability.R, "reliability.R");
    require_nonempty(s.reliability.nets, "reliability.net");
    for (auto c : s.reliability.correct)
      if (c == 0) throw ParamError("reliability.correct entries must be positive");
    for (auto R : s.reliability.R)
      if (R < 1) throw ParamError("reliability.R entries must be positive");
  }
  if (auto it = j.find("shutdown"); it != j.end()) {
    check_keys(*it, {"p_crash", "f", "draws"}, "shutdown");
    s.shutdown.enabled = true;
    s.shutdown.p_crash = get_list<double>(*it, "p_crash", {}, "shutdown");
    s.shutdown.f = get_list<std::uint32_t>(*it, "f", {1}, "shutdown");
    s.shutdown.draws = get_or<std::uint64_t>(*it, "draws", 100000, "shutdown");
    require_nonempty(s.shutdown.p_crash, "shutdown.p_crash");
    for (double p : s.shutdown.p_crash)
      if (!(p >= 0.0 && p <= 1.0)) throw ParamError("shutdown.p_crash entries must lie in [0, 1]");
  }
  if (auto it = j.find("window"); it != j.end()) {
    check_keys(*it, {"nodes", "net", "p_loss", "reps", "max_R"}, "window");
    s.window.enabled = true;
    s.window.nodes = get_list<std::uint32_t>(*it, "nodes", {}, "window");
    s.window.nets = parse_nets(*it, "window");
    s.window.reps = get_or<std::uint64_t>(*it, "reps", 0, "window");
    s.window.max_R = get_or<Round>(*it, "max_R", 200, "window");
    require_nonempty(s.window.nodes, "window.nodes");
    require_nonempty(s.window.nets, "window.net");
    for (auto n : s.window.nodes)
      if (n < 1) throw ParamError("window.nodes entries must be positive");
  }
  if (auto it = j.find("latency"); it != j.end()) {
    check_keys(*it, {"nodes", "p_loss", "reps", "backend"}, "latency");
    s.latency.enabled = true;
    s.latency.nodes = get_list<std::uint32_t>(*it, "nodes", {}, "latency");
    s.latency.p_loss = get_list<double>(*it, "p_loss", {}, "latency");
    s.latency.reps = get_or<std::uint64_t>(*it, "reps", 0, "latency");
    s.latency.backend = parse_backend(get_or<std::string>(*it, "backend", "ecdsa-p256", "latency"));
    require_nonempty(s.latency.nodes, "latency.nodes");
    require_nonempty(s.latency.p_loss, "latency.p_loss");
    for (auto n : s.latency.nodes)
      if (n < 4) throw ParamError("latency.nodes entries must be at least 4");
  }
  if (auto it = j.find("bandwidth"); it != j.end()) {
    check_keys(*it, {"nodes", "p_loss", "payload_bits", "R"}, "bandwidth");
    s.bandwidth.enabled = true;
    s.bandwidth.nodes = get_list<std::uint32_t>(*it, "nodes", {}, "bandwidth");
    s.bandwidth.p_loss = get_list<double>(*it, "p_loss", {}, "bandwidth");
    s.bandwidth.payload_bits = get_list<std::uint32_t>(*it, "payload_bits", {128}, "bandwidth");
    s.bandwidth.R = get_or<Round>(*it, "R", 10, "bandwidth");
    require_nonempty(s.bandwidth.nodes, "bandwidth.nodes");
    require_nonempty(s.bandwidth.p_loss, "bandwidth.p_loss");
    for (auto n : s.bandwidth.nodes)
      if (n < 4) throw ParamError("bandwidth.nodes entries must be at least 4");
    if (s.bandwidth.R < 2) throw ParamError("bandwidth.R must be at least 2");
  }
  return s;
}

}  // namespace rtbyz
