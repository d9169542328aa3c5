#include <algorithm>
#include <chrono>

#include "rtbyz/netsim.hpp"

namespace rtbyz {

namespace {

constexpr std::uint64_t kKeyStream = 0x6b6579;   // "key"
constexpr std::uint64_t kLinkStream = 0x6c6e6b;  // "lnk"
constexpr std::uint64_t kNodeStream = 0x6e6f64;  // "nod"

}  // namespace

World::World(WorldConfig cfg)
    : cfg_(std::move(cfg)),
      keys_(std::make_shared<KeyRegistry>(std::shared_ptr<const SignatureScheme>(make_scheme(cfg_.backend)))),
      log_(cfg_.record_messages) {
  cfg_.params.validate();
  cfg_.net.validate();
  const auto n = cfg_.params.n;
  if (cfg_.pool.empty() && n >= 4)
    for (std::uint32_t i = 0; i < 4; ++i) cfg_.pool.push_back(pid(i));
  for (std::uint32_t i = 0; i < n; ++i) {
    initial_.push_back(pid(i));
    keys_->enroll(pid(i), derive_seed(cfg_.seed, kKeyStream, i));
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    auto node = make_node(pid(i), cfg_.self_crash, cfg_.revival);
    nodes_.push_back(node.get());
    procs_.push_back(std::move(node));
    byz_.push_back(false);
    silenced_.push_back(false);
    metrics_.emplace_back();
  }
}

std::vector<ProcessId> World::ids() const {
  std::vector<ProcessId> out;
  for (std::uint32_t i = 0; i < procs_.size(); ++i) out.push_back(pid(i));
  return out;
}

NodeConfig World::node_config(ProcessId p, bool self_crash, bool revival) const {
  NodeConfig nc;
  nc.params = cfg_.params;
  nc.members = initial_;
  nc.pool.members = cfg_.pool;
  nc.self_crash = self_crash;
  nc.revival = revival;
  nc.crash_detection = cfg_.crash_detection;
  nc.seed = derive_seed(cfg_.seed, kNodeStream, to_index(p));
  return nc;
}

std::unique_ptr<Node> World::make_node(ProcessId p, bool self_crash, bool revival) {
  return std::make_unique<Node>(p, node_config(p, self_crash, revival), keys_, &log_);
}

Node& World::node(ProcessId p) { return *nodes_.at(to_index(p)); }
const Node& World::node(ProcessId p) const { return *nodes_.at(to_index(p)); }

bool World::byzantine(ProcessId p) const { return byz_.at(to_index(p)); }

std::set<ProcessId> World::byzantine_ids() const {
  std::set<ProcessId> out;
  for (std::uint32_t i = 0; i < byz_.size(); ++i)
    if (byz_[i]) out.insert(pid(i));
  return out;
}

std::unique_ptr<Node> World::take_node(ProcessId p) {
  auto& slot = procs_.at(to_index(p));
  if (slot->as_node() != slot.get()) throw std::logic_error("process is already wrapped");
  std::unique_ptr<Node> out(static_cast<Node*>(slot.release()));
  return out;
}

void World::replace(ProcessId p, std::unique_ptr<Process> proc) {
  const auto i = to_index(p);
  Node* inner = proc->as_node();
  if (inner == nullptr) throw std::logic_error("replacement must expose a node");
  nodes_.at(i) = inner;
  byz_.at(i) = proc->byzantine();
  procs_.at(i) = std::move(proc);
}

LinkModel& World::link(ProcessId from, ProcessId to) {
  const auto a = to_index(from);
  const auto b = to_index(to);
  if (links_.size() <= a) links_.resize(a + 1);
  auto& row = links_[a];
  while (row.size() <= b) {
    const auto j = static_cast<std::uint32_t>(row.size());
    row.emplace_back(cfg_.net, derive_seed(cfg_.seed ^ kLinkStream, a, j));
  }
  return row[b];
}

void World::schedule_broadcast(ProcessId p, Round r, Bytes value) {
  schedule_.emplace(r, Action{Action::Kind::Broadcast, p, std::move(value)});
}
void World::schedule_crash(ProcessId p, Round r) { schedule_.emplace(r, Action{Action::Kind::Crash, p, {}}); }
void World::schedule_silence(ProcessId p, Round r) { schedule_.emplace(r, Action{Action::Kind::Silence, p, {}}); }
void World::schedule_leave(ProcessId p, Round r) { schedule_.emplace(r, Action{Action::Kind::Leave, p, {}}); }

ProcessId World::schedule_join(Round r) {
  const auto id = pid(static_cast<std::uint32_t>(procs_.size()));
  keys_->enroll(id, derive_seed(cfg_.seed, kKeyStream, to_index(id)));
  auto node = make_node(id, cfg_.self_crash, cfg_.revival);
  nodes_.push_back(node.get());
  procs_.push_back(std::move(node));
  byz_.push_back(false);
  silenced_.push_back(false);
  metrics_.emplace_back();
  // Until its join starts the process exists but takes no part.
  node_join_pending_.insert(id);
  schedule_.emplace(r, Action{Action::Kind::Join, id, {}});
  return id;
}

void World::apply(Round r, const Action& a) {
  Node& nd = node(a.who);
  switch (a.kind) {
    case Action::Kind::Broadcast:
      nd.broadcast(r, a.value);
      break;
    case Action::Kind::Crash:
      nd.force_crash(r);
      break;
    case Action::Kind::Silence:
      silenced_.at(to_index(a.who)) = true;
      log_.add(Event{r, a.who, Direction::Local, EventKind::Silenced, {}, 0, {}});
      break;
    case Action::Kind::Leave:
      nd.request_leave(r);
      break;
    case Action::Kind::Join:
      node_join_pending_.erase(a.who);
      nd.start_join(r, keys_->public_key(a.who)->bytes);
      break;
  }
}

void World::step() {
  const Round r = ++round_;
  for (auto [it, end] = schedule_.equal_range(r); it != end; ++it) apply(r, it->second);

  using Clock = std::chrono::steady_clock;
  const std::size_t count = procs_.size();
  std::vector<double> busy_us(cfg_.measure_time ? count : 0, 0.0);
  for (auto& m : metrics_) m.cur_sent = m.cur_recv = m.cur_bcast_sent = m.cur_bcast_recv = 0;

  std::vector<std::vector<BundlePtr>> inbox(count);
  Outbox out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const ProcessId p = pid(i);
    if (node_join_pending_.contains(p)) continue;
    out.clear();
    const auto t0 = cfg_.measure_time ? Clock::now() : Clock::time_point{};
    procs_[i]->emit(r, out);
    if (cfg_.measure_time) busy_us[i] += std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
    if (silenced_[i]) continue;
    for (const auto& ob : out) {
      const std::uint64_t bytes = wire_bytes(*ob.bundle);
      const bool bcast = ob.bundle->piggyback;
      for (ProcessId to : ob.to) {
        const auto j = to_index(to);
        if (j >= count || j == i) continue;
        metrics_[i].cur_sent += bytes;
        if (bcast) metrics_[i].cur_bcast_sent += bytes;
        LinkModel& l = link(p, to);
        l.advance_to(r);
        if (!l.transmit()) continue;
        metrics_[j].cur_recv += bytes;
        if (bcast) metrics_[j].cur_bcast_recv += bytes;
        inbox[j].push_back(ob.bundle);
      }
    }
  }

  for (std::uint32_t j = 0; j < count; ++j) {
    if (node_join_pending_.contains(pid(j))) continue;
    const auto t0 = cfg_.measure_time ? Clock::now() : Clock::time_point{};
    for (const auto& b : inbox[j]) procs_[j]->receive(*b, r);
    procs_[j]->end_round(r);
    if (cfg_.measure_time) busy_us[j] += std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
  }

  for (std::uint32_t i = 0; i < count; ++i) {
    auto& m = metrics_[i];
    m.total_sent += m.cur_sent;
    m.total_recv += m.cur_recv;
    m.peak_sent = std::max(m.peak_sent, m.cur_sent);
    m.peak_recv = std::max(m.peak_recv, m.cur_recv);
    m.peak_bcast_sent = std::max(m.peak_bcast_sent, m.cur_bcast_sent);
    m.peak_bcast_recv = std::max(m.peak_bcast_recv, m.cur_bcast_recv);
    if (cfg_.measure_time) m.max_round_us = std::max(m.max_round_us, busy_us[i]);
  }
}

void World::run_until(Round horizon) {
  while (round_ < horizon) step();
}

}  // namespace rtbyz
