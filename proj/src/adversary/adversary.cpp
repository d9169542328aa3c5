#include "rtbyz/adversary.hpp"

#include <algorithm>

namespace rtbyz {

Strategy parse_strategy(std::string_view name) {
  if (name == "none") return Strategy::None;
  if (name == "silent") return Strategy::Silent;
  if (name == "equivocate") return Strategy::Equivocate;
  if (name == "withhold" || name == "withhold_signatures") return Strategy::Withhold;
  if (name == "random_noise") return Strategy::RandomNoise;
  throw ParamError("unknown adversary.kind '" + std::string(name) + "'");
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::None: return "none";
    case Strategy::Silent: return "silent";
    case Strategy::Equivocate: return "equivocate";
    case Strategy::Withhold: return "withhold";
    case Strategy::RandomNoise: return "random_noise";
  }
  return "?";
}

Bytes alternative_value(const Bytes& v) {
  Bytes out = v;
  out.push_back(0xff);
  return out;
}

ByzantineProcess::ByzantineProcess(std::unique_ptr<Node> inner, AdversaryConfig cfg, std::vector<ProcessId> split,
                                   std::uint64_t seed)
    : inner_(std::move(inner)), cfg_(std::move(cfg)), side_b_(split.begin(), split.end()), rng_(seed) {}

void ByzantineProcess::receive(const Bundle& bundle, Round r) {
  if (cfg_.kind == Strategy::Silent) return;
  inner_->receive(bundle, r);
}

void ByzantineProcess::end_round(Round r) {
  if (cfg_.kind == Strategy::Silent) return;
  inner_->end_round(r);
}

void ByzantineProcess::emit(Round r, Outbox& out) {
  switch (cfg_.kind) {
    case Strategy::None: inner_->emit(r, out); break;
    case Strategy::Silent: break;
    case Strategy::Withhold: emit_withhold(r, out); break;
    case Strategy::Equivocate: emit_equivocate(r, out); break;
    case Strategy::RandomNoise: emit_noise(r, out); break;
  }
}

// Participates with its own signatures only: own heartbeat, own broadcasts,
// echoes reduced to itself, no forwarded heartbeats, no Deliver traffic.
void ByzantineProcess::emit_withhold(Round r, Outbox& out) {
  Outbox honest;
  inner_->emit(r, honest);
  const ProcessId self = id();
  for (auto& ob : honest) {
    auto b = std::make_shared<Bundle>();
    b->sender = ob.bundle->sender;
    b->round = ob.bundle->round;
    b->piggyback = ob.bundle->piggyback;
    for (const auto& item : ob.bundle->items) {
      if (const auto* hb = std::get_if<HeartbeatItem>(&item)) {
        if (hb->origin != self) continue;
        HeartbeatItem own{self, hb->hb_round, {}};
        if (const SigEntry* e = hb->sigs.find(self)) own.sigs.insert(*e);
        b->items.emplace_back(std::move(own));
      } else if (const auto* e = std::get_if<EchoItem>(&item)) {
        EchoItem mine{e->payload, e->origin_sig, {}};
        if (const SigEntry* s = e->sigs.find(self)) mine.sigs.insert(*s);
        b->items.emplace_back(std::move(mine));
      } else if (std::holds_alternative<DeliverItem>(item)) {
        continue;
      } else {
        b->items.push_back(item);
      }
    }
    for (const auto& le : ob.bundle->ledger)
      if (le.id == self) b->ledger.push_back(le);
    if (b->items.empty()) continue;
    out.push_back(Outbound{ob.to, std::move(b)});
  }
}

const BroadcastItem& ByzantineProcess::alternative(const BroadcastItem& b) {
  const auto key = b.payload->key();
  auto it = alt_.find(key);
  if (it != alt_.end()) return it->second;
  auto p = make_payload(b.payload->sender(), b.payload->origin_round(), alternative_value(b.payload->value()));
  BroadcastItem item{p, inner_->sign(p->digest())};
  return alt_.emplace(key, std::move(item)).first->second;
}

void ByzantineProcess::emit_equivocate(Round r, Outbox& out) {
  Outbox honest;
  inner_->emit(r, honest);
  const ProcessId self = id();
  for (auto& ob : honest) {
    const Bundle& src = *ob.bundle;
    const bool has_own_broadcast = std::any_of(src.items.begin(), src.items.end(), [&](const Item& it) {
      const auto* b = std::get_if<BroadcastItem>(&it);
      return b != nullptr && b->payload->sender() == self;
    });
    if (!has_own_broadcast && !cfg_.suppress_forwarding) {
      out.push_back(std::move(ob));
      continue;
    }
    auto a = std::make_shared<Bundle>();
    auto b = std::make_shared<Bundle>();
    for (auto* x : {a.get(), b.get()}) {
      x->sender = src.sender;
      x->round = src.round;
      x->piggyback = src.piggyback;
      x->ledger = src.ledger;
    }
    for (const auto& item : src.items) {
      if (cfg_.suppress_forwarding && (std::holds_alternative<EchoItem>(item) || std::holds_alternative<DeliverItem>(item)))
        continue;
      const auto* bi = std::get_if<BroadcastItem>(&item);
      if (bi != nullptr && bi->payload->sender() == self) {
        a->items.push_back(item);
        b->items.emplace_back(alternative(*bi));
        continue;
      }
      a->items.push_back(item);
      b->items.push_back(item);
    }
    std::vector<ProcessId> to_a;
    std::vector<ProcessId> to_b;
    for (auto p : ob.to) (side_b_.contains(p) ? to_b : to_a).push_back(p);
    if (!to_a.empty() && !a->items.empty()) out.push_back(Outbound{std::move(to_a), std::move(a)});
    if (!to_b.empty() && !b->items.empty()) out.push_back(Outbound{std::move(to_b), std::move(b)});
  }
}

// Honest traffic plus well-formed junk: fresh broadcasts of random values
// under its own key and items carrying signatures that do not verify.
void ByzantineProcess::emit_noise(Round r, Outbox& out) {
  inner_->emit(r, out);
  const ProcessId self = id();
  const auto& members = inner_->members();
  std::vector<ProcessId> to;
  for (auto p : members)
    if (p != self) to.push_back(p);
  if (to.empty()) return;

  auto b = std::make_shared<Bundle>();
  b->sender = self;
  b->round = r;
  const Round R = inner_->config().params.R;
  Bytes v(16);
  for (auto& x : v) x = static_cast<std::uint8_t>(rng_.next());
  const Round origin = std::max<Round>(1, r - static_cast<Round>(rng_.below(static_cast<std::uint64_t>(R + 1))));
  auto p = make_payload(self, origin, v);
  b->items.emplace_back(BroadcastItem{p, inner_->sign(p->digest())});

  const ProcessId victim = to[rng_.below(to.size())];
  auto forged = make_payload(victim, r, v);
  Signature junk{};
  for (auto& x : junk) x = static_cast<std::uint8_t>(rng_.next());
  EchoItem e{forged, junk, {}};
  e.sigs.insert(self, inner_->sign(forged->digest()));
  b->items.emplace_back(std::move(e));

  HeartbeatItem hb{victim, r, {}};
  hb.sigs.insert(victim, junk);
  b->items.emplace_back(std::move(hb));
  out.push_back(Outbound{std::move(to), std::move(b)});
}

std::vector<ProcessId> install_adversaries(World& world, const AdversaryConfig& cfg) {
  std::vector<ProcessId> ids = cfg.targets;
  if (ids.empty())
    for (std::uint32_t i = 0; i < cfg.count; ++i) ids.push_back(pid(i));
  if (cfg.kind == Strategy::None) return {};
  if (ids.size() > world.config().params.f)
    throw ParamError("adversary.count exceeds f=" + std::to_string(world.config().params.f));
  const auto all = world.ids();
  for (auto p : ids) {
    if (to_index(p) >= world.size()) throw ParamError("adversary target out of range");
    std::vector<ProcessId> split = cfg.split;
    const std::uint64_t seed = derive_seed(world.config().seed, 0x616476, to_index(p));
    if (cfg.kind == Strategy::Equivocate && split.empty()) {
      SplitMix pick(derive_seed(seed, 1));
      for (auto q : all)
        if (q != p && pick.bernoulli(0.5)) split.push_back(q);
    }
    world.take_node(p).reset();
    auto inner = world.make_node(p, false, false);
    world.replace(p, std::make_unique<ByzantineProcess>(std::move(inner), cfg, std::move(split), seed));
  }
  return ids;
}

}  // namespace rtbyz
