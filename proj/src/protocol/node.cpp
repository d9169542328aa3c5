#include "rtbyz/node.hpp"

#include <algorithm>

namespace rtbyz {

std::string_view to_string(LifeCycle s) {
  switch (s) {
    case LifeCycle::Alive: return "alive";
    case LifeCycle::Dead: return "dead";
    case LifeCycle::Pending: return "pending";
  }
  return "?";
}

std::string_view to_string(CrashCase c) {
  switch (c) {
    case CrashCase::Heartbeat: return "heartbeat";
    case CrashCase::EchoQuorum: return "case1";
    case CrashCase::DeliverQuorum: return "case2";
    case CrashCase::Silence: return "case3";
    case CrashCase::Unechoed: return "case4";
  }
  return "?";
}

namespace {

bool contains(const std::vector<ProcessId>& v, ProcessId p) { return std::find(v.begin(), v.end(), p) != v.end(); }

std::size_t count_recent(const std::map<ProcessId, Round>& last, Round from, ProcessId self) {
  std::size_t n = 1;  // self
  for (const auto& [p, round] : last)
    if (p != self && round >= from) ++n;
  return n;
}

}  // namespace

Node::Node(ProcessId self, NodeConfig cfg, std::shared_ptr<const KeyRegistry> keys, EventLog* log)
    : self_(self),
      cfg_(std::move(cfg)),
      keys_(std::move(keys)),
      signer_(keys_->signer(self)),
      log_(log),
      rng_(cfg_.seed) {
  members_ = cfg_.members;
  std::sort(members_.begin(), members_.end());
  members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
  f_ = cfg_.params.f;
}

std::uint32_t Node::quorum() const {
  const std::uint32_t base = 2 * f_ + 1;
  return cfg_.params.rep > detected_ ? base + (cfg_.params.rep - detected_) : base;
}

bool Node::is_member(ProcessId p) const {
  return std::binary_search(members_.begin(), members_.end(), p) && !excluded_.contains(p);
}

const InstanceState* Node::instance(const InstanceKey& key) const {
  auto it = instances_.find(key);
  return it == instances_.end() ? nullptr : &it->second;
}

std::size_t Node::own_hb_signers(Round from, Round to) const {
  std::set<ProcessId> ids;
  for (auto it = own_hbs_.lower_bound(from); it != own_hbs_.end() && it->first <= to; ++it)
    for (const auto& e : it->second) ids.insert(e.signer);
  return ids.size();
}

void Node::log_local(Round r, EventKind kind, InstanceKey key, std::uint32_t count, std::string detail) {
  if (log_ == nullptr) return;
  log_->add(Event{r, self_, Direction::Local, kind, key, count, std::move(detail)});
}

// ---------------------------------------------------------------------------
// Signature bookkeeping

std::vector<ProcessId> Node::merge_verified(SignatureSet& into, const SignatureSet& incoming, const Digest& digest,
                                            std::optional<ProcessId> extra) const {
  std::vector<ProcessId> valid;
  valid.reserve(incoming.size());
  SignatureSet fresh;
  for (const auto& e : incoming) {
    if (!is_member(e.signer) && e.signer != extra) continue;
    const SigEntry* have = into.find(e.signer);
    if (have != nullptr && have->sig == e.sig) {
      valid.push_back(e.signer);
      continue;
    }
    if (keys_->verify(e.signer, digest, e.sig)) {
      fresh.insert(e);
      valid.push_back(e.signer);
    }
  }
  into.merge(fresh);
  return valid;
}

std::size_t Node::count_for_quorum(const InstanceState& inst, const InstanceState::ValueState& vs,
                                   const InstanceKey& key) const {
  return inst.join ? vs.sigs.count_excluding(key.sender) : vs.sigs.size();
}

bool Node::origin_acceptable(ProcessId sender, const BroadcastPayload& p, Round r) const {
  if (p.origin_round() > r) return false;
  if (excluded_.contains(sender)) return false;
  // A leaver is removed on delivery but its announcement keeps circulating
  // for the Deliver phase; a joiner is not a member yet when it announces itself.
  if (is_leave_value(p.value())) return keys_->known(p.sender());
  if (excluded_.contains(p.sender())) return false;
  if (!is_member(p.sender()) && !is_join_value(p.value())) return false;
  return keys_->known(p.sender());
}

bool Node::check_origin_sig(const InstanceState* inst, const PayloadPtr& payload, const Signature& sig) const {
  if (inst != nullptr) {
    auto it = inst->values.find(payload->digest());
    if (it != inst->values.end() && it->second.origin_sig && *it->second.origin_sig == sig) return true;
  }
  return keys_->verify(payload->sender(), payload->digest(), sig);
}

InstanceState::ValueState& Node::value_slot(InstanceState& inst, const PayloadPtr& payload) {
  auto& vs = inst.values[payload->digest()];
  if (!vs.payload) vs.payload = payload;
  return vs;
}

void Node::note_origin_signed(InstanceState& inst, const PayloadPtr& payload, const Signature& sig, Round r) {
  auto& vs = value_slot(inst, payload);
  if (!vs.origin_sig) vs.origin_sig = sig;
  vs.sigs.insert(payload->sender(), sig);
  if (is_join_value(payload->value())) inst.join = true;
  if (inst.lie) return;
  for (const auto& [d, other] : inst.values) {
    if (d != payload->digest() && other.origin_sig) {
      inst.lie = std::make_pair(std::min(d, payload->digest()), std::max(d, payload->digest()));
      log_local(r, EventKind::Echo, payload->key(), 0, "lie");
      break;
    }
  }
}

void Node::start_echo(InstanceState& inst, const PayloadPtr& payload, Round r) {
  auto& vs = value_slot(inst, payload);
  inst.echoing = true;
  inst.echo_value = payload->digest();
  inst.window_start = r;
  inst.echo_until = r + 3 * cfg_.params.R;
  vs.sigs.insert(self_, sign(payload->digest()));
  auto& cell = inst.msg_store[self_][payload->digest()];
  if (!contains(cell, self_)) cell.push_back(self_);
}

void Node::note_echoed_me(Round r, const std::vector<ProcessId>& signers) {
  for (auto p : signers)
    if (p != self_) last_echoed_[p] = r;
}

void Node::note_heard(ProcessId p, Round r) { last_heard_[p] = r; }

void Node::deliver(const InstanceKey& key, InstanceState& inst, const Digest& value, Round r, bool via_revival) {
  if (inst.delivered) return;
  auto& vs = inst.values.at(value);
  inst.delivered = true;
  inst.delivered_value = value;
  inst.deliver_round = r;
  inst.proof = vs.sigs;
  inst.echoing = false;
  inst.witnesses.insert(self_, sign(deliver_digest(value)));
  inst.send_from = r + 1;
  inst.send_until = r + 1 + (via_revival ? cfg_.params.R : 2 * cfg_.params.R);
  inst.case2_done = via_revival;
  log_local(r, EventKind::Delivered, key, static_cast<std::uint32_t>(inst.proof.size()), value_id(*vs.payload));
  apply_membership_delivery(*vs.payload, r);
}

// ---------------------------------------------------------------------------
// Application hooks

PayloadPtr Node::broadcast(Round r, Bytes value) {
  if (life_ != LifeCycle::Alive) return nullptr;
  auto payload = make_payload(self_, r, std::move(value));
  const auto key = payload->key();
  auto& inst = instances_[key];
  if (inst.own || inst.echoing || inst.delivered) return nullptr;
  inst.own = true;
  const Signature sig = sign(payload->digest());
  note_origin_signed(inst, payload, sig, r);
  inst.echoing = true;
  inst.echo_value = payload->digest();
  inst.window_start = r;
  inst.echo_until = r + 3 * cfg_.params.R;
  log_local(r, EventKind::BroadcastStart, key, 1, value_id(*payload));
  return payload;
}

void Node::request_leave(Round r) {
  if (life_ != LifeCycle::Alive || pending_leave_) return;
  auto p = broadcast(r, make_leave_value());
  if (!p) return;
  pending_leave_ = p->key();
  log_local(r, EventKind::LeaveRequested, p->key());
}

void Node::force_crash(Round r) {
  if (life_ == LifeCycle::Dead) return;
  crash(r, EventKind::ForcedCrash, std::nullopt);
}

void Node::start_join(Round r, Bytes key) {
  if (!join_key_.empty()) return;  // one handshake per process; retries go through joiner_tick
  join_key_ = std::move(key);
  life_ = LifeCycle::Pending;
  members_ = cfg_.pool.members;
  std::sort(members_.begin(), members_.end());
  f_ = cfg_.pool.byz_bound();
  JoinerState js;
  js.request = JoinRequest{self_, join_key_, r};
  js.joiner_sig = sign(join_hb_digest(js.request));
  js.deadline = r + 1 + cfg_.params.R;
  joiner_ = std::move(js);
  log_local(r, EventKind::JoinRequested, {self_, r});
}

// ---------------------------------------------------------------------------
// Emission

void Node::emit(Round r, Outbox& out) {
  if (life_ == LifeCycle::Pending) {
    if (joiner_ && r >= joiner_->request.round + 1 && r <= joiner_->deadline) {
      auto b = std::make_shared<Bundle>();
      b->sender = self_;
      b->round = r;
      b->items.emplace_back(JoinHbItem{joiner_->request, joiner_->joiner_sig});
      if (log_ != nullptr) log_->message(r, self_, Direction::Out, b->items.back());
      std::vector<ProcessId> to;
      for (auto p : cfg_.pool.members)
        if (p != self_) to.push_back(p);
      out.push_back(Outbound{std::move(to), std::move(b)});
    }
    return;
  }
  if (life_ != LifeCycle::Alive) return;

  auto b = std::make_shared<Bundle>();
  b->sender = self_;
  b->round = r;

  std::vector<Item> protocol_items;
  for (auto& [key, inst] : instances_) {
    if (inst.delivered) {
      if (r >= inst.send_from && r <= inst.send_until) {
        const auto& vs = inst.values.at(inst.delivered_value);
        protocol_items.emplace_back(DeliverItem{vs.payload, inst.proof, inst.witnesses});
      }
    } else if (inst.echoing && r <= inst.echo_until) {
      const auto& vs = inst.values.at(inst.echo_value);
      if (inst.own) {
        protocol_items.emplace_back(BroadcastItem{vs.payload, *vs.origin_sig});
      } else {
        SignatureSet sigs = vs.sigs;
        sigs.erase(key.sender);  // travels separately as origin_sig
        protocol_items.emplace_back(EchoItem{vs.payload, *vs.origin_sig, std::move(sigs)});
      }
    }
  }
  const bool active = !protocol_items.empty();
  if (active) {
    if (!piggyback_) {
      piggyback_ = true;
      fwd_hbs_.clear();
    }
  } else if (piggyback_) {
    piggyback_ = false;
    hb_epoch_ = r;
    own_hbs_.clear();
    hb_signed_.clear();
  }

  const Digest own_digest = hb_digest(self_, r);
  const Signature own_sig = sign(own_digest);
  own_hbs_[r].insert(self_, own_sig);
  HeartbeatItem own{self_, r, {}};
  own.sigs.insert(self_, own_sig);
  b->items.emplace_back(std::move(own));
  b->piggyback = piggyback_;

  if (!piggyback_) {
    for (auto it = fwd_hbs_.begin(); it != fwd_hbs_.end();) {
      if (it->second.until < r) {
        it = fwd_hbs_.erase(it);
        continue;
      }
      b->items.emplace_back(HeartbeatItem{it->first.first, it->first.second, it->second.sigs});
      ++it;
    }
  }
  for (auto& item : protocol_items) b->items.push_back(std::move(item));

  if (cfg_.crash_detection) {
    ledger_.observe(self_, r, own_sig);
    b->ledger = ledger_.entries(r - 2 * cfg_.params.R);
  }

  if (log_ != nullptr && log_->record_messages())
    for (const auto& item : b->items) log_->message(r, self_, Direction::Out, item);

  std::vector<ProcessId> to;
  to.reserve(members_.size());
  for (auto p : members_)
    if (p != self_ && !excluded_.contains(p)) to.push_back(p);
  out.push_back(Outbound{std::move(to), std::move(b)});

  emit_join_traffic(r, out);
}

void Node::emit_join_traffic(Round r, Outbox& out) {
  if (!serving_ || !serving_->forwarding || r < serving_->from || r > serving_->until) return;
  auto b = std::make_shared<Bundle>();
  b->sender = self_;
  b->round = r;
  JoinItem j;
  j.request = serving_->request;
  j.joiner_sig = serving_->joiner_sig;
  j.n = serving_->n;
  j.ids = serving_->ids;
  j.sigs = serving_->sigs;
  b->items.emplace_back(std::move(j));
  if (log_ != nullptr) log_->message(r, self_, Direction::Out, b->items.back());
  std::vector<ProcessId> to;
  for (auto p : cfg_.pool.members)
    if (p != self_) to.push_back(p);
  to.push_back(serving_->request.joiner);
  out.push_back(Outbound{std::move(to), std::move(b)});
}

// ---------------------------------------------------------------------------
// Reception

void Node::receive(const Bundle& bundle, Round r) {
  const ProcessId s = bundle.sender;
  if (log_ != nullptr && log_->record_messages())
    for (const auto& item : bundle.items) log_->message(r, self_, Direction::In, item);

  if (life_ == LifeCycle::Pending) {
    for (const auto& item : bundle.items)
      if (const auto* j = std::get_if<JoinItem>(&item)) handle_join(*j, r);
    return;
  }
  if (excluded_.contains(s)) return;
  const bool member = is_member(s);

  bool any_valid = false;
  for (const auto& item : bundle.items) {
    if (const auto* b = std::get_if<BroadcastItem>(&item)) {
      any_valid |= handle_broadcast(s, *b, r);
    } else if (const auto* e = std::get_if<EchoItem>(&item)) {
      if (member) any_valid |= handle_echo(s, *e, r);
    } else if (const auto* d = std::get_if<DeliverItem>(&item)) {
      if (member) any_valid |= handle_deliver(s, *d, r);
    } else if (const auto* jh = std::get_if<JoinHbItem>(&item)) {
      handle_join_hb(*jh, r);
    } else if (const auto* j = std::get_if<JoinItem>(&item)) {
      handle_join(*j, r);
    }
  }
  if (member && life_ == LifeCycle::Alive) {
    for (const auto& item : bundle.items)
      if (const auto* hb = std::get_if<HeartbeatItem>(&item)) any_valid |= handle_heartbeat(s, *hb, r, !any_valid);
    if (any_valid) note_heard(s, r);
    if (cfg_.crash_detection) handle_ledger(s, bundle.ledger, r);
  }
}

bool Node::handle_heartbeat(ProcessId sender, const HeartbeatItem& hb, Round r, bool need_validity) {
  if (hb.hb_round > r || hb.hb_round < r - cfg_.params.R) return false;
  if (!is_member(hb.origin)) return false;

  if (hb.origin == self_) {
    auto& set = own_hbs_[hb.hb_round];
    const auto valid = merge_verified(set, hb.sigs, hb_digest(self_, hb.hb_round));
    for (auto p : valid) {
      auto& last = hb_signed_[p];
      last = std::max(last, hb.hb_round);
    }
    note_echoed_me(r, valid);
    return !valid.empty();
  }

  const Digest d = hb_digest(hb.origin, hb.hb_round);
  if (!piggyback_) {
    const auto key = std::make_pair(hb.origin, hb.hb_round);
    auto& fw = fwd_hbs_[key];
    const auto valid = merge_verified(fw.sigs, hb.sigs, d);
    if (valid.empty()) {
      if (fw.sigs.empty()) fwd_hbs_.erase(key);
      return false;
    }
    if (!fw.sigs.contains(self_)) fw.sigs.insert(self_, sign(d));
    fw.until = hb.hb_round + cfg_.params.R;
    if (cfg_.crash_detection)
      if (const SigEntry* e = fw.sigs.find(hb.origin)) ledger_.observe(hb.origin, hb.hb_round, e->sig);
    return true;
  }

  bool valid = false;
  if (cfg_.crash_detection) {
    const SigEntry* e = hb.sigs.find(hb.origin);
    const auto current = ledger_.stamp(hb.origin);
    if (e != nullptr && (!current || *current < hb.hb_round) && keys_->verify(hb.origin, d, e->sig)) {
      ledger_.observe(hb.origin, hb.hb_round, e->sig);
      valid = true;
    }
  }
  if (need_validity && !valid) {
    const SigEntry* e = hb.sigs.find(sender);
    if (e == nullptr) e = hb.sigs.find(hb.origin);
    valid = e != nullptr && keys_->verify(e->signer, d, e->sig);
  }
  return valid;
}

bool Node::handle_broadcast(ProcessId sender, const BroadcastItem& b, Round r) {
  const auto& p = b.payload;
  if (p->sender() != sender || !origin_acceptable(sender, *p, r)) return false;
  const auto key = p->key();
  auto existing = instances_.find(key);
  if (!check_origin_sig(existing == instances_.end() ? nullptr : &existing->second, p, b.origin_sig)) return false;
  auto& inst = instances_[key];
  note_origin_signed(inst, p, b.origin_sig, r);
  if (life_ == LifeCycle::Dead) {
    inst.seen_while_dead = true;
    return true;
  }
  if (life_ != LifeCycle::Alive || inst.own) return true;
  if (!inst.echoing && !inst.delivered && !inst.echo_stopped) start_echo(inst, p, r);
  return true;
}

bool Node::handle_echo(ProcessId sender, const EchoItem& e, Round r) {
  const auto& p = e.payload;
  if (!origin_acceptable(sender, *p, r)) return false;
  const auto key = p->key();
  auto existing = instances_.find(key);
  if (!check_origin_sig(existing == instances_.end() ? nullptr : &existing->second, p, e.origin_sig)) return false;
  auto& inst = instances_[key];
  note_origin_signed(inst, p, e.origin_sig, r);
  auto& vs = value_slot(inst, p);
  const auto valid = merge_verified(vs.sigs, e.sigs, p->digest(), key.sender);
  if (valid.empty() && !e.sigs.empty()) return false;  // nothing left after stripping

  auto& cell = inst.msg_store[sender][p->digest()];
  for (auto id : valid)
    if (!contains(cell, id)) cell.push_back(id);
  if (!contains(cell, key.sender)) cell.push_back(key.sender);

  if (life_ == LifeCycle::Dead) {
    inst.seen_while_dead = true;
    return true;
  }
  if (life_ != LifeCycle::Alive) return true;
  if (key.sender == self_ || contains(valid, self_)) {
    auto signers = valid;
    signers.push_back(sender);
    note_echoed_me(r, signers);
  }
  if (inst.delivered) return true;

  const auto q = quorum();
  if (inst.own) {
    if (inst.echo_value == p->digest() && count_for_quorum(inst, vs, key) >= q)
      deliver(key, inst, p->digest(), r, false);
    return true;
  }
  if (!inst.echoing) {
    if (count_for_quorum(inst, vs, key) >= q) {
      deliver(key, inst, p->digest(), r, false);
    } else if (!inst.echo_stopped) {
      start_echo(inst, p, r);
    }
    return true;
  }
  // Echoing the same value (aggregate and forward) or another one (record
  // only); either way the incoming value is delivered once it has a quorum.
  if (count_for_quorum(inst, vs, key) >= q) deliver(key, inst, p->digest(), r, false);
  return true;
}

bool Node::handle_deliver(ProcessId sender, const DeliverItem& d, Round r) {
  const auto& p = d.payload;
  if (!origin_acceptable(sender, *p, r)) return false;
  const auto key = p->key();
  auto& inst = instances_[key];
  auto& vs = value_slot(inst, p);
  const auto proof_ids = merge_verified(vs.sigs, d.proof, p->digest(), key.sender);
  const std::size_t proof_count = proof_ids.size() - ((inst.join && contains(proof_ids, key.sender)) ? 1 : 0);
  if (proof_count < quorum()) {
    if (vs.sigs.empty() && !vs.origin_sig) inst.values.erase(p->digest());
    if (inst.values.empty() && !inst.own && !inst.delivered) instances_.erase(key);
    return false;
  }
  if (life_ == LifeCycle::Dead) {
    inst.seen_while_dead = true;
    return true;
  }
  if (life_ != LifeCycle::Alive) return true;

  const Digest dd = deliver_digest(p->digest());
  std::vector<ProcessId> witness_ids;
  if (inst.delivered && inst.delivered_value == p->digest()) {
    witness_ids = merge_verified(inst.witnesses, d.witnesses, dd);
  } else if (!inst.delivered) {
    SignatureSet w;
    witness_ids = merge_verified(w, d.witnesses, dd);
    deliver(key, inst, p->digest(), r, false);
    inst.witnesses.merge(w);
  }
  if (contains(proof_ids, self_)) note_echoed_me(r, proof_ids);
  if (contains(witness_ids, self_)) note_echoed_me(r, witness_ids);
  return true;
}

void Node::handle_ledger(ProcessId sender, const std::vector<LedgerEntry>& entries, Round r) {
  auto accepted = merge_into(ledger_, entries, *keys_);
  detector_.record(sender, r, accepted);
}

// ---------------------------------------------------------------------------
// Join handshake

void Node::handle_join_hb(const JoinHbItem& j, Round r) {
  if (life_ != LifeCycle::Alive || !cfg_.pool.contains(self_)) return;
  const auto& req = j.request;
  if (r < req.round + 1 || r > req.round + 1 + cfg_.params.R) return;
  if (is_member(req.joiner) || req.joiner == self_) return;
  if (serving_ && !(serving_->request == req) && r <= serving_->until) return;
  if (!keys_->verify(req.joiner, join_hb_digest(req), j.joiner_sig)) return;
  if (!serving_ || !(serving_->request == req)) {
    ServeState st;
    st.request = req;
    st.joiner_sig = j.joiner_sig;
    st.n = n();
    st.ids = members_;
    st.digest = join_digest(req, st.n, st.ids);
    st.sigs.insert(self_, sign(st.digest));
    st.from = r + 1;
    st.until = req.round + 1 + cfg_.params.R;
    serving_ = std::move(st);
  }
  serving_->forwarding = true;
}

void Node::handle_join(const JoinItem& j, Round r) {
  const auto& req = j.request;
  if (r < req.round + 1 || r > req.round + 1 + cfg_.params.R) return;
  const auto pool_only = [this, &req](const SignatureSet& in) {
    SignatureSet out;
    for (const auto& e : in)
      if (cfg_.pool.contains(e.signer) && e.signer != req.joiner) out.insert(e);
    return out;
  };
  const Digest digest = join_digest(req, j.n, j.ids);

  if (life_ == LifeCycle::Pending) {
    if (!joiner_ || !(joiner_->request == req) || r > joiner_->deadline) return;
    auto& slot = joiner_->collected[digest];
    if (slot.second.empty()) slot.first = j;
    SignatureSet fresh;
    for (const auto& e : pool_only(j.sigs)) {
      const SigEntry* have = slot.second.find(e.signer);
      if ((have != nullptr && have->sig == e.sig) || keys_->verify(e.signer, digest, e.sig)) fresh.insert(e);
    }
    slot.second.merge(fresh);
    if (slot.second.size() >= cfg_.pool.joiner_threshold()) {
      std::vector<ProcessId> ids = j.ids;
      ids.push_back(self_);
      std::sort(ids.begin(), ids.end());
      ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
      members_ = std::move(ids);
      f_ = max_faulty(n(), cfg_.params.rep);
      joiner_.reset();
      enter_alive(r);
      log_local(r, EventKind::JoinCompleted, {self_, req.round}, static_cast<std::uint32_t>(slot.second.size()));
      broadcast(r + 1, make_join_value(join_key_));
    }
    return;
  }

  if (life_ != LifeCycle::Alive || !cfg_.pool.contains(self_)) return;
  if (is_member(req.joiner)) return;
  if (j.n != n() || j.ids != members_) return;
  if (!keys_->verify(req.joiner, join_hb_digest(req), j.joiner_sig)) return;
  if (serving_ && !(serving_->request == req) && r <= serving_->until) return;
  if (!serving_ || !(serving_->request == req)) {
    ServeState st;
    st.request = req;
    st.joiner_sig = j.joiner_sig;
    st.n = j.n;
    st.ids = j.ids;
    st.digest = digest;
    st.sigs.insert(self_, sign(digest));
    st.from = r + 1;
    st.until = req.round + 1 + cfg_.params.R;
    serving_ = std::move(st);
  }
  SignatureSet fresh;
  for (const auto& e : pool_only(j.sigs)) {
    const SigEntry* have = serving_->sigs.find(e.signer);
    if ((have != nullptr && have->sig == e.sig) || keys_->verify(e.signer, digest, e.sig)) fresh.insert(e);
  }
  serving_->sigs.merge(fresh);
  if (!serving_->forwarding && serving_->sigs.size() >= cfg_.pool.forward_threshold()) {
    serving_->forwarding = true;
    serving_->from = std::max(serving_->from, r + 1);
  }
}

void Node::joiner_tick(Round r) {
  if (!joiner_) return;
  if (joiner_->retry_at >= 0) {
    if (r + 1 < joiner_->retry_at) return;
    // New attempt with a fresh stamp; first JoinHB goes out next round.
    JoinerState js;
    js.request = JoinRequest{self_, join_key_, r};
    js.joiner_sig = sign(join_hb_digest(js.request));
    js.deadline = r + 1 + cfg_.params.R;
    joiner_ = std::move(js);
    log_local(r, EventKind::JoinRequested, {self_, r});
    return;
  }
  if (r >= joiner_->deadline) {
    log_local(r, EventKind::JoinFailed, {self_, joiner_->request.round});
    joiner_->retry_at = r + 2 + static_cast<Round>(rng_.below(static_cast<std::uint64_t>(2 * cfg_.params.R)));
  }
}

// ---------------------------------------------------------------------------
// Membership changes carried by broadcasts

void Node::apply_membership_delivery(const BroadcastPayload& p, Round r) {
  if (is_join_value(p.value())) {
    if (p.sender() == self_ || std::binary_search(members_.begin(), members_.end(), p.sender())) return;
    members_.insert(std::upper_bound(members_.begin(), members_.end(), p.sender()), p.sender());
    f_ = max_faulty(n(), cfg_.params.rep);
    admitted_[p.sender()] = r;
    log_local(r, EventKind::MembershipAdded, p.key(), n(), std::to_string(to_index(p.sender())));
  } else if (is_leave_value(p.value())) {
    if (p.sender() == self_) {
      left_ = true;
      crash(r, EventKind::Left, std::nullopt);
    } else {
      remove_member(p.sender(), r, EventKind::MembershipRemoved);
      f_ = max_faulty(n(), cfg_.params.rep);
    }
  }
}

void Node::remove_member(ProcessId p, Round r, EventKind kind) {
  auto it = std::lower_bound(members_.begin(), members_.end(), p);
  if (it == members_.end() || *it != p) return;
  members_.erase(it);
  excluded_.insert(p);
  admitted_.erase(p);
  detector_.forget(p);
  ledger_.forget(p);
  last_heard_.erase(p);
  last_echoed_.erase(p);
  hb_signed_.erase(p);
  log_local(r, kind, {p, r}, n(), std::to_string(to_index(p)));
}

void Node::detect_crashes(Round r) {
  std::vector<ProcessId> candidates;
  for (auto p : members_) {
    if (p == self_) continue;
    // No ledger carries a stamp for a new member before it joined.
    if (auto it = admitted_.find(p); it != admitted_.end() && r <= it->second + cfg_.params.R) continue;
    candidates.push_back(p);
  }
  for (auto p : detector_.detect(r, cfg_.params.R, 2 * f_ + 1, candidates)) {
    ++detected_;
    remove_member(p, r, EventKind::CrashDeclared);
  }
}

// ---------------------------------------------------------------------------
// End of round: self-crash rules, revival, housekeeping

std::optional<CrashCase> Node::crash_condition(Round r) const {
  const Round R = cfg_.params.R;
  const std::size_t q = quorum();

  for (const auto& [key, inst] : instances_) {
    if (!inst.echoing || inst.delivered || inst.lie) continue;
    if (r < inst.window_start + R) continue;
    if (count_for_quorum(inst, inst.values.at(inst.echo_value), key) < q) return CrashCase::EchoQuorum;
  }
  for (const auto& [key, inst] : instances_) {
    if (!inst.delivered || inst.case2_done) continue;
    if (r >= inst.deliver_round + R && inst.witnesses.size() < q) return CrashCase::DeliverQuorum;
  }
  if (r > life_epoch_ + R) {
    if (count_recent(last_heard_, r - R + 1, self_) < q) return CrashCase::Silence;
    if (count_recent(last_echoed_, r - R + 1, self_) < q) return CrashCase::Unechoed;
  }
  if (!piggyback_ && r > hb_epoch_ + R) {
    std::size_t signers = 1;
    for (const auto& [p, round] : hb_signed_)
      if (p != self_ && round >= r - 1 - R) ++signers;
    if (signers < q) return CrashCase::Heartbeat;
  }
  return std::nullopt;
}

void Node::crash(Round r, EventKind kind, std::optional<CrashCase> c) {
  life_ = LifeCycle::Dead;
  last_crash_ = c;
  for (auto& [key, inst] : instances_) {
    if (inst.echoing) {
      inst.echoing = false;
      inst.echo_stopped = true;
    }
    inst.send_until = std::min(inst.send_until, r);
    inst.seen_while_dead = false;
  }
  fwd_hbs_.clear();
  serving_.reset();
  log_local(r, kind, {}, 0, c ? std::string(to_string(*c)) : std::string());
}

void Node::enter_alive(Round r) {
  life_ = LifeCycle::Alive;
  life_epoch_ = r;
  hb_epoch_ = r;
  piggyback_ = false;
  own_hbs_.clear();
  fwd_hbs_.clear();
  hb_signed_.clear();
  last_heard_.clear();
  last_echoed_.clear();
}

void Node::try_revive(Round r) {
  const Round R = cfg_.params.R;
  const std::size_t q = quorum();
  for (auto& [key, inst] : instances_) {
    if (inst.revival_used || !inst.seen_while_dead) continue;
    if (!(r - 2 * R > key.origin_round)) continue;
    for (const auto& [digest, vs] : inst.values) {
      if (count_for_quorum(inst, vs, key) < q) continue;
      if (inst.delivered && inst.delivered_value != digest) continue;
      inst.revival_used = true;
      enter_alive(r);
      log_local(r, EventKind::Revived, key, static_cast<std::uint32_t>(vs.sigs.size()), value_id(*vs.payload));
      if (!inst.delivered) {
        deliver(key, inst, digest, r, true);
      } else {
        inst.send_from = r + 1;
        inst.send_until = r + 1 + R;
        inst.case2_done = true;
      }
      return;
    }
  }
}

void Node::prune(Round r) {
  const Round R = cfg_.params.R;
  own_hbs_.erase(own_hbs_.begin(), own_hbs_.lower_bound(r - 2 * R - 2));
  if (cfg_.crash_detection) ledger_.prune(r - 2 * R);
  if (serving_ && r > serving_->until) serving_.reset();
}

void Node::end_round(Round r) {
  if (life_ == LifeCycle::Pending) {
    joiner_tick(r);
    return;
  }
  if (life_ == LifeCycle::Dead) {
    if (cfg_.revival && !left_) try_revive(r);
    prune(r);
    return;
  }
  if (cfg_.crash_detection) detect_crashes(r);
  if (cfg_.self_crash) {
    if (auto c = crash_condition(r)) {
      crash(r, EventKind::SelfCrash, c);
      prune(r);
      return;
    }
  }
  for (auto& [key, inst] : instances_)
    if (inst.delivered && !inst.case2_done && r >= inst.deliver_round + cfg_.params.R) inst.case2_done = true;
  for (auto& [key, inst] : instances_)
    if (inst.echoing && !inst.delivered && r >= inst.echo_until) {
      inst.echoing = false;
      inst.echo_stopped = true;
    }
  prune(r);
}

}  // namespace rtbyz
