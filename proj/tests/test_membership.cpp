#include <gtest/gtest.h>

#include "rig.hpp"
#include "rtbyz/membership.hpp"
#include "rtbyz/netsim.hpp"

using namespace rtbyz;
using rtbyz::testing::Rig;

namespace {

struct Keys {
  KeyRegistry reg{std::shared_ptr<const SignatureScheme>(make_sim_scheme())};
  Keys() {
    for (std::uint32_t i = 0; i < 6; ++i) reg.enroll(pid(i), derive_seed(3, i));
  }
  LedgerEntry entry(std::uint32_t id, Round stamp) const {
    return {pid(id), stamp, reg.signer(pid(id)).sign(hb_digest(pid(id), stamp))};
  }
};

}  // namespace

TEST(Ledger, MergeTakesNewerValidStamp) {
  Keys k;
  LastSeenLedger local;
  const auto e5 = k.entry(1, 5);
  local.observe(e5.id, e5.stamp, e5.proof);
  EXPECT_EQ(merge_ledgers(local, {k.entry(1, 9)}, k.reg).stamp(pid(1)), 9);
  EXPECT_EQ(merge_ledgers(local, {k.entry(1, 3)}, k.reg).stamp(pid(1)), 5);
}

TEST(Ledger, InvalidProofIgnored) {
  Keys k;
  LastSeenLedger local;
  const auto e5 = k.entry(1, 5);
  local.observe(e5.id, e5.stamp, e5.proof);
  auto forged = k.entry(1, 9);
  forged.proof = k.entry(2, 9).proof;
  auto wrong_round = k.entry(1, 8);
  wrong_round.stamp = 9;
  const auto merged = merge_ledgers(local, {forged, wrong_round}, k.reg);
  EXPECT_EQ(merged.stamp(pid(1)), 5);
  EXPECT_FALSE(verify_ledger_entry(k.reg, forged));
}

TEST(Ledger, DisjointUnion) {
  Keys k;
  LastSeenLedger local;
  const auto a = k.entry(1, 5);
  local.observe(a.id, a.stamp, a.proof);
  const auto merged = merge_ledgers(local, {k.entry(2, 7), k.entry(3, 2)}, k.reg);
  EXPECT_EQ(merged.size(), 3u);
  EXPECT_EQ(merged.stamp(pid(2)), 7);
  EXPECT_EQ(merged.stamp(pid(3)), 2);
}

TEST(Ledger, MergeIsPointwiseMax) {
  Keys k;
  SplitMix rng(8);
  const auto draw = [&] { return k.entry(static_cast<std::uint32_t>(rng.below(6)), static_cast<Round>(rng.below(20))); };
  for (int trial = 0; trial < 200; ++trial) {
    LastSeenLedger a;
    std::vector<LedgerEntry> in;
    std::map<ProcessId, Round> oracle;
    const auto note = [&](const LedgerEntry& e) {
      auto [it, fresh] = oracle.emplace(e.id, e.stamp);
      if (!fresh) it->second = std::max(it->second, e.stamp);
    };
    for (int i = 0; i < 5; ++i) {
      const auto e = draw();
      a.observe(e.id, e.stamp, e.proof);
      note(e);
    }
    for (int i = 0; i < 5; ++i) {
      in.push_back(draw());
      note(in.back());
    }
    const auto m = merge_ledgers(a, in, k.reg);
    ASSERT_EQ(m.size(), oracle.size());
    for (const auto& [id, st] : oracle) EXPECT_EQ(m.stamp(id), st);
  }
}

namespace {

std::vector<LedgerEntry> ledger_with(std::uint32_t id, Round stamp) { return {LedgerEntry{pid(id), stamp, {}}}; }

}  // namespace

TEST(Detector, QuorumOfStaleLedgers) {
  CrashDetector d;
  // R = 5, round 20: fresh means stamp >= t - R.
  d.record(pid(1), 20, ledger_with(4, 3));
  d.record(pid(2), 20, ledger_with(4, 3));
  d.record(pid(3), 19, {});
  EXPECT_EQ(d.detect(20, 5, 3, {pid(4)}), std::vector<ProcessId>{pid(4)});
}

TEST(Detector, OneFreshLedgerBlocks) {
  CrashDetector d;
  d.record(pid(1), 20, ledger_with(4, 3));
  d.record(pid(2), 20, ledger_with(4, 3));
  d.record(pid(3), 20, ledger_with(4, 18));
  EXPECT_TRUE(d.detect(20, 5, 3, {pid(4)}).empty());
}

TEST(Detector, OldLedgersDoNotCount) {
  CrashDetector d;
  d.record(pid(1), 20, ledger_with(4, 3));
  d.record(pid(2), 20, ledger_with(4, 3));
  d.record(pid(3), 10, ledger_with(4, 3));
  EXPECT_TRUE(d.detect(20, 5, 3, {pid(4)}).empty());
}

TEST(Pool, Thresholds) {
  TrustedPool four{{pid(0), pid(1), pid(2), pid(3)}};
  EXPECT_EQ(four.forward_threshold(), 2u);
  EXPECT_EQ(four.joiner_threshold(), 3u);
  TrustedPool seven;
  for (std::uint32_t i = 0; i < 7; ++i) seven.members.push_back(pid(i));
  EXPECT_EQ(seven.forward_threshold(), 3u);
  EXPECT_EQ(seven.joiner_threshold(), 5u);
  TrustedPool three{{pid(0), pid(1), pid(2)}};
  EXPECT_THROW(three.validate(), ParamError);
}

// --- crash detection in a running world ---------------------------------------

namespace {

WorldConfig detection_world(std::uint32_t n, std::uint32_t rep, Round R) {
  WorldConfig wc;
  wc.params = SystemParams::make(n, R, rep);
  wc.crash_detection = true;
  wc.seed = 4;
  return wc;
}

}  // namespace

TEST(Detection, SilencedNodeDeclaredByAllOnce) {
  const Round R = 6;
  World w(detection_world(5, 1, R));
  w.schedule_silence(pid(4), 10);
  w.run_until(80);
  // Last proven stamp is 9; stale from 9 + R + 1 on.
  const Round stale = 9 + R + 1;
  for (std::uint32_t i = 0; i < 4; ++i) {
    std::size_t declared = 0;
    for (const auto& e : w.log().events())
      if (e.node == pid(i) && e.kind == EventKind::CrashDeclared) {
        ++declared;
        EXPECT_GE(e.round, stale);
        EXPECT_LE(e.round, stale + R);
      }
    EXPECT_EQ(declared, 1u) << i;
    EXPECT_EQ(w.node(pid(i)).n(), 4u);
    EXPECT_EQ(w.node(pid(i)).detected(), 1u);
    EXPECT_EQ(w.node(pid(i)).life(), LifeCycle::Alive);
  }
}

TEST(Detection, OverprovisionedQuorumShrinks) {
  World w(detection_world(6, 1, 6));
  ASSERT_EQ(w.node(pid(0)).quorum(), 4u);
  w.schedule_silence(pid(5), 5);
  w.run_until(40);
  for (std::uint32_t i = 0; i < 5; ++i) EXPECT_EQ(w.node(pid(i)).quorum(), 3u);
}

TEST(Detection, DetectedNodeStaysOut) {
  World w(detection_world(5, 1, 6));
  w.schedule_silence(pid(4), 10);
  w.schedule_broadcast(pid(1), 40, {9});
  w.run_until(80);
  for (std::uint32_t i = 0; i < 4; ++i) {
    const auto* inst = w.node(pid(i)).instance({pid(1), 40});
    ASSERT_NE(inst, nullptr);
    EXPECT_TRUE(inst->delivered);
    EXPECT_EQ(w.node(pid(i)).n(), 4u);
  }
}

// --- joins --------------------------------------------------------------------

TEST(Join, AliveWithinRLossless) {
  for (Round R : {4, 6, 10}) {
    WorldConfig wc;
    wc.params = SystemParams::make(4, R);
    World w(wc);
    const auto j = w.schedule_join(3);
    w.run_until(3 + 6 * R);
    Round done = -1;
    std::size_t added = 0;
    for (const auto& e : w.log().events()) {
      if (e.kind == EventKind::JoinCompleted && e.node == j) done = e.round;
      if (e.kind == EventKind::MembershipAdded) ++added;
    }
    ASSERT_GT(done, 0) << R;
    EXPECT_LE(done, 3 + R);
    EXPECT_EQ(w.node(j).life(), LifeCycle::Alive);
    EXPECT_EQ(added, 4u);
    for (std::uint32_t i = 0; i < 4; ++i) EXPECT_EQ(w.node(pid(i)).n(), 5u);
    EXPECT_EQ(w.node(j).n(), 5u);
  }
}

TEST(Join, NewMemberNotDeclaredCrashed) {
  for (Round R : {4, 6}) {
    World w(detection_world(7, 0, R));
    const auto j = w.schedule_join(4);
    w.run_until(4 + 10 * R);
    for (const auto& e : w.log().events()) {
      EXPECT_NE(e.kind, EventKind::CrashDeclared) << R << " at " << e.round;
      EXPECT_NE(e.kind, EventKind::SelfCrash) << R << " at " << e.round;
    }
    for (std::uint32_t i = 0; i < 7; ++i) EXPECT_EQ(w.node(pid(i)).n(), 8u);
    EXPECT_EQ(w.node(j).life(), LifeCycle::Alive);
  }
}

TEST(Join, PoolHearsJoinHbNextRound) {
  WorldConfig wc;
  wc.params = SystemParams::make(5, 6);
  wc.record_messages = true;
  World w(wc);
  w.schedule_join(3);
  w.run_until(5);
  std::map<ProcessId, Round> first;
  for (const auto& e : w.log().events())
    if (e.kind == EventKind::JoinHB && e.direction == Direction::In) first.emplace(e.node, e.round);
  ASSERT_EQ(first.size(), 4u);
  for (std::uint32_t i = 0; i < 4; ++i) EXPECT_EQ(first.at(pid(i)), 4);
}

TEST(Join, SecondStartIsNoop) {
  WorldConfig wc;
  wc.params = SystemParams::make(4, 6);
  World w(wc);
  const auto j = w.schedule_join(2);
  w.run_until(20);
  ASSERT_EQ(w.node(j).life(), LifeCycle::Alive);
  w.node(j).start_join(21, {1, 2, 3});
  EXPECT_EQ(w.node(j).life(), LifeCycle::Alive);
  EXPECT_EQ(w.node(j).n(), 5u);
}

TEST(Join, FailsAndRetriesUnderTotalLoss) {
  WorldConfig wc;
  wc.params = SystemParams::make(4, 4);
  wc.net.p_loss = 1.0;
  World w(wc);
  const auto j = w.schedule_join(2);
  w.run_until(40);
  std::vector<Round> requests;
  std::size_t failed = 0;
  for (const auto& e : w.log().events()) {
    if (e.node != j) continue;
    if (e.kind == EventKind::JoinRequested) requests.push_back(e.instance.origin_round);
    if (e.kind == EventKind::JoinFailed) ++failed;
    EXPECT_NE(e.kind, EventKind::JoinCompleted);
  }
  EXPECT_EQ(w.node(j).life(), LifeCycle::Pending);
  EXPECT_GE(failed, 1u);
  ASSERT_GE(requests.size(), 2u);
  EXPECT_TRUE(std::is_sorted(requests.begin(), requests.end()));
  EXPECT_GT(requests[1], requests[0] + 1 + 4);  // after the first deadline
}

// The joiner's own signature never counts toward the quorum of its join
// broadcast.
TEST(Join, JoinerSignatureNotCounted) {
  Rig rig(4, 5, true, true, 1);
  const auto joiner = 4U;
  auto p = make_payload(pid(joiner), 3, make_join_value(rig.keys->public_key(pid(joiner))->bytes));
  rig.send(1, 3, {rig.echo(p, {1, 2})});  // joiner + 1 + 2, plus self once echoing
  const auto* inst = rig.node->instance(p->key());
  ASSERT_NE(inst, nullptr);
  EXPECT_TRUE(inst->join);
  EXPECT_FALSE(inst->delivered);
  rig.send(2, 3, {rig.echo(p, {1, 2, 3})});
  EXPECT_TRUE(rig.node->instance(p->key())->delivered);
  EXPECT_EQ(rig.node->n(), 5u);
}

// --- leaves -------------------------------------------------------------------

TEST(Leave, LeaverDeadWithinThreeR) {
  for (Round R : {3, 6}) {
    WorldConfig wc;
    wc.params = SystemParams::make(4, R);
    World w(wc);
    w.schedule_leave(pid(3), 5);
    w.run_until(5 + 8 * R);
    Round left = -1;
    for (const auto& e : w.log().events())
      if (e.kind == EventKind::Left && e.node == pid(3)) left = e.round;
    ASSERT_GT(left, 0);
    EXPECT_LE(left, 5 + 3 * R);
    EXPECT_EQ(w.node(pid(3)).life(), LifeCycle::Dead);
    for (std::uint32_t i = 0; i < 3; ++i) {
      EXPECT_EQ(w.node(pid(i)).n(), 3u);
      EXPECT_EQ(w.node(pid(i)).f(), 0u);
      EXPECT_EQ(w.node(pid(i)).life(), LifeCycle::Alive) << i;
    }
  }
}

TEST(Leave, FailedLeaveStillEndsDead) {
  WorldConfig wc;
  wc.params = SystemParams::make(4, 4);
  wc.net.p_loss = 1.0;
  World w(wc);
  w.schedule_leave(pid(3), 2);
  w.run_until(30);
  EXPECT_EQ(w.node(pid(3)).life(), LifeCycle::Dead);
}

TEST(Leave, LeaverDoesNotRevive) {
  WorldConfig wc;
  wc.params = SystemParams::make(5, 4);
  World w(wc);
  w.schedule_leave(pid(4), 2);
  w.schedule_broadcast(pid(0), 20, {1});
  w.run_until(60);
  EXPECT_EQ(w.node(pid(4)).life(), LifeCycle::Dead);
  for (const auto& e : w.log().events()) EXPECT_FALSE(e.node == pid(4) && e.kind == EventKind::Revived);
}
