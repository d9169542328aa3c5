#include <algorithm>
#include <bit>
#include <thread>

#include "rtbyz/experiments.hpp"

namespace rtbyz {

namespace {

class Bits {
 public:
  explicit Bits(std::size_t n = 0) : w_((n + 63) / 64, 0) {}
  void set(std::size_t i) { w_[i >> 6] |= 1ULL << (i & 63); }
  bool test(std::size_t i) const { return (w_[i >> 6] >> (i & 63)) & 1U; }
  /// True when `other` holds a bit this set lacks.
  bool misses_from(const Bits& other) const {
    for (std::size_t k = 0; k < w_.size(); ++k)
      if (other.w_[k] & ~w_[k]) return true;
    return false;
  }
  void merge(const Bits& other) {
    for (std::size_t k = 0; k < w_.size(); ++k) w_[k] |= other.w_[k];
  }
  std::size_t count() const {
    std::size_t c = 0;
    for (auto x : w_) c += static_cast<std::size_t>(std::popcount(x));
    return c;
  }

 private:
  std::vector<std::uint64_t> w_;
};

}  // namespace

Round completion_round(const KernelConfig& cfg, std::uint64_t seed) {
  const std::uint32_t C = cfg.correct;
  if (C == 0) throw ParamError("kernel needs at least one correct process");
  cfg.net.validate();
  const bool ge = cfg.net.model == LossModel::GilbertElliott;

  SplitMix rng(seed);
  std::vector<LinkModel> links;
  if (ge) {
    links.reserve(static_cast<std::size_t>(C) * C);
    for (std::uint32_t i = 0; i < C; ++i)
      for (std::uint32_t j = 0; j < C; ++j) links.emplace_back(cfg.net, derive_seed(seed, i, j));
  }
  const double p = cfg.net.p_loss;
  const auto delivered = [&](std::uint32_t i, std::uint32_t j, Round r) {
    if (ge) {
      LinkModel& l = links[static_cast<std::size_t>(i) * C + j];
      l.advance_to(r);
      return l.transmit();
    }
    return p <= 0.0 || !(rng.unit() < p);
  };

  std::vector<Bits> known(C, Bits(C));
  std::vector<bool> has_value(C, false);
  std::vector<bool> done(C, false);
  known[0].set(0);
  has_value[0] = true;
  std::uint32_t remaining = C;
  if (C == 1) return 1;

  std::vector<Bits> snap;
  std::vector<std::uint32_t> fresh;
  for (Round r = 1; r <= cfg.max_rounds; ++r) {
    snap = known;
    const std::vector<bool> sending = has_value;
    fresh.clear();
    for (std::uint32_t j = 0; j < C; ++j) {
      if (done[j]) continue;
      for (std::uint32_t i = 0; i < C; ++i) {
        if (i == j || !sending[i]) continue;
        if (!known[j].misses_from(snap[i])) continue;
        if (!delivered(i, j, r)) continue;
        known[j].merge(snap[i]);
        if (!has_value[j]) {
          has_value[j] = true;
          fresh.push_back(j);
        }
      }
    }
    for (auto j : fresh) known[j].set(j);
    for (std::uint32_t j = 0; j < C; ++j) {
      if (!done[j] && known[j].count() == C) {
        done[j] = true;
        --remaining;
      }
    }
    if (remaining == 0) return r;
  }
  return cfg.max_rounds + 1;
}

std::vector<Round> completion_rounds(const KernelConfig& cfg, std::uint64_t reps, std::uint64_t seed,
                                     unsigned jobs) {
  std::vector<Round> out(reps, 0);
  jobs = std::max(1U, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::uint64_t>(reps, 1))));
  const auto work = [&](unsigned w) {
    for (std::uint64_t i = w; i < reps; i += jobs) out[i] = completion_round(cfg, derive_seed(seed, i));
  };
  if (jobs == 1) {
    work(0);
    return out;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < jobs; ++w) pool.emplace_back(work, w);
  for (auto& t : pool) t.join();
  return out;
}

std::uint64_t crash_count(const std::vector<Round>& completion, Round R) {
  return static_cast<std::uint64_t>(std::count_if(completion.begin(), completion.end(), [R](Round t) { return t > R; }));
}

double crash_fraction(const std::vector<Round>& completion, Round R) {
  if (completion.empty()) return 0.0;
  return static_cast<double>(crash_count(completion, R)) / static_cast<double>(completion.size());
}

WindowEstimate estimate_R(const std::vector<Round>& completion, Round max_R) {
  for (Round R = 1; R <= max_R; ++R)
    if (crash_count(completion, R) == 0) return {R, true};
  return {max_R + 1, false};
}

}  // namespace rtbyz
