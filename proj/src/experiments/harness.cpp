#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rtbyz/experiments.hpp"

namespace rtbyz {

std::string fmt_double(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

namespace {

constexpr std::uint64_t kRelStream = 0x72656c;
constexpr std::uint64_t kWinStream = 0x77696e;
constexpr std::uint64_t kShutStream = 0x736864;
constexpr std::uint64_t kLatStream = 0x6c6174;
constexpr std::uint64_t kBwStream = 0x627764;

Bytes random_value(std::uint64_t seed, std::size_t len) {
  SplitMix rng(seed);
  Bytes v(len);
  for (auto& x : v) x = static_cast<std::uint8_t>(rng.next());
  return v;
}

}  // namespace

ProtocolRunResult run_protocol_instance(const ProtocolRunConfig& cfg) {
  WorldConfig wc;
  wc.params = SystemParams::make(cfg.n, cfg.R);
  wc.net = cfg.net;
  wc.backend = cfg.backend;
  wc.seed = cfg.seed;
  wc.measure_time = cfg.measure_time;
  World world(wc);

  const std::uint32_t f = wc.params.f;
  std::uint32_t byz = 0;
  if (cfg.adversary != Strategy::None) byz = cfg.byzantine < 0 ? f : static_cast<std::uint32_t>(cfg.byzantine);
  AdversaryConfig ac;
  ac.kind = cfg.adversary;
  for (std::uint32_t i = 0; i < byz; ++i) ac.targets.push_back(pid(cfg.n - 1 - i));
  install_adversaries(world, ac);

  ProcessId origin = pid(0);
  if (cfg.originator >= 0)
    origin = pid(static_cast<std::uint32_t>(cfg.originator));
  else if (cfg.adversary == Strategy::Equivocate && byz > 0)
    origin = pid(cfg.n - 1);
  const Round start = 1;
  world.schedule_broadcast(origin, start, random_value(derive_seed(cfg.seed, 0x76616c), cfg.payload_bytes));

  ProtocolRunResult res;
  res.horizon = cfg.horizon > 0 ? cfg.horizon : start + 8 * cfg.R;
  world.run_until(res.horizon);

  MonitorInput mi;
  mi.events = &world.log().events();
  mi.byzantine = world.byzantine_ids();
  mi.nodes = world.ids();
  mi.R = cfg.R;
  mi.horizon = res.horizon;
  res.violations = check_properties(mi);

  for (const auto& e : world.log().events()) {
    if (mi.byzantine.contains(e.node)) continue;
    if (e.kind == EventKind::SelfCrash) ++res.self_crashes;
    if (e.kind == EventKind::Delivered) ++res.correct_deliveries;
  }
  for (auto p : world.ids()) {
    if (mi.byzantine.contains(p)) continue;
    const auto& m = world.metrics()[to_index(p)];
    res.peak_emission_bytes = std::max(res.peak_emission_bytes, m.peak_sent);
    res.peak_reception_bytes = std::max(res.peak_reception_bytes, m.peak_recv);
    res.peak_bcast_emission_bytes = std::max(res.peak_bcast_emission_bytes, m.peak_bcast_sent);
    res.peak_bcast_reception_bytes = std::max(res.peak_bcast_reception_bytes, m.peak_bcast_recv);
    res.d_max_us = std::max(res.d_max_us, m.max_round_us);
  }
  return res;
}

LatencyRow run_latency(std::uint32_t n, double p_loss, Round R, Backend backend, std::uint64_t seed) {
  ProtocolRunConfig cfg;
  cfg.n = n;
  cfg.R = R;
  cfg.net.p_loss = p_loss;
  cfg.adversary = Strategy::Withhold;
  cfg.backend = backend;
  cfg.measure_time = true;
  // The broadcast itself: echo and delivery of every correct process.
  cfg.horizon = 1 + 3 * R;
  cfg.seed = seed;
  const auto res = run_protocol_instance(cfg);
  LatencyRow row;
  row.n = n;
  row.p_loss = p_loss;
  row.R = R;
  row.d_max_us = res.d_max_us;
  row.total_ms = 3.0 * static_cast<double>(R) * res.d_max_us / 1000.0;
  return row;
}

BandwidthRow run_bandwidth(std::uint32_t n, double p_loss, Round R, std::uint32_t payload_bits, std::uint64_t seed) {
  ProtocolRunConfig cfg;
  cfg.n = n;
  cfg.R = R;
  cfg.net.p_loss = p_loss;
  cfg.adversary = Strategy::Withhold;
  cfg.payload_bytes = (payload_bits + 7) / 8;
  // Echo phase plus the full Deliver phase; only bundles carrying the
  // broadcast are metered, standalone heartbeat rounds are not.
  cfg.horizon = 3 + 3 * R;
  cfg.seed = seed;
  const auto res = run_protocol_instance(cfg);
  BandwidthRow row;
  row.n = n;
  row.p_loss = p_loss;
  row.payload_bits = payload_bits;
  row.R = R;
  row.peak_emission_bits = res.peak_bcast_emission_bytes * 8;
  row.peak_reception_bits = res.peak_bcast_reception_bytes * 8;
  return row;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& dir, const char* name, std::string_view header) {
  std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
  out << header << '\n';
  return out;
}

void net_columns(std::ostream& os, const NetConfig& net) {
  os << to_string(net.model) << ',' << fmt_double(net.p_loss) << ',' << fmt_double(net.alpha) << ','
     << fmt_double(net.beta);
}

Round cell_max_R(const std::vector<Round>& Rs) { return Rs.empty() ? 1 : *std::max_element(Rs.begin(), Rs.end()); }

}  // namespace

void run_experiment(const ExperimentSpec& spec, const std::string& out_dir, const Progress& progress) {
  namespace fs = std::filesystem;
  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + out_dir);
  const auto say = [&](const std::string& s) {
    if (progress) progress(s);
  };

  {
    auto out = open_csv(dir, "reliability.csv", kReliabilityHeader);
    const auto& rel = spec.reliability;
    if (rel.enabled) {
      for (std::size_t ci = 0; ci < rel.correct.size(); ++ci) {
        for (std::size_t ni = 0; ni < rel.nets.size(); ++ni) {
          KernelConfig kc{rel.correct[ci], rel.nets[ni], cell_max_R(rel.R)};
          const auto seed = derive_seed(spec.seed ^ kRelStream, ci, ni);
          const auto T = completion_rounds(kc, spec.reps, seed, spec.jobs);
          for (Round R : rel.R) {
            const auto crashes = crash_count(T, R);
            out << rel.correct[ci] << ',';
            net_columns(out, rel.nets[ni]);
            out << ',' << R << ',' << spec.reps << ',' << crashes << ','
                << fmt_double(spec.reps ? static_cast<double>(crashes) / static_cast<double>(spec.reps) : 0.0)
                << '\n';
          }
          say("reliability |C|=" + std::to_string(rel.correct[ci]) + " net " + std::to_string(ni));
        }
      }
    }
  }

  {
    auto out = open_csv(dir, "shutdown.csv", kShutdownHeader);
    const auto& sh = spec.shutdown;
    if (sh.enabled) {
      for (std::size_t pi = 0; pi < sh.p_crash.size(); ++pi) {
        for (std::size_t fi = 0; fi < sh.f.size(); ++fi) {
          const double p = sh.p_crash[pi];
          const std::uint32_t f = sh.f[fi];
          const std::uint32_t n_basic = 3 * f + 1;
          const std::uint32_t n_over = 3 * f + 3;
          SplitMix rng(derive_seed(spec.seed ^ kShutStream, pi, fi));
          std::uint64_t down_basic = 0;
          std::uint64_t down_over = 0;
          for (std::uint64_t d = 0; d < sh.draws; ++d) {
            std::uint32_t crashed = 0;
            for (std::uint32_t k = 0; k < n_over - f; ++k) crashed += rng.bernoulli(p) ? 1 : 0;
            if (crashed >= 2) ++down_over;
            std::uint32_t c2 = 0;
            for (std::uint32_t k = 0; k < 2 * f + 1; ++k) c2 += rng.bernoulli(p) ? 1 : 0;
            if (c2 >= 1) ++down_basic;
          }
          const double draws = static_cast<double>(std::max<std::uint64_t>(sh.draws, 1));
          out << fmt_double(p) << ',' << f << ',' << n_basic << ',' << fmt_double(sys_shutdown_basic(p, f), 10) << ','
              << fmt_double(static_cast<double>(down_basic) / draws, 10) << ',' << n_over << ','
              << fmt_double(sys_shutdown_overprovisioned(p, n_over, f), 10) << ','
              << fmt_double(static_cast<double>(down_over) / draws, 10) << ',' << sh.draws << '\n';
        }
      }
      say("shutdown done");
    }
  }

  {
    auto out = open_csv(dir, "window.csv", kWindowHeader);
    const auto& w = spec.window;
    if (w.enabled) {
      const std::uint64_t reps = w.reps ? w.reps : spec.reps;
      for (std::size_t ni = 0; ni < w.nodes.size(); ++ni) {
        for (std::size_t li = 0; li < w.nets.size(); ++li) {
          const std::uint32_t n = w.nodes[ni];
          const std::uint32_t correct = n - max_faulty(n, 0);
          KernelConfig kc{correct, w.nets[li], w.max_R};
          const auto T = completion_rounds(kc, reps, derive_seed(spec.seed ^ kWinStream, ni, li), spec.jobs);
          const auto est = estimate_R(T, w.max_R);
          out << n << ',' << correct << ',';
          net_columns(out, w.nets[li]);
          out << ',' << reps << ',' << est.R << ',' << (est.found ? 1 : 0) << '\n';
          say("window n=" + std::to_string(n) + " R=" + std::to_string(est.R));
        }
      }
    }
  }

  {
    auto out = open_csv(dir, "latency.csv", kLatencyHeader);
    const auto& l = spec.latency;
    if (l.enabled) {
      const std::uint64_t reps = l.reps ? l.reps : spec.reps;
      for (std::size_t ni = 0; ni < l.nodes.size(); ++ni) {
        for (std::size_t pi = 0; pi < l.p_loss.size(); ++pi) {
          const std::uint32_t n = l.nodes[ni];
          NetConfig net;
          net.p_loss = l.p_loss[pi];
          KernelConfig kc{n - max_faulty(n, 0), net, 400};
          const auto seed = derive_seed(spec.seed ^ kLatStream, ni, pi);
          auto est = estimate_R(completion_rounds(kc, reps, seed, spec.jobs), kc.max_rounds);
          const Round R = std::max<Round>(est.R, 2);
          const auto row = run_latency(n, net.p_loss, R, l.backend, derive_seed(seed, 1));
          out << row.n << ',' << fmt_double(row.p_loss) << ',' << row.R << ',' << fmt_double(row.d_max_us) << ','
              << fmt_double(row.total_ms) << '\n';
          say("latency n=" + std::to_string(n) + " R=" + std::to_string(R));
        }
      }
    }
  }

  {
    auto out = open_csv(dir, "bandwidth.csv", kBandwidthHeader);
    const auto& b = spec.bandwidth;
    if (b.enabled) {
      for (std::size_t ni = 0; ni < b.nodes.size(); ++ni) {
        for (std::size_t pi = 0; pi < b.p_loss.size(); ++pi) {
          for (std::size_t bi = 0; bi < b.payload_bits.size(); ++bi) {
            const auto seed = derive_seed(derive_seed(spec.seed ^ kBwStream, ni, pi), bi);
            const auto row = run_bandwidth(b.nodes[ni], b.p_loss[pi], b.R, b.payload_bits[bi], seed);
            out << row.n << ',' << fmt_double(row.p_loss) << ',' << row.payload_bits << ',' << row.R << ','
                << row.peak_emission_bits << ',' << row.peak_reception_bits << '\n';
            say("bandwidth n=" + std::to_string(row.n) + " bits=" + std::to_string(row.payload_bits));
          }
        }
      }
    }
  }
}

}  // namespace rtbyz
