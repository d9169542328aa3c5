#include <cmath>

#include "rtbyz/netsim.hpp"

namespace rtbyz {

LossModel parse_loss_model(std::string_view name) {
  if (name == "bernoulli") return LossModel::Bernoulli;
  if (name == "gilbert-elliot" || name == "gilbert-elliott") return LossModel::GilbertElliott;
  throw ParamError("unknown net.model '" + std::string(name) + "'");
}

std::string_view to_string(LossModel m) {
  return m == LossModel::Bernoulli ? "bernoulli" : "gilbert-elliot";
}

void NetConfig::validate() const {
  if (model == LossModel::Bernoulli) {
    if (!(p_loss >= 0.0 && p_loss <= 1.0)) throw ParamError("net.p_loss must lie in [0, 1]");
    return;
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ParamError("net.alpha must lie in (0, 1]");
  if (!(beta >= 0.0 && beta < 1.0)) throw ParamError("net.beta must lie in [0, 1)");
  if (bursty && !((1.0 - beta) > alpha)) throw ParamError("bursty GE link needs (1 - beta) > alpha");
}

double ge_stationary_loss(double alpha, double beta) {
  if (!(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0))
    throw ParamError("ge_stationary_loss needs 0 < alpha, beta < 1");
  return beta / (alpha + beta);
}

double burst_length_pmf(double alpha, int L) {
  if (L < 1) throw ParamError("burst length must be >= 1");
  return alpha * std::pow(1.0 - alpha, L - 1);
}

LinkModel::LinkModel(const NetConfig& cfg, std::uint64_t seed)
    : model_(cfg.model),
      p_loss_(cfg.p_loss),
      alpha_(cfg.alpha),
      beta_(cfg.beta),
      bad_(cfg.model == LossModel::GilbertElliott && cfg.start_bad),
      rng_(seed) {}

void LinkModel::advance_to(Round r) {
  if (model_ != LossModel::GilbertElliott) {
    at_ = r;
    return;
  }
  for (; at_ < r; ++at_) bad_ = bad_ ? !rng_.bernoulli(alpha_) : rng_.bernoulli(beta_);
}

bool LinkModel::transmit() {
  if (model_ == LossModel::GilbertElliott) return !bad_;
  if (p_loss_ <= 0.0) return true;
  return !rng_.bernoulli(p_loss_);
}

GeSample sample_ge(const NetConfig& cfg, Round rounds, std::uint64_t seed) {
  cfg.validate();
  if (cfg.model != LossModel::GilbertElliott) throw ParamError("sample_ge needs a GE link");
  LinkModel link(cfg, seed);
  GeSample out;
  std::uint64_t bad = 0;
  int run = 0;
  for (Round r = 1; r <= rounds; ++r) {
    link.advance_to(r);
    if (link.bad()) {
      ++bad;
      ++run;
    } else if (run > 0) {
      ++out.bursts[run];
      run = 0;
    }
  }
  out.bad_fraction = rounds > 0 ? static_cast<double>(bad) / static_cast<double>(rounds) : 0.0;
  return out;
}

}  // namespace rtbyz
