#pragma once

#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rtbyz/core.hpp"
#include "rtbyz/netsim.hpp"

namespace rtbyz::detail {

using json = nlohmann::json;

inline void require_object(const json& j, std::string_view where) {
  if (!j.is_object()) throw ParamError(std::string(where) + ": expected an object");
}

inline void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  require_object(j, where);
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ParamError("unknown key '" + std::string(where) + "." + key + "'");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, std::string_view where) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ParamError("bad value for '" + std::string(where) + "." + key + "'");
  }
}

template <typename T>
std::vector<T> get_list(const json& j, const char* key, std::vector<T> fallback, std::string_view where) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_array()) throw ParamError("'" + std::string(where) + "." + key + "' must be a list");
  return get_or<std::vector<T>>(j, key, {}, where);
}

inline NetConfig parse_net(const json& j, std::string_view where) {
  check_keys(j, {"model", "p_loss", "alpha", "beta", "bursty", "start_bad"}, where);
  NetConfig net;
  net.model = parse_loss_model(get_or<std::string>(j, "model", "bernoulli", where));
  net.p_loss = get_or<double>(j, "p_loss", 0.0, where);
  net.alpha = get_or<double>(j, "alpha", 0.5, where);
  net.beta = get_or<double>(j, "beta", 0.0, where);
  net.bursty = get_or<bool>(j, "bursty", false, where);
  net.start_bad = get_or<bool>(j, "start_bad", false, where);
  net.validate();
  return net;
}

inline json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParamError(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace rtbyz::detail
