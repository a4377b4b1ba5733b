#include "obsrec/pattern.hpp"

#include <algorithm>

#include "json.hpp"

namespace obsrec {

void SystemPattern::validate() const {
  if (n <= 0) throw ValidationError("state count n must be positive, got " + std::to_string(n));
  for (const auto& [j, i] : edges) {
    if (j < 1 || j > n || i < 1 || i > n)
      throw ValidationError("edge (" + std::to_string(j) + "," + std::to_string(i) +
                            ") out of range [1," + std::to_string(n) + "]");
  }
  for (const auto& [id, states] : sensors) {
    if (id.empty()) throw ValidationError("sensor with empty id");
    if (states.empty()) throw ValidationError("sensor '" + id + "' measures no state");
    for (int s : states)
      if (s < 1 || s > n)
        throw ValidationError("sensor '" + id + "' measures state " + std::to_string(s) +
                              " out of range [1," + std::to_string(n) + "]");
  }
}

Digraph build_digraph(const SystemPattern& pattern) {
  pattern.validate();
  Digraph g;
  g.n = pattern.n;
  g.out.assign(g.n, {});
  g.in.assign(g.n, {});
  for (const auto& [j, i] : pattern.edges) {
    g.out[j - 1].push_back(i - 1);
    g.in[i - 1].push_back(j - 1);
  }
  for (auto& v : g.out) std::sort(v.begin(), v.end());
  for (auto& v : g.in) std::sort(v.begin(), v.end());
  return g;
}

SystemPattern parse_system(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("system file is not valid JSON: ") + e.what());
  }
  SystemPattern p;
  try {
    p.n = doc.at("n").get<int>();
    for (const auto& e : doc.at("edges")) {
      if (!e.is_array() || e.size() != 2)
        throw ValidationError("each edge must be a [from, to] pair");
      int j = e[0].get<int>();
      int i = e[1].get<int>();
      if (!p.edges.insert({j, i}).second)
        throw ValidationError("duplicate edge (" + std::to_string(j) + "," +
                              std::to_string(i) + ")");
    }
    if (doc.contains("sensors")) {
      for (const auto& s : doc.at("sensors")) {
        std::string id = s.at("id").get<std::string>();
        if (p.sensors.count(id)) throw ValidationError("duplicate sensor id '" + id + "'");
        std::set<int>& states = p.sensors[id];
        for (const auto& st : s.at("states")) states.insert(st.get<int>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("system file schema error: ") + e.what());
  }
  p.validate();
  return p;
}

std::string serialize_system(const SystemPattern& pattern, int indent) {
  nlohmann::json doc;
  doc["n"] = pattern.n;
  doc["edges"] = nlohmann::json::array();
  for (const auto& [j, i] : pattern.edges) doc["edges"].push_back({j, i});
  doc["sensors"] = nlohmann::json::array();
  for (const auto& [id, states] : pattern.sensors) {
    nlohmann::json s;
    s["id"] = id;
    s["states"] = states;
    doc["sensors"].push_back(s);
  }
  return doc.dump(indent);
}

}  // namespace obsrec
