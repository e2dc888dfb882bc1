#include "dcop/instance_io.hpp"

#include <fstream>
#include <sstream>

#include "dcop/errors.hpp"

namespace dcop {
namespace {

using nlohmann::json;

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
  return obj.at(key);
}

long long require_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ParseError(where + ": expected an integer");
  return v.get<long long>();
}

}  // namespace

json to_json(const ProblemInstance& p) {
  json doc;
  doc["version"] = kInstanceFormatVersion;
  doc["num_agents"] = p.num_agents();
  doc["domains"] = std::vector<int>(p.domains().begin(), p.domains().end());
  json cons = json::array();
  for (const auto& t : p.constraints()) cons.push_back({{"i", t.i}, {"j", t.j}, {"costs", t.costs}});
  doc["constraints"] = std::move(cons);
  doc["meta"] = p.meta();
  return doc;
}

ProblemInstance instance_from_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("$: expected an object");
  const auto version = require_int(require(doc, "version", "$"), "$.version");
  if (version != kInstanceFormatVersion) throw ParseError("$.version: unsupported version " + std::to_string(version));
  const auto n = require_int(require(doc, "num_agents", "$"), "$.num_agents");
  const auto& doms = require(doc, "domains", "$");
  if (!doms.is_array() || static_cast<long long>(doms.size()) != n) {
    throw ParseError("$.domains: expected an array of num_agents entries");
  }
  std::vector<int> domains;
  for (std::size_t k = 0; k < doms.size(); ++k) {
    const auto where = "$.domains[" + std::to_string(k) + "]";
    const auto d = require_int(doms[k], where);
    if (d < 1) throw ParseError(where + ": domain size must be positive");
    domains.push_back(static_cast<int>(d));
  }
  json meta = doc.contains("meta") ? doc.at("meta") : json::object();
  ProblemInstance p(std::move(domains), std::move(meta));
  const auto& cons = require(doc, "constraints", "$");
  if (!cons.is_array()) throw ParseError("$.constraints: expected an array");
  for (std::size_t k = 0; k < cons.size(); ++k) {
    const auto where = "$.constraints[" + std::to_string(k) + "]";
    const auto i = require_int(require(cons[k], "i", where), where + ".i");
    const auto j = require_int(require(cons[k], "j", where), where + ".j");
    if (i < 0 || j >= n || !(i < j)) throw ParseError(where + ": need 0 <= i < j < num_agents");
    const auto& costs = require(cons[k], "costs", where);
    const auto expected = static_cast<std::size_t>(p.domain_size(static_cast<Var>(i))) *
                          static_cast<std::size_t>(p.domain_size(static_cast<Var>(j)));
    if (!costs.is_array() || costs.size() != expected) {
      throw ParseError(where + ".costs: expected " + std::to_string(expected) + " entries");
    }
    std::vector<Cost> table;
    table.reserve(expected);
    for (std::size_t e = 0; e < costs.size(); ++e) {
      const auto c = require_int(costs[e], where + ".costs[" + std::to_string(e) + "]");
      if (c < 0) throw ParseError(where + ".costs[" + std::to_string(e) + "]: negative cost");
      table.push_back(c);
    }
    if (p.find(static_cast<Var>(i), static_cast<Var>(j)) >= 0) throw ParseError(where + ": duplicate pair");
    p.add_constraint(static_cast<Var>(i), static_cast<Var>(j), std::move(table));
  }
  return p;
}

std::string serialize(const ProblemInstance& p) { return to_json(p).dump(); }

ProblemInstance parse_instance(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("byte ") + std::to_string(e.byte) + ": " + e.what());
  }
  return instance_from_json(doc);
}

void save_instance(const std::filesystem::path& path, const ProblemInstance& p) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << to_json(p).dump(1) << '\n';
}

ProblemInstance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_instance(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace dcop
