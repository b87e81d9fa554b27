#include "enermod/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <system_error>

#include "json.hpp"

namespace enermod {

namespace {

using nlohmann::json;

double require_number(const json& j, const char* key, double fallback,
                      bool required) {
  if (!j.contains(key)) {
    if (required) {
      throw ValidationError(std::string("missing field '") + key +
                            "' in topology document");
    }
    return fallback;
  }
  if (!j.at(key).is_number()) {
    throw ValidationError(std::string("field '") + key + "' must be a number");
  }
  return j.at(key).get<double>();
}

struct Table {
  std::vector<std::string> columns;           // node ids, header order
  std::vector<std::vector<double>> by_column; // per column, one entry per slice
  int rows = 0;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  cells.push_back(cur);
  return cells;
}

double parse_cell(const std::string& cell, int row, const char* what) {
  const char* b = cell.data();
  const char* e = b + cell.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (*(e - 1) == ' ' || *(e - 1) == '\t')) --e;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(b, e, value);
  if (ec != std::errc() || ptr != e || b == e) {
    throw ValidationError(std::string("non-numeric cell in ") + what +
                          " table, row " + std::to_string(row));
  }
  return value;
}

Table parse_table(const std::string& csv, const char* what) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) {
    throw ValidationError(std::string("empty ") + what + " table");
  }
  Table t;
  std::vector<std::string> header = split_csv_line(line);
  if (header.empty() || header[0] != "t") {
    throw ValidationError(std::string(what) +
                          " table header must start with 't'");
  }
  t.columns.assign(header.begin() + 1, header.end());
  t.by_column.assign(t.columns.size(), {});
  int row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ValidationError(std::string("row ") + std::to_string(row) + " of " +
                            what + " table has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(header.size()));
    }
    double tval = parse_cell(cells[0], row, what);
    if (tval != static_cast<double>(row)) {
      throw ValidationError(std::string(what) + " table: slice index " +
                            cells[0] + " at row " + std::to_string(row) +
                            " is not ascending from 1");
    }
    for (size_t c = 0; c < t.columns.size(); ++c) {
      t.by_column[c].push_back(parse_cell(cells[c + 1], row, what));
    }
  }
  if (row == 0) {
    throw ValidationError(std::string(what) + " table has no data rows");
  }
  t.rows = row;
  return t;
}

void apply_table(const Table& t, const std::vector<std::string>& ids,
                 std::vector<std::vector<double>>& series, const char* what) {
  std::unordered_map<std::string, size_t> pos;
  for (size_t i = 0; i < ids.size(); ++i) pos.emplace(ids[i], i);
  std::vector<char> seen(ids.size(), 0);
  for (size_t c = 0; c < t.columns.size(); ++c) {
    auto it = pos.find(t.columns[c]);
    if (it == pos.end()) {
      throw ValidationError(std::string("unknown node '") + t.columns[c] +
                            "' in " + what + " table header");
    }
    if (seen[it->second]) {
      throw ValidationError(std::string("duplicate column '") + t.columns[c] +
                            "' in " + what + " table");
    }
    seen[it->second] = 1;
    series[it->second] = t.by_column[c];
  }
}

}  // namespace

std::string format_double(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, ptr);
}

EnergyNetwork parse_network(const std::string& topology_json,
                            const std::string& demand_csv,
                            const std::string& supply_csv) {
  json doc;
  try {
    doc = json::parse(topology_json);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("topology document is not valid JSON: ") +
                          e.what());
  }
  if (!doc.is_object()) {
    throw ValidationError("topology document must be a JSON object");
  }

  TimeGrid grid;
  grid.slice_duration_minutes =
      require_number(doc, "slice_duration_minutes", 15.0, false);

  if (!doc.contains("nodes") || !doc.at("nodes").is_array()) {
    throw ValidationError("topology document needs a 'nodes' array");
  }
  std::vector<NodeSpec> nodes;
  std::vector<std::string> ids;
  for (const json& jn : doc.at("nodes")) {
    if (!jn.is_object() || !jn.contains("id") || !jn.at("id").is_string()) {
      throw ValidationError("every node needs a string 'id'");
    }
    NodeSpec nd;
    nd.id = jn.at("id").get<std::string>();
    nd.flex.f_max = require_number(jn, "flex_power_max", 0.0, false);
    nd.flex.soc_max = require_number(jn, "flex_capacity", 0.0, false);
    nd.flex.eta_u = require_number(jn, "eta_u", 1.0, false);
    nd.flex.eta_p = require_number(jn, "eta_p", 1.0, false);
    ids.push_back(nd.id);
    nodes.push_back(std::move(nd));
  }

  Table demand = parse_table(demand_csv, "demand");
  Table supply = parse_table(supply_csv, "supply");
  if (demand.rows != supply.rows) {
    throw ValidationError("series length mismatch: demand table has " +
                          std::to_string(demand.rows) +
                          " rows, supply table has " +
                          std::to_string(supply.rows));
  }
  grid.horizon = demand.rows;

  std::vector<std::vector<double>> demand_series(
      nodes.size(), std::vector<double>(static_cast<size_t>(grid.horizon), 0.0));
  std::vector<std::vector<double>> supply_series = demand_series;
  apply_table(demand, ids, demand_series, "demand");
  apply_table(supply, ids, supply_series, "supply");
  for (size_t i = 0; i < nodes.size(); ++i) {
    nodes[i].demand = std::move(demand_series[i]);
    nodes[i].supply = std::move(supply_series[i]);
  }

  std::unordered_map<std::string, int> index;
  for (size_t i = 0; i < ids.size(); ++i) {
    index.emplace(ids[i], static_cast<int>(i));
  }
  auto resolve = [&](const json& je, const char* key) {
    if (!je.contains(key) || !je.at(key).is_string()) {
      throw ValidationError(std::string("edge needs a string '") + key + "'");
    }
    const std::string id = je.at(key).get<std::string>();
    auto it = index.find(id);
    if (it == index.end()) {
      throw ValidationError("unknown node '" + id + "' referenced by an edge");
    }
    return it->second;
  };

  if (!doc.contains("edges") || !doc.at("edges").is_array()) {
    throw ValidationError("topology document needs an 'edges' array");
  }
  std::vector<EdgeSpec> edges;
  for (const json& je : doc.at("edges")) {
    EdgeSpec e;
    e.from = resolve(je, "from");
    e.to = resolve(je, "to");
    e.w_max = require_number(je, "w_max", kUnboundedFlow, false);
    e.eta_f = require_number(je, "eta_f", 1.0, false);
    bool bidirectional = true;
    if (je.contains("bidirectional")) {
      if (!je.at("bidirectional").is_boolean()) {
        throw ValidationError("'bidirectional' must be a boolean");
      }
      bidirectional = je.at("bidirectional").get<bool>();
    }
    edges.push_back(e);
    if (bidirectional) {
      edges.push_back(EdgeSpec{e.to, e.from, e.w_max, e.eta_f});
    }
  }

  return EnergyNetwork(grid, std::move(nodes), std::move(edges));
}

EnergyNetwork load_network(const std::filesystem::path& topology,
                           const std::filesystem::path& demand,
                           const std::filesystem::path& supply) {
  return parse_network(read_file(topology), read_file(demand),
                       read_file(supply));
}

std::string serialize_topology(const EnergyNetwork& net) {
  nlohmann::ordered_json doc;
  doc["slice_duration_minutes"] = net.time().slice_duration_minutes;
  doc["nodes"] = json::array();
  for (const NodeSpec& nd : net.nodes()) {
    nlohmann::ordered_json jn;
    jn["id"] = nd.id;
    jn["flex_power_max"] = nd.flex.f_max;
    jn["flex_capacity"] = nd.flex.soc_max;
    jn["eta_u"] = nd.flex.eta_u;
    jn["eta_p"] = nd.flex.eta_p;
    doc["nodes"].push_back(jn);
  }
  doc["edges"] = json::array();
  std::vector<char> written(net.edges().size(), 0);
  for (size_t k = 0; k < net.edges().size(); ++k) {
    if (written[k]) continue;
    const EdgeSpec& e = net.edges()[k];
    nlohmann::ordered_json je;
    je["from"] = net.node(e.from).id;
    je["to"] = net.node(e.to).id;
    if (!std::isinf(e.w_max)) je["w_max"] = e.w_max;
    je["eta_f"] = e.eta_f;
    auto rev = net.edge_index(e.to, e.from);
    const EdgeSpec& r = net.edges()[static_cast<size_t>(*rev)];
    if (!written[static_cast<size_t>(*rev)] && r.w_max == e.w_max &&
        r.eta_f == e.eta_f) {
      je["bidirectional"] = true;
      written[static_cast<size_t>(*rev)] = 1;
    } else {
      je["bidirectional"] = false;
    }
    written[k] = 1;
    doc["edges"].push_back(je);
  }
  return doc.dump(2) + "\n";
}

namespace {

std::string serialize_series(const EnergyNetwork& net, bool demand) {
  std::string out = "t";
  for (const NodeSpec& nd : net.nodes()) {
    out += ",";
    out += nd.id;
  }
  out += "\n";
  for (int t = 0; t < net.horizon(); ++t) {
    out += std::to_string(t + 1);
    for (const NodeSpec& nd : net.nodes()) {
      out += ",";
      out += format_double(demand ? nd.demand[static_cast<size_t>(t)]
                                  : nd.supply[static_cast<size_t>(t)]);
    }
    out += "\n";
  }
  return out;
}

}  // namespace

std::string serialize_demand_csv(const EnergyNetwork& net) {
  return serialize_series(net, true);
}

std::string serialize_supply_csv(const EnergyNetwork& net) {
  return serialize_series(net, false);
}

void write_network_files(const EnergyNetwork& net,
                         const std::filesystem::path& topology,
                         const std::filesystem::path& demand,
                         const std::filesystem::path& supply) {
  write_file(topology, serialize_topology(net));
  write_file(demand, serialize_demand_csv(net));
  write_file(supply, serialize_supply_csv(net));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("cannot open file '" + path.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path,
                const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ValidationError("cannot write file '" + path.string() + "'");
  }
  out << content;
  if (!out) {
    throw ValidationError("write failed for '" + path.string() + "'");
  }
}

std::string content_digest(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  static const char* hex = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = hex[h & 0xf];
    h >>= 4;
  }
  buf[16] = '\0';
  return std::string(buf, 16);
}

}  // namespace enermod
