#pragma once

#include <filesystem>
#include <string>

#include "enermod/network.hpp"

namespace enermod {

// Builds a validated network from the three input documents.
//
// Topology (JSON): {"slice_duration_minutes": number,
//   "nodes": [{"id", "flex_power_max", "flex_capacity", "eta_u", "eta_p"}],
//   "edges": [{"from", "to", "w_max", "eta_f", "bidirectional"}]}
// Flex fields default to 0/0/1/1; w_max defaults to unbounded, eta_f to 1,
// bidirectional to true (expanded into two directed edges).
//
// Demand/supply tables (CSV): header "t,<node-id>,...", one row per slice
// with t ascending from 1. A node without a column gets an all-zero series.
EnergyNetwork parse_network(const std::string& topology_json,
                            const std::string& demand_csv,
                            const std::string& supply_csv);

EnergyNetwork load_network(const std::filesystem::path& topology,
                           const std::filesystem::path& demand,
                           const std::filesystem::path& supply);

// Inverse of parse_network; numbers use shortest round-trip formatting, so
// parse(serialize(net)) reproduces the network exactly. Symmetric edge pairs
// are written once with "bidirectional": true.
std::string serialize_topology(const EnergyNetwork& net);
std::string serialize_demand_csv(const EnergyNetwork& net);
std::string serialize_supply_csv(const EnergyNetwork& net);

void write_network_files(const EnergyNetwork& net,
                         const std::filesystem::path& topology,
                         const std::filesystem::path& demand,
                         const std::filesystem::path& supply);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

// Shortest decimal form that parses back to the same double.
std::string format_double(double x);

// FNV-1a 64-bit content digest (hex); reproducibility aid, not cryptographic.
std::string content_digest(const std::string& bytes);

}  // namespace enermod
