#pragma once

#include <filesystem>
#include <string>

#include "sigroute/netmodel.hpp"

namespace sigroute::testing {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(SIGROUTE_DATA_DIR) / name;
}

inline const Scenario& grid() {
  static const Scenario sc = load_scenario(data_path("example_grid.scn"));
  return sc;
}

inline const Scenario& mini() {
  static const Scenario sc = load_scenario(data_path("mini_corridor.scn"));
  return sc;
}

inline const Scenario& sioux() {
  static const Scenario sc = build_sioux_falls();
  return sc;
}

inline NodeIdx node(const Scenario& sc, const std::string& id) { return sc.network.find_node(id).value(); }

inline EdgeIdx edge(const Scenario& sc, const std::string& from, const std::string& to) {
  return sc.network.find_edge(node(sc, from), node(sc, to)).value();
}

}  // namespace sigroute::testing
