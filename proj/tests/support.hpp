#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "vg/scenario.hpp"

namespace support {

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline std::string scenario_path(const std::string& name) { return std::string(VG_SCENARIO_DIR) + "/" + name + ".vgs"; }

inline vg::Scenario shipped(const std::string& name) { return vg::load_scenario(read_file(scenario_path(name))); }

inline vg::Term T(const std::string& text) { return vg::parse_term(text); }

} // namespace support
