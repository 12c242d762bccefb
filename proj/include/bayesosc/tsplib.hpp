#pragma once

// Reader for the plain-text TSPLIB instance format, restricted to the
// two-dimensional Euclidean subset: NAME, TYPE: TSP, DIMENSION,
// EDGE_WEIGHT_TYPE: EUC_2D, NODE_COORD_SECTION, EOF. Node ids are 1-based in
// the file; cities come out 0-based in file order.

#include <cctype>
#include <cmath>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bayesosc/csv.hpp"
#include "bayesosc/elastic_net.hpp"
#include "bayesosc/errors.hpp"

namespace bayesosc::io {

struct TsplibInstance {
    std::string name;
    int dimension = 0;
    std::vector<net::City> cities;
};

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return std::string(s.substr(begin, end - begin));
}

// Splits "KEY : value" / "KEY: value" into (key, value); returns false for
// lines without a colon (section markers, coordinate rows).
inline bool split_keyword(const std::string& line, std::string& key, std::string& value) {
    const std::size_t colon = line.find(':');
    if (colon == std::string::npos) return false;
    key = trim(std::string_view(line).substr(0, colon));
    value = trim(std::string_view(line).substr(colon + 1));
    return true;
}

}  // namespace detail

inline TsplibInstance parse_tsplib(const std::string& text) {
    TsplibInstance instance;
    bool saw_type = false;
    bool saw_dimension = false;
    bool saw_weight_type = false;
    bool saw_coord_section = false;
    bool saw_eof = false;

    std::istringstream stream(text);
    std::string raw;
    int line_number = 0;
    auto fail = [&](const std::string& message) -> void {
        throw ValidationError(kModuleName,
                              "TSPLIB line " + std::to_string(line_number) + ": " + message);
    };

    while (std::getline(stream, raw)) {
        ++line_number;
        const std::string line = detail::trim(raw);
        if (line.empty()) continue;
        if (saw_eof) fail("content after EOF");

        if (line == "EOF") {
            saw_eof = true;
            continue;
        }
        if (line == "NODE_COORD_SECTION") {
            if (!saw_dimension) fail("NODE_COORD_SECTION before DIMENSION");
            saw_coord_section = true;
            continue;
        }

        std::string key, value;
        if (!saw_coord_section && detail::split_keyword(line, key, value)) {
            if (key == "NAME") {
                instance.name = value;
            } else if (key == "TYPE") {
                if (value != "TSP") fail("unsupported TYPE '" + value + "'; only TSP");
                saw_type = true;
            } else if (key == "COMMENT") {
                // informational only
            } else if (key == "DIMENSION") {
                try {
                    instance.dimension = std::stoi(value);
                } catch (const std::exception&) {
                    fail("DIMENSION '" + value + "' is not an integer");
                }
                if (instance.dimension < 1) fail("DIMENSION must be >= 1");
                saw_dimension = true;
            } else if (key == "EDGE_WEIGHT_TYPE") {
                if (value != "EUC_2D")
                    fail("unsupported EDGE_WEIGHT_TYPE '" + value +
                         "'; supported: EUC_2D");
                saw_weight_type = true;
            } else {
                fail("unknown keyword '" + key + "'");
            }
            continue;
        }

        if (!saw_coord_section) fail("coordinate data before NODE_COORD_SECTION");
        std::istringstream fields(line);
        long long node_id = 0;
        double x = 0.0, y = 0.0;
        if (!(fields >> node_id >> x >> y))
            fail("coordinate row must be '<id> <x> <y>'");
        std::string extra;
        if (fields >> extra) fail("trailing tokens on coordinate row");
        if (!std::isfinite(x) || !std::isfinite(y)) fail("coordinates must be finite");
        if (node_id != static_cast<long long>(instance.cities.size()) + 1)
            fail("node ids must run 1..DIMENSION in order; got " +
                 std::to_string(node_id));
        instance.cities.push_back(net::City{Eigen::Vector2d(x, y)});
    }

    std::vector<std::string> problems;
    if (!saw_type) problems.push_back("missing TYPE: TSP");
    if (!saw_dimension) problems.push_back("missing DIMENSION");
    if (!saw_weight_type) problems.push_back("missing EDGE_WEIGHT_TYPE: EUC_2D");
    if (!saw_coord_section) problems.push_back("missing NODE_COORD_SECTION");
    if (!saw_eof) problems.push_back("missing EOF terminator");
    if (saw_dimension && saw_coord_section &&
        static_cast<int>(instance.cities.size()) != instance.dimension)
        problems.push_back("DIMENSION " + std::to_string(instance.dimension) +
                           " does not match " + std::to_string(instance.cities.size()) +
                           " coordinate rows");
    if (!problems.empty()) throw ConfigError(kModuleName, std::move(problems));
    return instance;
}

}  // namespace bayesosc::io
