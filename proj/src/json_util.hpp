#pragma once

#include "afield/error.hpp"
#include "afield/trajectory.hpp"

#include <json.hpp>

namespace afield::jsonio {

inline Point to_point(const nlohmann::ordered_json& j) {
    if (!j.is_array() || j.empty()) throw SchemaError("expected a non-empty coordinate array");
    Point p(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) p[static_cast<Eigen::Index>(i)] = j.at(i).get<double>();
    if (!p.allFinite()) throw SchemaError("coordinates must be finite");
    return p;
}

inline nlohmann::ordered_json from_point(const Point& p) {
    auto a = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < p.size(); ++i) a.push_back(p[i]);
    return a;
}

} // namespace afield::jsonio
