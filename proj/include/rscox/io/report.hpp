#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "rscox/core/error.hpp"
#include "rscox/core/params.hpp"
#include "rscox/rate.hpp"

namespace rscox::io {

using Json = nlohmann::ordered_json;

/// Doubles as JSON numbers; non-finite values as the strings "inf", "-inf", "nan".
inline Json number(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

inline double toDouble(const Json& j)
{
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw InputError("report: expected a number, got " + j.dump());
}

inline Json toJson(const ModelParams& p)
{
    return Json{{"theta1", number(p.theta1)},
                {"theta2", number(p.theta2)},
                {"alpha", number(p.alpha)},
                {"logRatio", number(p.logRatio)}};
}

inline ModelParams paramsFromJson(const Json& j)
{
    ModelParams p;
    p.theta1 = toDouble(j.at("theta1"));
    p.theta2 = toDouble(j.at("theta2"));
    p.alpha = toDouble(j.at("alpha"));
    p.logRatio = toDouble(j.at("logRatio"));
    p.validate();
    return p;
}

inline Json toJson(const Eigen::MatrixXd& m)
{
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(number(m(r, c)));
        rows.push_back(row);
    }
    return rows;
}

inline Json toJson(const CiPair& ci)
{
    return Json{{"lo", number(ci.lo)}, {"hi", number(ci.hi)}, {"level", ci.level}};
}

}  // namespace rscox::io
