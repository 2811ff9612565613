#pragma once

// JSON encoding of finite metric spaces:
//   {"labels": [...], "dist": [["p/q", ...], ...]}
// Entries may be integers or "p/q" strings.

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "bicomb/metric_core.hpp"

namespace bicomb {

using json = nlohmann::json;

inline Scalar scalar_from_json(const json& v)
{
    if (v.is_number_integer())
        return Scalar(v.get<long long>());
    if (v.is_string())
        return parse_scalar(v.get<std::string>());
    throw std::invalid_argument("distance entries must be integers or \"p/q\" strings");
}

inline json scalar_to_json(const Scalar& v) { return to_string(v); }

inline json form_to_json(std::span<const Scalar> f)
{
    json out = json::array();
    for (const auto& v : f)
        out.push_back(scalar_to_json(v));
    return out;
}

/// Raw matrix and labels as found in the document, before validation.
struct SpaceDocument {
    std::vector<std::string> labels;
    std::vector<std::vector<Scalar>> dist;
};

inline SpaceDocument space_document_from_json(const json& j)
{
    if (!j.is_object() || !j.contains("dist"))
        throw std::invalid_argument("space document needs a \"dist\" matrix");
    SpaceDocument doc;
    const auto& rows = j.at("dist");
    if (!rows.is_array())
        throw std::invalid_argument("\"dist\" must be an array of rows");
    for (const auto& r : rows) {
        if (!r.is_array())
            throw std::invalid_argument("\"dist\" rows must be arrays");
        std::vector<Scalar> row;
        for (const auto& v : r)
            row.push_back(scalar_from_json(v));
        doc.dist.push_back(std::move(row));
    }
    if (j.contains("labels")) {
        for (const auto& l : j.at("labels")) {
            if (l.is_string())
                doc.labels.push_back(l.get<std::string>());
            else
                doc.labels.push_back(l.dump());
        }
    }
    return doc;
}

inline json space_to_json(const FiniteMetricSpace& X)
{
    json out;
    out["labels"] = X.labels();
    json rows = json::array();
    for (std::size_t i = 0; i < X.size(); ++i)
        rows.push_back(form_to_json(X.row(i)));
    out["dist"] = std::move(rows);
    return out;
}

/// Parses and validates; throws std::invalid_argument when the matrix is not
/// a metric and json::parse_error on malformed text.
inline FiniteMetricSpace space_from_json(const json& j)
{
    auto doc = space_document_from_json(j);
    return make_metric(doc.dist, std::move(doc.labels));
}

inline std::string read_text_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace bicomb
