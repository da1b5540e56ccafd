// Copyright 2026 The gmlight Authors
// SPDX-License-Identifier: Apache-2.0

// JSON forms of anchor sets, illumination parameters and metric reports.
//
//   anchors: {"n": 3, "directions": [[x, y, z], ...]}
//   params:  {"n": 3, "distribution": [...], "intensity": [r, g, b],
//             "ambient": [r, g, b], "depth": [...]}
//
// Output is written by hand so the number format is fixed: 17 significant
// digits for data that is read back, 6 for reports.

#pragma once

#include <cstdio>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gmlight/decompose.hpp"
#include "gmlight/errors.hpp"
#include "gmlight/metrics.hpp"
#include "gmlight/sphere_geom.hpp"

namespace gmlight {

namespace detail {

inline std::string format_number(double x, int digits) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

inline std::string format_array(std::span<const double> xs, int digits) {
  std::string s = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) s += ", ";
    s += format_number(xs[i], digits);
  }
  return s + "]";
}

inline nlohmann::json parse_json(std::string_view text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what(), e.byte);
  }
}

inline const nlohmann::json& member(const nlohmann::json& obj,
                                    const char* key) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw InvalidArgument(std::string("JSON is missing \"") + key + "\"");
  }
  return obj.at(key);
}

inline std::vector<double> number_array(const nlohmann::json& v,
                                        const char* key) {
  if (!v.is_array()) {
    throw InvalidArgument(std::string("\"") + key + "\" must be an array");
  }
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number()) {
      throw InvalidArgument(std::string("\"") + key +
                            "\" must contain only numbers");
    }
    out.push_back(x.get<double>());
  }
  return out;
}

inline std::size_t count_field(const nlohmann::json& obj) {
  const auto& n = member(obj, "n");
  if (!n.is_number_unsigned()) {
    throw InvalidArgument("\"n\" must be a nonnegative integer");
  }
  return n.get<std::size_t>();
}

inline Rgb rgb_field(const nlohmann::json& obj, const char* key) {
  const auto xs = number_array(member(obj, key), key);
  if (xs.size() != 3) {
    throw InvalidArgument(std::string("\"") + key + "\" must have 3 entries");
  }
  return {xs[0], xs[1], xs[2]};
}

}  // namespace detail

inline std::string anchors_to_json(const AnchorSet& anchors) {
  std::string s = "{\"n\": " + std::to_string(anchors.size()) +
                  ", \"directions\": [";
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    if (i > 0) s += ", ";
    const Vec3& d = anchors[i];
    const double xyz[3] = {d.x, d.y, d.z};
    s += detail::format_array(xyz, 17);
  }
  return s + "]}\n";
}

inline AnchorSet anchors_from_json(std::string_view text) {
  const auto doc = detail::parse_json(text);
  const std::size_t n = detail::count_field(doc);
  const auto& list = detail::member(doc, "directions");
  if (!list.is_array() || list.size() != n) {
    throw InvalidArgument("\"directions\" must list n = " + std::to_string(n) +
                          " vectors");
  }
  std::vector<Vec3> dirs;
  dirs.reserve(n);
  for (const auto& entry : list) {
    const auto xyz = detail::number_array(entry, "directions");
    if (xyz.size() != 3) {
      throw InvalidArgument("each direction must have 3 components");
    }
    dirs.push_back({xyz[0], xyz[1], xyz[2]});
  }
  return AnchorSet(std::move(dirs));
}

inline std::string params_to_json(const IlluminationParams& p) {
  std::string s = "{\"n\": " + std::to_string(p.n);
  s += ", \"distribution\": " + detail::format_array(p.distribution, 17);
  s += ", \"intensity\": " + detail::format_array(p.intensity, 17);
  s += ", \"ambient\": " + detail::format_array(p.ambient, 17);
  s += ", \"depth\": " + detail::format_array(p.depth, 17);
  return s + "}\n";
}

inline IlluminationParams params_from_json(std::string_view text) {
  const auto doc = detail::parse_json(text);
  IlluminationParams p;
  p.n = detail::count_field(doc);
  p.distribution = detail::number_array(detail::member(doc, "distribution"),
                                        "distribution");
  p.intensity = detail::rgb_field(doc, "intensity");
  p.ambient = detail::rgb_field(doc, "ambient");
  p.depth = detail::number_array(detail::member(doc, "depth"), "depth");
  p.validate();
  return p;
}

inline std::string report_to_json(const MetricReport& r) {
  std::string s = "{\"rmse\": " + detail::format_number(r.rmse, 6);
  s += ", \"si_rmse\": " + detail::format_number(r.si_rmse, 6);
  s += ", \"angular_error_degrees\": " +
       detail::format_number(r.angular_error_degrees, 6);
  s += ", \"cosine_distance\": " + detail::format_number(r.cosine_distance, 6);
  if (r.gmd) s += ", \"gmd\": " + detail::format_number(*r.gmd, 6);
  return s + "}\n";
}

}  // namespace gmlight
