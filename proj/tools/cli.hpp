// Copyright 2026 The gmlight Authors
// SPDX-License-Identifier: Apache-2.0

// The gmlight command line. `run` is the whole program minus process exit so
// tests can drive it in-process.
//
// Exit codes: 0 success, 1 usage error, 2 data or format error,
// 3 solver did not converge.

#pragma once

#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gmlight/gmlight.hpp"

namespace gmlight::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kNotConverged = 3,
};

// Malformed flag value that CLI11 cannot check on its own.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<double> parse_list(const std::string& text,
                                      const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || !std::isfinite(x)) {
      throw UsageError(std::string(flag) + ": '" + text +
                       "' is not a comma-separated list of numbers");
    }
    out.push_back(x);
  }
  if (out.empty()) throw UsageError(std::string(flag) + " is empty");
  return out;
}

inline Vec3 parse_vec3(const std::string& text, const char* flag) {
  const auto xs = parse_list(text, flag);
  if (xs.size() != 3) {
    throw UsageError(std::string(flag) + " needs three components x,y,z");
  }
  return {xs[0], xs[1], xs[2]};
}

inline std::string read_text(const std::string& path) {
  const Bytes b = read_file(path);
  return std::string(b.begin(), b.end());
}

inline void write_text(const std::string& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                             text.size()));
}

inline void emit(const std::string& path, const std::string& text,
                 std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    write_text(path, text);
  }
}

inline AnchorSet load_anchors(const std::string& path, std::size_t n) {
  if (!path.empty()) return anchors_from_json(read_text(path));
  return generate_anchors(n);
}

inline ScalarRaster load_depth(const std::string& path) {
  return read_depth_pfm(read_file(path));
}

// `map.pfm`, 2 -> `map.level2.pfm`.
inline std::string level_path(const std::string& path, std::size_t level) {
  std::filesystem::path p(path);
  const auto ext = p.extension().string();
  p.replace_extension();
  return p.string() + ".level" + std::to_string(level) + ext;
}

// Index of the pixel whose center direction is closest to `dir`.
inline std::size_t nearest_pixel(const Vec3& dir, std::size_t height,
                                 std::size_t width) {
  const double len = norm(dir);
  if (!(len > 0.0)) throw UsageError("direction must be nonzero");
  const Vec3 d = (1.0 / len) * dir;
  std::size_t best = 0;
  double best_cos = -2.0;
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const double cs = dot(d, pixel_direction(r, c, height, width));
      if (cs > best_cos) {
        best_cos = cs;
        best = r * width + c;
      }
    }
  }
  return best;
}

}  // namespace detail

struct FixtureSpec {
  std::string kind;
  std::size_t width = 256;
  std::size_t height = 128;
  std::string dir = "0,0,1";
  std::string dir2 = "1,0,0";
  double value = 10.0;
  std::optional<double> value2;
  double ambient = 0.0;
};

// Deterministic synthetic panoramas: delta, two-lights, uniform, gradient.
inline Panorama make_fixture(const FixtureSpec& f) {
  const Rgb base{f.ambient, f.ambient, f.ambient};
  Panorama p(f.width, f.height, base);
  const auto light = [&](const std::string& dir, double v) {
    const std::size_t i =
        detail::nearest_pixel(detail::parse_vec3(dir, "--dir"), f.height, f.width);
    p.set(i / f.width, i % f.width, {v, v, v});
  };
  if (f.kind == "delta") {
    light(f.dir, f.value);
  } else if (f.kind == "two-lights") {
    light(f.dir, f.value);
    light(f.dir2, f.value2.value_or(f.value));
  } else if (f.kind == "uniform") {
    p = Panorama(f.width, f.height, Rgb{f.value, f.value, f.value});
  } else if (f.kind == "gradient") {
    for (std::size_t r = 0; r < f.height; ++r) {
      for (std::size_t c = 0; c < f.width; ++c) {
        const double u = (static_cast<double>(c) + 0.5) / static_cast<double>(f.width);
        const double v = (static_cast<double>(r) + 0.5) / static_cast<double>(f.height);
        p.set(r, c, {f.ambient + f.value * u, f.ambient + f.value * v,
                     f.ambient + f.value * 0.5});
      }
    }
  } else {
    throw UsageError("unknown fixture kind '" + f.kind + "'");
  }
  return p;
}

// Constant depth `near`, or linear in the row from `near` at the top row to
// `far` at the bottom one.
inline ScalarRaster make_depth_fixture(std::size_t width, std::size_t height,
                                       double near, std::optional<double> far) {
  if (!(near > 0.0) || (far && !(*far > 0.0))) {
    throw UsageError("fixture depths must be positive");
  }
  ScalarRaster d{width, height, std::vector<double>(width * height, near)};
  if (far && height > 1) {
    for (std::size_t r = 0; r < height; ++r) {
      const double t = static_cast<double>(r) / static_cast<double>(height - 1);
      const double z = near + (*far - near) * t;
      for (std::size_t c = 0; c < width; ++c) d.values[r * width + c] = z;
    }
  }
  return d;
}

inline int run(std::span<const std::string> args, std::ostream& out,
               std::ostream& err) {
  CLI::App app("Anchor-based HDR illumination and geometric optimal transport",
               "gmlight");
  app.set_version_flag("--version", std::string("gmlight ") + kVersion);
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress warnings");

  // anchors
  std::size_t anchor_n = 128;
  std::string anchors_out;
  auto* anchors_cmd = app.add_subcommand("anchors", "Write a Fibonacci anchor set");
  anchors_cmd->add_option("--n", anchor_n, "Anchor count")
      ->required()->check(CLI::PositiveNumber);
  anchors_cmd->add_option("--out", anchors_out, "Output JSON (default stdout)");

  // decompose
  std::string dec_pano, dec_depth, dec_anchors, dec_out;
  std::size_t dec_n = 128;
  double dec_fraction = kDefaultLightFraction;
  bool dec_solid = false;
  auto* decompose_cmd =
      app.add_subcommand("decompose", "Panorama to illumination parameters");
  decompose_cmd->add_option("--pano", dec_pano, ".pfm or .hdr panorama")->required();
  decompose_cmd->add_option("--depth", dec_depth, "Depth PFM");
  decompose_cmd->add_option("--n", dec_n, "Anchor count")->check(CLI::PositiveNumber);
  decompose_cmd->add_option("--anchors", dec_anchors, "Anchor JSON (overrides --n)");
  decompose_cmd->add_option("--fraction", dec_fraction, "Light pixel fraction in (0, 1)");
  decompose_cmd->add_flag("--solid-angle", dec_solid, "Weight pixels by solid angle");
  decompose_cmd->add_option("--out", dec_out, "Output JSON (default stdout)");

  // project / reproject share the map options.
  std::string proj_params, proj_anchors, proj_out, proj_schedule, proj_offset;
  std::string proj_params_out, proj_anchors_out;
  std::size_t proj_w = 256, proj_h = 128;
  double proj_s = 0.0025;
  bool proj_inverse_square = false;
  auto* project_cmd = app.add_subcommand("project", "Render a Gaussian map");
  auto* reproject_cmd =
      app.add_subcommand("reproject", "Render the map seen from a displaced point");
  for (auto* cmd : {project_cmd, reproject_cmd}) {
    cmd->add_option("--params", proj_params, "Params JSON")->required();
    cmd->add_option("--anchors", proj_anchors, "Anchor JSON (default: lattice of n)");
    cmd->add_option("--width", proj_w, "Map width")->check(CLI::PositiveNumber);
    cmd->add_option("--height", proj_h, "Map height")->check(CLI::PositiveNumber);
    cmd->add_option("--s", proj_s, "Angular size")->check(CLI::PositiveNumber);
    cmd->add_option("--out", proj_out, "Output PFM")->required();
  }
  project_cmd->add_option("--schedule", proj_schedule,
                          "Comma-separated s values, coarse to fine");
  reproject_cmd->add_option("--offset", proj_offset, "x,y,z")->required();
  reproject_cmd->add_flag("--inverse-square", proj_inverse_square,
                          "Inverse-square falloff instead of linear");
  reproject_cmd->add_option("--params-out", proj_params_out, "Reprojected params JSON");
  reproject_cmd->add_option("--anchors-out", proj_anchors_out, "Displaced anchors JSON");

  // gml
  std::string gml_a, gml_b, gml_anchors, gml_shared;
  bool gml_unbalanced = false, gml_spherical = false;
  SinkhornConfig gml_cfg;
  auto* gml_cmd = app.add_subcommand("gml", "Entropic GML between two params files");
  gml_cmd->add_option("--a", gml_a, "Params JSON (U side)")->required();
  gml_cmd->add_option("--b", gml_b, "Params JSON (V side)")->required();
  gml_cmd->add_option("--anchors", gml_anchors, "Anchor JSON (default: lattice of n)");
  gml_cmd->add_flag("--unbalanced", gml_unbalanced, "KL-relaxed marginals");
  gml_cmd->add_option("--epsilon", gml_cfg.epsilon, "Entropic coefficient")
      ->check(CLI::PositiveNumber);
  gml_cmd->add_option("--rho", gml_cfg.kl_weight, "KL weight")
      ->check(CLI::PositiveNumber);
  gml_cmd->add_option("--max-iterations", gml_cfg.max_iterations)
      ->check(CLI::PositiveNumber);
  gml_cmd->add_option("--tolerance", gml_cfg.tolerance)->check(CLI::PositiveNumber);
  gml_cmd->add_flag("--spherical-cost", gml_spherical, "Great-circle cost");
  gml_cmd->add_option("--shared-depth", gml_shared, "Use one side's depth for both")
      ->check(CLI::IsMember({"a", "b"}));

  // gmd
  std::string gmd_a, gmd_b, gmd_anchors, gmd_depth_a, gmd_depth_b;
  std::size_t gmd_n = 128;
  SinkhornConfig gmd_cfg;
  auto* gmd_cmd = app.add_subcommand("gmd", "Geometric Mover's Distance of two maps");
  gmd_cmd->add_option("--a", gmd_a, "Panorama")->required();
  gmd_cmd->add_option("--b", gmd_b, "Panorama")->required();
  gmd_cmd->add_option("--anchors", gmd_anchors, "Anchor JSON (overrides --n)");
  gmd_cmd->add_option("--n", gmd_n, "Anchor count")->check(CLI::PositiveNumber);
  gmd_cmd->add_option("--depth-a", gmd_depth_a, "Depth PFM for --a");
  gmd_cmd->add_option("--depth-b", gmd_depth_b, "Depth PFM for --b");
  gmd_cmd->add_option("--epsilon", gmd_cfg.epsilon)->check(CLI::PositiveNumber);

  // metrics
  std::string met_pred, met_gt, met_anchors, met_depth_pred, met_depth_gt, met_out;
  auto* metrics_cmd = app.add_subcommand("metrics", "Compare two panoramas");
  metrics_cmd->add_option("--pred", met_pred, "Predicted panorama")->required();
  metrics_cmd->add_option("--gt", met_gt, "Ground-truth panorama")->required();
  metrics_cmd->add_option("--anchors", met_anchors, "Anchor JSON; enables gmd");
  metrics_cmd->add_option("--depth-pred", met_depth_pred, "Depth PFM for --pred");
  metrics_cmd->add_option("--depth-gt", met_depth_gt, "Depth PFM for --gt");
  metrics_cmd->add_option("--out", met_out, "Output JSON (default stdout)");

  // fixture
  FixtureSpec fx;
  std::string fx_out, fx_depth_out;
  double fx_depth = 1.0;
  std::optional<double> fx_depth_far;
  auto* fixture_cmd = app.add_subcommand("fixture", "Write a synthetic panorama");
  fixture_cmd->add_option("kind", fx.kind, "delta | two-lights | uniform | gradient")
      ->required()->check(CLI::IsMember({"delta", "two-lights", "uniform", "gradient"}));
  fixture_cmd->add_option("--width", fx.width)->check(CLI::PositiveNumber);
  fixture_cmd->add_option("--height", fx.height)->check(CLI::PositiveNumber);
  fixture_cmd->add_option("--dir", fx.dir, "Light direction x,y,z");
  fixture_cmd->add_option("--dir2", fx.dir2, "Second light direction x,y,z");
  fixture_cmd->add_option("--value", fx.value, "Light or fill value")
      ->check(CLI::NonNegativeNumber);
  fixture_cmd->add_option("--value2", fx.value2, "Second light value")
      ->check(CLI::NonNegativeNumber);
  fixture_cmd->add_option("--ambient", fx.ambient, "Background value")
      ->check(CLI::NonNegativeNumber);
  fixture_cmd->add_option("--out", fx_out, "Output PFM")->required();
  fixture_cmd->add_option("--depth-out", fx_depth_out, "Also write a depth PFM");
  fixture_cmd->add_option("--depth", fx_depth, "Depth (top row when --depth-far is set)");
  fixture_cmd->add_option("--depth-far", fx_depth_far, "Depth at the bottom row");

  std::vector<const char*> argv{"gmlight"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  const auto warn = [&](const std::string& msg) {
    if (!quiet) err << "warning: " << msg << "\n";
  };

  try {
    if (*anchors_cmd) {
      detail::emit(anchors_out, anchors_to_json(generate_anchors(anchor_n)), out);
    } else if (*decompose_cmd) {
      if (!(dec_fraction > 0.0 && dec_fraction < 1.0)) {
        throw UsageError("--fraction must lie strictly between 0 and 1");
      }
      const Panorama pano = load_panorama(dec_pano);
      std::optional<ScalarRaster> depth;
      if (!dec_depth.empty()) depth = detail::load_depth(dec_depth);
      const AnchorSet anchors = detail::load_anchors(dec_anchors, dec_n);
      const auto d = decompose(pano, depth ? &*depth : nullptr, anchors,
                               {dec_fraction, dec_solid});
      if (d.uniform_fallback) {
        warn("light pixels carry no luminance; distribution set to uniform");
      }
      detail::emit(dec_out, params_to_json(d.params), out);
    } else if (*project_cmd || *reproject_cmd) {
      const auto params = params_from_json(detail::read_text(proj_params));
      const AnchorSet anchors = detail::load_anchors(proj_anchors, params.n);
      ProjectionConfig cfg;
      cfg.width = proj_w;
      cfg.height = proj_h;
      cfg.angular_size = proj_s;
      cfg.s_schedule = {proj_s};
      if (*project_cmd) {
        if (!proj_schedule.empty()) {
          cfg.s_schedule = detail::parse_list(proj_schedule, "--schedule");
          if (project_cmd->count("--s") == 0) {
            cfg.angular_size = cfg.s_schedule.back();
          }
          const auto maps = progressive_maps(params, anchors, cfg);
          for (std::size_t k = 0; k < maps.size(); ++k) {
            save_panorama(detail::level_path(proj_out, k), maps[k]);
          }
          save_panorama(proj_out, maps.back());
        } else {
          save_panorama(proj_out, gaussian_map(params, anchors, cfg));
        }
      } else {
        const Vec3 off = detail::parse_vec3(proj_offset, "--offset");
        const auto falloff =
            proj_inverse_square ? Falloff::kInverseSquare : Falloff::kLinear;
        const auto moved = reproject(params, anchors, off, falloff);
        save_panorama(proj_out, gaussian_map(moved.params, moved.anchors, cfg));
        if (!proj_params_out.empty()) {
          detail::write_text(proj_params_out, params_to_json(moved.params));
        }
        if (!proj_anchors_out.empty()) {
          detail::write_text(proj_anchors_out, anchors_to_json(moved.anchors));
        }
      }
    } else if (*gml_cmd) {
      const auto pa = params_from_json(detail::read_text(gml_a));
      const auto pb = params_from_json(detail::read_text(gml_b));
      if (pa.n != pb.n) {
        throw InvalidArgument("params files have different anchor counts");
      }
      const AnchorSet anchors = detail::load_anchors(gml_anchors, pa.n);
      if (anchors.size() != pa.n) {
        throw InvalidArgument("anchor file does not match params n");
      }
      const auto& du = gml_shared == "b" ? pb.depth : pa.depth;
      const auto& dv = gml_shared == "a" ? pa.depth : pb.depth;
      const CostMatrix c =
          gml_spherical ? spherical_cost(anchors) : geometric_cost(anchors, du, dv);
      double value = 0.0;
      bool converged = false;
      std::size_t iterations = 0;
      if (gml_unbalanced) {
        const auto r = sinkhorn_unbalanced_gml(pa.distribution, pb.distribution, c,
                                               gml_cfg);
        value = r.value;
        converged = r.converged();
        iterations = r.diagnostics.iterations;
      } else {
        const auto r = sinkhorn_gml(pa.distribution, pb.distribution, c, gml_cfg);
        value = r.value;
        converged = r.converged();
        iterations = r.diagnostics.iterations;
      }
      out << "{\"value\": " << gmlight::detail::format_number(value, 17)
          << ", \"converged\": " << (converged ? "true" : "false")
          << ", \"iterations\": " << iterations << "}\n";
      if (!converged) {
        err << "error: solver did not converge within " << gml_cfg.max_iterations
            << " iterations\n";
        return kNotConverged;
      }
    } else if (*gmd_cmd) {
      const Panorama a = load_panorama(gmd_a);
      const Panorama b = load_panorama(gmd_b);
      std::optional<ScalarRaster> da, db;
      if (!gmd_depth_a.empty()) da = detail::load_depth(gmd_depth_a);
      if (!gmd_depth_b.empty()) db = detail::load_depth(gmd_depth_b);
      if (da.has_value() != db.has_value()) {
        warn("only one depth map given; using unit depths");
      }
      const AnchorSet anchors = detail::load_anchors(gmd_anchors, gmd_n);
      const double v = gmd(a, b, anchors, da ? &*da : nullptr,
                           db ? &*db : nullptr, gmd_cfg);
      out << "{\"gmd\": " << gmlight::detail::format_number(v, 6) << "}\n";
    } else if (*metrics_cmd) {
      const Panorama pred = load_panorama(met_pred);
      const Panorama gt = load_panorama(met_gt);
      std::optional<ScalarRaster> dp, dg;
      if (!met_depth_pred.empty()) dp = detail::load_depth(met_depth_pred);
      if (!met_depth_gt.empty()) dg = detail::load_depth(met_depth_gt);
      std::optional<AnchorSet> anchors;
      if (!met_anchors.empty()) {
        anchors = anchors_from_json(detail::read_text(met_anchors));
      }
      ReportInputs in;
      in.anchors = anchors ? &*anchors : nullptr;
      in.depth_pred = dp ? &*dp : nullptr;
      in.depth_gt = dg ? &*dg : nullptr;
      detail::emit(met_out, report_to_json(report(pred, gt, in)), out);
    } else if (*fixture_cmd) {
      const Panorama p = make_fixture(fx);
      std::optional<ScalarRaster> depth;
      if (!fx_depth_out.empty()) {
        depth = make_depth_fixture(fx.width, fx.height, fx_depth, fx_depth_far);
      }
      save_panorama(fx_out, p);
      if (depth) write_file(fx_depth_out, write_depth_pfm(*depth));
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NotConverged& e) {
    err << "error: " << e.what() << "\n";
    return kNotConverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kOk;
}

}  // namespace gmlight::cli
