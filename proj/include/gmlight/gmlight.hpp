// Copyright 2026 The gmlight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gmlight/decompose.hpp"
#include "gmlight/errors.hpp"
#include "gmlight/gaussian_projection.hpp"
#include "gmlight/hdr_io.hpp"
#include "gmlight/json_io.hpp"
#include "gmlight/metrics.hpp"
#include "gmlight/ot_core.hpp"
#include "gmlight/panorama.hpp"
#include "gmlight/sphere_geom.hpp"

namespace gmlight {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace gmlight
