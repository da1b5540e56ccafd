// Copyright 2026 The gmlight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gmlight/ot/cost.hpp"
#include "gmlight/ot/exact_emd.hpp"
#include "gmlight/ot/sinkhorn.hpp"
