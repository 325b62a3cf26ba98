#pragma once

#include <optional>
#include <string>

#include "gasdsr/region.hpp"

namespace gasdsr {

/// Deterministic plots on a fixed 800x600 canvas, axes in kg/s.
/// Two-coupling-node systems render region rectangles (plus an optional
/// second region and raster backdrop); larger systems render per-node
/// interval bars.
std::string render_region_svg(const DSRegion& region, const DSRegion* second = nullptr,
                              const RasterResult* raster = nullptr);

std::string render_raster_svg(const RasterResult& raster, const DSRegion* region = nullptr);

} // namespace gasdsr
