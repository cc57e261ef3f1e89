#pragma once

#include <string>
#include <vector>

#include "anchorflow/types.hpp"

namespace af {

/// One labeled point batch for the scatter panel.
struct ScatterBatch {
  std::string label;
  std::vector<Vec> points;  // 2-dimensional only
  std::string color = "#444444";
  bool outlined = false;    // outlined markers (fill none) vs filled
};

/// Render a standalone scatter SVG: fixed 640x480 viewport, axes with tick
/// labels, one <g> of circle markers per batch, legend, no external
/// assets. Byte-stable for fixed input. Throws std::invalid_argument for
/// non-2d points.
std::string render_scatter_svg(const std::vector<ScatterBatch>& batches);
void render_scatter_svg(const std::vector<ScatterBatch>& batches, const std::string& path);

}  // namespace af
