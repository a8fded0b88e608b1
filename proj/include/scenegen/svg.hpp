#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

#include "scenegen/error.hpp"
#include "scenegen/floorplan.hpp"
#include "scenegen/raster.hpp"
#include "scenegen/scene.hpp"

namespace scenegen {

struct SvgOptions {
  double pixels_per_meter = 80.0;
  double margin = 0.5;  // meters
  bool walkable = false;
  double raster_cell = 0.05;
  std::string metadata;  // emitted verbatim (escaped) in a <metadata> element
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

inline const char* class_color(int cls) {
  static constexpr std::array<const char*, 10> palette = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                                          "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};
  return palette[static_cast<std::size_t>(cls) % palette.size()];
}

}  // namespace detail

/// Top-down orthographic drawing in plan coordinates (y up). Rooms are
/// filled polygons, objects their footprint rectangles colored by class,
/// articulation extensions dashed outlines. With `walkable` the uncovered
/// fraction of each in-room raster cell is shaded.
///
/// `catalog` may be null, in which case no extensions are drawn.
inline std::string render_svg(const SceneLayout& scene, const FloorPlan& plan, const AssetCatalog* catalog,
                              const SvgOptions& opt = {}) {
  using detail::fmt_num;
  if (plan.rooms.empty()) throw InvalidArgument("floor plan has no rooms");
  for (const auto& s : scene.slots)
    if (!s.location.allFinite() || !s.size.allFinite() || !std::isfinite(s.yaw) || (s.size.array() < 0.0).any())
      throw InvalidArgument("scene contains a slot with invalid geometry");
  const Rect2 b = plan.bbox();
  const double w = b.width() + 2 * opt.margin;
  const double h = b.depth() + 2 * opt.margin;
  const double ppm = opt.pixels_per_meter;

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt_num(w * ppm) << "\" height=\"" << fmt_num(h * ppm)
     << "\" viewBox=\"" << fmt_num(b.lo.x() - opt.margin) << ' ' << fmt_num(-(b.hi.y() + opt.margin)) << ' '
     << fmt_num(w) << ' ' << fmt_num(h) << "\">\n";
  os << "<title>" << detail::xml_escape(plan.id) << "</title>\n";
  if (!opt.metadata.empty()) os << "<metadata>" << detail::xml_escape(opt.metadata) << "</metadata>\n";
  // Flip y so plan coordinates read with y up.
  os << "<g transform=\"scale(1,-1)\" stroke-width=\"0.02\">\n";

  os << "<g id=\"rooms\">\n";
  for (const auto& room : plan.rooms) {
    os << "<polygon class=\"room\" data-id=\"" << detail::xml_escape(room.id) << "\" data-type=\""
       << to_string(room.type) << "\" fill=\"#f3efe6\" stroke=\"#333333\" points=\"";
    for (std::size_t k = 0; k < room.polygon.size(); ++k)
      os << (k ? " " : "") << fmt_num(room.polygon[k].x()) << ',' << fmt_num(room.polygon[k].y());
    os << "\"/>\n";
  }
  os << "</g>\n";

  if (opt.walkable) {
    FloorGrid g = rasterize_floor(plan, opt.raster_cell);
    mark_footprints(g, scene);
    os << "<g id=\"walkable\" fill=\"#59a14f\" stroke=\"none\">\n";
    for (int iy = 0; iy < g.ny; ++iy) {
      int ix = 0;
      while (ix < g.nx) {
        const int k = g.index(ix, iy);
        const double free = 1.0 - g.coverage[k];
        if (!g.in_room[k] || free <= 0.0) {
          ++ix;
          continue;
        }
        // Merge runs of identical shading along the row.
        int end = ix + 1;
        while (end < g.nx && g.in_room[g.index(end, iy)] && 1.0 - g.coverage[g.index(end, iy)] == free) ++end;
        const Vec2 lo = g.origin + Vec2(ix * g.cell, iy * g.cell);
        os << "<rect class=\"walkable\" x=\"" << fmt_num(lo.x()) << "\" y=\"" << fmt_num(lo.y()) << "\" width=\""
           << fmt_num((end - ix) * g.cell) << "\" height=\"" << fmt_num(g.cell) << "\" fill-opacity=\""
           << fmt_num(0.35 * free) << "\"/>\n";
        ix = end;
      }
    }
    os << "</g>\n";
  }

  os << "<g id=\"objects\">\n";
  for (std::size_t i = 0; i < scene.slots.size(); ++i) {
    const ObjectSlot& s = scene.slots[i];
    if (!s.occupied()) continue;
    const int cls = s.class_id();
    const Rect2 r = footprint(s).rect;
    const std::string name = catalog && catalog->has_class(cls) ? catalog->classes()[cls] : std::to_string(cls);
    os << "<rect class=\"object\" data-slot=\"" << i << "\" data-class=\"" << detail::xml_escape(name) << "\" x=\""
       << fmt_num(r.lo.x()) << "\" y=\"" << fmt_num(r.lo.y()) << "\" width=\"" << fmt_num(r.width())
       << "\" height=\"" << fmt_num(r.depth()) << "\" fill=\"" << detail::class_color(cls)
       << "\" fill-opacity=\"0.8\" stroke=\"#222222\"/>\n";
    if (!catalog) continue;
    const auto art = retrieved_articulation(s, *catalog);
    if (!art) continue;
    const Aabb3 e = functional_extension(s, art);
    os << "<rect class=\"extension\" data-slot=\"" << i << "\" x=\"" << fmt_num(e.lo.x()) << "\" y=\""
       << fmt_num(e.lo.y()) << "\" width=\"" << fmt_num(e.hi.x() - e.lo.x()) << "\" height=\""
       << fmt_num(e.hi.y() - e.lo.y()) << "\" fill=\"none\" stroke=\"" << detail::class_color(cls)
       << "\" stroke-dasharray=\"0.08 0.05\"/>\n";
  }
  os << "</g>\n</g>\n</svg>\n";
  return os.str();
}

}  // namespace scenegen
