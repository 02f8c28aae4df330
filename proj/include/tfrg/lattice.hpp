#pragma once

#include <cstdint>
#include <vector>

#include "tfrg/util.hpp"

namespace tfrg {

using Site = std::uint64_t;
using ZdPoint = std::vector<std::int64_t>;  // a point of Z^d

// Geometry of the discrete torus (Z/NZ)^d. Sites are flat indices in
// row-major coordinate order (axis 0 has the largest stride). Immutable
// after construction and safe to share across workers.
struct TorusGeom {
    int d = 0;
    std::int64_t N = 0;
    std::uint64_t total = 0;
    std::vector<std::uint64_t> strides;

    static TorusGeom make(int d, std::int64_t N);

    // Relaxed factory for auxiliary cube grids (free-boundary boxes can have
    // any side >= 1 and dimension >= 1).
    static TorusGeom make_grid(int d, std::int64_t N);

    Site site_of(const std::vector<std::int64_t>& coords) const;
    void coords_of(Site s, std::int64_t* out) const;
    std::vector<std::int64_t> coords_of(Site s) const;

    // circular distance between two coordinates along one axis
    std::int64_t axis_dist(std::int64_t a, std::int64_t b) const {
        std::int64_t diff = a - b;
        if (diff < 0) diff = -diff;
        return diff <= N - diff ? diff : N - diff;
    }

    // torus l-infinity distance
    std::int64_t linf_dist(Site a, Site b) const;
};

// A finite set of torus sites: sorted, duplicate-free flat indices.
struct SiteSet {
    std::vector<Site> sites;

    static SiteSet from(std::vector<Site> raw, const TorusGeom& geom);

    bool contains(Site s) const;
    std::size_t size() const { return sites.size(); }
    bool empty() const { return sites.empty(); }

    DenseBitset as_bitset(const TorusGeom& geom) const;
};

// Canonical projection Pi: Z^d -> torus.
Site project(const ZdPoint& p, const TorusGeom& geom);

// Local chart phi_center^{-1}: the unique p with ||p||_inf <= N/4 and
// Pi(center + p) = q. Throws if q is outside B(center, N/4).
ZdPoint chart(Site center, Site q, const TorusGeom& geom);

// Closed l-infinity ball on the torus; requires 2r+1 <= N.
SiteSet linf_ball(Site center, std::int64_t r, const TorusGeom& geom);

// Closed l-infinity ball in Z^d around a point.
std::vector<ZdPoint> linf_ball_zd(const ZdPoint& center, std::int64_t r, int d);

// The 2d nearest neighbors of a torus site.
std::vector<Site> neighbors(Site s, const TorusGeom& geom);

// Neighbor along one signed axis direction (dir in [0, 2d): axis = dir/2,
// sign = dir%2 ? -1 : +1). Hot-loop building block.
inline Site neighbor_site(Site s, int dir, const TorusGeom& geom,
                          const std::int64_t* coords, std::int64_t* scratch) {
    // caller provides coords of s; scratch unused, kept for symmetry
    (void)scratch;
    int axis = dir >> 1;
    std::int64_t c = coords[axis];
    std::uint64_t stride = geom.strides[axis];
    if ((dir & 1) == 0) {
        return c + 1 == geom.N ? s - stride * (geom.N - 1) : s + stride;
    }
    return c == 0 ? s + stride * (geom.N - 1) : s - stride;
}

}  // namespace tfrg
