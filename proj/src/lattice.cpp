#include "tfrg/lattice.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace tfrg {

TorusGeom TorusGeom::make(int d, std::int64_t N) {
    if (d < 3) throw std::invalid_argument("TorusGeom: dimension must be >= 3");
    if (N < 4) throw std::invalid_argument("TorusGeom: side length must be >= 4");
    return make_grid(d, N);
}

TorusGeom TorusGeom::make_grid(int d, std::int64_t N) {
    if (d < 1 || N < 1) throw std::invalid_argument("TorusGeom: bad grid dimensions");
    TorusGeom g;
    g.d = d;
    g.N = N;
    std::uint64_t total = 1;
    const std::uint64_t cap = std::numeric_limits<std::uint64_t>::max();
    for (int i = 0; i < d; ++i) {
        if (total > cap / static_cast<std::uint64_t>(N))
            throw std::invalid_argument("TorusGeom: N^d overflows the site-index width");
        total *= static_cast<std::uint64_t>(N);
    }
    g.total = total;
    g.strides.resize(d);
    std::uint64_t stride = 1;
    for (int i = d - 1; i >= 0; --i) {
        g.strides[i] = stride;
        stride *= static_cast<std::uint64_t>(N);
    }
    return g;
}

Site TorusGeom::site_of(const std::vector<std::int64_t>& coords) const {
    if (static_cast<int>(coords.size()) != d)
        throw std::invalid_argument("site_of: dimension mismatch");
    Site s = 0;
    for (int i = 0; i < d; ++i) {
        if (coords[i] < 0 || coords[i] >= N)
            throw std::invalid_argument("site_of: coordinate out of range");
        s += static_cast<std::uint64_t>(coords[i]) * strides[i];
    }
    return s;
}

void TorusGeom::coords_of(Site s, std::int64_t* out) const {
    for (int i = 0; i < d; ++i) {
        out[i] = static_cast<std::int64_t>(s / strides[i]);
        s %= strides[i];
    }
}

std::vector<std::int64_t> TorusGeom::coords_of(Site s) const {
    std::vector<std::int64_t> c(d);
    coords_of(s, c.data());
    return c;
}

std::int64_t TorusGeom::linf_dist(Site a, Site b) const {
    std::int64_t best = 0;
    for (int i = 0; i < d; ++i) {
        std::int64_t ca = static_cast<std::int64_t>(a / strides[i]) % N;
        std::int64_t cb = static_cast<std::int64_t>(b / strides[i]) % N;
        best = std::max(best, axis_dist(ca, cb));
    }
    return best;
}

SiteSet SiteSet::from(std::vector<Site> raw, const TorusGeom& geom) {
    std::sort(raw.begin(), raw.end());
    raw.erase(std::unique(raw.begin(), raw.end()), raw.end());
    if (!raw.empty() && raw.back() >= geom.total)
        throw std::invalid_argument("SiteSet: site index out of range");
    SiteSet s;
    s.sites = std::move(raw);
    return s;
}

bool SiteSet::contains(Site s) const {
    return std::binary_search(sites.begin(), sites.end(), s);
}

DenseBitset SiteSet::as_bitset(const TorusGeom& geom) const {
    DenseBitset b(geom.total);
    for (Site s : sites) b.set(s);
    return b;
}

Site project(const ZdPoint& p, const TorusGeom& geom) {
    if (static_cast<int>(p.size()) != geom.d)
        throw std::invalid_argument("project: dimension mismatch");
    Site s = 0;
    for (int i = 0; i < geom.d; ++i) {
        std::int64_t c = p[i] % geom.N;
        if (c < 0) c += geom.N;
        s += static_cast<std::uint64_t>(c) * geom.strides[i];
    }
    return s;
}

ZdPoint chart(Site center, Site q, const TorusGeom& geom) {
    ZdPoint p(geom.d);
    const std::int64_t radius = geom.N / 4;
    for (int i = 0; i < geom.d; ++i) {
        std::int64_t cc = static_cast<std::int64_t>(center / geom.strides[i]) % geom.N;
        std::int64_t cq = static_cast<std::int64_t>(q / geom.strides[i]) % geom.N;
        std::int64_t off = cq - cc;
        if (off > geom.N / 2) off -= geom.N;
        if (off < -geom.N / 2) off += geom.N;
        if (off > radius || off < -radius)
            throw std::invalid_argument("chart: point outside B(center, N/4)");
        p[i] = off;
    }
    return p;
}

SiteSet linf_ball(Site center, std::int64_t r, const TorusGeom& geom) {
    if (r < 0) throw std::invalid_argument("linf_ball: negative radius");
    if (2 * r + 1 > geom.N)
        throw std::invalid_argument("linf_ball: ball wraps onto itself (2r+1 > N)");
    std::vector<std::int64_t> cc = geom.coords_of(center);
    std::vector<Site> out;
    out.reserve(1);
    std::vector<std::int64_t> off(geom.d, -r);
    for (;;) {
        Site s = 0;
        for (int i = 0; i < geom.d; ++i) {
            std::int64_t c = (cc[i] + off[i]) % geom.N;
            if (c < 0) c += geom.N;
            s += static_cast<std::uint64_t>(c) * geom.strides[i];
        }
        out.push_back(s);
        int i = geom.d - 1;
        while (i >= 0 && off[i] == r) off[i--] = -r;
        if (i < 0) break;
        ++off[i];
    }
    return SiteSet::from(std::move(out), geom);
}

std::vector<ZdPoint> linf_ball_zd(const ZdPoint& center, std::int64_t r, int d) {
    if (r < 0) throw std::invalid_argument("linf_ball_zd: negative radius");
    if (static_cast<int>(center.size()) != d)
        throw std::invalid_argument("linf_ball_zd: dimension mismatch");
    std::vector<ZdPoint> out;
    std::vector<std::int64_t> off(d, -r);
    for (;;) {
        ZdPoint p(d);
        for (int i = 0; i < d; ++i) p[i] = center[i] + off[i];
        out.push_back(std::move(p));
        int i = d - 1;
        while (i >= 0 && off[i] == r) off[i--] = -r;
        if (i < 0) break;
        ++off[i];
    }
    return out;
}

std::vector<Site> neighbors(Site s, const TorusGeom& geom) {
    std::vector<Site> out(2 * geom.d);
    std::vector<std::int64_t> c = geom.coords_of(s);
    for (int dir = 0; dir < 2 * geom.d; ++dir)
        out[dir] = neighbor_site(s, dir, geom, c.data(), nullptr);
    return out;
}

}  // namespace tfrg
