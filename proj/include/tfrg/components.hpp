#pragma once

#include <cstdint>
#include <vector>

#include "tfrg/lattice.hpp"
#include "tfrg/util.hpp"

namespace tfrg {

enum class Adjacency { NN, Star };
enum class GridMode { Torus, FreeBox };

// Connected components of the VACANT set (complement of the occupied mask).
// Labels are 1..K in order of first appearance (smallest site index of the
// component); 0 marks occupied sites.
struct ComponentStats {
    TorusGeom geom;
    GridMode mode = GridMode::Torus;
    std::vector<std::uint32_t> labels;
    std::uint64_t vacant_count = 0;
    std::vector<std::uint64_t> volumes;              // volumes[k] = volume of label k+1
    std::vector<std::vector<std::int64_t>> extents;  // circular extent per label per axis
    std::vector<std::uint32_t> order;                // labels sorted by volume desc, label asc
    bool max_wraps_all_axes = false;

    std::size_t count() const { return volumes.size(); }
    std::uint32_t id_max() const { return order.empty() ? 0 : order[0]; }
    std::uint32_t id_sec() const { return order.size() < 2 ? 0 : order[1]; }
    std::uint64_t volume(std::uint32_t label) const { return volumes[label - 1]; }
    std::vector<std::uint64_t> volumes_sorted() const;

    // l-infinity diameter surrogate: max per-axis circular extent minus 1.
    // Saturates at N-1 for components wrapping an axis.
    std::int64_t diameter(std::uint32_t label) const;
};

ComponentStats label_components(const TorusGeom& geom, const DenseBitset& occupied,
                                Adjacency adj = Adjacency::NN, GridMode mode = GridMode::Torus);

struct PlaneReport {
    Site base = 0;
    bool crossing_found = false;
    std::uint32_t crossing_component = 0;  // label in the plane's free-boundary vacant labeling
    SiteSet seeds;                         // torus sites of the plane connected to their ell-sphere
    std::int64_t longest_star_diameter = -1;  // occupied star-components in the plane; -1 if none
};

// Restricts the mask to the horizontal plane through x (axes 0 and 1 free)
// and reports seeds, the longest occupied star-path diameter, and whether a
// vacant component crosses the non-wrapping square in both directions.
PlaneReport plane_analysis(const TorusGeom& geom, const DenseBitset& occupied, Site x,
                           std::int64_t ell);

struct UniquenessReport {
    bool hypothesis1 = false;  // every B(x,2l) holds a vacant component of diameter >= l
    bool hypothesis2 = false;  // >= l components in any B(x,6l) share one global component
    bool hypotheses_hold = false;
    bool conclusion_holds = false;  // exactly one global vacant component of diameter >= l
    std::uint64_t big_components = 0;
};

// Local uniqueness criterion for the giant vacant component. Hypotheses are
// scanned over a stride-l grid of centers (every center when N <= 32), using
// the periodic lift into Z^d boxes.
UniquenessReport uniqueness_check(const TorusGeom& geom, const DenseBitset& occupied,
                                  std::int64_t ell, unsigned workers = 1);

// Average over x of 1{x vacant and connected to the sphere of radius
// floor(N^delta / 2) around x through the vacant set}.
double local_average(const TorusGeom& geom, const DenseBitset& occupied, double delta);

}  // namespace tfrg
