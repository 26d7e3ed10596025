#pragma once

#include "dabd/body.hpp"

#include <cstdint>
#include <vector>

namespace dabd {

// Interface plane between workers k and k+1. Worker k's region lies on the
// positive-normal side; this orientation is what makes a positive balancer
// shift shrink the slower worker's region.
struct Plane {
    Vec2 point{0.0, 0.0};
    Vec2 normal{1.0, 0.0}; // unit
};

// Overlap slab half-width rule w = max(alpha * v_max * h, w_min), alpha = 2.
double overlap_width(double v_max, double h, double w_min);

// Partition of a body set across a chain of workers separated by parallel
// interface planes. Shared membership is decided by AABB-vs-slab
// intersection so any cross-interface contact is visible to some worker.
struct PartitionLayout {
    int num_workers = 1;
    double w = 0.0;
    std::vector<Plane> planes;          // planes[k]: interface (k, k+1)
    std::vector<uint32_t> holder_mask;  // per body; static bodies: all workers

    std::vector<std::vector<int>> internal_bodies; // per worker, dynamic
    std::vector<std::vector<int>> shared_bodies;   // per worker, dynamic, sorted
    std::vector<std::vector<int>> local_bodies;    // per worker, sorted, incl. static
    std::vector<std::vector<int>> neighbors;       // per worker, sorted

    int kappa_b(int body) const;
    std::vector<int> holders_of(int body) const; // ascending worker ids
    bool is_shared(int body) const;
    // B_ij: dynamic bodies shared between workers i and j, sorted by id.
    std::vector<int> interface_bodies(int i, int j) const;
};

// Holder mask of one dynamic body given the interface planes and overlap
// width: both slab sides when its AABB intersects an interface slab, else
// the centroid's region. Throws when the AABB straddles two interfaces
// (partition too fine for the geometry). Workers and the global partitioner
// share this rule.
uint32_t body_holder_mask(const AffineBody& body, const Vec6& q,
                          const std::vector<Plane>& planes, double w);

// Builds the layout from current configurations. v_max is the maximum vertex
// speed over dynamic bodies; pass a non-negative override when a globally
// aggregated value is available (distributed mode). Throws when a dynamic
// body straddles more than one interface slab (partition too fine for the
// geometry).
PartitionLayout partition_scene(const std::vector<AffineBody>& bodies,
                                const Configs& configs,
                                const std::vector<Plane>& planes,
                                int num_workers, double h, double w_min,
                                double v_max_override = -1.0);

// kappa_c: number of workers seeing both bodies of a contact pair. Throws if
// zero (the overlap width failed to cover a cross-partition contact).
int contact_replication(const PartitionLayout& layout, int body_a, int body_b);

} // namespace dabd
