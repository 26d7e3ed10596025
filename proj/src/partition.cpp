#include "dabd/partition.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace dabd {

double overlap_width(double v_max, double h, double w_min) {
    return std::max(2.0 * v_max * h, w_min);
}

int PartitionLayout::kappa_b(int body) const {
    return std::popcount(holder_mask[body]);
}

std::vector<int> PartitionLayout::holders_of(int body) const {
    std::vector<int> out;
    for (int i = 0; i < num_workers; ++i)
        if (holder_mask[body] & (1u << i)) out.push_back(i);
    return out;
}

bool PartitionLayout::is_shared(int body) const {
    return kappa_b(body) >= 2;
}

std::vector<int> PartitionLayout::interface_bodies(int i, int j) const {
    std::vector<int> out;
    const uint32_t need = (1u << i) | (1u << j);
    for (int b : shared_bodies[i])
        if ((holder_mask[b] & need) == need) out.push_back(b);
    return out;
}

uint32_t body_holder_mask(const AffineBody& body, const Vec6& q,
                          const std::vector<Plane>& planes, double w) {
    const Aabb box = body_aabb(body, q);

    int hit_plane = -1;
    for (size_t k = 0; k < planes.size(); ++k) {
        // Signed-distance range of the AABB corners to plane k.
        double lo = std::numeric_limits<double>::max();
        double hi = -lo;
        for (int corner = 0; corner < 4; ++corner) {
            const Vec2 c(corner & 1 ? box.hi.x() : box.lo.x(),
                         corner & 2 ? box.hi.y() : box.lo.y());
            const double s = (c - planes[k].point).dot(planes[k].normal);
            lo = std::min(lo, s);
            hi = std::max(hi, s);
        }
        if (lo <= w / 2.0 && hi >= -w / 2.0) {
            if (hit_plane >= 0)
                throw Error("partition: body AABB wider than a region "
                            "(straddles two interfaces)");
            hit_plane = static_cast<int>(k);
        }
    }
    if (hit_plane >= 0) return (1u << hit_plane) | (1u << (hit_plane + 1));

    // Centroid side: count planes whose positive side is behind us.
    const Vec2 c = translation_part(q);
    int region = 0;
    for (const Plane& plane : planes)
        if ((c - plane.point).dot(plane.normal) <= 0.0) ++region;
    return 1u << region;
}

PartitionLayout partition_scene(const std::vector<AffineBody>& bodies,
                                const Configs& configs,
                                const std::vector<Plane>& planes,
                                int num_workers, double h, double w_min,
                                double v_max_override) {
    if (num_workers < 1 || num_workers > 32)
        throw Error("partition_scene: worker count must be in [1, 32]");
    if (static_cast<int>(planes.size()) != num_workers - 1)
        throw Error("partition_scene: need exactly num_workers - 1 planes");

    PartitionLayout layout;
    layout.num_workers = num_workers;
    layout.planes = planes;
    for (const Plane& plane : layout.planes) {
        const double n = plane.normal.norm();
        if (std::abs(n - 1.0) > 1e-9)
            throw Error("partition_scene: plane normal must be unit length");
    }

    double v_max = v_max_override;
    if (v_max < 0.0) {
        v_max = 0.0;
        for (const AffineBody& body : bodies)
            if (!body.is_static) v_max = std::max(v_max, max_vertex_speed(body, body.q_dot));
    }
    layout.w = overlap_width(v_max, h, w_min);

    const uint32_t all_mask =
        num_workers == 32 ? 0xffffffffu : ((1u << num_workers) - 1u);
    layout.holder_mask.assign(bodies.size(), 0);
    layout.internal_bodies.resize(num_workers);
    layout.shared_bodies.resize(num_workers);
    layout.local_bodies.resize(num_workers);
    layout.neighbors.resize(num_workers);

    for (size_t bi = 0; bi < bodies.size(); ++bi) {
        const AffineBody& body = bodies[bi];
        layout.holder_mask[bi] =
            body.is_static ? all_mask
                           : body_holder_mask(body, configs[bi], planes, layout.w);
    }

    for (size_t bi = 0; bi < bodies.size(); ++bi) {
        const uint32_t mask = layout.holder_mask[bi];
        for (int i = 0; i < num_workers; ++i) {
            if (!(mask & (1u << i))) continue;
            layout.local_bodies[i].push_back(static_cast<int>(bi));
            if (bodies[bi].is_static) continue;
            if (std::popcount(mask) == 1)
                layout.internal_bodies[i].push_back(static_cast<int>(bi));
            else
                layout.shared_bodies[i].push_back(static_cast<int>(bi));
        }
    }
    for (int k = 0; k + 1 < num_workers; ++k) {
        layout.neighbors[k].push_back(k + 1);
        layout.neighbors[k + 1].push_back(k);
    }
    for (auto& n : layout.neighbors) std::sort(n.begin(), n.end());
    return layout;
}

int contact_replication(const PartitionLayout& layout, int body_a, int body_b) {
    const int kappa_c =
        std::popcount(layout.holder_mask[body_a] & layout.holder_mask[body_b]);
    if (kappa_c == 0)
        throw Error("contact_replication: no worker sees both bodies "
                    "(overlap width too small)");
    return kappa_c;
}

} // namespace dabd
