#include "dabd/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace dabd {

namespace {

inline double cross2(const Vec2& a, const Vec2& b) {
    return a.x() * b.y() - a.y() * b.x();
}

// d = |p - e| with x = (p, e) occupying the given index pairs of the 6-vector.
void point_point_branch(const Vec2& p, const Vec2& e, int pi, int ei,
                        bool with_hessian, PointEdgeDistance& out) {
    const Vec2 u = p - e;
    const double d = u.norm();
    out.d = d;
    if (d <= 0.0) return; // gradient undefined at coincidence
    const Vec2 g = u / d;
    out.grad.segment<2>(pi) = g;
    out.grad.segment<2>(ei) = -g;
    if (!with_hessian) return;
    const Mat2 k = (Mat2::Identity() - g * g.transpose()) / d;
    out.hess.block<2, 2>(pi, pi) = k;
    out.hess.block<2, 2>(ei, ei) = k;
    out.hess.block<2, 2>(pi, ei) = -k;
    out.hess.block<2, 2>(ei, pi) = -k;
}

} // namespace

PointEdgeDistance point_edge_distance(const Vec2& p, const Vec2& e0,
                                      const Vec2& e1, bool with_hessian) {
    PointEdgeDistance out;
    const Vec2 e = e1 - e0;
    const double len2 = e.squaredNorm();
    if (len2 <= 0.0) throw Error("point_edge_distance: degenerate edge (e0 == e1)");

    const double t = (p - e0).dot(e) / len2;
    if (t <= 0.0) {
        point_point_branch(p, e0, 0, 2, with_hessian, out);
        return out;
    }
    if (t >= 1.0) {
        point_point_branch(p, e1, 0, 4, with_hessian, out);
        return out;
    }

    // Interior: distance to the supporting line, d = |cross(e, w)| / |e|.
    const Vec2 w = p - e0;
    const double c = cross2(e, w);
    const double len = std::sqrt(len2);
    const double s = c >= 0.0 ? 1.0 : -1.0;
    out.d = s * c / len;

    // grad c: bilinear in (e, w).
    Eigen::Matrix<double, 6, 1> gc = Eigen::Matrix<double, 6, 1>::Zero();
    gc.segment<2>(0) = Vec2(-e.y(), e.x());
    gc.segment<2>(2) = Vec2(e.y() - w.y(), w.x() - e.x());
    gc.segment<2>(4) = Vec2(w.y(), -w.x());

    Eigen::Matrix<double, 6, 1> gl = Eigen::Matrix<double, 6, 1>::Zero();
    gl.segment<2>(2) = -e / len;
    gl.segment<2>(4) = e / len;

    out.grad = (s / len) * gc - (out.d / len) * gl;
    if (!with_hessian) return out;

    // hess c is the constant coupling pattern of cross(e1-e0, p-e0).
    Eigen::Matrix<double, 6, 6> hc = Eigen::Matrix<double, 6, 6>::Zero();
    auto set_pair = [&hc](int i, int j, double v) {
        hc(i, j) = v;
        hc(j, i) = v;
    };
    set_pair(0, 3, 1.0);
    set_pair(0, 5, -1.0);
    set_pair(1, 2, -1.0);
    set_pair(1, 4, 1.0);
    set_pair(2, 5, 1.0);
    set_pair(3, 4, -1.0);

    const Vec2 ehat = e / len;
    const Mat2 perp = (Mat2::Identity() - ehat * ehat.transpose()) / len;
    Eigen::Matrix<double, 6, 6> hl = Eigen::Matrix<double, 6, 6>::Zero();
    hl.block<2, 2>(2, 2) = perp;
    hl.block<2, 2>(4, 4) = perp;
    hl.block<2, 2>(2, 4) = -perp;
    hl.block<2, 2>(4, 2) = -perp;

    out.hess = (s / len) * hc -
               (s / len2) * (gc * gl.transpose() + gl * gc.transpose()) +
               (2.0 * out.d / len2) * (gl * gl.transpose()) -
               (out.d / len) * hl;
    return out;
}

namespace {

struct BodyBox {
    int body;
    Aabb box;
};

std::vector<int> resolve_subset(const std::vector<AffineBody>& bodies,
                                const std::vector<int>& subset) {
    if (!subset.empty()) return subset;
    std::vector<int> all(bodies.size());
    for (size_t i = 0; i < bodies.size(); ++i) all[i] = static_cast<int>(i);
    return all;
}

// Point/edge candidate generation for one ordered body pair, pruned by
// inflated primitive AABBs.
void collect_pairs(const std::vector<AffineBody>& bodies, const Configs& qa,
                   const Configs* qb_end, int a, int b, double margin,
                   std::vector<ContactPair>& out) {
    const AffineBody& pb = bodies[a];
    const AffineBody& eb = bodies[b];
    const int np = pb.vertex_count();
    const int ne = eb.edge_count();

    // Edge boxes once per call.
    std::vector<Aabb> eboxes(ne);
    for (int e = 0; e < ne; ++e) {
        Vec2 r0, r1;
        eb.rest_edge(e, r0, r1);
        Vec2 x0 = world_point(qa[b], r0);
        Vec2 x1 = world_point(qa[b], r1);
        Aabb box{x0.cwiseMin(x1), x0.cwiseMax(x1)};
        if (qb_end) {
            const Vec2 y0 = world_point((*qb_end)[b], r0);
            const Vec2 y1 = world_point((*qb_end)[b], r1);
            box = box.merged(Aabb{y0.cwiseMin(y1), y0.cwiseMax(y1)});
        }
        eboxes[e] = box.inflated(margin);
    }

    for (int v = 0; v < np; ++v) {
        const Vec2 rv = pb.rest_vertex(v);
        Vec2 x = world_point(qa[a], rv);
        Aabb pbox{x, x};
        if (qb_end) {
            const Vec2 y = world_point((*qb_end)[a], rv);
            pbox = pbox.merged(Aabb{y, y});
        }
        for (int e = 0; e < ne; ++e) {
            if (!pbox.overlaps(eboxes[e])) continue;
            ContactPair pair;
            pair.body_a = a;
            pair.body_b = b;
            pair.point_index = v;
            pair.edge_index = e;
            out.push_back(pair);
        }
    }
}

std::vector<ContactPair> broad_phase_impl(const std::vector<AffineBody>& bodies,
                                          const Configs& start,
                                          const Configs* end, double margin,
                                          const std::vector<int>& subset_in) {
    const std::vector<int> subset = resolve_subset(bodies, subset_in);

    std::vector<BodyBox> boxes;
    boxes.reserve(subset.size());
    for (int i : subset) {
        Aabb box = body_aabb(bodies[i], start[i]);
        if (end) box = box.merged(body_aabb(bodies[i], (*end)[i]));
        boxes.push_back({i, box.inflated(margin)});
    }

    // Sweep and prune along x.
    std::sort(boxes.begin(), boxes.end(), [](const BodyBox& l, const BodyBox& r) {
        if (l.box.lo.x() != r.box.lo.x()) return l.box.lo.x() < r.box.lo.x();
        return l.body < r.body;
    });

    std::vector<ContactPair> out;
    for (size_t i = 0; i < boxes.size(); ++i) {
        for (size_t j = i + 1; j < boxes.size(); ++j) {
            if (boxes[j].box.lo.x() > boxes[i].box.hi.x()) break;
            if (!boxes[i].box.overlaps(boxes[j].box)) continue;
            const int a = boxes[i].body;
            const int b = boxes[j].body;
            collect_pairs(bodies, start, end, a, b, margin, out);
            collect_pairs(bodies, start, end, b, a, margin, out);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

std::vector<ContactPair> broad_phase(const std::vector<AffineBody>& bodies,
                                     const Configs& configs, double d_hat,
                                     const std::vector<int>& subset) {
    return broad_phase_impl(bodies, configs, nullptr, d_hat, subset);
}

std::vector<ContactPair> broad_phase_swept(const std::vector<AffineBody>& bodies,
                                           const Configs& start,
                                           const Configs& end, double margin,
                                           const std::vector<int>& subset) {
    return broad_phase_impl(bodies, start, &end, margin, subset);
}

std::vector<ContactPair> narrow_phase(const std::vector<ContactPair>& candidates,
                                      const std::vector<AffineBody>& bodies,
                                      const Configs& configs, double d_hat) {
    std::vector<ContactPair> out;
    for (ContactPair pair : candidates) {
        const Vec2 p =
            world_point(configs[pair.body_a], bodies[pair.body_a].rest_vertex(pair.point_index));
        Vec2 r0, r1;
        bodies[pair.body_b].rest_edge(pair.edge_index, r0, r1);
        const Vec2 e0 = world_point(configs[pair.body_b], r0);
        const Vec2 e1 = world_point(configs[pair.body_b], r1);
        const double d = point_edge_distance(p, e0, e1, false).d;
        if (d < d_hat) {
            pair.d = d;
            out.push_back(pair);
        }
    }
    return out;
}

namespace {

constexpr double kCcdSafety = 0.9;
constexpr double kInsideEps = 1e-9;

// Appends real roots of c2 t^2 + c1 t + c0 in [0,1].
void quadratic_roots01(double c2, double c1, double c0, std::vector<double>& roots) {
    const double scale = std::max({std::abs(c2), std::abs(c1), std::abs(c0)});
    if (scale == 0.0) return;
    const double eps = 1e-14 * scale;

    auto push = [&roots](double t) {
        if (t >= 0.0 && t <= 1.0) roots.push_back(t);
    };

    if (std::abs(c2) <= eps) {
        if (std::abs(c1) <= eps) return; // constant, nonzero
        push(-c0 / c1);
        return;
    }
    const double disc = c1 * c1 - 4.0 * c2 * c0;
    if (disc < 0.0) return;
    const double sq = std::sqrt(disc);
    const double q = -0.5 * (c1 + std::copysign(sq, c1 == 0.0 ? 1.0 : c1));
    push(q / c2);
    if (q != 0.0) push(c0 / q);
}

// Earliest impact in [0,1] for one point-edge pair under linear motion,
// or >1 when the pair never collides.
double pair_impact_time(const Vec2& p0, const Vec2& p1, const Vec2& a0,
                        const Vec2& a1, const Vec2& b0, const Vec2& b1) {
    const Vec2 vp = p1 - p0, va = a1 - a0, vb = b1 - b0;
    const Vec2 w0 = p0 - a0, vw = vp - va;
    const Vec2 e0 = b0 - a0, ve = vb - va;

    const double c0 = cross2(e0, w0);
    const double c1 = cross2(e0, vw) + cross2(ve, w0);
    const double c2 = cross2(ve, vw);

    auto point_at = [](const Vec2& x0, const Vec2& v, double t) -> Vec2 {
        return x0 + t * v;
    };
    auto inside_at = [&](double t) {
        const Vec2 pt = point_at(p0, vp, t);
        const Vec2 at = point_at(a0, va, t);
        const Vec2 bt = point_at(b0, vb, t);
        const Vec2 et = bt - at;
        const double len2 = et.squaredNorm();
        if (len2 <= 0.0) return (pt - at).squaredNorm() <= 0.0;
        const double s = (pt - at).dot(et) / len2;
        return s >= -kInsideEps && s <= 1.0 + kInsideEps;
    };

    const double scale = std::max({std::abs(c0), std::abs(c1), std::abs(c2)});
    std::vector<double> roots;
    if (scale > 0.0 && std::abs(c2) <= 1e-14 * scale &&
        std::abs(c1) <= 1e-14 * scale && std::abs(c0) <= 1e-14 * scale) {
        // Collinear for all t: impact when the point reaches an endpoint.
        const auto dot_quad = [&](const Vec2& w, const Vec2& vwl) {
            // (w + t vwl) . (e0 + t ve) coefficients
            quadratic_roots01(vwl.dot(ve), w.dot(ve) + vwl.dot(e0), w.dot(e0), roots);
        };
        dot_quad(w0, vw);
        dot_quad(p0 - b0, vp - vb);
    } else if (scale == 0.0) {
        // Fully degenerate: everything coincident and motionless is a start
        // violation caught by the caller; otherwise no information here.
        return 2.0;
    } else {
        quadratic_roots01(c2, c1, c0, roots);
    }

    std::sort(roots.begin(), roots.end());
    for (double t : roots)
        if (inside_at(t)) return t;
    return 2.0;
}

} // namespace

double ccd_toi(const std::vector<AffineBody>& bodies, const Configs& start,
               const Configs& end, const std::vector<ContactPair>& candidates) {
    double earliest = 2.0;
    for (const ContactPair& pair : candidates) {
        const AffineBody& pb = bodies[pair.body_a];
        const AffineBody& eb = bodies[pair.body_b];
        const Vec2 rv = pb.rest_vertex(pair.point_index);
        Vec2 r0, r1;
        eb.rest_edge(pair.edge_index, r0, r1);

        const Vec2 p0 = world_point(start[pair.body_a], rv);
        const Vec2 p1 = world_point(end[pair.body_a], rv);
        const Vec2 a0 = world_point(start[pair.body_b], r0);
        const Vec2 a1 = world_point(end[pair.body_b], r0);
        const Vec2 b0 = world_point(start[pair.body_b], r1);
        const Vec2 b1 = world_point(end[pair.body_b], r1);

        if (point_edge_distance(p0, a0, b0, false).d <= 0.0)
            throw Error("ccd_toi: start configuration already touching/intersecting");

        earliest = std::min(earliest, pair_impact_time(p0, p1, a0, a1, b0, b1));
    }
    if (earliest > 1.0) return 1.0;
    return std::min(1.0, kCcdSafety * earliest);
}

double ccd_toi_scene(const std::vector<AffineBody>& bodies, const Configs& start,
                     const Configs& end, const std::vector<int>& subset) {
    const auto candidates = broad_phase_swept(bodies, start, end, 0.0, subset);
    return ccd_toi(bodies, start, end, candidates);
}

namespace {

// Strictly-inside test against one positively oriented loop of world points.
bool strictly_inside_loop(const Vec2& p, const std::vector<Vec2>& loop) {
    const int n = static_cast<int>(loop.size());
    bool inside = false;
    for (int i = 0; i < n; ++i) {
        const Vec2& a = loop[i];
        const Vec2& b = loop[(i + 1) % n];
        // On-boundary points are not strictly inside.
        const Vec2 e = b - a;
        const double len2 = e.squaredNorm();
        if (len2 > 0.0) {
            const double t = (p - a).dot(e) / len2;
            const double tc = std::clamp(t, 0.0, 1.0);
            if ((p - (a + tc * e)).squaredNorm() == 0.0) return false;
        }
        // Crossing-number ray cast (+x direction).
        if ((a.y() > p.y()) != (b.y() > p.y())) {
            const double xint = a.x() + (p.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
            if (xint > p.x()) inside = !inside;
        }
    }
    return inside;
}

bool proper_segment_intersection(const Vec2& a, const Vec2& b, const Vec2& c,
                                 const Vec2& d) {
    const auto orient = [](const Vec2& o, const Vec2& p, const Vec2& q) {
        return cross2(p - o, q - o);
    };
    const double o1 = orient(a, b, c);
    const double o2 = orient(a, b, d);
    const double o3 = orient(c, d, a);
    const double o4 = orient(c, d, b);
    return ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) &&
           ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0));
}

struct WorldBody {
    std::vector<std::vector<Vec2>> loops;
    Aabb box;
};

} // namespace

bool intersection_test(const std::vector<AffineBody>& bodies,
                       const Configs& configs, const std::vector<int>& subset_in) {
    const std::vector<int> subset = resolve_subset(bodies, subset_in);

    std::vector<WorldBody> world(subset.size());
    for (size_t i = 0; i < subset.size(); ++i) {
        const AffineBody& body = bodies[subset[i]];
        const Vec6& q = configs[subset[i]];
        world[i].loops.resize(body.rest_loops.size());
        for (size_t l = 0; l < body.rest_loops.size(); ++l) {
            world[i].loops[l].reserve(body.rest_loops[l].size());
            for (const Vec2& v : body.rest_loops[l])
                world[i].loops[l].push_back(world_point(q, v));
        }
        world[i].box = body_aabb(body, q);
    }

    auto inside_body = [](const Vec2& p, const WorldBody& wb) {
        for (const auto& loop : wb.loops)
            if (strictly_inside_loop(p, loop)) return true;
        return false;
    };
    // Loop centroids catch coincident/contained shapes whose vertices all
    // land exactly on the other boundary.
    auto loop_centroid = [](const std::vector<Vec2>& loop) {
        const int n = static_cast<int>(loop.size());
        double area = 0.0;
        Vec2 c(0.0, 0.0);
        for (int i = 0; i < n; ++i) {
            const Vec2& a = loop[i];
            const Vec2& b = loop[(i + 1) % n];
            const double cr = a.x() * b.y() - b.x() * a.y();
            area += cr / 2.0;
            c += (a + b) * (cr / 6.0);
        }
        return area != 0.0 ? Vec2(c / area) : loop[0];
    };

    for (size_t i = 0; i < world.size(); ++i) {
        for (size_t j = i + 1; j < world.size(); ++j) {
            if (!world[i].box.overlaps(world[j].box)) continue;
            for (const auto& loop : world[i].loops) {
                for (const Vec2& v : loop)
                    if (inside_body(v, world[j])) return true;
                if (inside_body(loop_centroid(loop), world[j])) return true;
            }
            for (const auto& loop : world[j].loops) {
                for (const Vec2& v : loop)
                    if (inside_body(v, world[i])) return true;
                if (inside_body(loop_centroid(loop), world[i])) return true;
            }
            for (const auto& la : world[i].loops) {
                for (const auto& lb : world[j].loops) {
                    const int na = static_cast<int>(la.size());
                    const int nb = static_cast<int>(lb.size());
                    for (int a = 0; a < na; ++a)
                        for (int b = 0; b < nb; ++b)
                            if (proper_segment_intersection(la[a], la[(a + 1) % na],
                                                            lb[b], lb[(b + 1) % nb]))
                                return true;
                }
            }
        }
    }
    return false;
}

} // namespace dabd
