#pragma once

// Divide stage: cutting edges, component labeling and assembly of 2.5D
// independent partitions bounded by lateral faces.

#include <stmesh/errors.hpp>
#include <stmesh/lateral.hpp>
#include <stmesh/model.hpp>

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace stmesh {

struct CuttingGraph {
    std::vector<Edge> cut_edges; // lower node ids, sorted pairs, ascending
};

inline CuttingGraph detect_cutting_edges(const SpacetimeLayerPair& pair) {
    const auto up = pair.upper.edges();
    CuttingGraph g;
    for (const auto& [u, v] : pair.lower.edges()) {
        const NodeId nu = pair.next.next[u], nv = pair.next.next[v];
        if (nu != nv && std::binary_search(up.begin(), up.end(), make_edge(nu, nv))) {
            g.cut_edges.push_back({u, v});
        }
    }
    return g;
}

class UnionFind {
  public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
    int find(int x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    // Smaller root wins so labels do not depend on union order.
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) {
            if (b < a) std::swap(a, b);
            parent_[b] = a;
        }
    }

  private:
    std::vector<int> parent_;
};

struct Partition25D {
    int id = 0;
    std::vector<int> lower_tris;     // indices into the lower mesh
    std::vector<int> upper_tris;     // indices into the upper mesh
    std::vector<int> faces;          // indices into Decomposition::faces
    std::vector<NodeId> lower_nodes; // global ids, ascending
    std::vector<NodeId> upper_nodes; // global ids, ascending
    std::vector<Edge> temporal_edges;

    NodeId min_node() const {
        NodeId m = lower_nodes.empty() ? upper_nodes.front() : lower_nodes.front();
        if (!upper_nodes.empty()) m = std::min(m, upper_nodes.front());
        return m;
    }
};

struct Decomposition {
    std::vector<Partition25D> partitions;
    std::vector<LateralFace> faces; // normalized
};

namespace detail {

// Directed edge -> triangle containing it.
inline std::map<Edge, int> directed_edge_map(const TriMesh2D& m) {
    std::map<Edge, int> out;
    for (int i = 0; i < static_cast<int>(m.triangles.size()); ++i) {
        const auto& t = m.triangles[i];
        for (int k = 0; k < 3; ++k) {
            out[{t[k], t[(k + 1) % 3]}] = i;
        }
    }
    return out;
}

inline int tri_left(const std::map<Edge, int>& m, NodeId a, NodeId b) {
    const auto it = m.find({a, b});
    return it == m.end() ? -1 : it->second;
}

// Boundary loops following the triangle orientation (interior on the left).
inline std::vector<std::vector<NodeId>> boundary_loops(const TriMesh2D& m, const std::map<Edge, int>& dir) {
    std::map<NodeId, NodeId> succ;
    for (const auto& [e, t] : dir) {
        if (!dir.count({e.second, e.first})) {
            if (!succ.emplace(e.first, e.second).second) {
                throw NonManifoldMesh("boundary pinches at node " + std::to_string(e.first));
            }
        }
    }
    std::vector<std::vector<NodeId>> loops;
    std::set<NodeId> done;
    for (const auto& [start, s] : succ) {
        if (done.count(start)) continue;
        std::vector<NodeId> loop;
        NodeId v = start;
        do {
            loop.push_back(v);
            done.insert(v);
            v = succ.at(v);
        } while (v != start);
        loops.push_back(std::move(loop));
    }
    (void)m;
    return loops;
}

inline void finalize_nodes(Partition25D& p, const Decomposition& d, const SpacetimeLayerPair& pair) {
    std::set<NodeId> lo, up;
    for (int t : p.lower_tris) {
        for (NodeId v : pair.lower.triangles[t]) lo.insert(v);
    }
    for (int t : p.upper_tris) {
        for (NodeId v : pair.upper.triangles[t]) up.insert(pair.upper_id(v));
    }
    for (int f : p.faces) {
        lo.insert(d.faces[f].lower.begin(), d.faces[f].lower.end());
        up.insert(d.faces[f].upper.begin(), d.faces[f].upper.end());
    }
    p.lower_nodes.assign(lo.begin(), lo.end());
    p.upper_nodes.assign(up.begin(), up.end());
    p.temporal_edges.clear();
    for (NodeId v : p.lower_nodes) {
        p.temporal_edges.push_back({v, pair.next_id(v)});
    }
}

// Lemma 1: every lower node of the partition maps into its upper part.
inline std::vector<NodeId> unmatched_nodes(const Partition25D& p, const SpacetimeLayerPair& pair) {
    std::vector<NodeId> bad;
    for (NodeId v : p.lower_nodes) {
        if (!std::binary_search(p.upper_nodes.begin(), p.upper_nodes.end(), pair.next_id(v))) {
            bad.push_back(v);
        }
    }
    return bad;
}

inline void sort_partitions(Decomposition& d) {
    std::sort(d.partitions.begin(), d.partitions.end(), [](const Partition25D& a, const Partition25D& b) {
        if (a.min_node() != b.min_node()) return a.min_node() < b.min_node();
        return std::tie(a.lower_tris, a.upper_tris) < std::tie(b.lower_tris, b.upper_tris);
    });
    for (int i = 0; i < static_cast<int>(d.partitions.size()); ++i) {
        d.partitions[i].id = i;
    }
}

} // namespace detail

/// Groups the slab into independent partitions.  Throws UnmatchedComponent
/// when a partition violates the next-node correspondence.
inline Decomposition decompose_domain(const SpacetimeLayerPair& pair, const CuttingGraph& cut) {
    const auto& L = pair.lower;
    const auto& U = pair.upper;
    const auto& nx = pair.next.next;
    const auto ldir = detail::directed_edge_map(L);
    const auto udir = detail::directed_edge_map(U);

    // Cutting edges sharing one upper image would stack two walls on one
    // upper edge; treat them as ordinary edges.
    std::map<Edge, int> image_count;
    for (const auto& [u, v] : cut.cut_edges) ++image_count[make_edge(nx[u], nx[v])];
    std::vector<Edge> cuts;
    std::set<Edge> images;
    for (const auto& [u, v] : cut.cut_edges) {
        if (image_count[make_edge(nx[u], nx[v])] == 1) {
            cuts.push_back({u, v});
            images.insert(make_edge(nx[u], nx[v]));
        }
    }
    const std::set<Edge> cutset(cuts.begin(), cuts.end());
    std::map<Edge, Edge> preimage; // directed upper edge -> directed cutting edge
    for (const auto& [u, v] : cuts) {
        preimage[{nx[u], nx[v]}] = {u, v};
        preimage[{nx[v], nx[u]}] = {v, u};
    }

    const int nL = static_cast<int>(L.triangles.size());
    const int nU = static_cast<int>(U.triangles.size());
    UnionFind luf(nL), uuf(nU);
    for (int i = 0; i < nL; ++i) {
        const auto& t = L.triangles[i];
        for (int k = 0; k < 3; ++k) {
            const NodeId a = t[k], b = t[(k + 1) % 3];
            const int o = detail::tri_left(ldir, b, a);
            if (o >= 0 && !cutset.count(make_edge(a, b))) luf.unite(i, o);
        }
    }
    for (int i = 0; i < nU; ++i) {
        const auto& t = U.triangles[i];
        for (int k = 0; k < 3; ++k) {
            const NodeId a = t[k], b = t[(k + 1) % 3];
            const int o = detail::tri_left(udir, b, a);
            if (o >= 0 && !images.count(make_edge(a, b))) uuf.unite(i, o);
        }
    }
    // Component slots: lower triangle roots, then upper triangle roots.
    UnionFind cells(nL + nU);
    auto lslot = [&](int tri) { return tri < 0 ? -1 : luf.find(tri); };
    auto uslot = [&](int tri) { return tri < 0 ? -1 : nL + uuf.find(tri); };
    auto link = [&](std::initializer_list<int> slots) {
        int first = -1;
        for (int s : slots) {
            if (s < 0) continue;
            if (first < 0) first = s; else cells.unite(first, s);
        }
        return first;
    };

    struct Wall {
        LateralFace face;
        int left = -1, right = -1; // representative slots
    };
    std::vector<Wall> walls;
    std::set<Edge> walled; // lower edges with a wall
    for (const auto& [p, q] : cuts) {
        const NodeId x = nx[p], y = nx[q];
        const int ll = lslot(detail::tri_left(ldir, p, q)), lu = uslot(detail::tri_left(udir, x, y));
        const int rl = lslot(detail::tri_left(ldir, q, p)), ru = uslot(detail::tri_left(udir, y, x));
        const int left = link({ll, lu});
        const int right = link({rl, ru});
        walled.insert({p, q});
        if (left < 0 || right < 0) {
            continue; // on the domain boundary, covered by the outer band
        }
        walls.push_back({LateralFace{{p, q}, {pair.upper_id(x), pair.upper_id(y)}}, left, right});
    }

    // Outer band between the lower and upper boundary loops.
    const auto lloops = detail::boundary_loops(L, ldir);
    const auto uloops = detail::boundary_loops(U, udir);
    std::map<NodeId, std::pair<int, int>> upos; // upper node -> (loop, index)
    for (int li = 0; li < static_cast<int>(uloops.size()); ++li) {
        for (int k = 0; k < static_cast<int>(uloops[li].size()); ++k) upos[uloops[li][k]] = {li, k};
    }
    struct Band {
        LateralFace face;
        int slot = -1;
    };
    std::vector<Band> bands;
    std::vector<int> upper_loop_hits(uloops.size(), 0);
    for (const auto& loop : lloops) {
        std::vector<int> rungs;
        for (int k = 0; k < static_cast<int>(loop.size()); ++k) {
            if (upos.count(nx[loop[k]])) rungs.push_back(k);
        }
        if (rungs.size() < 2) {
            throw UnmatchedComponent("lower boundary loop at node " + std::to_string(loop[0]) +
                                     " has fewer than two nodes mapped onto the upper boundary");
        }
        const int ul = upos[nx[loop[rungs[0]]]].first;
        const int ulen = static_cast<int>(uloops[ul].size());
        long winding = 0;
        std::vector<int> steps;
        for (std::size_t r = 0; r < rungs.size(); ++r) {
            const NodeId a = nx[loop[rungs[r]]], b = nx[loop[rungs[(r + 1) % rungs.size()]]];
            if (upos[a].first != ul || upos[b].first != ul) {
                throw UnmatchedComponent("lower boundary loop at node " + std::to_string(loop[0]) +
                                         " maps onto several upper boundary loops");
            }
            const int d = ((upos[b].second - upos[a].second) % ulen + ulen) % ulen;
            steps.push_back(d);
            winding += d;
        }
        if (winding != ulen) {
            throw UnmatchedComponent("boundary correspondence at node " + std::to_string(loop[0]) +
                                     " is not monotone (winding " + std::to_string(winding) + " of " +
                                     std::to_string(ulen) + ")");
        }
        ++upper_loop_hits[ul];
        const int n = static_cast<int>(loop.size());
        for (std::size_t r = 0; r < rungs.size(); ++r) {
            const int k0 = rungs[r];
            const int k1 = rungs[(r + 1) % rungs.size()];
            LateralFace f;
            for (int k = k0;; k = (k + 1) % n) {
                f.lower.push_back(loop[k]);
                if (k == k1 && f.lower.size() > 1) break;
            }
            const int u0 = upos[nx[loop[k0]]].second;
            for (int s = 0; s <= steps[r]; ++s) f.upper.push_back(uloops[ul][(u0 + s) % ulen]);

            std::vector<int> outside, inside;
            for (std::size_t i = 0; i + 1 < f.lower.size(); ++i) {
                const NodeId u = f.lower[i], v = f.lower[i + 1];
                if (walled.count(make_edge(u, v))) {
                    outside.push_back(uslot(detail::tri_left(udir, nx[v], nx[u])));
                    inside.push_back(uslot(detail::tri_left(udir, nx[u], nx[v])));
                }
                const int lt = lslot(detail::tri_left(ldir, u, v));
                (walled.count(make_edge(u, v)) ? inside : outside).push_back(lt);
            }
            for (std::size_t j = 0; j + 1 < f.upper.size(); ++j) {
                const NodeId x = f.upper[j], y = f.upper[j + 1];
                // Preimage cutting edge of the upper boundary edge, if walled.
                std::optional<Edge> pre;
                if (auto it = preimage.find({x, y}); it != preimage.end()) pre = it->second;
                const int ut = uslot(detail::tri_left(udir, x, y));
                if (pre) {
                    outside.push_back(lslot(detail::tri_left(ldir, pre->second, pre->first)));
                    inside.push_back(ut);
                    inside.push_back(lslot(detail::tri_left(ldir, pre->first, pre->second)));
                } else {
                    outside.push_back(ut);
                }
            }
            std::erase(outside, -1);
            std::erase(inside, -1);
            const auto& use = outside.empty() ? inside : outside;
            if (use.empty()) {
                throw UnmatchedComponent("outer band face at node " + std::to_string(f.lower[0]) +
                                         " touches no component");
            }
            for (int s : use) cells.unite(use[0], s);
            for (NodeId& v : f.upper) v = pair.upper_id(v);
            bands.push_back({std::move(f), use[0]});
        }
    }
    for (std::size_t i = 0; i < uloops.size(); ++i) {
        if (upper_loop_hits[i] != 1) {
            throw UnmatchedComponent("upper boundary loop at node " + std::to_string(pair.upper_id(uloops[i][0])) +
                                     " is matched by " + std::to_string(upper_loop_hits[i]) + " lower loops");
        }
    }

    // Assemble partitions keyed by cell root.
    Decomposition d;
    std::map<LateralFace, int> face_index;
    auto add_face = [&](const LateralFace& f) {
        const LateralFace nf = f.normalized();
        auto [it, fresh] = face_index.emplace(nf, static_cast<int>(d.faces.size()));
        if (fresh) d.faces.push_back(nf);
        return it->second;
    };
    std::map<int, Partition25D> byroot;
    for (int i = 0; i < nL; ++i) byroot[cells.find(lslot(i))].lower_tris.push_back(i);
    for (int i = 0; i < nU; ++i) byroot[cells.find(uslot(i))].upper_tris.push_back(i);
    for (const auto& w : walls) {
        const int a = cells.find(w.left), b = cells.find(w.right);
        if (a == b) continue;
        const int f = add_face(w.face);
        byroot[a].faces.push_back(f);
        byroot[b].faces.push_back(f);
    }
    for (const auto& b : bands) {
        byroot[cells.find(b.slot)].faces.push_back(add_face(b.face));
    }
    for (auto& [root, p] : byroot) {
        std::sort(p.faces.begin(), p.faces.end());
        p.faces.erase(std::unique(p.faces.begin(), p.faces.end()), p.faces.end());
        detail::finalize_nodes(p, d, pair);
        const auto bad = detail::unmatched_nodes(p, pair);
        if (!bad.empty()) {
            std::ostringstream os;
            os << "partition with lower triangles";
            for (int t : p.lower_tris) os << ' ' << t;
            os << ": next node of lower node(s)";
            for (NodeId v : bad) os << ' ' << v;
            os << " lies outside its upper component";
            throw UnmatchedComponent(os.str());
        }
        d.partitions.push_back(std::move(p));
    }
    detail::sort_partitions(d);
    return d;
}

struct PartitionSurface {
    std::vector<TriIdx> triangles; // global ids, outward oriented
    std::vector<FaceTag> tags;
};

/// Closed boundary surface of a partition.  `choice` maps face index to a
/// triangulation choice (missing = canonical).  Lower caps face down, upper
/// caps face up, and lateral triangles take their orientation from the caps.
/// Throws OpenSurface if the faces do not close up consistently.
inline PartitionSurface partition_surface(const Partition25D& p, const Decomposition& d,
                                          const SpacetimeLayerPair& pair, const std::map<int, std::size_t>& choice) {
    PartitionSurface s;
    for (int t : p.lower_tris) {
        const auto& tr = pair.lower.triangles[t];
        s.triangles.push_back({tr[0], tr[2], tr[1]});
        s.tags.push_back(FaceTag::LowerCap);
    }
    for (int t : p.upper_tris) {
        const auto& tr = pair.upper.triangles[t];
        s.triangles.push_back({pair.upper_id(tr[0]), pair.upper_id(tr[1]), pair.upper_id(tr[2])});
        s.tags.push_back(FaceTag::UpperCap);
    }
    const std::size_t ncaps = s.triangles.size();
    for (int f : p.faces) {
        const auto it = choice.find(f);
        for (const auto& t : face_triangles(d.faces[f], it == choice.end() ? 0 : it->second)) {
            s.triangles.push_back(t);
            s.tags.push_back(FaceTag::Lateral);
        }
    }
    std::map<Edge, std::vector<int>> by_edge;
    for (int i = 0; i < static_cast<int>(s.triangles.size()); ++i) {
        const auto& t = s.triangles[i];
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) throw OpenSurface("collapsed lateral triangle");
        for (int k = 0; k < 3; ++k) by_edge[make_edge(t[k], t[(k + 1) % 3])].push_back(i);
    }
    for (const auto& [e, ts] : by_edge) {
        if (ts.size() != 2) {
            throw OpenSurface("edge " + std::to_string(e.first) + "-" + std::to_string(e.second) + " used by " +
                              std::to_string(ts.size()) + " triangles");
        }
    }
    auto has = [](const TriIdx& t, NodeId a, NodeId b) {
        for (int k = 0; k < 3; ++k) if (t[k] == a && t[(k + 1) % 3] == b) return true;
        return false;
    };
    std::vector<char> oriented(s.triangles.size(), 0);
    std::vector<int> queue;
    for (std::size_t i = 0; i < ncaps; ++i) {
        oriented[i] = 1;
        queue.push_back(static_cast<int>(i));
    }
    if (queue.empty() && !s.triangles.empty()) {
        oriented[0] = 1;
        queue.push_back(0);
    }
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        const TriIdx t = s.triangles[queue[qi]];
        for (int k = 0; k < 3; ++k) {
            const NodeId a = t[k], b = t[(k + 1) % 3];
            const auto& ts = by_edge[make_edge(a, b)];
            const int o = ts[0] == queue[qi] ? ts[1] : ts[0];
            if (oriented[o]) {
                if (!has(s.triangles[o], b, a)) throw OpenSurface("inconsistent orientation");
                continue;
            }
            if (!has(s.triangles[o], b, a)) std::swap(s.triangles[o][1], s.triangles[o][2]);
            oriented[o] = 1;
            queue.push_back(o);
        }
    }
    if (queue.size() != s.triangles.size()) throw OpenSurface("surface is disconnected");
    return s;
}

// ---------------------------------------------------------------------------
// Refinement by penta-faces

/// Lower or upper nodes of a partition that lie on none of its lateral faces.
inline std::vector<NodeId> inner_nodes(const Partition25D& p, const Decomposition& d) {
    std::set<NodeId> on;
    for (int f : p.faces) {
        on.insert(d.faces[f].lower.begin(), d.faces[f].lower.end());
        on.insert(d.faces[f].upper.begin(), d.faces[f].upper.end());
    }
    std::vector<NodeId> out;
    for (NodeId v : p.lower_nodes) if (!on.count(v)) out.push_back(v);
    for (NodeId v : p.upper_nodes) if (!on.count(v)) out.push_back(v);
    return out;
}

namespace detail {

struct SplitCandidate {
    long imbalance = 0;
    std::array<NodeId, 5> cycle{};
    Partition25D a, b;
    LateralFace face;
};

// Splits triangles (global-id triples) into groups connected across edges
// other than the cut edges.
inline std::vector<int> flood_groups(const std::vector<TriIdx>& tris, const std::set<Edge>& cut) {
    std::map<Edge, std::vector<int>> by_edge;
    for (int i = 0; i < static_cast<int>(tris.size()); ++i) {
        for (int k = 0; k < 3; ++k) by_edge[make_edge(tris[i][k], tris[i][(k + 1) % 3])].push_back(i);
    }
    UnionFind uf(tris.size());
    for (const auto& [e, ts] : by_edge) {
        if (cut.count(e)) continue;
        for (std::size_t i = 1; i < ts.size(); ++i) uf.unite(ts[0], ts[i]);
    }
    std::vector<int> g(tris.size());
    for (int i = 0; i < static_cast<int>(tris.size()); ++i) g[i] = uf.find(i);
    return g;
}

} // namespace detail

/// Splits a partition along penta-faces until no piece has more than
/// max_inner inner nodes.  New faces are appended to d.faces.
inline std::vector<Partition25D> refine_by_inner_nodes(const Partition25D& p, Decomposition& d,
                                                       const SpacetimeLayerPair& pair, int max_inner = 0) {
    const auto inner = inner_nodes(p, d);
    if (static_cast<int>(inner.size()) <= max_inner) {
        return {p};
    }
    // Global-id triangles of both caps.
    std::vector<TriIdx> lt, ut;
    for (int t : p.lower_tris) lt.push_back(pair.lower.triangles[t]);
    for (int t : p.upper_tris) {
        const auto& tr = pair.upper.triangles[t];
        ut.push_back({pair.upper_id(tr[0]), pair.upper_id(tr[1]), pair.upper_id(tr[2])});
    }
    auto dir_map = [](const std::vector<TriIdx>& ts) {
        std::map<Edge, int> m;
        for (int i = 0; i < static_cast<int>(ts.size()); ++i)
            for (int k = 0; k < 3; ++k) m[{ts[i][k], ts[i][(k + 1) % 3]}] = i;
        return m;
    };
    const auto ldm = dir_map(lt), udm = dir_map(ut);
    std::set<NodeId> boundary;
    for (int f : p.faces) {
        boundary.insert(d.faces[f].lower.begin(), d.faces[f].lower.end());
        boundary.insert(d.faces[f].upper.begin(), d.faces[f].upper.end());
    }
    auto interior_edge = [](const std::map<Edge, int>& m, NodeId a, NodeId b) {
        return m.count({a, b}) && m.count({b, a});
    };
    // Upper image of a lower node, and the lower nodes mapping onto each upper node.
    std::map<NodeId, std::vector<NodeId>> pre;
    for (NodeId v : p.lower_nodes) pre[pair.next_id(v)].push_back(v);

    // Closure and correspondence of one side of a candidate split.
    auto split_closes = [&](Partition25D& q, const LateralFace& face) {
        q.faces.pop_back();
        Decomposition tmp{{}, d.faces};
        tmp.faces.push_back(face.normalized());
        q.faces.push_back(static_cast<int>(tmp.faces.size()) - 1);
        detail::finalize_nodes(q, tmp, pair);
        bool ok = detail::unmatched_nodes(q, pair).empty();
        if (ok) {
            try {
                partition_surface(q, tmp, pair, {});
            } catch (const OpenSurface&) {
                ok = false;
            }
        }
        q.faces.pop_back();
        q.faces.push_back(-1);
        return ok;
    };
    std::optional<detail::SplitCandidate> best;
    auto consider = [&](const LateralFace& face, const std::set<Edge>& lcut, const std::set<Edge>& ucut,
                        int lseed, int useed) {
        const auto lg = detail::flood_groups(lt, lcut);
        const auto ug = detail::flood_groups(ut, ucut);
        std::set<int> lgs(lg.begin(), lg.end()), ugs(ug.begin(), ug.end());
        if (lgs.size() != 2 || ugs.size() != 2) return;
        Partition25D A, B;
        for (std::size_t i = 0; i < lt.size(); ++i) (lg[i] == lg[lseed] ? A : B).lower_tris.push_back(p.lower_tris[i]);
        for (std::size_t i = 0; i < ut.size(); ++i) (ug[i] == ug[useed] ? A : B).upper_tris.push_back(p.upper_tris[i]);
        // Existing faces follow the cap triangle they border.
        std::set<NodeId> a_low, a_up;
        for (int t : A.lower_tris) for (NodeId v : pair.lower.triangles[t]) a_low.insert(v);
        for (int t : A.upper_tris) for (NodeId v : pair.upper.triangles[t]) a_up.insert(pair.upper_id(v));
        for (int f : p.faces) {
            const auto& F = d.faces[f];
            bool inA;
            if (F.m() >= 1) {
                const int t = ldm.count({F.lower[0], F.lower[1]}) ? ldm.at({F.lower[0], F.lower[1]})
                              : ldm.count({F.lower[1], F.lower[0]}) ? ldm.at({F.lower[1], F.lower[0]}) : -1;
                if (t < 0) return;
                inA = lg[t] == lg[lseed];
            } else {
                const int t = udm.count({F.upper[0], F.upper[1]}) ? udm.at({F.upper[0], F.upper[1]})
                              : udm.count({F.upper[1], F.upper[0]}) ? udm.at({F.upper[1], F.upper[0]}) : -1;
                if (t < 0) return;
                inA = ug[t] == ug[useed];
            }
            (inA ? A : B).faces.push_back(f);
        }
        for (Partition25D* q : {&A, &B}) {
            q->faces.push_back(-1); // placeholder for the new face
        }
        if (!split_closes(A, face) || !split_closes(B, face)) return;
        const long imb = std::labs(static_cast<long>(A.lower_tris.size()) - static_cast<long>(B.lower_tris.size())) +
                         std::labs(static_cast<long>(A.upper_tris.size()) - static_cast<long>(B.upper_tris.size()));
        std::array<NodeId, 5> cyc{};
        {
            std::vector<NodeId> c(face.lower.begin(), face.lower.end());
            c.insert(c.end(), face.upper.rbegin(), face.upper.rend());
            // Rotate/reflect to the lexicographically smallest reading.
            std::array<NodeId, 5> bestc{};
            bool first = true;
            for (int rev = 0; rev < 2; ++rev) {
                for (int s = 0; s < 5; ++s) {
                    std::array<NodeId, 5> r{};
                    for (int k = 0; k < 5; ++k) r[k] = rev ? c[(s - k + 5) % 5] : c[(s + k) % 5];
                    if (first || r < bestc) bestc = r;
                    first = false;
                }
            }
            cyc = bestc;
        }
        if (best && std::tie(best->imbalance, best->cycle) <= std::tie(imb, cyc)) return;
        best = detail::SplitCandidate{imb, cyc, std::move(A), std::move(B), face};
    };

    for (NodeId w : inner) {
        if (!pair.is_upper(w)) {
            // Lower path a-w-b under an upper edge next(a)-next(b).
            for (const auto& [e, t] : ldm) {
                if (e.first != w) continue;
                const NodeId a = e.second;
                for (const auto& [e2, t2] : ldm) {
                    if (e2.first != w) continue;
                    const NodeId b = e2.second;
                    if (a >= b || !boundary.count(a) || !boundary.count(b)) continue;
                    const NodeId na = pair.next_id(a), nb = pair.next_id(b);
                    if (na == nb || !interior_edge(udm, na, nb)) continue;
                    if (!interior_edge(ldm, a, w) || !interior_edge(ldm, w, b)) continue;
                    const int lseed = ldm.at({a, w});
                    // Upper triangle on the same side as a->w->b's left.
                    const int useed = udm.at({na, nb});
                    consider(LateralFace{{a, w, b}, {na, nb}}, {make_edge(a, w), make_edge(w, b)},
                             {make_edge(na, nb)}, lseed, useed);
                }
            }
        } else {
            // Upper path a'-w-b' over a lower edge n1-n4.
            for (const auto& [e, t] : udm) {
                if (e.first != w) continue;
                for (const auto& [e2, t2] : udm) {
                    if (e2.first != w) continue;
                    const NodeId ap = e.second, bp = e2.second;
                    if (ap == bp || !boundary.count(ap) || !boundary.count(bp)) continue;
                    if (!interior_edge(udm, ap, w) || !interior_edge(udm, w, bp)) continue;
                    for (NodeId n1 : pre[ap]) {
                        for (NodeId n4 : pre[bp]) {
                            if (!boundary.count(n1) || !boundary.count(n4)) continue;
                            if (!interior_edge(ldm, n1, n4)) continue;
                            consider(LateralFace{{n1, n4}, {ap, w, bp}}, {make_edge(n1, n4)},
                                     {make_edge(ap, w), make_edge(w, bp)}, ldm.at({n1, n4}), udm.at({ap, w}));
                        }
                    }
                }
            }
        }
    }
    if (!best) {
        std::ostringstream os;
        os << "no penta-face splits the partition with inner node(s)";
        for (NodeId v : inner) os << ' ' << v;
        throw NoPentaFace(os.str());
    }
    const LateralFace nf = best->face.normalized();
    auto it = std::find(d.faces.begin(), d.faces.end(), nf);
    int fid = static_cast<int>(it - d.faces.begin());
    if (it == d.faces.end()) d.faces.push_back(nf);
    std::vector<Partition25D> out;
    for (Partition25D* q : {&best->a, &best->b}) {
        q->faces.pop_back();
        q->faces.push_back(fid);
        std::sort(q->faces.begin(), q->faces.end());
        detail::finalize_nodes(*q, d, pair);
        if (!detail::unmatched_nodes(*q, pair).empty()) {
            throw NoPentaFace("penta-face split leaves a lower node unmatched");
        }
        auto sub = refine_by_inner_nodes(*q, d, pair, max_inner);
        out.insert(out.end(), sub.begin(), sub.end());
    }
    return out;
}

/// Applies refinement to every partition and renumbers.
inline void refine_all(Decomposition& d, const SpacetimeLayerPair& pair, int max_inner = 0) {
    std::vector<Partition25D> out;
    const auto parts = d.partitions;
    for (const auto& p : parts) {
        auto sub = refine_by_inner_nodes(p, d, pair, max_inner);
        out.insert(out.end(), sub.begin(), sub.end());
    }
    d.partitions = std::move(out);
    detail::sort_partitions(d);
}

} // namespace stmesh
