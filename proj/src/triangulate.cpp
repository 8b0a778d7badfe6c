#include "crackfield/triangulate.hpp"

#include "crackfield/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <unordered_map>

namespace crackfield::detail {

namespace {

struct Tri {
  std::array<int, 3> v;    // CCW
  std::array<int, 3> adj;  // adj[i] = neighbor opposite v[i], -1 = none
  bool alive = true;
};

// Sign of the orientation determinant with a static error filter. Returns
// +1 (CCW), -1 (CW) or 0 (collinear within tolerance).
int orient_sign(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                const Eigen::Vector2d& c) {
  const double l = (b.x() - a.x()) * (c.y() - a.y());
  const double r = (b.y() - a.y()) * (c.x() - a.x());
  const double det = l - r;
  const double err = 1e-14 * (std::abs(l) + std::abs(r));
  if (det > err) return 1;
  if (det < -err) return -1;
  return 0;
}

// True when p lies strictly inside the circumcircle of CCW triangle (a,b,c).
// Ties count as outside, which keeps the insertion deterministic.
bool in_circumcircle(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                     const Eigen::Vector2d& c, const Eigen::Vector2d& p) {
  const double ax = a.x() - p.x(), ay = a.y() - p.y();
  const double bx = b.x() - p.x(), by = b.y() - p.y();
  const double cx = c.x() - p.x(), cy = c.y() - p.y();
  const double aq = ax * ax + ay * ay;
  const double bq = bx * bx + by * by;
  const double cq = cx * cx + cy * cy;
  const double t1 = ax * (by * cq - bq * cy);
  const double t2 = ay * (bx * cq - bq * cx);
  const double t3 = aq * (bx * cy - by * cx);
  const double det = t1 - t2 + t3;
  const double err = 1e-13 * (std::abs(t1) + std::abs(t2) + std::abs(t3));
  return det > err;
}

class Triangulation {
 public:
  explicit Triangulation(std::span<const Eigen::Vector2d> input) {
    // Scale into the unit box for well-conditioned predicates.
    Eigen::Vector2d lo = input[0], hi = input[0];
    for (const auto& p : input) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const double extent = std::max({hi.x() - lo.x(), hi.y() - lo.y(), 1e-300});
    pts_.reserve(input.size() + 3);
    for (const auto& p : input) pts_.push_back((p - lo) / extent);

    // Super-triangle well outside the unit box.
    const int s0 = add_point({-12.0, -10.0});
    const int s1 = add_point({13.0, -10.0});
    const int s2 = add_point({0.5, 22.0});
    n_real_ = static_cast<int>(input.size());
    tris_.push_back({{s0, s1, s2}, {-1, -1, -1}, true});
    vert2tri_.assign(pts_.size(), 0);

    for (int i = 0; i < n_real_; ++i) insert(i);
  }

  void recover_segment(int a, int b);

  std::vector<std::array<int, 3>> real_triangles() const {
    std::vector<std::array<int, 3>> out;
    for (const auto& t : tris_) {
      if (!t.alive) continue;
      if (t.v[0] >= n_real_ || t.v[1] >= n_real_ || t.v[2] >= n_real_) continue;
      out.push_back(t.v);
    }
    return out;
  }

 private:
  int add_point(const Eigen::Vector2d& p) {
    pts_.push_back(p);
    return static_cast<int>(pts_.size()) - 1;
  }

  int slot_of(const Tri& t, int vertex) const {
    for (int s = 0; s < 3; ++s)
      if (t.v[s] == vertex) return s;
    throw MeshError("triangulation adjacency corrupted");
  }

  int slot_of_neighbor(const Tri& t, int nb) const {
    for (int s = 0; s < 3; ++s)
      if (t.adj[s] == nb) return s;
    throw MeshError("triangulation adjacency corrupted");
  }

  // Walk toward p starting from a hint triangle.
  int locate(const Eigen::Vector2d& p, int hint) const {
    int cur = hint;
    for (size_t guard = 0; guard < 4 * tris_.size() + 16; ++guard) {
      const Tri& t = tris_[cur];
      int next = -1;
      for (int s = 0; s < 3; ++s) {
        const int va = t.v[(s + 1) % 3];
        const int vb = t.v[(s + 2) % 3];
        if (orient_sign(pts_[va], pts_[vb], p) < 0) {
          next = t.adj[s];
          break;
        }
      }
      if (next < 0) return cur;
      cur = next;
    }
    // Deterministic fallback; the walk should not cycle.
    for (size_t i = 0; i < tris_.size(); ++i) {
      const Tri& t = tris_[i];
      if (!t.alive) continue;
      bool inside = true;
      for (int s = 0; s < 3 && inside; ++s)
        inside = orient_sign(pts_[t.v[(s + 1) % 3]], pts_[t.v[(s + 2) % 3]], p) >= 0;
      if (inside) return static_cast<int>(i);
    }
    throw MeshError("point location failed");
  }

  void insert(int pi) {
    const Eigen::Vector2d& p = pts_[pi];
    const int start = locate(p, last_tri_);

    // Grow the cavity of triangles whose circumcircle contains p.
    std::vector<int> cavity = {start};
    std::vector<char> in_cavity(tris_.size(), 0);
    in_cavity[start] = 1;
    for (size_t k = 0; k < cavity.size(); ++k) {
      const Tri& t = tris_[cavity[k]];
      for (int s = 0; s < 3; ++s) {
        const int nb = t.adj[s];
        if (nb < 0 || in_cavity[nb]) continue;
        const Tri& n = tris_[nb];
        if (in_circumcircle(pts_[n.v[0]], pts_[n.v[1]], pts_[n.v[2]], p)) {
          in_cavity[nb] = 1;
          cavity.push_back(nb);
        }
      }
    }

    // Collect the oriented boundary of the cavity.
    struct BEdge {
      int va, vb, outside, from;
    };
    std::vector<BEdge> boundary;
    for (int ti : cavity) {
      const Tri& t = tris_[ti];
      for (int s = 0; s < 3; ++s) {
        const int nb = t.adj[s];
        if (nb >= 0 && in_cavity[nb]) continue;
        boundary.push_back({t.v[(s + 1) % 3], t.v[(s + 2) % 3], nb, ti});
      }
    }
    for (int ti : cavity) tris_[ti].alive = false;

    // Fan the boundary to p and stitch adjacency.
    std::unordered_map<std::int64_t, std::pair<int, int>> open_edges;
    const auto key = [](int a, int b) {
      return (static_cast<std::int64_t>(std::min(a, b)) << 32) | std::max(a, b);
    };
    int first_new = -1;
    for (const BEdge& e : boundary) {
      const int ni = new_triangle({e.va, e.vb, pi});
      Tri& nt = tris_[ni];
      nt.adj[2] = e.outside;
      if (e.outside >= 0)
        tris_[e.outside].adj[slot_of_neighbor(tris_[e.outside], e.from)] = ni;
      for (int s = 0; s < 2; ++s) {
        const int ea = nt.v[(s + 1) % 3];
        const int eb = nt.v[(s + 2) % 3];
        auto [it, fresh] = open_edges.try_emplace(key(ea, eb), ni, s);
        if (!fresh) {
          nt.adj[s] = it->second.first;
          tris_[it->second.first].adj[it->second.second] = ni;
        }
      }
      vert2tri_[e.va] = ni;
      vert2tri_[e.vb] = ni;
      if (first_new < 0) first_new = ni;
    }
    vert2tri_[pi] = first_new;
    last_tri_ = first_new;
  }

  int new_triangle(const std::array<int, 3>& v) {
    tris_.push_back({v, {-1, -1, -1}, true});
    return static_cast<int>(tris_.size()) - 1;
  }

  // All alive triangles incident to v (closed fan; the super-triangle keeps
  // every real vertex interior).
  std::vector<int> fan_of(int v) const {
    std::vector<int> out;
    const int start = vert2tri_[v];
    int cur = start;
    for (size_t guard = 0; guard <= tris_.size(); ++guard) {
      out.push_back(cur);
      const Tri& t = tris_[cur];
      const int s = slot_of(t, v);
      const int next = t.adj[(s + 1) % 3];
      if (next < 0) throw MeshError("open vertex fan");
      if (next == start) return out;
      cur = next;
    }
    throw MeshError("vertex fan does not close");
  }

  bool edge_exists(int a, int b) const {
    for (int ti : fan_of(a)) {
      const Tri& t = tris_[ti];
      for (int s = 0; s < 3; ++s)
        if (t.v[s] == b) return true;
    }
    return false;
  }

  // Edges properly crossed by the open segment a-b, in crossing order.
  std::vector<std::pair<int, int>> crossed_edges(int a, int b) const;

  void flip(int t1i, int s1);

  std::vector<Eigen::Vector2d> pts_;
  std::vector<Tri> tris_;
  std::vector<int> vert2tri_;
  int n_real_ = 0;
  int last_tri_ = 0;
};

std::vector<std::pair<int, int>> Triangulation::crossed_edges(int a, int b) const {
  std::vector<std::pair<int, int>> out;
  const Eigen::Vector2d& pa = pts_[a];
  const Eigen::Vector2d& pb = pts_[b];

  // Find the triangle at a whose wedge contains the direction toward b.
  int cur = -1;
  int ex = -1, ey = -1;  // edge opposite a in that triangle
  for (int ti : fan_of(a)) {
    const Tri& t = tris_[ti];
    const int s = slot_of(t, a);
    const int x = t.v[(s + 1) % 3];
    const int y = t.v[(s + 2) % 3];
    const int ox = orient_sign(pa, pts_[x], pb);
    const int oy = orient_sign(pa, pts_[y], pb);
    if (ox >= 0 && oy <= 0 && !(ox == 0 && oy == 0)) {
      cur = t.adj[s];
      ex = x;
      ey = y;
      break;
    }
  }
  if (cur < 0) throw MeshError("segment recovery failed to start");
  out.emplace_back(ex, ey);

  // Walk triangle to triangle; we entered `cur` through edge (ex, ey),
  // with ex on the left of a->b and ey on the right.
  if (orient_sign(pa, pb, pts_[ex]) < 0) std::swap(ex, ey);
  for (size_t guard = 0; guard <= tris_.size(); ++guard) {
    const Tri& t = tris_[cur];
    int w = -1;
    for (int q = 0; q < 3; ++q)
      if (t.v[q] != ex && t.v[q] != ey) {
        w = t.v[q];
        break;
      }
    if (w == b) return out;
    const int side = orient_sign(pa, pb, pts_[w]);
    if (side == 0) throw MeshError("input point lies on a constraint segment");
    if (side > 0) {
      // w on the left: exit through (w, ey); the vertex opposite that edge
      // is ex.
      out.emplace_back(w, ey);
      cur = t.adj[slot_of(t, ex)];
      ex = w;
    } else {
      out.emplace_back(ex, w);
      cur = t.adj[slot_of(t, ey)];
      ey = w;
    }
    if (cur < 0) throw MeshError("segment recovery left the triangulation");
  }
  throw MeshError("segment crossing walk did not terminate");
}

void Triangulation::flip(int t1i, int s1) {
  Tri& t1 = tris_[t1i];
  const int t2i = t1.adj[s1];
  Tri& t2 = tris_[t2i];
  const int s2 = slot_of_neighbor(t2, t1i);

  const int u = t1.v[s1];
  const int x = t1.v[(s1 + 1) % 3];
  const int y = t1.v[(s1 + 2) % 3];
  const int w = t2.v[s2];

  const int n_ux = t1.adj[(s1 + 2) % 3];  // across edge (u,x)
  const int n_yu = t1.adj[(s1 + 1) % 3];  // across edge (y,u)
  const int n_xw = t2.adj[(s2 + 1) % 3];  // across edge (x,w)
  const int n_wy = t2.adj[(s2 + 2) % 3];  // across edge (w,y)

  t1.v = {u, x, w};
  t1.adj = {n_xw, t2i, n_ux};
  t2.v = {u, w, y};
  t2.adj = {n_wy, n_yu, t1i};

  const auto relink = [&](int nb, int old_tri, int new_tri) {
    if (nb >= 0) tris_[nb].adj[slot_of_neighbor(tris_[nb], old_tri)] = new_tri;
  };
  relink(n_xw, t2i, t1i);
  relink(n_yu, t1i, t2i);
  vert2tri_[u] = t1i;
  vert2tri_[x] = t1i;
  vert2tri_[w] = t1i;
  vert2tri_[y] = t2i;
}

void Triangulation::recover_segment(int a, int b) {
  for (int rounds = 0; rounds < 256; ++rounds) {
    if (edge_exists(a, b)) return;
    const auto crossed = crossed_edges(a, b);
    if (crossed.empty()) throw MeshError("segment recovery found no crossings");
    bool flipped = false;
    for (const auto& [ea, eb] : crossed) {
      // Find the pair of triangles sharing (ea, eb).
      int t1i = -1, s1 = -1;
      for (int ti : fan_of(ea)) {
        const Tri& t = tris_[ti];
        for (int s = 0; s < 3; ++s) {
          if (t.v[(s + 1) % 3] == ea && t.v[(s + 2) % 3] == eb) {
            t1i = ti;
            s1 = s;
            break;
          }
        }
        if (t1i >= 0) break;
      }
      if (t1i < 0) continue;  // already flipped away this round
      const Tri& t1 = tris_[t1i];
      const int t2i = t1.adj[s1];
      if (t2i < 0) continue;
      // Earlier flips may have resolved this edge; re-verify the crossing.
      const bool still_crossed =
          orient_sign(pts_[a], pts_[b], pts_[ea]) *
                  orient_sign(pts_[a], pts_[b], pts_[eb]) <
              0 &&
          orient_sign(pts_[ea], pts_[eb], pts_[a]) *
                  orient_sign(pts_[ea], pts_[eb], pts_[b]) <
              0;
      if (!still_crossed) continue;
      const int u = t1.v[s1];
      const int w = tris_[t2i].v[slot_of_neighbor(tris_[t2i], t1i)];
      // Flip only when the shared quad is strictly convex.
      if (orient_sign(pts_[u], pts_[w], pts_[ea]) *
              orient_sign(pts_[u], pts_[w], pts_[eb]) <
          0) {
        flip(t1i, s1);
        flipped = true;
      }
    }
    if (!flipped) throw MeshError("segment recovery stalled");
  }
  throw MeshError("segment recovery did not converge");
}

}  // namespace

std::vector<std::array<int, 3>> triangulate_constrained(
    std::span<const Eigen::Vector2d> points,
    std::span<const std::pair<int, int>> constraints) {
  if (points.size() < 3) throw MeshError("triangulation needs at least 3 points");
  Triangulation tri(points);
  for (const auto& [a, b] : constraints) tri.recover_segment(a, b);
  return tri.real_triangles();
}

}  // namespace crackfield::detail
