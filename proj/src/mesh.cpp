#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "foldlab/errors.hpp"
#include "foldlab/geometry.hpp"

namespace foldlab::geometry {

namespace {

constexpr double kPi = std::numbers::pi;
using V2 = Eigen::Vector2d;

double cross(const V2& a, const V2& b) { return a.x() * b.y() - a.y() * b.x(); }

double signed_area(const V2& a, const V2& b, const V2& c) { return 0.5 * cross(b - a, c - a); }

// Triangulates the annulus between two rings of nodes sorted by angle, both
// starting at the same reference angle. Produces counter-clockwise triangles.
void stitch_rings(const std::vector<int>& in, const std::vector<double>& in_ang,
                  const std::vector<int>& out, const std::vector<double>& out_ang,
                  std::vector<std::array<int, 3>>& tris) {
  const int m = static_cast<int>(in.size());
  const int n = static_cast<int>(out.size());
  int i = 0;
  int j = 0;
  while (i < m || j < n) {
    const double next_in = (i + 1 < m) ? in_ang[i + 1] : in_ang[0] + 2 * kPi;
    const double next_out = (j + 1 < n) ? out_ang[j + 1] : out_ang[0] + 2 * kPi;
    if (i < m && (j >= n || next_in <= next_out)) {
      tris.push_back({in[i % m], out[j % n], in[(i + 1) % m]});
      ++i;
    } else {
      tris.push_back({in[i % m], out[j], out[(j + 1) % n]});
      ++j;
    }
  }
}

struct DiskPatch {
  std::vector<int> outer;  // vertex ids of the outermost ring
  std::vector<double> outer_angles;
};

// Concentric-ring disk with `rings` rings; ring k carries 6k nodes except the
// outermost one, whose angles may be prescribed (sorted, starting at `start`).
DiskPatch ring_disk(Mesh& mesh, const V2& center, double radius, int rings, double start,
                    const std::vector<double>* outer_angles) {
  DiskPatch patch;
  const int c = mesh.num_vertices();
  mesh.vertices.push_back(center);
  std::vector<int> prev{c};
  std::vector<double> prev_ang{start};
  for (int k = 1; k <= rings; ++k) {
    std::vector<double> ang;
    if (k == rings && outer_angles) {
      ang = *outer_angles;
    } else {
      const int count = 6 * k;
      for (int q = 0; q < count; ++q) ang.push_back(start + 2 * kPi * q / count);
    }
    const double rho = (k == rings) ? radius : radius * k / rings;
    std::vector<int> ids;
    for (double a : ang) {
      ids.push_back(mesh.num_vertices());
      mesh.vertices.push_back(center + rho * V2(std::cos(a), std::sin(a)));
    }
    if (k == 1 && prev.size() == 1) {
      for (std::size_t q = 0; q < ids.size(); ++q) {
        mesh.triangles.push_back({c, ids[q], ids[(q + 1) % ids.size()]});
      }
    } else {
      stitch_rings(prev, prev_ang, ids, ang, mesh.triangles);
    }
    prev = std::move(ids);
    prev_ang = std::move(ang);
  }
  patch.outer = prev;
  patch.outer_angles = prev_ang;
  return patch;
}

int initial_rings(double radius, double h) {
  return std::max(2, static_cast<int>(std::ceil(1.3 * radius / h)));
}

Mesh disk_mesh(double radius, double target_h) {
  for (int rings = initial_rings(radius, target_h);; rings = rings + 1 + rings / 20) {
    Mesh mesh;
    ring_disk(mesh, V2::Zero(), radius, rings, 0.0, nullptr);
    finalize_mesh(mesh);
    if (mesh.h <= target_h) return mesh;
  }
}

Mesh rectangle_mesh(double a, double b, double target_h) {
  const int nx = std::max(1, static_cast<int>(std::ceil(a * std::sqrt(2.0) / target_h)));
  const int ny = std::max(1, static_cast<int>(std::ceil(b * std::sqrt(2.0) / target_h)));
  Mesh mesh;
  for (int j = 0; j <= ny; ++j) {
    const double y = (j == ny) ? 0.5 * b : -0.5 * b + b * j / ny;
    for (int i = 0; i <= nx; ++i) {
      const double x = (i == nx) ? 0.5 * a : -0.5 * a + a * i / nx;
      mesh.vertices.emplace_back(x, y);
    }
  }
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      mesh.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      mesh.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  finalize_mesh(mesh);
  return mesh;
}

Mesh dumbbell_mesh(const Dumbbell& d, double target_h) {
  if (2.0 * d.eps < target_h) {
    std::ostringstream os;
    os << "dumbbell neck width " << 2.0 * d.eps << " is below the target element size "
       << target_h << "; rerun with h <= " << 2.0 * d.eps;
    throw MeshRefinementError(os.str());
  }
  const double c = d.center_offset();
  const double r = d.r;
  const double half = std::asin(d.eps / r);
  for (int rings = initial_rings(r, target_h);; rings = rings + 1 + rings / 20) {
    const double arc = 2 * kPi * r / (6.0 * rings);  // nominal outer spacing
    const int m = std::max(2, static_cast<int>(std::ceil(2.0 * d.eps / arc)));
    std::vector<double> ys;
    for (int j = 0; j <= m; ++j) ys.push_back(j == m ? d.eps : -d.eps + 2.0 * d.eps * j / m);

    // Outer ring angles with the neck junction nodes inserted. Right disk
    // starts at angle 0 (neck around pi), left disk at pi (neck around 2 pi).
    auto outer_angles = [&](double start, double neck_center, bool right) {
      std::vector<double> ang;
      const double span = neck_center - half - start;
      const int k = std::max(2, static_cast<int>(std::ceil(span / (arc / r))));
      for (int q = 0; q < k; ++q) ang.push_back(start + span * q / k);
      std::vector<double> junction;
      for (double y : ys) junction.push_back(right ? kPi - std::asin(y / r) : 2 * kPi + std::asin(y / r));
      std::sort(junction.begin(), junction.end());
      ang.insert(ang.end(), junction.begin(), junction.end());
      const double lo = neck_center + half;
      const double span2 = start + 2 * kPi - lo;
      for (int q = 1; q < k; ++q) ang.push_back(lo + span2 * q / k);
      return ang;
    };

    Mesh mesh;
    const auto ang_r = outer_angles(0.0, kPi, true);
    const auto ang_l = outer_angles(kPi, 2 * kPi, false);
    const DiskPatch right = ring_disk(mesh, V2(c, 0), r, rings, 0.0, &ang_r);
    const DiskPatch left = ring_disk(mesh, V2(-c, 0), r, rings, kPi, &ang_l);

    // Junction node ids by row, y ascending.
    auto junction_ids = [&](const DiskPatch& p, bool right_side) {
      std::vector<int> ids(m + 1);
      for (int j = 0; j <= m; ++j) {
        const double target = right_side ? kPi - std::asin(ys[j] / r) : 2 * kPi + std::asin(ys[j] / r);
        const auto it = std::min_element(p.outer_angles.begin(), p.outer_angles.end(),
                                         [target](double a, double b) {
                                           return std::abs(a - target) < std::abs(b - target);
                                         });
        ids[j] = p.outer[it - p.outer_angles.begin()];
      }
      return ids;
    };
    const auto jr = junction_ids(right, true);
    const auto jl = junction_ids(left, false);
    // Snap junction nodes so that they sit exactly on both boundaries.
    for (int j = 0; j <= m; ++j) {
      const double x = c - std::sqrt(r * r - ys[j] * ys[j]);
      mesh.vertices[jr[j]] = V2(x, ys[j]);
      mesh.vertices[jl[j]] = V2(-x, ys[j]);
    }

    const double xmax = c - std::sqrt(r * r - d.eps * d.eps);
    const int n = std::max(1, static_cast<int>(std::ceil(2.0 * xmax / (arc * 0.95))));
    std::vector<std::vector<int>> grid(m + 1, std::vector<int>(n + 1));
    for (int j = 0; j <= m; ++j) {
      const double x = c - std::sqrt(r * r - ys[j] * ys[j]);
      grid[j][0] = jl[j];
      grid[j][n] = jr[j];
      for (int i = 1; i < n; ++i) {
        grid[j][i] = mesh.num_vertices();
        mesh.vertices.emplace_back(-x + 2.0 * x * i / n, ys[j]);
      }
    }
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < n; ++i) {
        const int p00 = grid[j][i], p10 = grid[j][i + 1], p11 = grid[j + 1][i + 1], p01 = grid[j + 1][i];
        // Alternate the diagonal across the centerline for symmetry.
        if ((i < n / 2) == (j < m / 2)) {
          mesh.triangles.push_back({p00, p10, p11});
          mesh.triangles.push_back({p00, p11, p01});
        } else {
          mesh.triangles.push_back({p00, p10, p01});
          mesh.triangles.push_back({p10, p11, p01});
        }
      }
    }
    finalize_mesh(mesh);
    if (mesh.h <= target_h) return mesh;
  }
}

bool point_in_triangle(const V2& p, const V2& a, const V2& b, const V2& c) {
  return cross(b - a, p - a) >= 0 && cross(c - b, p - b) >= 0 && cross(a - c, p - c) >= 0;
}

std::vector<std::array<int, 3>> ear_clip(const std::vector<V2>& v) {
  std::vector<int> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::array<int, 3>> tris;
  while (idx.size() > 3) {
    const int k = static_cast<int>(idx.size());
    // Pick the ear with the largest minimum angle for better quality.
    int best = -1;
    double best_quality = -1.0;
    for (int q = 0; q < k; ++q) {
      const int ia = idx[(q + k - 1) % k], ib = idx[q], ic = idx[(q + 1) % k];
      if (signed_area(v[ia], v[ib], v[ic]) <= 0) continue;
      bool empty = true;
      for (int w : idx) {
        if (w == ia || w == ib || w == ic) continue;
        if (point_in_triangle(v[w], v[ia], v[ib], v[ic])) {
          empty = false;
          break;
        }
      }
      if (!empty) continue;
      auto angle = [](const V2& p, const V2& q1, const V2& q2) {
        return std::acos(std::clamp((q1 - p).normalized().dot((q2 - p).normalized()), -1.0, 1.0));
      };
      const double quality = std::min({angle(v[ia], v[ib], v[ic]), angle(v[ib], v[ic], v[ia]),
                                        angle(v[ic], v[ia], v[ib])});
      if (quality > best_quality + 1e-12) {
        best_quality = quality;
        best = q;
      }
    }
    if (best < 0) throw ValidityError("ear clipping failed: polygon is not simple");
    tris.push_back({idx[(best + k - 1) % k], idx[best], idx[(best + 1) % k]});
    idx.erase(idx.begin() + best);
  }
  tris.push_back({idx[0], idx[1], idx[2]});
  return tris;
}

void refine_uniform(Mesh& mesh) {
  std::map<std::pair<int, int>, int> mid;
  auto midpoint = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    const auto it = mid.find(key);
    if (it != mid.end()) return it->second;
    const int id = mesh.num_vertices();
    mesh.vertices.push_back(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
    mid.emplace(key, id);
    return id;
  };
  std::vector<std::array<int, 3>> next;
  next.reserve(4 * mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    const int ab = midpoint(t[0], t[1]), bc = midpoint(t[1], t[2]), ca = midpoint(t[2], t[0]);
    next.push_back({t[0], ab, ca});
    next.push_back({ab, t[1], bc});
    next.push_back({ca, bc, t[2]});
    next.push_back({ab, bc, ca});
  }
  mesh.triangles = std::move(next);
  finalize_mesh(mesh);
}

Mesh polygon_mesh(const Polygon& p, double target_h) {
  Mesh mesh;
  mesh.vertices = p.vertices;
  mesh.triangles = ear_clip(p.vertices);
  finalize_mesh(mesh);
  while (mesh.h > target_h) refine_uniform(mesh);
  return mesh;
}

Mesh leaf_mesh(const DomainSpec& spec, double h) {
  if (const auto* d = std::get_if<Disk>(&spec.shape)) return disk_mesh(d->radius, h);
  if (const auto* e = std::get_if<Ellipse>(&spec.shape)) {
    const double s = std::max(e->a, e->b);
    Mesh m = disk_mesh(1.0, h / s);
    for (auto& v : m.vertices) v = V2(e->a * v.x(), e->b * v.y());
    finalize_mesh(m);
    return m;
  }
  if (const auto* r = std::get_if<Rectangle>(&spec.shape)) return rectangle_mesh(r->a, r->b, h);
  if (const auto* d = std::get_if<Dumbbell>(&spec.shape)) return dumbbell_mesh(*d, h);
  if (const auto* p = std::get_if<Polygon>(&spec.shape)) return polygon_mesh(*p, h);
  throw ValidityError("generate_mesh: 3D families are never meshed");
}

}  // namespace

double Mesh::triangle_area(int t) const {
  const auto& tri = triangles[t];
  return signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
}

double Mesh::area() const {
  double a = 0.0;
  for (int t = 0; t < num_triangles(); ++t) a += triangle_area(t);
  return a;
}

double Mesh::min_angle_degrees() const {
  double worst = 180.0;
  for (const auto& t : triangles) {
    for (int k = 0; k < 3; ++k) {
      const V2 u = vertices[t[(k + 1) % 3]] - vertices[t[k]];
      const V2 w = vertices[t[(k + 2) % 3]] - vertices[t[k]];
      const double c = std::clamp(u.dot(w) / (u.norm() * w.norm()), -1.0, 1.0);
      worst = std::min(worst, std::acos(c) * 180.0 / kPi);
    }
  }
  return worst;
}

std::uint64_t Mesh::checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto feed = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& v : vertices) {
    const double xy[2] = {v.x(), v.y()};
    feed(xy, sizeof xy);
  }
  for (const auto& t : triangles) {
    const std::int32_t ijk[3] = {t[0], t[1], t[2]};
    feed(ijk, sizeof ijk);
  }
  return h;
}

std::vector<int> Mesh::vertex_components(int* count) const {
  std::vector<int> parent(vertices.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&parent](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& t : triangles) {
    for (int k = 1; k < 3; ++k) {
      const int a = find(t[0]), b = find(t[k]);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }
  std::vector<int> label(vertices.size(), -1);
  std::vector<int> root_label(vertices.size(), -1);
  int next = 0;
  for (std::size_t v = 0; v < vertices.size(); ++v) {
    const int r = find(static_cast<int>(v));
    if (root_label[r] < 0) root_label[r] = next++;
    label[v] = root_label[r];
  }
  if (count) *count = next;
  return label;
}

void finalize_mesh(Mesh& mesh) {
  double h = 0.0;
  std::map<std::pair<int, int>, int> edge_use;
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      h = std::max(h, (mesh.vertices[a] - mesh.vertices[b]).norm());
      edge_use[std::minmax(a, b)] += 1;
    }
  }
  mesh.h = h;
  mesh.boundary_edges.clear();
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      if (edge_use[std::minmax(a, b)] == 1) mesh.boundary_edges.push_back({a, b});
    }
  }
  std::sort(mesh.boundary_edges.begin(), mesh.boundary_edges.end());
}

void check_mesh(const Mesh& mesh) {
  const int nv = mesh.num_vertices();
  std::map<std::pair<int, int>, int> edge_use;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      if (tri[k] < 0 || tri[k] >= nv) {
        throw ValidityError("triangle " + std::to_string(t) + " has an out-of-range vertex index");
      }
    }
    if (!(mesh.triangle_area(t) > 0.0)) {
      throw ValidityError("triangle " + std::to_string(t) + " has non-positive area");
    }
    for (int k = 0; k < 3; ++k) {
      const int use = ++edge_use[std::minmax(tri[k], tri[(k + 1) % 3])];
      if (use > 2) throw ValidityError("edge shared by more than two triangles");
    }
  }
  std::vector<int> out_deg(nv, 0), in_deg(nv, 0);
  for (const auto& e : mesh.boundary_edges) {
    if (e[0] < 0 || e[0] >= nv || e[1] < 0 || e[1] >= nv) {
      throw ValidityError("boundary edge has an out-of-range vertex index");
    }
    ++out_deg[e[0]];
    ++in_deg[e[1]];
  }
  for (int v = 0; v < nv; ++v) {
    if (out_deg[v] != in_deg[v]) throw ValidityError("boundary edges do not form closed loops");
  }
}

Mesh generate_mesh(const DomainSpec& spec, double target_h) {
  validate(spec);
  if (spec.dim() != 2) throw ValidityError("generate_mesh: 3D families are never meshed");
  if (!(target_h > 0.0) || !std::isfinite(target_h)) {
    throw ConfigError("generate_mesh: target h must be positive");
  }
  const auto [lo, hi] = bounding_box(spec);
  if (target_h >= (hi - lo).head<2>().minCoeff()) {
    throw ConfigError("generate_mesh: target h exceeds the domain size");
  }
  Mesh out;
  for (const auto& part : components(spec)) {
    Mesh m = leaf_mesh(part.spec, target_h);
    const int base = out.num_vertices();
    for (const auto& v : m.vertices) {
      out.vertices.push_back(part.placement.apply(Point(v.x(), v.y(), 0.0)).head<2>());
    }
    for (auto t : m.triangles) out.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
  }
  finalize_mesh(out);
  check_mesh(out);
  return out;
}

}  // namespace foldlab::geometry
