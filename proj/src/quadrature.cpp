#include <cmath>
#include <numbers>

#include "foldlab/errors.hpp"
#include "foldlab/geometry.hpp"

namespace foldlab::geometry {

namespace {

constexpr double kPi = std::numbers::pi;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void add_orbit3(double a, double w, std::vector<Eigen::Vector3d>& bary, std::vector<double>& weights) {
  const double b = 1.0 - 2.0 * a;
  bary.emplace_back(a, a, b);
  bary.emplace_back(a, b, a);
  bary.emplace_back(b, a, a);
  weights.insert(weights.end(), 3, w);
}

void add_orbit6(double a, double b, double w, std::vector<Eigen::Vector3d>& bary,
                std::vector<double>& weights) {
  const double c = 1.0 - a - b;
  bary.emplace_back(a, b, c);
  bary.emplace_back(a, c, b);
  bary.emplace_back(b, a, c);
  bary.emplace_back(b, c, a);
  bary.emplace_back(c, a, b);
  bary.emplace_back(c, b, a);
  weights.insert(weights.end(), 6, w);
}

void append_triangle(Quadrature& q, const Mesh& mesh, int t, const Eigen::Vector3d corner_bary[3],
                     const std::vector<Eigen::Vector3d>& rule_bary, const std::vector<double>& rule_w) {
  const auto& tri = mesh.triangles[t];
  const Eigen::Vector2d* v[3] = {&mesh.vertices[tri[0]], &mesh.vertices[tri[1]], &mesh.vertices[tri[2]]};
  auto to_xy = [&](const Eigen::Vector3d& b) { return b[0] * *v[0] + b[1] * *v[1] + b[2] * *v[2]; };
  const Eigen::Vector2d p0 = to_xy(corner_bary[0]);
  const Eigen::Vector2d p1 = to_xy(corner_bary[1]);
  const Eigen::Vector2d p2 = to_xy(corner_bary[2]);
  const double area = 0.5 * std::abs((p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x());
  for (std::size_t k = 0; k < rule_w.size(); ++k) {
    const Eigen::Vector3d b = rule_bary[k][0] * corner_bary[0] + rule_bary[k][1] * corner_bary[1] +
                              rule_bary[k][2] * corner_bary[2];
    const Eigen::Vector2d x = to_xy(b);
    q.nodes.emplace_back(x.x(), x.y(), 0.0);
    q.weights.push_back(rule_w[k] * area);
    q.parent.push_back(t);
    q.barycentric.push_back(b);
  }
}

void check_degree(int degree) {
  if (degree < 1 || degree > 6) throw RangeError("quadrature degree must lie in [1, 6]");
}

}  // namespace

double Quadrature::total() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

std::vector<double> Quadrature::interpolate(const Mesh& mesh, const Eigen::VectorXd& nodal) const {
  if (parent.size() != weights.size()) throw Error("interpolate: quadrature has no mesh data");
  if (nodal.size() != mesh.num_vertices()) throw Error("interpolate: nodal vector size mismatch");
  std::vector<double> out(weights.size());
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const auto& t = mesh.triangles[parent[k]];
    const auto& b = barycentric[k];
    out[k] = b[0] * nodal[t[0]] + b[1] * nodal[t[1]] + b[2] * nodal[t[2]];
  }
  return out;
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw RangeError("gauss_legendre: need at least one node");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Final derivative at the converged node.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = (n == 1) ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

void triangle_rule(int degree, std::vector<Eigen::Vector3d>& bary, std::vector<double>& weights) {
  check_degree(degree);
  bary.clear();
  weights.clear();
  switch (degree) {
    case 1:
      bary.emplace_back(1.0 / 3, 1.0 / 3, 1.0 / 3);
      weights.push_back(1.0);
      break;
    case 2:
      add_orbit3(1.0 / 6, 1.0 / 3, bary, weights);
      break;
    case 3:
    case 4:
      add_orbit3(0.445948490915965, 0.223381589678011, bary, weights);
      add_orbit3(0.091576213509771, 0.109951743655322, bary, weights);
      break;
    case 5:
      bary.emplace_back(1.0 / 3, 1.0 / 3, 1.0 / 3);
      weights.push_back(0.225);
      add_orbit3(0.470142064105115, 0.132394152788506, bary, weights);
      add_orbit3(0.101286507323456, 0.125939180544827, bary, weights);
      break;
    default:
      add_orbit3(0.249286745170910, 0.116786275726379, bary, weights);
      add_orbit3(0.063089014491502, 0.050844906370207, bary, weights);
      add_orbit6(0.310352451033784, 0.053145049844817, 0.082851075618374, bary, weights);
      break;
  }
  // Normalise so the weights sum to one exactly.
  double s = 0.0;
  for (double w : weights) s += w;
  for (double& w : weights) w /= s;
}

Quadrature domain_quadrature(const Mesh& mesh, int degree) {
  std::vector<Eigen::Vector3d> rb;
  std::vector<double> rw;
  triangle_rule(degree, rb, rw);
  Quadrature q;
  q.degree = degree;
  q.nodes.reserve(rw.size() * mesh.triangles.size());
  const Eigen::Vector3d corners[3] = {Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY(),
                                      Eigen::Vector3d::UnitZ()};
  for (int t = 0; t < mesh.num_triangles(); ++t) append_triangle(q, mesh, t, corners, rb, rw);
  return q;
}

Quadrature cut_domain_quadrature(const Mesh& mesh, int degree, const Point& origin,
                                 const Point& normal) {
  std::vector<Eigen::Vector3d> rb;
  std::vector<double> rw;
  triangle_rule(degree, rb, rw);
  Quadrature q;
  q.degree = degree;
  const Eigen::Vector2d o = origin.head<2>();
  const Eigen::Vector2d nrm = normal.head<2>();
  const Eigen::Vector3d unit[3] = {Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY(),
                                   Eigen::Vector3d::UnitZ()};
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    double s[3];
    for (int k = 0; k < 3; ++k) s[k] = (mesh.vertices[tri[k]] - o).dot(nrm);
    const bool pos = s[0] > 0 || s[1] > 0 || s[2] > 0;
    const bool neg = s[0] < 0 || s[1] < 0 || s[2] < 0;
    if (!(pos && neg)) {
      append_triangle(q, mesh, t, unit, rb, rw);
      continue;
    }
    // Lone vertex: the one whose sign differs from the other two (zeros
    // count with whichever side makes the split well defined).
    int lone = 0;
    for (int k = 0; k < 3; ++k) {
      const int a = (k + 1) % 3, b = (k + 2) % 3;
      if ((s[k] > 0 && s[a] <= 0 && s[b] <= 0) || (s[k] < 0 && s[a] >= 0 && s[b] >= 0)) {
        lone = k;
        break;
      }
    }
    const int a = (lone + 1) % 3, b = (lone + 2) % 3;
    const double ta = s[lone] / (s[lone] - s[a]);
    const double tb = s[lone] / (s[lone] - s[b]);
    const Eigen::Vector3d pa = (1 - ta) * unit[lone] + ta * unit[a];
    const Eigen::Vector3d pb = (1 - tb) * unit[lone] + tb * unit[b];
    const Eigen::Vector3d t0[3] = {unit[lone], pa, pb};
    const Eigen::Vector3d t1[3] = {pa, unit[a], unit[b]};
    const Eigen::Vector3d t2[3] = {pa, unit[b], pb};
    append_triangle(q, mesh, t, t0, rb, rw);
    if (ta < 1.0) append_triangle(q, mesh, t, t1, rb, rw);
    if (tb < 1.0) append_triangle(q, mesh, t, t2, rb, rw);
  }
  return q;
}

Quadrature analytic_quadrature(const DomainSpec& spec, int order) {
  if (order < 2) throw RangeError("analytic_quadrature: order must be at least 2");
  std::vector<double> x, w;
  gauss_legendre(order, x, w);
  Quadrature q;
  q.dim = spec.dim();
  q.degree = 2 * order - 1;
  const int naz = 2 * order;
  for (const auto& part : components(spec)) {
    auto push = [&](const Point& local, double weight) {
      q.nodes.push_back(part.placement.apply(local));
      q.weights.push_back(weight);
    };
    std::visit(
        overloaded{
            [&](const Disk& d) {
              for (int i = 0; i < order; ++i) {
                const double r = 0.5 * d.radius * (x[i] + 1.0);
                for (int k = 0; k < naz; ++k) {
                  const double th = 2 * kPi * (k + 0.5) / naz;
                  push(Point(r * std::cos(th), r * std::sin(th), 0),
                       0.5 * d.radius * w[i] * r * 2 * kPi / naz);
                }
              }
            },
            [&](const Ellipse& e) {
              for (int i = 0; i < order; ++i) {
                const double r = 0.5 * (x[i] + 1.0);
                for (int k = 0; k < naz; ++k) {
                  const double th = 2 * kPi * (k + 0.5) / naz;
                  push(Point(e.a * r * std::cos(th), e.b * r * std::sin(th), 0),
                       0.5 * w[i] * r * 2 * kPi / naz * e.a * e.b);
                }
              }
            },
            [&](const Rectangle& rc) {
              for (int i = 0; i < order; ++i) {
                for (int j = 0; j < order; ++j) {
                  push(Point(0.5 * rc.a * x[i], 0.5 * rc.b * x[j], 0), 0.25 * rc.a * rc.b * w[i] * w[j]);
                }
              }
            },
            [&](const Ball3& b) {
              for (int i = 0; i < order; ++i) {
                const double r = 0.5 * b.radius * (x[i] + 1.0);
                for (int j = 0; j < order; ++j) {
                  const double ct = x[j];
                  const double st = std::sqrt(1.0 - ct * ct);
                  for (int k = 0; k < naz; ++k) {
                    const double ph = 2 * kPi * (k + 0.5) / naz;
                    push(Point(r * st * std::cos(ph), r * st * std::sin(ph), r * ct),
                         0.5 * b.radius * w[i] * r * r * w[j] * 2 * kPi / naz);
                  }
                }
              }
            },
            [&](const Box3& b) {
              for (int i = 0; i < order; ++i) {
                for (int j = 0; j < order; ++j) {
                  for (int k = 0; k < order; ++k) {
                    push(Point(0.5 * b.a * x[i], 0.5 * b.b * x[j], 0.5 * b.c * x[k]),
                         0.125 * b.a * b.b * b.c * w[i] * w[j] * w[k]);
                  }
                }
              }
            },
            [&](const auto&) {
              throw ValidityError("analytic_quadrature: family " + describe(part.spec) +
                                  " needs a mesh");
            }},
        part.spec.shape);
  }
  return q;
}

}  // namespace foldlab::geometry
