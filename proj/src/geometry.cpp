#include "foldlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "foldlab/errors.hpp"
#include "foldlab/specfun.hpp"

namespace foldlab::geometry {

namespace {

constexpr double kPi = std::numbers::pi;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double polygon_signed_area(const std::vector<Eigen::Vector2d>& v) {
  double a = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& p = v[i];
    const auto& q = v[(i + 1) % v.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

// Closed-form area of the dumbbell neck outside both disks.
double dumbbell_neck_area(const Dumbbell& d) {
  const double c = d.center_offset();
  const double e = d.eps;
  const double r = d.r;
  const double cap = e * std::sqrt(r * r - e * e) + r * r * std::asin(e / r);
  return 4.0 * c * e - 2.0 * cap;
}

// Axis-aligned box of a component in its local frame.
struct Bound {
  Point lo;
  Point hi;
};

bool segments_intersect(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                        const Eigen::Vector2d& c, const Eigen::Vector2d& d) {
  auto orient = [](const Eigen::Vector2d& p, const Eigen::Vector2d& q, const Eigen::Vector2d& r) {
    return (q.x() - p.x()) * (r.y() - p.y()) - (q.y() - p.y()) * (r.x() - p.x());
  };
  const double o1 = orient(a, b, c);
  const double o2 = orient(a, b, d);
  const double o3 = orient(c, d, a);
  const double o4 = orient(c, d, b);
  return (o1 * o2 < 0) && (o3 * o4 < 0);
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ValidityError(std::string(what) + " must be positive and finite");
  }
}

double parse_real(const std::string& raw) {
  std::string s = raw;
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }),
          s.end());
  if (s.empty()) throw ConfigError("empty number in domain string");
  double factor = 1.0;
  if (s.size() >= 2 && s.compare(s.size() - 2, 2, "pi") == 0) {
    factor = kPi;
    s.resize(s.size() - 2);
    if (s.empty()) return kPi;
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("malformed number '" + raw + "' in domain string");
  }
  if (used != s.size()) throw ConfigError("malformed number '" + raw + "' in domain string");
  return v * factor;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<double> parse_reals(const std::string& s, std::size_t expected, const std::string& name) {
  std::vector<double> v;
  for (const auto& tok : split(s, ',')) v.push_back(parse_real(tok));
  if (v.size() != expected) {
    std::ostringstream os;
    os << name << " expects " << expected << " parameter(s), got " << v.size();
    throw ConfigError(os.str());
  }
  return v;
}

}  // namespace

Point Placement::apply(const Point& x) const { return apply_linear(x) + offset; }

Point Placement::apply_linear(const Point& v) const {
  if (angle == 0.0) return v;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return Point(c * v.x() - s * v.y(), s * v.x() + c * v.y(), v.z());
}

int DomainSpec::dim() const {
  return std::visit(overloaded{[](const Ball3&) { return 3; }, [](const Box3&) { return 3; },
                               [](const DisjointUnion& u) {
                                 return u.parts.empty() ? 2 : u.parts.front().spec.dim();
                               },
                               [](const auto&) { return 2; }},
                    shape);
}

DomainSpec make_union(std::vector<PlacedDomain> parts) {
  DomainSpec s;
  s.shape = DisjointUnion{std::move(parts)};
  return s;
}

std::vector<PlacedDomain> components(const DomainSpec& spec) {
  std::vector<PlacedDomain> out;
  if (const auto* u = std::get_if<DisjointUnion>(&spec.shape)) {
    for (const auto& part : u->parts) {
      for (auto sub : components(part.spec)) {
        Placement p;
        p.angle = part.placement.angle + sub.placement.angle;
        p.offset = part.placement.apply(sub.placement.offset);
        sub.placement = p;
        out.push_back(std::move(sub));
      }
    }
  } else {
    out.push_back(PlacedDomain{spec, Placement{}});
  }
  return out;
}

namespace {

Bound local_bound(const DomainSpec& spec) {
  return std::visit(
      overloaded{
          [](const Disk& d) { return Bound{Point(-d.radius, -d.radius, 0), Point(d.radius, d.radius, 0)}; },
          [](const Ellipse& e) { return Bound{Point(-e.a, -e.b, 0), Point(e.a, e.b, 0)}; },
          [](const Rectangle& r) {
            return Bound{Point(-0.5 * r.a, -0.5 * r.b, 0), Point(0.5 * r.a, 0.5 * r.b, 0)};
          },
          [](const Ball3& b) {
            return Bound{Point::Constant(-b.radius), Point::Constant(b.radius)};
          },
          [](const Box3& b) {
            const Point h(0.5 * b.a, 0.5 * b.b, 0.5 * b.c);
            return Bound{-h, h};
          },
          [](const Dumbbell& d) {
            const double x = d.center_offset() + d.r;
            return Bound{Point(-x, -d.r, 0), Point(x, d.r, 0)};
          },
          [](const Polygon& p) {
            Bound b{Point::Constant(1e300), Point::Constant(-1e300)};
            for (const auto& v : p.vertices) {
              b.lo.head<2>() = b.lo.head<2>().cwiseMin(v);
              b.hi.head<2>() = b.hi.head<2>().cwiseMax(v);
            }
            b.lo.z() = b.hi.z() = 0;
            return b;
          },
          [](const DisjointUnion&) -> Bound { throw Error("local_bound: union"); }},
      spec.shape);
}

// Sample points on the boundary of a 2D component, used for overlap tests
// between placed components.
std::vector<Point> boundary_samples(const PlacedDomain& pd, int n) {
  std::vector<Point> out;
  const auto& p = pd.placement;
  auto push = [&](double x, double y) { out.push_back(p.apply(Point(x, y, 0))); };
  std::visit(overloaded{
                 [&](const Disk& d) {
                   for (int i = 0; i < n; ++i) {
                     const double t = 2 * kPi * i / n;
                     push(d.radius * std::cos(t), d.radius * std::sin(t));
                   }
                 },
                 [&](const Ellipse& e) {
                   for (int i = 0; i < n; ++i) {
                     const double t = 2 * kPi * i / n;
                     push(e.a * std::cos(t), e.b * std::sin(t));
                   }
                 },
                 [&](const Rectangle& r) {
                   for (int i = 0; i < n; ++i) {
                     const double s = static_cast<double>(i) / n;
                     push(-0.5 * r.a + s * r.a, -0.5 * r.b);
                     push(0.5 * r.a, -0.5 * r.b + s * r.b);
                     push(0.5 * r.a - s * r.a, 0.5 * r.b);
                     push(-0.5 * r.a, 0.5 * r.b - s * r.b);
                   }
                 },
                 [&](const Dumbbell& d) {
                   const double c = d.center_offset();
                   for (int i = 0; i < n; ++i) {
                     const double t = 2 * kPi * i / n;
                     push(c + d.r * std::cos(t), d.r * std::sin(t));
                     push(-c + d.r * std::cos(t), d.r * std::sin(t));
                   }
                 },
                 [&](const Polygon& poly) {
                   const auto& v = poly.vertices;
                   for (std::size_t k = 0; k < v.size(); ++k) {
                     const auto& a = v[k];
                     const auto& b = v[(k + 1) % v.size()];
                     for (int i = 0; i < n; ++i) {
                       const Eigen::Vector2d q = a + (b - a) * (static_cast<double>(i) / n);
                       push(q.x(), q.y());
                     }
                   }
                 },
                 [&](const auto&) {}},
             pd.spec.shape);
  return out;
}

bool contains_local(const DomainSpec& spec, const Point& x) {
  return std::visit(
      overloaded{
          [&](const Disk& d) { return x.head<2>().squaredNorm() <= d.radius * d.radius; },
          [&](const Ellipse& e) {
            return std::pow(x.x() / e.a, 2) + std::pow(x.y() / e.b, 2) <= 1.0;
          },
          [&](const Rectangle& r) {
            return std::abs(x.x()) <= 0.5 * r.a && std::abs(x.y()) <= 0.5 * r.b;
          },
          [&](const Ball3& b) { return x.squaredNorm() <= b.radius * b.radius; },
          [&](const Box3& b) {
            return std::abs(x.x()) <= 0.5 * b.a && std::abs(x.y()) <= 0.5 * b.b &&
                   std::abs(x.z()) <= 0.5 * b.c;
          },
          [&](const Dumbbell& d) {
            const double c = d.center_offset();
            const Eigen::Vector2d p = x.head<2>();
            if ((p - Eigen::Vector2d(c, 0)).squaredNorm() <= d.r * d.r) return true;
            if ((p + Eigen::Vector2d(c, 0)).squaredNorm() <= d.r * d.r) return true;
            return std::abs(p.x()) <= c && std::abs(p.y()) <= d.eps;
          },
          [&](const Polygon& poly) {
            // even-odd ray casting; boundary points count as inside only
            // approximately, which is all the overlap test needs
            bool in = false;
            const auto& v = poly.vertices;
            for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
              if ((v[i].y() > x.y()) != (v[j].y() > x.y())) {
                const double xi = v[j].x() + (x.y() - v[j].y()) * (v[i].x() - v[j].x()) /
                                                 (v[i].y() - v[j].y());
                if (x.x() < xi) in = !in;
              }
            }
            return in;
          },
          [&](const DisjointUnion&) -> bool { throw Error("contains_local: union"); }},
      spec.shape);
}

bool inverse_contains(const PlacedDomain& pd, const Point& x) {
  Placement inv;
  inv.angle = -pd.placement.angle;
  const Point local = inv.apply_linear(x - pd.placement.offset);
  return contains_local(pd.spec, local);
}

void validate_leaf(const DomainSpec& spec) {
  std::visit(overloaded{
                 [](const Disk& d) { require_positive(d.radius, "disk radius"); },
                 [](const Ellipse& e) {
                   require_positive(e.a, "ellipse semi-axis a");
                   require_positive(e.b, "ellipse semi-axis b");
                 },
                 [](const Rectangle& r) {
                   require_positive(r.a, "rectangle side a");
                   require_positive(r.b, "rectangle side b");
                 },
                 [](const Ball3& b) { require_positive(b.radius, "ball radius"); },
                 [](const Box3& b) {
                   require_positive(b.a, "box side a");
                   require_positive(b.b, "box side b");
                   require_positive(b.c, "box side c");
                 },
                 [](const Dumbbell& d) {
                   require_positive(d.r, "dumbbell radius");
                   require_positive(d.eps, "dumbbell neck half-width");
                   require_positive(d.neck, "dumbbell neck length");
                   if (!(d.eps < d.r)) throw ValidityError("dumbbell neck half-width must be below r");
                 },
                 [](const Polygon& p) {
                   const auto& v = p.vertices;
                   if (v.size() < 3) throw ValidityError("polygon needs at least 3 vertices");
                   if (!(polygon_signed_area(v) > 0.0)) {
                     throw ValidityError("polygon must be counter-clockwise with positive area");
                   }
                   for (std::size_t i = 0; i < v.size(); ++i) {
                     for (std::size_t j = i + 1; j < v.size(); ++j) {
                       if (j == i + 1 || (i == 0 && j + 1 == v.size())) continue;
                       if (segments_intersect(v[i], v[(i + 1) % v.size()], v[j],
                                              v[(j + 1) % v.size()])) {
                         throw ValidityError("polygon edges self-intersect");
                       }
                     }
                   }
                 },
                 [](const DisjointUnion&) {}},
             spec.shape);
}

}  // namespace

void validate(const DomainSpec& spec) {
  const auto parts = components(spec);
  if (parts.empty()) throw ValidityError("empty disjoint union");
  const int dim = parts.front().spec.dim();
  for (const auto& p : parts) {
    validate_leaf(p.spec);
    if (p.spec.dim() != dim) throw ValidityError("disjoint union mixes 2D and 3D components");
    if (dim == 3 && p.placement.angle != 0.0) {
      throw ValidityError("3D components support translations only");
    }
    if (dim == 2 && p.placement.offset.z() != 0.0) {
      throw ValidityError("2D components cannot be offset along z");
    }
  }
  // Pairwise disjointness of closures: bounding boxes first, then boundary
  // samples of each component tested against the other.
  for (std::size_t i = 0; i < parts.size(); ++i) {
    for (std::size_t j = i + 1; j < parts.size(); ++j) {
      const Bound bi = local_bound(parts[i].spec);
      const Bound bj = local_bound(parts[j].spec);
      bool separated = false;
      if (dim == 3) {
        const Point li = bi.lo + parts[i].placement.offset, hi_i = bi.hi + parts[i].placement.offset;
        const Point lj = bj.lo + parts[j].placement.offset, hi_j = bj.hi + parts[j].placement.offset;
        for (int k = 0; k < 3; ++k) {
          if (hi_i[k] < lj[k] || hi_j[k] < li[k]) separated = true;
        }
        if (!separated) {
          const auto* a = std::get_if<Ball3>(&parts[i].spec.shape);
          const auto* b = std::get_if<Ball3>(&parts[j].spec.shape);
          if (a && b) {
            separated = (parts[i].placement.offset - parts[j].placement.offset).norm() >
                        a->radius + b->radius;
          }
        }
        if (!separated) throw ValidityError("disjoint union components overlap");
        continue;
      }
      const double ri = std::max(bi.hi.norm(), bi.lo.norm());
      const double rj = std::max(bj.hi.norm(), bj.lo.norm());
      if ((parts[i].placement.offset - parts[j].placement.offset).norm() > ri + rj) continue;
      const auto si = boundary_samples(parts[i], 720);
      const auto sj = boundary_samples(parts[j], 720);
      for (const auto& x : si) {
        if (inverse_contains(parts[j], x)) throw ValidityError("disjoint union components overlap");
      }
      for (const auto& x : sj) {
        if (inverse_contains(parts[i], x)) throw ValidityError("disjoint union components overlap");
      }
    }
  }
}

double volume(const DomainSpec& spec) {
  validate(spec);
  double total = 0.0;
  for (const auto& p : components(spec)) {
    total += std::visit(
        overloaded{[](const Disk& d) { return kPi * d.radius * d.radius; },
                   [](const Ellipse& e) { return kPi * e.a * e.b; },
                   [](const Rectangle& r) { return r.a * r.b; },
                   [](const Ball3& b) { return 4.0 / 3.0 * kPi * b.radius * b.radius * b.radius; },
                   [](const Box3& b) { return b.a * b.b * b.c; },
                   [](const Dumbbell& d) { return 2.0 * kPi * d.r * d.r + dumbbell_neck_area(d); },
                   [](const Polygon& poly) { return polygon_signed_area(poly.vertices); },
                   [](const DisjointUnion&) -> double { throw Error("volume: nested union"); }},
        p.spec.shape);
  }
  return total;
}

EquivalentRadii equivalent_radii(const DomainSpec& spec, int dim) {
  if (dim < 2 || dim > 10) throw RangeError("equivalent_radii: dimension must lie in [2, 10]");
  const double v = volume(spec);
  const double unit = specfun::unit_ball_volume(dim);
  return {std::pow(v / unit, 1.0 / dim), std::pow(v / (2.0 * unit), 1.0 / dim)};
}

std::pair<Point, Point> bounding_box(const DomainSpec& spec) {
  Point lo = Point::Constant(1e300);
  Point hi = Point::Constant(-1e300);
  for (const auto& p : components(spec)) {
    const Bound b = local_bound(p.spec);
    for (int corner = 0; corner < 8; ++corner) {
      const Point c((corner & 1) ? b.hi.x() : b.lo.x(), (corner & 2) ? b.hi.y() : b.lo.y(),
                    (corner & 4) ? b.hi.z() : b.lo.z());
      const Point w = p.placement.apply(c);
      lo = lo.cwiseMin(w);
      hi = hi.cwiseMax(w);
    }
  }
  return {lo, hi};
}

bool contains(const DomainSpec& spec, const Point& x) {
  for (const auto& p : components(spec)) {
    if (inverse_contains(p, x)) return true;
  }
  return false;
}

std::string describe(const DomainSpec& spec) {
  std::ostringstream os;
  os.precision(17);
  std::visit(overloaded{
                 [&](const Disk& d) { os << "disk:" << d.radius; },
                 [&](const Ellipse& e) { os << "ellipse:" << e.a << "," << e.b; },
                 [&](const Rectangle& r) { os << "rectangle:" << r.a << "," << r.b; },
                 [&](const Ball3& b) { os << "ball3:" << b.radius; },
                 [&](const Box3& b) { os << "box3:" << b.a << "," << b.b << "," << b.c; },
                 [&](const Dumbbell& d) { os << "dumbbell:" << d.r << "," << d.eps << "," << d.neck; },
                 [&](const Polygon& p) {
                   os << "polygon:";
                   for (std::size_t i = 0; i < p.vertices.size(); ++i) {
                     if (i) os << ";";
                     os << p.vertices[i].x() << "," << p.vertices[i].y();
                   }
                 },
                 [&](const DisjointUnion& u) {
                   os << "union:";
                   for (std::size_t i = 0; i < u.parts.size(); ++i) {
                     if (i) os << "|";
                     const auto& off = u.parts[i].placement.offset;
                     os << describe(u.parts[i].spec) << "@" << off.x() << "," << off.y();
                     if (u.parts[i].spec.dim() == 3) os << "," << off.z();
                   }
                 }},
             spec.shape);
  return os.str();
}

DomainSpec parse_domain(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("domain string '" + text + "' lacks ':'");
  const std::string kind = text.substr(0, colon);
  const std::string args = text.substr(colon + 1);
  DomainSpec spec;
  if (kind == "disk") {
    spec.shape = Disk{parse_reals(args, 1, kind)[0]};
  } else if (kind == "ellipse") {
    const auto v = parse_reals(args, 2, kind);
    spec.shape = Ellipse{v[0], v[1]};
  } else if (kind == "rectangle") {
    const auto v = parse_reals(args, 2, kind);
    spec.shape = Rectangle{v[0], v[1]};
  } else if (kind == "square") {
    const double area = parse_reals(args, 1, kind)[0];
    if (!(area > 0)) throw ConfigError("square area must be positive");
    const double s = std::sqrt(area);
    spec.shape = Rectangle{s, s};
  } else if (kind == "ball3") {
    spec.shape = Ball3{parse_reals(args, 1, kind)[0]};
  } else if (kind == "box3") {
    const auto v = parse_reals(args, 3, kind);
    spec.shape = Box3{v[0], v[1], v[2]};
  } else if (kind == "dumbbell") {
    const auto v = parse_reals(args, 3, kind);
    spec.shape = Dumbbell{v[0], v[1], v[2]};
  } else if (kind == "lshape") {
    const double s = parse_reals(args, 1, kind)[0];
    Polygon p;
    p.vertices = {{0, 0}, {2 * s, 0}, {2 * s, s}, {s, s}, {s, 2 * s}, {0, 2 * s}};
    spec.shape = p;
  } else if (kind == "polygon") {
    Polygon p;
    for (const auto& pair : split(args, ';')) {
      const auto v = parse_reals(pair, 2, "polygon vertex");
      p.vertices.emplace_back(v[0], v[1]);
    }
    spec.shape = p;
  } else if (kind == "union") {
    std::vector<PlacedDomain> parts;
    for (const auto& item : split(args, '|')) {
      const auto at = item.rfind('@');
      PlacedDomain pd;
      pd.spec = parse_domain(item.substr(0, at));
      if (at != std::string::npos) {
        const auto off = split(item.substr(at + 1), ',');
        if (off.size() < 2 || off.size() > 3) throw ConfigError("union offset must have 2 or 3 entries");
        for (std::size_t k = 0; k < off.size(); ++k) pd.placement.offset[k] = parse_real(off[k]);
      }
      parts.push_back(std::move(pd));
    }
    spec = make_union(std::move(parts));
  } else {
    throw ConfigError("unknown domain family '" + kind + "'");
  }
  try {
    validate(spec);
  } catch (const ValidityError& e) {
    throw ConfigError(std::string("invalid domain: ") + e.what());
  }
  return spec;
}

}  // namespace foldlab::geometry
