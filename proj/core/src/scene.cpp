// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "isac/scene.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "isac/text.hpp"

namespace isac
{

namespace
{

double cross2(const Point2 &o, const Point2 &a, const Point2 &b)
{
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

bool on_segment(const Point2 &p, const Point2 &a, const Point2 &b)
{
    return std::min(a[0], b[0]) <= p[0] && p[0] <= std::max(a[0], b[0]) && std::min(a[1], b[1]) <= p[1] &&
           p[1] <= std::max(a[1], b[1]);
}

bool segments_intersect(const Point2 &p1, const Point2 &p2, const Point2 &q1, const Point2 &q2)
{
    const double d1 = cross2(q1, q2, p1), d2 = cross2(q1, q2, p2);
    const double d3 = cross2(p1, p2, q1), d4 = cross2(p1, p2, q2);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
        return true;
    return (d1 == 0 && on_segment(p1, q1, q2)) || (d2 == 0 && on_segment(p2, q1, q2)) ||
           (d3 == 0 && on_segment(q1, p1, p2)) || (d4 == 0 && on_segment(q2, p1, p2));
}

bool point_in_triangle(const Point2 &p, const Point2 &a, const Point2 &b, const Point2 &c)
{
    return cross2(a, b, p) >= 0 && cross2(b, c, p) >= 0 && cross2(c, a, p) >= 0;
}

// Grid point on a wall; endpoints are taken verbatim so adjacent walls
// meet exactly.
Vec3 wall_point(const Point2 &a, const Point2 &b, int i, int nx, int k, int nz, double h)
{
    double x, y;
    if (i == 0)
        x = a[0], y = a[1];
    else if (i == nx)
        x = b[0], y = b[1];
    else
    {
        const double s = static_cast<double>(i) / nx;
        x = a[0] + (b[0] - a[0]) * s;
        y = a[1] + (b[1] - a[1]) * s;
    }
    const double z = (k == nz) ? h : h * static_cast<double>(k) / nz;
    return {x, y, z};
}

std::vector<Point2> normalize_polygon(const Footprint &f)
{
    std::vector<Point2> p = f.polygon;
    if (p.size() > 1 && p.front() == p.back())
        p.pop_back();
    if (p.size() < 3)
        throw SceneError("footprint '" + f.name + "' has fewer than 3 vertices");
    if (!polygon_is_simple(p))
        throw SceneError("footprint '" + f.name + "' is self-intersecting");
    const double a = polygon_signed_area(p);
    if (std::abs(a) <= 1e-12)
        throw SceneError("footprint '" + f.name + "' has zero area");
    if (a < 0)
        std::reverse(p.begin(), p.end());
    return p;
}

} // namespace

bool is_planar_class(const std::string &tag)
{
    return tag == "road" || tag == "ground";
}

FootprintSet parse_footprints(std::istream &in)
{
    FootprintSet fs;
    std::optional<Footprint> open;
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string &msg) { throw SceneError("footprints line " + std::to_string(lineno) + ": " + msg); };
    while (std::getline(in, line))
    {
        ++lineno;
        const auto tok = split_words(strip_comment(line));
        if (tok.empty())
            continue;
        const std::string &kw = tok[0];
        if (kw == "origin")
        {
            if (tok.size() != 4)
                fail("expected 'origin x y z'");
            fs.origin = {parse_double(tok[1]), parse_double(tok[2]), parse_double(tok[3])};
        }
        else if (kw == "poly")
        {
            if (open)
                fail("'poly' before 'end' of '" + open->name + "'");
            if (tok.size() < 2)
                fail("expected 'poly <name> class=<tag> height=<m>'");
            Footprint f;
            f.name = tok[1];
            for (std::size_t i = 2; i < tok.size(); ++i)
            {
                const auto eq = tok[i].find('=');
                if (eq == std::string::npos)
                    fail("expected key=value, got '" + tok[i] + "'");
                const std::string key = tok[i].substr(0, eq), val = tok[i].substr(eq + 1);
                if (key == "class")
                    f.tag = val;
                else if (key == "height")
                    f.height = parse_double(val);
                else
                    fail("unknown attribute '" + key + "'");
            }
            if (f.tag.empty())
                fail("footprint '" + f.name + "' has no class");
            open = std::move(f);
        }
        else if (kw == "pt")
        {
            if (!open)
                fail("'pt' outside a polygon");
            if (tok.size() != 3)
                fail("expected 'pt x y'");
            open->polygon.push_back({parse_double(tok[1]), parse_double(tok[2])});
        }
        else if (kw == "end")
        {
            if (!open)
                fail("'end' without 'poly'");
            if (!is_planar_class(open->tag) && !(open->height > 0))
                fail("footprint '" + open->name + "' needs height > 0");
            fs.items.push_back(std::move(*open));
            open.reset();
        }
        else
            fail("unknown record '" + kw + "'");
    }
    if (open)
        throw SceneError("footprints: polygon '" + open->name + "' is missing 'end'");
    return fs;
}

FootprintSet load_footprints(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw SceneError("cannot open footprint file " + path.string());
    return parse_footprints(in);
}

MaterialLibrary MaterialLibrary::defaults()
{
    MaterialLibrary lib;
    lib.add({"concrete", 5.24, 0.123});
    lib.add({"glass", 6.27, 0.034});
    lib.add({"medium_dry_ground", 15.0, 0.035});
    lib.add({"metal", 1.0, 1e7});
    lib.add({"wet_ground", 30.0, 0.15});
    return lib;
}

void MaterialLibrary::add(Material m)
{
    if (!(m.eps_r >= 1.0) || !(m.sigma >= 0.0))
        throw SceneError("material '" + m.name + "' needs eps_r >= 1 and sigma >= 0");
    materials_[m.name] = std::move(m);
}

const Material &MaterialLibrary::at(const std::string &name) const
{
    auto it = materials_.find(name);
    if (it == materials_.end())
        throw SceneError("unknown material '" + name + "'");
    return it->second;
}

std::vector<std::string> MaterialLibrary::names() const
{
    std::vector<std::string> out;
    for (const auto &[k, v] : materials_)
        out.push_back(k);
    return out;
}

MaterialRules MaterialRules::defaults()
{
    MaterialRules r;
    r.rules = {{"building", "concrete"},     {"road", "medium_dry_ground"}, {"ground", "medium_dry_ground"},
               {"window_frame", "metal"},    {"railing", "metal"},          {"vegetation", "wet_ground"},
               {"furniture", "concrete"},    {"glass", "glass"}};
    r.fallback = "concrete";
    return r;
}

std::optional<std::string> MaterialRules::lookup(const std::string &tag) const
{
    for (auto it = rules.rbegin(); it != rules.rend(); ++it)
        if (it->first == tag)
            return it->second;
    return fallback;
}

double TaggedMesh::object_area(std::uint32_t id) const
{
    double a = 0;
    for (std::size_t t = 0; t < mesh.size(); ++t)
        if (mesh.object_ids[t] == id)
            a += mesh.area(t);
    return a;
}

double polygon_signed_area(const std::vector<Point2> &poly)
{
    double a = 0;
    for (std::size_t i = 0, n = poly.size(); i < n; ++i)
    {
        const Point2 &p = poly[i], &q = poly[(i + 1) % n];
        a += p[0] * q[1] - q[0] * p[1];
    }
    return 0.5 * a;
}

bool polygon_is_simple(const std::vector<Point2> &poly)
{
    const std::size_t n = poly.size();
    if (n < 3)
        return false;
    for (std::size_t i = 0; i < n; ++i)
        if (poly[i] == poly[(i + 1) % n])
            return false;
    for (std::size_t i = 0; i < n; ++i)
    {
        const Point2 &a = poly[i], &b = poly[(i + 1) % n];
        for (std::size_t j = i + 1; j < n; ++j)
        {
            const Point2 &c = poly[j], &d = poly[(j + 1) % n];
            const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
            if (adjacent)
            {
                // Neighbours share one endpoint; they may not fold back.
                const Point2 &shared = (j == i + 1) ? b : a;
                const Point2 &p = (j == i + 1) ? a : b;
                const Point2 &q = (j == i + 1) ? d : c;
                if (cross2(shared, p, q) == 0 && ((p[0] - shared[0]) * (q[0] - shared[0]) +
                                                  (p[1] - shared[1]) * (q[1] - shared[1])) > 0)
                    return false;
                continue;
            }
            if (segments_intersect(a, b, c, d))
                return false;
        }
    }
    return true;
}

std::vector<std::array<std::uint32_t, 3>> triangulate_polygon(const std::vector<Point2> &poly)
{
    std::vector<std::uint32_t> idx;
    for (std::uint32_t i = 0; i < poly.size(); ++i)
        idx.push_back(i);
    // Drop collinear vertices first; they never form a proper ear.
    for (bool changed = true; changed && idx.size() > 3;)
    {
        changed = false;
        for (std::size_t i = 0; i < idx.size() && idx.size() > 3; ++i)
        {
            const std::size_t n = idx.size();
            if (cross2(poly[idx[(i + n - 1) % n]], poly[idx[i]], poly[idx[(i + 1) % n]]) == 0)
            {
                idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(i));
                changed = true;
            }
        }
    }

    std::vector<std::array<std::uint32_t, 3>> out;
    std::size_t guard = 0;
    while (idx.size() > 3)
    {
        const std::size_t n = idx.size();
        bool clipped = false;
        for (std::size_t i = 0; i < n; ++i)
        {
            const std::uint32_t ia = idx[(i + n - 1) % n], ib = idx[i], ic = idx[(i + 1) % n];
            const Point2 &a = poly[ia], &b = poly[ib], &c = poly[ic];
            if (cross2(a, b, c) <= 0)
                continue;
            bool blocked = false;
            for (std::uint32_t j : idx)
            {
                if (j == ia || j == ib || j == ic || poly[j] == a || poly[j] == b || poly[j] == c)
                    continue;
                if (point_in_triangle(poly[j], a, b, c))
                {
                    blocked = true;
                    break;
                }
            }
            if (blocked)
                continue;
            out.push_back({ia, ib, ic});
            idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(i));
            clipped = true;
            break;
        }
        if (!clipped || ++guard > poly.size() * poly.size())
            throw SceneError("ear clipping failed; polygon is not simple and counter-clockwise");
    }
    if (cross2(poly[idx[0]], poly[idx[1]], poly[idx[2]]) > 0)
        out.push_back({idx[0], idx[1], idx[2]});
    return out;
}

SceneAsset extrude_footprints(const FootprintSet &fp, const ExtrudeOptions &opt)
{
    SceneAsset asset;
    asset.origin = fp.origin;
    const MaterialRules rules = MaterialRules::defaults();
    TriangleMesh &m = asset.mesh;

    for (const Footprint &f : fp.items)
    {
        const std::vector<Point2> poly = normalize_polygon(f);
        const auto id = static_cast<std::uint32_t>(asset.objects.size());
        asset.objects.push_back({f.name, f.tag, *rules.lookup(f.tag)});

        const bool planar = is_planar_class(f.tag);
        const double top = planar ? 0.0 : f.height;

        // Flat cap: ground-level sheet for planar classes, roof otherwise.
        const auto base = static_cast<std::uint32_t>(m.vertices.size());
        for (const Point2 &p : poly)
            m.vertices.push_back({p[0], p[1], top});
        for (const auto &t : triangulate_polygon(poly))
        {
            m.triangles.push_back({base + t[0], base + t[1], base + t[2]});
            m.object_ids.push_back(id);
        }
        if (planar)
            continue;

        // Walls: one vertex grid per polygon edge, outward facing for CCW.
        for (std::size_t e = 0; e < poly.size(); ++e)
        {
            const Point2 &a = poly[e], &b = poly[(e + 1) % poly.size()];
            const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
            int nx = 1, nz = 1;
            if (opt.facade_cell > 0)
            {
                nx = std::max(1, static_cast<int>(std::ceil(len / opt.facade_cell - 1e-9)));
                nz = std::max(1, static_cast<int>(std::ceil(f.height / opt.facade_cell - 1e-9)));
            }
            const auto w0 = static_cast<std::uint32_t>(m.vertices.size());
            for (int k = 0; k <= nz; ++k)
                for (int i = 0; i <= nx; ++i)
                    m.vertices.push_back(wall_point(a, b, i, nx, k, nz, f.height));
            auto at = [&](int i, int k) { return w0 + static_cast<std::uint32_t>(k * (nx + 1) + i); };
            for (int k = 0; k < nz; ++k)
                for (int i = 0; i < nx; ++i)
                {
                    m.triangles.push_back({at(i, k), at(i + 1, k), at(i + 1, k + 1)});
                    m.triangles.push_back({at(i, k), at(i + 1, k + 1), at(i, k + 1)});
                    m.object_ids.push_back(id);
                    m.object_ids.push_back(id);
                }
        }
    }
    m.validate();
    return asset;
}

void assign_materials(SceneAsset &asset, const MaterialRules &rules, const MaterialLibrary &lib)
{
    for (SceneObject &o : asset.objects)
    {
        const auto mat = rules.lookup(o.tag);
        if (!mat)
            throw SceneError("no material rule for class '" + o.tag + "' and no default configured");
        lib.at(*mat);
        o.material = *mat;
    }
}

void write_simmesh(std::ostream &os, const TaggedMesh &m)
{
    os << "origin " << fmt_double(m.origin.x) << ' ' << fmt_double(m.origin.y) << ' ' << fmt_double(m.origin.z)
       << '\n';
    for (const Vec3 &v : m.mesh.vertices)
        os << "v " << fmt_double(v.x) << ' ' << fmt_double(v.y) << ' ' << fmt_double(v.z) << '\n';
    auto object_line = [&](std::uint32_t id) {
        const SceneObject &o = m.objects.at(id);
        os << "o " << o.name << " class=" << o.tag << " material=" << o.material << '\n';
    };
    for (std::uint32_t i = 0; i < m.objects.size(); ++i)
        object_line(i);
    std::optional<std::uint32_t> current;
    for (std::size_t t = 0; t < m.mesh.size(); ++t)
    {
        const std::uint32_t id = m.mesh.object_ids[t];
        if (current != id)
        {
            object_line(id);
            current = id;
        }
        const auto &tri = m.mesh.triangles[t];
        os << "f " << tri[0] + 1 << ' ' << tri[1] + 1 << ' ' << tri[2] + 1 << '\n';
    }
}

TaggedMesh read_simmesh(std::istream &is)
{
    TaggedMesh m;
    std::map<std::string, std::uint32_t> by_name;
    std::optional<std::uint32_t> current;
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string &msg) { throw SceneError("simmesh line " + std::to_string(lineno) + ": " + msg); };
    while (std::getline(is, line))
    {
        ++lineno;
        const auto tok = split_words(strip_comment(line));
        if (tok.empty())
            continue;
        try
        {
            if (tok[0] == "origin" && tok.size() == 4)
                m.origin = {parse_double(tok[1]), parse_double(tok[2]), parse_double(tok[3])};
            else if (tok[0] == "v" && tok.size() == 4)
                m.mesh.vertices.push_back({parse_double(tok[1]), parse_double(tok[2]), parse_double(tok[3])});
            else if (tok[0] == "o" && tok.size() == 4)
            {
                SceneObject o{tok[1], "", ""};
                for (std::size_t i = 2; i < 4; ++i)
                {
                    if (tok[i].rfind("class=", 0) == 0)
                        o.tag = tok[i].substr(6);
                    else if (tok[i].rfind("material=", 0) == 0)
                        o.material = tok[i].substr(9);
                    else
                        fail("expected class= and material=");
                }
                auto it = by_name.find(o.name);
                if (it == by_name.end())
                {
                    it = by_name.emplace(o.name, static_cast<std::uint32_t>(m.objects.size())).first;
                    m.objects.push_back(o);
                }
                else if (!(m.objects[it->second] == o))
                    fail("object '" + o.name + "' redeclared with different attributes");
                current = it->second;
            }
            else if (tok[0] == "f" && tok.size() == 4)
            {
                if (!current)
                    fail("face before any object");
                Triangle t;
                for (int k = 0; k < 3; ++k)
                {
                    const double v = parse_double(tok[1 + k]);
                    if (v < 1 || v != std::floor(v))
                        fail("bad vertex index '" + tok[1 + k] + "'");
                    t[k] = static_cast<std::uint32_t>(v) - 1;
                }
                m.mesh.triangles.push_back(t);
                m.mesh.object_ids.push_back(*current);
            }
            else
                fail("unrecognized record '" + line + "'");
        }
        catch (const std::invalid_argument &e)
        {
            fail(e.what());
        }
    }
    try
    {
        m.mesh.validate();
    }
    catch (const std::invalid_argument &e)
    {
        throw SceneError(std::string("simmesh: ") + e.what());
    }
    return m;
}

void save_simmesh(const std::filesystem::path &path, const TaggedMesh &m)
{
    std::ofstream out(path);
    if (!out)
        throw SceneError("cannot write " + path.string());
    write_simmesh(out, m);
    if (!out.flush())
        throw SceneError("write to " + path.string() + " failed");
}

TaggedMesh load_simmesh(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw SceneError("cannot open " + path.string());
    return read_simmesh(in);
}

void export_assets(const SceneAsset &asset, const RtMesh &rt, const std::filesystem::path &dir)
{
    std::filesystem::create_directories(dir);
    save_simmesh(dir / "scene.simmesh", asset);
    save_simmesh(dir / "rtmesh.simmesh", rt);
}

double point_mesh_distance(const Vec3 &p, const TriangleMesh &m)
{
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < m.size(); ++t)
        best = std::min(best, point_triangle_distance(p, m.vertex(t, 0), m.vertex(t, 1), m.vertex(t, 2)));
    return best;
}

AlignmentReport verify_alignment(const SceneAsset &asset, const RtMesh &rt, double tol, std::size_t samples)
{
    AlignmentReport r;
    const double shift = distance(asset.origin, rt.origin);
    if (shift > tol)
    {
        r.reason = "origin mismatch: " + fmt_double(shift) + " m";
        r.max_deviation = shift;
        return r;
    }
    std::vector<bool> used(rt.mesh.vertices.size(), false);
    for (const auto &t : rt.mesh.triangles)
        for (auto i : t)
            used[i] = true;
    std::vector<std::uint32_t> candidates;
    for (std::uint32_t i = 0; i < used.size(); ++i)
        if (used[i])
            candidates.push_back(i);
    const std::size_t n = std::min(samples, candidates.size());
    for (std::size_t s = 0; s < n; ++s)
    {
        const std::uint32_t v = candidates[s * candidates.size() / n];
        const double d = point_mesh_distance(rt.mesh.vertices[v], asset.mesh);
        r.max_deviation = std::max(r.max_deviation, d);
        ++r.landmarks;
        if (d > tol)
        {
            r.reason = "landmark vertex " + std::to_string(v) + " deviates by " + fmt_double(d) + " m";
            return r;
        }
    }
    r.ok = true;
    return r;
}

} // namespace isac
