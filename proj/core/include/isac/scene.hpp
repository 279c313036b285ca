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

#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "isac/geometry.hpp"

namespace isac
{

class SceneError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

using Point2 = std::array<double, 2>;

struct Footprint
{
    std::string name;
    std::string tag;   // building, road, ground, window_frame, ...
    double height = 0; // meters; ignored for planar classes
    std::vector<Point2> polygon;
};

// Footprint file grammar, one record per line, `#` starts a comment:
//
//   origin <x> <y> <z>
//   poly <name> class=<tag> height=<m>
//   pt <x> <y>
//   ...
//   end
struct FootprintSet
{
    Vec3 origin; // local metric anchor shared by every derived asset
    std::vector<Footprint> items;
};

FootprintSet parse_footprints(std::istream &in);
FootprintSet load_footprints(const std::filesystem::path &path);

// Classes meshed flat at z = 0 instead of extruded.
bool is_planar_class(const std::string &tag);

struct Material
{
    std::string name;
    double eps_r = 1.0;
    double sigma = 0.0; // S/m
};

class MaterialLibrary
{
  public:
    static MaterialLibrary defaults();

    void add(Material m);
    const Material &at(const std::string &name) const;
    bool contains(const std::string &name) const { return materials_.count(name) > 0; }
    std::vector<std::string> names() const;

  private:
    std::map<std::string, Material> materials_;
};

// Class -> material rules. Later rules for the same class replace earlier
// ones; `fallback` covers classes with no rule.
struct MaterialRules
{
    std::vector<std::pair<std::string, std::string>> rules;
    std::optional<std::string> fallback;

    static MaterialRules defaults();
    std::optional<std::string> lookup(const std::string &tag) const;
};

struct SceneObject
{
    std::string name;
    std::string tag;
    std::string material;
    bool operator==(const SceneObject &) const = default;
};

// Tagged mesh with an embedded origin. Triangle object ids index
// `objects`. Used for both the full scene asset and its simplified
// propagation twin.
struct TaggedMesh
{
    Vec3 origin;
    TriangleMesh mesh;
    std::vector<SceneObject> objects;

    const SceneObject &object_of(std::size_t tri) const { return objects.at(mesh.object_ids.at(tri)); }
    const std::string &material_of(std::size_t tri) const { return object_of(tri).material; }
    double object_area(std::uint32_t id) const;
};
using SceneAsset = TaggedMesh;
using RtMesh = TaggedMesh;

double polygon_signed_area(const std::vector<Point2> &poly);
bool polygon_is_simple(const std::vector<Point2> &poly);
// Ear clipping; `poly` must be simple and counter-clockwise. Returns index
// triples into `poly`.
std::vector<std::array<std::uint32_t, 3>> triangulate_polygon(const std::vector<Point2> &poly);

struct ExtrudeOptions
{
    // When > 0, walls are tessellated into a grid of roughly this cell size.
    double facade_cell = 0.0;
};

// Buildings (and any non-planar class) become side walls plus a flat roof;
// planar classes become a flat mesh at z = 0. Materials come from the
// default rules. Throws SceneError for a self-intersecting polygon.
SceneAsset extrude_footprints(const FootprintSet &fp, const ExtrudeOptions &opt = {});

// Throws SceneError if a class has no rule, no fallback exists, or the
// material is not in `lib`.
void assign_materials(SceneAsset &asset, const MaterialRules &rules, const MaterialLibrary &lib);

struct SimplifyConfig
{
    double size_threshold = 1.0; // m², objects with smaller total area are removed
    double ratio = 0.05;         // target = floor(ratio * remaining triangles)
    double sharp_angle_deg = 40.0;
    std::vector<std::string> detail_classes{"window_frame", "railing", "vegetation", "furniture"};
};

struct SimplifyStats
{
    std::size_t input_triangles = 0;
    std::size_t after_filter = 0;
    std::size_t target = 0;
    std::size_t output_triangles = 0;
    std::size_t removed_objects = 0;
};

// Tag/size filter, then quadric edge collapse. Vertices are only ever
// collapsed onto an existing vertex, so every output vertex is an input
// vertex. Throws SceneError for a ratio outside (0, 1].
RtMesh simplify_mesh(const SceneAsset &asset, const SimplifyConfig &cfg, SimplifyStats *stats = nullptr);

// SimMesh text format:
//
//   origin <x> <y> <z>
//   v <x> <y> <z>                            (every vertex, in order)
//   o <name> class=<tag> material=<mat>      (every object, in id order)
//   f <i> <j> <k>                            (1-based, in triangle order)
//
// Before faces, `o` re-selects the current object whenever it changes.
// Numbers use the shortest round-trip decimal form.
void write_simmesh(std::ostream &os, const TaggedMesh &m);
TaggedMesh read_simmesh(std::istream &is);
void save_simmesh(const std::filesystem::path &path, const TaggedMesh &m);
TaggedMesh load_simmesh(const std::filesystem::path &path);

// Writes <dir>/scene.simmesh and <dir>/rtmesh.simmesh.
void export_assets(const SceneAsset &asset, const RtMesh &rt, const std::filesystem::path &dir);

struct AlignmentReport
{
    bool ok = false;
    std::string reason;
    double max_deviation = 0.0; // m, over the sampled landmarks
    std::size_t landmarks = 0;
};

// Origins must be equal and up to `samples` RtMesh vertices (evenly
// strided) must lie within `tol` of the asset surface.
AlignmentReport verify_alignment(const SceneAsset &asset, const RtMesh &rt, double tol = 1e-6,
                                 std::size_t samples = 128);

// Distance from p to the nearest triangle of m (brute force).
double point_mesh_distance(const Vec3 &p, const TriangleMesh &m);

} // namespace isac
